"""Laplace transforms of the stationary law and of the boundary measures.

For orthogonal reflection the boundary transform is known in closed form
through the gluing function ``w``::

    phi1(t2) = -mu1 w'(0) t2 / (w(t2) - w(0))

``phi2`` follows by exchanging the axes and the interior transform from the
kernel equation ``-gamma phi = gamma1 phi1 + gamma2 phi2``. Also here: the
continuation of ``phi1`` through the other boundary transform, the boundary
conditions satisfied on the curve R and the shift factor ``G`` of the
general (oblique) reflection problem.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import BranchCutError, DomainError, PoleError, UnsupportedReflectionError
from .gluing import GluingFunction
from .kernel import (CurveSample, branch_points, branches_theta1, gamma, gamma1, gamma2)
from .model import ContinuousModel, validate_continuous

TAYLOR_RADIUS = 1e-6
POLE_TOL = 1e-13
ON_CURVE_TOL = 1e-8


@dataclass(frozen=True)
class TransformValue:
    value: complex
    at: complex
    kind: str   # phi | phi1 | phi2 | psi1 | psi2
    via: str    # direct-formula | continuation


def transforms_to_csv(values, path):
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re_arg", "im_arg", "re_val", "im_val", "kind", "via"])
        for v in values:
            w.writerow([f"{v.at.real:.17g}", f"{v.at.imag:.17g}", f"{v.value.real:.17g}",
                        f"{v.value.imag:.17g}", v.kind, v.via])


def _require_orthogonal(model):
    if not model.orthogonal:
        raise UnsupportedReflectionError(
            "closed-form boundary transforms need identity reflection; "
            "the oblique problem is only available through bvp_shift_factor_G")
    if not validate_continuous(model).stable:
        raise DomainError("model has no stationary distribution")


class BoundaryTransform:
    """Closed-form ``phi1`` for an orthogonal model (``phi2`` via ``model.swapped()``)."""

    def __init__(self, model: ContinuousModel):
        _require_orthogonal(model)
        self.model = model
        self.w = GluingFunction(model)
        self.w0 = self.w(0.0).real
        self.wp0 = self.w.prime(0.0).real
        self.wpp0 = self.w.second(0.0).real
        self.mass = -float(model.mu[0])   # phi1(0)

    def __call__(self, t2):
        t2 = np.asarray(t2, dtype=complex)
        near = np.abs(t2) < TAYLOR_RADIUS
        safe = np.where(near, 0.5 * self.w.t_minus, t2)
        den = self.w(safe) - self.w0
        scale = np.maximum(1.0, np.abs(self.w(safe)))
        if np.any(~near & (np.abs(den) <= POLE_TOL * scale)):
            bad = t2[~near & (np.abs(den) <= POLE_TOL * scale)]
            raise PoleError(f"phi1 has a pole at {bad.ravel()[0]}")
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = self.mass * self.wp0 * safe / den
        taylor = self.mass / (1 + 0.5 * (self.wpp0 / self.wp0) * t2)
        val = np.where(near, taylor, direct)
        return complex(val) if val.ndim == 0 else val

    def poles(self) -> np.ndarray:
        """Poles of the continued ``phi1`` on ``C \\ [t2+, inf)``.

        ``w(t2) = w(0)`` forces ``x(t2) = cos(psi)`` with
        ``psi = +-psi0 + 2 pi k beta / pi`` in ``(0, pi)``, so every pole is
        real and lies between the branch points.
        """
        a = self.w.exponent
        psi0 = math.acos(min(1.0, max(-1.0, self.w.affine(0.0).real)))
        out = []
        kmax = int(math.ceil(a)) + 1
        for k in range(-kmax, kmax + 1):
            for sgn in (1, -1):
                psi = sgn * psi0 + 2 * math.pi * k / a
                if 0 < psi < math.pi and abs(psi - psi0) > 1e-12:
                    x = math.cos(psi)
                    out.append((x - self.w.shift) / self.w.scale)
        return np.unique(np.round(np.array(out, dtype=float), 14))


def phi1(model: ContinuousModel, t2):
    """Closed-form transform of the boundary measure on the vertical axis."""
    return BoundaryTransform(model)(t2)


def phi2(model: ContinuousModel, t1):
    """Closed-form transform of the boundary measure on the horizontal axis."""
    return BoundaryTransform(model.swapped())(t1)


def psi1(model: ContinuousModel, t2):
    t2 = np.asarray(t2, dtype=complex)
    return phi1(model, t2) / t2


def psi2(model: ContinuousModel, t1):
    t1 = np.asarray(t1, dtype=complex)
    return phi2(model, t1) / t1


def phi_interior(model: ContinuousModel, t1, t2, kernel_tol: float = 1e-12):
    """Transform of the stationary density from the kernel equation.

    Raises :class:`PoleError` on (or numerically at) the kernel zero set,
    where the formula is a 0/0 or a genuine pole.
    """
    t1 = np.asarray(t1, dtype=complex)
    t2 = np.asarray(t2, dtype=complex)
    g = gamma(model, t1, t2)
    if np.any(np.abs(g) <= kernel_tol * (1 + np.abs(t1) ** 2 + np.abs(t2) ** 2)):
        raise PoleError("argument lies on the kernel zero set")
    num = gamma1(model, t1, t2) * phi1(model, t2) + gamma2(model, t1, t2) * phi2(model, t1)
    val = -num / g
    return complex(val) if val.ndim == 0 else val


def in_continuation_set(model: ContinuousModel, t2) -> bool:
    t2 = complex(t2)
    return t2.real <= 0 or branches_theta1(model, t2)[0].real < 0


def continue_phi1(model: ContinuousModel, t2, phi2_fn: Callable | None = None) -> TransformValue:
    """Evaluate ``phi1`` through ``phi2`` at the root ``Theta1^-(t2)``.

    On the kernel zero set the kernel equation gives
    ``phi1(t2) = -(gamma2 / gamma1)(Theta1^-(t2), t2) * phi2(Theta1^-(t2))``.
    ``phi2_fn`` defaults to the closed form (orthogonal reflection).
    """
    t2 = complex(t2)
    tp = branch_points(model, 2).high
    if t2.imag == 0 and t2.real >= tp:
        raise BranchCutError(f"{t2} lies on the cut [{tp}, inf)")
    if not in_continuation_set(model, t2):
        raise DomainError(f"{t2} is outside the set Re t2 <= 0 or Re Theta1^-(t2) < 0")
    if phi2_fn is None:
        phi2_fn = BoundaryTransform(model.swapped())
    t1 = branches_theta1(model, t2)[0]
    g1 = gamma1(model, t1, t2)
    if abs(g1) <= POLE_TOL * (1 + abs(t1) + abs(t2)):
        raise PoleError(f"gamma1 vanishes at (Theta1^-({t2}), {t2})")
    val = -gamma2(model, t1, t2) / g1 * phi2_fn(t1)
    return TransformValue(complex(val), t2, "phi1", "continuation")


def bc_residual_orthogonal(model: ContinuousModel, sample: CurveSample) -> float:
    """Max of ``|psi1(conj t2) - psi1(t2)|`` over the sample (zero on R)."""
    bt = BoundaryTransform(model)
    z = np.asarray(sample.points, dtype=complex)
    z = z[z != 0]
    res = bt(np.conj(z)) / np.conj(z) - bt(z) / z
    return float(np.max(np.abs(res)))


def _on_R_parameter(model, t2):
    """The real theta1 < theta1^- that produces ``t2`` on R, or raise."""
    t1 = branches_theta1(model, t2)[0]
    lo = branch_points(model, 1).low
    scale = 1 + abs(t2)
    if abs(t1.imag) > ON_CURVE_TOL * scale or t1.real > lo + ON_CURVE_TOL * scale:
        raise DomainError(f"{t2} is not on the curve R")
    return t1


def bvp_shift_factor_G(model: ContinuousModel, t2) -> complex:
    """Coefficient ``G`` of the boundary condition ``phi1(conj t2) = G(t2) phi1(t2)`` on R.

    ``G = (gamma1/gamma2)(Theta1^-(t2), t2) * (gamma2/gamma1)(Theta1^-(t2), conj t2)``;
    defined for any reflection matrix. Equals ``conj(t2)/t2`` for identity
    reflection.
    """
    t2 = complex(t2)
    t1 = _on_R_parameter(model, t2)
    tb = t2.conjugate()
    factors = (gamma2(model, t1, t2), gamma1(model, t1, tb))
    if any(abs(f) <= POLE_TOL * (1 + abs(t1) + abs(t2)) for f in factors):
        raise PoleError(f"G has a pole at {t2}")
    if t2.imag == 0:
        return 1.0 + 0j
    return (gamma1(model, t1, t2) / factors[0]) * (gamma2(model, t1, tb) / factors[1])


def general_bc_residual(model: ContinuousModel, sample: CurveSample, phi1_fn=None) -> float:
    """Max of ``|phi1(conj t2) - G(t2) phi1(t2)|`` over a curve sample."""
    if phi1_fn is None:
        phi1_fn = BoundaryTransform(model)
    res = 0.0
    for z in sample.points:
        z = complex(z)
        res = max(res, abs(phi1_fn(z.conjugate()) - bvp_shift_factor_G(model, z) * phi1_fn(z)))
    return float(res)


def continuation_pole_candidates(model: ContinuousModel) -> list[complex]:
    """Zeros of ``gamma1(Theta1^-(t2), t2)`` away from the origin.

    These are the only places where the continuation formula can create a
    pole; the line ``gamma1 = 0`` meets the ellipse at the origin and at one
    other point, which counts when it lies on the ``Theta1^-`` branch.
    """
    r11, r21 = model.refl[0, 0], model.refl[1, 0]
    v = np.array([-r21, r11])
    t = -2 * (v @ model.mu) / (v @ model.sigma @ v)
    star = t * v
    if np.allclose(star, 0):
        return []
    m, _ = branches_theta1(model, star[1])
    return [complex(star[1])] if abs(m - star[0]) < 1e-9 * (1 + abs(star[0])) else []

"""Rational uniformization of the kernel's zero set and the group of the model.

The zero set of ``gamma`` is a sphere parametrized by ``s`` in the extended
complex plane::

    theta1(s) = c1 + (w1 / 4) (s + 1/s)
    theta2(s) = c2 + (w2 / 4) (s e^{-i beta} + e^{i beta} / s)

with ``c_k``, ``w_k`` the center and width of the branch-point interval of
axis ``k``. On the sphere the two involutions become ``zeta(s) = 1/s`` and
``eta(s) = e^{2 i beta} / s`` so ``eta o zeta`` is a rotation by ``2 beta``.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .kernel import branch_points, gamma, kernel_view
from .model import ContinuousModel

ON_SPHERE_TOL = 1e-8
RATIONAL_TOL = 1e-9


def beta(model: ContinuousModel) -> float:
    """Angle ``arccos(-s12 / sqrt(s11 s22))``, in ``(0, pi)``."""
    return math.acos(-model.s12 / math.sqrt(model.s11 * model.s22))


def _centers(model):
    b1 = branch_points(model, 1)
    b2 = branch_points(model, 2)
    return b1.center, b1.width, b2.center, b2.width


def uniformization(model: ContinuousModel, s):
    """Map a sphere coordinate to the kernel point ``(theta1(s), theta2(s))``.

    ``s = 0`` and ``s = inf`` are the two points at infinity of the curve and
    raise :class:`DomainError`; vector input is accepted.
    """
    s = np.asarray(s, dtype=complex)
    if np.any(s == 0) or np.any(~np.isfinite(s)):
        raise DomainError("s = 0 and s = inf are the points at infinity of the sphere")
    c1, w1, c2, w2 = _centers(model)
    e = cmath.exp(1j * beta(model))
    t1 = c1 + 0.25 * w1 * (s + 1 / s)
    t2 = c2 + 0.25 * w2 * (s / e + e / s)
    if t1.ndim == 0:
        return complex(t1), complex(t2)
    return t1, t2


def sphere_coordinate(model: ContinuousModel, t1, t2) -> complex:
    """Invert the uniformization: the unique ``s`` mapped to ``(t1, t2)``.

    ``s + 1/s`` is fixed by ``t1``; of the two reciprocal solutions the one
    whose ``theta2`` is closer to ``t2`` is returned.
    """
    c1, w1, _, _ = _centers(model)
    x = 2 * (complex(t1) - c1) / w1
    r = cmath.sqrt(x - 1) * cmath.sqrt(x + 1)
    cands = [x + r, x - r]
    cands = [c for c in cands if c != 0]
    return min(cands, key=lambda s: abs(uniformization(model, s)[1] - t2))


def _check_on_sphere(model, t1, t2):
    res = abs(gamma(model, t1, t2))
    scale = 1.0 + abs(t1) ** 2 + abs(t2) ** 2
    if res > ON_SPHERE_TOL * scale:
        raise DomainError(f"point ({t1}, {t2}) is not on the kernel zero set (residual {res:.3g})")


def zeta_point(model: ContinuousModel, point):
    """Swap the two theta2-roots at fixed theta1 (root sum, no division)."""
    t1, t2 = complex(point[0]), complex(point[1])
    _check_on_sphere(model, t1, t2)
    view = kernel_view(model, 1)
    return t1, -view.b_at(t1) / view.a - t2


def eta_point(model: ContinuousModel, point):
    """Swap the two theta1-roots at fixed theta2."""
    t1, t2 = complex(point[0]), complex(point[1])
    _check_on_sphere(model, t1, t2)
    view = kernel_view(model, 2)
    return -view.b_at(t2) / view.a - t1, t2


def zeta_sphere(s):
    return 1 / s


def eta_sphere(model: ContinuousModel, s):
    return cmath.exp(2j * beta(model)) / s


@dataclass(frozen=True)
class GroupReport:
    beta: float
    ratio: float
    finite: bool
    order: int | None          # group order 2p when finite
    fraction: tuple[int, int] | None
    max_denominator: int

    @property
    def verdict(self) -> str:
        return f"Finite({self.order})" if self.finite else f"InfiniteUpTo({self.max_denominator})"

    def to_dict(self) -> dict:
        return {"beta": self.beta, "ratio": self.ratio, "verdict": self.verdict,
                "finite": self.finite, "order": self.order,
                "fraction": list(self.fraction) if self.fraction else None,
                "max_denominator": self.max_denominator}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def group_order(model: ContinuousModel, max_denominator: int = 1000,
                tol: float = RATIONAL_TOL) -> GroupReport:
    """Decide finiteness of the group from a rational approximation of pi/beta.

    If ``pi/beta = p/q`` in lowest terms, the rotation ``eta o zeta`` has
    order ``p`` and the dihedral group has order ``2p``. The answer is only
    ever "infinite up to the denominator bound", since floating point cannot
    certify irrationality.
    """
    b = beta(model)
    ratio = math.pi / b
    frac = Fraction(ratio).limit_denominator(max_denominator)
    if abs(ratio - frac.numerator / frac.denominator) < tol:
        p, q = frac.numerator, frac.denominator
        return GroupReport(b, ratio, True, 2 * p, (p, q), max_denominator)
    return GroupReport(b, ratio, False, None, None, max_denominator)


def model_with_beta(angle: float, s11: float = 1.0, s22: float = 1.0, mu=(-1.0, -1.0),
                    refl=None) -> ContinuousModel:
    """Convenience constructor: a model whose covariance has the given beta."""
    s12 = -math.cos(angle) * math.sqrt(s11 * s22)
    return ContinuousModel([[s11, s12], [s12, s22]], mu, np.eye(2) if refl is None else refl)

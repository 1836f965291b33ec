"""Stationary density and boundary densities by contour integration.

For orthogonal reflection the density is a sum of two single integrals over
vertical lines ``Re theta1 = c1`` and ``Re theta2 = c2``::

    pi(x) = 1/(2 pi i) int phi2(t1) gamma2(t1, T2(t1)) exp(-x1 t1 - x2 T2(t1)) dt1 / sqrt(d(t1))
          + (same with the axes exchanged)

where ``T2 = Theta2^+`` is the root with the larger real part and
``sqrt(d) = d gamma / d theta2`` at that root. On the line, the integrand
decays like ``exp(-x2 sqrt(det Sigma) |y| / s22)``.

The line may sit anywhere strictly between the branch point ``theta1^-`` and
the first singularity of the integrand on the right (a pole of ``phi2`` or
the branch point ``theta1^+``). Moving it right, up to the saddle of
``x1 t1 + x2 T2(t1)``, cuts the size of the oscillating integrand down to the
size of the result, which is what keeps far-field values accurate.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError, PoleError
from .kernel import branch_points, branches_theta2, kernel_view
from .model import ContinuousModel
from .transforms import BoundaryTransform

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre rule on a vertical contour.

    ``shift`` is the real part of the contour for both integrals; ``None``
    picks it automatically. ``truncation`` (max |Im|) is likewise automatic
    unless given. ``rtol`` bounds the self-estimated error.
    """
    shift: float | None = None
    truncation: float | None = None
    panel_width: float = 0.5
    nodes: int = 16
    decay_digits: float = 14.0
    rtol: float = 1e-6
    atol: float = 1e-300
    rule: str = "gauss-legendre"

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(self.shift, None if self.truncation is None else 2 * self.truncation,
                              self.panel_width / 2, self.nodes, self.decay_digits + 2,
                              self.rtol, self.atol, self.rule)


@dataclass(frozen=True)
class DensityValue:
    value: float
    error: float
    imag_residual: float
    shifts: tuple[float, float]


class _HalfIntegral:
    """One of the two single integrals, parametrized by the model orientation."""

    def __init__(self, model: ContinuousModel):
        self.model = model
        self.phi = BoundaryTransform(model.swapped())   # phi2 as a function of theta1
        self.view = kernel_view(model, 1)
        self.bp = branch_points(model, 1)
        poles = self.phi.poles()
        poles = poles[poles > 0]
        self.first_pole = float(poles.min()) if poles.size else math.inf
        self.decay = math.sqrt(np.linalg.det(model.sigma)) / model.s22

    def saddle(self, x1, x2):
        """Maximizer of ``x1 t + x2 T2(t)`` on ``(theta1^-, theta1^+)``."""
        # d/dt: x1 + x2 T2'(t) = 0 with T2' = -(dgamma/dt1)/(dgamma/dt2)
        s = self.model.sigma
        lo, hi = self.bp.low, self.bp.high

        def g(t):
            t2 = branches_theta2(self.model, t)[1].real
            g1 = s[0, 0] * t + s[0, 1] * t2 + self.model.mu[0]
            g2 = s[0, 1] * t + s[1, 1] * t2 + self.model.mu[1]
            return x1 * g2 - x2 * g1
        eps = 1e-12 * (hi - lo)
        return float(_bisect(g, lo + eps, hi - eps))

    def auto_shift(self, x1, x2):
        c = self.saddle(x1, x2)
        limit = min(self.first_pole, self.bp.high)
        if c > limit - 0.25 * (limit - self.bp.low) and limit < math.inf:
            # stay clear of the singularity; margin scaled to the interval
            margin = min(0.25 * (limit - self.bp.low), 1.0 / max(x1, x2, 1e-12))
            c = min(c, limit - margin)
        return c

    def check_shift(self, c):
        if not self.bp.low < c < self.bp.high:
            raise DomainError(f"shift {c} outside ({self.bp.low}, {self.bp.high})")
        if c >= self.first_pole:
            raise PoleError(f"shift {c} would cross the pole at {self.first_pole}")

    def integrand(self, theta1, x1, x2):
        a = self.view.a
        b = self.view.b_at(theta1)
        d = b * b - 4 * a * self.view.c_at(theta1)
        sq = np.sqrt(d)
        t2 = branches_theta2(self.model, theta1)[1]
        g2 = self.model.refl[0, 1] * theta1 + self.model.refl[1, 1] * t2
        return self.phi(theta1) * g2 * np.exp(-x1 * theta1 - x2 * t2) / sq

    def nodes(self, c, x2, spec: QuadratureSpec):
        dist = min(self.first_pole, self.bp.high) - c
        h = spec.panel_width
        Y = spec.truncation
        if Y is None:
            Y = spec.decay_digits * math.log(10) / (x2 * self.decay) + 4 * h
        # geometric grading toward y = 0 when the contour is close to a singularity
        edges = [0.0]
        g = min(dist, h)
        while g < h:
            edges.append(g)
            g *= 2
        start = edges[-1]
        n_uniform = max(1, int(math.ceil((Y - start) / h)))
        edges.extend(start + h * np.arange(1, n_uniform + 1))
        edges = np.asarray(edges)
        if dist < h:
            edges = np.concatenate([[0.0], dist * 2.0 ** np.arange(-6, 0), edges[1:]])
            edges = np.unique(edges)
        xg, wg = _gauss_legendre(spec.nodes)
        lo, hi = edges[:-1], edges[1:]
        y = (0.5 * (hi - lo)[:, None] * (xg[None, :] + 1) + lo[:, None]).ravel()
        w = (0.5 * (hi - lo)[:, None] * wg[None, :]).ravel()
        return y, w

    def evaluate(self, x1, x2, spec: QuadratureSpec, c=None):
        if c is None:
            c = self.auto_shift(x1, x2)
        self.check_shift(c)
        y, w = self.nodes(c, x2, spec)
        f_up = self.integrand(c + 1j * y, x1, x2)
        f_dn = self.integrand(c - 1j * y, x1, x2)
        total = np.sum(w * (f_up + f_dn)) / (2 * math.pi)
        return total, c


def _bisect(f, lo, hi, iters=200):
    flo = f(lo)
    fhi = f(hi)
    if flo * fhi > 0:
        return lo if abs(flo) < abs(fhi) else hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(lo)):
            break
    return 0.5 * (lo + hi)


class DensityEvaluator:
    """Reusable density evaluator for one orthogonal model."""

    def __init__(self, model: ContinuousModel, spec: QuadratureSpec | None = None):
        self.model = model
        self.spec = spec or QuadratureSpec()
        self.first = _HalfIntegral(model)
        self.second = _HalfIntegral(model.swapped())

    def _once(self, x1, x2, spec):
        v1, c1 = self.first.evaluate(x1, x2, spec, spec.shift)
        v2, c2 = self.second.evaluate(x2, x1, spec, spec.shift)
        return v1 + v2, (c1, c2), max(abs(v1.imag), abs(v2.imag))

    def __call__(self, x1: float, x2: float) -> DensityValue:
        if x1 <= 0 or x2 <= 0:
            raise DomainError("density is evaluated at interior points x1 > 0, x2 > 0")
        coarse, _, _ = self._once(x1, x2, self.spec)
        fine, shifts, imag = self._once(x1, x2, self.spec.refined())
        err = abs(fine - coarse) + 1e-15 * abs(fine)
        val = fine.real
        if err > self.spec.rtol * abs(val) + self.spec.atol:
            raise ConvergenceError(f"density at ({x1}, {x2}): error estimate {err:.3g} vs value {val:.3g}")
        return DensityValue(float(val), float(err), float(max(abs(fine.imag), imag)), shifts)

    def grid(self, xs1, xs2) -> tuple[np.ndarray, np.ndarray]:
        vals = np.empty((len(xs1), len(xs2)))
        errs = np.empty_like(vals)
        for i, a in enumerate(xs1):
            for j, b in enumerate(xs2):
                r = self(a, b)
                vals[i, j], errs[i, j] = r.value, r.error
        return vals, errs


def density_at(model: ContinuousModel, x, spec: QuadratureSpec | None = None) -> DensityValue:
    return DensityEvaluator(model, spec)(float(x[0]), float(x[1]))


def density_grid_to_csv(xs1, xs2, vals, errs, path):
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "density", "error_estimate"])
        for i, a in enumerate(xs1):
            for j, b in enumerate(xs2):
                w.writerow([f"{a:.17g}", f"{b:.17g}", f"{vals[i, j]:.17g}", f"{errs[i, j]:.17g}"])


def normalization_check(model: ContinuousModel, T: float = 6.0, n: int = 24,
                        spec: QuadratureSpec | None = None) -> float:
    """Total mass of the density on ``[0, T]^2`` by a tensor Gauss-Legendre rule."""
    xg, wg = _gauss_legendre(n)
    x = 0.5 * T * (xg + 1)
    w = 0.5 * T * wg
    vals, _ = DensityEvaluator(model, spec).grid(x, x)
    return float(w @ vals @ w)


# ---------------------------------------------------------------------------
# Boundary density
# ---------------------------------------------------------------------------

def boundary_density_nu1(model: ContinuousModel, x2: float, shift: float | None = None,
                         limit: int = 200) -> float:
    """Invert ``phi1(t) = int exp(t x) nu1(x) dx`` on the line ``Re t = shift``.

    ``nu1(x) = exp(-c x)/pi * int_0^inf [Re phi1(c+iy) cos(xy) + Im phi1(c+iy) sin(xy)] dy``,
    evaluated with QUADPACK's Fourier-integral routine. The default shift is
    halfway to the first singularity on the positive axis.
    """
    if x2 <= 0:
        raise DomainError("x2 must be positive")
    bt = BoundaryTransform(model)
    poles = bt.poles()
    poles = poles[poles > 0]
    first = min(poles.min() if poles.size else math.inf, bt.w.t_plus)
    c = 0.5 * first if shift is None else float(shift)
    if c >= first:
        raise PoleError(f"contour Re = {c} is not left of the singularity at {first}")
    re = integrate.quad(lambda y: bt(c + 1j * y).real, 0, np.inf, weight="cos", wvar=x2, limlst=limit)[0]
    im = integrate.quad(lambda y: bt(c + 1j * y).imag, 0, np.inf, weight="sin", wvar=x2, limlst=limit)[0]
    return math.exp(-c * x2) * (re + im) / math.pi

"""Algebra of the continuous kernel.

The kernel is the quadratic

    gamma(t1, t2) = 1/2 <t | sigma t> + <t | mu>

and the boundary polynomials are ``gamma_k(t) = <R^k | t>``. Freezing one
variable turns ``gamma`` into a quadratic ``a x^2 + b x + c`` in the other;
the zeros of its discriminant are the branch points of the two algebraic
branches.

Axis convention: ``axis=1`` means theta1 is frozen and the quadratic is in
theta2 (coefficients ``a, b(theta1), c(theta1)``); ``axis=2`` is the mirror.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError
from .model import ContinuousModel

BOUNDARY_TOL = 1e-10


def gamma(model: ContinuousModel, t1, t2):
    s = model.sigma
    m = model.mu
    return 0.5 * (s[0, 0] * t1 * t1 + 2 * s[0, 1] * t1 * t2 + s[1, 1] * t2 * t2) + m[0] * t1 + m[1] * t2


def gamma1(model: ContinuousModel, t1, t2):
    r = model.refl
    return r[0, 0] * t1 + r[1, 0] * t2


def gamma2(model: ContinuousModel, t1, t2):
    r = model.refl
    return r[0, 1] * t1 + r[1, 1] * t2


def gamma_grad(model: ContinuousModel, t1, t2):
    s = model.sigma
    return (s[0, 0] * t1 + s[0, 1] * t2 + model.mu[0],
            s[0, 1] * t1 + s[1, 1] * t2 + model.mu[1])


@dataclass(frozen=True)
class KernelView:
    """``gamma`` as ``a x^2 + b(t) x + c(t)`` with ``t`` the frozen variable.

    ``b`` and ``c`` are stored as numpy coefficient arrays, highest power first.
    """
    axis: int
    a: float
    b: np.ndarray
    c: np.ndarray

    def b_at(self, t):
        return np.polyval(self.b, t)

    def c_at(self, t):
        return np.polyval(self.c, t)

    @property
    def disc(self) -> np.ndarray:
        """Coefficients of ``d(t) = b(t)^2 - 4 a c(t)``."""
        return np.polysub(np.polymul(self.b, self.b), 4 * self.a * self.c)

    def d_at(self, t):
        return np.polyval(self.disc, t)

    def evaluate(self, t, x):
        return self.a * x * x + self.b_at(t) * x + self.c_at(t)


def kernel_view(model: ContinuousModel, axis: int) -> KernelView:
    s11, s22, s12 = model.s11, model.s22, model.s12
    m1, m2 = model.mu
    if axis == 1:
        return KernelView(1, 0.5 * s22, np.array([s12, m2]), np.array([0.5 * s11, m1, 0.0]))
    if axis == 2:
        return KernelView(2, 0.5 * s11, np.array([s12, m1]), np.array([0.5 * s22, m2, 0.0]))
    raise ValueError(f"axis must be 1 or 2, got {axis}")


@dataclass(frozen=True)
class BranchPoints:
    low: float
    high: float

    def __iter__(self):
        yield self.low
        yield self.high

    @property
    def center(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def width(self) -> float:
        return self.high - self.low


def branch_points(model: ContinuousModel, axis: int) -> BranchPoints:
    """Real zeros of the discriminant for the given frozen axis.

    With positive-definite sigma the leading coefficient ``s12^2 - s11 s22``
    is negative and the constant term ``mu^2`` is nonnegative, so the two
    roots are real with opposite signs whenever the relevant drift is nonzero.
    """
    A, B, C = kernel_view(model, axis).disc
    disc = B * B - 4 * A * C
    sq = np.sqrt(disc)
    # cancellation-free pair
    q = -0.5 * (B + np.copysign(sq, B))
    r1, r2 = (q / A, C / q) if q != 0 else (0.0, 0.0)
    lo, hi = sorted((float(r1), float(r2)))
    return BranchPoints(lo, hi)


def _quadratic_roots(a, b, c, d):
    """Roots ``(minus, plus)`` of ``a x^2 + b x + c`` with discriminant ``d``.

    ``minus``/``plus`` use the principal square root: ``(-b -/+ sqrt(d)) / 2a``.
    The root of larger modulus is formed without cancellation and the other
    one from the product ``c / a``.
    """
    sq = np.sqrt(d)
    flip = np.real(np.conj(b) * sq) < 0
    s = np.where(flip, -sq, sq)
    q = -0.5 * (b + s)
    with np.errstate(divide="ignore", invalid="ignore"):
        big = q / a
        small = np.where(q == 0, 0.0, c / np.where(q == 0, 1.0, q))
    # without flip, big = (-b - sqrt d)/2a is the minus root
    minus = np.where(flip, small, big)
    plus = np.where(flip, big, small)
    return minus, plus


def _branches(model, axis, t):
    view = kernel_view(model, axis)
    t = np.asarray(t, dtype=complex)
    b = view.b_at(t)
    c = view.c_at(t)
    d = b * b - 4 * view.a * c
    minus, plus = _quadratic_roots(view.a, b, c, d)
    if minus.ndim == 0:
        return complex(minus), complex(plus)
    return minus, plus


def branches_theta2(model: ContinuousModel, t1):
    """Both roots ``(Theta2^-, Theta2^+)`` of ``gamma(t1, .) = 0``."""
    return _branches(model, 1, t1)


def branches_theta1(model: ContinuousModel, t2):
    """Both roots ``(Theta1^-, Theta1^+)`` of ``gamma(., t2) = 0``."""
    return _branches(model, 2, t2)


def track_branches(minus, plus):
    """Relabel branch pairs along a path so each branch varies continuously.

    The principal-root labels jump when the path crosses a cut of the square
    root; this swaps pairs whenever keeping the previous assignment is closer.
    """
    minus = np.array(minus, dtype=complex)
    plus = np.array(plus, dtype=complex)
    for k in range(1, len(minus)):
        keep = abs(minus[k] - minus[k - 1]) + abs(plus[k] - plus[k - 1])
        swap = abs(plus[k] - minus[k - 1]) + abs(minus[k] - plus[k - 1])
        if swap < keep:
            minus[k], plus[k] = plus[k], minus[k]
    return minus, plus


# ---------------------------------------------------------------------------
# The curve R and its domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveSample:
    points: np.ndarray        # complex theta2 values on R
    param_values: np.ndarray  # theta1 generating each point
    branch: np.ndarray        # +1 / -1 : which root produced the point
    cutoff: float

    def __len__(self):
        return len(self.points)

    def to_csv(self, path):
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta1", "re_theta2", "im_theta2", "branch"])
            for t, z, b in zip(self.param_values, self.points, self.branch):
                w.writerow([f"{t:.17g}", f"{z.real:.17g}", f"{z.imag:.17g}", int(b)])


def sample_curve_R(model: ContinuousModel, n: int = 100, cutoff: float | None = None) -> CurveSample:
    """Sample both halves of the curve ``R = Theta2^{+-}((-inf, theta1^-))``.

    theta1 runs over ``n`` values from the branch point ``theta1^-`` (which
    gives the real vertex) down to ``cutoff``, with offsets from the branch
    point spaced logarithmically. Each theta1 contributes the conjugate pair.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    bp = branch_points(model, 1)
    lo = bp.low
    if cutoff is None:
        cutoff = lo - 10.0 * bp.width
    if cutoff >= lo:
        raise DomainError(f"cutoff {cutoff} must lie below theta1^- = {lo}")
    span = lo - cutoff
    offsets = np.concatenate([[0.0], np.geomspace(1e-4 * span, span, n - 1)])
    t1 = lo - offsets
    minus, plus = branches_theta2(model, t1)
    # on the vertex the two roots coincide; make them exactly equal and real
    vertex = -kernel_view(model, 1).b_at(lo) / (2 * kernel_view(model, 1).a)
    minus[0] = plus[0] = vertex
    pts = np.concatenate([plus, minus])
    params = np.concatenate([t1, t1])
    branch = np.concatenate([np.ones(n, int), -np.ones(n, int)])
    return CurveSample(pts, params, branch, float(cutoff))


def curve_vertex(model: ContinuousModel) -> float:
    """The real point of R, i.e. the double root at theta1 = theta1^-."""
    view = kernel_view(model, 1)
    lo = branch_points(model, 1).low
    return float(-view.b_at(lo) / (2 * view.a))


def curve_abscissa(model: ContinuousModel, height):
    """Real part of the point of R with imaginary part ``+-height``."""
    view = kernel_view(model, 1)
    A, B, C = view.disc
    h = np.asarray(height, dtype=float)
    cc = C + 4 * view.a ** 2 * h * h
    # smaller root of A t^2 + B t + cc (A < 0): the parameter below theta1^-
    t = (-B + np.sqrt(B * B - 4 * A * cc)) / (2 * A)
    return -view.b_at(t) / (2 * view.a)


class Location(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    ON_BOUNDARY = "on-boundary"


def in_domain_GR(model: ContinuousModel, t2, tol: float = BOUNDARY_TOL) -> Location:
    """Locate ``t2`` with respect to the domain bounded by R containing 0.

    R is a graph over the imaginary axis (one point per height), so the side
    is read off by comparing real parts at the same height.
    """
    t2 = complex(t2)
    side0 = np.sign(0.0 - curve_vertex(model))
    u_r = float(curve_abscissa(model, abs(t2.imag)))
    diff = t2.real - u_r
    if abs(diff) <= tol * max(1.0, abs(u_r)):
        return Location.ON_BOUNDARY
    return Location.INSIDE if np.sign(diff) == side0 else Location.OUTSIDE

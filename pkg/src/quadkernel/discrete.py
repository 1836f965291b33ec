"""Kernel algebra and asymptotics of nearest-neighbour walks in the quarter lattice.

``K(x, y) = xy (sum p_ij x^i y^j - 1)`` is quadratic in each variable:
``K = a(y) x^2 + b(y) x + c(y)`` with ``a(y) = sum_j p_{1,j} y^{j+1}``,
``b(y) = sum_j p_{0,j} y^{j+1} - y`` and ``c(y) = sum_j p_{-1,j} y^{j+1}``.
The boundary polynomials ``k``, ``k~`` and ``k0`` belong to the horizontal
axis, the vertical axis and the origin.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, DomainError, ModelInvalidError
from .kernel import CurveSample
from .model import DiscreteModel

DEAD_BAND = 1e-10
UNIT_DISC_TOL = 1e-12


def _laurent(probs, x, y):
    return sum(p * x ** i * y ** j for (i, j), p in probs.items())


class DiscreteKernel:
    """Evaluators for ``K``, ``k``, ``k~``, ``k0`` and the coefficient views."""

    def __init__(self, model: DiscreteModel):
        self.model = model
        p = model.interior
        # coefficients in y (highest power first) of a(y), b(y), c(y)
        self.a_y = self._poly({j + 1: p.get((1, j), 0.0) for j in (-1, 0, 1)})
        self.b_y = self._poly({j + 1: p.get((0, j), 0.0) for j in (-1, 0, 1)}, minus_lin=True)
        self.c_y = self._poly({j + 1: p.get((-1, j), 0.0) for j in (-1, 0, 1)})
        self.a_x = self._poly({i + 1: p.get((i, 1), 0.0) for i in (-1, 0, 1)})
        self.b_x = self._poly({i + 1: p.get((i, 0), 0.0) for i in (-1, 0, 1)}, minus_lin=True)
        self.c_x = self._poly({i + 1: p.get((i, -1), 0.0) for i in (-1, 0, 1)})

    @staticmethod
    def _poly(powers, minus_lin=False):
        c = [powers.get(2, 0.0), powers.get(1, 0.0) - (1.0 if minus_lin else 0.0), powers.get(0, 0.0)]
        return np.array(c)

    def P(self, x, y):
        return _laurent(self.model.interior, x, y)

    def K(self, x, y):
        return x * y * (self.P(x, y) - 1)

    def K_coeff(self, x, y):
        """``K`` through the x-quadratic view (used to cross-check ``K``)."""
        return (np.polyval(self.a_y, y) * x * x + np.polyval(self.b_y, y) * x
                + np.polyval(self.c_y, y))

    def k(self, x, y):
        return x * (_laurent(self.model.hwall, x, y) - 1)

    def kt(self, x, y):
        return y * (_laurent(self.model.vwall, x, y) - 1)

    def k0(self, x, y):
        return _laurent(self.model.origin, x, y) - 1

    def d_y(self) -> np.ndarray:
        """Discriminant ``b(y)^2 - 4 a(y) c(y)`` of ``K`` as a quadratic in x."""
        return np.trim_zeros(np.polysub(np.polymul(self.b_y, self.b_y),
                                        4 * np.polymul(self.a_y, self.c_y)), "f")

    def d_x(self) -> np.ndarray:
        return np.trim_zeros(np.polysub(np.polymul(self.b_x, self.b_x),
                                        4 * np.polymul(self.a_x, self.c_x)), "f")


def _root_pair(a, b, c):
    if a == 0:
        return (-c / b, complex(np.inf))
    d = complex(b * b - 4 * a * c)
    sq = np.sqrt(d)
    if (np.conj(b) * sq).real < 0:
        sq = -sq
    q = -0.5 * (b + sq)
    r1, r2 = q / a, (c / q if q != 0 else 0.0)
    return tuple(sorted((complex(r1), complex(r2)), key=abs))


def branches_X(model: DiscreteModel, y) -> tuple[complex, complex]:
    """Roots ``(X0, X1)`` of ``K(., y) = 0``, ``|X0| <= |X1|``; ``inf`` when ``a(y) = 0``."""
    kern = DiscreteKernel(model)
    y = complex(y)
    return _root_pair(np.polyval(kern.a_y, y), np.polyval(kern.b_y, y), np.polyval(kern.c_y, y))


def branches_Y(model: DiscreteModel, x) -> tuple[complex, complex]:
    kern = DiscreteKernel(model)
    x = complex(x)
    return _root_pair(np.polyval(kern.a_x, x), np.polyval(kern.b_x, x), np.polyval(kern.c_x, x))


@dataclass(frozen=True)
class DiscriminantRoots:
    inside: tuple[float, float]
    outside: tuple[float, float]
    x_inside: tuple[float, float]
    x_outside: tuple[float, float]


def _polish(coeffs, r, iters=3):
    dc = np.polyder(coeffs)
    for _ in range(iters):
        dv = np.polyval(dc, r)
        if dv == 0:
            break
        r = r - np.polyval(coeffs, r) / dv
    return r


def _classify(coeffs):
    roots = [_polish(coeffs, r) for r in np.roots(coeffs)]
    if any(abs(r.imag) > 1e-9 * max(1.0, abs(r)) for r in roots):
        raise ModelInvalidError(f"discriminant has non-real roots {roots}")
    roots = sorted(float(r.real) for r in roots)
    inside = [r for r in roots if abs(r) <= 1 + UNIT_DISC_TOL]
    outside = [r for r in roots if abs(r) > 1 + UNIT_DISC_TOL]
    if len(inside) != 2:
        raise ModelInvalidError(f"expected exactly two discriminant roots in the unit disc, got {inside}")
    if len(outside) == 1:
        outside.append(math.inf)
    return tuple(inside), tuple(outside)


def discriminant_roots(model: DiscreteModel) -> DiscriminantRoots:
    kern = DiscreteKernel(model)
    ins, out = _classify(kern.d_y())
    xins, xout = _classify(kern.d_x())
    return DiscriminantRoots(ins, out, xins, xout)


def sample_curve_M(model: DiscreteModel, n: int = 100) -> CurveSample:
    """Both X-branches over ``[y1, y2]``: a closed curve symmetric in the real axis."""
    if n < 2:
        raise ValueError("n must be at least 2")
    y1, y2 = discriminant_roots(model).inside
    t = 0.5 * (1 - np.cos(np.pi * np.arange(n) / (n - 1)))
    ys = y1 + (y2 - y1) * t
    kern = DiscreteKernel(model)
    a = np.polyval(kern.a_y, ys)
    b = np.polyval(kern.b_y, ys)
    d = np.minimum(np.polyval(kern.d_y(), ys), 0.0)   # d <= 0 on the segment
    root = np.sqrt(d.astype(complex))
    plus = (-b + root) / (2 * a)
    minus = (-b - root) / (2 * a)
    plus[[0, -1]] = plus[[0, -1]].real
    minus[[0, -1]] = minus[[0, -1]].real
    pts = np.concatenate([plus, minus])
    return CurveSample(pts, np.concatenate([ys, ys]),
                       np.concatenate([np.ones(n, int), -np.ones(n, int)]), float(y2))


def curve_M_separation(model: DiscreteModel, n: int = 400) -> float:
    """Distance between the curve M and the cut ``[x3, x4]`` (positive when disjoint)."""
    x3, x4 = discriminant_roots(model).x_outside
    pts = sample_curve_M(model, n).points
    proj = np.clip(pts.real, x3, x4 if math.isfinite(x4) else np.inf)
    return float(np.min(np.abs(pts - proj)))


# ---------------------------------------------------------------------------
# Group of the walk
# ---------------------------------------------------------------------------

def zeta(model: DiscreteModel, x, y):
    """Exchange the two roots in y at fixed x."""
    p = model.interior
    num = sum(p.get((i, -1), 0.0) * x ** i for i in (-1, 0, 1))
    den = sum(p.get((i, 1), 0.0) * x ** i for i in (-1, 0, 1))
    if den == 0 or y == 0:
        raise DomainError("zeta hits a denominator zero")
    return x, num / den / y


def eta(model: DiscreteModel, x, y):
    """Exchange the two roots in x at fixed y."""
    p = model.interior
    num = sum(p.get((-1, j), 0.0) * y ** j for j in (-1, 0, 1))
    den = sum(p.get((1, j), 0.0) * y ** j for j in (-1, 0, 1))
    if den == 0 or x == 0:
        raise DomainError("eta hits a denominator zero")
    return num / den / x, y


def random_kernel_points(model: DiscreteModel, n: int, seed: int = 0) -> list[tuple[complex, complex]]:
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        x = complex(rng.normal(), rng.normal()) * 2
        y = branches_Y(model, x)[rng.integers(2)]
        if np.isfinite(y) and abs(y) > 1e-6 and abs(x) > 1e-6:
            pts.append((x, complex(y)))
    return pts


@dataclass(frozen=True)
class WalkGroupReport:
    finite: bool
    order: int | None
    max_iter: int
    orbit_residuals: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return f"Finite({self.order})" if self.finite else f"ExceedsBound({self.max_iter})"


def walk_group_order(model: DiscreteModel, max_iter: int = 64, n_points: int = 20,
                     seed: int = 0, tol: float = 1e-8) -> WalkGroupReport:
    """Smallest ``n`` with ``(zeta o eta)^n = id`` on random kernel points; order ``2n``."""
    pts = []
    rng_seed = seed
    while len(pts) < n_points:
        for x, y in random_kernel_points(model, n_points - len(pts), rng_seed):
            try:
                zeta(model, *eta(model, x, y))
                pts.append((x, y))
            except DomainError:
                continue
        rng_seed += 1
    cur = list(pts)
    residuals = []
    for n in range(1, max_iter + 1):
        nxt = []
        for x, y in cur:
            try:
                nxt.append(zeta(model, *eta(model, x, y)))
            except DomainError:
                nxt.append((complex(np.nan), complex(np.nan)))
        cur = nxt
        res = max(abs(a - p[0]) / max(1.0, abs(p[0])) + abs(b - p[1]) / max(1.0, abs(p[1]))
                  for (a, b), p in zip(cur, pts))
        residuals.append(float(res))
        if res < tol:
            return WalkGroupReport(True, 2 * n, max_iter, residuals)
    return WalkGroupReport(False, None, max_iter, residuals)


# ---------------------------------------------------------------------------
# Saddle point and regimes
# ---------------------------------------------------------------------------

def _P_derivs(model, u, v):
    P = Pu = Pv = Puu = Puv = Pvv = 0.0
    for (i, j), p in model.interior.items():
        t = p * math.exp(i * u + j * v)
        P += t
        Pu += i * t
        Pv += j * t
        Puu += i * i * t
        Puv += i * j * t
        Pvv += j * j * t
    return P, np.array([Pu, Pv]), np.array([[Puu, Puv], [Puv, Pvv]])


def _grad_match(model, lam, e, z):
    # minimize P(z) - lam <e, z> by damped Newton (strictly convex)
    for _ in range(200):
        P, g, H = _P_derivs(model, *z)
        r = g - lam * e
        if np.max(np.abs(r)) < 1e-15 * max(1.0, lam):
            break
        step = np.linalg.solve(H, r)
        f0 = P - lam * e @ z
        t = 1.0
        while t > 1e-12:
            zn = z - t * step
            if _P_derivs(model, *zn)[0] - lam * e @ zn <= f0 + 1e-16 * abs(f0):
                break
            t *= 0.5
        z = zn
    return z


def discrete_saddle(model: DiscreteModel, alpha: float) -> tuple[float, float]:
    """Point ``(e^u, e^v)`` on ``P = 1`` where ``grad P`` points along ``e_alpha``.

    ``grad P = lam e_alpha`` is solved for each ``lam`` (``P`` is strictly
    convex), and ``P`` along that path increases with ``lam`` at the rate
    ``lam e^T H^{-1} e``. A safeguarded Newton iteration on ``lam`` finds
    ``P = 1``; a final Newton step on the 2x2 system polishes.
    """
    if not 0 < alpha < math.pi / 2:
        raise DomainError(f"alpha = {alpha} outside (0, pi/2)")
    mx, my = model.drift()
    if not (mx < 0 and my < 0):
        raise DomainError("saddle point needs a negative interior drift")
    e = np.array([math.cos(alpha), math.sin(alpha)])
    lo, hi = 0.0, math.inf
    lam = 1.0
    z = np.zeros(2)
    for _ in range(200):
        z = _grad_match(model, lam, e, z)
        P, _, H = _P_derivs(model, *z)
        if P > 1:
            hi = lam
        else:
            lo = lam
        if abs(P - 1) < 1e-15:
            break
        slope = lam * (e @ np.linalg.solve(H, e))
        nxt = lam - (P - 1) / slope if slope > 0 else math.nan
        if not (lo < nxt < hi):
            nxt = 2 * lam if math.isinf(hi) else 0.5 * (lo + hi)
        if hi - lo < 1e-15 * hi or nxt == lam:
            break
        lam = nxt
    for _ in range(20):
        P, g, H = _P_derivs(model, *z)
        F = np.array([P - 1, g[0] * e[1] - g[1] * e[0]])
        if np.max(np.abs(F)) < 1e-15:
            break
        J = np.array([g, H[0] * e[1] - H[1] * e[0]])
        z = z - np.linalg.solve(J, F)
    P, g, _ = _P_derivs(model, *z)
    if abs(P - 1) > 1e-12 or g @ e <= 0:
        raise ConvergenceError(f"saddle solve failed at alpha = {alpha}")
    return math.exp(z[0]), math.exp(z[1])


_ORDERINGS = {"zeta-eta": (zeta, eta), "eta-zeta": (eta, zeta)}


def _pole_system_solutions(model, which: str, ordering: str, seeds: int = 12):
    """Positive solutions of ``{K = 0, k(psi(x, y)) = 0}`` (or ``k~(phi(.))``).

    The trivial solution ``psi(1, 1)`` (image of the point where every
    inventory polynomial vanishes) is dropped.
    """
    kern = DiscreteKernel(model)
    psi, phi = _ORDERINGS[ordering]
    if which == "k":
        def G(x, y):
            return kern.k(*psi(model, x, y))
        trivial = psi(model, 1.0, 1.0)
    else:
        def G(x, y):
            return kern.kt(*phi(model, x, y))
        trivial = phi(model, 1.0, 1.0)

    def F(z):
        x, y = z
        return np.array([kern.K(x, y), G(x, y)])

    sols = []
    grid = np.linspace(0.25, 5.0, seeds)
    for x0 in grid:
        for y0 in grid:
            z = np.array([x0, y0])
            try:
                for _ in range(60):
                    f = F(z)
                    h = 1e-7 * np.maximum(1.0, np.abs(z))
                    J = np.column_stack([(F(z + [h[0], 0]) - f) / h[0], (F(z + [0, h[1]]) - f) / h[1]])
                    step = np.linalg.solve(J, f)
                    t = 1.0
                    while t > 1e-6:
                        zn = z - t * step
                        if np.all(zn > 0) and np.linalg.norm(F(zn)) < np.linalg.norm(f):
                            break
                        t *= 0.5
                    z = zn
                    if np.linalg.norm(step) < 1e-14 * np.linalg.norm(z):
                        break
            except (np.linalg.LinAlgError, DomainError, ZeroDivisionError, OverflowError):
                continue
            if np.all(z > 0) and np.linalg.norm(F(z)) < 1e-11:
                if np.hypot(z[0] - trivial[0], z[1] - trivial[1]) < 1e-6:
                    continue
                if not any(np.hypot(*(z - s)) < 1e-6 for s in sols):
                    sols.append(z)
    return [tuple(map(float, s)) for s in sols]


@dataclass(frozen=True)
class DiscreteRegimeReport:
    alpha: float
    label: str                # P-- | P+- | P-+ | P++ | Boundary
    saddle: tuple[float, float]
    signs: tuple[float, float]  # k(psi(saddle)), k~(phi(saddle))
    poles: dict = field(default_factory=dict)
    rates: list = field(default_factory=list)
    prefactor_power: float = 0.0
    ordering: str = "zeta-eta"

    @property
    def dominant(self) -> float:
        if self.label == "Boundary":
            from .errors import BoundaryRegimeError
            raise BoundaryRegimeError(f"alpha = {self.alpha} is on a regime boundary")
        return min(self.rates)


def discrete_regime(model: DiscreteModel, alpha: float, ordering: str = "zeta-eta") -> DiscreteRegimeReport:
    """Regime label and exponential rates along the ray of angle ``alpha``.

    ``ordering`` selects how the two sign-test maps are read: ``"zeta-eta"``
    evaluates ``k`` at ``zeta(saddle)`` and ``k~`` at ``eta(saddle)``.
    A positive ``k`` test brings in the pole solving ``{K = 0, k(psi) = 0}``,
    a positive ``k~`` test the one solving ``{K = 0, k~(phi) = 0}``.
    Rates are per unit of ``r``: ``cos(alpha) log p + sin(alpha) log q``.
    """
    if ordering not in _ORDERINGS:
        raise ValueError(f"ordering must be one of {sorted(_ORDERINGS)}")
    psi, phi = _ORDERINGS[ordering]
    kern = DiscreteKernel(model)
    x, y = discrete_saddle(model, alpha)
    s1 = float(kern.k(*psi(model, x, y)))
    s2 = float(kern.kt(*phi(model, x, y)))
    e = (math.cos(alpha), math.sin(alpha))
    if abs(s1) <= DEAD_BAND or abs(s2) <= DEAD_BAND:
        return DiscreteRegimeReport(alpha, "Boundary", (x, y), (s1, s2), ordering=ordering)
    label = "P" + ("+" if s1 > 0 else "-") + ("+" if s2 > 0 else "-")
    if label == "P--":
        rate = e[0] * math.log(x) + e[1] * math.log(y)
        return DiscreteRegimeReport(alpha, label, (x, y), (s1, s2), {}, [rate], -0.5, ordering)
    poles, rates = {}, []
    for flag, which, key in ((s1 > 0, "k", "p1q1"), (s2 > 0, "kt", "p2q2")):
        if not flag:
            continue
        sols = _pole_system_solutions(model, which, ordering)
        if not sols:
            raise ConvergenceError(f"no positive solution of the {which} pole system")
        best = min(sols, key=lambda s: e[0] * math.log(s[0]) + e[1] * math.log(s[1]))
        poles[key] = best
        rates.append(e[0] * math.log(best[0]) + e[1] * math.log(best[1]))
    return DiscreteRegimeReport(alpha, label, (x, y), (s1, s2), poles, rates, 0.0, ordering)


def discrete_sweep_to_csv(reports, path):
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "x_alpha", "y_alpha", "label", "rates"])
        for r in reports:
            w.writerow([f"{r.alpha:.17g}", f"{r.saddle[0]:.17g}", f"{r.saddle[1]:.17g}", r.label,
                        ";".join(f"{v:.17g}" for v in r.rates)])

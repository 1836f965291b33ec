"""Ellipse geometry and exponential decay rates of the stationary density.

Along the ray ``r e_alpha`` the density decays like ``exp(-r c)`` where ``c``
is read from three candidate points of the ellipse ``E = {gamma = 0}``: the
saddle ``theta(alpha)`` (with an extra ``r^{-1/2}``) or one of the two pole
points ``eta theta*`` / ``zeta theta**``. Which one wins depends on the signs
of ``gamma1`` and ``gamma2`` at the Galois images of the saddle.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BoundaryRegimeError, ConvergenceError, DomainError, UnsupportedAngleError
from .kernel import gamma, gamma1, gamma2, gamma_grad
from .model import ContinuousModel, validate_continuous

DEAD_BAND = 1e-10
NEWTON_MAXITER = 100


def e_alpha(alpha: float) -> np.ndarray:
    return np.array([math.cos(alpha), math.sin(alpha)])


def ellipse_center(model: ContinuousModel) -> np.ndarray:
    return -np.linalg.solve(model.sigma, model.mu)


def eta_image(model: ContinuousModel, point) -> np.ndarray:
    """Other root in theta1 with the same theta2 (root sum)."""
    t1, t2 = point
    return np.array([-2 * (model.s12 * t2 + model.mu[0]) / model.s11 - t1, t2])


def zeta_image(model: ContinuousModel, point) -> np.ndarray:
    """Other root in theta2 with the same theta1."""
    t1, t2 = point
    return np.array([t1, -2 * (model.s12 * t1 + model.mu[1]) / model.s22 - t2])


def theta_alpha(model: ContinuousModel, alpha: float, tol: float = 1e-14) -> np.ndarray:
    """Point of the ellipse maximizing ``<theta | e_alpha>``.

    Newton on ``gamma = 0``, ``grad gamma x e_alpha = 0``. The start is the
    center plus ``Sigma^{-1} e_alpha`` scaled onto the ellipse, which is
    already the answer up to rounding, so Newton only polishes.
    """
    if not 0 < alpha < math.pi / 2:
        raise UnsupportedAngleError(f"alpha = {alpha} outside (0, pi/2)")
    if not validate_continuous(model).stable:
        raise DomainError("model has no stationary distribution")
    e = e_alpha(alpha)
    c, s = e
    S = model.sigma
    center = ellipse_center(model)
    d = np.linalg.solve(S, e)
    lam = math.sqrt((center @ S @ center) / (e @ d))
    th = center + lam * d
    jac_row2 = np.array([S[0, 0] * s - S[0, 1] * c, S[0, 1] * s - S[1, 1] * c])
    for _ in range(NEWTON_MAXITER):
        g1, g2 = gamma_grad(model, th[0], th[1])
        F = np.array([gamma(model, th[0], th[1]), g1 * s - g2 * c])
        scale = 1 + th @ th
        if abs(F[0]) <= tol * scale and abs(F[1]) <= tol * math.sqrt(scale):
            break
        J = np.array([[g1, g2], jac_row2])
        th = th - np.linalg.solve(J, F)
    else:
        raise ConvergenceError(f"theta(alpha) did not converge at alpha = {alpha}")
    if np.dot(gamma_grad(model, th[0], th[1]), e) <= 0:
        raise ConvergenceError("converged to the minimizing point")
    return th


@dataclass(frozen=True)
class EllipsePoints:
    theta_star: np.ndarray
    theta_star2: np.ndarray
    eta_theta_star: np.ndarray
    zeta_theta_star2: np.ndarray
    degenerate: bool = False


def _second_intersection(model, v):
    # gamma(t v) = t (t/2 v.Sigma.v + v.mu)
    t = -2 * (v @ model.mu) / (v @ model.sigma @ v)
    return t * v


def distinguished_points(model: ContinuousModel) -> EllipsePoints:
    """``theta*`` on ``{gamma1 = 0}``, ``theta**`` on ``{gamma2 = 0}`` and their images."""
    R = model.refl
    ts = _second_intersection(model, np.array([-R[1, 0], R[0, 0]]))
    ts2 = _second_intersection(model, np.array([R[1, 1], -R[0, 1]]))
    degenerate = bool(np.allclose(ts, 0, atol=1e-12) or np.allclose(ts2, 0, atol=1e-12))
    return EllipsePoints(ts, ts2, eta_image(model, ts), zeta_image(model, ts2), degenerate)


@dataclass(frozen=True)
class RegimeReport:
    alpha: float
    label: str                 # Q-- | Q+- | Q-+ | Q++ | Boundary
    saddle: np.ndarray
    signs: tuple[float, float]  # gamma1(eta theta(alpha)), gamma2(zeta theta(alpha))
    pole_points: dict = field(default_factory=dict)
    exponents: list = field(default_factory=list)
    prefactor_power: float = 0.0

    @property
    def dominant(self) -> float:
        if self.label == "Boundary":
            raise BoundaryRegimeError(f"alpha = {self.alpha} is on a regime boundary")
        return min(self.exponents)

    def constants(self) -> str:
        return "unavailable"


def _sign_label(v: float) -> str | None:
    if abs(v) <= DEAD_BAND:
        return None
    return "+" if v > 0 else "-"


def classify_regime(model: ContinuousModel, alpha: float) -> RegimeReport:
    th = theta_alpha(model, alpha)
    if np.any(th < 0):
        raise UnsupportedAngleError(f"theta(alpha) = {th} is not in the positive quadrant")
    e = e_alpha(alpha)
    s1 = float(gamma1(model, *eta_image(model, th)))
    s2 = float(gamma2(model, *zeta_image(model, th)))
    l1, l2 = _sign_label(s1), _sign_label(s2)
    if l1 is None or l2 is None:
        return RegimeReport(alpha, "Boundary", th, (s1, s2))
    label = f"Q{l1}{l2}"
    pts = distinguished_points(model)
    poles = {}
    if l1 == "+":
        poles["eta_theta_star"] = pts.eta_theta_star
    if l2 == "+":
        poles["zeta_theta_star2"] = pts.zeta_theta_star2
    if label == "Q--":
        return RegimeReport(alpha, label, th, (s1, s2), poles, [float(e @ th)], -0.5)
    return RegimeReport(alpha, label, th, (s1, s2), poles, [float(e @ p) for p in poles.values()], 0.0)


def decay_exponent(model: ContinuousModel, alpha: float) -> float:
    return classify_regime(model, alpha).dominant


def regime_sweep(model: ContinuousModel, alphas) -> list[RegimeReport]:
    return [classify_regime(model, a) for a in alphas]


def sweep_to_csv(reports, path):
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "label", "exponents", "prefactor_power", "saddle_theta1", "saddle_theta2"])
        for r in reports:
            w.writerow([f"{r.alpha:.17g}", r.label, ";".join(f"{x:.17g}" for x in r.exponents),
                        f"{r.prefactor_power:.17g}", f"{r.saddle[0]:.17g}", f"{r.saddle[1]:.17g}"])

"""Least-squares decay-rate fits along a ray."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True)
class DecayFit:
    slope: float
    slope_se: float
    intercept: float
    log_coef: float | None      # coefficient of log r (model with the extra regressor)
    log_coef_se: float | None
    slope_plain: float          # slope without the log r regressor
    slope_plain_se: float
    aic_plain: float
    aic_log: float

    @property
    def preferred(self) -> str:
        return "log" if self.aic_log < self.aic_plain else "plain"


def _ols(X, y, w):
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = (y - X @ coef) * sw
    n, k = X.shape
    rss = float(resid @ resid)
    dof = max(n - k, 1)
    cov = np.linalg.pinv((X * w[:, None]).T @ X) * (rss / dof)
    aic = n * np.log(max(rss / n, 1e-300)) + 2 * k
    return coef, np.sqrt(np.maximum(np.diag(cov), 0.0)), aic


def fit_decay_rate(r, values, weights=None, log_term: bool = True) -> DecayFit:
    """Fit ``log v = c + s r (+ b log r)``.

    Both the plain exponential and the one with the ``log r`` regressor are
    fitted; ``slope``/``intercept`` come from the model selected by
    ``log_term``. ``weights`` are inverse variances of ``log v``.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.size < 10:
        raise DomainError("need at least 10 points for a decay fit")
    if np.any(v <= 0):
        raise DomainError("decay fit needs positive values")
    w = np.ones_like(r) if weights is None else np.asarray(weights, dtype=float)
    y = np.log(v)
    Xp = np.column_stack([np.ones_like(r), r])
    Xl = np.column_stack([np.ones_like(r), r, np.log(r)])
    cp, sp, aic_p = _ols(Xp, y, w)
    cl, sl, aic_l = _ols(Xl, y, w)
    if log_term:
        return DecayFit(cl[1], sl[1], cl[0], cl[2], sl[2], cp[1], sp[1], aic_p, aic_l)
    return DecayFit(cp[1], sp[1], cp[0], cl[2], sl[2], cp[1], sp[1], aic_p, aic_l)


@dataclass(frozen=True)
class RateMLE:
    rate: float
    stderr: float          # spread of per-replica estimates
    counts: int
    window: tuple[float, float]


def _truncated_exp_rate(r, counts):
    # MLE of s for a density proportional to exp(-s r) restricted to the bin centers r
    from scipy.optimize import brentq

    c = np.asarray(counts, dtype=float)
    if c.sum() <= 0:
        return np.nan
    target = (c * r).sum() / c.sum()

    def mean_r(s):
        w = np.exp(-s * (r - r[0]))
        return (r * w).sum() / w.sum() - target
    lo, hi = -50.0, 200.0
    if mean_r(lo) * mean_r(hi) > 0:
        return np.nan
    return brentq(mean_r, lo, hi, xtol=1e-12)


def rate_mle(r, counts, window) -> RateMLE:
    """Exponential rate from binned counts by maximum likelihood.

    ``counts`` is ``(replicas, bins)``; the rate uses the pooled counts in
    ``window`` and the standard error the spread of per-replica estimates.
    Pooling every sample in the window is far less sensitive to sparse tail
    bins than a least-squares fit of log-counts.
    """
    r = np.asarray(r, dtype=float)
    counts = np.atleast_2d(np.asarray(counts))
    k = (r >= window[0]) & (r <= window[1])
    if k.sum() < 2:
        raise DomainError("window holds fewer than two bins")
    pooled = _truncated_exp_rate(r[k], counts[:, k].sum(axis=0))
    per = np.array([_truncated_exp_rate(r[k], row[k]) for row in counts])
    per = per[np.isfinite(per)]
    se = per.std(ddof=1) / np.sqrt(per.size) if per.size > 1 else np.nan
    return RateMLE(float(pooled), float(se), int(counts[:, k].sum()), tuple(window))

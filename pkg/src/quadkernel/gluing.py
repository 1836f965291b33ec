"""Generalized Chebyshev functions and the conformal gluing function.

``T_a(x) = cos(a arccos x)`` is evaluated through the closed form
``cosh(a L)`` with ``L = log(x + sqrt(x - 1) sqrt(x + 1))``. Factoring the
square root keeps its cut on ``(-inf, 1]``, which makes ``L`` analytic off
``(-inf, 1]`` and ``T_a`` analytic on ``C \\ (-inf, -1]`` for every real
``a`` (the jump of ``L`` across ``[-1, 1]`` is a sign flip, invisible to
``cosh``).

The gluing function is ``w(t2) = T_{pi/beta}(x(t2))`` with the affine map
``x(t2) = -(2 t2 - (t2+ + t2-)) / (t2+ - t2-)`` sending ``t2-`` to 1 and
``t2+`` to -1, so the cut of ``w`` is ``[t2+, inf)``.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .kernel import branch_points
from .model import ContinuousModel
from .sphere import beta, uniformization


class BranchCutWarning(UserWarning):
    """A multivalued function was evaluated on its branch cut."""


def _acosh_log(x):
    x = np.asarray(x, dtype=complex)
    return np.log(x + np.sqrt(x - 1) * np.sqrt(x + 1))


def chebyshev_T(a: float, x):
    """Generalized Chebyshev function ``T_a(x)`` with the branch cut ``(-inf, -1]``."""
    val = np.cosh(a * _acosh_log(x))
    return complex(val) if val.ndim == 0 else val


def chebyshev_T_prime(a: float, x):
    """Derivative ``a sinh(a L) / sinh(L)``; equals ``a^2`` at ``x = 1``."""
    L = _acosh_log(x)
    small = np.abs(L) < 1e-6
    Ls = np.where(small, 1.0, L)
    val = np.where(small, a * a * (1 + (a * a - 1) * L * L / 6),
                   a * np.sinh(a * Ls) / np.sinh(Ls))
    return complex(val) if val.ndim == 0 else val


class GluingFunction:
    """The conformal gluing function of the curve R for one model."""

    def __init__(self, model: ContinuousModel):
        self.model = model
        bp = branch_points(model, 2)
        self.t_minus, self.t_plus = bp.low, bp.high
        self.beta = beta(model)
        self.exponent = math.pi / self.beta
        # x = scale * t2 + shift
        self.scale = -2.0 / (self.t_plus - self.t_minus)
        self.shift = (self.t_plus + self.t_minus) / (self.t_plus - self.t_minus)

    def affine(self, t2):
        return self.scale * np.asarray(t2, dtype=complex) + self.shift

    def on_cut(self, t2) -> np.ndarray:
        t2 = np.asarray(t2, dtype=complex)
        return (t2.imag == 0) & (t2.real >= self.t_plus)

    def _warn_cut(self, t2):
        if np.any(self.on_cut(t2)):
            warnings.warn("gluing function evaluated on its cut [theta2+, inf)",
                          BranchCutWarning, stacklevel=3)

    def __call__(self, t2):
        self._warn_cut(t2)
        return chebyshev_T(self.exponent, self.affine(t2))

    def prime(self, t2):
        self._warn_cut(t2)
        val = self.scale * np.asarray(chebyshev_T_prime(self.exponent, self.affine(t2)))
        return complex(val) if val.ndim == 0 else val

    def second(self, t2):
        """Second derivative, used by the Taylor switch near ``t2 = 0``."""
        a = self.exponent
        x = self.affine(t2)
        # (1 - x^2) T'' = x T' - a^2 T
        T = chebyshev_T(a, x)
        Tp = chebyshev_T_prime(a, x)
        val = self.scale ** 2 * (x * Tp - a * a * T) / (1 - x * x)
        return complex(val) if np.ndim(val) == 0 else val

    def lifted(self, s):
        """``-(i/2) ((-s)^{pi/beta} + (-s)^{-pi/beta})`` with principal logarithm.

        On the sheet ``arg s in (beta, 2 pi)`` this equals ``i * w(theta2(s))``:
        a constant multiple of ``w``, which is an equally valid gluing function.
        """
        s = np.asarray(s, dtype=complex)
        if np.any((s.imag == 0) & (s.real > 0)):
            warnings.warn("lifted gluing function evaluated on the cut arg s = 0",
                          BranchCutWarning, stacklevel=2)
        L = np.log(-s)
        val = -0.5j * (np.exp(self.exponent * L) + np.exp(-self.exponent * L))
        return complex(val) if val.ndim == 0 else val

    def lifted_consistency(self, s):
        """``lifted(s) - i * w(theta2(s))``; vanishes on the sheet ``arg s in (beta, 2 pi)``."""
        _, t2 = uniformization(self.model, s)
        return self.lifted(s) - 1j * self(t2)


def glue(model: ContinuousModel, t2):
    return GluingFunction(model)(t2)


def glue_prime(model: ContinuousModel, t2):
    return GluingFunction(model).prime(t2)


def glue_lifted(model: ContinuousModel, s):
    return GluingFunction(model).lifted(s)


def polynomial_fit_residual(model: ContinuousModel, degree: int, n_samples: int = 200) -> float:
    """Relative max residual of a degree-``degree`` polynomial fit of ``w``.

    The fit is done in the affine variable on Chebyshev-Lobatto points of
    ``[-1, 1]`` (the image of the real segment between the branch points).
    An integer ``pi/beta`` gives an exact fit at its degree.
    """
    gf = GluingFunction(model)
    x = np.cos(np.pi * np.arange(n_samples) / (n_samples - 1))
    w = chebyshev_T(gf.exponent, x).real
    coef = np.polynomial.chebyshev.chebfit(x, w, degree)
    resid = np.polynomial.chebyshev.chebval(x, coef) - w
    return float(np.max(np.abs(resid)) / max(np.max(np.abs(w)), 1e-300))

from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadkernel.gluing import (BranchCutWarning, GluingFunction, chebyshev_T, chebyshev_T_prime, glue,
                               glue_prime, polynomial_fit_residual)
from quadkernel.kernel import curve_vertex, sample_curve_R
from quadkernel.model import M1, M2, M3
from quadkernel.sphere import model_with_beta

from .conftest import stable_models


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7])
def test_integer_order_is_chebyshev_polynomial(n, rng):
    x = rng.normal(size=50) + 1j * rng.normal(size=50)
    T = np.polynomial.chebyshev.Chebyshev.basis(n)
    assert np.allclose(chebyshev_T(n, x), T(x), rtol=1e-11, atol=1e-11)
    assert np.allclose(chebyshev_T_prime(n, x), T.deriv()(x), rtol=1e-9, atol=1e-9)


def test_derivative_at_one():
    assert chebyshev_T_prime(2.5, 1.0) == pytest.approx(6.25)


@given(stable_models())
def test_gluing_identity_on_curve(model):
    s = sample_curve_R(model, 100)
    w = GluingFunction(model)
    z = s.points
    assert np.max(np.abs(w(z) - w(np.conj(z)))) < 1e-9 * max(1.0, np.max(np.abs(w(z))))


@given(stable_models())
def test_gluing_monotone_inside_domain(model):
    w = GluingFunction(model)
    v = curve_vertex(model)
    t = np.linspace(v, w.t_minus - 5.0, 201)[1:]
    vals = w(t)
    assert np.max(np.abs(vals.imag)) < 1e-9 * np.max(np.abs(vals))
    d = np.diff(vals.real)
    assert np.all(d > 0) or np.all(d < 0)


@given(stable_models(), st.integers(0, 2**32 - 1))
def test_prime_matches_finite_difference(model, seed):
    rng = np.random.default_rng(seed)
    w = GluingFunction(model)
    t = rng.uniform(w.t_minus - 2, w.t_plus, 100) + 1j * rng.uniform(-1, 1, 100)
    h = 1e-6
    fd = (w(t + h) - w(t - h)) / (2 * h)
    an = w.prime(t)
    assert np.max(np.abs(fd - an) / np.maximum(np.abs(an), 1e-3)) < 1e-6


def test_second_derivative_matches_finite_difference():
    w = GluingFunction(M3())
    t = 0.3 + 0.2j
    h = 1e-4
    fd = (w.prime(t + h) - w.prime(t - h)) / (2 * h)
    assert abs(fd - w.second(t)) < 1e-6 * abs(w.second(t))


def test_polynomial_witness():
    assert polynomial_fit_residual(M1(), 2) < 1e-9
    assert polynomial_fit_residual(M3(), 3) < 1e-9
    assert polynomial_fit_residual(M3(), 2) > 1e-3
    irr = model_with_beta(1.0)
    assert all(polynomial_fit_residual(irr, d) > 1e-3 for d in range(1, 13))


def test_lifted_form_is_constant_multiple_on_sheet(rng):
    for model in (M3(), model_with_beta(1.0)):
        gf = GluingFunction(model)
        arg = rng.uniform(gf.beta + 0.05, 2 * math.pi - 0.05, 50)
        s = np.exp(rng.uniform(-1, 1, 50)) * np.exp(1j * arg)
        assert np.max(np.abs(gf.lifted_consistency(s))) < 1e-9 * np.max(np.abs(gf.lifted(s)))


def test_cut_warning():
    w = GluingFunction(M2())
    with pytest.warns(BranchCutWarning):
        w(w.t_plus + 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        w(w.t_plus + 1.0 + 1e-3j)
    assert glue(M2(), 0.5) == w(0.5) and glue_prime(M2(), 0.5) == w.prime(0.5)

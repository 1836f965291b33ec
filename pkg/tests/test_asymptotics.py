from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadkernel.asymptotics import (classify_regime, decay_exponent, distinguished_points, e_alpha, eta_image,
                                    regime_sweep, sweep_to_csv, theta_alpha, zeta_image)
from quadkernel.errors import BoundaryRegimeError, UnsupportedAngleError
from quadkernel.kernel import gamma, gamma_grad
from quadkernel.model import M1, M2, M3

from .conftest import make_model, stable_models


@given(stable_models(), st.floats(0.01, math.pi / 2 - 0.01))
def test_theta_alpha_is_the_tangency_point(model, alpha):
    th = theta_alpha(model, alpha)
    g = gamma_grad(model, *th)
    assert abs(gamma(model, *th)) < 1e-10 * (1 + th @ th)
    e = e_alpha(alpha)
    assert abs(g[0] * e[1] - g[1] * e[0]) < 1e-9 * (1 + np.hypot(*g))
    assert g @ e > 0


@given(stable_models())
def test_theta_alpha_monotone(model):
    pts = np.array([theta_alpha(model, a) for a in np.linspace(0.02, math.pi / 2 - 0.02, 50)])
    assert np.all(np.diff(pts[:, 0]) < 0) and np.all(np.diff(pts[:, 1]) > 0)


@given(stable_models())
def test_galois_images_are_involutive(model):
    pts = distinguished_points(model)
    assert np.allclose(eta_image(model, pts.eta_theta_star), pts.theta_star)
    assert np.allclose(zeta_image(model, pts.zeta_theta_star2), pts.theta_star2)


@given(st.floats(0.4, 2.5), st.floats(0.4, 2.5), st.floats(-2.5, -0.2), st.floats(-2.5, -0.2),
       st.floats(0.02, math.pi / 2 - 0.02))
def test_product_form_exponent(s11, s22, mu1, mu2, alpha):
    model = make_model(s11, s22, 0.0, mu1, mu2)
    rep = classify_regime(model, alpha)
    target = e_alpha(alpha) @ np.array([-2 * mu1 / s11, -2 * mu2 / s22])
    if rep.label != "Boundary":
        assert rep.dominant == pytest.approx(target, abs=1e-9)


def test_reference_labels():
    r = classify_regime(M2(), math.pi / 4)
    assert r.label == "Q+-" and r.dominant == pytest.approx(3 * math.sqrt(2), abs=1e-12)
    assert classify_regime(M2(), math.atan(0.5)).label == "Boundary"
    assert classify_regime(M1(), math.pi / 4).label == "Boundary"
    r3 = classify_regime(M3(), math.pi / 4)
    assert r3.label == "Q++" and np.allclose(r3.exponents, [3 * math.sqrt(2)] * 2)
    assert r3.constants() == "unavailable"


def test_saddle_regime_has_half_power():
    # strong correlation pulls both pole points beyond the saddle
    model = make_model(1.0, 1.0, 0.6, -1.0, -1.0)
    r = classify_regime(model, math.pi / 4)
    assert r.label == "Q--" and r.prefactor_power == -0.5
    assert r.dominant == pytest.approx(e_alpha(math.pi / 4) @ r.saddle)


def test_boundary_and_angle_errors():
    with pytest.raises(BoundaryRegimeError):
        decay_exponent(M1(), math.pi / 4)
    for a in (0.0, math.pi / 2, -0.1):
        with pytest.raises(UnsupportedAngleError):
            theta_alpha(M1(), a)


def test_sweep_transitions(tmp_path):
    alphas = [0.2, 0.4, math.atan(0.5), 0.6, 1.2]
    reps = regime_sweep(M2(), alphas)
    assert [r.label for r in reps] == ["Q-+", "Q-+", "Boundary", "Q+-", "Q+-"]
    sweep_to_csv(reps, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().count("\n") == 6

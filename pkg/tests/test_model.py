from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadkernel import errors
from quadkernel.model import (D1, M1, M2, M3, ContinuousModel, DiscreteModel, load_model,
                              validate_continuous, validate_discrete)


def test_reference_models_stable():
    for m in (M1(), M2(), M3()):
        assert validate_continuous(m).stable
    assert M1().orthogonal and not ContinuousModel(np.eye(2), [-1, -1], [[1, 0.2], [0, 1]]).orthogonal


def test_non_positive_definite_sigma_rejected():
    with pytest.raises(errors.ModelInvalidError):
        ContinuousModel([[1, 2], [2, 1]], [-1, -1])


def test_marginal_drift_flagged():
    rep = validate_continuous(ContinuousModel(np.eye(2), [-1, 0.0]))
    assert rep.marginal and not rep.stable


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-0.9, 0.9))
def test_identity_reflection_stability_iff_negative_drift(m1, m2, rho):
    model = ContinuousModel([[1, rho], [rho, 1]], [m1, m2])
    rep = validate_continuous(model)
    if abs(m1) > 1e-12 and abs(m2) > 1e-12:
        assert rep.stable == (m1 < 0 and m2 < 0)


@given(st.floats(0.5, 2), st.floats(-0.5, 0.5), st.floats(0.5, 2), st.floats(-0.5, 0.5),
       st.floats(-2, 2), st.floats(-2, 2))
def test_stability_invariant_under_axis_swap(r11, r12, r22, r21, m1, m2):
    model = ContinuousModel(np.eye(2), [m1, m2], [[r11, r12], [r21, r22]])
    assert validate_continuous(model).stable == validate_continuous(model.swapped()).stable


def test_load_roundtrip_continuous_and_discrete():
    for m in (M3(), D1()):
        again = load_model(json.dumps(m.to_dict()))
        assert again.to_dict() == m.to_dict()


def test_load_rejects_unknown_field_with_path():
    doc = M1().to_dict() | {"colour": "red"}
    with pytest.raises(errors.ConfigError):
        load_model(doc)
    with pytest.raises(errors.ConfigError) as exc:
        load_model({"type": "continuous", "sigma": [[1, 0], [0, 1]]})
    assert exc.value.path == "mu"


def test_load_malformed_json():
    with pytest.raises(errors.ConfigError, match="parse"):
        load_model("{not json")


def test_discrete_family_must_sum_to_one():
    with pytest.raises((errors.ModelInvalidError, errors.ConfigError)):
        validate_discrete(DiscreteModel({(1, 0): 0.5, (0, 1): 0.2}))


def test_d1_is_simple_with_negative_drift():
    rep = validate_discrete(D1())
    assert rep.simple
    assert rep.drift[0] == pytest.approx(-0.3) and rep.drift[1] == pytest.approx(-0.3)
    assert D1().family("hwall")[(0, 0)] == pytest.approx(0.4)

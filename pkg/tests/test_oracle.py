from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from quadkernel.errors import ConfigError, DomainError
from quadkernel.model import D1, M1, M3, ContinuousModel
from quadkernel.oracle import (SimConfig, empirical_laplace, fit_decay_rate, lattice_stationary,
                               load_accumulators, rate_mle, simulate_srbm)


# --------------------------------------------------------------------- lattice

def test_lattice_product_chain_componentwise():
    N = 60
    sol = lattice_stationary(D1(), N)
    g = 0.25 ** np.arange(N + 1)
    g /= g.sum()
    exact = np.outer(g, g)
    assert np.max(np.abs(sol.pi / exact - 1)) < 1e-11
    assert sol.residual < 1e-15
    assert sol.wall_mass < 1e-30
    assert sol.generating_function(1.0, 1.0) == pytest.approx(1.0, abs=1e-14)


def test_lattice_balance_non_product():
    m = D1(hwall={(1, 0): .1, (-1, 0): .5, (0, 1): .1, (0, 0): .3})
    sol = lattice_stationary(m, 40)
    assert sol.residual < 1e-15 and np.all(sol.pi > 0)
    with pytest.raises(DomainError):
        lattice_stationary(m, 5)


# --------------------------------------------------------------------- fitting

def test_fit_recovers_rate_and_half_power():
    r = np.linspace(2, 12, 60)
    v = 3.0 * np.exp(-1.7 * r) * r ** -0.5
    fit = fit_decay_rate(r, v)
    assert fit.slope == pytest.approx(-1.7, abs=1e-10)
    assert fit.log_coef == pytest.approx(-0.5, abs=1e-9)
    plain = fit_decay_rate(r, 2 * np.exp(-0.9 * r), log_term=False)
    assert plain.slope == pytest.approx(-0.9, abs=1e-12)
    with pytest.raises(DomainError):
        fit_decay_rate(r[:5], v[:5])


def test_rate_mle_on_poisson_counts():
    rng = np.random.default_rng(0)
    r = (np.arange(40) + 0.5) * 0.1
    lam = 5e4 * np.exp(-2.3 * r)
    counts = rng.poisson(np.tile(lam, (8, 1)))
    est = rate_mle(r, counts, (1.0, 3.5))
    assert abs(est.rate - 2.3) < 4 * est.stderr + 1e-3
    assert est.counts > 0


# ------------------------------------------------------------------- simulator

def _cfg(**kw):
    base = dict(dt=1e-2, horizon=40.0, burn_in=2.0, replicas=4, seed=5, thetas=((-1, -1), (-0.5 + 1j, -1)))
    base.update(kw)
    return SimConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(dt=-1)
    with pytest.raises(ConfigError):
        SimConfig(scheme="milstein")
    with pytest.raises(ConfigError):
        simulate_srbm(ContinuousModel(np.eye(2), [-1, -1], [[1, .2], [.1, 1]]), _cfg(scheme="bridge"))


def test_determinism_and_stream_independence(tmp_path):
    a = simulate_srbm(M3(), _cfg())
    b = simulate_srbm(M3(), _cfg())
    more = simulate_srbm(M3(), _cfg(replicas=6))
    for f in ("mom_re", "mom_im", "hist", "ltime", "raw"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
        assert np.array_equal(getattr(a, f), getattr(more, f)[:4])
    a.save(tmp_path / "acc")
    c = load_accumulators(tmp_path / "acc")
    assert np.array_equal(c.mom_re, a.mom_re) and c.config == a.config
    merged = a.merge(simulate_srbm(M3(), _cfg(seed=6)))
    assert merged.replicas == 8


def test_laplace_interface():
    acc = simulate_srbm(M3(), _cfg())
    assert empirical_laplace(acc, (0, 0)) == (1.0, 0.0)
    m, se = empirical_laplace(acc, (-0.5 + 1j, -1))
    assert isinstance(m, complex) and se > 0
    with pytest.raises(DomainError):
        empirical_laplace(acc, (-2, -2))
    with pytest.raises(DomainError):
        simulate_srbm(M3(), _cfg(thetas=((0.5, -1),)))


def test_m1_bridge_matches_product_form():
    acc = simulate_srbm(M1(), SimConfig(dt=2e-3, horizon=2e3, burn_in=20, replicas=8, seed=17,
                                        thetas=((-1, -1),)))
    assert acc.scheme == "bridge"
    m, se = empirical_laplace(acc, (-1, -1))
    assert abs(m - 4 / 9) < 3 * se
    rate, rse = acc.local_time_rate()
    assert np.all(np.abs(rate - 1) < 3 * rse + 0.01)


def test_euler_weak_error_decreases():
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        acc = simulate_srbm(M1(), SimConfig(dt=dt, horizon=4e3, burn_in=50, replicas=8, seed=1,
                                            thetas=((-1, -1),), scheme="euler"))
        errs.append(empirical_laplace(acc, (-1, -1))[0] - 4 / 9)
    assert errs[0] > errs[1] > errs[2] > 0
    # O(sqrt(dt)): a factor 4 in dt is roughly a factor 2 in the error
    assert 1.4 < errs[0] / errs[2] < 3.0


def _c4(n):
    return math.sqrt(2 / (n - 1)) * math.exp(math.lgamma(n / 2) - math.lgamma((n - 1) / 2))


def test_standard_error_scaling():
    acc = simulate_srbm(M1(), SimConfig(dt=1e-2, horizon=50, burn_in=5, replicas=256, seed=9,
                                        thetas=((-1, -1),), scheme="euler"))
    per = acc.mom_re[:, 0] / acc.steps
    scaled = {}
    for n in (4, 16, 64):
        groups = per.reshape(-1, n)
        se = groups.std(axis=1, ddof=1) / _c4(n) / math.sqrt(n)
        scaled[n] = se.mean() * math.sqrt(n)
        # the estimator's own stderr on a sub-accumulator agrees with the direct one
        sub = dataclasses.replace(acc, **{f: getattr(acc, f)[:n] for f in
                                          ("steps", "outside", "rejected", "mom_re", "mom_im", "raw",
                                           "ltime", "hist", "ray_hist")})
        assert empirical_laplace(sub, (-1, -1))[1] == pytest.approx(groups[0].std(ddof=1) / math.sqrt(n))
    ref = scaled[64]
    assert all(abs(v / ref - 1) < 0.2 for v in scaled.values())


def test_density_cells_and_ray_profile():
    acc = simulate_srbm(M1(), _cfg(ray_alpha=math.pi / 4))
    dens, se, centers = acc.density_cells()
    h = centers[1] - centers[0]
    assert dens.sum() * h * h == pytest.approx(1 - acc.outside.sum() / acc.steps.sum(), rel=1e-12)
    r, prof, pse = acc.ray_profile()
    assert r.shape == prof.shape == pse.shape
    with pytest.raises(DomainError):
        simulate_srbm(M1(), _cfg()).ray_profile()


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("QK_THREADS", "1")
    a = simulate_srbm(M1(), _cfg())
    monkeypatch.setenv("QK_THREADS", "4")
    b = simulate_srbm(M1(), _cfg())
    assert np.array_equal(a.mom_re, b.mom_re)
    monkeypatch.setenv("QK_THREADS", "many")
    with pytest.raises(ConfigError):
        simulate_srbm(M1(), _cfg())

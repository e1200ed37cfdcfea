import math

import numpy as np
import pytest

import superrad as sr


def test_shape_mu_limits():
    assert sr.shape_mu(1e-4) == pytest.approx(1.0, abs=1e-6)
    ks = 100.0
    assert sr.shape_mu(ks) * 8 * ks**2 / 3 == pytest.approx(1.0, abs=1e-3)


def test_profile_and_delay():
    n, mu = 40, 0.3
    assert sr.gamma_profile(n, 1.0, mu, 0.0) == pytest.approx(n)
    t_d, at_origin = sr.delay_time(n, 1.0, mu)
    assert not at_origin
    assert t_d == pytest.approx(math.log(n * mu) / (1 + n * mu), rel=1e-12)
    t = np.linspace(0.0, 5.0, 11)
    assert sr.gamma_profile(n, 1.0, mu, t).shape == t.shape


def test_cloud_is_reproducible():
    a = sr.sample_cloud(20, 0.5, 7)
    b = sr.sample_cloud(20, 0.5, 7)
    assert a.shape == (20, 3)
    assert np.array_equal(a, b)


def test_couplings_symmetric():
    pos = sr.sample_cloud(6, 0.3, 1)
    (g,) = sr.couplings(pos)
    assert g.shape == (6, 6)
    assert np.allclose(g, g.T)
    assert np.all(np.diag(g) == 0)


def test_eigenmode_trace():
    pos = sr.sample_cloud(10, 0.4, 3)
    ev = sr.decay_spectrum(pos)
    assert sum(e.real for e in ev) == pytest.approx(10 / 2, rel=1e-8)
    assert sr.max_decay_rate(pos) >= 1.0


def test_basis_count():
    assert sr.count_basis_pairs(10, 2) == 184756


def test_solvers_agree_for_two_atoms():
    pos = np.array([[0.0, 0.0, 0.0], [0.3, 0.0, 0.0]])
    ex = sr.evolve_exact(pos, stop_fraction=0.5)
    co = sr.evolve_correlations(pos, stop_fraction=0.5)
    k = min(len(ex["t"]), len(co["t"]), 20)
    assert np.allclose(ex["n_excited"][:k], co["n_excited"][:k], atol=1e-3 * 2)


def test_config_round_trip():
    text = """
name: py
solver: [correlation]
transitions: [{label: g, gamma: 1, lambda: 1}]
n_atoms: 4
lambda3_density: 10
ensemble: {n_runs: 2, base_seed: 1}
time: {dt: 0.05}
"""
    assert sr.validate_config(text) == []
    (point,) = sr.run_config(text)
    assert point["correlation"]["n_runs"] == 2
    assert point["correlation"]["headline"] > 0
    issues = sr.validate_config(text.replace("n_atoms: 4", "n_atoms: -1"))
    assert any(field == "n_atoms" for field, _ in issues)


def test_capacity_error():
    with pytest.raises(sr.CapacityError):
        sr.evolve_exact(sr.sample_cloud(40, 1.0, 1))

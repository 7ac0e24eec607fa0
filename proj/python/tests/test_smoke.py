import json
import math

import numpy as np
import pytest

import entropywalks as ew


def test_subset_density_basics():
    mu = ew.SubsetDensity.make(3, 2, [([0, 1], 1.0), ([0, 2], 2.0), ([1, 2], 1.0)])
    assert len(mu) == 3
    assert mu.probability([0, 2]) == pytest.approx(0.5)
    assert ew.gen_poly_eval(ew.SubsetDensity.uniform(3, 2), [2, 1, 1]) == pytest.approx(5 / 3)
    assert sum(ew.marginals(mu)) == pytest.approx(1.0)


def test_errors_surface_as_exceptions():
    with pytest.raises(ew.Error):
        ew.SubsetDensity.make(3, 2, [([0, 1], -1.0)])


def test_kernels_and_spectra():
    folded = ew.r_fold(ew.SubsetDensity.uniform(4, 2), 2)
    top = ew.down_up_kernel(folded, 3).dense()
    assert np.array_equal(top, np.eye(top.shape[0]))
    assert ew.spectral_gap(ew.down_up_kernel(folded, 2)) > 0

    k = ew.glauber_kernel(ew.IsingModel.curie_weiss(4, 0.5))
    p = k.dense()
    pi = np.array(k.stationary)
    np.testing.assert_allclose(pi @ p, pi, atol=1e-12)


def test_dual_and_certificates():
    d = ew.min_entropy_dual(ew.SubsetDensity.uniform(3, 2), [0.5, 0.5, 0.0])
    assert d["value"] == pytest.approx(math.log(3), abs=1e-8)
    cert = ew.entropic_independence_certify(ew.SubsetDensity.uniform(3, 2), 1.0)
    assert cert["verdict"] != "falsified"
    bad = ew.entropic_independence_certify(ew.r_fold(ew.SubsetDensity.uniform(4, 2), 2), 1.0, seed=4)
    assert bad["verdict"] == "falsified"


def test_kappa_and_contraction():
    kf = ew.kappa_closed_form(4, 2, 0.5)
    assert kf["integer_form"] == pytest.approx(1 / 6)
    r = ew.contraction_coefficient(ew.r_fold(ew.SubsetDensity.uniform(4, 2), 2), 2, alpha=0.5, seed=1)
    assert r["coefficient"] <= 1 - 1 / 6 + 1e-8


def test_ising_checks():
    u = np.array([0.5, 0.3, -0.4])
    rep = ew.rank_one_flc_certify(u, np.zeros(3), shifts=20, seed=3)
    assert rep["max_hessian_eigenvalue"] <= 1e-8
    con = ew.rank_one_contraction_check(u, np.zeros(3), trials=50, seed=3)
    assert con["holds"]
    ex = ew.exchange_check(ew.IsingModel.curie_weiss(6, 0.5))
    assert ex["max_log_ratio"] <= ex["log_bound"]
    r = ew.dobrushin_matrix(ew.IsingModel.make_rank_one(u, np.zeros(3)))
    assert r[0, 1] <= math.tanh(abs(u[0] * u[1])) + 1e-12


def test_walk_is_reproducible():
    mu = ew.SubsetDensity.uniform(5, 2)
    a = ew.simulate_walk(mu, 1, [0, 1], 100, 7)
    b = ew.simulate_walk(mu, 1, [0, 1], 100, 7)
    assert a == b and len(a) == 101


def test_run_experiment(tmp_path):
    cfg = {"kind": "certify", "seed": 1, "input": {"generator": "uniform", "n": 3, "k": 2},
           "params": {"alpha": 1.0}}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    r = ew.run_experiment(str(path), out=str(tmp_path / "out"))
    assert r["summary"]["verdict"] == "certified-exact"
    assert not r["falsified"]

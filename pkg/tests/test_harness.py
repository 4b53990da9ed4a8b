import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparsemoments import DiscreteMeasure, FunctionFamily, moments, tv_norm
from sparsemoments import harness
from sparsemoments.harness import (
    ExperimentConfig,
    counterexample,
    gen_delta_spaced_jordan,
    gen_sparse_instance,
    make_rng,
)


def test_sparse_instance_examples():
    x, supp = gen_sparse_instance(7, 7, make_rng(1))
    assert supp.tolist() == list(range(7)) and np.all(x > 0)
    x, supp = gen_sparse_instance(7, 0, make_rng(1))
    assert supp.size == 0 and not np.any(x)
    a = gen_sparse_instance(50, 5, make_rng(4, 2, 9))
    b = gen_sparse_instance(50, 5, make_rng(4, 2, 9))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    with pytest.raises(ValueError):
        gen_sparse_instance(3, 4, make_rng(0))


def test_streams_are_independent():
    a = make_rng(0, 1, 2).random(4)
    b = make_rng(0, 2, 1).random(4)
    c = make_rng(1, 1, 2).random(4)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)


def test_chi_square_moments():
    z = harness.chi2_1(make_rng(3), 200_000)
    assert z.min() >= 0
    assert z.mean() == pytest.approx(1.0, abs=0.02)
    assert z.var() == pytest.approx(2.0, abs=0.06)


def test_delta_spaced_examples():
    j = gen_delta_spaced_jordan(2, 0.5, make_rng(0))
    x = j.locations
    assert x[1] - x[0] == pytest.approx(0.5, abs=1e-15)
    assert len(j.plus) == 1 and len(j.minus) == 1
    j = gen_delta_spaced_jordan(10, 1 / 15, make_rng(0))
    assert len(j) == 10
    with pytest.raises(ValueError):
        gen_delta_spaced_jordan(3, 0.5, make_rng(0))


@given(st.integers(2, 12), st.integers(13, 60), st.integers(0, 10_000))
def test_delta_spaced_properties(s, m, seed):
    delta = 1 / m
    j = gen_delta_spaced_jordan(s, delta, make_rng(seed))
    x = j.locations
    gaps = np.diff(x)
    assert x.min() >= 0 and x.max() < 1
    assert gaps.min() >= delta * (1 - 1e-12)
    assert np.any(np.isclose(gaps, delta, rtol=1e-12, atol=1e-15))
    assert 0 < len(j.plus) < s


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig(n=10, s=6, p=100)
    with pytest.raises(ValueError):
        ExperimentConfig(n=41, s=20, p=10)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 3, "family": {"kind": "power"}, "p": 80, "n": 9, "s": 4}))
    cfg = ExperimentConfig.from_json(path)
    assert cfg.build_family() == FunctionFamily.power(9)


def test_err_sweep_empty_and_single_cell():
    rep = harness.run_err_sweep(100, 0, 0)
    assert rep.max_err is None and rep.meta["max_err_undefined"]
    rep = harness.run_err_sweep(100, 10, 0, s_max=1)
    assert rep.cells[0].params == {"s": 1, "n": 3, "p": 100}
    assert rep.max_err <= 1e-5


def test_reports_are_deterministic():
    a = harness.run_err_sweep(40, 3, 5, s_max=6)
    b = harness.run_err_sweep(40, 3, 5, s_max=6, workers=2)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    f1 = harness.run_figure2(2, trials=3, deltas=(1 / 20,), ns=(40, 80))
    f2 = harness.run_figure2(2, trials=3, deltas=(1 / 20,), ns=(40, 80), workers=2)
    assert json.dumps(f1.to_dict()) == json.dumps(f2.to_dict())


def test_report_files(tmp_path):
    rep = harness.run_err_sweep(30, 2, 0, s_max=3)
    rep.write(tmp_path, lambda p: p.write_text("<svg xmlns='http://www.w3.org/2000/svg'/>"))
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["name"] == "err-sweep" and len(data["cells"]) == 3
    rows = list(csv.DictReader((tmp_path / "cells.csv").open()))
    assert [int(r["s"]) for r in rows] == [1, 2, 3]
    assert (tmp_path / "plot.svg").exists()


def test_figure1_presets():
    rep, res, grid, x0 = harness.run_figure1(preset="s10")
    assert rep.passed
    rep, res, grid, x0 = harness.run_figure1(preset="s150")
    assert rep.checks["l1_over_p"]["passed"]
    rep, *_ = harness.run_figure1(preset="s50")
    assert "support_contained" not in rep.checks
    assert "max_coordinate_error" in rep.cells[0].extra


def test_figure2_small_n_is_hard():
    rep = harness.run_figure2(0, trials=20, deltas=(1 / 15,), ns=(20, 100))
    lo, hi = rep.cells
    assert lo.params["n"] == 20 and lo.rate < hi.rate


def test_counterexample_examples():
    ce = counterexample(1, 2, 0, sigma=DiscreteMeasure.from_atoms([(0.0, 1.0)], (-1, 1)))
    assert ce.mu.size == 3
    assert ce.tv_mu < ce.tv_sigma
    assert ce.moment_gap <= 1e-8


@given(st.integers(1, 5), st.integers(0, 4), st.integers(0, 1000))
def test_counterexample_properties(s, extra, seed):
    n = 2 * s + extra
    ce = counterexample(s, n, seed)
    assert ce.tv_mu < ce.tv_sigma
    assert ce.moment_gap <= 1e-8
    assert not ce.family.is_homogeneous
    cs = moments(ce.sigma, ce.family).values
    cm = moments(ce.mu, ce.family).values
    assert np.linalg.norm(cs - cm) <= 1e-8 * np.linalg.norm(cs)
    assert tv_norm(ce.mu) == pytest.approx(ce.tv_mu)


def test_counterexample_weight_levels():
    ce = counterexample(2, 5, 11)
    # |mu| = r |nu| and |sigma| = r (|nu| + 1), so r = |sigma| - |mu|
    r = ce.tv_sigma - ce.tv_mu
    w = ce.family.evaluate_matrix(ce.sigma.locations, 0)[0]
    np.testing.assert_allclose(w, max(r, min(r, 1) / 2), rtol=1e-12)
    np.testing.assert_allclose(ce.family.evaluate_matrix(ce.mu.locations, 0)[0], 1.0, rtol=1e-12)


def test_counterexample_rejects_bad_sizes():
    with pytest.raises(ValueError):
        counterexample(3, 5, 0)


def test_soundness_grid_drops_near_duplicates():
    base = np.linspace(-1, 1, 101)
    g = harness.grid_with_support(base, [-0.4, 0.3])
    assert np.sum(np.abs(g + 0.4) < 1e-9) == 1 and -0.4 in g
    assert g.size == 101

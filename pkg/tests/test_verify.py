import json

import numpy as np
import pytest

from affine_kit import (SimConfig, martingale_check, mc_transform_check,
                        regularity_fd_check, run_suite)
from affine_kit.verify import (chain_oracle_report, default_bias_allowance,
                               range_invariant_report, regularity_report,
                               semiflow_report, transform_conservation_report,
                               wishart_riccati_report,
                               wishart_selfconsistency_report)

R_CHAIN_M1 = 0.6321205588285577


def test_default_bias_allowance(brownian, chain2, interval, wishart1):
    cfg = SimConfig(dt=0.01, horizon=1.0, n_paths=10, seed=0)
    gil = SimConfig(dt=0.01, horizon=1.0, n_paths=10, seed=0, scheme="gillespie_exact")
    assert default_bias_allowance(chain2, gil) == 0.0
    assert default_bias_allowance(brownian, cfg) == 0.0   # constant coefficients
    assert default_bias_allowance(chain2, cfg) == 0.1     # state-dependent jumps
    assert default_bias_allowance(interval, cfg) == 0.1   # linear drift
    assert default_bias_allowance(wishart1, cfg) == 0.1   # linear diffusion


def test_mc_transform_check_brownian(brownian):
    cfg = SimConfig(dt=0.01, horizon=1.0, n_paths=2000, seed=42)
    rep = mc_transform_check(brownian, np.zeros(1), 1.0, np.array([1j]), cfg)
    assert rep.passed and rep.bounded_ok
    assert rep.bias_allowance == 0.0
    assert rep.n_failed == 0
    assert abs(rep.reference - np.exp(-0.5)) < 1e-9
    assert abs(rep.estimate - rep.reference) <= 3.0 * max(rep.stderr_re, rep.stderr_im)
    d = rep.to_dict()
    assert set(d) == {"estimate", "stderr", "reference", "z_score", "bias_allowance",
                      "passed", "bounded_ok", "n_paths", "n_failed", "dt", "seed",
                      "scheme"}
    json.dumps(d)


def test_mc_transform_check_overrides_horizon(brownian):
    # cfg horizon differs from the requested t: the check runs at t
    cfg = SimConfig(dt=0.01, horizon=5.0, n_paths=1000, seed=1)
    rep = mc_transform_check(brownian, np.zeros(1), 0.5, np.array([1j]), cfg)
    assert abs(rep.reference - np.exp(-0.25)) < 1e-9
    assert rep.passed


def test_mc_transform_check_threads_identical(chain2):
    cfg = SimConfig(dt=0.01, horizon=1.0, n_paths=3000, seed=7, scheme="gillespie_exact")
    a = mc_transform_check(chain2, np.zeros(1), 1.0, np.array([-1.0 + 0j]), cfg, threads=1)
    b = mc_transform_check(chain2, np.zeros(1), 1.0, np.array([-1.0 + 0j]), cfg, threads=4)
    assert a.to_dict() == b.to_dict()


def test_martingale_check_brownian(brownian):
    cfg = SimConfig(dt=0.01, horizon=1.0, n_paths=4000, seed=42)
    rep = martingale_check(brownian, np.zeros(1), 1.0, np.array([1j]), 5, cfg)
    assert rep.passed
    assert len(rep.grid) == 5
    assert rep.grid[0] == 0.0 and rep.grid[-1] == 1.0
    # at t=0 the value is the deterministic full transform
    assert rep.stderrs[0] == 0.0
    assert abs(rep.means[0] - np.exp(-0.5)) < 1e-9
    json.dumps(rep.to_dict())


def test_martingale_check_deterministic_model(interval):
    # all paths coincide: stderr collapses, the Euler gap sits inside 10*dt
    cfg = SimConfig(dt=0.01, horizon=1.0, n_paths=50, seed=3)
    rep = martingale_check(interval, np.array([0.5]), 1.0, np.array([1.0 + 0j]), 5, cfg)
    assert rep.passed
    assert rep.bias_allowance == 0.1
    assert max(rep.stderrs) <= 1e-12
    assert 0.0 < rep.max_drift <= 0.1


def test_martingale_check_blow_up(wishart1):
    cfg = SimConfig(dt=0.01, horizon=1.0, n_paths=100, seed=0)
    from affine_kit import BlowUpError
    with pytest.warns(UserWarning, match="outside U"):
        with pytest.raises(BlowUpError):
            martingale_check(wishart1, np.ones(1), 1.0, np.array([1.0 + 0j]), 5, cfg)


def test_regularity_fd_check_values(brownian, wishart1, chain2):
    rep = regularity_fd_check(brownian, np.array([1j]), 1e-4)
    assert rep["F_err"] < 1e-5
    assert rep["R_err"] == 0.0  # R vanishes identically: psi never moves
    rep = regularity_fd_check(wishart1, np.array([-1.0 + 0j]), 1e-4)
    assert rep["F_err"] < 1e-3 and rep["R_err"] < 1e-3
    rep = regularity_fd_check(chain2, np.array([-1.0 + 0j]), 1e-4)
    assert rep["F_err"] < 1e-3 and rep["R_err"] < 1e-3
    assert abs(chain2.eval_R(np.array([-1.0 + 0j]))[0] - R_CHAIN_M1) < 1e-14


def test_regularity_fd_check_h_range(brownian):
    for h in (1e-7, 0.1):
        with pytest.raises(ValueError):
            regularity_fd_check(brownian, np.array([1j]), h)


def test_wishart_riccati_report_small():
    rep = wishart_riccati_report(n_u=2, seed=1)
    assert rep["passed"]
    assert rep["max_rel_err"] <= 1e-6


def test_wishart_selfconsistency_report_small():
    rep = wishart_selfconsistency_report(n_samples=4, seed=1)
    assert rep["passed"]


def test_semiflow_report_small():
    rep = semiflow_report(n_pairs=2, seed=1)
    assert rep["passed"]
    assert set(rep["families"]) == {"brownian", "wishart1d", "interval", "chain"}


def test_chain_oracle_report_other_k():
    assert chain_oracle_report(k=1)["passed"]
    assert chain_oracle_report(k=3)["passed"]


def test_transform_conservation_report():
    rep = transform_conservation_report()
    assert rep["passed"]
    for entry in rep["models"].values():
        assert entry["mass_defect"] <= 1e-12
        assert entry["modulus"] <= 1.0 + 1e-12


def test_regularity_report():
    rep = regularity_report()
    assert rep["passed"]
    for fam in rep["families"].values():
        assert fam["F_err"][-1] <= 1e-3
        assert fam["R_err"][-1] <= 1e-3


def test_range_invariant_report_small():
    rep = range_invariant_report(n_u=5, seed=1)
    assert rep["passed"]


def test_run_suite_unknown():
    with pytest.raises(ValueError, match="unknown suite"):
        run_suite("everything")


def test_run_suite_mc_bundle():
    bundle = run_suite("mc", seed=42, n_paths=500)
    assert bundle["suite"] == "mc" and bundle["seed"] == 42
    assert bundle["passed"]
    assert set(bundle["reports"]) == {"mc_transform", "martingale"}
    text = json.dumps(bundle, sort_keys=True)
    # reports carry no wall-clock fields: identical runs serialize identically
    again = json.dumps(run_suite("mc", seed=42, n_paths=500), sort_keys=True)
    assert text == again

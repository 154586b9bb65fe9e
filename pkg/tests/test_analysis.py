"""Closed-form analysis: recursions, thresholds, counts, bounds, schedules."""

import math
from fractions import Fraction

import numpy as np
import pytest

from encsim import analysis
from encsim.noise import EnergyModel, NoiseSpec, xor_chain_error_prob


def test_de_step_zero_noise_fixed_point():
    params = analysis.DEParams(d_v=6, d_c=12)
    assert analysis.de_step(0.0, params) == 0.0


def test_de_step_monotone():
    params = analysis.DEParams(d_v=6, d_c=12, p_xor=2.6e-4, p_maj=1e-3)
    grid = np.linspace(0.0, 0.05, 60)
    vals = [analysis.de_step(p, params) for p in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_de_step_upper_dominates():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        d_v = int(rng.integers(4, 9))
        d_c = int(rng.integers(d_v, 17))
        params = analysis.DEParams(d_v=d_v, d_c=d_c,
                                   p_xor=float(rng.uniform(0, 0.01)),
                                   p_maj=float(rng.uniform(0, 0.01)))
        p = float(rng.uniform(0, 0.4))
        assert analysis.de_step_upper(p, params) >= analysis.de_step(p, params)


def test_de_step_original_tie_rule():
    params = analysis.DEParams(d_v=6, d_c=12, tie_rule="original", p0=0.01)
    assert 0.0 <= analysis.de_step(0.01, params) < 0.5
    bad = analysis.DEParams(d_v=6, d_c=12, tie_rule="original")
    with pytest.raises(ValueError):
        analysis.de_step(0.01, bad)
    with pytest.raises(ValueError):
        analysis.DEParams(d_v=6, d_c=12, tie_rule="coin")
    with pytest.raises(ValueError):
        analysis.de_step(0.6, params)


def test_de_trajectory_converges():
    params = analysis.DEParams(d_v=6, d_c=12, p_xor=2.6e-4, p_maj=1e-3)
    traj, converged = analysis.de_trajectory(0.003, params)
    assert converged and traj[-1] < traj[0]


def test_p_thr_values():
    assert abs(analysis.p_thr(6, 12, 2) - 1.0352166562499028e-3) < 1e-12
    assert abs(analysis.p_thr(4, 8, 2) - 1.0 / 3456) < 1e-15
    with pytest.raises(ValueError):
        analysis.p_thr(3, 6, 2)  # d = 1: exponent undefined


def test_p_reg():
    pt = analysis.p_thr(6, 12, 2)
    assert analysis.p_reg(2.6e-4, 2, pt) == 2.6e-4 + 3 * pt


def test_check_thm1_report():
    noise = NoiseSpec(p_and=1e-4, p_xor=1e-4, p_maj=1e-4)
    rep = analysis.check_thm1(noise, 6, 12, 2, L=600, N=1200)
    assert rep["p_thr"] == analysis.p_thr(6, 12, 2)
    assert rep["p_maj_bound_pass"] and rep["p_xor_bound_pass"]
    assert rep["predicted_output_bound"] == noise.p_maj + rep["p_thr"] / 2
    rows = rep.to_rows()
    assert {"report", "quantity", "value"} == set(rows[0])
    assert "p_thr" in rep.to_text()


def test_ops_closed_forms_exact_rationals():
    rep = analysis.ops_closed_forms(600, K=600, N=1200, d_v=6, d_T=2)
    assert rep["tree_per_bit"] == Fraction(28764)
    rep = analysis.ops_closed_forms(2100, K=2000, N=4000, P=2000, d_s=8)
    assert rep["staged_per_bit"] == Fraction(5700)
    assert rep["uncoded_per_bit"] == Fraction(2 * 2100 - 1)


def test_kl_and_lambda_star():
    # direct evaluation of the divergence at the doubling point
    expect = 0.02 * math.log(2.0) + 0.98 * math.log(0.98 / 0.99)
    assert abs(analysis.lambda_star(0.01) - expect) < 1e-15
    assert analysis.kl_bernoulli(0.3, 0.3) == 0.0
    assert analysis.kl_bernoulli(0.4, 0.1) > 0.0
    with pytest.raises(ValueError):
        analysis.kl_bernoulli(0.0, 0.5)
    with pytest.raises(ValueError):
        analysis.lambda_star(0.5)


def test_thm3_worked_example():
    rep = analysis.thm3_blocks(N=2000, L=1000, d_s=14, d_c=18, R=0.5,
                               alpha0=5.1e-4, theta=0.15)
    assert rep["denominator"] == 24.0
    assert abs(rep["lambda"] - 0.15 * 5.1e-4 / 48.0) < 1e-18
    # the in-text constant of the worked example divides by 54 instead
    assert abs(rep["lambda_text_constant"] - 0.15 * 5.1e-4 / 54.0) < 1e-18
    assert rep["block_bound"] == 3.0 * 1000 * math.exp(
        -rep["lambda_star"] * 2000)


def test_thm4_worked_value():
    rep = analysis.thm4_lower_bound(L=1000, K=1000, D=2, eps=0.01, p_tar=1e-6)
    assert abs(rep["per_bit_lower_bound"] - 1.3038) < 1e-4
    assert rep["wire_bound_T_k"] == math.log(1e6) / math.log(200)
    with pytest.raises(ValueError):
        analysis.thm4_lower_bound(10, 10, 2, 3.0, 1e-6)


def test_uncoded_ber_matches_xor_chain():
    for L in (1, 2, 8, 31):
        p_and, p_xor = 0.01, 0.004
        chain = [p_and] * L + [p_xor] * (L - 1)
        assert abs(analysis.uncoded_ber(L, p_and, p_xor)
                   - xor_chain_error_prob(chain)) < 1e-15


def test_uncoded_energy_bound():
    model = EnergyModel("exponential", 1.0)
    L, p_tar = 100, 1e-6
    assert abs(analysis.uncoded_energy_bound(model, L, p_tar)
               - L * math.log(L / (2 * p_tar))) < 1e-9
    # degenerate target: per-gate probability is clamped below 1/2
    assert analysis.uncoded_energy_bound(model, 2, 0.9) > 0


def test_l_vs_worked_value_and_property():
    assert analysis.l_vs(1e-6, 5.1e-4, 0.15) == 80
    for p_tar, alpha0, theta in ((1e-6, 5.1e-4, 0.15), (1e-3, 0.05, 0.3)):
        n = analysis.l_vs(p_tar, alpha0, theta)
        # defining property: n halving steps suffice, n-1 do not
        assert alpha0 * alpha0 * (1 - theta / 2) ** n <= p_tar * alpha0
        assert alpha0 * alpha0 * (1 - theta / 2) ** (n - 1) > p_tar * alpha0
    with pytest.raises(ValueError):
        analysis.l_vs(0.1, 0.01, 0.3)
    with pytest.raises(ValueError):
        analysis.l_vs(1e-6, 5.1e-4, 0.15, variant="mystery")
    assert analysis.l_vs(1e-6, 5.1e-4, 0.15, variant="appendix-f") >= 80


def test_lambda_schedule_ratios():
    alpha0, theta, d_c, R = 5.1e-4, 0.15, 18, 0.5
    first = analysis.lambda_first_phase(alpha0, theta, d_c, R)
    l1 = analysis.lambda_schedule(1, alpha0, theta, d_c, R)
    l2 = analysis.lambda_schedule(2, alpha0, theta, d_c, R)
    assert abs(l1 / first - 0.5) < 1e-12
    assert abs(l2 / l1 - (1 - theta / 2)) < 1e-12
    with pytest.raises(ValueError):
        analysis.lambda_schedule(0, alpha0, theta, d_c, R)


def test_stage_energy_and_per_bit():
    model = EnergyModel("exponential", 1.0)
    lam = 1e-3
    N, P = 100, 50
    assert abs(analysis.stage_energy(model, lam, N, P)
               - (2 * N + N + P) * model.energy(lam)) < 1e-9


def test_corollary1_scaling_keys():
    model = EnergyModel("polynomial", 1.0)
    rep = analysis.corollary1_scaling(model, 10**6, 5 * 10**5, 10**6, 1e-9)
    assert set(rep.values) == {"uncoded", "tree_coded", "voltage_scaled"}
    with pytest.raises(ValueError):
        analysis.corollary1_scaling(model, 10, 5, 10, 2.0)


def test_thm6_worked_example_and_round_trip():
    # ln(3e12) / 0.003914 = 7340.22, so the minimal length rounds up to 7341
    rep = analysis.thm6_codelength(1000, 1e-9, 0.0039140)
    assert rep["N_min"] == 7341
    assert rep["N_min"] == math.ceil(rep["N_exact"] - 1e-6)
    assert rep["noiseless_iterations"] == math.ceil(2.0 * math.log(7341))
    ls = analysis.lambda_star(0.01)
    for n0 in (100, 7340, 12345):
        p = 3.0 * 1000 * math.exp(-ls * n0)
        back = analysis.thm6_codelength(1000, p, ls)
        assert back["N_min"] == n0
    with pytest.raises(ValueError):
        analysis.thm6_codelength(1000, 1e-9, 0.0)


def test_mc_sigma():
    assert abs(analysis.mc_sigma(0.5, 100) - 0.05) < 1e-12
    assert analysis.mc_sigma(0.0, 100) > 0.0  # floored away from zero

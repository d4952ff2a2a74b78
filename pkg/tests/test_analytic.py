import math
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crdsim.game import GameParams, PayoffSpec, RiskClass
from crdsim.analytic import (
    GridSpec,
    StrategyProfile,
    best_response_curves,
    best_response_exact,
    class_payoff,
    class_payoff_given_composition,
    composition_weights,
    config_prob,
    deviation_audit,
    find_class_nash,
    payoff_grids,
    success_prob,
    target_prob,
    welfare_grid,
)
from oracles import enumerate_class_payoff

probs = st.floats(0.0, 1.0)
SMALL = GameParams(Z=12, N=4, M=2, z_H=0.5)
PAPER = GameParams(Z=200, N=6, M=3, r=0.5, delta=0.1)


def test_grid_spec_rejects_ragged_epsilon():
    with pytest.raises(ValueError):
        GridSpec(0.0003)
    assert GridSpec(0.001).size == 1001


def test_strategy_profile_range():
    with pytest.raises(ValueError):
        StrategyProfile(pi_L=-0.1, pi_H=0.5)


def test_config_prob_certain_cooperation():
    prof = StrategyProfile(1.0, 1.0)
    assert config_prob(2, 3, 2, 3, prof) == 1.0
    assert config_prob(2, 3, 1, 3, prof) == 0.0


def test_config_prob_example():
    prof = StrategyProfile(0.5, 0.5)
    assert config_prob(2, 3, 1, 2, prof) == pytest.approx(0.1875)


def test_config_prob_out_of_range():
    with pytest.raises(ValueError):
        config_prob(2, 3, 3, 0, StrategyProfile(0.5, 0.5))


@given(pi_L=probs, pi_H=probs)
def test_config_prob_normalizes(pi_L, pi_H):
    prof = StrategyProfile(pi_L, pi_H)
    n_L, n_H = 2, 3
    total = sum(
        config_prob(n_L, n_H, a, h, prof)
        for a in range(n_L + 1)
        for h in range(n_H + 1)
    )
    assert total == pytest.approx(1.0)


def test_target_prob_everyone_else_cooperates():
    for n_L in range(PAPER.N):
        assert target_prob(PAPER, n_L, StrategyProfile(1.0, 1.0), cooperates=False) == 1.0


def test_target_prob_lone_cooperator():
    assert target_prob(PAPER, 3, StrategyProfile(0.0, 0.0), cooperates=True) == 0.0


def test_target_prob_binomial_tail():
    # N=6, M=3, all five co-players low risk at 0.5: P[Bin(5,.5) >= 3] = 0.5
    got = target_prob(PAPER, 5, StrategyProfile(0.5, 0.123), cooperates=False)
    assert got == pytest.approx(0.5)


def test_target_prob_range_check():
    with pytest.raises(ValueError):
        target_prob(PAPER, 6, StrategyProfile(0.5, 0.5), cooperates=False)


@given(pi_L=probs, pi_H=probs, n_L=st.integers(0, 5))
def test_cooperating_never_hurts_target(pi_L, pi_H, n_L):
    prof = StrategyProfile(pi_L, pi_H)
    p_C = target_prob(PAPER, n_L, prof, cooperates=True)
    p_D = target_prob(PAPER, n_L, prof, cooperates=False)
    assert p_C >= p_D - 1e-12


def test_target_prob_monotone_in_strategies():
    vals = np.linspace(0, 1, 11)
    for n_L in (2, 3):
        for cooperates in (True, False):
            along_L = [target_prob(PAPER, n_L, StrategyProfile(v, 0.3), cooperates)
                       for v in vals]
            along_H = [target_prob(PAPER, n_L, StrategyProfile(0.3, v), cooperates)
                       for v in vals]
            assert all(b >= a - 1e-12 for a, b in zip(along_L, along_L[1:]))
            assert all(b >= a - 1e-12 for a, b in zip(along_H, along_H[1:]))


def test_success_prob_extremes():
    invulnerable = GameParams(Z=200, N=6, M=3, r=0.5, delta=0.5)  # r_L = 0, r_H = 1
    prof = StrategyProfile(0.3, 0.4)
    ps, pf = success_prob(invulnerable, RiskClass.LOW, 2, prof, cooperates=False)
    assert ps == 1.0 and pf == 0.0
    ps, _ = success_prob(invulnerable, RiskClass.HIGH, 2, prof, cooperates=False)
    assert ps == pytest.approx(target_prob(invulnerable, 2, prof, cooperates=False))


def test_success_prob_midpoint():
    # r = 0.5 and P(t|a) = 0.5 -> success 0.75
    p = GameParams(Z=200, N=6, M=3, r=0.5, delta=0.0)
    ps, pf = success_prob(p, RiskClass.LOW, 5, StrategyProfile(0.5, 0.9), cooperates=False)
    assert ps == pytest.approx(0.75) and pf == pytest.approx(0.25)


def test_composition_payoff_all_defect():
    p = GameParams(Z=200, N=6, M=3, r=0.5, delta=0.0)
    spec = PayoffSpec.log_utility(p)
    got = class_payoff_given_composition(p, spec, RiskClass.LOW, 2, StrategyProfile(0, 0))
    assert got == pytest.approx(0.5 * math.log(0.3), abs=1e-10)


def test_composition_payoff_certain_cooperation():
    spec = PayoffSpec.log_utility(PAPER)
    got = class_payoff_given_composition(PAPER, spec, RiskClass.HIGH, 2,
                                         StrategyProfile(1.0, 1.0))
    assert got == pytest.approx(spec.x_C)


def test_composition_payoff_affine_when_no_own_coplayers():
    # with zero own-class co-players the payoff is affine in the own strategy
    spec = PayoffSpec.log_utility(PAPER)

    def h(pi_L):
        return class_payoff_given_composition(
            PAPER, spec, RiskClass.LOW, 0, StrategyProfile(pi_L, 0.35))

    lo, hi = h(0.0), h(1.0)
    for w in (0.25, 0.5, 0.75):
        assert h(w) == pytest.approx((1 - w) * lo + w * hi, abs=1e-12)


def test_composition_weights_normalize():
    for cls in RiskClass:
        assert composition_weights(PAPER, cls).sum() == pytest.approx(1.0, abs=1e-12)


def test_composition_weights_exclude_focal_agent():
    w_L = composition_weights(SMALL, RiskClass.LOW)
    w_H = composition_weights(SMALL, RiskClass.HIGH)
    denom = comb(11, 3)
    assert w_L[1] == pytest.approx(comb(5, 1) * comb(6, 2) / denom)
    assert w_H[1] == pytest.approx(comb(6, 1) * comb(5, 2) / denom)


def test_class_payoff_symmetric_when_homogeneous():
    p = GameParams(Z=200, N=6, M=3, r=0.5, delta=0.0, z_H=0.5)
    spec = PayoffSpec.log_utility(p)
    for pi in (0.0, 0.3, 0.7, 1.0):
        prof = StrategyProfile(pi, pi)
        assert class_payoff(p, spec, RiskClass.LOW, prof) == pytest.approx(
            class_payoff(p, spec, RiskClass.HIGH, prof), abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(pi_L=probs, pi_H=probs)
def test_class_payoff_matches_enumeration(pi_L, pi_H):
    spec = PayoffSpec.log_utility(SMALL)
    prof = StrategyProfile(pi_L, pi_H)
    for cls in RiskClass:
        exact = enumerate_class_payoff(SMALL, spec, cls, pi_L, pi_H)
        assert class_payoff(SMALL, spec, cls, prof) == pytest.approx(exact, abs=1e-12)


def test_payoff_grids_match_scalar_path():
    grid = GridSpec(0.25)
    spec = PayoffSpec.log_utility(PAPER)
    vals, H_L, H_H = payoff_grids(PAPER, spec, grid)
    for i, a in enumerate(vals):
        for j, b in enumerate(vals):
            prof = StrategyProfile(float(a), float(b))
            assert H_L[i, j] == pytest.approx(
                class_payoff(PAPER, spec, RiskClass.LOW, prof), abs=1e-12)
            assert H_H[i, j] == pytest.approx(
                class_payoff(PAPER, spec, RiskClass.HIGH, prof), abs=1e-12)


def test_best_response_curves_attain_grid_max():
    grid = GridSpec(0.05)
    spec = PayoffSpec.log_utility(PAPER)
    curve_L, curve_H = best_response_curves(PAPER, grid, spec=spec)
    vals, H_L, H_H = payoff_grids(PAPER, spec, grid)
    for j in range(grid.size):
        col = H_L[:, j]
        for resp in curve_L.response_sets[j]:
            i = int(round(resp / grid.epsilon))
            assert col[i] >= col.max() - 1e-9


def test_best_response_shrinks_with_opponent_cooperation():
    # free-riding: the more the other class contributes, the less L needs to
    grid = GridSpec(0.05)
    curve_L, _ = best_response_curves(PAPER, grid)
    rmax = curve_L.response_max
    assert rmax[0] == 1.0
    assert rmax[-1] < rmax[0]
    assert all(b <= a + 1e-9 for a, b in zip(rmax, rmax[1:]))


def test_exact_best_response_matches_grid():
    br, payoff = best_response_exact(PAPER, PayoffSpec.log_utility(PAPER),
                                     RiskClass.LOW, 0.9)
    grid_vals = np.linspace(0, 1, 2001)
    spec = PayoffSpec.log_utility(PAPER)
    grid_pay = [class_payoff(PAPER, spec, RiskClass.LOW, StrategyProfile(float(v), 0.9))
                for v in grid_vals]
    k = int(np.argmax(grid_pay))
    assert abs(br - grid_vals[k]) <= 5e-4
    assert payoff >= max(grid_pay) - 1e-12


def test_nash_interior_point_paper_setting():
    points = find_class_nash(PAPER, GridSpec(0.01))
    assert len(points) >= 1
    for pt in points:
        assert pt.residual <= 1e-9
        assert pt.profile.pi_H > pt.profile.pi_L
        assert (pt.profile.pi_L, pt.profile.pi_H) != (0.0, 0.0)


def test_nash_symmetric_game_swap_closure():
    p = GameParams(Z=200, N=6, M=3, r=0.5, delta=0.0, z_H=0.5)
    points = find_class_nash(p, GridSpec(0.01))
    assert len(points) >= 1
    profiles = {(round(pt.profile.pi_L, 6), round(pt.profile.pi_H, 6)) for pt in points}
    for a, b in profiles:
        assert any(abs(x - b) < 1e-4 and abs(y - a) < 1e-4 for x, y in profiles)


def test_welfare_full_cooperation_cell():
    wg = welfare_grid(PAPER, GridSpec(0.1))
    assert wg.welfare[-1, -1] == pytest.approx(-PAPER.c * PAPER.b, abs=1e-14)


def test_welfare_bounds_and_argmax():
    wg = welfare_grid(PAPER, GridSpec(0.05))
    low = -PAPER.b * PAPER.p - PAPER.c * PAPER.b
    assert np.all(wg.welfare <= 1e-12)
    assert np.all(wg.welfare >= low - 1e-12)
    a_L, a_H = wg.argmax
    i, j = round(a_L / 0.05), round(a_H / 0.05)
    assert wg.welfare[i, j] == pytest.approx(wg.max_welfare)


def test_welfare_swap_symmetric_when_homogeneous():
    p = GameParams(Z=200, N=6, M=3, r=0.5, delta=0.0, z_H=0.5)
    wg = welfare_grid(p, GridSpec(0.02))
    assert np.max(np.abs(wg.welfare - wg.welfare.T)) <= 1e-12
    cells = set(wg.argmax_cells)
    assert any((b, a) in cells for a, b in cells)


def test_audit_no_deviation_is_neutral():
    pi = np.where(PAPER.class_array(), 0.9, 0.7)
    res = deviation_audit(pi, PAPER, deviant_id=0, pi_prime=0.7, seed=3)
    assert res.method == "monte-carlo"
    assert res.delta == pytest.approx(0.0, abs=1e-15)


def test_audit_lone_cooperator_loses():
    p = GameParams(Z=30, N=6, M=3, r=0.5, delta=0.1, z_H=0.5)
    pi = np.zeros(30)
    res = deviation_audit(pi, p, deviant_id=0, pi_prime=1.0)
    assert res.method == "exhaustive"
    # cannot reach the target alone: pays the cooperation cost for nothing
    spec = PayoffSpec.log_utility(p)
    expected = (spec.x_C * (1 - p.r_L) + spec.x_C_fail * p.r_L) - (
        spec.x_D * (1 - p.r_L) + spec.x_D_fail * p.r_L)
    assert res.delta == pytest.approx(expected, abs=1e-12)
    assert res.delta < 0


def test_audit_monte_carlo_tracks_class_payoff():
    spec = PayoffSpec.log_utility(PAPER)
    prof = StrategyProfile(0.5, 0.5)
    pi = np.where(PAPER.class_array(), prof.pi_H, prof.pi_L)
    res = deviation_audit(pi, PAPER, deviant_id=0, pi_prime=0.5, seed=0, samples=50_000)
    assert res.expected_current == pytest.approx(
        class_payoff(PAPER, spec, RiskClass.LOW, prof), abs=2e-3)


def test_audit_rejects_bad_strategies():
    pi = np.full(PAPER.Z, 0.5)
    with pytest.raises(ValueError):
        deviation_audit(pi[:-1], PAPER, 0, 0.5)
    with pytest.raises(ValueError):
        deviation_audit(pi, PAPER, 0, 1.5)

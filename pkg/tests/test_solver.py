import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pennylab.errors import DomainError, InvalidInputError
from pennylab.games import (
    MixedStrategy,
    StageGame,
    binary_entropy_inverse,
    expected_payoff,
    get_game,
    shannon_entropy,
    zero_sum_from_matrix,
)
from pennylab.solver import (
    check_feasible_ir,
    enumerate_bimatrix_nash,
    guarantee_curve,
    min_entropy_minmax,
    minmax_profile,
    minmax_solution,
    solve_zero_sum,
    stage_exploit_floor,
)

F = Fraction

LOPSIDED = zero_sum_from_matrix([[3, -1], [-2, 2]], name="lopsided")

RPS = zero_sum_from_matrix([[0, -1, 1], [1, 0, -1], [-1, 1, 0]],
                           actions=[["R", "P", "S"], ["R", "P", "S"]],
                           name="rps")

PRISONERS = StageGame.from_tables(
    [["C", "D"], ["C", "D"]],
    [[(3, 3), (0, 4)], [(4, 0), (1, 1)]],
    name="pd")


def guarantee_of(game, player, strategy):
    """Worst payoff of a strategy across the opponent's pure replies."""
    opp = 1 - player
    worst = None
    for b in range(game.num_actions(opp)):
        pure = MixedStrategy.pure(opp, b, game.num_actions(opp))
        prof = [strategy, pure] if player == 0 else [pure, strategy]
        u = expected_payoff(game, prof)[player]
        worst = u if worst is None else min(worst, u)
    return worst


def test_zero_sum_matching_pennies_exact():
    mp = get_game("matching-pennies")
    v, (row, col) = solve_zero_sum(mp)
    assert v == 0
    assert row.strategy.probs == (F(1, 2), F(1, 2))
    assert col.strategy.probs == (F(1, 2), F(1, 2))
    assert row.value == 0 and col.value == 0


def test_zero_sum_closed_form_2x2():
    # independent oracle: value of [[a,b],[c,d]] with interior optimum is
    # (ad - bc) / (a + d - b - c)
    a, b, c, d = 3, -1, -2, 2
    oracle = F(a * d - b * c, a + d - b - c)
    v, (row, col) = solve_zero_sum(LOPSIDED)
    assert v == oracle == F(1, 2)
    assert row.strategy.probs == (F(1, 2), F(1, 2))
    assert col.strategy.probs == (F(3, 8), F(5, 8))


def test_zero_sum_grid_search_oracle():
    # fine grid over row mixes never beats the LP value
    best = -math.inf
    for k in range(1001):
        x = k / 1000.0
        worst = min(3 * x - 2 * (1 - x), -x + 2 * (1 - x))
        best = max(best, worst)
    v, _ = solve_zero_sum(LOPSIDED)
    assert best <= float(v) + 1e-9
    assert best == pytest.approx(float(v), abs=2e-3)


def test_zero_sum_dominant_row():
    g = zero_sum_from_matrix([[2, 2], [0, -1]])
    v, (row, _) = solve_zero_sum(g)
    assert v == 2
    assert guarantee_of(g, 0, row.strategy) == 2


def test_zero_sum_rejects():
    with pytest.raises(DomainError):
        solve_zero_sum(PRISONERS)


def test_minmax_profile_examples():
    assert minmax_profile(get_game("extended-mp")).values == (0, 0)
    assert minmax_profile(get_game("mp-punishment")).values == (-3, -3)
    assert minmax_profile(get_game("matching-pennies")).values == (0, 0)


def test_minmax_solution_sides():
    g = get_game("mp-punishment")
    for player in (0, 1):
        sol = minmax_solution(g, player)
        assert sol.value == -3
        assert guarantee_of(g, player, sol.strategy) >= sol.value
        # punisher caps the player at the minmax level for every pure reply
        opp = 1 - player
        for a in range(g.num_actions(player)):
            own = MixedStrategy.pure(player, a, g.num_actions(player))
            prof = [own, sol.opponent_punisher] if player == 0 else \
                [sol.opponent_punisher, own]
            assert expected_payoff(g, prof)[player] <= sol.value


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(min_value=-5, max_value=5),
                         min_size=2, max_size=3),
                min_size=2, max_size=3).filter(
                    lambda rows: len({len(r) for r in rows}) == 1))
def test_zero_sum_duality_random(rows):
    g = zero_sum_from_matrix(rows)
    v, (row, col) = solve_zero_sum(g)
    assert row.value + col.value == 0
    assert guarantee_of(g, 0, row.strategy) == v
    assert guarantee_of(g, 1, col.strategy) == -v


def test_nash_extended_mp():
    g = get_game("extended-mp")
    result = enumerate_bimatrix_nash(g)
    assert result.degenerate
    assert len(result) == 3
    half = F(1, 2)
    supports = set()
    for (x, y), payoff in result:
        assert payoff.values == (0, 0)
        supports.add((x.probs, y.probs))
    assert supports == {
        ((0, half, half, 0), (0, half, half, 0)),
        ((half, 0, 0, half), (0, half, 0, half)),
        ((half, 0, 0, half), (0, 0, half, half)),
    }


def test_nash_mp_punishment_unique():
    result = enumerate_bimatrix_nash(get_game("mp-punishment"))
    assert not result.degenerate
    assert len(result) == 1
    (x, y), payoff = result.equilibria[0]
    assert x.probs == (0, F(1, 2), F(1, 2), 0)
    assert y.probs == (0, F(1, 2), F(1, 2), 0)
    assert payoff.values == (0, 0)


def test_nash_dominant_pure():
    result = enumerate_bimatrix_nash(PRISONERS)
    assert len(result) == 1
    (x, y), payoff = result.equilibria[0]
    assert x.is_pure() and y.is_pure()
    assert x.support() == (1,) and y.support() == (1,)
    assert payoff.values == (1, 1)
    assert not result.degenerate


def test_nash_profiles_pass_best_response_check():
    for name in ("matching-pennies", "extended-mp", "mp-punishment"):
        g = get_game(name)
        for (x, y), payoff in enumerate_bimatrix_nash(g):
            for a in range(g.num_actions(0)):
                dev = expected_payoff(
                    g, [MixedStrategy.pure(0, a, g.num_actions(0)), y])[0]
                assert dev <= payoff[0]
            for b in range(g.num_actions(1)):
                dev = expected_payoff(
                    g, [x, MixedStrategy.pure(1, b, g.num_actions(1))])[1]
                assert dev <= payoff[1]


def test_min_entropy_minmax_mp():
    beta, strategy = min_entropy_minmax(get_game("matching-pennies"), 0)
    assert beta == 1.0
    assert strategy.probs == (F(1, 2), F(1, 2))


def test_min_entropy_minmax_pure():
    g = zero_sum_from_matrix([[1, 1], [0, 5]])
    beta, strategy = min_entropy_minmax(g, 0)
    assert beta == 0.0
    assert strategy.probs == (1, 0)


def test_min_entropy_minmax_rps():
    beta, strategy = min_entropy_minmax(RPS, 0)
    assert strategy.probs == (F(1, 3), F(1, 3), F(1, 3))
    assert beta == pytest.approx(math.log2(3), abs=1e-12)
    # brute-force: no minmax strategy on a coarse grid has lower entropy
    v, _ = solve_zero_sum(RPS)
    for i in range(21):
        for j in range(21 - i):
            x = (F(i, 20), F(j, 20), F(20 - i - j, 20))
            s = MixedStrategy(0, x)
            if guarantee_of(RPS, 0, s) >= v:
                assert shannon_entropy(s) >= beta - 1e-9


def test_min_entropy_minmax_rejects_general_sum():
    with pytest.raises(DomainError):
        min_entropy_minmax(PRISONERS, 0)


def test_guarantee_curve_mp_closed_form():
    g = get_game("matching-pennies")
    curve = guarantee_curve(g, 0, grid_size=33)
    assert curve.values[0] == pytest.approx(-1.0, abs=1e-9)
    assert curve.values[-1] == pytest.approx(0.0, abs=1e-6)
    for gamma, u, cav in zip(curve.gammas, curve.values, curve.cav_values):
        oracle = 2.0 * binary_entropy_inverse(gamma) - 1.0
        assert abs(u - oracle) <= 1e-3
        assert abs(cav - (gamma - 1.0)) <= 1e-3
        assert cav >= u - 1e-12
    for a, b in zip(curve.values, curve.values[1:]):
        assert b >= a - 1e-12


def test_guarantee_curve_validation():
    with pytest.raises(InvalidInputError):
        guarantee_curve(get_game("matching-pennies"), 0, grid_size=1)
    with pytest.raises(DomainError):
        guarantee_curve(PRISONERS, 0)


def test_mp_linear_vs_entropy_inequality():
    # 2p-1 >= 1 - H(p) for p in [1/2, 1]: the exploitation-vs-entropy
    # comparison behind the matching-pennies floor
    p = 0.5
    while p <= 1.0:
        h = 0.0
        if 0.0 < p < 1.0:
            h = -p * math.log2(p) - (1 - p) * math.log2(1 - p)
        assert 2 * p - 1 >= 1 - h - 1e-12
        p += 1e-3


def test_stage_exploit_floor_mp():
    g = get_game("matching-pennies")
    assert stage_exploit_floor(g, 1.0) == pytest.approx(0.0, abs=1e-6)
    assert stage_exploit_floor(g, 0.0) == pytest.approx(1.0, abs=1e-9)
    gamma = 0.5
    oracle = 1.0 - 2.0 * binary_entropy_inverse(gamma)
    assert stage_exploit_floor(g, gamma) == pytest.approx(oracle, abs=1e-3)


def test_check_feasible_ir_pure_target():
    g = get_game("mp-punishment")
    res = check_feasible_ir(g, (3, 3))
    assert res.feasible_ir
    assert res.decomposition.weights == {(0, 0): 1}
    assert res.decomposition.denominator == 1


def test_check_feasible_ir_mixed_target():
    g = get_game("matching-pennies")
    res = check_feasible_ir(g, (0, 0))
    assert res.feasible_ir
    # any valid decomposition accepted: recompute the target exactly
    for i in range(2):
        total = sum(w * F(g.payoff_to(a, i))
                    for a, w in res.decomposition.weights.items())
        assert total == 0


def test_check_feasible_ir_rejections():
    g = get_game("mp-punishment")
    not_ir = check_feasible_ir(g, (-4, -4))
    assert not not_ir.feasible_ir
    assert not_ir.reason == "not-IR"
    infeasible = check_feasible_ir(g, (10, 10))
    assert infeasible.reason == "infeasible"
    with pytest.raises(InvalidInputError):
        check_feasible_ir(g, (0.5, 0.5))
    assert not_ir.minmax.values == (-3, -3)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=4), st.integers(min_value=0, max_value=4))
def test_check_feasible_ir_lattice(i, j):
    # targets on the segment between (3,3) and (0,0) scaled by quarters
    g = get_game("mp-punishment")
    target = (F(3 * i, 4), F(3 * j, 4))
    res = check_feasible_ir(g, target)
    if res.feasible_ir:
        for p in range(2):
            total = sum(w * F(g.payoff_to(a, p))
                        for a, w in res.decomposition.weights.items())
            assert total == target[p]
        assert all(t >= F(-3) for t in target)

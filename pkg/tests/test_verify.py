import math
from fractions import Fraction

import numpy as np
import pytest

from pennylab import repeated
from pennylab.constructors import (
    folk_equilibrium,
    mp_epsnash,
    stagewise_strategy,
    zerosum_epsnash,
)
from pennylab.errors import (
    DomainError,
    InvalidInputError,
    ResourceLimitError,
    UnsupportedError,
)
from pennylab.games import MixedStrategy, StageGame, get_game, shannon_entropy
from pennylab.repeated import (
    History,
    RuleStrategy,
    SeededBehavioral,
    SeededStrategy,
    exact_payoff,
    strategy_entropy,
)
from pennylab.solver import enumerate_bimatrix_nash
from pennylab.verify import (
    EquilibriumReport,
    best_response_value,
    certify,
    entropy_bound_check,
    mp_potential_trace,
    onpath_stage_check,
)

F = Fraction
MP = get_game("matching-pennies")
EXT = get_game("extended-mp")
PUNISH = get_game("mp-punishment")


def uniform_profile():
    return [stagewise_strategy(i, (F(1, 2), F(1, 2))) for i in range(2)]


def seeded_constant(owner):
    prog = SeededStrategy(seed_bits=1, program=lambda h, seed: seed,
                          state_fn=lambda h: (), name="constant-by-seed")
    return SeededBehavioral(owner, prog)


# -- best response -----------------------------------------------------------

def test_br_vs_uniform_is_game_value():
    value, dev = best_response_value(MP, 3, uniform_profile()[1], 0)
    assert value == 0
    assert exact_payoff(MP, 3, [dev, uniform_profile()[1]])[0] == 0


def test_br_vs_always_heads():
    opp = stagewise_strategy(1, (F(1), F(0)))
    value, dev = best_response_value(MP, 3, opp, 0)
    assert value == 1
    # matching every stage, deterministically
    h = History.empty(3)
    assert dev.stage_distribution(MP, h).support() == (0,)


def test_br_vs_seeded_constant_oracle():
    # stage 1 is a coin flip (expected 0), stages 2-3 match the revealed
    # seed: total 2 of 3
    value, dev = best_response_value(MP, 3, seeded_constant(1), 0)
    assert value == F(2, 3)
    assert exact_payoff(MP, 3, [dev, seeded_constant(1)])[0] == F(2, 3)


def test_br_lexicographic_tie():
    # every continuation ties against uniform play; heads wins the tie
    value, dev = best_response_value(MP, 2, uniform_profile()[1], 0)
    h = History.empty(2)
    assert dev.stage_distribution(MP, h).support() == (0,)
    assert dev.stage_distribution(MP, h.append((1, 1))).support() == (0,)


def test_br_dominates_compliance():
    profiles = [
        uniform_profile(),
        list(mp_epsnash(4, F(1, 2))),
        [stagewise_strategy(0, (F(1, 4), F(3, 4))),
         stagewise_strategy(1, (F(2, 3), F(1, 3)))],
    ]
    for prof in profiles:
        pay = exact_payoff(MP, 4, prof)
        for i in range(2):
            value, _ = best_response_value(MP, 4, prof[1 - i], i)
            assert value >= pay[i]


def test_br_memoizes_on_opponent_state():
    # 4^25 histories, but a history-independent opponent collapses to 25
    opp = stagewise_strategy(1, (F(1, 3), F(2, 3)))
    value, _ = best_response_value(MP, 25, opp, 0)
    assert value == F(1, 3)  # always play tails: 2/3 - 1/3


def test_br_respects_node_guard(monkeypatch):
    monkeypatch.setattr(repeated, "NODE_GUARD", 5)
    opp = RuleStrategy(1, lambda g, h: MixedStrategy.uniform(1, 2))
    with pytest.raises(ResourceLimitError):
        best_response_value(MP, 8, opp, 0)


def test_br_validation():
    with pytest.raises(InvalidInputError):
        best_response_value(MP, 3, uniform_profile()[1], 1)  # owner clash
    with pytest.raises(InvalidInputError):
        best_response_value(MP, 0, uniform_profile()[1], 0)
    three = StageGame(
        players=3,
        actions=(("A", "B"),) * 3,
        payoffs={(a, b, c): (0, 0, 0) for a in range(2) for b in range(2)
                 for c in range(2)},
        name="triple")
    with pytest.raises(UnsupportedError):
        best_response_value(three, 2, uniform_profile()[1], 0)


# -- certification -----------------------------------------------------------

def test_certify_uniform_mp_exact():
    rep = certify(MP, 3, uniform_profile())
    assert rep.verdict == "exact-NE"
    assert rep.exploitability == (0, 0)
    assert rep.entropy == (3.0, 3.0)
    assert rep.effective_entropy == (3.0, 3.0)
    assert rep.payoff == (0, 0)
    assert rep.witness is None
    assert rep.mode == "rational"


def test_certify_folk_profile():
    prof, _ = folk_equilibrium(PUNISH, 5, (3, 3))
    rep = certify(PUNISH, 5, prof)
    assert rep.verdict == "exact-NE"
    assert rep.effective_entropy == pytest.approx((1.0, 1.0))
    assert rep.payoff == (F(12, 5), F(12, 5))


def test_certify_mp_epsnash_verdict():
    prof = mp_epsnash(4, F(1, 2))
    rep = certify(MP, 4, prof, eps=1.0)
    assert rep.verdict == "eps-NE(1.0)"
    assert rep.max_exploitability == F(1, 2)
    player, dev, gain = rep.witness
    assert gain == F(1, 2)
    # witness replays to exactly the claimed gain
    trial = list(prof)
    trial[player] = dev
    assert exact_payoff(MP, 4, trial)[player] - rep.payoff[player] == gain


def test_certify_eps_fraction_format():
    prof = mp_epsnash(4, F(1, 2))
    rep = certify(MP, 4, prof, eps=F(3, 4))
    assert rep.verdict == "eps-NE(3/4)"


def test_certify_not_ne_with_witness():
    skew = [stagewise_strategy(0, (F(3, 4), F(1, 4))),
            stagewise_strategy(1, (F(3, 4), F(1, 4)))]
    rep = certify(MP, 3, skew)
    assert rep.verdict == "not-NE"
    player, dev, gain = rep.witness
    assert player == 1 and gain > 0
    trial = list(skew)
    trial[player] = dev
    assert exact_payoff(MP, 3, trial)[player] - rep.payoff[player] == gain


def test_certify_zero_sum_consistency():
    # row best response against the certified column equals the game value
    prof = uniform_profile()
    assert certify(MP, 4, prof).verdict == "exact-NE"
    value, _ = best_response_value(MP, 4, prof[1], 0)
    assert value == 0


def test_report_text_fields():
    rep = certify(MP, 2, uniform_profile())
    text = rep.to_text()
    for field in ("verdict:", "payoff:", "exploitability:", "entropy:",
                  "effective_entropy:", "witness:", "mode:"):
        assert any(line.startswith(field) for line in text.splitlines())
    assert "verdict: exact-NE" in text
    assert "witness: none" in text


# -- on-path stage check -----------------------------------------------------

def test_onpath_uniform_mp_clean():
    rep = onpath_stage_check(MP, 3, uniform_profile())
    assert rep.hypothesis_met
    assert rep.violations == ()
    assert rep.checked == 3  # state keys collapse each stage to one node


def test_onpath_pure_mp_violation_at_root():
    pure = [stagewise_strategy(0, (F(1), F(0))),
            stagewise_strategy(1, (F(1), F(0)))]
    rep = onpath_stage_check(MP, 2, pure)
    assert not rep.ok
    assert [v.history for v in rep.violations] == [(), ((0, 0),)]
    root = rep.violations[0]
    assert root.player == 1 and root.action == "T" and root.gain == 2


def test_onpath_cycling_extended_mp():
    nash = enumerate_bimatrix_nash(EXT)
    first, second = nash.equilibria[0][0], nash.equilibria[1][0]

    def cycler(owner):
        def rule(g, h):
            ne = first if h.t % 2 == 0 else second
            return ne[owner]
        return RuleStrategy(owner, rule, state_fn=lambda h: ())

    rep = onpath_stage_check(EXT, 2, [cycler(0), cycler(1)])
    assert rep.hypothesis_met  # every NE of extended-mp earns the minmax (0,0)
    assert rep.violations == ()


def test_onpath_hypothesis_flag():
    # mp-punishment has NE payoff (0,0) above minmax (-3,-3)
    ne = MixedStrategy(0, (F(0), F(1, 2), F(1, 2), F(0)))
    prof = [stagewise_strategy(i, ne.probs) for i in range(2)]
    rep = onpath_stage_check(PUNISH, 2, prof)
    assert not rep.hypothesis_met
    assert rep.violations == ()


def test_onpath_flags_near_zero_float_branches():
    tiny = 1e-13
    prof = [stagewise_strategy(0, (1.0 - tiny, tiny)),
            stagewise_strategy(1, (0.5, 0.5))]
    rep = onpath_stage_check(MP, 2, prof)
    assert rep.near_zero
    assert all(stages[-1][0] == 1 for stages in rep.near_zero)


# -- entropy bounds ----------------------------------------------------------

def test_entropy_bound_uniform_mp():
    rep = entropy_bound_check(MP, 4, uniform_profile())
    assert rep.applies and rep.ok
    for p in rep.players:
        assert p.entropy == 4.0 and p.beta == 1.0 and p.bound == 4.0
    for f in rep.mp_floors:
        assert f.floor == 0.0 and f.meets


def test_entropy_bound_seeded_constant_floor():
    prof = [uniform_profile()[0], seeded_constant(1)]
    rep = entropy_bound_check(MP, 3, prof)
    low = rep.players[1]
    assert low.entropy == 1.0 and not low.meets  # below the n*beta floor
    floor = rep.mp_floors[1]
    assert floor.floor == pytest.approx(2 / 3)
    assert floor.best_response == F(2, 3) and floor.meets


def test_entropy_bound_extended_mp():
    nash = enumerate_bimatrix_nash(EXT)
    prof = [stagewise_strategy(i, nash.equilibria[0][0][i].probs)
            for i in range(2)]
    rep = entropy_bound_check(EXT, 2, prof)
    assert rep.applies  # non-zero-sum branch: all NE payoffs equal minmax
    assert rep.mp_floors is None
    for p in rep.players:
        assert p.beta == 1.0 and p.entropy >= 2.0 and p.meets


def test_entropy_bound_hypothesis_off():
    ne = (F(0), F(1, 2), F(1, 2), F(0))
    prof = [stagewise_strategy(i, ne) for i in range(2)]
    rep = entropy_bound_check(PUNISH, 3, prof)
    assert not rep.applies
    assert all(p.bound == 0.0 for p in rep.players)


def test_subhistory_count_property():
    # strategies of entropy <= (1-eps) beta n keep many low-entropy stages:
    # at least n (1 - (1-eps)/(1-eps/2)) of them at or below (1-eps/2) beta
    for n, eps in [(5, F(1, 4)), (8, F(1, 2)), (6, F(3, 4))]:
        prof = zerosum_epsnash(MP, n, eps)
        for s in prof:
            assert strategy_entropy(MP, n, s) <= float((1 - eps) * n) + 1e-9
            h = History.empty(n)
            low = 0
            for t in range(n):
                stage_h = shannon_entropy(s.stage_distribution(MP, h))
                if stage_h <= float(1 - eps / 2) + 1e-9:
                    low += 1
                h = h.append((0, 0))
            assert low >= n * (1 - (1 - eps) / (1 - eps / 2)) - 1e-9


# -- potential diagnostic ----------------------------------------------------

def test_potential_uniform():
    trace = mp_potential_trace(3, stagewise_strategy(1, (F(1, 2), F(1, 2))))
    assert trace == (1.0, 1.0, 1.0)


def test_potential_pure():
    trace = mp_potential_trace(3, stagewise_strategy(1, (F(0), F(1))))
    assert trace == (1.0, 1.0, 1.0)


def test_potential_skewed_iid():
    trace = mp_potential_trace(3, stagewise_strategy(1, (F(1, 4), F(3, 4))))
    expected = 0.5 + shannon_entropy((0.25, 0.75))
    for inc in trace:
        assert inc == pytest.approx(expected, abs=1e-12)
    assert round(expected, 6) == 1.311278


def test_potential_accepts_profile():
    prof = uniform_profile()
    assert mp_potential_trace(2, prof) == mp_potential_trace(2, prof[1])


def test_potential_increment_floor_random_seeded():
    rng = np.random.default_rng(20260823)
    n, bits = 4, 2
    for _ in range(20):
        table = {(t, seed): int(rng.integers(2))
                 for t in range(n) for seed in range(1 << bits)}
        prog = SeededStrategy(
            seed_bits=bits,
            program=lambda h, seed, tb=table: tb[(h.t, seed)],
            state_fn=lambda h: ())
        trace = mp_potential_trace(n, SeededBehavioral(1, prog))
        assert all(inc >= 1.0 - 1e-9 for inc in trace)


def test_potential_validation():
    with pytest.raises(InvalidInputError):
        mp_potential_trace(3, stagewise_strategy(0, (F(1, 2), F(1, 2))))
    with pytest.raises(DomainError):
        mp_potential_trace(3, stagewise_strategy(1, (F(1, 4),) * 4))
    with pytest.raises(ResourceLimitError):
        mp_potential_trace(30, stagewise_strategy(1, (F(1, 2), F(1, 2))))

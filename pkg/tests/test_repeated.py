import math
from fractions import Fraction
from itertools import product

import pytest

from pennylab import repeated
from pennylab.errors import InvalidInputError, ResourceLimitError
from pennylab.games import MixedStrategy, get_game, shannon_entropy
from pennylab.repeated import (
    BehavioralStrategy,
    History,
    RuleStrategy,
    SeededBehavioral,
    SeededStrategy,
    TableStrategy,
    effective_entropy,
    exact_payoff,
    monte_carlo_payoff,
    strategy_entropy,
    tabulate,
)

F = Fraction
MP = get_game("matching-pennies")
PUNISH = get_game("mp-punishment")


def stagewise(owner, probs):
    dist = MixedStrategy(owner, probs)
    return RuleStrategy(owner, lambda g, h: dist, state_fn=lambda h: ())


def uniform_profile():
    return [stagewise(0, (F(1, 2), F(1, 2))), stagewise(1, (F(1, 2), F(1, 2)))]


def constant_seeded(owner):
    """1-bit seeded strategy: constant H or constant T chosen by the seed."""
    prog = SeededStrategy(seed_bits=1, program=lambda h, seed: seed,
                          state_fn=lambda h: (), name="constant-by-seed")
    return SeededBehavioral(owner, prog)


def coop_trigger(owner):
    """Cooperate for n-1 stages, mix H/T at the last, punish any defection."""
    def punished(h):
        limit = min(h.t, h.horizon - 1)
        return any(h.stages[s][1 - owner] != 0 for s in range(limit))

    def rule(game, h):
        if punished(h):
            return MixedStrategy.pure(owner, 3, 4)
        if h.t < h.horizon - 1:
            return MixedStrategy.pure(owner, 0, 4)
        return MixedStrategy(owner, (F(0), F(1, 2), F(1, 2), F(0)))

    return RuleStrategy(owner, rule, state_fn=punished)


def test_history_basics():
    h = History.empty(3)
    assert h.t == 0 and not h.terminal
    h2 = h.append((0, 1)).append((1, 1))
    assert h2.stages == ((0, 1), (1, 1))
    assert h2.own(0) == (0, 1) and h2.own(1) == (1, 1)
    assert h2.prefix(1).stages == ((0, 1),)
    h3 = h2.append((0, 0))
    assert h3.terminal
    with pytest.raises(InvalidInputError):
        h3.append((0, 0))
    with pytest.raises(InvalidInputError):
        History(((0, 5),), 2).validate(MP)


def test_exact_payoff_uniform_mp():
    pay = exact_payoff(MP, 3, uniform_profile())
    assert pay.values == (0, 0)
    assert isinstance(pay.values[0], Fraction)


def test_exact_payoff_pure_mismatch():
    row = stagewise(0, (1, 0))
    col = stagewise(1, (0, 1))
    pay = exact_payoff(MP, 2, [row, col])
    assert pay.values == (-1, 1)


def test_exact_payoff_all_pure_profiles_n2():
    # pure-profile payoff equals the average along the unique play path
    for a1, a2, b1, b2 in product(range(2), repeat=4):
        row = TableStrategy(0, {
            (): MixedStrategy.pure(0, a1, 2),
            **{((a1, c),): MixedStrategy.pure(0, a2, 2) for c in range(2)}})
        col = TableStrategy(1, {
            (): MixedStrategy.pure(1, b1, 2),
            **{((r, b1),): MixedStrategy.pure(1, b2, 2) for r in range(2)}})
        pay = exact_payoff(MP, 2, [row, col])
        expect = tuple(F(MP.payoff_to((a1, b1), i) + MP.payoff_to((a2, b2), i), 2)
                       for i in range(2))
        assert pay.values == expect


def test_exact_payoff_coop_trigger():
    pay = exact_payoff(PUNISH, 5, [coop_trigger(0), coop_trigger(1)])
    assert pay.values == (F(12, 5), F(12, 5))


def test_exact_payoff_memoized_stagewise_long_horizon():
    # compact state keys collapse the 4^20 tree to one node per stage
    pay = exact_payoff(MP, 20, uniform_profile())
    assert pay.values == (0, 0)


def test_exact_payoff_guard(monkeypatch):
    monkeypatch.setattr(repeated, "NODE_GUARD", 10)
    row = RuleStrategy(0, lambda g, h: MixedStrategy.uniform(0, 2))
    col = RuleStrategy(1, lambda g, h: MixedStrategy.uniform(1, 2))
    with pytest.raises(ResourceLimitError):
        exact_payoff(MP, 6, [row, col])


def test_monte_carlo_uniform():
    pay = monte_carlo_payoff(MP, 50, uniform_profile(), plays=4000, rng_seed=7)
    for v, se in zip(pay.values, pay.std_err):
        assert abs(v) <= 4 * se + 1e-12


def test_monte_carlo_deterministic_profile():
    row = stagewise(0, (1, 0))
    col = stagewise(1, (0, 1))
    pay = monte_carlo_payoff(MP, 4, [row, col], plays=50, rng_seed=1)
    assert pay.values == (-1.0, 1.0)
    assert pay.std_err == (0.0, 0.0)


def test_monte_carlo_reproducible():
    prof = [stagewise(0, (F(1, 4), F(3, 4))), constant_seeded(1)]
    a = monte_carlo_payoff(MP, 8, prof, plays=200, rng_seed=42)
    b = monte_carlo_payoff(MP, 8, prof, plays=200, rng_seed=42)
    assert a.values == b.values and a.std_err == b.std_err


def test_monte_carlo_matches_exact_for_seeded():
    prof = [uniform_profile()[0], constant_seeded(1)]
    exact = exact_payoff(MP, 8, prof)
    mc = monte_carlo_payoff(MP, 8, prof, plays=4000, rng_seed=3)
    for v_mc, v_ex, se in zip(mc.values, exact.values, mc.std_err):
        assert abs(v_mc - float(v_ex)) <= 4 * se + 1e-9


def test_strategy_entropy_stagewise():
    assert strategy_entropy(MP, 4, uniform_profile()[0]) == 4.0
    assert strategy_entropy(MP, 3, stagewise(0, (1, 0))) == 0.0


def test_strategy_entropy_product_form():
    s = stagewise(0, (F(1, 4), F(3, 4)))
    per_stage = shannon_entropy((F(1, 4), F(3, 4)))
    assert strategy_entropy(MP, 3, s) == pytest.approx(3 * per_stage, abs=1e-12)


def test_strategy_entropy_seeded_constant():
    # 1 bit at the root, 0 after conditioning on the own first move
    assert strategy_entropy(MP, 3, constant_seeded(0)) == pytest.approx(
        1.0, abs=1e-12)


def test_seeded_conditioning_distributions():
    s = constant_seeded(1)
    root = s.stage_distribution(MP, History.empty(3))
    assert root.probs == (F(1, 2), F(1, 2))
    after_h = s.stage_distribution(MP, History(((0, 0),), 3))
    assert after_h.probs == (1, 0)
    after_t = s.stage_distribution(MP, History(((0, 1),), 3))
    assert after_t.probs == (0, 1)
    # inconsistent own past (impossible under the program): point mass
    weird = s.stage_distribution(MP, History(((0, 0), (1, 1)), 3))
    assert weird.is_pure()


def test_seeded_to_table_preserves_payoff():
    def prog(h, seed):
        # play the seed bits cyclically, flipped when the opponent matched
        bit = (seed >> (h.t % 2)) & 1
        if h.t > 0 and h.stages[-1][0] == h.stages[-1][1]:
            bit ^= 1
        return bit

    seeded = SeededBehavioral(1, SeededStrategy(seed_bits=2, program=prog))
    table = tabulate(MP, 3, seeded)
    row = stagewise(0, (F(1, 4), F(3, 4)))
    a = exact_payoff(MP, 3, [row, seeded])
    b = exact_payoff(MP, 3, [row, table])
    assert a.values == b.values


def test_effective_entropy_uniform():
    prof = uniform_profile()
    assert effective_entropy(MP, 4, prof, 0) == 4.0
    assert effective_entropy(MP, 4, prof, 1) == 4.0


def test_effective_entropy_coop_trigger():
    prof = [coop_trigger(0), coop_trigger(1)]
    for player in (0, 1):
        assert effective_entropy(PUNISH, 5, prof, player) == pytest.approx(
            1.0, abs=1e-12)
        assert strategy_entropy(PUNISH, 5, prof[player]) == pytest.approx(
            1.0, abs=1e-12)


def test_effective_below_strategy_entropy_offpath():
    # row mixes only after the column plays T, which never happens
    def rule(game, h):
        if h.t > 0 and h.stages[-1][1] == 1:
            return MixedStrategy.uniform(0, 2)
        return MixedStrategy.pure(0, 0, 2)

    row = RuleStrategy(0, rule)
    col = stagewise(1, (1, 0))
    worst = strategy_entropy(MP, 3, row)
    eff = effective_entropy(MP, 3, [row, col], 0)
    assert worst == pytest.approx(2.0, abs=1e-12)
    assert eff == 0.0
    assert eff <= worst


def test_effective_entropy_le_strategy_entropy_random_tables():
    rng_probs = [(F(1, 2), F(1, 2)), (F(1, 4), F(3, 4)), (F(1), F(0)),
                 (F(2, 3), F(1, 3))]
    for i, probs in enumerate(rng_probs):
        def rule(game, h, p=probs):
            if h.t % 2 == 0:
                return MixedStrategy(0, p)
            return MixedStrategy.pure(0, h.stages[-1][1], 2)

        row = RuleStrategy(0, rule)
        col = stagewise(1, (F(1, 3), F(2, 3)))
        worst = strategy_entropy(MP, 3, row)
        eff = effective_entropy(MP, 3, [row, col], 0)
        assert eff <= worst + 1e-12


def test_profile_validation():
    row, col = uniform_profile()
    with pytest.raises(InvalidInputError):
        exact_payoff(MP, 0, [row, col])
    with pytest.raises(InvalidInputError):
        exact_payoff(MP, 2, [row])
    with pytest.raises(InvalidInputError):
        exact_payoff(MP, 2, [col, row])


def test_seeded_strategy_validation():
    with pytest.raises(InvalidInputError):
        SeededStrategy(seed_bits=17, program=lambda h, s: 0)
    prog = SeededStrategy(seed_bits=1, program=lambda h, s: s)
    with pytest.raises(InvalidInputError):
        SeededBehavioral(0, prog, prior=(F(1, 2),))
    with pytest.raises(InvalidInputError):
        SeededBehavioral(0, prog, prior=(F(1, 2), F(1, 4)))

"""The n-stage repeated game engine.

Histories, behavioral strategies (explicit table, rule, or seeded program),
exact expected average payoffs by tree recursion, Monte Carlo play, and the
two entropy measures of repeated-game strategies: worst-case entropy (max of
summed stage entropies over all terminal histories) and effective entropy
(the same max restricted to histories of positive probability under the
full profile).

Recursions memoize on per-strategy `state_key` values.  The contract: two
histories of equal length with equal state keys must induce identical play
by that strategy on every continuation.  The default key is the full
history, which is always sound; constructors attach compact keys (stage
plus a small automaton state) so certification stays cheap at horizons
where the raw tree is astronomically large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .games import MixedStrategy, StageGame, shannon_entropy

#: unique node evaluations allowed per engine recursion (counted dynamically,
#: so heavily pruned or memoized profiles can run at large horizons)
NODE_GUARD = 10_000_000

#: probability below which a float-valued branch counts as unreachable
PROB_CUTOFF = 1e-12

#: seed registers are capped so exact posterior filtering stays desk-scale
MAX_SEED_BITS = 16


@dataclass(frozen=True)
class History:
    """A (possibly partial) play of the repeated game."""

    stages: tuple[tuple[int, ...], ...]
    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidInputError("horizon must be positive")
        if len(self.stages) > self.horizon:
            raise InvalidInputError("history longer than horizon")

    @classmethod
    def empty(cls, horizon: int) -> "History":
        return cls((), horizon)

    @property
    def t(self) -> int:
        return len(self.stages)

    @property
    def terminal(self) -> bool:
        return len(self.stages) == self.horizon

    def append(self, profile: tuple[int, ...]) -> "History":
        return History(self.stages + (tuple(profile),), self.horizon)

    def own(self, player: int) -> tuple[int, ...]:
        return tuple(stage[player] for stage in self.stages)

    def prefix(self, t: int) -> "History":
        return History(self.stages[:t], self.horizon)

    def validate(self, game: StageGame) -> None:
        for stage in self.stages:
            if len(stage) != game.players:
                raise InvalidInputError(f"profile {stage}: wrong player count")
            for i, a in enumerate(stage):
                if not 0 <= a < game.num_actions(i):
                    raise InvalidInputError(f"profile {stage}: bad action")


class _SamplingPlayout:
    """Per-playout sampler: draws from the stage distribution each stage."""

    def __init__(self, strategy: "BehavioralStrategy", rng):
        self.strategy = strategy
        self.rng = rng

    def act(self, game: StageGame, history: History) -> int:
        dist = self.strategy.stage_distribution(game, history)
        return sample_action(dist, self.rng)


def sample_action(dist: MixedStrategy, rng) -> int:
    r = rng.random()
    acc = 0.0
    last = 0
    for a, p in enumerate(dist.probs):
        pf = float(p)
        if pf > 0.0:
            last = a
            acc += pf
            if r < acc:
                return a
    return last


class BehavioralStrategy:
    """One player's per-history mixed action plan.  Subclass per form."""

    def __init__(self, owner: int, spec: Optional[dict] = None):
        self.owner = owner
        self.spec = spec  # serialization hint, see strategy_io

    def stage_distribution(self, game: StageGame,
                           history: History) -> MixedStrategy:
        raise NotImplementedError

    def state_key(self, history: History):
        """Memoization key; equal keys at equal stage must mean identical
        future play.  The full history is the always-sound default."""
        return history.stages

    def begin_playout(self, rng) -> _SamplingPlayout:
        return _SamplingPlayout(self, rng)


class TableStrategy(BehavioralStrategy):
    """Explicit mapping from non-terminal histories to mixed actions."""

    def __init__(self, owner: int, table: dict, spec: Optional[dict] = None):
        super().__init__(owner, spec)
        self.table = {tuple(tuple(p) for p in k): v for k, v in table.items()}

    def stage_distribution(self, game, history):
        try:
            return self.table[history.stages]
        except KeyError:
            raise InvalidInputError(
                f"table strategy undefined at stage {history.t} "
                f"history {history.stages}") from None


class RuleStrategy(BehavioralStrategy):
    """Deterministic procedure history -> MixedStrategy.

    `state_fn` optionally compresses histories for memoization; it must
    capture everything the rule (now and later) reads from the history
    besides the stage index.
    """

    def __init__(self, owner: int,
                 rule: Callable[[StageGame, History], MixedStrategy],
                 state_fn: Optional[Callable[[History], object]] = None,
                 spec: Optional[dict] = None):
        super().__init__(owner, spec)
        self.rule = rule
        self.state_fn = state_fn

    def stage_distribution(self, game, history):
        return self.rule(game, history)

    def state_key(self, history):
        if self.state_fn is None:
            return history.stages
        return self.state_fn(history)


@dataclass(frozen=True)
class SeededStrategy:
    """A deterministic program (history, seed) -> action over s seed bits.

    `state_fn`, when given, must summarize the history so that the program's
    output (at the current and all later stages) depends only on the stage,
    the summary, and the seed; it unlocks compact memoization keys.
    """

    seed_bits: int
    program: Callable[[History, int], int]
    state_fn: Optional[Callable[[History], object]] = None
    name: str = ""
    table: Optional[dict] = None  # decision-table form for interchange
    summary: str = "full"

    def __post_init__(self):
        if not 0 <= self.seed_bits <= MAX_SEED_BITS:
            raise InvalidInputError(
                f"seed_bits outside 0..{MAX_SEED_BITS}")

    @property
    def num_seeds(self) -> int:
        return 1 << self.seed_bits

    def action(self, history: History, seed: int) -> int:
        return self.program(history, seed)


class SeededBehavioral(BehavioralStrategy):
    """The behavioral strategy induced by a seeded program.

    The stage distribution at h conditions the seed distribution on the
    owner's own realized actions along h (the unique realization-equivalent
    behavioral strategy under perfect recall).  At histories where no seed
    is consistent the strategy degenerates to the seed-0 action: a point
    mass, so pure programs keep entropy exactly 0 everywhere.
    """

    def __init__(self, owner: int, seeded: SeededStrategy,
                 prior: Optional[Sequence] = None,
                 spec: Optional[dict] = None):
        super().__init__(owner, spec)
        self.seeded = seeded
        if prior is None:
            prior = [Fraction(1, seeded.num_seeds)] * seeded.num_seeds
        if len(prior) != seeded.num_seeds:
            raise InvalidInputError("prior length must be 2**seed_bits")
        self.prior = tuple(Fraction(p) if not isinstance(p, float) else p
                           for p in prior)
        total = sum(self.prior)
        if isinstance(total, Fraction):
            if total != 1:
                raise InvalidInputError("seed prior must sum to 1")
        elif abs(total - 1.0) > 1e-9:
            raise InvalidInputError("seed prior must sum to 1")

    def consistent_seeds(self, history: History) -> tuple[int, ...]:
        """Seeds whose program replays the owner's actions along history."""
        own = history.own(self.owner)
        out = []
        for seed in range(self.seeded.num_seeds):
            if self.prior[seed] == 0:
                continue
            ok = True
            for t, a in enumerate(own):
                if self.seeded.action(history.prefix(t), seed) != a:
                    ok = False
                    break
            if ok:
                out.append(seed)
        return tuple(out)

    def stage_distribution(self, game, history):
        size = game.num_actions(self.owner)
        seeds = self.consistent_seeds(history)
        if not seeds:
            return MixedStrategy.pure(self.owner,
                                      self.seeded.action(history, 0), size)
        weights = [Fraction(0)] * size
        for seed in seeds:
            weights[self.seeded.action(history, seed)] += self.prior[seed]
        total = sum(weights)
        return MixedStrategy(self.owner, tuple(w / total for w in weights))

    def state_key(self, history):
        if self.seeded.state_fn is None:
            return history.stages
        return (self.seeded.state_fn(history), self.consistent_seeds(history))

    def begin_playout(self, rng):
        return _SeededPlayout(self, rng)


class _SeededPlayout:
    """Samples the seed once, then plays the program deterministically."""

    def __init__(self, strategy: SeededBehavioral, rng):
        self.strategy = strategy
        r = rng.random()
        acc = 0.0
        seed = 0
        for s, p in enumerate(strategy.prior):
            pf = float(p)
            if pf > 0.0:
                seed = s
                acc += pf
                if r < acc:
                    break
        self.seed = seed

    def act(self, game, history):
        return self.strategy.seeded.action(history, self.seed)


@dataclass(frozen=True)
class RepeatedPayoff:
    """Per-player expected average payoff over the n stages."""

    values: tuple
    std_err: Optional[tuple] = None

    def __getitem__(self, i: int):
        return self.values[i]

    def __len__(self):
        return len(self.values)


def _check_profile(game: StageGame, n: int,
                   profile: Sequence[BehavioralStrategy]) -> None:
    if n < 1:
        raise InvalidInputError("horizon must be positive")
    if len(profile) != game.players:
        raise InvalidInputError("need one strategy per player")
    for i, s in enumerate(profile):
        if s.owner != i:
            raise InvalidInputError(
                f"strategy at position {i} is owned by player {s.owner}")


def _branch_weight(dists, joint):
    """Product probability of a joint action, or None when unreachable."""
    w = Fraction(1)
    for dist, a in zip(dists, joint):
        p = dist.probs[a]
        if isinstance(p, float):
            if p <= PROB_CUTOFF:
                return None
        elif p == 0:
            return None
        w = w * p
    return w


class _NodeBudget:
    def __init__(self, what: str):
        self.left = NODE_GUARD
        self.what = what

    def spend(self):
        self.left -= 1
        if self.left < 0:
            raise ResourceLimitError(
                f"{self.what} exceeded the {NODE_GUARD}-node engine guard; "
                "use monte_carlo_payoff for horizons this large")


def exact_payoff(game: StageGame, n: int,
                 profile: Sequence[BehavioralStrategy]) -> RepeatedPayoff:
    """Exact expected average payoff by recursion over the history tree.

    Zero-probability branches are pruned; nodes are memoized on the joint
    state keys, so profiles with compact keys evaluate far beyond the naive
    tree bound.  Rational throughout when all inputs are rational.
    """
    _check_profile(game, n, profile)
    k = game.players
    budget = _NodeBudget("exact_payoff")
    memo: dict = {}

    def rec(history: History) -> tuple:
        if history.t == n:
            return (Fraction(0),) * k
        key = (history.t,) + tuple(s.state_key(history) for s in profile)
        hit = memo.get(key)
        if hit is not None:
            return hit
        budget.spend()
        dists = [s.stage_distribution(game, history) for s in profile]
        totals = [Fraction(0)] * k
        for joint in product(*(d.support() for d in dists)):
            w = _branch_weight(dists, joint)
            if w is None:
                continue
            u = game.payoff(joint)
            sub = rec(history.append(joint))
            for i in range(k):
                totals[i] = totals[i] + w * (u[i] + sub[i])
        out = tuple(totals)
        memo[key] = out
        return out

    total = rec(History.empty(n))
    return RepeatedPayoff(tuple(v / n for v in total))


def monte_carlo_payoff(game: StageGame, n: int,
                       profile: Sequence[BehavioralStrategy],
                       plays: int, rng_seed: int) -> RepeatedPayoff:
    """Mean of i.i.d. playouts with per-player standard errors.

    Playout j draws from its own rng stream derived from (rng_seed, j), so
    results are reproducible and independent of evaluation order.
    """
    _check_profile(game, n, profile)
    if plays < 1:
        raise InvalidInputError("plays must be at least 1")
    k = game.players
    averages = np.empty((plays, k))
    for idx in range(plays):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([rng_seed, idx])))
        samplers = [s.begin_playout(rng) for s in profile]
        history = History.empty(n)
        totals = np.zeros(k)
        for _ in range(n):
            joint = tuple(s.act(game, history) for s in samplers)
            totals += [float(u) for u in game.payoff(joint)]
            history = history.append(joint)
        averages[idx] = totals / n
    mean = averages.mean(axis=0)
    if plays > 1:
        se = averages.std(axis=0, ddof=1) / math.sqrt(plays)
    else:
        se = np.zeros(k)
    return RepeatedPayoff(tuple(float(v) for v in mean),
                          tuple(float(v) for v in se))


def strategy_entropy(game: StageGame, n: int,
                     strategy: BehavioralStrategy) -> float:
    """Worst-case strategy entropy in bits.

    f(h) = H(sigma(h)) + max over ALL joint continuations of f; the max
    ranges over every terminal history, reachable or not, so this recursion
    does not prune.  Memoized on the strategy's state key.
    """
    if n < 1:
        raise InvalidInputError("horizon must be positive")
    budget = _NodeBudget("strategy_entropy")
    memo: dict = {}
    all_joints = list(product(*(range(m) for m in game.shape)))

    def rec(history: History) -> float:
        if history.t == n:
            return 0.0
        key = (history.t, strategy.state_key(history))
        hit = memo.get(key)
        if hit is not None:
            return hit
        budget.spend()
        h = shannon_entropy(strategy.stage_distribution(game, history))
        best = max(rec(history.append(joint)) for joint in all_joints)
        memo[key] = h + best
        return h + best

    return rec(History.empty(n))


def effective_entropy(game: StageGame, n: int,
                      profile: Sequence[BehavioralStrategy],
                      player: int) -> float:
    """Strategy entropy restricted to positive-probability histories."""
    _check_profile(game, n, profile)
    budget = _NodeBudget("effective_entropy")
    memo: dict = {}

    def rec(history: History) -> float:
        if history.t == n:
            return 0.0
        key = (history.t,) + tuple(s.state_key(history) for s in profile)
        hit = memo.get(key)
        if hit is not None:
            return hit
        budget.spend()
        dists = [s.stage_distribution(game, history) for s in profile]
        h = shannon_entropy(dists[player])
        best = -math.inf
        for joint in product(*(d.support() for d in dists)):
            if _branch_weight(dists, joint) is None:
                continue
            best = max(best, rec(history.append(joint)))
        if best == -math.inf:
            best = 0.0  # every branch under the float cutoff: treat as leaf
        memo[key] = h + best
        return h + best

    return rec(History.empty(n))


def tabulate(game: StageGame, n: int,
             strategy: BehavioralStrategy) -> TableStrategy:
    """Materialize any strategy as an explicit table over all histories."""
    budget = _NodeBudget("tabulate")
    table: dict = {}
    all_joints = list(product(*(range(m) for m in game.shape)))

    def rec(history: History) -> None:
        if history.t == n:
            return
        budget.spend()
        table[history.stages] = strategy.stage_distribution(game, history)
        for joint in all_joints:
            rec(history.append(joint))

    rec(History.empty(n))
    return TableStrategy(strategy.owner, table)

"""Equilibrium constructions for the n-stage repeated game.

Four families: stagewise repetition of a stage equilibrium, the low-entropy
folk-theorem trigger profile (pure schedule realizing a feasible IR target,
stage-NE tail, grim minmax punishment), the zero-sum epsilon-Nash profile
(minimal-entropy minmax stages then a deterministic payoff alternation),
and the matching-pennies epsilon-Nash profile.

Every emitted strategy carries a `spec` dict and a compact `state_key`, so
the engine's memoized recursions certify these profiles at horizons far
beyond the raw tree bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    DomainError,
    InternalInvariantError,
    InvalidInputError,
    UnsupportedError,
)
from .games import (
    MixedStrategy,
    PayoffProfile,
    StageGame,
    expected_payoff,
    get_game,
)
from .repeated import BehavioralStrategy, History, RuleStrategy
from .solver import (
    check_feasible_ir,
    enumerate_bimatrix_nash,
    min_entropy_minmax,
    minmax_solution,
    stage_deviation_gains,
)


def _probs_key(probs) -> list:
    return [str(Fraction(p)) if not isinstance(p, float) else p for p in probs]


def stagewise_strategy(owner: int, probs) -> RuleStrategy:
    """History-independent repetition of one mixed stage action."""
    dist = MixedStrategy(owner, tuple(probs))
    spec = {"rule": "stagewise", "owner": owner, "probs": _probs_key(dist.probs)}
    return RuleStrategy(owner, lambda g, h: dist, state_fn=lambda h: (),
                        spec=spec)


def _require_stage_ne(game: StageGame, dists: Sequence[MixedStrategy]) -> None:
    for i, (gain, action) in enumerate(stage_deviation_gains(game, dists)):
        if gain > 0:
            raise DomainError(
                f"not a stage equilibrium: player {i} gains {gain} by "
                f"playing {game.label(i, action)}")


def stagewise_equilibrium(game: StageGame, n: int,
                          stage_profile: Sequence[MixedStrategy]):
    """The canonical equilibrium: one stage NE played at every history."""
    if n < 1:
        raise InvalidInputError("horizon must be positive")
    dists = list(stage_profile)
    if len(dists) != game.players:
        raise InvalidInputError("need one stage strategy per player")
    _require_stage_ne(game, dists)
    return tuple(stagewise_strategy(i, dists[i].probs)
                 for i in range(game.players))


# -- folk-theorem construction ----------------------------------------------

@dataclass(frozen=True)
class FolkPlan:
    """The schedule, tail, and punishment data behind a folk profile.

    Phase 1 plays `schedule` (length blocks * denominator); the last
    `tail_length` stages cycle the per-player stage equilibria
    (`tail_equilibria[j % k]` at tail stage j); any phase-1 deviator is
    minmax-punished forever by `punishments[deviator]`.
    """

    schedule: tuple[tuple[int, ...], ...]
    tail_length: int
    tail_equilibria: tuple
    punishments: tuple[MixedStrategy, ...]
    payoff_target: PayoffProfile
    denominator: int
    blocks: int
    horizon: int

    def __post_init__(self):
        if self.tail_length + len(self.schedule) != self.horizon:
            raise InvalidInputError("schedule and tail must fill the horizon")
        if len(self.schedule) != self.blocks * self.denominator:
            raise InvalidInputError("schedule length must be blocks * K")


class FolkStrategy(BehavioralStrategy):
    """Trigger strategy: scheduled pure play, NE tail, grim punishment.

    The state key is the identity of the first phase-1 deviator (or None),
    which is all the future depends on besides the stage index.
    """

    def __init__(self, owner: int, schedule, tail_dists, punish_dists,
                 spec: Optional[dict] = None):
        super().__init__(owner, spec)
        self.schedule = tuple(tuple(p) for p in schedule)
        self.tail_dists = tuple(tail_dists)
        self.punish_dists = dict(punish_dists)

    def _deviator(self, history: History) -> Optional[int]:
        for t in range(min(history.t, len(self.schedule))):
            stage = history.stages[t]
            planned = self.schedule[t]
            if tuple(stage) != planned:
                for p, (got, want) in enumerate(zip(stage, planned)):
                    if got != want:
                        return p
        return None

    def stage_distribution(self, game, history):
        d = self._deviator(history)
        if d is not None:
            return self.punish_dists[d]
        t = history.t
        if t < len(self.schedule):
            return MixedStrategy.pure(self.owner, self.schedule[t][self.owner],
                                      game.num_actions(self.owner))
        return self.tail_dists[t - len(self.schedule)]

    def state_key(self, history):
        return self._deviator(history)


def folk_equilibrium(game: StageGame, n: int, target,
                     per_player_ne: Optional[Sequence] = None,
                     punishments: Optional[Sequence[MixedStrategy]] = None):
    """Build the low-entropy folk profile for a feasible IR payoff target.

    Divides the n stages into a pure schedule realizing the target exactly
    per block and a tail of m cycled stage equilibria, with m chosen as the
    smallest punishment buffer making every scheduled deviation unprofitable
    (then grown until K divides n - m).  Returns (profile, FolkPlan).
    """
    if game.players != 2:
        raise UnsupportedError(
            "folk construction is two-player only: punishing one of several "
            "opponents needs a joint punisher this engine does not model")
    k = game.players
    ir = check_feasible_ir(game, target)
    if ir.reason == "infeasible":
        raise DomainError(f"target {tuple(target)} is not feasible")
    if ir.reason == "not-IR":
        raise DomainError(
            f"target {tuple(target)} is not individually rational; "
            f"minmax profile is {ir.minmax.values}")
    decomposition = ir.decomposition
    v = ir.minmax

    sols = [minmax_solution(game, i) for i in range(k)]
    if punishments is None:
        punishments = tuple(sols[i].opponent_punisher for i in range(k))
    else:
        punishments = tuple(punishments)
        for i, pun in enumerate(punishments):
            if pun.owner != 1 - i:
                raise InvalidInputError(
                    f"punisher of player {i} must be owned by the opponent")
            cap = max(
                expected_payoff(game, [MixedStrategy.pure(i, a, game.num_actions(i)),
                                       pun] if i == 0 else
                                [pun, MixedStrategy.pure(i, a, game.num_actions(i))])[i]
                for a in range(game.num_actions(i)))
            if cap != v[i]:
                raise DomainError(
                    f"supplied punisher caps player {i} at {cap}, "
                    f"not the minmax level {v[i]}")

    K = decomposition.denominator
    numerators = decomposition.numerators()
    scheduled_profiles = sorted(numerators)

    # largest pure-deviation gain each player sees anywhere in the schedule
    max_gain = [Fraction(0)] * k
    for a in scheduled_profiles:
        dists = [MixedStrategy.pure(i, a[i], game.num_actions(i))
                 for i in range(k)]
        for i, (gain, _) in enumerate(stage_deviation_gains(game, dists)):
            if gain > max_gain[i]:
                max_gain[i] = gain

    need_tail = any(g > 0 for g in max_gain)
    if per_player_ne is not None:
        per_player_ne = [tuple(ne) for ne in per_player_ne]
        if len(per_player_ne) != k:
            raise InvalidInputError("need one tail equilibrium per player")
        for ne in per_player_ne:
            _require_stage_ne(game, ne)

    def find_tail():
        # player i's tail NE must beat v_i only when i has something to
        # deviate for in the schedule; otherwise any stage NE fills in
        nash = enumerate_bimatrix_nash(game)
        out = []
        for i in range(k):
            if max_gain[i] > 0:
                pick = next((prof for prof, pay in nash if pay[i] > v[i]),
                            None)
                if pick is None:
                    raise DomainError(
                        f"no stage equilibrium improves player {i} over the "
                        f"minmax payoff {v[i]}; the trigger plan cannot "
                        "punish")
            else:
                pick = next((prof for prof, _ in nash), None)
                if pick is None:
                    raise DomainError("no stage equilibrium to fill the tail")
            out.append(pick)
        return out

    # smallest m with (m/k) * (sum_j E u_i(sigma_j) - k v_i) >= every
    # scheduled deviation gain of player i
    m = 0
    if need_tail:
        if per_player_ne is None:
            per_player_ne = find_tail()
        ne_payoffs = [expected_payoff(game, list(ne)) for ne in per_player_ne]
        for i in range(k):
            if max_gain[i] <= 0:
                continue
            gap = sum(p[i] for p in ne_payoffs) - k * Fraction(v[i])
            if gap <= 0:
                raise DomainError(
                    f"tail equilibria leave no punishment gap for player {i}")
            m = max(m, math.ceil(k * max_gain[i] / gap))

    while m <= n and (n - m) % K != 0:
        m += 1
    if m > n or n - m < K:
        raise DomainError(
            f"horizon {n} too small: need at least {m} tail stages plus a "
            f"full schedule block of {K}")
    ell = (n - m) // K
    if m > 0 and per_player_ne is None:
        per_player_ne = find_tail()

    schedule = []
    for a in scheduled_profiles:
        schedule.extend([a] * (ell * numerators[a]))
    schedule = tuple(schedule)

    tail_base = tuple(tuple(ne) for ne in per_player_ne) if m > 0 else ()
    if m > 0 and not tail_base:
        raise InternalInvariantError("tail stages without tail equilibria")
    plan = FolkPlan(
        schedule=schedule, tail_length=m, tail_equilibria=tail_base,
        punishments=punishments,
        payoff_target=PayoffProfile(tuple(Fraction(t) for t in target)),
        denominator=K, blocks=ell, horizon=n)

    profile = []
    for i in range(k):
        tail_dists = tuple(tail_base[j % len(tail_base)][i] for j in range(m)) \
            if m > 0 else ()
        punish_dists = {}
        for d in range(k):
            if d == i:
                punish_dists[d] = sols[i].strategy
            else:
                punish_dists[d] = punishments[d]
        spec = {
            "rule": "folk-trigger", "owner": i,
            "schedule": [list(a) for a in schedule],
            "tail": [_probs_key(t.probs) for t in tail_dists],
            "punish": {str(d): _probs_key(punish_dists[d].probs)
                       for d in range(k)},
        }
        profile.append(FolkStrategy(i, schedule, tail_dists, punish_dists,
                                    spec=spec))
    return tuple(profile), plan


# -- zero-sum epsilon-Nash ---------------------------------------------------

def _exact_eps(eps) -> Fraction:
    return Fraction(eps)


def payoff_extremes(game: StageGame):
    """(a*, a-dagger): row-payoff argmax and argmin pure profiles.

    Ties go to the lexicographically first action profile.
    """
    best = worst = None
    for a in sorted(game.profiles()):
        p = Fraction(game.payoff_to(a, 0))
        if best is None or p > best[0]:
            best = (p, a)
        if worst is None or p < worst[0]:
            worst = (p, a)
    return best[1], worst[1]


def zerosum_epsnash(game: StageGame, n: int, eps):
    """Minimal-entropy minmax play, then an alternating payoff tail.

    The first floor(n(1-eps)) stages repeat each player's minimal-entropy
    minmax strategy; the remaining stages alternate deterministically
    between the row-best and row-worst pure profiles, starting at the best.
    """
    from .solver import solve_zero_sum
    solve_zero_sum(game)  # validates two-player zero-sum
    e = _exact_eps(eps)
    if not 0 < e <= 1:
        raise InvalidInputError("eps must lie in (0, 1]")
    if n < 1:
        raise InvalidInputError("horizon must be positive")
    k1 = math.floor(n * (1 - e))
    astar, adagger = payoff_extremes(game)
    mixes = [min_entropy_minmax(game, i)[1] for i in range(2)]

    def make(owner: int) -> RuleStrategy:
        mix = mixes[owner]

        def rule(g, h):
            if h.t < k1:
                return mix
            j = h.t - k1
            prof = astar if j % 2 == 0 else adagger
            return MixedStrategy.pure(owner, prof[owner],
                                      g.num_actions(owner))

        spec = {"rule": "zs-epsnash", "owner": owner, "k1": k1,
                "minmax": _probs_key(mix.probs),
                "astar": list(astar), "adagger": list(adagger)}
        return RuleStrategy(owner, rule, state_fn=lambda h: (), spec=spec)

    return make(0), make(1)


def zerosum_epsnash_bound(game: StageGame, n: int, eps) -> Fraction:
    """The deviation-gain bound c(ceil(n*eps)+1)/n with c = (p*-p't)/2."""
    e = _exact_eps(eps)
    astar, adagger = payoff_extremes(game)
    c = (Fraction(game.payoff_to(astar, 0))
         - Fraction(game.payoff_to(adagger, 0))) / 2
    return c * (math.ceil(n * e) + 1) / n


def mp_epsnash(n: int, eps):
    """Matching pennies: uniform for floor((1-eps)n) stages, then the row
    plays heads while the column alternates tails, heads, tails, ..."""
    e = _exact_eps(eps)
    if not 0 <= e <= 1:
        raise InvalidInputError("eps must lie in [0, 1]")
    if n < 1:
        raise InvalidInputError("horizon must be positive")
    game = get_game("matching-pennies")
    k1 = math.floor((1 - e) * n)
    uniform = [MixedStrategy.uniform(i, 2) for i in range(2)]

    def make(owner: int) -> RuleStrategy:
        def rule(g, h):
            if h.t < k1:
                return uniform[owner]
            if owner == 0:
                return MixedStrategy.pure(0, 0, 2)  # heads
            j = h.t - k1
            return MixedStrategy.pure(1, 1 if j % 2 == 0 else 0, 2)

        spec = {"rule": "mp-epsnash", "owner": owner, "k1": k1}
        return RuleStrategy(owner, rule, state_fn=lambda h: (), spec=spec)

    return make(0), make(1)

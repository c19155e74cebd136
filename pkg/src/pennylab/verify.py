"""Equilibrium certification for the repeated game.

Exact best responses by memoized backward induction, per-player
exploitability with (eps-)Nash verdicts, the on-path stage-equilibrium
check, entropy lower-bound reports against the linear-entropy floor, and
the matching-pennies potential diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    DomainError,
    InternalInvariantError,
    InvalidInputError,
    ResourceLimitError,
    UnsupportedError,
)
from .formatting import fmt_number
from .games import MixedStrategy, StageGame, get_game, shannon_entropy
from .repeated import (
    PROB_CUTOFF,
    BehavioralStrategy,
    History,
    RuleStrategy,
    _branch_weight,
    _check_profile,
    _NodeBudget,
    effective_entropy,
    exact_payoff,
    strategy_entropy,
)
from .solver import (
    enumerate_bimatrix_nash,
    min_entropy_minmax,
    minmax_profile,
    stage_deviation_gains,
)

#: float-mode tolerance for "no profitable deviation"
NE_TOL = 1e-9


def best_response_value(game: StageGame, n: int,
                        opponent: BehavioralStrategy, player: int):
    """Optimal average payoff of a free deviator against a fixed opponent.

    Backward induction V(h) = max_a E_b[u(a,b) + V(h+(a,b))], memoized on
    (stage, opponent state key), pruning opponent branches of probability
    zero.  Returns (value, argmax pure behavioral strategy); ties break to
    the lexicographically first action, so the deviation is deterministic.
    """
    if game.players != 2:
        raise UnsupportedError("exact best response needs a two-player game")
    if player not in (0, 1):
        raise InvalidInputError(f"no player {player} in a two-player game")
    if n < 1:
        raise InvalidInputError("horizon must be positive")
    if opponent.owner != 1 - player:
        raise InvalidInputError(
            f"opponent strategy is owned by seat {opponent.owner}, "
            f"expected {1 - player}")
    budget = _NodeBudget("best_response_value")
    memo: dict = {}

    def node(history: History):
        if history.t == n:
            return Fraction(0), None
        key = (history.t, opponent.state_key(history))
        hit = memo.get(key)
        if hit is not None:
            return hit
        budget.spend()
        dist = opponent.stage_distribution(game, history)
        best = None
        best_action = 0
        for a in range(game.num_actions(player)):
            total = Fraction(0)
            for b in dist.support():
                p = dist.probs[b]
                if isinstance(p, float) and p <= PROB_CUTOFF:
                    continue
                joint = (a, b) if player == 0 else (b, a)
                total += p * (game.payoff_to(joint, player)
                              + node(history.append(joint))[0])
            if best is None or total > best:
                best, best_action = total, a
        memo[key] = (best, best_action)
        return memo[key]

    value = node(History.empty(n))[0] / n

    def rule(g: StageGame, h: History) -> MixedStrategy:
        return MixedStrategy.pure(player, node(h)[1], g.num_actions(player))

    deviation = RuleStrategy(player, rule, state_fn=opponent.state_key)
    return value, deviation


def _eps_text(eps) -> str:
    return repr(eps) if isinstance(eps, float) else str(eps)


@dataclass(frozen=True)
class EquilibriumReport:
    """Certified exploitability, entropy, and verdict for one profile."""

    exploitability: tuple
    entropy: tuple
    effective_entropy: tuple
    payoff: tuple
    verdict: str
    witness: Optional[tuple]  # (player, deviation strategy, gain)
    mode: str  # "rational" | "float"

    @property
    def max_exploitability(self):
        return max(self.exploitability)

    def to_text(self) -> str:
        lines = [
            "verdict: " + self.verdict,
            "payoff: " + " ".join(fmt_number(v) for v in self.payoff),
            "exploitability: " + " ".join(
                fmt_number(e) for e in self.exploitability),
            "entropy: " + " ".join(fmt_number(h) for h in self.entropy),
            "effective_entropy: " + " ".join(
                fmt_number(h) for h in self.effective_entropy),
        ]
        if self.witness is None:
            lines.append("witness: none")
        else:
            who, _, gain = self.witness
            lines.append(f"witness: player={who} gain={fmt_number(gain)}")
        lines.append("mode: " + self.mode)
        return "\n".join(lines) + "\n"


def certify(game: StageGame, n: int,
            profile: Sequence[BehavioralStrategy],
            eps=None) -> EquilibriumReport:
    """Exploitability of every player's seat, with an (eps-)Nash verdict.

    epsilon_i = best_response_value_i - exact_payoff_i, exact when the
    profile is rational-valued.  verdict: exact-NE when no player gains
    (max eps_i = 0 exactly, or <= 1e-9 in float mode); eps-NE(eps) when a
    tolerance was supplied and covers the worst gain; otherwise not-NE
    with the worst deviator as witness.
    """
    _check_profile(game, n, profile)
    pay = exact_payoff(game, n, profile)
    gains = []
    deviations = []
    for i in range(game.players):
        value, deviation = best_response_value(game, n, profile[1 - i], i)
        gain = value - pay[i]
        if isinstance(gain, Fraction):
            if gain < 0:
                raise InternalInvariantError(
                    f"best response below compliance for player {i}: {gain}")
        else:
            if gain < -NE_TOL:
                raise InternalInvariantError(
                    f"best response below compliance for player {i}: {gain}")
            gain = max(0.0, gain)
        gains.append(gain)
        deviations.append(deviation)
    mode = "rational" if all(
        not isinstance(g, float) for g in gains) else "float"
    worst = max(range(game.players), key=lambda i: gains[i])
    top = gains[worst]
    exact = top == 0 if mode == "rational" else top <= NE_TOL
    if exact:
        verdict, witness = "exact-NE", None
    else:
        witness = (worst, deviations[worst], top)
        covered = False
        if eps is not None:
            if isinstance(top, float) or isinstance(eps, float):
                covered = float(top) <= float(eps) + NE_TOL
            else:
                covered = top <= eps
        verdict = f"eps-NE({_eps_text(eps)})" if covered else "not-NE"
    return EquilibriumReport(
        exploitability=tuple(gains),
        entropy=tuple(strategy_entropy(game, n, s) for s in profile),
        effective_entropy=tuple(
            effective_entropy(game, n, profile, i)
            for i in range(game.players)),
        payoff=tuple(pay.values),
        verdict=verdict,
        witness=witness,
        mode=mode,
    )


# -- on-path stage-equilibrium check ----------------------------------------

@dataclass(frozen=True)
class OnpathViolation:
    history: tuple
    player: int
    action: str
    gain: object


@dataclass(frozen=True)
class OnpathReport:
    """Stage best-response verdicts over the positive-probability tree.

    `near_zero` lists float-valued branches with probability in
    (0, 1e-12]; they are skipped rather than classified.
    """

    hypothesis_met: bool
    checked: int
    violations: tuple
    near_zero: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def _all_ne_equal_minmax(game: StageGame) -> bool:
    if game.players != 2:
        return False
    try:
        nash = enumerate_bimatrix_nash(game)
    except (DomainError, ResourceLimitError):
        return False
    if not len(nash):
        return False
    v = minmax_profile(game)
    return all(tuple(pay.values) == tuple(v.values) for _, pay in nash)


def onpath_stage_check(game: StageGame, n: int,
                       profile: Sequence[BehavioralStrategy]) -> OnpathReport:
    """Check that sigma(h) is a stage equilibrium at every on-path history.

    The proposition behind this check needs every stage NE payoff to equal
    the minmax profile; when that hypothesis fails the check still runs but
    the report says hypothesis_met=False.  Histories with equal state keys
    share one verdict.
    """
    _check_profile(game, n, profile)
    hypothesis = _all_ne_equal_minmax(game)
    budget = _NodeBudget("onpath_stage_check")
    violations: list = []
    near_zero: list = []
    seen: set = set()
    checked = 0

    def visit(history: History) -> None:
        nonlocal checked
        if history.t == n:
            return
        key = (history.t,) + tuple(s.state_key(history) for s in profile)
        if key in seen:
            return
        seen.add(key)
        budget.spend()
        checked += 1
        dists = [s.stage_distribution(game, history) for s in profile]
        for i, (gain, action) in enumerate(stage_deviation_gains(game, dists)):
            bad = gain > NE_TOL if isinstance(gain, float) else gain > 0
            if bad:
                violations.append(OnpathViolation(
                    history.stages, i, game.label(i, action), gain))
        for joint in game.profiles():
            if _branch_weight(dists, joint) is None:
                if all(d.probs[a] > 0 for d, a in zip(dists, joint)):
                    near_zero.append(history.append(joint).stages)
                continue
            visit(history.append(joint))

    visit(History.empty(n))
    return OnpathReport(hypothesis, checked, tuple(violations),
                        tuple(near_zero))


# -- entropy lower bounds ---------------------------------------------------

@dataclass(frozen=True)
class PlayerEntropyBound:
    entropy: float
    beta: float
    bound: float  # n * beta
    meets: bool


@dataclass(frozen=True)
class MPFloor:
    floor: float  # 1 - H(sigma_i)/n
    best_response: object
    meets: bool


@dataclass(frozen=True)
class EntropyBoundReport:
    applies: bool  # every stage NE payoff equals the minmax profile
    players: tuple
    mp_floors: Optional[tuple] = None

    @property
    def ok(self) -> bool:
        return all(p.meets for p in self.players) and (
            self.mp_floors is None or all(f.meets for f in self.mp_floors))


def entropy_floor(game: StageGame, player: int):
    """Minimal entropy over the player's equilibrium strategies.

    Zero-sum: minimal-entropy minmax strategy (optimal = equilibrium
    there).  Otherwise the minimum over enumerated equilibrium vertices;
    entropy is concave, so vertices suffice.  Returns (bits, strategy).
    """
    if game.zero_sum:
        return min_entropy_minmax(game, player)
    nash = enumerate_bimatrix_nash(game)
    if not len(nash):
        raise DomainError("no equilibrium found to define the entropy floor")
    best = min((prof[player] for prof, _ in nash), key=shannon_entropy)
    return shannon_entropy(best), best


def _is_matching_pennies(game: StageGame) -> bool:
    mp = get_game("matching-pennies")
    return game.shape == mp.shape and all(
        game.payoff(prof) == mp.payoff(prof) for prof in game.profiles())


def entropy_bound_check(game: StageGame, n: int,
                        profile: Sequence[BehavioralStrategy]
                        ) -> EntropyBoundReport:
    """Measured strategy entropy versus the linear floor n*beta_i.

    beta_i is the minimal entropy over player i's equilibrium strategies;
    the floor binds when every stage NE payoff equals the minmax profile
    (always true for zero-sum).  For matching pennies the report adds the
    exploitation floor eps = 1 - H(sigma_i)/n together with the opponent's
    exact best-response value, which must reach it.
    """
    _check_profile(game, n, profile)
    applies = game.zero_sum or _all_ne_equal_minmax(game)
    players = []
    entropies = []
    for i in range(game.players):
        h = strategy_entropy(game, n, profile[i])
        beta = entropy_floor(game, i)[0] if applies else 0.0
        bound = n * beta
        players.append(PlayerEntropyBound(h, beta, bound,
                                          h >= bound - NE_TOL))
        entropies.append(h)
    mp_floors = None
    if _is_matching_pennies(game):
        floors = []
        for i in range(game.players):
            floor = 1.0 - entropies[i] / n
            br = best_response_value(game, n, profile[i], 1 - i)[0]
            floors.append(MPFloor(floor, br, float(br) >= floor - NE_TOL))
        mp_floors = tuple(floors)
    return EntropyBoundReport(applies, tuple(players), mp_floors)


# -- matching-pennies potential diagnostic ----------------------------------

def mp_potential_trace(n: int, opponent) -> tuple:
    """Per-stage expected increments of the matching-pennies potential.

    The potential adds realized payoffs and subtracts the entropy of the
    column player's remaining play; with the row seat playing the
    most-likely-action response, the stage-t expected increment is
    E[2p - 1 + H(sigma(h))] over on-path histories h of length t-1, where
    p is the largest stage probability.  Every increment is >= 1.

    `opponent` is the column strategy, or a 2-profile whose column
    component is used (the row component is replaced by the most-likely
    response, which the diagnostic is defined for).
    """
    if n < 1:
        raise InvalidInputError("horizon must be positive")
    if n > 24:
        raise ResourceLimitError("potential trace walks the full tree; "
                                 "n capped at 24")
    if isinstance(opponent, (list, tuple)):
        cols = [s for s in opponent if s.owner == 1]
        if len(cols) != 1:
            raise InvalidInputError("profile must contain one column strategy")
        opponent = cols[0]
    if opponent.owner != 1:
        raise InvalidInputError("potential trace exploits the column seat")
    mp = get_game("matching-pennies")
    increments = [0.0] * n

    def walk(history: History, prob: float) -> None:
        if history.t == n:
            return
        dist = opponent.stage_distribution(mp, history)
        if len(dist.probs) != 2:
            raise DomainError("potential trace is defined for matching "
                              "pennies (two actions)")
        p0, p1 = (float(q) for q in dist.probs)
        likely = 0 if p0 >= p1 else 1
        p = max(p0, p1)
        increments[history.t] += prob * (2.0 * p - 1.0
                                         + shannon_entropy(dist))
        for b in dist.support():
            w = float(dist.probs[b])
            if w <= PROB_CUTOFF:
                continue
            walk(history.append((likely, b)), prob * w)

    walk(History.empty(n), 1.0)
    return tuple(increments)

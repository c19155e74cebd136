"""Exploitation algorithms against low-entropy opponents.

Three attackers: the myopic per-history best response (play a stage best
reply to the opponent's current mixed action), a context predictor for
two-action zero-sum play (predict the opponent's next action from its
last L actions, match when confident), and an exact Bayesian seed learner
for seeded programs whose code is known but whose seed register is hidden.

Also the restricted seeded matching-pennies program families used as
benchmark opponents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import DomainError, InternalInvariantError, InvalidInputError
from .games import MixedStrategy, StageGame, get_game
from .repeated import (
    BehavioralStrategy,
    History,
    RuleStrategy,
    SeededStrategy,
)
from .solver import min_entropy_minmax

#: observations of a context required before the predictor may commit
MIN_SUPPORT = 3


def statistical_distance(p, q):
    """Half the L1 distance between two distributions, in [0, 1]."""
    pp = p.probs if isinstance(p, MixedStrategy) else tuple(p)
    qq = q.probs if isinstance(q, MixedStrategy) else tuple(q)
    if len(pp) != len(qq):
        raise InvalidInputError(
            f"distributions differ in size: {len(pp)} vs {len(qq)}")
    total = sum(abs(a - b) for a, b in zip(pp, qq))
    return total / 2


def _stage_best_reply(game: StageGame, player: int,
                      dist: MixedStrategy) -> int:
    """Lexicographically first own action maximizing the stage expectation."""
    opp = 1 - player
    best, best_a = None, 0
    for a in range(game.num_actions(player)):
        total = 0
        for b, w in enumerate(dist.probs):
            if w == 0:
                continue
            prof = (a, b) if player == 0 else (b, a)
            total = total + w * game.payoff_to(prof, player)
        if best is None or total > best:
            best, best_a = total, a
    return best_a


def best_response_exploiter(game: StageGame, n: int,
                            opponent: BehavioralStrategy) -> BehavioralStrategy:
    """Myopic exploiter: stage best reply to the opponent's mixed action.

    Deterministic; on matching pennies this is exactly "play the
    opponent's most likely action" (ties to heads).  Weaker than full
    backward induction in general but needs no horizon bookkeeping.
    """
    if game.players != 2:
        raise InvalidInputError("the myopic exploiter is two-player")
    player = 1 - opponent.owner

    def rule(g: StageGame, h: History) -> MixedStrategy:
        dist = opponent.stage_distribution(g, h)
        a = _stage_best_reply(g, player, dist)
        return MixedStrategy.pure(player, a, g.num_actions(player))

    return RuleStrategy(player, rule, state_fn=opponent.state_key)


# -- context predictor -------------------------------------------------------

@dataclass
class PredictorState:
    """Per-context action counts over the opponent's observed sequence.

    `predict` commits once a context's raw empirical frequency reaches
    `tau` on at least `min_support` observations; `distribution` reports
    the Laplace-smoothed estimate (never a hard zero).
    """

    context_length: int = 1
    tau: float = 0.9
    min_support: int = MIN_SUPPORT
    num_actions: int = 2
    counts: dict = field(default_factory=dict)

    def observe(self, context: tuple, action: int) -> None:
        per = self.counts.setdefault(tuple(context), [0] * self.num_actions)
        per[action] += 1

    def predict(self, context: tuple) -> Optional[int]:
        per = self.counts.get(tuple(context))
        if per is None:
            return None
        total = sum(per)
        if total < self.min_support:
            return None
        top = max(range(self.num_actions), key=lambda a: (per[a], -a))
        if Fraction(per[top], total) >= Fraction(self.tau):
            return top
        return None

    def distribution(self, context: tuple) -> tuple:
        per = self.counts.get(tuple(context), [0] * self.num_actions)
        total = sum(per) + self.num_actions
        return tuple(Fraction(c + 1, total) for c in per)

    def confidence(self, context: tuple):
        per = self.counts.get(tuple(context))
        if per is None or sum(per) == 0:
            return Fraction(0)
        return Fraction(max(per), sum(per))


def _predictor_from(template: PredictorState) -> PredictorState:
    if not 0.5 < float(template.tau) <= 1:
        raise InvalidInputError("confidence threshold must lie in (1/2, 1]")
    if template.context_length < 1 or template.context_length > 3:
        raise InvalidInputError("context length must be 1, 2, or 3")
    return PredictorState(template.context_length, template.tau,
                          template.min_support, template.num_actions)


def _trained_state(template: PredictorState, seq) -> PredictorState:
    state = _predictor_from(template)
    L = state.context_length
    for t in range(L, len(seq)):
        state.observe(seq[t - L:t], seq[t])
    return state


def predictor_strategy(predictor: PredictorState, game: Optional[StageGame]
                       = None, n: Optional[int] = None) -> BehavioralStrategy:
    """Row strategy wrapping a next-action predictor on the column's play.

    Uniform until the predictor commits for the current context, then the
    stage best reply to the predicted action (on matching pennies: match
    it).  The counts are a pure function of the visible history, so the
    strategy supports exact evaluation; `n` is accepted for interface
    symmetry.
    """
    if game is None:
        game = get_game("matching-pennies")
    if game.players != 2 or not game.zero_sum:
        raise DomainError("the predictor wrapper needs a zero-sum game")
    if game.shape != (2, 2):
        raise DomainError("the predictor wrapper is for two-action games")
    _predictor_from(predictor)  # validate once up front
    L = predictor.context_length

    def rule(g: StageGame, h: History) -> MixedStrategy:
        seq = h.own(1)
        if len(seq) >= L:
            state = _trained_state(predictor, seq)
            guess = state.predict(seq[-L:])
            if guess is not None:
                a = _stage_best_reply(g, 0, MixedStrategy.pure(1, guess, 2))
                return MixedStrategy.pure(0, a, 2)
        return MixedStrategy.uniform(0, 2)

    spec = {"rule": "predictor", "owner": 0,
            "context_length": predictor.context_length,
            "tau": float(predictor.tau),
            "min_support": predictor.min_support}
    strategy = RuleStrategy(0, rule, state_fn=lambda h: h.own(1), spec=spec)
    strategy.diagnostic = lambda g, h: float(
        _trained_state(predictor, h.own(1)).confidence(h.own(1)[-L:])
    ) if len(h.own(1)) >= L else 0.0
    return strategy


# -- exact Bayesian seed learner --------------------------------------------

@dataclass(frozen=True)
class SeedPosterior:
    """Uniform prior over the seed register conditioned on observed play."""

    consistent_seeds: tuple
    observations: tuple  # the public history stages so far

    @property
    def weights(self) -> dict:
        w = Fraction(1, len(self.consistent_seeds))
        return {s: w for s in self.consistent_seeds}

    def __len__(self):
        return len(self.consistent_seeds)


@dataclass(frozen=True)
class Hypothesis:
    """The learner's one-shot claim about the opponent's next actions."""

    distribution: tuple
    sd_bound: object
    stage: int  # 1-based stage at which the hypothesis was emitted


def weakly_dominant_actions(game: StageGame, player: int) -> tuple:
    """Pure actions weakly dominating every alternative (two-player)."""
    opp = 1 - player
    out = []
    for a in range(game.num_actions(player)):
        dominant = True
        for a2 in range(game.num_actions(player)):
            for b in range(game.num_actions(opp)):
                pa = (a, b) if player == 0 else (b, a)
                p2 = (a2, b) if player == 0 else (b, a2)
                if game.payoff_to(pa, player) < game.payoff_to(p2, player):
                    dominant = False
                    break
            if not dominant:
                break
        if dominant:
            out.append(a)
    return tuple(out)


class SeedLearnerStrategy(BehavioralStrategy):
    """Row learner for a known column program with a hidden seed register.

    Plays the minimal-entropy minmax strategy while exactly filtering the
    uniform seed prior on the opponent's realized actions; once the
    posterior-predicted next action is within statistical distance
    `sd_threshold` of a point mass, emits a Hypothesis and best-responds
    to the (by default continually updated) prediction for the rest of
    the run.  `freeze=True` recovers the single-hypothesis protocol: the
    posterior is pinned at emission.

    One instance per session: `hypothesis` records the first emission.
    """

    def __init__(self, game: StageGame, n: int, opponent: SeededStrategy,
                 sd_threshold=0, conf=None, freeze: bool = False):
        super().__init__(0, spec=None)
        if game.players != 2:
            raise DomainError("the seed learner is two-player")
        if not game.zero_sum:
            raise DomainError("the seed learner needs a zero-sum game")
        if not 0 <= Fraction(sd_threshold) <= 1:
            raise InvalidInputError("sd threshold must lie in [0, 1]")
        self.game = game
        self.n = n
        self.opponent = opponent
        self.sd_threshold = Fraction(sd_threshold)
        self.conf = conf  # informational: the exact filter cannot fail
        self.freeze = freeze
        self.minmax_mix = min_entropy_minmax(game, 0)[1]
        self.guarantee_void = bool(
            weakly_dominant_actions(game, 0) or
            weakly_dominant_actions(game, 1))
        self.hypothesis: Optional[Hypothesis] = None

    def posterior(self, history: History) -> SeedPosterior:
        keep = []
        for seed in range(self.opponent.num_seeds):
            ok = True
            for t in range(history.t):
                if self.opponent.action(history.prefix(t), seed) != \
                        history.stages[t][1]:
                    ok = False
                    break
            if ok:
                keep.append(seed)
        if not keep:
            raise InternalInvariantError(
                "no seed is consistent with the observed play; the opponent "
                "is not the declared program")
        return SeedPosterior(tuple(keep), history.stages)

    def _prediction(self, history: History,
                    posterior: SeedPosterior) -> tuple:
        size = self.game.num_actions(1)
        probs = [Fraction(0)] * size
        w = Fraction(1, len(posterior))
        for seed in posterior.consistent_seeds:
            probs[self.opponent.action(history, seed)] += w
        return tuple(probs)

    def _emission_stage(self, history: History) -> Optional[int]:
        """First 0-based t along this history with a point-mass prediction."""
        for t in range(history.t + 1):
            prefix = history.prefix(t)
            pred = self._prediction(prefix, self.posterior(prefix))
            if max(pred) >= 1 - self.sd_threshold:
                return t
        return None

    def stage_distribution(self, game: StageGame,
                           history: History) -> MixedStrategy:
        t0 = self._emission_stage(history)
        if t0 is None:
            return self.minmax_mix
        base = history.prefix(t0) if self.freeze else history
        pred = self._prediction(history, self.posterior(base))
        if self.hypothesis is None:
            at_emission = history.prefix(t0)
            first = self._prediction(at_emission, self.posterior(at_emission))
            self.hypothesis = Hypothesis(first, self.sd_threshold, t0 + 1)
        a = _stage_best_reply(game, 0, MixedStrategy(1, pred))
        return MixedStrategy.pure(0, a, game.num_actions(0))

    def state_key(self, history: History):
        if self.opponent.state_fn is None:
            base = history.stages
        else:
            base = self.opponent.state_fn(history)
        post = self.posterior(history)
        t0 = self._emission_stage(history)
        frozen = None
        if self.freeze and t0 is not None:
            frozen = self.posterior(history.prefix(t0)).consistent_seeds
        return (base, post.consistent_seeds, t0 is not None, frozen)

    def diagnostic(self, game: StageGame, history: History):
        return len(self.posterior(history))


def seed_learner_strategy(game: StageGame, n: int, opponent: SeededStrategy,
                          sd_threshold=0, conf=None,
                          freeze: bool = False) -> SeedLearnerStrategy:
    return SeedLearnerStrategy(game, n, opponent, sd_threshold, conf, freeze)


def fixed_seed_opponent(seeded: SeededStrategy, seed: int,
                        owner: int = 1) -> RuleStrategy:
    """The deterministic column induced by pinning the seed register."""
    if not 0 <= seed < seeded.num_seeds:
        raise InvalidInputError(f"seed {seed} outside the register")

    def rule(g: StageGame, h: History) -> MixedStrategy:
        return MixedStrategy.pure(owner, seeded.action(h, seed),
                                  g.num_actions(owner))

    state_fn = seeded.state_fn
    return RuleStrategy(owner, rule,
                        state_fn=state_fn if state_fn is not None else None)


# -- benchmark opponent families ---------------------------------------------

#: per-stage rules of the restricted matching-pennies program family
FAMILY_RULES = 8


def mp_family_program(code: int, n: int = 4,
                      seed_bits: int = 4) -> SeededStrategy:
    """Member `code` of the 8^n restricted seeded program family.

    Each stage picks one of eight rules by the base-8 digits of `code`:
    0 heads, 1 tails, 2 repeat own previous action (heads at stage 1),
    3 flip own previous (tails at stage 1), 4 the stage-indexed seed bit,
    5 its complement, 6 the first seed bit, 7 its complement.
    """
    if not 0 <= code < FAMILY_RULES ** n:
        raise InvalidInputError(f"family code outside 0..{FAMILY_RULES**n-1}")
    digits = tuple((code // FAMILY_RULES ** t) % FAMILY_RULES
                   for t in range(n))

    def program(h: History, seed: int) -> int:
        t = h.t
        rule = digits[t] if t < n else digits[-1]
        prev = h.stages[t - 1][1] if t > 0 else None
        if rule == 0:
            return 0
        if rule == 1:
            return 1
        if rule == 2:
            return prev if prev is not None else 0
        if rule == 3:
            return 1 - prev if prev is not None else 1
        bit = (seed >> (t % seed_bits)) & 1 if rule in (4, 5) else seed & 1
        return bit if rule in (4, 6) else 1 - bit

    def state_fn(h: History):
        return h.stages[-1][1] if h.stages else None

    return SeededStrategy(seed_bits, program, state_fn=state_fn,
                          name=f"mp-family-{code}")


def mp_family_pure_codes(n: int = 4) -> tuple:
    """Codes whose every stage rule is a fixed action: the 2^n deterministic
    sequences, covering the constant and alternating benchmarks."""
    out = []
    for mask in range(1 << n):
        code = 0
        for t in range(n):
            code += ((mask >> t) & 1) * FAMILY_RULES ** t
        out.append(code)
    return tuple(out)


def bit_cycle_program(seed_bits: int = 4) -> SeededStrategy:
    """Plays the seed bits in order, repeating every `seed_bits` stages."""

    def program(h: History, seed: int) -> int:
        return (seed >> (h.t % seed_bits)) & 1

    return SeededStrategy(seed_bits, program, state_fn=lambda h: (),
                          name=f"bit-cycle-{seed_bits}")


# -- transcripts -------------------------------------------------------------

def exploit_transcript(game: StageGame, n: int,
                       exploiter: BehavioralStrategy,
                       opponent: BehavioralStrategy,
                       rng_seed: int = 0) -> list:
    """One playout as transcript rows for delimited export.

    Rows carry 1-based stage, both action labels, the exploiter's
    diagnostic (posterior size or predictor confidence, when offered),
    and the running average payoff of the exploiter's seat.
    """
    strategies = sorted([exploiter, opponent], key=lambda s: s.owner)
    if [s.owner for s in strategies] != [0, 1]:
        raise InvalidInputError("need one strategy per seat")
    players = [
        s.begin_playout(np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([rng_seed, i]))))
        for i, s in enumerate(strategies)]
    diag = getattr(exploiter, "diagnostic", None)
    history = History.empty(n)
    rows = []
    total = Fraction(0)
    seat = exploiter.owner
    for t in range(n):
        note = diag(game, history) if diag is not None else ""
        joint = tuple(p.act(game, history) for p in players)
        total = total + game.payoff_to(joint, seat)
        history = history.append(joint)
        rows.append({
            "stage": t + 1,
            "own_action": game.label(seat, joint[seat]),
            "opp_action": game.label(1 - seat, joint[1 - seat]),
            "diagnostic": note,
            "running_average": total / (t + 1),
        })
    return rows

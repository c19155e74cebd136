"""Finite normal-form stage games with exact rational payoffs.

The payoff tensor is stored as a mapping from joint action profiles (tuples
of per-player action indices) to per-player payoff tuples.  Payoffs are kept
as `fractions.Fraction` whenever possible so that downstream certification
can report exact zeros instead of tolerances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import InvalidInputError

Number = Union[Fraction, float]

#: absolute tolerance for float probability vectors summing to one
PROB_TOL = 1e-9

#: actions per player are capped; this is a desk-scale oracle, not a solver
MAX_ACTIONS = 16


def as_number(x) -> Number:
    """Coerce ints and Fractions to Fraction, leave floats alone."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    raise InvalidInputError(f"not a payoff/probability value: {x!r}")


def is_exact(values: Iterable[Number]) -> bool:
    return all(isinstance(v, Fraction) for v in values)


@dataclass(frozen=True)
class StageGame:
    """A finite strategic game: players, ordered action labels, payoff tensor.

    `payoffs` maps every joint profile (tuple of action indices, one per
    player) to a tuple of per-player payoffs.
    """

    players: int
    actions: tuple[tuple[str, ...], ...]
    payoffs: Mapping[tuple[int, ...], tuple[Number, ...]]
    name: str = ""

    def __post_init__(self):
        if self.players < 2:
            raise InvalidInputError("need at least two players")
        if len(self.actions) != self.players:
            raise InvalidInputError("one action list per player required")
        for labels in self.actions:
            if not labels:
                raise InvalidInputError("empty action set")
            if len(labels) > MAX_ACTIONS:
                raise InvalidInputError(f"more than {MAX_ACTIONS} actions")
            if len(set(labels)) != len(labels):
                raise InvalidInputError(f"duplicate action labels in {labels}")
        expected = list(product(*(range(len(a)) for a in self.actions)))
        if set(self.payoffs.keys()) != set(expected):
            raise InvalidInputError("payoff tensor does not cover exactly "
                                    "all joint action profiles")
        for prof, vals in self.payoffs.items():
            if len(vals) != self.players:
                raise InvalidInputError(f"profile {prof}: need one payoff per player")

    # -- shape helpers -------------------------------------------------

    def num_actions(self, player: int) -> int:
        return len(self.actions[player])

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.actions)

    def profiles(self) -> Iterator[tuple[int, ...]]:
        return product(*(range(len(a)) for a in self.actions))

    def payoff(self, profile: Sequence[int]) -> tuple[Number, ...]:
        return self.payoffs[tuple(profile)]

    def payoff_to(self, profile: Sequence[int], player: int) -> Number:
        return self.payoffs[tuple(profile)][player]

    @property
    def zero_sum(self) -> bool:
        """True iff the two players' payoffs cancel at every profile (k=2)."""
        if self.players != 2:
            return False
        return all(vals[0] + vals[1] == 0 for vals in self.payoffs.values())

    @property
    def exact(self) -> bool:
        return all(is_exact(vals) for vals in self.payoffs.values())

    def payoff_range(self) -> tuple[Number, Number]:
        vals = [v for t in self.payoffs.values() for v in t]
        return min(vals), max(vals)

    def matrix(self, player: int):
        """Payoffs of `player` as a nested list indexed row-major by profile
        (only meaningful for two-player games)."""
        if self.players != 2:
            raise InvalidInputError("matrix view is for two-player games")
        return [[self.payoffs[(i, j)][player] for j in range(self.num_actions(1))]
                for i in range(self.num_actions(0))]

    def label(self, player: int, action: int) -> str:
        return self.actions[player][action]

    def action_index(self, player: int, label: str) -> int:
        try:
            return self.actions[player].index(label)
        except ValueError:
            raise InvalidInputError(
                f"player {player} has no action {label!r}") from None

    @classmethod
    def from_tables(cls, actions: Sequence[Sequence[str]],
                    tables, name: str = "") -> "StageGame":
        """Build a game from one nested payoff array.

        For two players `tables[i][j]` is the pair `(u1, u2)`; in general the
        nesting follows the player order with a final per-player tuple.
        """
        actions_t = tuple(tuple(a) for a in actions)
        players = len(actions_t)
        payoffs = {}
        for prof in product(*(range(len(a)) for a in actions_t)):
            cell = tables
            try:
                for idx in prof:
                    cell = cell[idx]
                payoffs[prof] = tuple(as_number(v) for v in cell)
            except (IndexError, TypeError):
                raise InvalidInputError(
                    f"payoff table has no entry for profile {prof}") from None
        return cls(players=players, actions=actions_t, payoffs=payoffs, name=name)


@dataclass(frozen=True)
class MixedStrategy:
    """A probability distribution over one player's actions."""

    owner: int
    probs: tuple[Number, ...]

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(as_number(p) for p in self.probs))
        total = sum(self.probs)
        if any((p < 0 if isinstance(p, Fraction) else p < -PROB_TOL)
               for p in self.probs):
            raise InvalidInputError(f"negative weight in {self.probs}")
        if isinstance(total, Fraction):
            if total != 1:
                raise InvalidInputError(f"weights sum to {total}, not 1")
        elif abs(total - 1.0) > PROB_TOL:
            raise InvalidInputError(f"weights sum to {total}, not 1")

    def __len__(self) -> int:
        return len(self.probs)

    @property
    def exact(self) -> bool:
        return is_exact(self.probs)

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.probs) if p > 0)

    def is_pure(self) -> bool:
        return sum(1 for p in self.probs if p > 0) == 1

    @classmethod
    def pure(cls, owner: int, action: int, size: int) -> "MixedStrategy":
        probs = [Fraction(0)] * size
        probs[action] = Fraction(1)
        return cls(owner, tuple(probs))

    @classmethod
    def uniform(cls, owner: int, size: int) -> "MixedStrategy":
        return cls(owner, tuple(Fraction(1, size) for _ in range(size)))


@dataclass(frozen=True)
class PayoffProfile:
    """Per-player expected payoffs."""

    values: tuple[Number, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(as_number(v) for v in self.values))

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> Number:
        return self.values[i]

    def dominates(self, other: "PayoffProfile") -> bool:
        """Weak per-coordinate domination (used for the IR check)."""
        if len(self) != len(other):
            raise InvalidInputError("profile length mismatch")
        return all(a >= b for a, b in zip(self.values, other.values))


@dataclass(frozen=True)
class FeasibleDecomposition:
    """Exact rational convex combination of pure profiles realizing a target.

    Each weight equals `numerators[a] / denominator` and the denominator is
    the least common one.
    """

    weights: Mapping[tuple[int, ...], Fraction]
    denominator: int

    def __post_init__(self):
        total = sum(self.weights.values())
        if total != 1:
            raise InvalidInputError(f"weights sum to {total}, not 1")
        for a, w in self.weights.items():
            if w < 0:
                raise InvalidInputError(f"negative weight at {a}")
            if (w * self.denominator).denominator != 1:
                raise InvalidInputError("denominator is not common")

    def numerators(self) -> dict[tuple[int, ...], int]:
        return {a: int(w * self.denominator) for a, w in self.weights.items()
                if w > 0}


def expected_payoff(game: StageGame,
                    profile: Sequence[MixedStrategy]) -> PayoffProfile:
    """Expected per-player payoff of a mixed-strategy profile.

    Exact (Fraction arithmetic) whenever the game and all strategies are.
    """
    if len(profile) != game.players:
        raise InvalidInputError("need one strategy per player")
    for i, s in enumerate(profile):
        if s.owner != i:
            raise InvalidInputError(f"strategy at position {i} owned by {s.owner}")
        if len(s.probs) != game.num_actions(i):
            raise InvalidInputError(
                f"player {i}: strategy over {len(s.probs)} actions, "
                f"game has {game.num_actions(i)}")
    totals = [Fraction(0)] * game.players
    for prof in game.profiles():
        w = Fraction(1)
        for i, a in enumerate(prof):
            w = w * profile[i].probs[a]
            if w == 0:
                break
        if w == 0:
            continue
        for i, u in enumerate(game.payoff(prof)):
            totals[i] = totals[i] + w * u
    return PayoffProfile(tuple(totals))


def shannon_entropy(dist) -> float:
    """Shannon entropy in bits of a distribution (MixedStrategy or weights).

    Zero-probability atoms contribute nothing.
    """
    probs = dist.probs if isinstance(dist, MixedStrategy) else tuple(dist)
    h = 0.0
    for p in probs:
        pf = float(p)
        if pf > 0.0:
            h -= pf * math.log2(pf)
    return h


def binary_entropy(q: float) -> float:
    """H(q) = -q log2 q - (1-q) log2(1-q)."""
    q = float(q)
    if q < 0.0 or q > 1.0:
        raise InvalidInputError(f"q={q} outside [0,1]")
    h = 0.0
    if q > 0.0:
        h -= q * math.log2(q)
    if q < 1.0:
        h -= (1.0 - q) * math.log2(1.0 - q)
    return h


def binary_entropy_inverse(h: float, tol: float = 1e-12) -> float:
    """The unique q in [0, 1/2] with binary_entropy(q) == h, by bisection."""
    h = float(h)
    if h < 0.0 or h > 1.0:
        raise InvalidInputError(f"h={h} outside [0,1]")
    if h == 0.0:
        return 0.0
    if h == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def zero_sum_from_matrix(rows, actions=None, name: str = "") -> StageGame:
    """Two-player zero-sum game from the row player's payoff matrix."""
    n_rows = len(rows)
    n_cols = len(rows[0])
    if any(len(r) != n_cols for r in rows):
        raise InvalidInputError("ragged payoff matrix")
    if actions is None:
        actions = [[f"r{i}" for i in range(n_rows)],
                   [f"c{j}" for j in range(n_cols)]]
    tables = [[(as_number(v), -as_number(v)) for v in row] for row in rows]
    return StageGame.from_tables(actions, tables, name=name)


# -- bundled example games --------------------------------------------------

def _matching_pennies() -> StageGame:
    return StageGame.from_tables(
        [["H", "T"], ["H", "T"]],
        [[(1, -1), (-1, 1)],
         [(-1, 1), (1, -1)]],
        name="matching-pennies")


def _extended_mp() -> StageGame:
    # Matching pennies padded with a safe row (U) and a safe column (R);
    # every equilibrium still earns the minmax profile (0, 0).
    return StageGame.from_tables(
        [["U", "H", "T", "D"], ["L", "H", "T", "R"]],
        [[(0, -1), (0, -1), (0, -1), (0, 0)],
         [(0, -1), (1, -1), (-1, 1), (-1, 0)],
         [(0, -1), (-1, 1), (1, -1), (-1, 0)],
         [(0, 0), (-1, 1), (-1, 1), (1, 0)]],
        name="extended-mp")


def _mp_punishment() -> StageGame:
    # Matching pennies padded with a cooperation action (C) worth (3,3) and
    # a punishment action (P); the minmax profile drops to (-3, -3).
    return StageGame.from_tables(
        [["C", "H", "T", "P"], ["C", "H", "T", "P"]],
        [[(3, 3), (-3, 6), (-3, 6), (-3, -3)],
         [(6, -3), (1, -1), (-1, 1), (-3, -3)],
         [(6, -3), (-1, 1), (1, -1), (-3, -3)],
         [(-3, -3), (-3, -3), (-3, -3), (-4, -4)]],
        name="mp-punishment")


def example_games() -> dict[str, StageGame]:
    """The bundled example games keyed by name."""
    games = [_matching_pennies(), _extended_mp(), _mp_punishment()]
    return {g.name: g for g in games}


def get_game(name: str) -> StageGame:
    games = example_games()
    if name not in games:
        raise InvalidInputError(
            f"unknown game {name!r}; known: {', '.join(sorted(games))}")
    return games[name]


# -- game file format -------------------------------------------------------

def _payoff_to_json(v: Number):
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return int(v)
        return f"{v.numerator}/{v.denominator}"
    raise InvalidInputError("game files store exact rationals only")


def _payoff_from_json(v) -> Fraction:
    if isinstance(v, bool):
        raise InvalidInputError(f"bad payoff entry {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    raise InvalidInputError(f"bad payoff entry {v!r} (want int or 'p/q')")


def game_to_dict(game: StageGame) -> dict:
    def nest(prefix: tuple[int, ...], depth: int):
        if depth == game.players:
            return [_payoff_to_json(v) for v in game.payoff(prefix)]
        return [nest(prefix + (i,), depth + 1)
                for i in range(game.num_actions(depth))]

    return {
        "name": game.name,
        "players": game.players,
        "actions": [list(a) for a in game.actions],
        "payoffs": nest((), 0),
    }


def game_from_dict(doc: dict) -> StageGame:
    try:
        actions = doc["actions"]
        payoffs = doc["payoffs"]
    except KeyError as e:
        raise InvalidInputError(f"game document missing field {e}") from None
    players = doc.get("players", len(actions))
    if players != len(actions):
        raise InvalidInputError("players field disagrees with actions")

    def convert(cell, depth):
        if depth == players:
            return tuple(_payoff_from_json(v) for v in cell)
        return [convert(sub, depth + 1) for sub in cell]

    return StageGame.from_tables(actions, convert(payoffs, 0),
                                 name=doc.get("name", ""))


def save_game(game: StageGame, path) -> None:
    Path(path).write_text(json.dumps(game_to_dict(game), indent=2,
                                     sort_keys=True) + "\n")


def load_game(path) -> StageGame:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"not a game file: {e}") from None
    return game_from_dict(doc)

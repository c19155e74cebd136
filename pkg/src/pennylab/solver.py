"""Stage-game solvers.

Zero-sum values and minmax strategies by exact LP, bimatrix Nash support
enumeration, minimal-entropy minmax selection, the entropy-capped guarantee
curve and its concave envelope, and feasibility / individual-rationality
checks for payoff targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional

from .errors import (
    DomainError,
    InternalInvariantError,
    InvalidInputError,
    ResourceLimitError,
    UnsupportedError,
)
from .games import (
    FeasibleDecomposition,
    MixedStrategy,
    PayoffProfile,
    StageGame,
    binary_entropy_inverse,
    expected_payoff,
    shannon_entropy,
)
from .simplex import common_denominator, simplex_max, solve_feasible_eq, solve_linear

#: combinatorial guard for support/vertex enumeration
MAX_ENUM_ACTIONS = 8

#: per-player action guard for the guarantee-curve search
MAX_CURVE_ACTIONS = 4


@dataclass(frozen=True)
class MinmaxSolution:
    """One player's minmax level with both sides of the LP.

    `strategy` guarantees the player at least `value` against every opponent
    pure action; `opponent_punisher` caps the player at `value`.
    """

    player: int
    value: Fraction
    strategy: MixedStrategy
    opponent_punisher: MixedStrategy


def stage_deviation_gains(game: StageGame, dists):
    """Per player: (best pure-deviation gain against the others, the action).

    Gains are exact when the distributions are; a profile is a stage Nash
    equilibrium iff every gain is <= 0.
    """
    base = expected_payoff(game, list(dists))
    out = []
    for i in range(game.players):
        best_gain, best_action = None, 0
        for a in range(game.num_actions(i)):
            trial = list(dists)
            trial[i] = MixedStrategy.pure(i, a, game.num_actions(i))
            gain = expected_payoff(game, trial)[i] - base[i]
            if best_gain is None or gain > best_gain:
                best_gain, best_action = gain, a
        out.append((best_gain, best_action))
    return out


def _own_matrix(game: StageGame, player: int) -> list[list[Fraction]]:
    """Player's payoffs as a matrix with own actions as rows (k = 2)."""
    opp = 1 - player
    rows = []
    for a in range(game.num_actions(player)):
        row = []
        for b in range(game.num_actions(opp)):
            prof = (a, b) if player == 0 else (b, a)
            row.append(Fraction(game.payoff_to(prof, player)))
        rows.append(row)
    return rows


def _cap_side(M) -> tuple[Fraction, list[Fraction]]:
    """min over distributions z of max_i (M z)_i, by the shift trick.

    Shifting M positive turns the cap LP into max sum(y) s.t. M'y <= 1,
    which has a feasible all-slack start; cap = 1/sum(y) - shift.
    """
    rows, cols = len(M), len(M[0])
    shift = 1 - min(min(r) for r in M)
    Mp = [[Fraction(v) + shift for v in r] for r in M]
    total, y = simplex_max([Fraction(1)] * cols, Mp, [Fraction(1)] * rows)
    if total <= 0:
        raise InternalInvariantError("cap LP degenerate")
    z = [yi / total for yi in y]
    return Fraction(1) / total - shift, z


def minmax_solution(game: StageGame, player: int) -> MinmaxSolution:
    """Minmax value, a guaranteeing strategy, and the opponent punisher.

    General-sum two-player games: the LP runs on the induced zero-sum game
    in which the opponent minimizes this player's payoff.
    """
    if game.players != 2:
        raise UnsupportedError(
            "minmax LP needs two players; for k > 2 supply punishment "
            "strategies manually")
    if player not in (0, 1):
        raise InvalidInputError(f"no player {player}")
    M = _own_matrix(game, player)
    d, c = len(M), len(M[0])
    cap, punisher = _cap_side(M)
    neg_mt = [[-M[i][j] for i in range(d)] for j in range(c)]
    cap2, mine = _cap_side(neg_mt)
    if -cap2 != cap:
        raise InternalInvariantError("LP duality gap nonzero")
    for j in range(c):
        if sum(mine[i] * M[i][j] for i in range(d)) < cap:
            raise InternalInvariantError("minmax strategy fails its guarantee")
    for i in range(d):
        if sum(M[i][j] * punisher[j] for j in range(c)) > cap:
            raise InternalInvariantError("punisher fails to cap")
    return MinmaxSolution(
        player=player, value=cap,
        strategy=MixedStrategy(player, tuple(mine)),
        opponent_punisher=MixedStrategy(1 - player, tuple(punisher)))


def minmax_profile(game: StageGame) -> PayoffProfile:
    """The vector of minmax payoffs (v_1, ..., v_k)."""
    return PayoffProfile(tuple(
        minmax_solution(game, i).value for i in range(game.players)))


def solve_zero_sum(game: StageGame):
    """Value of a zero-sum game plus each player's MinmaxSolution.

    Returns (value, (row solution, column solution)); the value is the row
    player's guarantee, exact, with a zero duality gap checked in rational
    arithmetic.
    """
    if game.players != 2:
        raise DomainError("zero-sum solving needs exactly two players")
    if not game.zero_sum:
        raise DomainError("game is not zero-sum; use minmax_profile")
    row = minmax_solution(game, 0)
    col = minmax_solution(game, 1)
    if row.value + col.value != 0:
        raise InternalInvariantError("zero-sum values do not cancel")
    return row.value, (row, col)


# -- bimatrix Nash enumeration ----------------------------------------------

@dataclass(frozen=True)
class NashEnumeration:
    """All equilibria found by support enumeration.

    `degenerate` is set when some equilibrium admits a best response outside
    its own support (an equilibrium component exists); the listed profiles
    are then representative vertices.
    """

    equilibria: tuple
    degenerate: bool

    def __iter__(self):
        return iter(self.equilibria)

    def __len__(self):
        return len(self.equilibria)


def _support_solution(U, own_support, opp_support):
    """Opponent mix on opp_support making own_support indifferent under U.

    Returns (full mix tuple, common payoff, outside-tie flag) or None.
    """
    k = len(opp_support)
    rows = []
    rhs = []
    for i in own_support:
        rows.append([U[i][j] for j in opp_support] + [Fraction(-1)])
        rhs.append(Fraction(0))
    rows.append([Fraction(1)] * k + [Fraction(0)])
    rhs.append(Fraction(1))
    sol = solve_linear(rows, rhs)
    if sol is None:
        return None
    weights, level = sol[:k], sol[k]
    if any(w <= 0 for w in weights):
        return None
    n_opp = len(U[0])
    full = [Fraction(0)] * n_opp
    for j, w in zip(opp_support, weights):
        full[j] = w
    tie = False
    for i in range(len(U)):
        if i in own_support:
            continue
        e = sum(U[i][j] * full[j] for j in opp_support)
        if e > level:
            return None
        if e == level:
            tie = True
    return tuple(full), level, tie


def enumerate_bimatrix_nash(game: StageGame) -> NashEnumeration:
    """Support enumeration over equal-size support pairs, exact arithmetic.

    Finds every equilibrium with nondegenerate support; each candidate must
    survive the full best-response check (no pure deviation does strictly
    better, exact comparison).
    """
    if game.players != 2:
        raise DomainError("support enumeration is for two-player games")
    n1, n2 = game.shape
    if n1 > MAX_ENUM_ACTIONS or n2 > MAX_ENUM_ACTIONS:
        raise ResourceLimitError(
            f"support enumeration capped at {MAX_ENUM_ACTIONS} actions a side")
    A = _own_matrix(game, 0)
    B_t = _own_matrix(game, 1)  # column player's payoffs, own actions as rows
    found = []
    degenerate = False
    for size in range(1, min(n1, n2) + 1):
        for s1 in combinations(range(n1), size):
            for s2 in combinations(range(n2), size):
                row_side = _support_solution(A, s1, s2)
                if row_side is None:
                    continue
                col_side = _support_solution(B_t, s2, s1)
                if col_side is None:
                    continue
                y, _, tie_r = row_side
                x, _, tie_c = col_side
                degenerate = degenerate or tie_r or tie_c
                profile = (MixedStrategy(0, x), MixedStrategy(1, y))
                payoff = PayoffProfile(tuple(
                    sum(x[i] * y[j] * Fraction(game.payoff_to((i, j), p))
                        for i in range(n1) for j in range(n2))
                    for p in range(2)))
                found.append(((x, y), (profile, payoff)))
    found.sort(key=lambda item: item[0])
    return NashEnumeration(tuple(item[1] for item in found), degenerate)


# -- minimal-entropy minmax -------------------------------------------------

def min_entropy_minmax(game: StageGame, player: int):
    """The minimal Shannon entropy over the player's minmax strategies.

    Entropy is concave, so its minimum over the optimal-strategy polytope
    sits at a vertex; we enumerate the vertices by active-set combinations.
    Returns (entropy in bits, the minimizing strategy).
    """
    if game.players != 2:
        raise DomainError("minmax vertex enumeration needs two players")
    if not game.zero_sum:
        raise DomainError("min-entropy minmax is defined for zero-sum games")
    d = game.num_actions(player)
    c = game.num_actions(1 - player)
    if d > MAX_ENUM_ACTIONS or c > MAX_ENUM_ACTIONS:
        raise ResourceLimitError(
            f"vertex enumeration capped at {MAX_ENUM_ACTIONS} actions a side")
    M = _own_matrix(game, player)
    v = minmax_solution(game, player).value

    def satisfies(x) -> bool:
        if any(xi < 0 for xi in x):
            return False
        return all(sum(x[i] * M[i][j] for i in range(d)) >= v
                   for j in range(c))

    # constraints beyond the simplex equality: x_i = 0 (first d) and
    # guarantee-tight columns M[:,j] . x = v (next c)
    vertices = set()
    for active in combinations(range(d + c), d - 1):
        rows = [[Fraction(1)] * d]
        rhs = [Fraction(1)]
        for a in active:
            if a < d:
                rows.append([Fraction(int(i == a)) for i in range(d)])
                rhs.append(Fraction(0))
            else:
                j = a - d
                rows.append([M[i][j] for i in range(d)])
                rhs.append(v)
        x = solve_linear(rows, rhs)
        if x is not None and satisfies(x):
            vertices.add(tuple(x))
    if not vertices:
        raise InternalInvariantError("optimal face has no vertices")
    best = min(vertices, key=lambda x: (shannon_entropy(x), x))
    return shannon_entropy(best), MixedStrategy(player, best)


# -- entropy-capped guarantees ----------------------------------------------

@dataclass(frozen=True)
class GuaranteeCurve:
    """U(gamma) samples on an entropy grid with the concave envelope."""

    player: int
    gammas: tuple[float, ...]
    values: tuple[float, ...]
    cav_values: tuple[float, ...]


def _objective(M, x) -> float:
    return min(sum(x[i] * M[i][j] for i in range(len(M)))
               for j in range(len(M[0])))


def _feasible(x, gamma) -> bool:
    return shannon_entropy(x) <= gamma + 1e-9


def _grid_candidates(d: int):
    if d == 2:
        for k in range(1001):
            q = k / 1000.0
            yield (q, 1.0 - q)
        return
    steps = 24
    def rec(prefix, remaining, slots):
        if slots == 1:
            yield prefix + (remaining / steps,)
            return
        for k in range(remaining + 1):
            yield from rec(prefix + (k / steps,), remaining - k, slots - 1)
    yield from rec((), steps, d)


def _refine(M, x, gamma) -> tuple[float, tuple]:
    """Local improvement by pairwise mass moves with shrinking step."""
    d = len(M)
    best = list(x)
    best_val = _objective(M, best)
    step = 1e-2 if d > 2 else 1e-3
    while step > 1e-7:
        improved = True
        while improved:
            improved = False
            for i in range(d):
                for j in range(d):
                    if i == j or best[i] < step:
                        continue
                    cand = list(best)
                    cand[i] -= step
                    cand[j] += step
                    if not _feasible(cand, gamma):
                        continue
                    val = _objective(M, cand)
                    if val > best_val + 1e-15:
                        best, best_val = cand, val
                        improved = True
        step /= 2.0
    return best_val, tuple(best)


def _capped_guarantee(M, gamma: float, seeds=()) -> tuple[float, tuple]:
    """max over strategies x with H(x) <= gamma of min_j sum_i x_i M[i][j]."""
    d = len(M)
    candidates = list(seeds)
    if d == 2:
        q = binary_entropy_inverse(min(gamma, 1.0))
        candidates.append((q, 1.0 - q))
        candidates.append((1.0 - q, q))
    candidates.extend(_grid_candidates(d))
    best = None
    best_val = -math.inf
    for x in candidates:
        if not _feasible(x, gamma):
            continue
        val = _objective(M, x)
        if val > best_val:
            best_val, best = val, tuple(x)
    if best is None:
        raise InternalInvariantError("no feasible point; gamma >= 0 always admits pure")
    return _refine(M, best, gamma)


def _upper_envelope(xs, ys) -> list[float]:
    """Least concave majorant of the samples, evaluated back on the grid."""
    pts = list(zip(xs, ys))
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    out = []
    seg = 0
    for x, y in pts:
        while seg + 1 < len(hull) - 1 and hull[seg + 1][0] <= x:
            seg += 1
        (x0, y0), (x1, y1) = hull[seg], hull[seg + 1]
        t = (x - x0) / (x1 - x0)
        out.append(max(y, y0 + t * (y1 - y0)))
    return out


def guarantee_curve(game: StageGame, player: int,
                    grid_size: int = 64) -> GuaranteeCurve:
    """U(gamma) on a uniform entropy grid, plus its concave envelope.

    U(gamma) is the best payoff the player can guarantee against any pure
    reply using a strategy of entropy at most gamma.  Computed by dense grid
    search plus local refinement; for two actions the entropy boundary point
    is seeded directly, making the curve sharp.
    """
    if game.players != 2:
        raise DomainError("guarantee curve needs two players")
    if not game.zero_sum:
        raise DomainError("guarantee curve is defined for zero-sum games")
    if grid_size < 2:
        raise InvalidInputError("grid_size must be at least 2")
    d = game.num_actions(player)
    if d > MAX_CURVE_ACTIONS:
        raise ResourceLimitError(
            f"guarantee curve capped at {MAX_CURVE_ACTIONS} own actions")
    M = [[float(v) for v in row] for row in _own_matrix(game, player)]
    gmax = math.log2(d)
    gammas = [gmax * k / (grid_size - 1) for k in range(grid_size)]
    values = []
    seeds: list[tuple] = []
    for gamma in gammas:
        val, x = _capped_guarantee(M, gamma, seeds)
        # previous optimum stays feasible at larger gamma: U is monotone
        seeds = [x]
        values.append(val)
    cav = _upper_envelope(gammas, values)
    return GuaranteeCurve(player=player, gammas=tuple(gammas),
                          values=tuple(values), cav_values=tuple(cav))


def stage_exploit_floor(game: StageGame, gamma: float) -> float:
    """Best-response advantage forced on a column player capped at gamma.

    c(gamma) = min over column strategies s with H(s) <= gamma of
    (max_a1 E u(a1, s)) - v, which equals -U_col(gamma) - v.  Nonnegative,
    and strictly positive below the minimal minmax entropy.
    """
    v, _ = solve_zero_sum(game)
    d = game.num_actions(1)
    if d > MAX_CURVE_ACTIONS:
        raise ResourceLimitError(
            f"exploit floor capped at {MAX_CURVE_ACTIONS} column actions")
    M = [[float(x) for x in row] for row in _own_matrix(game, 1)]
    u_col, _ = _capped_guarantee(M, gamma)
    return max(0.0, -u_col - float(v))


# -- feasibility and individual rationality ---------------------------------

@dataclass(frozen=True)
class IRCheck:
    """Outcome of the feasible + individually-rational test for a target."""

    decomposition: Optional[FeasibleDecomposition]
    reason: Optional[str]  # None | "infeasible" | "not-IR"
    minmax: PayoffProfile

    @property
    def feasible_ir(self) -> bool:
        return self.decomposition is not None


def _exact_target(profile) -> list[Fraction]:
    values = profile.values if isinstance(profile, PayoffProfile) else profile
    out = []
    for v in values:
        if isinstance(v, float):
            raise InvalidInputError(
                "feasibility is exact; pass int or Fraction entries")
        out.append(Fraction(v))
    return out


def check_feasible_ir(game: StageGame, profile) -> IRCheck:
    """Exact decomposition of a payoff target into pure profiles, plus IR.

    Returns the decomposition over pure joint profiles with its least common
    denominator when the target is feasible and weakly dominates the minmax
    profile; otherwise reports why ("infeasible" or "not-IR").
    """
    target = _exact_target(profile)
    if len(target) != game.players:
        raise InvalidInputError("target length must equal player count")
    v = minmax_profile(game)
    # IR is a pointwise compare against minmax; check it before the LP so
    # sub-minmax targets get the sharper reason
    if any(t < Fraction(vi) for t, vi in zip(target, v.values)):
        return IRCheck(None, "not-IR", v)
    weights = None
    for a in game.profiles():
        if all(Fraction(u) == t for u, t in zip(game.payoff(a), target)):
            weights = {a: Fraction(1)}
            break
    if weights is None:
        profiles = list(game.profiles())
        A = [[Fraction(1)] * len(profiles)]
        b = [Fraction(1)]
        for i in range(game.players):
            A.append([Fraction(game.payoff_to(a, i)) for a in profiles])
            b.append(target[i])
        x = solve_feasible_eq(A, b)
        if x is None:
            return IRCheck(None, "infeasible", v)
        weights = {a: w for a, w in zip(profiles, x) if w > 0}
    denom = common_denominator(list(weights.values()))
    return IRCheck(FeasibleDecomposition(weights, denom), None, v)

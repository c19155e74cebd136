"""Batch experiments: deterministic CSV tables for the headline bounds.

Each experiment writes one CSV plus a JSON summary into the output
directory.  Rows that state a bound also state the measured value, and a
measured violation is reported (never silently clamped).  Outputs are
byte-identical across runs with the same spec and seed.
"""

import csv
import json
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

from .constructors import folk_equilibrium, mp_epsnash
from .errors import InvalidInputError
from .formatting import fmt_number
from .games import get_game, load_game, shannon_entropy
from .repeated import effective_entropy, strategy_entropy
from .solver import guarantee_curve
from .verify import NE_TOL, certify

#: environment variable naming the default output directory
OUT_DIR_ENV = "PENNYLAB_OUT"

FOLK_TARGET = (3, 3)
CAV_GRID = 64


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run and where to write it.

    `game` may be a registry name or a path to a game file; empty picks
    the experiment's own default.  Empty horizon/eps lists likewise.
    """

    name: str
    game: str = ""
    horizons: tuple = ()
    eps: tuple = ()
    seed: int = 0
    out_dir: str = ""

    def resolved_out_dir(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUT_DIR_ENV, "."))


@dataclass(frozen=True)
class ExperimentResult:
    name: str
    columns: tuple
    rows: tuple
    csv_path: Path
    summary_path: Path
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def _resolve_game(spec: ExperimentSpec, default: str):
    token = spec.game or default
    if token.endswith(".json") or os.sep in token:
        return load_game(token)
    return get_game(token)


def _pinned_game(spec: ExperimentSpec, default: str):
    game = _resolve_game(spec, default)
    if game.name != default:
        raise InvalidInputError(
            f"experiment {spec.name!r} is defined for {default!r}, "
            f"not {game.name!r}")
    return game


def _mp_tradeoff(spec: ExperimentSpec):
    game = _pinned_game(spec, "matching-pennies")
    horizons = spec.horizons or (4, 6, 8)
    eps_list = spec.eps or (Fraction(0), Fraction(1, 4), Fraction(1, 2))
    columns = ("n", "eps", "entropy", "exploitability", "bound")
    rows, violations = [], []
    for n in horizons:
        for eps in eps_list:
            profile = mp_epsnash(n, eps)
            report = certify(game, n, profile, eps=eps)
            entropy = strategy_entropy(game, n, profile[0])
            bound = Fraction(eps) + Fraction(2, n)
            gap = report.max_exploitability
            rows.append((n, Fraction(eps), entropy, gap, bound))
            if gap > bound:
                violations.append(
                    f"n={n} eps={eps}: exploitability {gap} > bound {bound}")
    return columns, rows, violations


def _folk_entropy(spec: ExperimentSpec):
    game = _pinned_game(spec, "mp-punishment")
    horizons = spec.horizons or (5, 9, 13)
    columns = ("n", "tail_length", "payoff_0", "payoff_1", "exploitability",
               "effective_entropy_0", "effective_entropy_1", "entropy_bound")
    rows, violations = [], []
    for n in horizons:
        profile, plan = folk_equilibrium(game, n, FOLK_TARGET)
        report = certify(game, n, profile)
        cycle = plan.tail_equilibria
        bounds = [sum(shannon_entropy(cycle[j % len(cycle)][i])
                      for j in range(plan.tail_length)) if cycle else 0.0
                  for i in range(2)]
        effective = [effective_entropy(game, n, profile, i) for i in range(2)]
        rows.append((n, plan.tail_length, report.payoff[0],
                     report.payoff[1], report.max_exploitability,
                     effective[0], effective[1], max(bounds)))
        for i in range(2):
            if effective[i] > bounds[i] + NE_TOL:
                violations.append(
                    f"n={n} player {i}: effective entropy {effective[i]} "
                    f"> bound {bounds[i]}")
    return columns, rows, violations


def _cav_u(spec: ExperimentSpec):
    game = _pinned_game(spec, "matching-pennies")
    curve = guarantee_curve(game, 0, grid_size=CAV_GRID)
    columns = ("gamma", "u", "cav_u", "target", "error")
    rows, violations = [], []
    for gamma, u, cav in zip(curve.gammas, curve.values, curve.cav_values):
        target = gamma - 1.0
        error = cav - target
        rows.append((gamma, u, cav, target, error))
        if abs(error) > 1e-3:
            violations.append(
                f"gamma={gamma:.6f}: cav U off target by {error:.2e}")
    return columns, rows, violations


EXPERIMENTS: dict[str, Callable] = {
    "mp-tradeoff": _mp_tradeoff,
    "folk-entropy": _folk_entropy,
    "cavU": _cav_u,
}


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt_number(v) for v in row])


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run one catalog experiment; returns paths and any bound violations."""
    try:
        runner = EXPERIMENTS[spec.name]
    except KeyError:
        known = ", ".join(sorted(EXPERIMENTS))
        raise InvalidInputError(
            f"unknown experiment {spec.name!r}; known: {known}") from None
    for n in spec.horizons:
        if not isinstance(n, int) or n < 1:
            raise InvalidInputError(f"bad horizon {n!r}")
    columns, rows, violations = runner(spec)
    out_dir = spec.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{spec.name}.csv"
    _write_csv(csv_path, columns, rows)
    summary = {
        "experiment": spec.name,
        "csv": csv_path.name,
        "columns": list(columns),
        "rows": len(rows),
        "seed": spec.seed,
        "bound_ok": not violations,
        "violations": list(violations),
    }
    summary_path = out_dir / f"{spec.name}.summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True)
                            + "\n")
    return ExperimentResult(name=spec.name, columns=columns,
                            rows=tuple(tuple(r) for r in rows),
                            csv_path=csv_path, summary_path=summary_path,
                            violations=tuple(violations))

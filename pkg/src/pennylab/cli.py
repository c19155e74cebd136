"""Command line interface.

Subcommands: solve (stage-game values and equilibria), entropy (minmax
entropy floors), construct (equilibrium builders, written as strategy
files), certify (equilibrium verdict for a strategy-file profile),
exploit (play an exploiter against a stored opponent), experiment
(catalog CSV tables), report (experiment plus rendered figure), and
serve (the HTTP play service).

Exit status: 0 on success, 2 when a measured value violates a stated
bound or a certification fails, 1 on errors.
"""

import argparse
import csv
import os
import sys
from fractions import Fraction
from pathlib import Path

from .errors import InvalidInputError, PennylabError
from .experiments import OUT_DIR_ENV, ExperimentSpec, run_experiment
from .formatting import fmt_number
from .games import MixedStrategy, get_game, load_game

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BOUND = 2


# -- argument parsing helpers ------------------------------------------------

def _parse_number(text: str):
    """Rationals stay exact ("1/4", "3"); a decimal point means float."""
    text = text.strip()
    if "." in text or "e" in text.lower():
        try:
            return float(text)
        except ValueError:
            raise InvalidInputError(f"bad number {text!r}") from None
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise InvalidInputError(f"bad number {text!r}") from None


def _parse_int_list(text: str) -> tuple:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise InvalidInputError(f"bad integer list {text!r}") from None


def _parse_number_list(text: str) -> tuple:
    return tuple(_parse_number(tok) for tok in text.split(",")
                 if tok.strip())


def _parse_probs_profile(text: str, game) -> list:
    """Per-player distributions: players split by ';', weights by ','."""
    groups = [g for g in text.split(";") if g.strip()]
    if len(groups) != game.players:
        raise InvalidInputError(
            f"need {game.players} distributions separated by ';'")
    return [MixedStrategy(i, tuple(_parse_number(t) for t in g.split(",")))
            for i, g in enumerate(groups)]


def _game_arg(token: str):
    if token.endswith(".json") or os.sep in token:
        return load_game(token)
    return get_game(token)


def _probs_cell(probs) -> str:
    return ";".join(fmt_number(p) for p in probs)


def _out_dir(args) -> Path:
    path = Path(args.out or os.environ.get(OUT_DIR_ENV, "."))
    path.mkdir(parents=True, exist_ok=True)
    return path


# -- output ------------------------------------------------------------------

def _emit(columns, rows, fmt: str, out_file=None) -> None:
    if fmt == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    else:
        for row in rows:
            print(" ".join(f"{c}={_cell(v)}" for c, v in zip(columns, row)))
    if out_file is not None:
        with open(out_file, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(v) for v in row])


def _cell(value) -> str:
    return value if isinstance(value, str) else fmt_number(value)


# -- subcommands -------------------------------------------------------------

def _cmd_solve(args) -> int:
    from .errors import DomainError, ResourceLimitError, UnsupportedError
    from .solver import enumerate_bimatrix_nash, minmax_solution

    game = _game_arg(args.game)
    columns = ("item", "player", "value", "probs")
    rows = []
    for i in range(game.players):
        sol = minmax_solution(game, i)
        rows.append(("minmax", i, sol.value, _probs_cell(sol.strategy.probs)))
    try:
        enum = enumerate_bimatrix_nash(game)
    except (DomainError, UnsupportedError, ResourceLimitError):
        enum = None
    if enum is not None:
        for k, (profile, payoff) in enumerate(enum):
            for i in range(game.players):
                rows.append((f"nash-{k}", i, payoff[i],
                             _probs_cell(profile[i].probs)))
        rows.append(("degenerate", "", enum.degenerate, ""))
    out = _out_dir(args) / "solve.csv" if args.out else None
    _emit(columns, rows, args.format, out)
    return EXIT_OK


def _cmd_entropy(args) -> int:
    from .verify import entropy_floor

    game = _game_arg(args.game)
    n = args.n or 1
    columns = ("player", "beta", "strategy", "n", "total")
    rows = []
    for i in range(game.players):
        beta, mix = entropy_floor(game, i)
        rows.append((i, beta, _probs_cell(mix.probs), n, n * beta))
    out = _out_dir(args) / "entropy.csv" if args.out else None
    _emit(columns, rows, args.format, out)
    return EXIT_OK


def _cmd_construct(args) -> int:
    from .constructors import (
        folk_equilibrium,
        mp_epsnash,
        stagewise_equilibrium,
        zerosum_epsnash,
    )
    from .repeated import exact_payoff
    from .solver import enumerate_bimatrix_nash
    from .strategy_io import save_strategy

    kind = args.construction
    n = args.n
    if n is None:
        raise InvalidInputError("--n is required for construct")
    if kind == "mp-epsnash":
        game = get_game("matching-pennies")
        if args.game and _game_arg(args.game).name != game.name:
            raise InvalidInputError(
                "mp-epsnash is specific to matching-pennies")
    else:
        if not args.game:
            raise InvalidInputError("--game is required")
        game = _game_arg(args.game)

    if kind == "stagewise":
        if args.probs:
            dists = _parse_probs_profile(args.probs, game)
        else:
            enum = enumerate_bimatrix_nash(game)
            if not len(enum):
                raise InvalidInputError(
                    "no stage equilibrium found; pass --probs")
            dists = list(enum.equilibria[0][0])
        profile = stagewise_equilibrium(game, n, dists)
    elif kind == "folk":
        if not args.target:
            raise InvalidInputError("--target is required for folk")
        target = _parse_number_list(args.target)
        profile, _plan = folk_equilibrium(game, n, target)
    elif kind == "zs-epsnash":
        if args.eps is None:
            raise InvalidInputError("--eps is required for zs-epsnash")
        profile = zerosum_epsnash(game, n, args.eps)
    else:
        if args.eps is None:
            raise InvalidInputError("--eps is required for mp-epsnash")
        profile = mp_epsnash(n, args.eps)

    out = _out_dir(args)
    payoff = exact_payoff(game, n, profile)
    columns = ("player", "file", "payoff")
    rows = []
    for i, strategy in enumerate(profile):
        path = out / f"{kind}-player{i}.strategy.json"
        save_strategy(strategy, path)
        rows.append((i, str(path), payoff.values[i]))
    _emit(columns, rows, args.format)
    return EXIT_OK


def _cmd_certify(args) -> int:
    from .strategy_io import load_strategy
    from .verify import certify

    game = _game_arg(args.game)
    if args.n is None:
        raise InvalidInputError("--n is required for certify")
    strategies = [load_strategy(p) for p in args.strategies]
    owners = sorted(s.owner for s in strategies)
    if owners != list(range(game.players)):
        raise InvalidInputError(
            f"strategy files declare owners {owners}; need one per player")
    profile = tuple(sorted(strategies, key=lambda s: s.owner))
    report = certify(game, args.n, profile, eps=args.eps)
    if args.format == "csv":
        columns = ["verdict", "mode"]
        row = [report.verdict, report.mode]
        for i in range(game.players):
            columns += [f"payoff_{i}", f"exploitability_{i}", f"entropy_{i}",
                        f"effective_entropy_{i}"]
            row += [report.payoff[i], report.exploitability[i],
                    report.entropy[i], report.effective_entropy[i]]
        columns += ["witness_player", "witness_gain"]
        row += (["", ""] if report.witness is None
                else [report.witness[0], report.witness[2]])
        _emit(columns, [row], "csv",
              _out_dir(args) / "certify.csv" if args.out else None)
    else:
        text = report.to_text()
        sys.stdout.write(text)
        if args.out:
            (_out_dir(args) / "certify.txt").write_text(text)
    return EXIT_OK if report.verdict != "not-NE" else EXIT_BOUND


def _cmd_exploit(args) -> int:
    from .exploit import (
        PredictorState,
        best_response_exploiter,
        exploit_transcript,
        predictor_strategy,
        seed_learner_strategy,
    )
    from .repeated import SeededBehavioral
    from .strategy_io import load_strategy

    game = _game_arg(args.game)
    if args.n is None:
        raise InvalidInputError("--n is required for exploit")
    opponent = load_strategy(args.opponent)
    if args.engine == "predictor":
        if opponent.owner != 1:
            raise InvalidInputError(
                "the predictor plays the row seat; the opponent file must "
                "declare owner 1")
        engine = predictor_strategy(
            PredictorState(context_length=args.context_length,
                           tau=args.tau), game, args.n)
    elif args.engine == "seed-learner":
        if not isinstance(opponent, SeededBehavioral):
            raise InvalidInputError(
                "the seed learner needs a seeded opponent program "
                "(strategy file form 'seeded')")
        engine = seed_learner_strategy(game, args.n, opponent.seeded)
    else:
        engine = best_response_exploiter(game, args.n, opponent)

    transcript = exploit_transcript(game, args.n, engine, opponent,
                                    rng_seed=args.seed)
    columns = ("stage", "own_action", "opp_action", "diagnostic",
               "running_average")
    rows = [tuple(entry[c] for c in columns) for entry in transcript]
    out = _out_dir(args) / "exploit.csv" if args.out else None
    _emit(columns, rows, args.format, out)
    return EXIT_OK


def _run_experiment_command(args, render: bool) -> int:
    spec = ExperimentSpec(
        name=args.name,
        game=args.game or "",
        horizons=_parse_int_list(args.n) if args.n else (),
        eps=_parse_number_list(args.eps) if args.eps else (),
        seed=args.seed,
        out_dir=args.out or "")
    result = run_experiment(spec)
    _emit(result.columns, result.rows, args.format)
    print(f"wrote {result.csv_path} and {result.summary_path}",
          file=sys.stderr)
    if render:
        from .plots import render_figure
        png = render_figure(result)
        print(f"wrote {png}", file=sys.stderr)
    if result.violations:
        for line in result.violations:
            print(f"bound violation: {line}", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


def _cmd_experiment(args) -> int:
    return _run_experiment_command(args, render=False)


def _cmd_report(args) -> int:
    return _run_experiment_command(args, render=True)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(journal=args.journal), host=args.host,
                port=args.port, log_level="info")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors exit 1; status 2 is reserved for bound violations."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"error: {message}\n")


def _add_common(parser, n=False, eps=False, game_required=True) -> None:
    parser.add_argument("--game", required=game_required,
                        help="registry name or path to a game file")
    if n:
        parser.add_argument("--n", type=int, help="horizon (stages)")
    if eps:
        parser.add_argument("--eps", type=_parse_number,
                            help="epsilon ('1/4' exact, '0.25' float)")
    parser.add_argument("--seed", type=int, default=0,
                        help="rng seed for sampled play")
    parser.add_argument("--out", help=f"output directory "
                                      f"(default ${OUT_DIR_ENV} or cwd)")
    parser.add_argument("--format", choices=("csv", "lines"), default="lines",
                        help="stdout rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="pennylab",
        description="repeated games under limited randomness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="stage-game minmax values and equilibria")
    _add_common(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("entropy", help="minmax entropy floors per player")
    _add_common(p, n=True)
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("construct",
                       help="build an equilibrium profile as strategy files")
    p.add_argument("construction",
                   choices=("stagewise", "folk", "zs-epsnash", "mp-epsnash"))
    _add_common(p, n=True, eps=True, game_required=False)
    p.add_argument("--target", help="folk payoff target, e.g. '3,3'")
    p.add_argument("--probs",
                   help="stagewise profile: players ';', weights ','")
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("certify",
                       help="certification verdict for a strategy profile")
    p.add_argument("strategies", nargs=2, metavar="STRATEGY_FILE")
    _add_common(p, n=True, eps=True)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("exploit", help="run an exploiter against an opponent")
    _add_common(p, n=True)
    p.add_argument("--opponent", required=True,
                   help="strategy file for the column opponent")
    p.add_argument("--engine", default="predictor",
                   choices=("predictor", "seed-learner", "best-response"))
    p.add_argument("--tau", type=float, default=0.9,
                   help="predictor commitment threshold")
    p.add_argument("--context-length", type=int, default=1,
                   help="predictor context length")
    p.set_defaults(func=_cmd_exploit)

    for name, func, blurb in (
            ("experiment", _cmd_experiment, "run a catalog experiment (CSV)"),
            ("report", _cmd_report, "experiment plus a rendered figure")):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("name", help="mp-tradeoff | folk-entropy | cavU")
        p.add_argument("--game", help="override the experiment's game")
        p.add_argument("--n", help="comma-separated horizons")
        p.add_argument("--eps", help="comma-separated epsilons")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help=f"output directory "
                                     f"(default ${OUT_DIR_ENV} or cwd)")
        p.add_argument("--format", choices=("csv", "lines"),
                       default="lines")
        p.set_defaults(func=func)

    p = sub.add_parser("serve", help="HTTP play service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--journal", help="append-only session journal file")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PennylabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

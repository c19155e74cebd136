"""Figures for experiment results, rendered to files (Agg backend).

The experiment subcommand itself never plots; these renderers back the
separate report path, which drops a PNG next to each CSV.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import InvalidInputError  # noqa: E402
from .experiments import ExperimentResult  # noqa: E402


def _col(result: ExperimentResult, name: str) -> list[float]:
    idx = result.columns.index(name)
    return [float(row[idx]) for row in result.rows]


def _plot_mp_tradeoff(result: ExperimentResult, ax) -> None:
    ns = _col(result, "n")
    eps = _col(result, "eps")
    gaps = _col(result, "exploitability")
    bounds = _col(result, "bound")
    for e in sorted(set(eps)):
        rows = [i for i, v in enumerate(eps) if v == e]
        xs = [ns[i] for i in rows]
        ax.plot(xs, [gaps[i] for i in rows], "o-",
                label=f"measured, eps={e:g}")
        ax.plot(xs, [bounds[i] for i in rows], "--",
                label=f"bound eps+2/n, eps={e:g}")
    ax.set_xlabel("n")
    ax.set_ylabel("best deviation gain")
    ax.set_title("matching pennies: exploitability vs bound")
    ax.legend(fontsize=8)


def _plot_folk_entropy(result: ExperimentResult, ax) -> None:
    ns = _col(result, "n")
    for i in (0, 1):
        ax.plot(ns, _col(result, f"effective_entropy_{i}"), "o-",
                label=f"player {i}")
    ax.plot(ns, _col(result, "entropy_bound"), "--", label="bound")
    ax.set_xlabel("n")
    ax.set_ylabel("effective entropy (bits)")
    ax.set_ylim(bottom=0)
    ax.set_title("folk construction: entropy constant in n")
    ax.legend(fontsize=8)


def _plot_cav_u(result: ExperimentResult, ax) -> None:
    gammas = _col(result, "gamma")
    ax.plot(gammas, _col(result, "u"), label="U(gamma)")
    ax.plot(gammas, _col(result, "cav_u"), label="cav U")
    ax.plot(gammas, _col(result, "target"), "--", label="gamma - 1")
    ax.set_xlabel("gamma (entropy budget, bits)")
    ax.set_ylabel("guaranteed payoff")
    ax.set_title("guarantee curve and its concavification")
    ax.legend(fontsize=8)


_RENDERERS = {
    "mp-tradeoff": _plot_mp_tradeoff,
    "folk-entropy": _plot_folk_entropy,
    "cavU": _plot_cav_u,
}


def render_figure(result: ExperimentResult, out_dir=None) -> Path:
    """Render the figure for one experiment result; returns the PNG path."""
    try:
        renderer = _RENDERERS[result.name]
    except KeyError:
        known = ", ".join(sorted(_RENDERERS))
        raise InvalidInputError(
            f"no figure for experiment {result.name!r}; known: {known}") \
            from None
    target = Path(out_dir) if out_dir is not None else result.csv_path.parent
    target.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        renderer(result, ax)
        fig.tight_layout()
        path = target / f"{result.name}.png"
        fig.savefig(path, dpi=150)
    finally:
        plt.close(fig)
    return path

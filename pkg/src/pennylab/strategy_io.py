"""Strategy files: JSON documents describing behavioral strategies.

A document declares one of three forms:

- ``table``: an explicit map from histories to mixed actions,
- ``rule``: a named rule plus its parameters (the constructor families
  and the context predictor),
- ``seeded``: a seeded program flattened to a decision table keyed by
  (stage, own-history summary, seed).  This is the interchange form for
  the opponents consumed by the exploitation tools.

Serialization is canonical (sorted keys, fixed indentation) and numbers
travel exactly: rationals as "p/q" strings, floats as JSON numbers, so
saving what was just loaded reproduces the same bytes.
"""

import json
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Optional

from .constructors import FolkStrategy, _probs_key, stagewise_strategy
from .errors import InvalidInputError, ResourceLimitError, UnsupportedError
from .games import MixedStrategy
from .repeated import (
    History,
    RuleStrategy,
    SeededBehavioral,
    SeededStrategy,
    TableStrategy,
)

FORMAT = "pennylab-strategy"
VERSION = 1

#: cap on flattened decision-table size (rows = seeds x summaries)
MAX_TABLE_ROWS = 1 << 18

SUMMARY_KINDS = ("full", "last", "none")


# -- scalar codecs -----------------------------------------------------------

def _parse_prob(value):
    """Inverse of the constructors' probability encoding: "p/q" strings
    become Fractions, JSON numbers stay floats (ints are exact)."""
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"bad probability {value!r}: {exc}") \
                from None
    if isinstance(value, bool):
        raise InvalidInputError(f"bad probability {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    raise InvalidInputError(f"bad probability {value!r}")


def _parse_probs(values, what: str) -> tuple:
    if not isinstance(values, (list, tuple)):
        raise InvalidInputError(f"{what} must be a list of probabilities")
    return tuple(_parse_prob(v) for v in values)


def _int(value, what: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidInputError(f"{what} must be an integer")
    if value < minimum:
        raise InvalidInputError(f"{what} must be >= {minimum}")
    return value


def _need(doc: dict, key: str):
    try:
        return doc[key]
    except KeyError:
        raise InvalidInputError(
            f"strategy document missing {key!r}") from None


def _header(form: str) -> dict:
    return {"format": FORMAT, "version": VERSION, "form": form}


# -- own-history summaries ---------------------------------------------------

def _summary_fn(kind: str, owner: int):
    """History -> summary for a declared summary kind.

    "full" is the owner's whole action sequence, "last" their previous
    action (None at stage 0), "none" ignores the history entirely.
    """
    if kind == "full":
        return lambda h: h.own(owner)
    if kind == "last":
        return lambda h: h.own(owner)[-1] if h.stages else None
    if kind == "none":
        return lambda h: None
    raise InvalidInputError(
        f"unknown summary kind {kind!r}; expected one of {SUMMARY_KINDS}")


def _summary_domain(kind: str, t: int, num_actions: int) -> list:
    if kind == "full":
        return [tuple(s) for s in product(range(num_actions), repeat=t)]
    if kind == "last":
        return [None] if t == 0 else list(range(num_actions))
    return [None]


def _probe_history(kind: str, summary, t: int, owner: int,
                   horizon: int) -> History:
    # a canonical two-player history embedding the summary at the owner's
    # seat; by the summary contract the program reads nothing else
    if kind == "full":
        own = summary
    elif kind == "last":
        own = (0,) * (t - 1) + (summary,) if t else ()
    else:
        own = (0,) * t
    joints = []
    for a in own:
        joint = [0, 0]
        joint[owner] = a
        joints.append(tuple(joint))
    return History(tuple(joints), horizon)


def _summary_to_json(value):
    return list(value) if isinstance(value, tuple) else value


def _summary_from_json(kind: str, value):
    if kind == "full":
        if not isinstance(value, list):
            raise InvalidInputError(
                f"summary of kind 'full' must be a list, got {value!r}")
        return tuple(_int(a, "summary action") for a in value)
    if kind == "last":
        if value is None:
            return None
        return _int(value, "summary action")
    if value is not None:
        raise InvalidInputError(
            f"summary of kind 'none' must be null, got {value!r}")
    return None


def _summary_sort_key(value):
    if value is None:
        return (-1,)
    if isinstance(value, int):
        return (value,)
    return tuple(value)


# -- flattening seeded programs ----------------------------------------------

def seeded_decision_table(seeded: SeededStrategy, n: int,
                          num_actions: int = 2, owner: int = 1,
                          summary: Optional[str] = None) -> SeededStrategy:
    """Flatten a seeded program into a decision table over n stages.

    The table keys every (stage, own-history summary, seed) triple in the
    declared summary domain; the caller asserts the program reads nothing
    from the history beyond that summary (the same contract as state_fn).
    The returned strategy answers by lookup, so it serializes.
    """
    if n < 1:
        raise InvalidInputError("horizon must be positive")
    if num_actions < 1:
        raise InvalidInputError("num_actions must be positive")
    kind = summary if summary is not None else seeded.summary
    if kind not in SUMMARY_KINDS:
        raise InvalidInputError(
            f"unknown summary kind {kind!r}; expected one of {SUMMARY_KINDS}")
    if owner not in (0, 1):
        raise InvalidInputError("owner must be 0 or 1")

    domains = [_summary_domain(kind, t, num_actions) for t in range(n)]
    rows = seeded.num_seeds * sum(len(d) for d in domains)
    if rows > MAX_TABLE_ROWS:
        raise ResourceLimitError(
            f"decision table would hold {rows} rows "
            f"(cap {MAX_TABLE_ROWS}); shrink n, the summary kind, or "
            f"seed_bits")

    table = {}
    for t in range(n):
        for summ in domains[t]:
            probe = _probe_history(kind, summ, t, owner, n)
            for seed in range(seeded.num_seeds):
                action = seeded.action(probe, seed)
                if not 0 <= action < num_actions:
                    raise InvalidInputError(
                        f"program emitted action {action} outside "
                        f"0..{num_actions - 1} at stage {t}")
                table[(t, summ, seed)] = action
    return _table_backed(seeded.seed_bits, kind, owner, table,
                         name=seeded.name)


def _table_backed(seed_bits: int, kind: str, owner: int, table: dict,
                  name: str = "") -> SeededStrategy:
    summarize = _summary_fn(kind, owner)

    def program(h: History, seed: int) -> int:
        key = (h.t, summarize(h), seed)
        try:
            return table[key]
        except KeyError:
            raise InvalidInputError(
                f"decision table undefined at stage {key[0]} "
                f"summary {key[1]!r} seed {key[2]}") from None

    return SeededStrategy(seed_bits, program, state_fn=summarize,
                          name=name, table=table, summary=kind)


# -- saving ------------------------------------------------------------------

def strategy_to_doc(strategy) -> dict:
    """Render a strategy as a plain-JSON document."""
    if isinstance(strategy, SeededStrategy):
        # bare programs are the exploit tools' opponents; they sit in the
        # column seat by convention
        return _seeded_doc(strategy, owner=1, prior=None)
    spec = getattr(strategy, "spec", None)
    if isinstance(spec, dict) and "rule" in spec:
        doc = _header("rule")
        doc.update(spec)
        return doc
    if isinstance(strategy, TableStrategy):
        entries = []
        for stages in sorted(strategy.table, key=lambda s: (len(s), s)):
            dist = strategy.table[stages]
            entries.append({"history": [list(j) for j in stages],
                            "probs": _probs_key(dist.probs)})
        doc = _header("table")
        doc["owner"] = strategy.owner
        doc["entries"] = entries
        return doc
    if isinstance(strategy, SeededBehavioral):
        uniform = (Fraction(1, strategy.seeded.num_seeds),) \
            * strategy.seeded.num_seeds
        prior = None if strategy.prior == uniform else strategy.prior
        return _seeded_doc(strategy.seeded, owner=strategy.owner, prior=prior)
    raise UnsupportedError(
        "this strategy has no declarative form; materialize it with "
        "tabulate() or flatten its program with seeded_decision_table()")


def _seeded_doc(seeded: SeededStrategy, owner: int, prior) -> dict:
    if seeded.table is None:
        raise UnsupportedError(
            "seeded program has no decision table; flatten it with "
            "seeded_decision_table() first")
    rows = [[t, _summary_to_json(summ), seed, action]
            for (t, summ, seed), action in seeded.table.items()]
    rows.sort(key=lambda r: (r[0], _summary_sort_key(_row_key(r[1])), r[2]))
    doc = _header("seeded")
    doc["owner"] = owner
    doc["seed_bits"] = seeded.seed_bits
    doc["summary"] = seeded.summary
    doc["name"] = seeded.name
    doc["rows"] = rows
    if prior is not None:
        doc["prior"] = _probs_key(prior)
    return doc


def _row_key(summ):
    return tuple(summ) if isinstance(summ, list) else summ


def dumps_strategy(strategy) -> str:
    return json.dumps(strategy_to_doc(strategy), indent=2, sort_keys=True) \
        + "\n"


def save_strategy(strategy, path) -> None:
    Path(path).write_text(dumps_strategy(strategy))


# -- loading -----------------------------------------------------------------

def strategy_from_doc(doc):
    """Rebuild a strategy from a parsed document, validating as it goes."""
    if not isinstance(doc, dict):
        raise InvalidInputError("strategy document must be a JSON object")
    if doc.get("format") != FORMAT:
        raise InvalidInputError(
            f"not a {FORMAT} document (format={doc.get('format')!r})")
    if doc.get("version") != VERSION:
        raise InvalidInputError(
            f"unsupported strategy document version {doc.get('version')!r}")
    form = _need(doc, "form")
    if form == "rule":
        return _load_rule(doc)
    if form == "table":
        return _load_table(doc)
    if form == "seeded":
        return _load_seeded(doc)
    raise InvalidInputError(
        f"unknown form {form!r}; expected table, rule, or seeded")


def _load_rule(doc: dict):
    rule = _need(doc, "rule")
    owner = _int(_need(doc, "owner"), "owner")
    if rule == "stagewise":
        return stagewise_strategy(owner, _parse_probs(_need(doc, "probs"),
                                                      "probs"))
    if rule == "folk-trigger":
        return _load_folk(doc, owner)
    if rule == "zs-epsnash":
        return _load_zs_epsnash(doc, owner)
    if rule == "mp-epsnash":
        return _load_mp_epsnash(doc, owner)
    if rule == "predictor":
        return _load_predictor(doc, owner)
    raise InvalidInputError(f"unknown rule {rule!r}")


def _load_folk(doc: dict, owner: int) -> FolkStrategy:
    raw_schedule = _need(doc, "schedule")
    if not isinstance(raw_schedule, list) or not raw_schedule:
        raise InvalidInputError("schedule must be a non-empty list")
    schedule = tuple(tuple(_int(a, "schedule action") for a in prof)
                     for prof in raw_schedule)
    tail = tuple(MixedStrategy(owner, _parse_probs(row, "tail"))
                 for row in _need(doc, "tail"))
    raw_punish = _need(doc, "punish")
    if not isinstance(raw_punish, dict):
        raise InvalidInputError("punish must be a map player -> probs")
    punish = {}
    for key, row in raw_punish.items():
        try:
            d = int(key)
        except ValueError:
            raise InvalidInputError(
                f"punish key {key!r} is not a player index") from None
        punish[d] = MixedStrategy(owner, _parse_probs(row, "punish"))
    spec = {"rule": "folk-trigger", "owner": owner,
            "schedule": [list(a) for a in schedule],
            "tail": [_probs_key(t.probs) for t in tail],
            "punish": {str(d): _probs_key(punish[d].probs)
                       for d in sorted(punish)}}
    return FolkStrategy(owner, schedule, tail, punish, spec=spec)


def _load_zs_epsnash(doc: dict, owner: int) -> RuleStrategy:
    k1 = _int(_need(doc, "k1"), "k1")
    mix = MixedStrategy(owner, _parse_probs(_need(doc, "minmax"), "minmax"))
    astar = tuple(_int(a, "astar action") for a in _need(doc, "astar"))
    adagger = tuple(_int(a, "adagger action") for a in _need(doc, "adagger"))
    if len(astar) != 2 or len(adagger) != 2:
        raise InvalidInputError("astar/adagger must be two-player profiles")

    def rule(g, h):
        if h.t < k1:
            return mix
        prof = astar if (h.t - k1) % 2 == 0 else adagger
        return MixedStrategy.pure(owner, prof[owner], g.num_actions(owner))

    spec = {"rule": "zs-epsnash", "owner": owner, "k1": k1,
            "minmax": _probs_key(mix.probs),
            "astar": list(astar), "adagger": list(adagger)}
    return RuleStrategy(owner, rule, state_fn=lambda h: (), spec=spec)


def _load_mp_epsnash(doc: dict, owner: int) -> RuleStrategy:
    if owner not in (0, 1):
        raise InvalidInputError("owner must be 0 or 1")
    k1 = _int(_need(doc, "k1"), "k1")

    def rule(g, h):
        if h.t < k1:
            return MixedStrategy.uniform(owner, 2)
        if owner == 0:
            return MixedStrategy.pure(0, 0, 2)
        j = h.t - k1
        return MixedStrategy.pure(1, 1 if j % 2 == 0 else 0, 2)

    spec = {"rule": "mp-epsnash", "owner": owner, "k1": k1}
    return RuleStrategy(owner, rule, state_fn=lambda h: (), spec=spec)


def _load_predictor(doc: dict, owner: int) -> RuleStrategy:
    from .exploit import PredictorState, predictor_strategy
    if owner != 0:
        raise InvalidInputError("predictor strategies play the row seat")
    tau = _need(doc, "tau")
    if isinstance(tau, bool) or not isinstance(tau, (int, float)):
        raise InvalidInputError("tau must be a number")
    state = PredictorState(
        context_length=_int(_need(doc, "context_length"), "context_length",
                            minimum=1),
        tau=float(tau),
        min_support=_int(_need(doc, "min_support"), "min_support",
                         minimum=1))
    return predictor_strategy(state)


def _load_table(doc: dict) -> TableStrategy:
    owner = _int(_need(doc, "owner"), "owner")
    entries = _need(doc, "entries")
    if not isinstance(entries, list):
        raise InvalidInputError("entries must be a list")
    table = {}
    for entry in entries:
        if not isinstance(entry, dict):
            raise InvalidInputError("each table entry must be an object")
        raw = _need(entry, "history")
        stages = tuple(tuple(_int(a, "history action") for a in joint)
                       for joint in raw)
        if stages in table:
            raise InvalidInputError(f"duplicate table history {raw!r}")
        table[stages] = MixedStrategy(owner, _parse_probs(
            _need(entry, "probs"), "probs"))
    return TableStrategy(owner, table)


def _load_seeded(doc: dict) -> SeededBehavioral:
    owner = _int(_need(doc, "owner"), "owner")
    seed_bits = _int(_need(doc, "seed_bits"), "seed_bits")
    kind = _need(doc, "summary")
    if kind not in SUMMARY_KINDS:
        raise InvalidInputError(
            f"unknown summary kind {kind!r}; expected one of {SUMMARY_KINDS}")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise InvalidInputError("name must be a string")
    rows = _need(doc, "rows")
    if not isinstance(rows, list) or not rows:
        raise InvalidInputError("rows must be a non-empty list")
    table = {}
    for row in rows:
        if not isinstance(row, list) or len(row) != 4:
            raise InvalidInputError(
                f"each row must be [stage, summary, seed, action], "
                f"got {row!r}")
        t = _int(row[0], "stage")
        summ = _summary_from_json(kind, row[1])
        seed = _int(row[2], "seed")
        if seed >= 1 << seed_bits:
            raise InvalidInputError(
                f"seed {seed} outside 0..{(1 << seed_bits) - 1}")
        action = _int(row[3], "action")
        key = (t, summ, seed)
        if key in table:
            raise InvalidInputError(f"duplicate decision-table key {key}")
        table[key] = action
    seeded = _table_backed(seed_bits, kind, owner, table, name=name)
    prior = doc.get("prior")
    if prior is not None:
        prior = _parse_probs(prior, "prior")
    return SeededBehavioral(owner, seeded, prior=prior)


def loads_strategy(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"not valid JSON: {exc}") from None
    return strategy_from_doc(doc)


def load_strategy(path):
    return loads_strategy(Path(path).read_text())

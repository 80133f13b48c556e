"""Per-step collection, run aggregation, exports and significance testing."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

N_THEMES = 12
INF_MARKER = "inf"
STANCE_LABELS = ("con", "neu", "pro")

SERIES_COLUMNS = (
    ["step", "con", "neu", "pro"]
    + [f"theme_{t}" for t in range(1, N_THEMES + 1)]
    + [f"followers_{s}" for s in STANCE_LABELS]
    + [f"followees_{s}" for s in STANCE_LABELS]
)

TWEET_COLUMNS = ("id", "author", "author_class", "stance", "kind", "parent", "created_step",
                 "themes", "likes", "retweets", "quotes", "replies")


class ExportError(OSError):
    pass


# --- collection ---------------------------------------------------------------

_THEME_BITS = np.arange(1, N_THEMES + 1, dtype=np.int64)


class MetricsCollector:
    """Snapshots the population after initialization and after every step."""

    def __init__(self, sim):
        self.rows: list[list] = []
        self.conversions = 0

    def record(self, sim) -> None:
        agents = sim.agents
        slot = np.array([int(a.stance) + 1 for a in agents], dtype=np.int64)
        masks = np.array([a.mask for a in agents], dtype=np.int64)
        sc = np.bincount(slot, minlength=3)
        fol = np.bincount(slot, weights=sim.graph.follower_counts(), minlength=3)
        fee = np.bincount(slot, weights=sim.graph.followee_counts(), minlength=3)
        themes = ((masks[:, None] >> _THEME_BITS) & 1).sum(axis=0)
        n = sc.tolist()
        row = [sim.step_index] + n + themes.tolist()
        row += [float(fol[i]) / n[i] if n[i] else 0.0 for i in range(3)]
        row += [float(fee[i]) / n[i] if n[i] else 0.0 for i in range(3)]
        self.rows.append(row)

    def finish(self, sim) -> "RunMetrics":
        tweets = [
            (t.id, t.author, t.stance.value, t.kind.value, -1 if t.parent is None else t.parent,
             t.created_step, tuple(sorted(t.themes)), t.likes, t.retweets, t.quotes, t.replies)
            for t in sim.tweets
        ]
        return RunMetrics(
            scenario=sim.cfg.name,
            seed=sim.seed,
            series=self.rows,
            tweets=tweets,
            is_bot=[a.is_bot for a in sim.agents],
            initial_stances=[int(s) for s in sim.initial_stances],
            final_stances=[int(a.stance) for a in sim.agents],
            seen_all=[dict(a.seen_all) for a in sim.agents],
            influenced_by=[dict(a.influenced_by) for a in sim.agents],
            action_tally=dict(sim.action_tally),
            fallbacks=sim.fallbacks,
            conversions=self.conversions,
        )


@dataclass
class RunMetrics:
    scenario: str
    seed: int
    series: list[list]
    tweets: list[tuple]
    is_bot: list[bool]
    initial_stances: list[int]
    final_stances: list[int]
    seen_all: list[dict]
    influenced_by: list[dict]
    action_tally: dict = field(default_factory=dict)
    fallbacks: int = 0
    conversions: int = 0

    def column(self, name: str) -> list:
        j = SERIES_COLUMNS.index(name)
        return [r[j] for r in self.series]

    def start(self, name: str):
        return self.series[0][SERIES_COLUMNS.index(name)]

    def final(self, name: str):
        return self.series[-1][SERIES_COLUMNS.index(name)]

    def engagement_totals(self) -> tuple[int, int, int, int]:
        likes = rts = quotes = replies = 0
        for t in self.tweets:
            likes += t[7]
            rts += t[8]
            quotes += t[9]
            replies += t[10]
        return likes, rts, quotes, replies


# --- ratios and tests -----------------------------------------------------------

def _ratio(a: float, b: float) -> float:
    return a / b if b else math.inf


def engagement_ratios(run) -> tuple[float, float]:
    """(likes : retweets, likes : replies) over every tweet in the run.

    Accepts a RunMetrics or a plain (likes, retweets, replies) triple. A zero
    denominator gives ``math.inf``, written as ``"inf"`` in exports.
    """
    if isinstance(run, RunMetrics):
        likes, rts, _, replies = run.engagement_totals()
    else:
        likes, rts, replies = run
    return _ratio(likes, rts), _ratio(likes, replies)


def welch_t_test(a, b) -> float:
    """Two-sided p-value of the unequal-variance t-test."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("welch_t_test needs at least two samples per group")
    ma, mb = a.mean(), b.mean()
    va, vb = a.var(ddof=1) / len(a), b.var(ddof=1) / len(b)
    se2 = va + vb
    if se2 == 0:
        return 1.0 if ma == mb else 0.0
    t = (ma - mb) / math.sqrt(se2)
    df = se2 ** 2 / ((va ** 2 / (len(a) - 1) if va else 0.0) + (vb ** 2 / (len(b) - 1) if vb else 0.0))
    return float(min(1.0, 2.0 * stats.t.sf(abs(t), df)))


# --- summaries ----------------------------------------------------------------

def run_quantities(run: RunMetrics) -> dict[str, float]:
    """Scalar measurements of one run, keyed by name."""
    q: dict[str, float] = {}
    for name in ("con", "neu", "pro") + tuple(f"theme_{t}" for t in range(1, N_THEMES + 1)):
        q[f"start_{name}"] = run.start(name)
        q[f"final_{name}"] = run.final(name)
    likes, rts, quotes, replies = run.engagement_totals()
    q["likes"], q["retweets"], q["quotes"], q["replies"] = likes, rts, quotes, replies
    q["like_rt_ratio"], q["like_reply_ratio"] = engagement_ratios((likes, rts, replies))
    q["tweets"] = len(run.tweets)
    q["conversions"] = run.conversions
    q["fallbacks"] = run.fallbacks
    return q


@dataclass
class ScenarioSummary:
    scenario: str
    n_runs: int
    seeds: list[int]
    samples: dict[str, list[float]]
    baseline: str | None = None
    p_values: dict[str, float] = field(default_factory=dict)

    def mean(self, key: str) -> float:
        xs = self.samples[key]
        if any(math.isinf(x) for x in xs):
            return math.inf
        return float(np.mean(xs))

    def sd(self, key: str) -> float:
        xs = self.samples[key]
        if len(xs) < 2 or any(math.isinf(x) for x in xs):
            return 0.0 if len(xs) < 2 else math.nan
        return float(np.std(xs, ddof=1))

    def significant(self, key: str, alpha: float = 0.05) -> bool | None:
        p = self.p_values.get(key)
        return None if p is None else p < alpha

    def to_dict(self) -> dict:
        rows = {}
        for k in sorted(self.samples):
            row = {"mean": _enc(self.mean(k)), "sd": _enc(self.sd(k)),
                   "samples": [_enc(x) for x in self.samples[k]]}
            if k in self.p_values:
                row["p_value"] = self.p_values[k]
                row["significant"] = self.p_values[k] < 0.05
            rows[k] = row
        return {"scenario": self.scenario, "n_runs": self.n_runs, "seeds": self.seeds,
                "baseline": self.baseline, "quantities": rows}

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSummary":
        samples = {k: [_dec(x) for x in v["samples"]] for k, v in d["quantities"].items()}
        p = {k: v["p_value"] for k, v in d["quantities"].items() if "p_value" in v}
        return cls(d["scenario"], d["n_runs"], list(d["seeds"]), samples, d.get("baseline"), p)


def _enc(x):
    if isinstance(x, float):
        if math.isinf(x):
            return INF_MARKER if x > 0 else "-" + INF_MARKER
        if math.isnan(x):
            return "nan"
    return x


def _dec(x):
    if isinstance(x, str):
        return float(x)
    return x


def summarize(name: str, runs, baseline: ScenarioSummary | None = None) -> ScenarioSummary:
    """Aggregate runs; the result does not depend on run order."""
    runs = sorted(runs, key=lambda r: r.seed)
    per = [run_quantities(r) for r in runs]
    keys = sorted(per[0]) if per else []
    samples = {k: [q[k] for q in per] for k in keys}
    out = ScenarioSummary(name, len(runs), [r.seed for r in runs], samples)
    if baseline is not None:
        out.baseline = baseline.scenario
        for k in keys:
            a, b = samples[k], baseline.samples.get(k)
            if b is None or len(a) < 2 or len(b) < 2:
                continue
            if any(math.isinf(x) for x in a + b):
                continue
            out.p_values[k] = welch_t_test(a, b)
    return out


# --- exports ------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(x) if isinstance(x, float) else str(x)


def write_series_csv(run: RunMetrics, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        for r in run.series:
            w.writerow([_fmt(x) for x in r])


def read_series_csv(path) -> list[list]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != list(SERIES_COLUMNS):
        raise ValueError(f"{path}: unexpected header")
    out = []
    for r in rows[1:]:
        out.append([float(x) if "." in x or "e" in x else int(x) for x in r])
    return out


def write_tweets_csv(run: RunMetrics, path) -> None:
    is_bot = run.is_bot
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TWEET_COLUMNS)
        for t in run.tweets:
            w.writerow((t[0], t[1], "bot" if is_bot[t[1]] else "human", t[2], t[3],
                        "" if t[4] < 0 else t[4], t[5], " ".join(map(str, t[6])),
                        t[7], t[8], t[9], t[10]))


def influence_dot(run: RunMetrics, name: str = "influence") -> str:
    """Who-converted-whom graph: edge author -> converted agent, weight = occurrences."""
    lines = [f"digraph {name} {{"]
    for v, bot in enumerate(run.is_bot):
        cls = "bot" if bot else "human"
        lines.append(f'  {v} [class="{cls}", stance="{STANCE_LABELS[run.final_stances[v] + 1]}"];')
    for v, sources in enumerate(run.influenced_by):
        for u in sorted(sources):
            color = "red" if run.is_bot[u] else "gray"
            lines.append(f'  {u} -> {v} [weight={sources[u]}, class="{"bot" if run.is_bot[u] else "human"}", '
                         f'color="{color}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_run(run: RunMetrics, directory) -> None:
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
        write_series_csv(run, d / "series.csv")
        write_tweets_csv(run, d / "tweets.csv")
        (d / "influence.dot").write_text(influence_dot(run))
    except OSError as e:
        raise ExportError(f"cannot write run output under {d}: {e}") from e


def export_summary(summary: ScenarioSummary, path) -> None:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise ExportError(f"cannot write summary {p}: {e}") from e


def load_summary(path) -> ScenarioSummary:
    p = Path(path)
    if p.is_dir():
        p = p / "summary.json"
    try:
        data = json.loads(p.read_text())
    except OSError as e:
        raise ExportError(f"cannot read summary {p}: {e}") from e
    return ScenarioSummary.from_dict(data)


def export(obj, fmt: str, path) -> None:
    """Write a run ("csv" series, "dot" influence graph) or a summary ("json")."""
    try:
        if fmt == "csv" and isinstance(obj, RunMetrics):
            write_series_csv(obj, path)
        elif fmt == "dot" and isinstance(obj, RunMetrics):
            Path(path).write_text(influence_dot(obj))
        elif fmt == "json" and isinstance(obj, ScenarioSummary):
            export_summary(obj, path)
        else:
            raise ValueError(f"cannot export {type(obj).__name__} as {fmt}")
    except OSError as e:
        raise ExportError(f"cannot write {path}: {e}") from e

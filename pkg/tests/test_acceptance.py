"""Acceptance checks 1-8.

Each test records its verdict in ``conftest.ACCEPTANCE``; a terminal summary
prints one PASS/FAIL line per criterion at the end of the session.

Multi-run scenario results are cached under ``tests/.cache`` keyed by a hash
of the package source, the resolved config and the seeds, so a rerun with
unchanged code skips the hour of simulation on a single core.
"""

import filecmp
import hashlib
import json
import math
import os
import random
import subprocess
import sys
import time
from collections import Counter
from pathlib import Path

import pytest

import oracles
from conftest import ACCEPTANCE
from stancesim import conversion as conv
from stancesim import metrics
from stancesim.model import Tweet, theme_mask
from stancesim.scenario import preset, run_scenario

ROOT = Path(__file__).resolve().parent.parent
SRC = ROOT / "src" / "stancesim"
CACHE = Path(__file__).resolve().parent / ".cache"
RUNS = 20
BUDGET_S = 300.0
JOBS = os.cpu_count() or 1


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(n, []).append((bool(ok), detail))
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def _source_hash() -> str:
    h = hashlib.sha256()
    for p in sorted(SRC.rglob("*.py")):
        h.update(p.relative_to(SRC).as_posix().encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def scenario_summary(name: str) -> metrics.ScenarioSummary:
    cfg = preset(name)
    seeds = list(range(cfg.seed, cfg.seed + RUNS))
    key = hashlib.sha256((_source_hash() + json.dumps(cfg.to_dict(), sort_keys=True)
                          + json.dumps(seeds)).encode()).hexdigest()[:16]
    path = CACHE / f"{name}-{key}.json"
    if path.exists():
        return metrics.load_summary(path)
    summary, _ = run_scenario(cfg, None, runs=RUNS, seed=cfg.seed, jobs=JOBS)
    metrics.export_summary(summary, path)
    return summary


@pytest.fixture(scope="session")
def summaries():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = scenario_summary(name)
        return cache[name]
    return get


# --- 1: determinism and runtime ---------------------------------------------

@pytest.fixture(scope="session")
def cli_pair(tmp_path_factory):
    """Two identical CLI invocations; returns their output roots and wall times."""
    roots, times = [], []
    for tag in ("a", "b"):
        out = tmp_path_factory.mktemp(f"det_{tag}")
        t0 = time.perf_counter()
        subprocess.run([sys.executable, "-m", "stancesim.cli", "run", "--scenario", "sim1",
                        "--runs", "2", "--seed", "42", "--out", str(out), "-q"],
                       check=True, cwd=ROOT)
        times.append(time.perf_counter() - t0)
        roots.append(out)
    return roots, times


def _tree(root: Path) -> list[str]:
    return sorted(p.relative_to(root).as_posix() for p in root.rglob("*") if p.is_file())


@pytest.mark.slow
def test_c1_cli_outputs_byte_identical(cli_pair):
    (a, b), _ = cli_pair
    files = _tree(a)
    same = files == _tree(b) and all(filecmp.cmp(a / f, b / f, shallow=False) for f in files)
    record(1, same, f"{len(files)} output files byte-identical across reruns: {same}")
    assert files and same


@pytest.mark.slow
def test_c1_runtime_budget(cli_pair):
    _, times = cli_pair
    per_run = min(times) / 2
    estimate = per_run * math.ceil(RUNS / JOBS)
    ok = estimate <= BUDGET_S
    record(1, ok, f"20-run estimate {estimate:.0f}s on {JOBS} cpu(s) "
                  f"({per_run:.1f}s per run), budget {BUDGET_S:.0f}s")
    assert ok


# --- 2-5: scenario outcomes --------------------------------------------------

@pytest.mark.slow
def test_c2_engagement_ratios_humans_only(summaries):
    s = summaries("sim16")
    rt, rep = s.mean("like_rt_ratio"), s.mean("like_reply_ratio")
    ok = 1.5 <= rt <= 2.5 and 6.3 <= rep <= 10.5
    record(2, ok, f"like:RT {rt:.2f} in [1.5, 2.5], like:reply {rep:.2f} in [6.3, 10.5]")
    assert ok


@pytest.mark.slow
def test_c3_sim1_directional(summaries):
    s = summaries("sim1")
    start = {k: s.mean(f"start_{k}") for k in ("con", "neu", "pro")}
    final = {k: s.mean(f"final_{k}") for k in ("con", "neu", "pro")}
    ok = (final["pro"] <= 0.75 * start["pro"] and final["con"] >= 1.5 * start["con"]
          and final["neu"] >= 1.5 * start["neu"])
    record(3, ok, "start " + "/".join(f"{start[k]:.0f}" for k in start)
           + " -> final " + "/".join(f"{final[k]:.1f}" for k in final) + " (con/neu/pro)")
    assert ok


@pytest.mark.slow
def test_c4_sim14_theme_conservation(summaries):
    t14 = summaries("sim14").mean("final_theme_7")
    t16 = summaries("sim16").mean("final_theme_7")
    ok = t14 >= 250 and t14 >= 5 * t16
    record(4, ok, f"final T7 holders sim14 {t14:.1f} (>= 250), sim16 {t16:.1f} (x5 = {5 * t16:.1f})")
    assert ok


@pytest.mark.slow
def test_c5_activity_ablation(summaries):
    a, b = summaries("sim3"), summaries("sim1")
    p = metrics.welch_t_test(a.samples["final_pro"], b.samples["final_pro"])
    ok = a.mean("final_pro") > b.mean("final_pro") and p < 0.05
    record(5, ok, f"final pro sim3 {a.mean('final_pro'):.1f} vs sim1 {b.mean('final_pro'):.1f}, "
                  f"Welch p {p:.2g}")
    assert ok


# --- 6-8: conversion and invariants -----------------------------------------

def _random_set(rng):
    out = []
    for _ in range(rng.randint(1, 6)):
        out.append({
            "stance": rng.choice([-1, 0, 1]),
            "themes": set(rng.sample(range(1, 13), rng.randint(0, 5))),
            "likes": rng.choice([0, rng.randint(0, 40)]),
            "retweets": rng.choice([0, rng.randint(0, 40)]),
            "replies": rng.choice([0, rng.randint(0, 40)]),
        })
    return out


def _tweets(specs):
    ts = []
    for i, d in enumerate(specs):
        t = Tweet(i, 50 + i, d["stance"], d["themes"])
        t.likes, t.retweets, t.replies = d["likes"], d["retweets"], d["replies"]
        ts.append(t)
    return ts


def test_c6_conversion_oracle_equivalence():
    rng = random.Random(6)
    worst = 0.0
    for _ in range(1000):
        specs = _random_set(rng)
        stance = rng.choice([-1, 0, 1])
        themes = set(rng.sample(range(1, 13), rng.randint(1, 5)))
        memory = rng.choice([30, 120])
        want = oracles.conversion_weights(stance, themes, specs, memory)
        got = conv.stance_weights(stance, theme_mask(themes), _tweets(specs), memory)
        worst = max(worst, *(abs(want[s] - got[s + 1]) for s in (-1, 0, 1)))

    draws = random.Random(60)
    n = 100_000
    worst_freq = 0.0
    for _ in range(5):
        specs = _random_set(rng)
        p = oracles.conversion_probabilities(1, {3, 4}, specs, 30)
        w = conv.stance_weights(1, theme_mask({3, 4}), _tweets(specs), 30)
        c = Counter(int(conv.sample_stance(w, draws.random())) for _ in range(n))
        worst_freq = max(worst_freq, *(abs(c[s] / n - p[s]) for s in (-1, 0, 1)))
    ok = worst <= 1e-9 and worst_freq <= 0.02
    record(6, ok, f"max weight error {worst:.1e} (<= 1e-9), max frequency error {worst_freq:.4f} (<= 0.02)")
    assert ok


@pytest.mark.slow
def test_c7_invariant_property_suite():
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           str(ROOT / "tests" / "test_properties.py")],
                          cwd=ROOT, capture_output=True, text=True)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0
    record(7, ok, f"property suite, 50 seeds per invariant: {tail}")
    assert ok, proc.stdout[-3000:]


def test_c8_like_scale_invariance():
    specs = [
        {"stance": -1, "themes": {1, 2}, "likes": 3, "retweets": 2, "replies": 5},
        {"stance": 0, "themes": {2, 7}, "likes": 11, "retweets": 0, "replies": 1},
        {"stance": 1, "themes": {9}, "likes": 1, "retweets": 4, "replies": 0},
        {"stance": 1, "themes": {1, 7, 9}, "likes": 6, "retweets": 1, "replies": 2},
    ]
    scaled = [dict(d, likes=d["likes"] * 10) for d in specs]
    a = conv.stance_weights(0, theme_mask({1, 7}), _tweets(specs), 30)
    b = conv.stance_weights(0, theme_mask({1, 7}), _tweets(scaled), 30)
    diff = max(abs(x - y) for x, y in zip(a, b))
    ok = diff <= 1e-12
    record(8, ok, f"max weight change after x10 likes {diff:.1e} (<= 1e-12)")
    assert ok

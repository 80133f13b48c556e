"""Command-line entry point: ``sim run``, ``sim dump-preset``, ``sim graph gen|stats``.

Every ``--flag`` of ``sim run`` can also come from a ``SIM_<FLAG>`` variable
(``SIM_RUNS``, ``SIM_SEED``, ``SIM_JOBS``, ``SIM_OUT``, ``SIM_STEPS``,
``SIM_BASELINE``); explicit flags win.

Exit codes: 0 success, 2 config error, 3 IO error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .engine import InitError
from .graph import GraphFormatError, GraphGenParams, generate_scale_free, graph_stats, load_edge_list, save_edge_list, to_dot
from .scenario import PRESETS, ConfigError, dump_config, parse_config, preset, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

ENV_PREFIX = "SIM_"

log = logging.getLogger("stancesim")


def _env(name: str, cast=str):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None or raw == "":
        return None
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"{ENV_PREFIX}{name}={raw!r} is not a valid {cast.__name__}") from None


def _pick(flag, env_name: str, cast=str, default=None):
    if flag is not None:
        return flag
    v = _env(env_name, cast)
    return default if v is None else v


def _summary_lines(summary) -> list[str]:
    keys = ["final_con", "final_neu", "final_pro", "like_rt_ratio", "like_reply_ratio"]
    out = [f"scenario {summary.scenario}: {summary.n_runs} run(s)"]
    for k in keys:
        if k not in summary.samples:
            continue
        line = f"  {k:<18} mean {summary.mean(k):10.3f}  sd {summary.sd(k):9.3f}"
        sig = summary.significant(k)
        if sig is not None:
            line += f"  p {summary.p_values[k]:.3g}{' *' if sig else ''}"
        out.append(line)
    return out


def cmd_run(args) -> int:
    cfg = parse_config(args.scenario)
    steps = _pick(args.steps, "STEPS", int)
    if steps is not None:
        if steps < 0:
            raise ConfigError("steps must be non-negative")
        cfg = cfg.model_copy(update={"steps": steps})
    runs = _pick(args.runs, "RUNS", int, cfg.runs)
    seed = _pick(args.seed, "SEED", int, cfg.seed)
    jobs = _pick(args.jobs, "JOBS", int, 1)
    out = _pick(args.out, "OUT", str, "out")
    baseline = _pick(args.baseline, "BASELINE", str)
    if runs < 1:
        raise ConfigError("runs must be at least 1")
    if jobs < 1:
        raise ConfigError("jobs must be at least 1")
    if baseline is not None and not Path(baseline).exists():
        raise FileNotFoundError(f"baseline {baseline} not found")
    t0 = time.perf_counter()
    summary, _ = run_scenario(cfg, out, runs=runs, seed=seed, jobs=jobs, baseline=baseline)
    if not args.quiet:
        for line in _summary_lines(summary):
            print(line)
        print(f"wrote {Path(out) / cfg.name} in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK


def cmd_dump_preset(args) -> int:
    sys.stdout.write(dump_config(preset(args.name)))
    return EXIT_OK


def cmd_list(args) -> int:
    for name in PRESETS:
        print(f"{name}\t{preset(name).description}")
    return EXIT_OK


def cmd_graph_gen(args) -> int:
    params = GraphGenParams(args.nodes, args.mean_out_degree, args.reciprocity,
                            args.attachment_exponent, args.seed)
    g = generate_scale_free(params)
    save_edge_list(g, args.out)
    if args.dot:
        Path(args.dot).write_text(to_dot(g))
    print(json.dumps(graph_stats(g), sort_keys=True))
    return EXIT_OK


def cmd_graph_stats(args) -> int:
    g = load_edge_list(args.path)
    print(json.dumps(graph_stats(g), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim", description="Agent-based stance and theme diffusion simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario over several seeds and write exports")
    r.add_argument("--scenario", required=True, help="preset name (sim1..sim21) or YAML file")
    r.add_argument("--runs", type=int, help="number of seeds (default from config)")
    r.add_argument("--seed", type=int, help="base seed; run i uses seed + i")
    r.add_argument("--jobs", type=int, help="worker processes (default 1)")
    r.add_argument("--out", help="output root (default ./out)")
    r.add_argument("--baseline", help="scenario output dir or summary.json to test against")
    r.add_argument("--steps", type=int, help="override the step count")
    r.add_argument("-q", "--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("dump-preset", help="print a preset as YAML")
    d.add_argument("name")
    d.set_defaults(func=cmd_dump_preset)

    ls = sub.add_parser("list-presets", help="list shipped presets")
    ls.set_defaults(func=cmd_list)

    g = sub.add_parser("graph", help="follower graph utilities")
    gs = g.add_subparsers(dest="graph_command", required=True)
    gen = gs.add_parser("gen", help="generate a scale-free follower graph as an edge list")
    gen.add_argument("--nodes", type=int, default=1000)
    gen.add_argument("--mean-out-degree", type=float, default=10.0)
    gen.add_argument("--reciprocity", type=float, default=0.221)
    gen.add_argument("--attachment-exponent", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="edge list path")
    gen.add_argument("--dot", help="also write the graph as DOT")
    gen.set_defaults(func=cmd_graph_gen)
    st = gs.add_parser("stats", help="print degree and reciprocity statistics of an edge list")
    st.add_argument("path")
    st.set_defaults(func=cmd_graph_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InitError, GraphFormatError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

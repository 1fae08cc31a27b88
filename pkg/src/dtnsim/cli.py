"""Command line front end: run one cell, sweep the grid, analyze traces.

Exit codes: 0 on success, 1 on a usage error (bad flags, unknown scenario,
bad pause), 2 on a runtime failure (unreadable input, malformed trace).
"""

import argparse
import os
import re
import sys
from typing import Dict, List, Optional

from .config import SimConfig
from .metrics import (MetricsError, PauseTimeCounts, TraceTally, fmt_trunc,
                      load_counts_csv, render_counts_table, render_summary,
                      summarize_scenario, traffic_share, write_counts_csv)
from .scenarios import (PAUSE_TIMES, CatalogError, build_scenario,
                        load_catalog)
from .simulation import Simulation
from .trace import TraceParseError, TraceWriter, read_trace


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def add_physics_flags(p: Parser) -> None:
    p.add_argument("--range", type=float, default=None, metavar="M",
                   help="radio range in meters (default 250)")
    p.add_argument("--speed-min", type=float, default=None, metavar="MPS")
    p.add_argument("--speed-max", type=float, default=None, metavar="MPS")
    p.add_argument("--mb-convention", choices=("decimal", "binary"),
                   default=None, help="megabyte size used for message volume")
    p.add_argument("--catalog", default=None, metavar="PATH",
                   help="alternative scenario catalog file")


def config_from_args(args) -> SimConfig:
    cfg = SimConfig()
    if args.range is not None:
        cfg.tx_range = args.range
    if args.speed_min is not None:
        cfg.speed_min = args.speed_min
    if args.speed_max is not None:
        cfg.speed_max = args.speed_max
    if args.mb_convention is not None:
        cfg.mb_convention = args.mb_convention
    cfg.validate()
    return cfg


def build_parser() -> Parser:
    parser = Parser(prog="dtnsim",
                    description="Bundle-layer store-and-forward simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one (scenario, pause, seed) cell")
    p_run.add_argument("--scenario", type=int, required=True)
    p_run.add_argument("--pause", type=int, required=True)
    p_run.add_argument("--seed", type=int, required=True)
    p_run.add_argument("--out", required=True, metavar="PATH.tr")
    add_physics_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a grid of cells")
    p_sweep.add_argument("--scenario", type=int, nargs="+", default=None)
    p_sweep.add_argument("--pauses", type=int, nargs="+", default=None)
    p_sweep.add_argument("--seeds", type=int, nargs="+", default=[1])
    p_sweep.add_argument("--out-dir", required=True)
    add_physics_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_an = sub.add_parser("analyze", help="derive tables and figures")
    src = p_an.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace-dir", help="directory laid out as s<NN>/p<P>_seed<K>.tr")
    src.add_argument("--counts", help="counts csv: scenario,pause,dtn,overall,received,send,drop")
    p_an.add_argument("--out-dir", required=True)
    p_an.add_argument("--catalog", default=None, metavar="PATH")
    p_an.set_defaults(func=cmd_analyze)
    return parser


# -- run -------------------------------------------------------------------

def cmd_run(args) -> int:
    catalog = load_catalog(args.catalog)
    spec = build_scenario(args.scenario, args.pause, args.seed, catalog)
    cfg = config_from_args(args)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    with open(args.out, "w", encoding="ascii", newline="") as fh:
        writer = TraceWriter(fh)
        sim = Simulation(spec, cfg, writer)
        result = sim.run()
        writer.close()
    total_created = sum(result.created.values())
    total_delivered = sum(len(s) for s in result.delivered.values())
    print(f"scenario {args.scenario} pause {args.pause} seed {args.seed}: "
          f"{result.trace_emitted} trace records, "
          f"{total_delivered}/{total_created} bundles delivered, "
          f"{result.summary.dispatched} events")
    return 0


# -- sweep -----------------------------------------------------------------

def cmd_sweep(args) -> int:
    catalog = load_catalog(args.catalog)
    scenarios = args.scenario or sorted(catalog)
    pauses = args.pauses or list(PAUSE_TIMES)
    cfg = config_from_args(args)
    for n in scenarios:
        if n not in catalog:
            raise UsageError(f"unknown scenario {n}")
    for n in scenarios:
        entry = catalog[n]
        cell_dir = os.path.join(args.out_dir, "traces", f"s{entry.mobile_count}")
        os.makedirs(cell_dir, exist_ok=True)
        for pause in pauses:
            for seed in args.seeds:
                spec = build_scenario(n, pause, seed, catalog)
                path = os.path.join(cell_dir, f"p{pause}_seed{seed}.tr")
                with open(path, "w", encoding="ascii", newline="") as fh:
                    writer = TraceWriter(fh)
                    result = Simulation(spec, cfg, writer).run()
                    writer.close()
                print(f"s{entry.mobile_count} p{pause} seed{seed}: "
                      f"{result.trace_emitted} records")
    return 0


# -- analyze ---------------------------------------------------------------

_TRACE_NAME = re.compile(r"p(\d+)_seed(\d+)\.tr$")
_TRACE_DIR = re.compile(r"s(\d+)$")


def discover_traces(trace_dir: str) -> List[tuple]:
    """(nodes, pause, seed, path) for every trace in the sweep layout."""
    found = []
    for entry in sorted(os.listdir(trace_dir)):
        m_dir = _TRACE_DIR.match(entry)
        sub = os.path.join(trace_dir, entry)
        if not m_dir or not os.path.isdir(sub):
            continue
        nodes = int(m_dir.group(1))
        for name in sorted(os.listdir(sub)):
            m = _TRACE_NAME.match(name)
            if m:
                found.append((nodes, int(m.group(1)), int(m.group(2)),
                              os.path.join(sub, name)))
    if not found:
        raise FileNotFoundError(f"no traces under {trace_dir}")
    return found


def cmd_analyze(args) -> int:
    catalog = load_catalog(args.catalog)
    by_nodes = {entry.mobile_count: entry for entry in catalog.values()}
    os.makedirs(args.out_dir, exist_ok=True)

    if args.counts:
        rows_by_scenario = load_counts_csv(args.counts)
        summaries = []
        for scenario in sorted(rows_by_scenario):
            if scenario not in catalog:
                raise MetricsError(f"counts csv names unknown scenario {scenario}")
            entry = catalog[scenario]
            rows = rows_by_scenario[scenario]
            summaries.append(summarize_scenario(
                scenario, entry.mobile_count, len(entry.connections), rows))
            with open(os.path.join(args.out_dir, f"counts_s{scenario}.txt"),
                      "w", encoding="ascii") as fh:
                fh.write(render_counts_table(scenario, rows))
        _write_theta_csv(args.out_dir, catalog, rows_by_scenario)
        with open(os.path.join(args.out_dir, "summary.txt"),
                  "w", encoding="ascii") as fh:
            fh.write(render_summary(summaries))
        print(render_summary(summaries), end="")
        return 0

    # Trace-directory mode: tally each run, then aggregate per seed.
    tallies: Dict[int, Dict[int, Dict[int, TraceTally]]] = {}
    for nodes, pause, seed, path in discover_traces(args.trace_dir):
        if nodes not in by_nodes:
            raise MetricsError(f"trace dir names unknown node count {nodes}")
        scenario = by_nodes[nodes].number
        tally = TraceTally(pause)
        tally.consume(read_trace(path))
        tallies.setdefault(seed, {}).setdefault(scenario, {})[pause] = tally

    last_summary = ""
    for seed in sorted(tallies):
        per_scenario = tallies[seed]
        rows_by_scenario = {
            s: {p: t.counts() for p, t in per_pause.items()}
            for s, per_pause in per_scenario.items()}
        summaries = []
        for scenario in sorted(rows_by_scenario):
            entry = catalog[scenario]
            rows = rows_by_scenario[scenario]
            summaries.append(summarize_scenario(
                scenario, entry.mobile_count, len(entry.connections), rows))
            with open(os.path.join(args.out_dir,
                                   f"counts_s{scenario}_seed{seed}.txt"),
                      "w", encoding="ascii") as fh:
                fh.write(render_counts_table(scenario, rows))
        write_counts_csv(os.path.join(args.out_dir, f"counts_seed{seed}.csv"),
                         rows_by_scenario)
        last_summary = render_summary(summaries)
        with open(os.path.join(args.out_dir, f"summary_seed{seed}.txt"),
                  "w", encoding="ascii") as fh:
            fh.write(last_summary)
        _write_theta_csv(args.out_dir, catalog, rows_by_scenario, seed=seed)

    _write_figures(args.out_dir, catalog, tallies)
    if last_summary:
        print(last_summary, end="")
    return 0


def _write_theta_csv(out_dir: str, catalog, rows_by_scenario,
                     seed: Optional[int] = None) -> None:
    scenarios = sorted(rows_by_scenario)
    suffix = f"_seed{seed}" if seed is not None else ""
    path = os.path.join(out_dir, f"fig_theta{suffix}.csv")
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("pause_time," + ",".join(f"s{s}" for s in scenarios) + "\n")
        for pause in range(10, 101, 10):
            cells = []
            for s in scenarios:
                entry = catalog[s]
                rows = rows_by_scenario[s]
                if pause not in rows:
                    cells.append("")
                    continue
                from .metrics import connection_density
                density = connection_density(len(entry.connections),
                                             entry.mobile_count)
                cells.append(fmt_trunc(traffic_share(rows[pause].dtn, density), 3))
            fh.write(f"{pause}," + ",".join(cells) + "\n")


def _write_figures(out_dir: str, catalog, tallies) -> None:
    """Per-pause figure series, averaged across seeds where needed."""
    scenarios = sorted({s for per in tallies.values() for s in per})
    pauses = list(range(10, 101, 10))

    def mean_over_seeds(fn, scenario, pause):
        vals = []
        for seed in tallies:
            tally = tallies[seed].get(scenario, {}).get(pause)
            if tally is not None:
                vals.append(fn(tally))
        return sum(vals) / len(vals) if vals else None

    figures = {
        "fig_received.csv": lambda t: sum(t.win_recv.values()),
        "fig_throughput.csv": lambda t: t.mean_throughput(),
        "fig_overhead.csv": lambda t: t.mean_overhead(),
    }
    for name, fn in figures.items():
        with open(os.path.join(out_dir, name), "w", encoding="ascii",
                  newline="") as fh:
            fh.write("pause_time," + ",".join(f"s{s}" for s in scenarios) + "\n")
            for pause in pauses:
                cells = []
                for s in scenarios:
                    v = mean_over_seeds(fn, s, pause)
                    cells.append("" if v is None else f"{v:.3f}")
                fh.write(f"{pause}," + ",".join(cells) + "\n")


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (UsageError, CatalogError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MetricsError, TraceParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 2


if __name__ == "__main__":
    sys.exit(main())

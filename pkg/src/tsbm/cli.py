"""Command-line entry point: ``tsbm fit | simulate | evaluate | estimate``.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
unreadable or inconsistent data.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .core import Partition
from .evaluation import adjusted_rand_index
from .intensity import estimate_intensities
from .io import (
    DataError,
    RunConfig,
    load_input,
    read_labels,
    run_pipeline,
    write_events,
    write_labels,
    write_tensor,
)
from .search import STRATEGIES
from .simulate import PRESETS, sample, scenario_from_dict

log = logging.getLogger("tsbm")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_input(p):
    p.add_argument("input", help="event, binned or tensor file")
    p.add_argument("--format", dest="input_format", default="timestamped",
                   choices=["timestamped", "binned", "tensor"])
    idx = p.add_mutually_exclusive_group()
    idx.add_argument("--one-based", dest="one_based", action="store_true", default=True,
                     help="binned interval indices start at 1 (default)")
    idx.add_argument("--zero-based", dest="one_based", action="store_false")
    p.add_argument("--columns", help="comma-separated names of the file columns, '_' to skip one")
    p.add_argument("--n-intervals", type=int)
    p.add_argument("--interval-length", type=float)
    p.add_argument("--breakpoints", help="comma-separated grid breakpoints")


def _floats(text):
    return [float(v) for v in text.split(",")] if text else None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tsbm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="cluster nodes (and intervals) by greedy ICL search")
    _add_input(fit)
    fit.add_argument("--out", dest="out_dir", required=True, help="output directory")
    fit.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    fit.add_argument("--model", choices=["A", "B"])
    fit.add_argument("--strategy", choices=STRATEGIES)
    fit.add_argument("--k-max", type=int)
    fit.add_argument("--d-max", type=int)
    fit.add_argument("--restarts", dest="n_restarts", type=int)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--epsilon", type=float)
    for prior in ("a", "b", "alpha", "beta"):
        fit.add_argument(f"--{prior}", type=float)
    fit.add_argument("--time-init", choices=["segments", "random"])
    fit.add_argument("--jobs", dest="n_jobs", type=int)
    for flag in ("assignments", "intensities", "trace", "plots"):
        fit.add_argument(f"--no-{flag}", dest=f"emit_{flag}", action="store_false", default=None)

    sim = sub.add_parser("simulate", help="draw a synthetic dataset from a preset or scenario file")
    sim.add_argument("preset", nargs="?", choices=sorted(PRESETS))
    sim.add_argument("--scenario", help="JSON scenario, optionally layered over a preset")
    sim.add_argument("--psi", type=float)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--events", action="store_true", help="write timestamped events instead of a tensor")
    sim.add_argument("--out", required=True, help="output CSV path")

    ev = sub.add_parser("evaluate", help="adjusted Rand index between two label files")
    ev.add_argument("labels", nargs=2)

    est = sub.add_parser("estimate", help="integrated intensities for fixed labels")
    _add_input(est)
    est.add_argument("--labels", required=True, help="node label file")
    est.add_argument("--time-labels", help="interval label file (model B)")
    est.add_argument("--out", required=True, help="output CSV path")
    return parser


def _run_config(args) -> RunConfig:
    data = {}
    if args.config:
        data.update(json.loads(Path(args.config).read_text()))
    names = {f.name for f in fields(RunConfig)}
    for key, value in vars(args).items():
        if key in names and value is not None:
            data[key] = value
    data["one_based"] = args.one_based
    if args.breakpoints:
        data["breakpoints"] = _floats(args.breakpoints)
    return RunConfig.from_dict(data)


def _align(ids, labels, reference, what):
    index = {str(i): k for k, i in enumerate(ids)}
    missing = [r for r in reference if str(r) not in index]
    if missing or len(ids) != len(reference):
        raise DataError(f"{what} labels do not cover the ids exactly (e.g. {missing[:3]})")
    out = np.array([labels[index[str(r)]] for r in reference])
    if out.min() < 1:
        raise DataError(f"{what} labels must be 1-based")
    return Partition.from_labels(out - 1)


def _cmd_fit(args) -> int:
    return run_pipeline(_run_config(args))


def _cmd_simulate(args) -> int:
    if args.scenario:
        entries = json.loads(Path(args.scenario).read_text())
        if args.preset:
            entries.setdefault("preset", args.preset)
        if args.psi is not None:
            entries["psi"] = args.psi
        scenario = scenario_from_dict(entries)
    elif args.preset:
        scenario = scenario_from_dict({"preset": args.preset, **({"psi": args.psi} if args.psi is not None else {})})
    else:
        raise ValueError("give a preset name or --scenario")
    rng = np.random.default_rng(args.seed)
    z, y, data = sample(scenario, rng, events=args.events)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tag = {"scenario": scenario.name, "seed": args.seed}
    ids = [str(k) for k in range(1, scenario.n_nodes + 1)]
    if args.events:
        write_events(data, out, ids, meta=tag)
    else:
        write_tensor(data, out, ids, meta=tag)
    write_labels(out.with_name(out.stem + ".nodes.csv"), ids, z, meta=tag)
    write_labels(out.with_name(out.stem + ".times.csv"), range(1, y.size + 1), y,
                 name="time_cluster", meta=tag)
    bp = scenario.grid.breakpoints
    log.info("wrote %s (N=%d, U=%d, T=%g)", out, scenario.n_nodes, bp.size - 1, bp[-1])
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    ids1, lab1 = read_labels(args.labels[0])
    ids2, lab2 = read_labels(args.labels[1])
    if sorted(ids1) != sorted(ids2):
        raise DataError("label files cover different ids")
    order = {i: k for k, i in enumerate(ids2)}
    print(f"{adjusted_rand_index(lab1, lab2[[order[i] for i in ids1]]):.6f}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    config = RunConfig(
        input=args.input, out_dir=".", input_format=args.input_format, one_based=args.one_based,
        columns=args.columns, n_intervals=args.n_intervals,
        interval_length=args.interval_length, breakpoints=_floats(args.breakpoints),
    )
    tensor, node_ids = load_input(config)
    z = _align(*read_labels(args.labels), node_ids, "node")
    y = None
    if args.time_labels:
        y = _align(*read_labels(args.time_labels), range(1, tensor.n_intervals + 1), "interval")
    est = estimate_intensities(tensor, z, y)
    bp = tensor.grid.breakpoints
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "g", "interval", "t", "pi", "Lambda"])
        for (k, g), e in sorted(est.items()):
            for u in range(tensor.n_intervals):
                w.writerow([k + 1, g + 1, u + 1, bp[u + 1], e.increments[u], e.values[u + 1]])
    return EXIT_OK


COMMANDS = {"fit": _cmd_fit, "simulate": _cmd_simulate,
            "evaluate": _cmd_evaluate, "estimate": _cmd_estimate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DataError, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

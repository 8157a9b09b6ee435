"""Reading interaction records, tensor interchange files and the fit pipeline.

Interval indices and cluster labels are 1-based in every file written here.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import re
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .core import InteractionTensor, Partition, Priors, TimeGrid, build_tensor
from .intensity import estimate_intensities
from .search import STRATEGIES, SearchConfig, run

__all__ = [
    "DataError",
    "EventTable",
    "parse_events",
    "to_tensor",
    "write_tensor",
    "read_tensor",
    "write_events",
    "write_labels",
    "read_labels",
    "RunConfig",
    "config_hash",
    "run_pipeline",
]

log = logging.getLogger(__name__)

DEFAULT_COLUMNS = {
    "timestamped": ("src", "dst", "time"),
    "binned": ("src", "dst", "interval", "count"),
}
_SPLIT = re.compile(r"[,\s;]+")


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass
class EventTable:
    """Parsed records with node ids mapped to ``0..N-1`` (``node_ids[k]`` is the original id)."""

    kind: str
    src: np.ndarray
    dst: np.ndarray
    node_ids: list[str]
    time: np.ndarray | None = None
    interval: np.ndarray | None = None  # 0-based
    count: np.ndarray | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def __len__(self):
        return self.src.size


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _sort_ids(ids) -> list[str]:
    ids = set(ids)
    if all(re.fullmatch(r"-?\d+", s) for s in ids):
        return sorted(ids, key=int)
    return sorted(ids)


def _rows(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, [t for t in _SPLIT.split(line) if t]


def parse_events(path, fmt: str = "timestamped", one_based: bool = True,
                 columns=None, node_ids=None) -> EventTable:
    """Read ``src dst time`` or ``src dst interval count`` rows.

    Separators may be commas, semicolons or whitespace. A first row containing a
    non-numeric field other than the node ids is taken as a header and skipped.
    ``columns`` names each file column (``"_"`` ignores one), for files whose
    field order differs from the default. ``node_ids`` fixes the id universe and
    its order (otherwise ids are sorted, numerically when possible).
    """
    if fmt not in DEFAULT_COLUMNS:
        raise ValueError(f"unknown format {fmt!r}")
    if columns is None:
        columns = DEFAULT_COLUMNS[fmt]
    elif isinstance(columns, str):
        columns = tuple(c.strip() for c in columns.split(","))
    columns = tuple(columns)
    needed = set(DEFAULT_COLUMNS[fmt])
    if not needed <= set(columns):
        raise ValueError(f"columns {columns} must name {sorted(needed)}")
    pos = {name: columns.index(name) for name in needed}

    src, dst, vals = [], [], {k: [] for k in needed - {"src", "dst"}}
    first = True
    for lineno, toks in _rows(path):
        if first:
            first = False
            numeric_fields = [toks[pos[k]] for k in vals if pos[k] < len(toks)]
            if len(toks) >= len(columns) and not all(_is_number(t) for t in numeric_fields):
                continue
        if len(toks) < len(columns):
            raise DataError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(toks)}")
        s, d = toks[pos["src"]], toks[pos["dst"]]
        if s == d:
            raise DataError(f"{path}:{lineno}: self-loop on node {s}")
        row = {}
        for key in vals:
            tok = toks[pos[key]]
            try:
                v = float(tok)
            except ValueError:
                raise DataError(f"{path}:{lineno}: field {key!r} is not numeric: {tok!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}:{lineno}: field {key!r} is not finite")
            if key in ("interval", "count") and v != int(v):
                raise DataError(f"{path}:{lineno}: field {key!r} must be an integer")
            row[key] = v
        if row.get("count", 0) < 0:
            raise DataError(f"{path}:{lineno}: negative count")
        if "interval" in row:
            row["interval"] -= 1 if one_based else 0
            if row["interval"] < 0:
                raise DataError(f"{path}:{lineno}: interval index below the first interval")
        if row.get("time", 0.0) < 0:
            raise DataError(f"{path}:{lineno}: negative timestamp")
        src.append(s)
        dst.append(d)
        for key, v in row.items():
            vals[key].append(v)

    if node_ids is None:
        node_ids = _sort_ids(src + dst)
    else:
        node_ids = [str(n) for n in node_ids]
    index = {n: k for k, n in enumerate(node_ids)}
    missing = (set(src) | set(dst)) - set(index)
    if missing:
        raise DataError(f"{path}: node ids not in the given id list: {sorted(missing)[:5]}")
    table = EventTable(
        kind=fmt,
        src=np.array([index[s] for s in src], dtype=np.int64),
        dst=np.array([index[d] for d in dst], dtype=np.int64),
        node_ids=list(node_ids),
    )
    if fmt == "timestamped":
        table.time = np.array(vals["time"], dtype=float)
    else:
        table.interval = np.array(vals["interval"], dtype=np.int64)
        table.count = np.array(vals["count"], dtype=np.int64)
    return table


def to_tensor(table: EventTable, grid: TimeGrid | None = None) -> InteractionTensor:
    """Aggregate parsed records on ``grid`` (binned records default to unit intervals)."""
    N = table.n_nodes
    if table.kind == "timestamped":
        if grid is None:
            raise ValueError("timestamped events need a time grid")
        events = np.column_stack([table.src, table.dst, table.time]) if len(table) else []
        try:
            return build_tensor(events, grid, N)
        except ValueError as exc:
            raise DataError(str(exc)) from None
    U = grid.n_intervals if grid is not None else int(table.interval.max()) + 1 if len(table) else 1
    grid = grid or TimeGrid.uniform(U)
    if len(table) and table.interval.max() >= U:
        bad = int(np.argmax(table.interval >= U))
        raise DataError(f"record {bad}: interval {table.interval[bad]} beyond the {U} grid intervals")
    counts = np.zeros((N, N, U), dtype=np.int64)
    np.add.at(counts, (table.src, table.dst, table.interval), table.count)
    return InteractionTensor(counts, grid)


def _meta_path(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def _header_lines(meta: dict | None):
    if not meta:
        return []
    return ["# " + " ".join(f"{k}={v}" for k, v in meta.items())]


def write_tensor(tensor: InteractionTensor, path, node_ids=None, meta: dict | None = None) -> Path:
    """Write nonzero cells as ``src,dst,interval,count`` CSV plus a ``.meta.json`` header."""
    path = Path(path)
    node_ids = [str(n) for n in (node_ids if node_ids is not None else range(1, tensor.n_nodes + 1))]
    if len(node_ids) != tensor.n_nodes:
        raise ValueError("node_ids length differs from the number of nodes")
    i, j, u = np.nonzero(tensor.counts)
    with open(path, "w", newline="") as fh:
        for line in _header_lines(meta):
            fh.write(line + "\n")
        w = csv.writer(fh)
        w.writerow(["src", "dst", "interval", "count"])
        for a, b, c, n in zip(i, j, u, tensor.counts[i, j, u]):
            w.writerow([node_ids[a], node_ids[b], int(c) + 1, int(n)])
    header = {
        "format": "tsbm-tensor",
        "n_nodes": tensor.n_nodes,
        "n_intervals": tensor.n_intervals,
        "breakpoints": tensor.grid.breakpoints.tolist(),
        "node_ids": node_ids,
        **(meta or {}),
    }
    _meta_path(path).write_text(json.dumps(header, indent=1))
    return path


def read_tensor(path) -> tuple[InteractionTensor, list[str]]:
    path = Path(path)
    meta_file = _meta_path(path)
    if not meta_file.exists():
        raise DataError(f"missing tensor header {meta_file}")
    meta = json.loads(meta_file.read_text())
    grid = TimeGrid(np.asarray(meta["breakpoints"], dtype=float))
    table = parse_events(path, "binned", one_based=True, node_ids=meta["node_ids"])
    return to_tensor(table, grid), table.node_ids


def write_events(events, path, node_ids=None, meta: dict | None = None) -> Path:
    path = Path(path)
    events = np.asarray(events, dtype=float).reshape(-1, 3)
    with open(path, "w", newline="") as fh:
        for line in _header_lines(meta):
            fh.write(line + "\n")
        w = csv.writer(fh)
        w.writerow(["src", "dst", "time"])
        for s, d, t in events:
            s, d = int(s), int(d)
            w.writerow([node_ids[s] if node_ids else s + 1, node_ids[d] if node_ids else d + 1, repr(float(t))])
    return path


def write_labels(path, ids, labels, name="cluster", meta: dict | None = None, extra=None) -> Path:
    """``id,cluster`` CSV with 1-based cluster labels; ``extra`` maps column -> values."""
    path = Path(path)
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        for line in _header_lines(meta):
            fh.write(line + "\n")
        w = csv.writer(fh)
        w.writerow(["id", *extra, name])
        for k, (i, lab) in enumerate(zip(ids, labels)):
            w.writerow([i, *(col[k] for col in extra.values()), int(lab) + 1])
    return path


def read_labels(path) -> tuple[list[str], np.ndarray]:
    """Read an ``id,...,cluster`` file (last column is the label); returns 0-based labels."""
    ids, labels = [], []
    first = True
    for lineno, toks in _rows(path):
        if first:
            first = False
            if not _is_number(toks[-1]):
                continue
        if len(toks) < 2:
            raise DataError(f"{path}:{lineno}: expected an id and a label")
        try:
            lab = int(toks[-1])
        except ValueError:
            raise DataError(f"{path}:{lineno}: label {toks[-1]!r} is not an integer") from None
        ids.append(toks[0])
        labels.append(lab)
    return ids, np.asarray(labels, dtype=np.int64)


# -- pipeline --------------------------------------------------------------------------

@dataclass
class RunConfig:
    input: str
    out_dir: str
    input_format: str = "timestamped"  # timestamped | binned | tensor
    one_based: bool = True
    columns: str | None = None
    n_intervals: int | None = None
    interval_length: float | None = None
    breakpoints: list[float] | None = None
    model: str = "A"
    strategy: str | None = None
    k_max: int | None = None
    d_max: int | None = None
    n_restarts: int = 10
    seed: int = 0
    epsilon: float = 0.0
    a: float = 1.0
    b: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    time_init: str = "segments"
    n_jobs: int = 1
    emit_assignments: bool = True
    emit_intensities: bool = True
    emit_trace: bool = True
    emit_plots: bool = True

    def __post_init__(self):
        if self.input_format not in ("timestamped", "binned", "tensor"):
            raise ValueError(f"unknown input format {self.input_format!r}")
        if self.model not in ("A", "B"):
            raise ValueError("model must be 'A' or 'B'")
        if self.strategy is None:
            self.strategy = "A-only" if self.model == "A" else "TN"
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if (self.model == "A") != (self.strategy == "A-only"):
            raise ValueError(f"strategy {self.strategy!r} does not fit model {self.model}")
        if self.model == "A" and self.d_max is not None:
            raise ValueError("d_max only applies to model B")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def search_config(self) -> SearchConfig:
        return SearchConfig(
            k_max=self.k_max, d_max=self.d_max, n_restarts=self.n_restarts,
            strategy=self.strategy, seed=self.seed, epsilon=self.epsilon,
            priors=Priors(self.a, self.b, self.alpha, self.beta),
            n_jobs=self.n_jobs, time_init=self.time_init,
        )


def config_hash(config: RunConfig) -> str:
    payload = {k: v for k, v in asdict(config).items() if k != "out_dir"}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def _grid_for(config: RunConfig, table: EventTable) -> TimeGrid | None:
    if config.breakpoints is not None:
        return TimeGrid(np.asarray(config.breakpoints, dtype=float))
    if table.kind == "binned":
        if config.n_intervals is None and config.interval_length is None:
            return None
        U = config.n_intervals or (int(table.interval.max()) + 1 if len(table) else 1)
        return TimeGrid.uniform(U, config.interval_length or 1.0)
    t_max = float(table.time.max()) if len(table) else 0.0
    if config.interval_length is not None:
        U = config.n_intervals or max(1, math.ceil(t_max / config.interval_length))
        return TimeGrid.uniform(U, config.interval_length)
    if config.n_intervals is not None:
        if t_max <= 0:
            raise DataError("cannot infer an interval length from empty or zero-time data")
        return TimeGrid.uniform(config.n_intervals, t_max / config.n_intervals)
    raise ValueError("timestamped input needs breakpoints, interval_length or n_intervals")


def load_input(config: RunConfig) -> tuple[InteractionTensor, list[str]]:
    if config.input_format == "tensor":
        return read_tensor(config.input)
    table = parse_events(config.input, config.input_format, config.one_based, config.columns)
    return to_tensor(table, _grid_for(config, table)), table.node_ids


def run_pipeline(config: RunConfig) -> int:
    """Fit, estimate and write every requested output. Returns a process exit status."""
    t0 = time.perf_counter()
    try:
        tensor, node_ids = load_input(config)
    except (DataError, OSError) as exc:
        log.error("%s", exc)
        return 2
    try:
        search = config.search_config()
        result = run(tensor, search)
    except ValueError as exc:
        log.error("%s", exc)
        return 1
    elapsed = time.perf_counter() - t0

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(config)
    tag = {"config_hash": h, "seed": config.seed}
    grid = tensor.grid
    bp = grid.breakpoints
    U = tensor.n_intervals

    if config.emit_assignments:
        write_labels(out / "node_clusters.csv", node_ids, result.z.labels, meta=tag)
        if result.y is not None:
            write_labels(out / "time_clusters.csv", range(1, U + 1), result.y.labels,
                         name="time_cluster", meta=tag,
                         extra={"start": bp[:-1].tolist(), "end": bp[1:].tolist()})

    if config.emit_intensities:
        est = estimate_intensities(tensor, result.z, result.y)
        with open(out / "intensities.csv", "w", newline="") as fh:
            fh.write(_header_lines(tag)[0] + "\n")
            w = csv.writer(fh)
            w.writerow(["k", "g", "interval", "t", "pi", "Lambda"])
            for (k, g), e in sorted(est.items()):
                for u in range(U):
                    w.writerow([k + 1, g + 1, u + 1, bp[u + 1], e.increments[u], e.values[u + 1]])

    if config.emit_plots:
        Z = result.z.one_hot()
        block = np.einsum("ik,iju,jg->kgu", Z, tensor.counts, Z)
        cum = np.cumsum(block, axis=2)
        with open(out / "cumulative_interactions.csv", "w", newline="") as fh:
            fh.write(_header_lines(tag)[0] + "\n")
            w = csv.writer(fh)
            w.writerow(["k", "g", "interval", "t", "count", "cumulative"])
            K = result.n_clusters
            for k in range(K):
                for g in range(K):
                    for u in range(U):
                        w.writerow([k + 1, g + 1, u + 1, bp[u + 1], int(block[k, g, u]), int(cum[k, g, u])])
        totals = tensor.counts.sum(axis=(0, 1))
        with open(out / "time_profile.csv", "w", newline="") as fh:
            fh.write(_header_lines(tag)[0] + "\n")
            w = csv.writer(fh)
            w.writerow(["interval", "start", "end", "total", "time_cluster"])
            for u in range(U):
                tc = int(result.y.labels[u]) + 1 if result.y is not None else ""
                w.writerow([u + 1, bp[u], bp[u + 1], int(totals[u]), tc])

    meta = {
        "version": __version__,
        "config": asdict(config),
        "config_hash": h,
        "seed": config.seed,
        "model": result.model,
        "strategy": result.config.strategy,
        "k_max": result.config.k_max,
        "d_max": result.config.d_max,
        "n_nodes": tensor.n_nodes,
        "n_intervals": U,
        "n_events": tensor.total,
        "icl": result.icl,
        "n_clusters": result.n_clusters,
        "n_time_clusters": result.n_time_clusters,
        "best_restart": result.best_restart,
        "seconds": elapsed,
        "integrity_errors": result.integrity_errors,
        "node_ids": node_ids,
        "restarts": [
            {k: v for k, v in asdict(r).items() if config.emit_trace or k != "trace"}
            for r in result.restarts
        ],
    }
    (out / "run.json").write_text(json.dumps(meta, indent=1))
    log.info("K=%d ICL=%.3f in %.2fs -> %s", result.n_clusters, result.icl, elapsed, out)
    return 0 if not result.integrity_errors else 2

"""Synthetic dynamic graphs with piecewise-constant block intensities.

A scenario holds one ``K x K`` rate matrix per regime; interval ``u`` follows
regime ``y[u]``. Rates are Poisson means per ordered pair over an interval of
``unit_length`` time units, so an interval of length ``dt`` has mean
``rate * dt / unit_length``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .core import InteractionTensor, TimeGrid

__all__ = [
    "SimScenario",
    "PRESETS",
    "sample_memberships",
    "sample_tensor",
    "sample_events",
    "sample",
    "scenario_presets",
    "scenario_from_dict",
    "load_scenario",
]


@dataclass(frozen=True, eq=False)
class SimScenario:
    n_nodes: int
    grid: TimeGrid
    node_weights: np.ndarray
    rates: np.ndarray  # (R, K, K)
    time_labels: np.ndarray | None = None  # (U,) regime per interval
    time_weights: np.ndarray | None = None  # (R,) used when time_labels is None
    unit_length: float = 1.0
    psi: float | None = None
    name: str = "custom"

    def __post_init__(self):
        w = np.asarray(self.node_weights, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if rates.ndim == 2:
            rates = rates[None]
        if rates.ndim != 3 or rates.shape[1] != rates.shape[2]:
            raise ValueError("rates must have shape (R, K, K)")
        if rates.shape[1] != w.size:
            raise ValueError("node_weights and rates disagree on K")
        _check_simplex(w, "node_weights")
        if np.any(rates < 0):
            raise ValueError("rates must be non-negative")
        object.__setattr__(self, "node_weights", w)
        object.__setattr__(self, "rates", rates)
        if self.time_labels is not None:
            y = np.asarray(self.time_labels, dtype=np.int64)
            if y.shape != (self.grid.n_intervals,):
                raise ValueError("time_labels must have one entry per interval")
            if y.min() < 0 or y.max() >= rates.shape[0]:
                raise ValueError("time_labels reference a missing regime")
            object.__setattr__(self, "time_labels", y)
        else:
            tw = (np.full(rates.shape[0], 1.0 / rates.shape[0]) if self.time_weights is None
                  else np.asarray(self.time_weights, dtype=float))
            if tw.size != rates.shape[0]:
                raise ValueError("time_weights and rates disagree on the number of regimes")
            _check_simplex(tw, "time_weights")
            object.__setattr__(self, "time_weights", tw)
        if self.psi is not None and self.psi < 1:
            raise ValueError("psi must be >= 1")
        if self.unit_length <= 0:
            raise ValueError("unit_length must be positive")

    @property
    def n_clusters(self) -> int:
        return self.node_weights.size

    @property
    def n_regimes(self) -> int:
        return self.rates.shape[0]

    def interval_means(self, z, y) -> np.ndarray:
        """Poisson mean of every cell ``(i, j, u)``; diagonal set to zero."""
        z = np.asarray(z)
        y = np.asarray(y)
        scale = self.grid.lengths / self.unit_length
        blocks = self.rates[y] * scale[:, None, None]  # (U, K, K)
        mean = blocks[:, z][:, :, z].transpose(1, 2, 0)
        idx = np.arange(self.n_nodes)
        mean[idx, idx, :] = 0.0
        return mean

    def integrated_intensity(self, y=None) -> np.ndarray:
        """True cumulative block intensities at the breakpoints, shape ``(K, K, U + 1)``."""
        y = self.time_labels if y is None else np.asarray(y)
        scale = self.grid.lengths / self.unit_length
        inc = self.rates[y] * scale[:, None, None]
        cum = np.concatenate([np.zeros((1,) + inc.shape[1:]), np.cumsum(inc, axis=0)])
        return cum.transpose(1, 2, 0)


def _check_simplex(w, name):
    if w.ndim != 1 or np.any(w < 0) or not np.isclose(w.sum(), 1.0):
        raise ValueError(f"{name} must lie on the probability simplex")


def sample_memberships(weights, n: int, rng) -> np.ndarray:
    """Independent categorical labels in ``0..len(weights)-1``."""
    w = np.asarray(weights, dtype=float)
    _check_simplex(w, "weights")
    return rng.choice(w.size, size=n, p=w / w.sum())


def _time_labels(scenario: SimScenario, rng) -> np.ndarray:
    if scenario.time_labels is not None:
        return scenario.time_labels
    return sample_memberships(scenario.time_weights, scenario.grid.n_intervals, rng)


def sample_tensor(scenario: SimScenario, z, y, rng) -> InteractionTensor:
    """Independent Poisson counts for every ordered pair and interval."""
    counts = rng.poisson(scenario.interval_means(z, y))
    return InteractionTensor(counts, scenario.grid)


def sample_events(scenario: SimScenario, z, y, rng) -> np.ndarray:
    """Timestamped events ``(source, target, time)`` sorted by time.

    Counts are drawn exactly as in :func:`sample_tensor` (same ``rng`` state gives
    the same counts); each event is then placed uniformly inside its interval.
    """
    Y = sample_tensor(scenario, z, y, rng).counts
    i, j, u = np.nonzero(Y)
    reps = Y[i, j, u]
    src = np.repeat(i, reps)
    dst = np.repeat(j, reps)
    uu = np.repeat(u, reps)
    bp = scenario.grid.breakpoints
    lo, hi = bp[uu], bp[uu + 1]
    t = lo + (hi - lo) * rng.random(uu.size)
    # keep float rounding from pushing a time onto the next breakpoint
    t = np.minimum(t, np.nextafter(hi, lo))
    order = np.argsort(t, kind="stable")
    return np.column_stack([src[order], dst[order], t[order]])


def sample(scenario: SimScenario, rng, events: bool = False):
    """Draw memberships, regimes and data. Returns ``(z, y, tensor_or_events)``."""
    z = sample_memberships(scenario.node_weights, scenario.n_nodes, rng)
    y = _time_labels(scenario, rng)
    if events:
        return z, y, sample_events(scenario, z, y, rng)
    return z, y, sample_tensor(scenario, z, y, rng)


def _two_blocks(U, ranges):
    y = np.ones(U, dtype=np.int64)
    for lo, hi in ranges:
        y[lo - 1:hi] = 0
    return y


def _scenario1(psi=2.0):
    P = np.array([[psi, 1.0], [1.0, psi]])
    Q = np.array([[1.0, psi], [psi, 1.0]])
    return SimScenario(
        n_nodes=50,
        grid=TimeGrid.uniform(100, 1.0),
        node_weights=np.array([0.5, 0.5]),
        rates=np.stack([P, Q]),
        time_labels=_two_blocks(100, [(1, 25), (51, 75)]),
        psi=psi,
        name="scenario1",
    )


def _overfit(psi=1.4):
    base = _scenario1(psi)
    return replace(
        base,
        grid=TimeGrid.uniform(1000, 0.1),
        rates=base.rates / 10.0,
        time_labels=_two_blocks(1000, [(1, 250), (501, 750)]),
        unit_length=0.1,
        name="overfit",
    )


def _scenario2(psi=2.6, n_clusters=2):
    P = np.full((n_clusters, n_clusters), 2.0)
    np.fill_diagonal(P, psi)
    y = np.ones(50, dtype=np.int64)
    y[:25] = 0
    return SimScenario(
        n_nodes=50,
        grid=TimeGrid.uniform(50, 1.0),
        node_weights=np.full(n_clusters, 1.0 / n_clusters),
        rates=np.stack([P, 2.0 * P]),
        time_labels=y,
        psi=psi,
        name="scenario2" if n_clusters == 2 else f"scenario2-K{n_clusters}",
    )


PRESETS = {
    "scenario1": _scenario1,
    "scenario1-low": lambda psi=1.4: replace(_scenario1(psi), name="scenario1-low"),
    "overfit": _overfit,
    "scenario2": _scenario2,
    "scenario2-K3": lambda psi=2.6: _scenario2(psi, 3),
}


def scenario_presets(name: str, psi: float | None = None) -> SimScenario:
    """Named experimental set-ups; ``psi`` overrides the default contrast."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
    return factory() if psi is None else factory(psi)


def scenario_from_dict(entries: dict) -> SimScenario:
    """Build a scenario from a mapping, optionally layered over a ``"preset"``.

    Recognised keys: preset, psi, n_nodes, n_intervals, interval_length,
    breakpoints, node_weights, rates, time_labels (0-based), time_weights,
    unit_length, name.
    """
    entries = dict(entries)
    unknown = set(entries) - {
        "preset", "psi", "n_nodes", "n_intervals", "interval_length", "breakpoints",
        "node_weights", "rates", "time_labels", "time_weights", "unit_length", "name",
    }
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    if "preset" in entries:
        base = scenario_presets(entries.pop("preset"), entries.pop("psi", None))
    else:
        for key in ("n_nodes", "node_weights", "rates"):
            if key not in entries:
                raise ValueError(f"scenario without a preset needs {key!r}")
        base = None
    fields = {}
    if "breakpoints" in entries:
        fields["grid"] = TimeGrid(np.asarray(entries.pop("breakpoints"), dtype=float))
    elif "n_intervals" in entries or "interval_length" in entries:
        U = entries.pop("n_intervals", base.grid.n_intervals if base else None)
        length = entries.pop("interval_length", base.grid.lengths[0] if base else 1.0)
        fields["grid"] = TimeGrid.uniform(int(U), float(length))
    for key in ("n_nodes", "node_weights", "rates", "time_labels", "time_weights",
                "unit_length", "psi", "name"):
        if key in entries:
            fields[key] = entries.pop(key)
    if "time_weights" in fields and "time_labels" not in fields:
        fields["time_labels"] = None
    if base is None:
        fields.setdefault("grid", TimeGrid.uniform(1))
        return SimScenario(**fields)
    if "grid" in fields and "time_labels" not in fields and base.time_labels is not None:
        if fields["grid"].n_intervals != base.grid.n_intervals:
            raise ValueError("changing the number of intervals requires new time_labels")
    return replace(base, **fields)


def load_scenario(path) -> SimScenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


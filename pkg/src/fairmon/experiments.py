"""Desk-scale experiments: the hypercube study and the lending study.

Both experiments are deterministic functions of their configuration and seed.
Monitors are fed in blocks between log-spaced checkpoints and only queried at
the checkpoints, which yields exactly the outputs per-event feeding would
give at those indices.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

from .bse import parse_spec
from .bse.spec import SpecDocument
from .monitor import Monitor
from .pomc import (
    LendingParams, derive_seed, exact_atom_semantics, exact_expr_semantics, hypercube_model,
    lending_model, sample_path,
)
from .records import Record, monitor_record

HYPERCUBE_ROOTS = {
    "psi_dp": 'P("a" | "a") - P("b" | "b")',
    "psi_tdp": 'P("a a") - P("b b")',
}
LENDING_ROOTS = {
    "phi_dp": 'P("Y" | "A") - P("Y" | "B")',
    "phi_tdp": 'P("A Y") - P("B Y")',
}
HYPERCUBE_TAUS = (204.94, 7.45)
LENDING_TAU = 170589.78


def log_checkpoints(length: int, growth: float = 1.3, start: int = 1) -> list[int]:
    """Roughly geometric checkpoints from ``start`` to ``length`` inclusive."""
    if length < 1:
        raise ValueError("length must be at least 1")
    if growth <= 1:
        raise ValueError("growth must exceed 1")
    out = []
    x = float(start)
    while x < length:
        t = int(round(x))
        if not out or t > out[-1]:
            out.append(t)
        x *= growth
    if not out or out[-1] != length:
        out.append(length)
    return out


def make_spec(alphabet: Sequence[str], expr: str, delta: float, tau_mix: float) -> SpecDocument:
    text = f"alphabet: {' '.join(alphabet)}\ndelta: {delta!r}\ntaumix: {tau_mix!r}\nquant: {expr}\n"
    return parse_spec(text)


def run_monitors(path: Sequence[str], monitors: dict, checkpoints: Sequence[int],
                 run_id=None) -> list[Record]:
    """Feed ``path`` to every monitor and record outputs at the checkpoints."""
    records = []
    prev = 0
    for t in checkpoints:
        block = path[prev:t]
        for mon in monitors.values():
            mon.feed_many(block)
        prev = t
        for name, mon in monitors.items():
            records.append(monitor_record(mon, name, run_id))
    return records


@dataclass
class EnvelopeRow:
    root: str
    tau_mix: float
    t: int
    point_min: float | None
    point_max: float | None
    lo_min: float | None
    hi_max: float | None
    oracle: float
    covered: int
    runs: int


@dataclass
class HypercubeResult:
    records: dict[str, list[Record]]
    summary: list[EnvelopeRow]
    oracle: dict[str, float]
    coverage: dict[tuple[str, float], int]
    runs: int
    config: dict = field(default_factory=dict)


def _envelope(records: list[Record], oracle: float, root: str, tau: float, runs: int):
    by_t: dict[int, list[Record]] = {}
    for rec in records:
        by_t.setdefault(rec.t, []).append(rec)
    rows = []
    for t in sorted(by_t):
        rs = [r for r in by_t[t] if r.lo is not None]
        pts = [r.point for r in rs if r.point is not None]
        rows.append(EnvelopeRow(
            root, tau, t,
            min(pts) if pts else None, max(pts) if pts else None,
            min(r.lo for r in rs) if rs else None, max(r.hi for r in rs) if rs else None,
            oracle, sum(1 for r in rs if r.lo <= oracle <= r.hi), runs,
        ))
    return rows


def run_hypercube(runs: int = 100, length: int = 100_000, delta: float = 0.05,
                  taus: Sequence[float] = HYPERCUBE_TAUS, seed: int = 0, dim: int = 3,
                  growth: float = 1.3) -> HypercubeResult:
    """Monitor both parity properties on independent stationary runs of the cube walk."""
    model = hypercube_model(dim)
    taus = tuple(float(x) for x in taus)
    docs = {name: make_spec(model.alphabet, expr, delta, taus[0])
            for name, expr in HYPERCUBE_ROOTS.items()}
    oracle = {name: exact_expr_semantics(model, doc.root) for name, doc in docs.items()}
    checkpoints = log_checkpoints(length, growth)
    records: dict[str, list[Record]] = {name: [] for name in docs}
    for run in range(runs):
        path = sample_path(model, length, derive_seed(seed, run))
        monitors = {(name, tau): Monitor(doc, tau_mix=tau)
                    for name, doc in docs.items() for tau in taus}
        for rec in run_monitors(path, monitors, checkpoints, run):
            records[rec.root[0]].append(
                Record(rec.t, rec.root[0], rec.point, rec.lo, rec.hi, rec.epsilon,
                       rec.verdict, rec.tau_mix, rec.run_id))
    summary = []
    coverage = {}
    for name, recs in records.items():
        for tau in taus:
            rows = _envelope([r for r in recs if r.tau_mix == tau], oracle[name], name, tau, runs)
            summary.extend(rows)
            coverage[(name, tau)] = rows[-1].covered
    config = {"runs": runs, "length": length, "delta": delta, "taus": list(taus),
              "seed": seed, "dim": dim, "growth": growth}
    return HypercubeResult(records, summary, oracle, coverage, runs, config)


@dataclass
class ProjectionRow:
    root: str
    t: int
    lo: float
    hi: float
    half_width: float
    tau_mix: float


@dataclass
class LendingResult:
    records: dict[str, list[Record]]
    projection: list[ProjectionRow]
    oracle: dict[str, float]
    required_length: dict[str, int]
    mean_update_seconds: float
    config: dict = field(default_factory=dict)


def required_lengths(params: LendingParams | None = None, delta: float = 0.05,
                     tau_mix: float = LENDING_TAU, half_width: float = 0.1) -> dict[str, int]:
    """Smallest trace length at which each lending property reaches ``half_width``.

    Atom centers are the exact atom values and intervals are not clipped to
    the atom ranges, so the answer depends only on the concentration bound.
    """
    model = lending_model(params)
    out = {}
    for name, expr in LENDING_ROOTS.items():
        mon = Monitor(make_spec(model.alphabet, expr, delta, tau_mix))
        centers = {fn: exact_atom_semantics(model, fn) for fn in mon.atoms}
        out[name] = mon.required_length(half_width, centers=centers, clamp=False)
    return out


def run_lending(params: LendingParams | None = None, delta: float = 0.05,
                tau_mix: float = LENDING_TAU, length: int = 1_000_000, seed: int = 0,
                growth: float = 1.3, horizon: int = 10 ** 13,
                target_half_width: float = 0.1) -> LendingResult:
    """Monitor the lending properties on one run, then project the interval beyond it."""
    params = LendingParams() if params is None else params
    model = lending_model(params)
    docs = {name: make_spec(model.alphabet, expr, delta, tau_mix)
            for name, expr in LENDING_ROOTS.items()}
    oracle = {name: exact_expr_semantics(model, doc.root) for name, doc in docs.items()}
    path = sample_path(model, length, derive_seed(seed, 0))
    monitors = {name: Monitor(doc) for name, doc in docs.items()}
    checkpoints = log_checkpoints(length, growth)
    start = time.perf_counter()
    recs = run_monitors(path, monitors, checkpoints, 0)
    elapsed = time.perf_counter() - start
    records = {name: [r for r in recs if r.root == name] for name in docs}
    projection = []
    points = [t for t in log_checkpoints(horizon, growth, start=length) if t > length]
    for name, mon in monitors.items():
        for t in points:
            iv = mon.projected_interval(t, clamp=True)
            projection.append(ProjectionRow(name, t, iv.lo, iv.hi, iv.half_width, tau_mix))
    config = {"length": length, "delta": delta, "tau_mix": tau_mix, "seed": seed,
              "growth": growth, "horizon": horizon, "target_half_width": target_half_width,
              **params.as_dict()}
    return LendingResult(records, projection, oracle,
                         required_lengths(params, delta, tau_mix, target_half_width),
                         elapsed / length, config)

"""Seeded path sampling."""

from __future__ import annotations

from bisect import bisect_right
from itertools import accumulate

import numpy as np

from .model import PomcModel


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer or a SeedSequence, got {seed!r}")
    return np.random.default_rng(int(seed))


def derive_seed(master: int, run: int) -> np.random.SeedSequence:
    """Independent stream for run ``run`` of an experiment seeded with ``master``."""
    return np.random.SeedSequence([int(master), int(run)])


def _cumulative(probs) -> list[float]:
    cum = list(accumulate(probs))
    cum[-1] = float("inf")
    return cum


def sample_states(model: PomcModel, length: int, seed) -> list[int]:
    if length < 1:
        raise ValueError("length must be at least 1")
    rng = make_rng(seed)
    m = model.transitions
    succ = []
    cums = []
    for i in range(model.state_count):
        lo, hi = m.indptr[i], m.indptr[i + 1]
        succ.append(m.indices[lo:hi].tolist())
        cums.append(_cumulative(m.data[lo:hi].tolist()))
    start = model.start_distribution()
    start_states = np.flatnonzero(start > 0)
    u = rng.random(length).tolist()
    q = int(start_states[bisect_right(_cumulative(start[start_states].tolist()), u[0])])
    path = [q]
    append = path.append
    for x in u[1:]:
        q = succ[q][bisect_right(cums[q], x)]
        append(q)
    return path


def sample_path(model: PomcModel, length: int, seed) -> list[str]:
    """Observation sequence of a ``length``-step run; reproducible from ``seed``."""
    labels = model.labels
    return [labels[q] for q in sample_states(model, length, seed)]

"""The two reference models: a lazy hypercube walk and a lending pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .model import ModelError, PomcModel

MAX_HYPERCUBE_DIM = 20


def hypercube_model(dim: int = 3) -> PomcModel:
    """Lazy random walk on the vertices of the ``dim``-cube.

    Stays put with probability 1/2 and moves to each neighbour with
    probability ``1/(2 dim)``. Vertex ``v`` is read as a bit string with the
    most significant bit first; it emits ``a`` when that bit is 0, else ``b``.
    """
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ModelError("dimension must be a positive integer")
    if dim > MAX_HYPERCUBE_DIM:
        raise ModelError(f"dimension {dim} exceeds the limit of {MAX_HYPERCUBE_DIM}")
    k = 1 << dim
    step = 1.0 / (2 * dim)
    triples = []
    for v in range(k):
        triples.append((v, v, 0.5))
        for bit in range(dim):
            triples.append((v, v ^ (1 << bit), step))
    top = 1 << (dim - 1)
    labels = ["b" if v & top else "a" for v in range(k)]
    return PomcModel.from_triples(k, triples, labels, ("a", "b"))


def hypercube_tau_mix(dim: int) -> float:
    """Analytic mixing-time value ``dim * (ln dim + ln 4)`` for the lazy cube walk."""
    return dim * (math.log(dim) + math.log(4))


GROUPS = ("A", "B")


@dataclass(frozen=True)
class LendingParams:
    """Probabilities of the lending pipeline.

    An applicant arrives (``S`` loops with probability ``s_loop``), belongs to
    group A or B, carries one of two credit scores, and is granted (``Y``) or
    refused (``N``) a loan before the next applicant.
    """

    s_loop: float = 0.01
    group_a: float = 0.85
    score_a: tuple[float, float] = (0.3, 0.7)
    score_b: tuple[float, float] = (0.6, 0.4)
    grant_a: tuple[float, float] = (0.5, 0.9)
    grant_b: tuple[float, float] = (0.3, 0.8)

    def __post_init__(self):
        for name in ("s_loop", "group_a"):
            p = getattr(self, name)
            if not 0 <= p <= 1:
                raise ModelError(f"{name} must lie in [0, 1], got {p}")
        if not self.s_loop < 1:
            raise ModelError("s_loop must be below 1")
        for name in ("score_a", "score_b", "grant_a", "grant_b"):
            pair = tuple(float(x) for x in getattr(self, name))
            object.__setattr__(self, name, pair)
            if len(pair) != 2 or any(not 0 <= p <= 1 for p in pair):
                raise ModelError(f"{name} must be two probabilities")
        for name in ("score_a", "score_b"):
            if abs(sum(getattr(self, name)) - 1.0) > 1e-12:
                raise ModelError(f"{name} must sum to 1")

    @classmethod
    def from_mapping(cls, values: dict) -> "LendingParams":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ModelError(f"unknown lending parameter {key!r}")
            if isinstance(raw, str):
                parts = [float(x) for x in raw.replace(",", " ").split()]
                raw = parts[0] if len(parts) == 1 else tuple(parts)
            kwargs[key] = raw
        return cls(**kwargs)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


LENDING_STATES = ("S", "A1", "A2", "B1", "B2", "Y", "N")


def lending_model(params: LendingParams | None = None) -> PomcModel:
    """States ``S, A1, A2, B1, B2, Y, N``; group states emit their group letter."""
    p = LendingParams() if params is None else params
    index = {name: i for i, name in enumerate(LENDING_STATES)}
    group_prob = {"A": p.group_a, "B": 1.0 - p.group_a}
    scores = {"A": p.score_a, "B": p.score_b}
    grants = {"A": p.grant_a, "B": p.grant_b}
    triples = [(index["S"], index["S"], p.s_loop)]
    for g in GROUPS:
        for level in (1, 2):
            state = index[f"{g}{level}"]
            triples.append((index["S"], state, (1 - p.s_loop) * group_prob[g] * scores[g][level - 1]))
            grant = grants[g][level - 1]
            triples.append((state, index["Y"], grant))
            triples.append((state, index["N"], 1.0 - grant))
    triples.append((index["Y"], index["S"], 1.0))
    triples.append((index["N"], index["S"], 1.0))
    labels = [name[0] for name in LENDING_STATES]
    return PomcModel.from_triples(len(LENDING_STATES), triples, labels, ("S", "A", "B", "Y", "N"))

"""Partially observed Markov chains: representation and structural diagnostics."""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

ROW_TOLERANCE = 1e-12
DENSE_LIMIT = 1000
POWER_TOLERANCE = 1e-12
POWER_MAX_ITERATIONS = 1_000_000


class ModelError(ValueError):
    pass


class ModelWarning(UserWarning):
    """The model violates an assumption the monitor guarantees rely on."""


@dataclass(frozen=True, eq=False)
class PomcModel:
    """Finite Markov chain with a label (observation) per state.

    ``transitions`` is row-stochastic: entry ``(i, j)`` is the probability of
    moving from state ``i`` to state ``j``, so a distribution evolves as
    ``p -> p @ M``. Without ``init`` the chain starts in its stationary
    distribution.
    """

    transitions: sparse.csr_matrix
    labels: tuple[str, ...]
    alphabet: tuple[str, ...]
    init: np.ndarray | None = None

    def __post_init__(self):
        m = sparse.csr_matrix(self.transitions, dtype=float)
        k = m.shape[0]
        if k == 0 or m.shape != (k, k):
            raise ModelError(f"transition matrix must be square and non-empty, got {m.shape}")
        m.sum_duplicates()
        if not np.isfinite(m.data).all():
            raise ModelError("transition probabilities must be finite")
        m.eliminate_zeros()
        object.__setattr__(self, "transitions", m)
        if m.nnz and (m.data.min() < 0 or m.data.max() > 1):
            raise ModelError("transition probabilities must lie in [0, 1]")
        rows = np.asarray(m.sum(axis=1)).ravel()
        bad = np.flatnonzero(np.abs(rows - 1.0) > ROW_TOLERANCE)
        if bad.size:
            i = int(bad[0])
            raise ModelError(f"row {i} sums to {rows[i]!r}, not 1")
        labels = tuple(self.labels)
        alphabet = tuple(self.alphabet)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "alphabet", alphabet)
        if len(set(alphabet)) != len(alphabet) or not alphabet:
            raise ModelError("alphabet must be non-empty and without duplicates")
        if len(labels) != k:
            raise ModelError(f"expected {k} labels, got {len(labels)}")
        known = set(alphabet)
        for i, tok in enumerate(labels):
            if tok not in known:
                raise ModelError(f"state {i} is labelled {tok!r}, which is not in the alphabet")
        if self.init is not None:
            p = np.asarray(self.init, dtype=float)
            if p.shape != (k,) or (p < 0).any() or abs(p.sum() - 1.0) > ROW_TOLERANCE:
                raise ModelError("initial distribution must be a probability vector over the states")
            p.setflags(write=False)
            object.__setattr__(self, "init", p)

    @classmethod
    def from_triples(cls, state_count: int, triples: Iterable[tuple[int, int, float]],
                     labels: Sequence[str], alphabet: Sequence[str] | None = None,
                     init: Sequence[float] | None = None) -> "PomcModel":
        rows, cols, vals = [], [], []
        for i, j, p in triples:
            if not (0 <= i < state_count and 0 <= j < state_count):
                raise ModelError(f"transition ({i}, {j}) refers to a missing state")
            p = float(p)
            if not 0.0 <= p <= 1.0:
                raise ModelError(f"transition ({i}, {j}) has probability {p!r} outside [0, 1]")
            rows.append(i)
            cols.append(j)
            vals.append(p)
        m = sparse.csr_matrix((vals, (rows, cols)), shape=(state_count, state_count))
        if alphabet is None:
            alphabet = tuple(dict.fromkeys(labels))
        return cls(m, tuple(labels), tuple(alphabet),
                   None if init is None else np.asarray(init, dtype=float))

    @property
    def state_count(self) -> int:
        return self.transitions.shape[0]

    def triples(self) -> list[tuple[int, int, float]]:
        coo = self.transitions.tocoo()
        return sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def dense(self) -> np.ndarray:
        return self.transitions.toarray()

    def label_mask(self, token: str) -> np.ndarray:
        return np.array([lab == token for lab in self.labels], dtype=float)

    @cached_property
    def stationary(self) -> np.ndarray:
        return stationary_distribution(self)

    def start_distribution(self) -> np.ndarray:
        return self.stationary if self.init is None else self.init


def stationary_distribution(model: PomcModel) -> np.ndarray:
    """Solve ``pi = pi M`` with ``sum(pi) = 1``."""
    k = model.state_count
    if k <= DENSE_LIMIT:
        a = model.dense().T - np.eye(k)
        a[-1, :] = 1.0
        b = np.zeros(k)
        b[-1] = 1.0
        try:
            pi = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            pi = np.linalg.lstsq(a, b, rcond=None)[0]
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
        # One power step irons out solver round-off.
        pi = pi @ model.transitions
        return np.asarray(pi).ravel() / pi.sum()
    mt = model.transitions.T.tocsr()
    pi = np.full(k, 1.0 / k)
    for _ in range(POWER_MAX_ITERATIONS):
        nxt = 0.5 * (pi + mt @ pi)
        if np.abs(nxt - pi).sum() < POWER_TOLERANCE:
            return nxt / nxt.sum()
        pi = nxt
    raise ModelError("power iteration did not converge")


def stationary_residual(model: PomcModel, pi: np.ndarray) -> float:
    return float(np.abs(pi @ model.transitions - pi).sum())


def _period(model: PomcModel, members: np.ndarray) -> int:
    m = model.transitions
    inside = np.zeros(model.state_count, dtype=bool)
    inside[members] = True
    root = int(members[0])
    level = {root: 0}
    queue = deque([root])
    g = 0
    while queue:
        u = queue.popleft()
        for v in m.indices[m.indptr[u]:m.indptr[u + 1]]:
            v = int(v)
            if not inside[v]:
                continue
            if v in level:
                g = math.gcd(g, level[u] + 1 - level[v])
            else:
                level[v] = level[u] + 1
                queue.append(v)
    return abs(g)


@dataclass(frozen=True)
class ModelDiagnostics:
    irreducible: bool
    aperiodic: bool
    period: int
    stationary: np.ndarray
    spectral_gap: float | None
    suggested_tau_mix: float | None

    @property
    def ergodic(self) -> bool:
        return self.irreducible and self.aperiodic


def validate(model: PomcModel, warn: bool = True) -> ModelDiagnostics:
    """Check irreducibility and aperiodicity and compute the stationary distribution.

    Violations are reported (and warned about), not rejected: the chain can
    still be sampled, but monitor guarantees do not apply.
    """
    count, comp = csgraph.connected_components(model.transitions, directed=True,
                                               connection="strong")
    irreducible = count == 1
    members = np.flatnonzero(comp == comp[0])
    period = _period(model, members)
    aperiodic = period == 1
    pi = model.stationary
    gap = None
    tau = None
    if model.state_count <= DENSE_LIMIT:
        ev = np.sort(np.abs(np.linalg.eigvals(model.dense())))[::-1]
        gap = float(1.0 - ev[1]) if ev.size > 1 else 1.0
        if irreducible and aperiodic:
            try:
                tau = tau_mix_bound_reversible(model)
            except ModelError:
                tau = None
    if warn and not irreducible:
        warnings.warn("model is reducible; monitor guarantees do not hold", ModelWarning, stacklevel=2)
    if warn and not aperiodic:
        warnings.warn(f"model is periodic (period {period}); monitor guarantees do not hold",
                      ModelWarning, stacklevel=2)
    return ModelDiagnostics(irreducible, aperiodic, period, pi, gap, tau)


def is_reversible(model: PomcModel, pi: np.ndarray | None = None, atol: float = 1e-12) -> bool:
    pi = model.stationary if pi is None else pi
    flow = sparse.diags(pi) @ model.transitions
    diff = flow - flow.T
    return not diff.nnz or float(np.abs(diff.data).max()) <= atol


def tau_mix_bound_reversible(model: PomcModel, eps_mix: float = 0.25) -> float:
    """Spectral upper bound ``ln(1/(eps_mix * pi_min)) / (1 - lambda_star)`` on the mixing time.

    Only valid for chains reversible with respect to their stationary
    distribution; other chains are refused. A single-state chain gets 1.0.
    """
    if not 0 < eps_mix < 1:
        raise ValueError("eps_mix must lie in (0, 1)")
    k = model.state_count
    if k == 1:
        return 1.0
    if k > DENSE_LIMIT:
        raise ModelError("spectral bound needs a dense eigen-decomposition; model too large")
    pi = model.stationary
    if not is_reversible(model, pi):
        raise ModelError("model is not reversible; supply a mixing-time bound explicitly")
    root = np.sqrt(pi)
    sym = root[:, None] * model.dense() / root[None, :]
    sym = 0.5 * (sym + sym.T)
    ev = np.sort(np.linalg.eigvalsh(sym))
    star = max(abs(ev[0]), abs(ev[-2]))
    if star >= 1.0 - 1e-15:
        raise ModelError("chain is not ergodic; the spectral bound is infinite")
    return float(math.log(1.0 / (eps_mix * pi.min())) / (1.0 - star))

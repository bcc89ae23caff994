"""Register monitors for quantitative and qualitative specifications.

A :class:`Monitor` mirrors the desugared expression tree. Leaves are atomic
monitors, each backed by one :class:`~fairmon.estimation.EstimatorState`;
an atom occurring several times in the tree is estimated once and receives
one share of the failure probability. Inner nodes combine child intervals by
interval arithmetic (quantitative) or map them to three-valued verdicts
(qualitative).
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from typing import Callable, Sequence

from .bse.ast import (
    Add, And, Atom, AtomicFunction, Const, Geq0, Inv, Mul, Not, TrueExpr, collect_atoms,
)
from .bse.spec import SpecDocument, format_spec, parse_spec
from .estimation import (
    BOUND_PRINTED, BOUND_PROOF, BOUNDS, EstimatorState, Interval, clamp_to_range,
)

SNAPSHOT_MAGIC = b"FAIRMON-SNAPSHOT"
SNAPSHOT_VERSION = 1


class Verdict(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    def __invert__(self) -> "Verdict":
        if self is Verdict.UNKNOWN:
            return Verdict.UNKNOWN
        return Verdict.FALSE if self is Verdict.TRUE else Verdict.TRUE

    def __and__(self, other: "Verdict") -> "Verdict":
        # Not Kleene: UNKNOWN absorbs FALSE as well.
        if self is Verdict.UNKNOWN or other is Verdict.UNKNOWN:
            return Verdict.UNKNOWN
        if self is Verdict.TRUE and other is Verdict.TRUE:
            return Verdict.TRUE
        return Verdict.FALSE

    def __or__(self, other: "Verdict") -> "Verdict":
        return ~(~self & ~other)


class _Inconclusive:
    """Output during warm-up, before every atom has seen a full window."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INCONCLUSIVE"

    def __reduce__(self):
        return (_Inconclusive, ())


INCONCLUSIVE = _Inconclusive()


class SnapshotError(ValueError):
    pass


def equal_split(atoms: Sequence[AtomicFunction], delta: float) -> list[float]:
    """Give every distinct atom the same share of ``delta``."""
    if not atoms:
        return []
    return [delta / len(atoms)] * len(atoms)


# ---------------------------------------------------------------------------
# Nodes


class AtomicMonitor:
    """Confidence interval for one atom: point estimate plus PAC half-width, clipped to the range."""

    __slots__ = ("est", "delta", "tau_mix", "bound", "lower", "upper", "anomaly",
                 "_coef", "_t", "_iv")

    def __init__(self, est: EstimatorState, delta: float, tau_mix: float, bound: str):
        if bound not in BOUNDS:
            raise ValueError(f"unknown bound {bound!r}")
        self.est = est
        self.delta = delta
        self.tau_mix = tau_mix
        self.bound = bound
        self.lower = est.fn.lower
        self.upper = est.fn.upper
        self.anomaly = False
        self._coef = est.fn.width * math.sqrt(math.log(2.0 / delta) * 9.0 * tau_mix / 2.0)
        self._t = -1
        self._iv = None

    def epsilon_at(self, t: int) -> float:
        n = self.est.n
        k = t - n + 1
        if k <= 0:
            raise ValueError(f"need t >= n, got t={t}, n={n}")
        m = k if k < n else n
        if self.bound == BOUND_PROOF:
            m = m * m
        return self._coef * math.sqrt(t * m) / k

    def epsilon(self) -> float | None:
        t = self.est.t
        return self.epsilon_at(t) if t >= self.est.n else None

    def point(self) -> float | None:
        return self.est.estimate

    def interval(self) -> Interval:
        est = self.est
        if self._t == est.t:
            return self._iv
        y = est.estimate
        if y is None:
            raise RuntimeError("atom monitor queried during warm-up")
        eps = self.epsilon_at(est.t)
        iv, self.anomaly = clamp_to_range(Interval(y - eps, y + eps), self.lower, self.upper)
        self._t, self._iv = est.t, iv
        return iv


class ConstNode:
    __slots__ = ("value", "_iv")

    def __init__(self, value: float):
        self.value = value
        self._iv = Interval(value, value)

    def interval(self) -> Interval:
        return self._iv

    def point(self) -> float:
        return self.value


class AddNode:
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left, self.right = left, right

    def interval(self) -> Interval:
        return self.left.interval() + self.right.interval()

    def point(self) -> float | None:
        a, b = self.left.point(), self.right.point()
        return None if a is None or b is None else a + b


class MulNode:
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left, self.right = left, right

    def interval(self) -> Interval:
        return self.left.interval() * self.right.interval()

    def point(self) -> float | None:
        a, b = self.left.point(), self.right.point()
        return None if a is None or b is None else a * b


class InvNode:
    __slots__ = ("child",)

    def __init__(self, child):
        self.child = child

    def interval(self) -> Interval:
        return self.child.interval().inverse()

    def point(self) -> float | None:
        a = self.child.point()
        return None if a is None or a == 0 else 1.0 / a


class TrueNode:
    __slots__ = ()

    def verdict(self) -> Verdict:
        return Verdict.TRUE


class Geq0Node:
    __slots__ = ("child",)

    def __init__(self, child):
        self.child = child

    def verdict(self) -> Verdict:
        iv = self.child.interval()
        if iv.lo >= 0:
            return Verdict.TRUE
        if iv.hi <= 0:
            return Verdict.FALSE
        return Verdict.UNKNOWN


class NotNode:
    __slots__ = ("child",)

    def __init__(self, child):
        self.child = child

    def verdict(self) -> Verdict:
        return ~self.child.verdict()


class AndNode:
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left, self.right = left, right

    def verdict(self) -> Verdict:
        return self.left.verdict() & self.right.verdict()


def _project(node, atom_iv: dict) -> Interval:
    if isinstance(node, AtomicMonitor):
        return atom_iv[node]
    if isinstance(node, ConstNode):
        return node.interval()
    if isinstance(node, AddNode):
        return _project(node.left, atom_iv) + _project(node.right, atom_iv)
    if isinstance(node, MulNode):
        return _project(node.left, atom_iv) * _project(node.right, atom_iv)
    if isinstance(node, InvNode):
        return _project(node.child, atom_iv).inverse()
    raise TypeError(f"not a quantitative node: {node!r}")


# ---------------------------------------------------------------------------
# Monitor


class Monitor:
    """Streaming monitor for a specification document.

    ``next(sigma)`` consumes one observation and returns the current output:
    an :class:`Interval` for quantitative roots, a :class:`Verdict` for
    qualitative ones, or :data:`INCONCLUSIVE` while some atom has seen fewer
    observations than its arity.
    """

    def __init__(self, doc: SpecDocument, delta: float | None = None,
                 tau_mix: float | None = None, bound: str = BOUND_PRINTED,
                 allocation: Callable[[Sequence[AtomicFunction], float], Sequence[float]] = equal_split,
                 compensated: bool = False):
        if delta is not None or tau_mix is not None:
            doc = doc.with_params(delta, tau_mix)
        if bound not in BOUNDS:
            raise ValueError(f"unknown bound {bound!r}")
        self.doc = doc
        self.kind = doc.kind
        self.bound = bound
        self.compensated = compensated
        self.atoms = collect_atoms(doc.root)
        deltas = [float(d) for d in allocation(self.atoms, doc.delta)]
        if len(deltas) != len(self.atoms) or any(not 0 < d < 1 for d in deltas):
            raise ValueError("allocation must give every atom a share in (0, 1)")
        if self.atoms and not math.isclose(sum(deltas), doc.delta, rel_tol=1e-9):
            raise ValueError("allocated failure probabilities must sum to delta")
        self.deltas = deltas
        self.estimators = [EstimatorState(fn, compensated) for fn in self.atoms]
        self.atom_monitors = {
            fn: AtomicMonitor(est, d, doc.tau_mix, bound)
            for fn, est, d in zip(self.atoms, self.estimators, deltas)
        }
        self.root = self._build(doc.root)
        self.warmup = max((fn.arity for fn in self.atoms), default=0)
        self.t = 0
        self._alphabet = frozenset(doc.alphabet)

    def _build(self, expr):
        if isinstance(expr, Atom):
            return self.atom_monitors[expr.fn]
        if isinstance(expr, Const):
            return ConstNode(expr.value)
        if isinstance(expr, Add):
            return AddNode(self._build(expr.left), self._build(expr.right))
        if isinstance(expr, Mul):
            return MulNode(self._build(expr.left), self._build(expr.right))
        if isinstance(expr, Inv):
            return InvNode(self._build(expr.child))
        if isinstance(expr, TrueExpr):
            return TrueNode()
        if isinstance(expr, Geq0):
            return Geq0Node(self._build(expr.child))
        if isinstance(expr, Not):
            return NotNode(self._build(expr.child))
        if isinstance(expr, And):
            return AndNode(self._build(expr.left), self._build(expr.right))
        raise TypeError(f"not a core expression: {expr!r}")

    @property
    def delta(self) -> float:
        return self.doc.delta

    @property
    def tau_mix(self) -> float:
        return self.doc.tau_mix

    @property
    def ready(self) -> bool:
        return self.t >= self.warmup

    def feed(self, sigma: str) -> None:
        """Consume one observation without computing the output."""
        if sigma not in self._alphabet:
            raise ValueError(f"observation {sigma!r} is not in the alphabet")
        for est in self.estimators:
            est.update(sigma)
        self.t += 1

    def feed_many(self, tokens: Sequence[str]) -> None:
        """Consume a block of observations; same state as feeding them one by one."""
        alphabet = self._alphabet
        for s in tokens:
            if s not in alphabet:
                raise ValueError(f"observation {s!r} is not in the alphabet")
        for est in self.estimators:
            est.extend(tokens)
        self.t += len(tokens)

    def output(self):
        if self.t < self.warmup:
            return INCONCLUSIVE
        if self.kind == "quant":
            return self.root.interval()
        return self.root.verdict()

    def next(self, sigma: str):
        self.feed(sigma)
        return self.output()

    def point(self) -> float | None:
        """Point estimate of the quantitative root (or of a comparison's operand)."""
        node = self._quant_root()
        if node is None or self.t < self.warmup:
            return None
        return node.point()

    def interval(self) -> Interval | None:
        node = self._quant_root()
        if node is None or self.t < self.warmup:
            return None
        return node.interval()

    def _quant_root(self):
        if self.kind == "quant":
            return self.root
        if isinstance(self.root, Geq0Node):
            return self.root.child
        return None

    def epsilon(self) -> float | None:
        """Largest atomic half-width (before clipping); ``0.0`` without atoms."""
        if self.t < self.warmup:
            return None
        return max((am.epsilon() for am in self.atom_monitors.values()), default=0.0)

    def projected_interval(self, t: int, centers: dict | None = None,
                           clamp: bool = True) -> Interval:
        """Interval the monitor would report after ``t`` observations.

        Atom point estimates are frozen at ``centers`` (default: the current
        estimates) and only the half-widths move with ``t``.
        """
        if self.kind != "quant":
            raise ValueError("projection needs a quantitative root")
        atom_iv = {}
        for fn, am in self.atom_monitors.items():
            c = centers[fn] if centers is not None else am.point()
            if c is None:
                raise ValueError("no point estimate yet; pass centers explicitly")
            eps = am.epsilon_at(t)
            iv = Interval(c - eps, c + eps)
            if clamp:
                iv = clamp_to_range(iv, am.lower, am.upper)[0]
            atom_iv[am] = iv
        return _project(self.root, atom_iv)

    def required_length(self, half_width: float, centers: dict | None = None,
                        clamp: bool = False, limit: int = 10 ** 18) -> int:
        """Smallest ``t`` whose projected half-width is at most ``half_width``."""

        def width(t):
            return self.projected_interval(t, centers, clamp).half_width

        lo = max(2 * self.warmup - 1, 1)
        if width(lo) <= half_width:
            return lo
        hi = lo
        while width(hi) > half_width:
            lo = hi
            hi *= 2
            if hi > limit:
                raise ValueError("half-width not reached below the search limit")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if width(mid) <= half_width:
                hi = mid
            else:
                lo = mid
        return hi

    # -- persistence -------------------------------------------------------

    def snapshot(self) -> bytes:
        body = {
            "version": SNAPSHOT_VERSION,
            "spec": format_spec(self.doc),
            "bound": self.bound,
            "compensated": self.compensated,
            "deltas": self.deltas,
            "t": self.t,
            "estimators": [
                {"t": e.t, "total": e.total, "comp": e.comp, "window": list(e.window)}
                for e in self.estimators
            ],
        }
        data = json.dumps(body, sort_keys=True).encode()
        digest = hashlib.sha256(data).hexdigest().encode()
        return SNAPSHOT_MAGIC + b"\n" + digest + b"\n" + data

    @classmethod
    def restore(cls, payload: bytes) -> "Monitor":
        try:
            magic, digest, data = payload.split(b"\n", 2)
        except ValueError:
            raise SnapshotError("corrupt snapshot payload") from None
        if magic != SNAPSHOT_MAGIC:
            raise SnapshotError("not a monitor snapshot")
        if hashlib.sha256(data).hexdigest().encode() != digest:
            raise SnapshotError("corrupt snapshot payload")
        try:
            body = json.loads(data)
        except ValueError:
            raise SnapshotError("corrupt snapshot payload") from None
        if body.get("version") != SNAPSHOT_VERSION:
            raise SnapshotError(f"unsupported snapshot version {body.get('version')!r}")
        doc = parse_spec(body["spec"])
        deltas = body["deltas"]
        mon = cls(doc, bound=body["bound"], allocation=lambda atoms, d: deltas,
                  compensated=body["compensated"])
        if len(body["estimators"]) != len(mon.estimators):
            raise SnapshotError("snapshot does not match its specification")
        for est, state in zip(mon.estimators, body["estimators"]):
            est.t = state["t"]
            est.total = state["total"]
            est.comp = state["comp"]
            est.window = tuple(state["window"])
        mon.t = body["t"]
        return mon


def build_monitor(doc: SpecDocument, **kwargs) -> Monitor:
    return Monitor(doc, **kwargs)


def next_quant(monitor: Monitor, sigma: str):
    if monitor.kind != "quant":
        raise ValueError("not a quantitative monitor")
    return monitor.next(sigma)


def next_qual(monitor: Monitor, sigma: str):
    if monitor.kind != "qual":
        raise ValueError("not a qualitative monitor")
    return monitor.next(sigma)

"""Point estimates of atom semantics, PAC half-widths and interval arithmetic."""

from __future__ import annotations

import math
from typing import Sequence

from .bse.ast import AtomicFunction

INF = math.inf

BOUND_PRINTED = "printed"
BOUND_PROOF = "proof"
BOUNDS = (BOUND_PRINTED, BOUND_PROOF)


class Interval:
    """Closed real interval ``[lo, hi]``; infinite endpoints make it unbounded."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float):
        if not lo <= hi:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @property
    def unbounded(self) -> bool:
        return self.lo == -INF or self.hi == INF

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __mul__(self, other: "Interval") -> "Interval":
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        if not (self.unbounded or other.unbounded):
            p1, p2, p3, p4 = a * c, a * d, b * c, b * d
        else:
            p1, p2, p3, p4 = _xmul(a, c), _xmul(a, d), _xmul(b, c), _xmul(b, d)
        return Interval(min(p1, p2, p3, p4), max(p1, p2, p3, p4))

    def inverse(self) -> "Interval":
        """``1 / self``; unbounded when the interval contains zero."""
        lo, hi = self.lo, self.hi
        if lo > 0 or hi < 0:
            return Interval(1.0 / hi, 1.0 / lo)
        return UNBOUNDED

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def _xmul(x: float, y: float) -> float:
    # 0 * inf is 0 in interval arithmetic, not nan.
    if x == 0 or y == 0:
        return 0.0
    return x * y


UNBOUNDED = Interval(-INF, INF)


def interval_add(x: Interval, y: Interval) -> Interval:
    return x + y


def interval_mul(x: Interval, y: Interval) -> Interval:
    return x * y


def interval_inv(x: Interval) -> Interval:
    return x.inverse()


def clamp_to_range(x: Interval, a: float, b: float) -> tuple[Interval, bool]:
    """Intersect ``x`` with ``[a, b]``.

    Returns the clamped interval and an anomaly flag. When the intersection is
    empty the result is the endpoint of ``[a, b]`` nearest to ``x`` and the flag
    is set.
    """
    lo = x.lo if x.lo > a else a
    hi = x.hi if x.hi < b else b
    if lo <= hi:
        return Interval(lo, hi), False
    edge = b if x.lo > b else a
    return Interval(edge, edge), True


def pac_half_width(t: int, n: int, delta: float, tau_mix: float, range_width: float = 1.0,
                   bound: str = BOUND_PRINTED) -> float:
    """Half-width of the McDiarmid-style confidence interval after ``t`` observations.

    ``printed`` is the atomic-monitor formula scaled by the atom's range width::

        (b - a) * sqrt(ln(2/delta) * t * m * 9 * tau_mix / (2 (t-n+1)^2)),  m = min(t-n+1, n)

    ``proof`` squares ``m`` as the bounded-difference argument does.
    """
    if t < n:
        raise ValueError(f"need t >= n, got t={t}, n={n}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not tau_mix > 0:
        raise ValueError(f"tau_mix must be positive, got {tau_mix}")
    if not range_width > 0:
        raise ValueError(f"range width must be positive, got {range_width}")
    k = t - n + 1
    m = k if k < n else n
    if bound == BOUND_PROOF:
        m = m * m
    elif bound != BOUND_PRINTED:
        raise ValueError(f"unknown bound {bound!r}")
    return range_width * math.sqrt(math.log(2.0 / delta) * t * m * 9.0 * tau_mix / (2.0 * k * k))


class EstimatorState:
    """Running point estimate of one atom over a growing observation stream.

    Keeps the last ``n`` observations and the sum of the atom over all complete
    windows seen so far, so each update costs O(n). ``estimate`` is ``None``
    until ``n`` observations have arrived.
    """

    __slots__ = ("fn", "n", "t", "total", "comp", "window", "compensated", "_table", "_alphabet")

    def __init__(self, fn: AtomicFunction, compensated: bool = False):
        self.fn = fn
        self.n = fn.arity
        self.t = 0
        self.total = 0.0
        self.comp = 0.0
        self.window: tuple[str, ...] = ()
        self.compensated = compensated
        self._table = fn.table() if fn.enumerable() else None
        self._alphabet = frozenset(fn.alphabet)

    @property
    def ready(self) -> bool:
        return self.t >= self.n

    @property
    def count(self) -> int:
        """Number of complete windows evaluated so far."""
        return max(self.t - self.n + 1, 0)

    @property
    def estimate(self) -> float | None:
        k = self.t - self.n + 1
        if k <= 0:
            return None
        y = self.total / k
        # Rounding may push the mean a hair outside the range.
        return min(max(y, self.fn.lower), self.fn.upper)

    def _value(self, window):
        table = self._table
        return table[window] if table is not None else self.fn(window)

    def update(self, sigma: str) -> None:
        if sigma not in self._alphabet:
            raise ValueError(f"observation {sigma!r} is not in the alphabet")
        self.t += 1
        if self.t < self.n:
            self.window += (sigma,)
            return
        window = self.window[1:] + (sigma,) if len(self.window) == self.n else self.window + (sigma,)
        self.window = window
        x = self._value(window)
        if self.compensated:
            y = x - self.comp
            s = self.total + y
            self.comp = (s - self.total) - y
            self.total = s
        else:
            self.total += x

    def extend(self, tokens: Sequence[str]) -> None:
        """Feed many observations; equivalent to repeated :meth:`update`."""
        alphabet = self._alphabet
        for s in tokens:
            if s not in alphabet:
                raise ValueError(f"observation {s!r} is not in the alphabet")
        count = len(tokens)
        i = 0
        while i < count and self.t < self.n:
            self.update(tokens[i])
            i += 1
        if i == count:
            return
        if self.compensated or self._table is None:
            for s in tokens[i:]:
                self.update(s)
            return
        table = self._table
        total = self.total
        if self.n == 1:
            for s in tokens[i:]:
                total += table[(s,)]
            window = (tokens[-1],)
        else:
            window = self.window
            for s in tokens[i:]:
                window = window[1:] + (s,)
                total += table[window]
        self.window = window
        self.total = total
        self.t += count - i

    def half_width(self, delta: float, tau_mix: float, bound: str = BOUND_PRINTED) -> float:
        return pac_half_width(self.t, self.n, delta, tau_mix, self.fn.width, bound)


def update_point(state: EstimatorState, sigma: str) -> EstimatorState:
    state.update(sigma)
    return state


def batch_estimate(fn: AtomicFunction, word: Sequence[str]) -> float:
    """The point estimator evaluated directly on a whole word."""
    word = tuple(word)
    n = fn.arity
    k = len(word) - n + 1
    if k <= 0:
        raise ValueError("word shorter than the atom's arity")
    return math.fsum(fn(word[i:i + n]) for i in range(k)) / k

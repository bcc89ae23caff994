"""Output records and their CSV / JSON-lines rendering."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import astuple, dataclass, fields
from typing import Iterable, TextIO

from .monitor import INCONCLUSIVE, Monitor, Verdict

COLUMNS = ("t", "root", "point", "lo", "hi", "epsilon", "verdict", "tau_mix", "run_id")
WARMUP = "bot"


@dataclass(frozen=True)
class Record:
    t: int
    root: str
    point: float | None
    lo: float | None
    hi: float | None
    epsilon: float | None
    verdict: str
    tau_mix: float
    run_id: int | str | None = None


def monitor_record(mon: Monitor, root: str = "root", run_id=None) -> Record:
    """Snapshot of the monitor's current output."""
    out = mon.output()
    if out is INCONCLUSIVE:
        return Record(mon.t, root, None, None, None, None, WARMUP, mon.tau_mix, run_id)
    iv = mon.interval()
    lo, hi = (None, None) if iv is None else (iv.lo, iv.hi)
    verdict = out.value if isinstance(out, Verdict) else ""
    return Record(mon.t, root, mon.point(), lo, hi, mon.epsilon(), verdict, mon.tau_mix, run_id)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def write_csv(records: Iterable[Record], fh: TextIO, header: bool = True) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    if header:
        writer.writerow(COLUMNS)
    for rec in records:
        writer.writerow([_cell(v) for v in astuple(rec)])


def write_jsonl(records: Iterable[Record], fh: TextIO) -> None:
    for rec in records:
        obj = {}
        for f in fields(rec):
            v = getattr(rec, f.name)
            if isinstance(v, float) and math.isinf(v):
                v = "inf" if v > 0 else "-inf"
            obj[f.name] = v
        fh.write(json.dumps(obj) + "\n")


def emit_csv(records: Iterable[Record], path=None) -> str | None:
    """Write ``records`` to ``path``; without a path return the CSV text."""
    if path is None:
        buf = io.StringIO()
        write_csv(records, buf)
        return buf.getvalue()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_csv(records, fh)
    return None


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))

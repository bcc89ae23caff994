import io
import math

import pytest

from fairmon.experiments import (
    LENDING_ROOTS, log_checkpoints, make_spec, required_lengths, run_hypercube, run_lending,
    run_monitors,
)
from fairmon.monitor import Monitor
from fairmon.pomc import hypercube_model, sample_path
from fairmon.records import COLUMNS, Record, emit_csv, monitor_record, write_jsonl


def test_checkpoints():
    cps = log_checkpoints(1000, 1.3)
    assert cps[0] == 1 and cps[-1] == 1000
    assert all(b > a for a, b in zip(cps, cps[1:]))
    assert len(cps) < 40
    assert log_checkpoints(1) == [1]
    with pytest.raises(ValueError):
        log_checkpoints(10, 1.0)


def test_block_feeding_matches_per_event():
    model = hypercube_model(3)
    doc = make_spec(model.alphabet, 'P("a" | "a") - P("b" | "b")', 0.05, 7.45)
    path = sample_path(model, 3000, 1)
    cps = log_checkpoints(3000)
    recs = run_monitors(path, {"x": Monitor(doc)}, cps)
    mon = Monitor(doc)
    expected = []
    for s in path:
        mon.feed(s)
        if mon.t in cps:
            expected.append(monitor_record(mon, "x"))
    assert recs == expected


@pytest.fixture(scope="module")
def small_cube():
    return run_hypercube(runs=6, length=4000, seed=3)


def test_hypercube_summary(small_cube):
    assert small_cube.oracle == {"psi_dp": pytest.approx(0, abs=1e-15), "psi_tdp": pytest.approx(0, abs=1e-15)}
    rows = [r for r in small_cube.summary if r.root == "psi_tdp" and r.tau_mix == 7.45]
    assert rows[-1].t == 4000 and rows[-1].runs == 6
    assert rows[-1].lo_min <= rows[-1].point_min <= rows[-1].point_max <= rows[-1].hi_max
    spread = [r.point_max - r.point_min for r in rows if r.point_max is not None]
    assert spread[-1] < spread[len(spread) // 2]


def test_hypercube_tau_ratio(small_cube):
    recs = small_cube.records["psi_tdp"]
    slow = {(r.run_id, r.t): r for r in recs if r.tau_mix == 204.94}
    fast = {(r.run_id, r.t): r for r in recs if r.tau_mix == 7.45}
    assert slow.keys() == fast.keys()
    target = math.sqrt(204.94 / 7.45)
    for key, r in fast.items():
        s = slow[key]
        assert s.point == r.point
        if r.epsilon is not None:
            assert s.epsilon / r.epsilon == pytest.approx(target, rel=1e-9)


def test_hypercube_reproducible(small_cube):
    again = run_hypercube(runs=6, length=4000, seed=3)
    for root in small_cube.records:
        assert emit_csv(again.records[root]) == emit_csv(small_cube.records[root])


def test_lending_required_lengths():
    lengths = required_lengths()
    assert 2e9 <= lengths["phi_tdp"] <= 8e9
    assert 1e12 / 5 <= lengths["phi_dp"] <= 1e12 * 5


def test_lending_run():
    res = run_lending(length=20_000, horizon=10 ** 12)
    assert set(res.records) == set(LENDING_ROOTS)
    final = res.records["phi_tdp"][-1]
    assert final.t == 20_000 and final.lo <= final.point <= final.hi
    proj = [r for r in res.projection if r.root == "phi_tdp"]
    assert proj[0].t > 20_000 and proj[-1].t == 10 ** 12
    widths = [r.half_width for r in proj]
    assert all(b <= a for a, b in zip(widths, widths[1:]))
    assert res.mean_update_seconds > 0


def test_csv_rendering():
    assert emit_csv([]) == ",".join(COLUMNS) + "\n"
    rows = [Record(3, "r", 0.5, -math.inf, math.inf, 1.0, "", 7.45, 0),
            Record(1, "r", None, None, None, None, "bot", 7.45, None),
            Record(4, "q,x", 0.25, 0.0, 0.5, 0.2, "unknown", 7.45, "run 1")]
    lines = emit_csv(rows).splitlines()
    assert lines[1] == "3,r,0.5,-inf,inf,1.0,,7.45,0"
    assert lines[2] == "1,r,,,,,bot,7.45,"
    assert lines[3].startswith('4,"q,x",')
    buf = io.StringIO()
    write_jsonl(rows[:1], buf)
    assert '"lo": "-inf"' in buf.getvalue() and '"hi": "inf"' in buf.getvalue()


def test_emit_csv_to_file(tmp_path):
    path = tmp_path / "out.csv"
    emit_csv([], path)
    assert path.read_text() == ",".join(COLUMNS) + "\n"

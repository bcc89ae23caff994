import io
import json

import pytest

from fairmon.cli import main, parse_config, CliError
from fairmon.experiments import HYPERCUBE_ROOTS, log_checkpoints, make_spec, run_monitors
from fairmon.monitor import Monitor
from fairmon.pomc import derive_seed, hypercube_model, sample_path, save_model
from fairmon.records import emit_csv


def run(argv, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, io.StringIO(stdin), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def files(tmp_path):
    model = tmp_path / "cube.model"
    save_model(hypercube_model(3), model)
    specs = {
        "dp": 'quant: P("a" | "a") - P("b" | "b")',
        "tdp": 'quant: P("a a") - P("b b")',
        "aa": 'quant: P("a a")',
        "cond": 'quant: P("a" | "a")',
        "const": "quant: 1.25",
        "qual": 'qual: P("a a") >= 0.4',
        "undef": 'quant: 1 / (P("a") - 0.5)',
    }
    paths = {"model": str(model)}
    for name, body in specs.items():
        p = tmp_path / f"{name}.bse"
        p.write_text(f"alphabet: a b\ndelta: 0.05\ntaumix: 7.45\n{body}\n")
        paths[name] = str(p)
    bad = tmp_path / "bad.bse"
    bad.write_text("alphabet: a b\ndelta: 0.05\ntaumix: 7.45\nquant: P(\"a\" +\n")
    paths["bad"] = str(bad)
    return paths


class TestExact:
    def test_values(self, files):
        assert run(["exact", files["model"], files["dp"]])[1] == "0.000000000000\n"
        assert run(["exact", files["model"], files["tdp"]])[1] == "0.000000000000\n"
        assert run(["exact", files["model"], files["aa"]])[1] == "0.416666666667\n"
        assert run(["exact", files["model"], files["cond"]])[1] == "0.833333333333\n"
        assert run(["exact", files["model"], files["const"]])[1] == "1.250000000000\n"
        assert run(["exact", files["model"], files["qual"]])[1] == "true\n"

    def test_errors(self, files, tmp_path):
        assert run(["exact", files["model"], files["undef"]])[0] == 4
        assert run(["exact", files["model"], files["bad"]])[0] == 3
        broken = tmp_path / "broken.model"
        broken.write_text("states 1\nalphabet a\nt 0 0 0.5\nl 0 a\n")
        code, _, err = run(["exact", str(broken), files["aa"]])
        assert code == 4 and "sums to" in err


class TestMonitor:
    def test_csv_rows_per_event(self, files):
        code, out, _ = run(["monitor", files["aa"]], "a a\nb\na a\n")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "t,root,point,lo,hi,epsilon,verdict,tau_mix,run_id"
        assert len(lines) == 6 and lines[1].startswith("1,aa,,,,,bot,")
        assert lines[5].startswith("5,aa,0.5,")

    def test_unknown_token_names_line(self, files):
        trace = "a\n" * 16 + "c\n" + "a\n"
        code, out, err = run(["monitor", files["aa"]], trace)
        assert code == 2 and "line 17" in err
        assert len(out.splitlines()) == 17

    def test_spec_error(self, files):
        code, _, err = run(["monitor", files["bad"]], "a\n")
        assert code == 3 and "line 4" in err

    def test_overrides_and_bound(self, files):
        trace = "a a b a b b a\n" * 5
        base = run(["monitor", files["aa"], "--format", "jsonl"], trace)[1].splitlines()
        proof = run(["monitor", files["aa"], "--format", "jsonl", "--bound", "proof"], trace)[1].splitlines()
        wide = run(["monitor", files["aa"], "--format", "jsonl", "--taumix", "29.8"], trace)[1].splitlines()
        b, p, w = (json.loads(x[-1]) for x in (base, proof, wide))
        assert p["epsilon"] / b["epsilon"] == pytest.approx(2 ** 0.5, rel=1e-12)
        assert w["epsilon"] / b["epsilon"] == pytest.approx(2.0, rel=1e-12)
        assert w["tau_mix"] == 29.8

    def test_checkpoint_thinning(self, files):
        out = run(["monitor", files["aa"], "--checkpoint-every", "4"], "a " * 10)[1].splitlines()
        assert [line.split(",")[0] for line in out[1:]] == ["4", "8", "10"]

    def test_input_file_and_qual(self, files, tmp_path):
        trace = tmp_path / "trace.txt"
        trace.write_text("a\n" * 3000)
        out = run(["monitor", files["qual"], str(trace), "--checkpoint-every", "3000"])[1]
        assert out.splitlines()[1].split(",")[6] == "true"


def test_simulate_matches_sampler(files):
    code, out, _ = run(["simulate", files["model"], "--length", "200", "--seed", "5"])
    assert code == 0
    assert out.split() == sample_path(hypercube_model(3), 200, derive_seed(5, 0))
    assert run(["simulate", files["model"], "--length", "0"])[0] == 2


def test_pipeline_identity(files):
    trace = run(["simulate", files["model"], "--length", "3000", "--seed", "11", "--run", "2"])[1]
    out = run(["monitor", files["tdp"], "--root-name", "psi_tdp"], trace)[1].splitlines()
    model = hypercube_model(3)
    doc = make_spec(model.alphabet, HYPERCUBE_ROOTS["psi_tdp"], 0.05, 7.45)
    path = sample_path(model, 3000, derive_seed(11, 2))
    cps = log_checkpoints(3000)
    harness = emit_csv(run_monitors(path, {"psi_tdp": Monitor(doc)}, cps)).splitlines()
    picked = [out[0]] + [out[t] for t in cps]
    assert picked == harness


class TestExperiment:
    def test_hypercube_outputs_and_reproducibility(self, tmp_path):
        cfg = tmp_path / "cube.cfg"
        cfg.write_text("# small run\nruns = 3\nlength = 2000\nseed = 4\ntaus = 204.94, 7.45\n")
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["experiment", "hypercube", "--config", str(cfg), "--out", str(a)])[0] == 0
        assert run(["experiment", "hypercube", "--config", str(cfg), "--out", str(b)])[0] == 0
        manifest = json.loads((a / "manifest.json").read_text())
        assert manifest["seed"] == 4 and len(manifest["config_sha256"]) == 64
        assert {"hypercube_psi_dp.csv", "hypercube_psi_tdp.csv"} <= set(manifest["files"])
        for name in manifest["files"] + ["manifest.json"]:
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_lending_projection(self, tmp_path, monkeypatch):
        cfg = tmp_path / "lend.cfg"
        cfg.write_text("length = 5000\nhorizon = 1e10\ngroup_a = 0.7\n")
        monkeypatch.setenv("FAIRMON_OUT", str(tmp_path / "env"))
        code, _, err = run(["experiment", "lending", "--config", str(cfg)])
        assert code == 0 and "mean update time" in err
        out = tmp_path / "env"
        header = (out / "lending_projection.csv").read_text().splitlines()[0]
        assert header == "root,t,lo,hi,half_width,tau_mix"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["group_a"] == 0.7
        assert set(manifest["results"]["required_length"]) == {"phi_dp", "phi_tdp"}

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "x.cfg"
        cfg.write_text("colour = blue\n")
        assert run(["experiment", "hypercube", "--config", str(cfg), "--out", str(tmp_path)])[0] == 2
        with pytest.raises(SystemExit):
            run(["experiment", "nonsense"])


def test_parse_config():
    assert parse_config("a = 1\n# c\n\nb=x y\n") == {"a": "1", "b": "x y"}
    with pytest.raises(CliError):
        parse_config("novalue\n")


def test_help_lists_flags(capsys):
    with pytest.raises(SystemExit):
        main(["monitor", "--help"])
    text = capsys.readouterr().out
    for flag in ("--delta", "--taumix", "--bound", "--format", "--checkpoint-every"):
        assert flag in text

"""Command-line interface.

Exit codes: 0 success, 2 bad input data, 3 bad specification, 4 bad model
(or a model on which the requested semantics is undefined).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .bse import SpecError, parse_spec
from .estimation import BOUNDS
from .experiments import run_hypercube, run_lending
from .monitor import Monitor
from .pomc import (
    LendingParams, ModelError, SemanticsError, derive_seed, exact_semantics, load_model,
    sample_path,
)
from .records import COLUMNS, monitor_record, write_csv, write_jsonl

EXIT_OK = 0
EXIT_DATA = 2
EXIT_SPEC = 3
EXIT_MODEL = 4

OUT_ENV = "FAIRMON_OUT"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_spec(path, delta=None, tau_mix=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_SPEC) from None
    try:
        return parse_spec(text, delta=delta, tau_mix=tau_mix)
    except SpecError as exc:
        raise CliError(f"{path}: {exc}", EXIT_SPEC) from None


def _load_model(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_MODEL) from None
    except ModelError as exc:
        raise CliError(f"{path}: {exc}", EXIT_MODEL) from None


def cmd_monitor(args, stdin, stdout, stderr) -> int:
    doc = _load_spec(args.spec, args.delta, args.taumix)
    mon = Monitor(doc, bound=args.bound)
    root = args.root_name or Path(args.spec).stem
    every = args.checkpoint_every
    if every < 1:
        raise CliError("--checkpoint-every must be at least 1", EXIT_DATA)
    alphabet = set(doc.alphabet)
    if args.format == "csv":
        writer = csv.writer(stdout, lineterminator="\n")
        writer.writerow(COLUMNS)

        def emit(rec):
            write_csv([rec], stdout, header=False)
    else:
        def emit(rec):
            write_jsonl([rec], stdout)

    source = stdin if args.input in (None, "-") else open(args.input, encoding="utf-8")
    last = 0
    try:
        for lineno, line in enumerate(source, 1):
            for tok in line.split():
                if tok not in alphabet:
                    raise CliError(f"line {lineno}: observation {tok!r} is not in the alphabet",
                                   EXIT_DATA)
                mon.feed(tok)
                if mon.t % every == 0:
                    emit(monitor_record(mon, root))
                    last = mon.t
    finally:
        if source is not stdin:
            source.close()
    if mon.t != last:
        emit(monitor_record(mon, root))
    return EXIT_OK


def cmd_simulate(args, stdin, stdout, stderr) -> int:
    model = _load_model(args.model)
    if args.length < 1:
        raise CliError("--length must be at least 1", EXIT_DATA)
    if args.seed < 0 or args.run < 0:
        raise CliError("--seed and --run must be non-negative", EXIT_DATA)
    path = sample_path(model, args.length, derive_seed(args.seed, args.run))
    stdout.write("\n".join(path))
    stdout.write("\n")
    return EXIT_OK


def cmd_exact(args, stdin, stdout, stderr) -> int:
    model = _load_model(args.model)
    doc = _load_spec(args.spec, delta=0.5, tau_mix=1.0)
    try:
        value = exact_semantics(model, doc.root)
    except SemanticsError as exc:
        raise CliError(str(exc), EXIT_MODEL) from None
    if isinstance(value, bool):
        stdout.write(("true" if value else "false") + "\n")
    else:
        # Round first so tiny negative residue does not print as -0.
        stdout.write(f"{round(value, 12) + 0.0:.12f}\n")
    return EXIT_OK


def parse_config(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` comments and blank lines are ignored."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise CliError(f"config line {lineno}: expected key = value", EXIT_DATA)
        out[key.strip()] = value.strip()
    return out


_HYPERCUBE_KEYS = {"runs": int, "length": int, "delta": float, "seed": int, "dim": int,
                   "growth": float,
                   "taus": lambda s: tuple(float(x) for x in s.replace(",", " ").split())}
_LENDING_KEYS = {"length": int, "delta": float, "tau_mix": float, "seed": int,
                 "growth": float, "horizon": lambda s: int(float(s)),
                 "target_half_width": float}


def _typed_config(raw: dict[str, str], name: str):
    keys = _HYPERCUBE_KEYS if name == "hypercube" else _LENDING_KEYS
    kwargs, rest = {}, {}
    for key, value in raw.items():
        if key in keys:
            try:
                kwargs[key] = keys[key](value)
            except ValueError:
                raise CliError(f"config: bad value for {key!r}: {value!r}", EXIT_DATA) from None
        else:
            rest[key] = value
    if name == "hypercube":
        if rest:
            raise CliError(f"config: unknown key {sorted(rest)[0]!r}", EXIT_DATA)
        return kwargs
    try:
        kwargs["params"] = LendingParams.from_mapping(rest)
    except (ModelError, ValueError, TypeError) as exc:
        raise CliError(f"config: {exc}", EXIT_DATA) from None
    return kwargs


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                             for v in row])


def cmd_experiment(args, stdin, stdout, stderr) -> int:
    raw = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = parse_config(fh.read())
        except OSError as exc:
            raise CliError(f"cannot read {args.config}: {exc.strerror}", EXIT_DATA) from None
    kwargs = _typed_config(raw, args.name)
    if args.seed is not None:
        kwargs["seed"] = args.seed
    out = Path(args.out or os.environ.get(OUT_ENV) or "results")
    out.mkdir(parents=True, exist_ok=True)
    files = []
    if args.name == "hypercube":
        result = run_hypercube(**kwargs)
        config = result.config
        for root, recs in result.records.items():
            name = f"hypercube_{root}.csv"
            with open(out / name, "w", newline="", encoding="utf-8") as fh:
                write_csv(recs, fh)
            files.append(name)
        env = [dataclasses.astuple(r) for r in result.summary]
        _write_rows(out / "hypercube_envelope.csv",
                    [f.name for f in dataclasses.fields(result.summary[0])], env)
        files.append("hypercube_envelope.csv")
        results = {"oracle": result.oracle,
                   "final_coverage": {f"{k[0]}@{k[1]!r}": v for k, v in result.coverage.items()}}
    else:
        result = run_lending(**kwargs)
        config = result.config
        for root, recs in result.records.items():
            name = f"lending_{root}.csv"
            with open(out / name, "w", newline="", encoding="utf-8") as fh:
                write_csv(recs, fh)
            files.append(name)
        _write_rows(out / "lending_projection.csv",
                    ["root", "t", "lo", "hi", "half_width", "tau_mix"],
                    [dataclasses.astuple(r) for r in result.projection])
        files.append("lending_projection.csv")
        results = {"oracle": result.oracle, "required_length": result.required_length}
        print(f"mean update time: {result.mean_update_seconds * 1e6:.2f} us", file=stderr)
    canonical = json.dumps(config, sort_keys=True)
    manifest = {
        "experiment": args.name,
        "seed": config["seed"],
        "config": config,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "version": __version__,
        "files": files,
        "results": results,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    stdout.write(f"wrote {len(files)} files to {out}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairmon", description="Monitor fairness properties of partially observed Markov chains.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("monitor", help="monitor an observation stream against a specification")
    p.add_argument("spec", help="specification file")
    p.add_argument("input", nargs="?", help="observation file (default: standard input)")
    p.add_argument("--delta", type=float, help="failure probability, overrides the spec file")
    p.add_argument("--taumix", type=float, help="mixing-time bound, overrides the spec file")
    p.add_argument("--bound", choices=BOUNDS, default="printed",
                   help="half-width formula: 'printed' (default) or the more conservative 'proof'")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv", help="output format")
    p.add_argument("--checkpoint-every", type=int, default=1, metavar="K",
                   help="emit a record every K events (and after the last one)")
    p.add_argument("--root-name", help="value of the 'root' column (default: spec file stem)")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("simulate", help="sample an observation sequence from a model file")
    p.add_argument("model", help="model file")
    p.add_argument("--length", type=int, required=True, help="number of observations")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--run", type=int, default=0,
                   help="run index; the stream equals run RUN of an experiment with this seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exact", help="print the exact value of a specification on a model")
    p.add_argument("model", help="model file")
    p.add_argument("spec", help="specification file (delta and taumix may be omitted)")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("experiment", help="run a reference experiment and write CSV files")
    p.add_argument("name", choices=("hypercube", "lending"), help="experiment to run")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, help="master seed, overrides the config file")
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, stdin, stdout, stderr)
    except CliError as exc:
        stdout.flush()
        print(f"fairmon: {exc}", file=stderr)
        return exc.code
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

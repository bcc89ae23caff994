"""Plain-text model files.

Format, one directive per line, ``#`` starting a comment::

    states 2
    alphabet a b
    t 0 0 0.5          # transition from state 0 to state 0
    t 0 1 0.5
    t 1 0 1
    l 0 a              # state 0 emits a
    l 1 b
    init 0 1           # optional; stationary start otherwise

States are numbered from 0. Probabilities are parsed with ``float`` so a
written file reads back bit for bit.
"""

from __future__ import annotations

from .model import ModelError, PomcModel


def parse_model(text: str) -> PomcModel:
    states = None
    alphabet = None
    triples = []
    labels = {}
    init = {}

    def fail(lineno, msg):
        raise ModelError(f"line {lineno}: {msg}")

    def state(lineno, raw):
        try:
            i = int(raw)
        except ValueError:
            fail(lineno, f"bad state {raw!r}")
        if states is None:
            fail(lineno, "'states' must come first")
        if not 0 <= i < states:
            fail(lineno, f"state {i} out of range")
        return i

    def prob(lineno, raw):
        try:
            return float(raw)
        except ValueError:
            fail(lineno, f"bad probability {raw!r}")

    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        head, args = parts[0], parts[1:]
        if head == "states":
            if states is not None or len(args) != 1:
                fail(lineno, "expected a single 'states <k>' line")
            try:
                states = int(args[0])
            except ValueError:
                fail(lineno, f"bad state count {args[0]!r}")
            if states < 1:
                fail(lineno, "state count must be positive")
        elif head == "alphabet":
            if alphabet is not None or not args:
                fail(lineno, "expected a single non-empty 'alphabet' line")
            alphabet = tuple(args)
        elif head == "t":
            if len(args) != 3:
                fail(lineno, "expected 't <from> <to> <prob>'")
            triples.append((state(lineno, args[0]), state(lineno, args[1]), prob(lineno, args[2])))
        elif head == "l":
            if len(args) != 2:
                fail(lineno, "expected 'l <state> <token>'")
            i = state(lineno, args[0])
            if i in labels:
                fail(lineno, f"state {i} labelled twice")
            if alphabet is not None and args[1] not in alphabet:
                fail(lineno, f"token {args[1]!r} is not in the alphabet")
            labels[i] = args[1]
        elif head == "init":
            if len(args) != 2:
                fail(lineno, "expected 'init <state> <prob>'")
            init[state(lineno, args[0])] = prob(lineno, args[1])
        else:
            fail(lineno, f"unknown directive {head!r}")
    if states is None:
        raise ModelError("missing 'states' line")
    if alphabet is None:
        raise ModelError("missing 'alphabet' line")
    missing = [i for i in range(states) if i not in labels]
    if missing:
        raise ModelError(f"state {missing[0]} has no label")
    init_vec = None
    if init:
        init_vec = [init.get(i, 0.0) for i in range(states)]
    return PomcModel.from_triples(states, triples, [labels[i] for i in range(states)],
                                  alphabet, init_vec)


def format_model(model: PomcModel) -> str:
    lines = [f"states {model.state_count}", "alphabet " + " ".join(model.alphabet)]
    lines += [f"t {i} {j} {p!r}" for i, j, p in model.triples()]
    lines += [f"l {i} {tok}" for i, tok in enumerate(model.labels)]
    if model.init is not None:
        lines += [f"init {i} {float(p)!r}" for i, p in enumerate(model.init) if p]
    return "\n".join(lines) + "\n"


def load_model(path) -> PomcModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def save_model(model: PomcModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_model(model))

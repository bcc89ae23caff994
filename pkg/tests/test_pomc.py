import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from scipy import stats

from fairmon.bse import AtomicFunction, make_sequence_prob_atom
from fairmon.pomc import (
    LendingParams, ModelError, ModelWarning, PomcModel, SemanticsError, UndefinedSemantics,
    derive_seed, exact_atom_semantics, exact_expr_semantics, exact_qual_semantics,
    format_model, hypercube_model, hypercube_tau_mix, lending_model, parse_model, sample_path,
    sample_states, stationary_residual, tau_mix_bound_reversible, validate,
)

from conftest import cube_spec, lending_spec


def brute_force(model, fn):
    """Sum over every hidden-state path of length n, exactly as the definition reads."""
    pi = model.stationary
    m = model.dense()
    total = 0.0
    for path in product(range(model.state_count), repeat=fn.arity):
        p = pi[path[0]]
        for a, b in zip(path, path[1:]):
            p *= m[a, b]
        if p:
            total += p * fn(tuple(model.labels[q] for q in path))
    return total


def cycle(k):
    return PomcModel.from_triples(k, [(i, (i + 1) % k, 1.0) for i in range(k)], ["a"] * k)


class TestModel:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(ModelError):
            PomcModel.from_triples(2, [(0, 1, 1.0), (1, 0, 0.5)], ["a", "b"])

    def test_probability_range_and_labels(self):
        with pytest.raises(ModelError):
            PomcModel.from_triples(1, [(0, 0, 1.5), (0, 0, -0.5)], ["a"])
        with pytest.raises(ModelError):
            PomcModel.from_triples(1, [(0, 0, 1.0)], ["a"], alphabet=["b"])
        with pytest.raises(ModelError):
            PomcModel.from_triples(2, [(0, 0, 1.0), (1, 1, 1.0)], ["a"])

    def test_cycle_is_periodic(self):
        with pytest.warns(ModelWarning):
            d = validate(cycle(3))
        assert d.irreducible and not d.aperiodic and d.period == 3

    def test_disconnected_is_reducible(self):
        m = PomcModel.from_triples(2, [(0, 0, 1.0), (1, 1, 1.0)], ["a", "b"])
        with pytest.warns(ModelWarning):
            assert not validate(m).irreducible

    def test_hypercube(self, cube):
        d = validate(cube)
        assert d.irreducible and d.aperiodic
        assert np.allclose(d.stationary, 1 / 8, atol=1e-14)
        m = cube.dense()
        assert m[0, 0] == 0.5 and m[0, 1] == pytest.approx(1 / 6) and m[0, 3] == 0
        assert cube.labels == ("a",) * 4 + ("b",) * 4

    def test_dim_one_and_guard(self):
        m = hypercube_model(1)
        assert np.allclose(m.stationary, [0.5, 0.5])
        with pytest.raises(ModelError):
            hypercube_model(21)
        with pytest.raises(ModelError):
            hypercube_model(0)

    def test_stationary_residual(self, cube, lending):
        rng = np.random.default_rng(0)
        for model in (cube, lending, hypercube_model(6)):
            pi = model.stationary
            assert stationary_residual(model, pi) <= 1e-10 and abs(pi.sum() - 1) < 1e-12
        dense = rng.random((12, 12))
        dense /= dense.sum(axis=1, keepdims=True)
        triples = [(i, j, dense[i, j]) for i in range(12) for j in range(12)]
        model = PomcModel.from_triples(12, triples, ["a"] * 12)
        assert stationary_residual(model, model.stationary) <= 1e-10

    def test_power_iteration_path(self):
        model = hypercube_model(10)
        assert model.state_count > 1000
        pi = model.stationary
        assert stationary_residual(model, pi) <= 1e-10
        assert np.allclose(pi, 1 / 1024, atol=1e-12)


class TestMixingBound:
    def test_hypercube_bound_is_above_truth(self, cube):
        bound = tau_mix_bound_reversible(cube)
        assert bound >= hypercube_tau_mix(3)
        assert bound == pytest.approx(3 * math.log(32), rel=1e-9)
        assert hypercube_tau_mix(3) == pytest.approx(7.4547, abs=1e-4)

    def test_single_state(self):
        assert tau_mix_bound_reversible(PomcModel.from_triples(1, [(0, 0, 1.0)], ["a"])) == 1.0

    def test_nonreversible_refused(self):
        triples = [(i, i, 0.1) for i in range(3)] + [(i, (i + 1) % 3, 0.9) for i in range(3)]
        with pytest.raises(ModelError, match="reversible"):
            tau_mix_bound_reversible(PomcModel.from_triples(3, triples, ["a"] * 3))


class TestSampling:
    def test_single_state(self):
        assert sample_path(PomcModel.from_triples(1, [(0, 0, 1.0)], ["a"]), 1, 0) == ["a"]

    def test_seed_determinism(self, cube):
        assert sample_path(cube, 500, 7) == sample_path(cube, 500, 7)
        assert sample_path(cube, 500, 7) != sample_path(cube, 500, 8)
        assert sample_path(cube, 50, derive_seed(7, 1)) == sample_path(cube, 50, derive_seed(7, 1))

    @pytest.mark.parametrize("seed", [-1, 1.5, "3", None, True])
    def test_invalid_seed(self, cube, seed):
        with pytest.raises(ValueError):
            sample_path(cube, 5, seed)

    def test_respects_support(self, lending):
        states = sample_states(lending, 20_000, 3)
        m = lending.dense()
        assert all(m[a, b] > 0 for a, b in zip(states, states[1:]))

    def test_explicit_init(self):
        m = PomcModel.from_triples(2, [(0, 1, 1.0), (1, 0, 1.0)], ["a", "b"], init=[0, 1])
        assert sample_path(m, 4, 0) == ["b", "a", "b", "a"]

    def test_visit_frequencies(self, cube):
        states = sample_states(cube, 10 ** 6, 12)
        counts = np.bincount(states, minlength=8)
        # Consecutive states are correlated, so only a generous threshold makes sense.
        chi2 = ((counts - 125_000) ** 2 / 125_000).sum()
        assert chi2 < 20 * stats.chi2.ppf(0.999, 7)
        sigma = math.sqrt(10 ** 6 * (1 / 8) * (7 / 8))
        assert np.all(np.abs(counts - 125_000) < 3 * sigma * math.sqrt(7))


class TestExactSemantics:
    def test_cube_examples(self, cube):
        a = make_sequence_prob_atom([("a",)], ("a", "b"))
        aa = make_sequence_prob_atom([("a", "a")], ("a", "b"))
        assert exact_atom_semantics(cube, a) == pytest.approx(0.5, abs=1e-15)
        assert exact_atom_semantics(cube, aa) == pytest.approx(float(Fraction(5, 12)), abs=1e-15)
        assert brute_force(cube, aa) == pytest.approx(5 / 12, abs=1e-15)
        const = AtomicFunction("c", ("a", "b"), 3, 0, 1, [], 0.3)
        assert exact_atom_semantics(cube, const) == pytest.approx(0.3)

    def test_expressions(self, cube):
        assert exact_expr_semantics(cube, cube_spec('quant: P("a" | "a") - P("b" | "b")').root) == pytest.approx(0, abs=1e-15)
        assert exact_expr_semantics(cube, cube_spec('quant: P("a a") - P("b b")').root) == pytest.approx(0, abs=1e-15)
        assert exact_expr_semantics(cube, cube_spec('quant: P("a" | "a")').root) == pytest.approx(5 / 6, abs=1e-14)
        assert exact_qual_semantics(cube, cube_spec('qual: P("a a") >= 0.4 && P("a") <= 0.5').root)
        assert not exact_qual_semantics(cube, cube_spec('qual: P("a a") > 0.5').root)

    def test_undefined_division(self, cube):
        with pytest.raises(UndefinedSemantics):
            exact_expr_semantics(cube, cube_spec('quant: 1 / (P("a") - 0.5)').root)

    def test_wildcards_match_brute_force(self, lending):
        alphabet = ("S", "A", "B", "Y", "N")
        f = AtomicFunction("f", alphabet, 3, -1, 2,
                           [(("*", "Y", "S"), 2.0), (("A", "*", "S"), -1.0), (("A", "Y", "S"), 0.5)], 0.25)
        assert exact_atom_semantics(lending, f) == pytest.approx(brute_force(lending, f), abs=1e-14)

    def test_indicator_matches_brute_force(self, lending):
        alphabet = ("S", "A", "B", "Y", "N")
        for words in ([("A", "Y")], [("B",), ("S", "S")], [("S", "A", "N"), ("Y",)]):
            f = make_sequence_prob_atom(words, alphabet)
            assert exact_atom_semantics(lending, f) == pytest.approx(brute_force(lending, f), abs=1e-14)

    def test_single_symbol_indicator_is_label_mass(self, lending):
        f = make_sequence_prob_atom([("A",), ("Y",)], ("S", "A", "B", "Y", "N"))
        pi = lending.stationary
        mass = sum(p for p, lab in zip(pi, lending.labels) if lab in ("A", "Y"))
        assert exact_atom_semantics(lending, f) == pytest.approx(mass, abs=1e-14)

    def test_time_invariance(self, lending):
        f = make_sequence_prob_atom([("A", "Y", "S")], ("S", "A", "B", "Y", "N"))
        base = exact_atom_semantics(lending, f)
        m = lending.dense()
        for k in (1, 5):
            start = lending.stationary @ np.linalg.matrix_power(m, k)
            assert abs(exact_atom_semantics(lending, f, start) - base) <= 1e-10

    def test_enumeration_guard(self, cube):
        f = AtomicFunction("big", ("a", "b"), 27, 0, 1, [(("*",) + ("a",) * 26, 1.0)], 0.0)
        with pytest.raises(SemanticsError):
            exact_atom_semantics(cube, f)


class TestLending:
    def test_structure(self, lending):
        d = validate(lending)
        assert d.irreducible and d.aperiodic
        assert lending.dense()[0, 0] == pytest.approx(0.01)
        assert lending.labels == ("S", "A", "A", "B", "B", "Y", "N")

    def test_symmetric_params_are_fair(self):
        params = LendingParams(group_a=0.5, score_a=(0.4, 0.6), score_b=(0.4, 0.6),
                               grant_a=(0.3, 0.7), grant_b=(0.3, 0.7))
        model = lending_model(params)
        doc = lending_spec('quant: P("Y" | "A") - P("Y" | "B")')
        assert exact_expr_semantics(model, doc.root) == pytest.approx(0, abs=1e-14)

    def test_default_dp_matches_closed_form(self, lending):
        p = LendingParams()
        grant_a = sum(s * g for s, g in zip(p.score_a, p.grant_a))
        grant_b = sum(s * g for s, g in zip(p.score_b, p.grant_b))
        doc = lending_spec('quant: P("Y" | "A") - P("Y" | "B")')
        assert exact_expr_semantics(lending, doc.root) == pytest.approx(grant_a - grant_b, abs=1e-14)

    @pytest.mark.parametrize("kwargs", [dict(s_loop=1.0), dict(group_a=1.2), dict(score_a=(0.5, 0.6)),
                                        dict(grant_b=(0.3,))])
    def test_bad_params(self, kwargs):
        with pytest.raises(ModelError):
            LendingParams(**kwargs)

    def test_params_from_mapping(self):
        p = LendingParams.from_mapping({"group_a": "0.6", "grant_a": "0.2, 0.4"})
        assert p.group_a == 0.6 and p.grant_a == (0.2, 0.4)
        with pytest.raises(ModelError):
            LendingParams.from_mapping({"colour": "1"})


class TestModelFiles:
    def test_round_trip_is_bit_exact(self, lending, cube):
        for model in (lending, cube):
            again = parse_model(format_model(model))
            assert again.triples() == model.triples() and again.labels == model.labels
            assert again.alphabet == model.alphabet

    def test_init_and_comments(self):
        text = "# two states\nstates 2\nalphabet a b\nt 0 1 1\nt 1 0 1  # back\nl 0 a\nl 1 b\ninit 1 1\n"
        m = parse_model(text)
        assert list(m.init) == [0.0, 1.0]
        assert parse_model(format_model(m)).init.tolist() == [0.0, 1.0]

    @pytest.mark.parametrize("text, line", [
        ("states 2\nalphabet a\nt 0 5 1\n", 3),
        ("states 1\nalphabet a\nt 0 0 x\n", 3),
        ("states 1\nalphabet a\nl 0 b\n", 3),
        ("states 1\nalphabet a\nfoo 1\n", 3),
        ("alphabet a\nt 0 0 1\n", 2),
    ])
    def test_errors_name_line(self, text, line):
        with pytest.raises(ModelError, match=f"line {line}"):
            parse_model(text)

    def test_missing_label(self):
        with pytest.raises(ModelError, match="no label"):
            parse_model("states 2\nalphabet a\nt 0 0 1\nt 1 1 1\nl 0 a\n")

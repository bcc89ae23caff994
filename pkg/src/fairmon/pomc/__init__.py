"""Partially observed Markov chains: models, diagnostics, sampling and exact semantics."""

from .io import format_model, load_model, parse_model, save_model
from .model import (
    ModelDiagnostics, ModelError, ModelWarning, PomcModel, is_reversible, stationary_distribution,
    stationary_residual, tau_mix_bound_reversible, validate,
)
from .models import LendingParams, hypercube_model, hypercube_tau_mix, lending_model
from .sampling import derive_seed, make_rng, sample_path, sample_states
from .semantics import (
    SemanticsError, UndefinedSemantics, exact_atom_semantics, exact_expr_semantics,
    exact_qual_semantics, exact_semantics, window_probability,
)

__all__ = [
    "LendingParams", "ModelDiagnostics", "ModelError", "ModelWarning", "PomcModel",
    "SemanticsError", "UndefinedSemantics", "derive_seed", "exact_atom_semantics",
    "exact_expr_semantics", "exact_qual_semantics", "exact_semantics", "format_model",
    "hypercube_model", "hypercube_tau_mix", "is_reversible", "lending_model", "load_model",
    "make_rng", "parse_model", "sample_path", "sample_states", "save_model",
    "stationary_distribution", "stationary_residual", "tau_mix_bound_reversible", "validate",
    "window_probability",
]

"""Deductive database engine: stratified and disjunctive Datalog, Magic Sets,
incremental update propagation and view update translation."""

from .core import (
    Atom,
    Database,
    DatalogError,
    FactStore,
    InconsistentStore,
    Literal,
    ModelCapExceeded,
    Rule,
    SafetyError,
    SchemaError,
    Var,
    min_models,
)
from .magic import answer_query, rewrite_query
from .operators import (
    alternating_fixpoint_model,
    fixpoint_state_model,
    general_soft_model,
    iterated_fixpoint_model,
    perfect_models,
)
from .parser import ParseError, format_program, parse_atom, parse_program, parse_request
from .propagate import DeltaSet, IneffectiveUpdate, propagate_update, recompute_delta
from .stratify import stratification, stratify
from .viewupdate import (
    ConstraintViolation,
    NoRealization,
    NotTrueViewUpdate,
    Realization,
    SearchExhausted,
    VURequest,
    solve_view_update,
)

__all__ = [
    "Atom", "Database", "DatalogError", "FactStore", "InconsistentStore", "Literal", "ModelCapExceeded",
    "Rule", "SafetyError", "SchemaError", "Var", "min_models",
    "answer_query", "rewrite_query",
    "alternating_fixpoint_model", "fixpoint_state_model", "general_soft_model", "iterated_fixpoint_model",
    "perfect_models",
    "ParseError", "format_program", "parse_atom", "parse_program", "parse_request",
    "DeltaSet", "IneffectiveUpdate", "propagate_update", "recompute_delta",
    "stratification", "stratify",
    "ConstraintViolation", "NoRealization", "NotTrueViewUpdate", "Realization", "SearchExhausted",
    "VURequest", "solve_view_update",
]

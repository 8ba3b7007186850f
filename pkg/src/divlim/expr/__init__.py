"""Integrand expressions: parsing, printing, evaluation, q-derivatives, rational form."""

from .nodes import (
    EXTERNAL_VAR,
    INTEGRATION_VAR,
    Add,
    Const,
    Div,
    Expression,
    Mul,
    Pow,
    Sub,
    Symbol,
    derivative,
    differentiate,
    evaluate,
    free_symbols,
    parameters,
    substitute,
    to_text,
)
from .parser import parse, tokenize
from .rational import BoundIntegrand, RationalForm, bind, is_identically_zero, to_rational

__all__ = [
    "EXTERNAL_VAR",
    "INTEGRATION_VAR",
    "Add",
    "Const",
    "Div",
    "Expression",
    "Mul",
    "Pow",
    "Sub",
    "Symbol",
    "BoundIntegrand",
    "RationalForm",
    "bind",
    "derivative",
    "differentiate",
    "evaluate",
    "free_symbols",
    "is_identically_zero",
    "parameters",
    "parse",
    "substitute",
    "to_rational",
    "to_text",
    "tokenize",
]

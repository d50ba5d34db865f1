"""Front end for the supported C subset: lexing, parsing, counting, printing."""

from opttriage.minic.analyze import (
    build_function_unit,
    classify_operator,
    parse_functions,
    parse_unit,
)
from opttriage.minic.interp import EvalError, call_function
from opttriage.minic.lexer import LexError, Token, tokenize
from opttriage.minic.printer import expr_text, function_text, program_text
from opttriage.minic.units import (
    Diagnostic,
    FunctionUnit,
    LoopNest,
    OpCounts,
    ParamInfo,
    ParseError,
    SourceUnit,
    TripCount,
)

__all__ = [
    "Diagnostic",
    "EvalError",
    "FunctionUnit",
    "LexError",
    "LoopNest",
    "OpCounts",
    "ParamInfo",
    "ParseError",
    "SourceUnit",
    "Token",
    "TripCount",
    "build_function_unit",
    "call_function",
    "classify_operator",
    "expr_text",
    "function_text",
    "parse_functions",
    "parse_unit",
    "program_text",
    "tokenize",
]

"""Front-end tests: lexer, parser, canonical printer, and the evaluator."""

import pytest

from opttriage.minic import (
    Diagnostic,
    ParseError,
    SourceUnit,
    parse_unit,
)
from opttriage.minic import ast as A
from opttriage.minic.interp import EvalError, call_function
from opttriage.minic.lexer import LexError, tokenize
from opttriage.minic.parser import split_functions
from opttriage.minic.printer import expr_text, function_text

from conftest import parse_ast, parse_one


# ---------------------------------------------------------------------- lexer


def test_tokenize_strips_comments():
    toks = tokenize("a /* x */ + b // tail\n- c")
    assert [t.text for t in toks if t.kind != "eof"] == ["a", "+", "b", "-", "c"]


def test_tokenize_numbers():
    toks = tokenize("12 1.5 2.0f 1e3 0.5F")
    values = [t.value for t in toks if t.kind != "eof"]
    assert values == [12, 1.5, 2.0, 1000.0, 0.5]
    assert isinstance(values[0], int)
    assert all(isinstance(v, float) for v in values[1:])


def test_tokenize_two_char_operators():
    toks = tokenize("<= >= == != && || += -= *= /= %= ++ --")
    texts = [t.text for t in toks if t.kind != "eof"]
    assert texts == "<= >= == != && || += -= *= /= %= ++ --".split()


def test_tokenize_rejects_strings():
    with pytest.raises(LexError):
        tokenize('printf("hi")')


# --------------------------------------------------------------------- parser


def test_golden_function_shape(shortest_paths_fn):
    fn = shortest_paths_fn
    assert fn.name == "floyd_warshall"
    assert [p.name for p in fn.params] == ["n", "path"]
    assert fn.params[1].extents == ("N", "N")
    assert len(fn.loop_nests) == 1
    assert fn.loop_nests[0].depth == 3
    assert fn.bound_symbols == ("N",)


def test_for_header_canonical_form():
    fn = parse_one("void f(int n) { for (int i = 0; i < n; i++) { } }")
    nest = fn.loop_nests[0]
    assert nest.depth == 1
    assert nest.trip_counts[0].symbolic


def test_compound_assignment_desugars():
    fn = parse_ast("void f(int n, float a[N]) { for (int i = 0; i < n; i++) a[i] += 2.0; }")
    text = function_text(fn)
    assert "a[i] = a[i] + 2.0" in text


def test_increment_statement_desugars():
    fn = parse_ast("void f(int n) { int k; k = 0; for (int i = 0; i < n; i++) k++; }")
    assert "k = k + 1" in function_text(fn)


@pytest.mark.parametrize(
    "body,construct",
    [
        ("while (n) { n = n - 1; }", "while"),
        ("do { n = n - 1; } while (n);", "do"),
        ("int *p;", "pointer"),
        ("g(n);", "call"),
        ("int a[4];", "local array"),
        ("for (int i = n; i > 0; i--) { }", "loop condition"),
        ("goto done; done: n = 0;", "goto"),
    ],
)
def test_unsupported_constructs_are_named(body, construct):
    unit = SourceUnit("x.c", "void f(int n) { %s }" % body)
    units, diagnostics = parse_unit(unit)
    assert units == []
    assert len(diagnostics) >= 1
    assert construct in diagnostics[0].message


def test_strict_mode_raises():
    unit = SourceUnit("x.c", "void f(int n) { while (n) { n = n - 1; } }")
    with pytest.raises(ParseError):
        parse_unit(unit, strict=True)


def test_recovery_keeps_later_functions():
    text = (
        "void bad(int n) { while (n) { n = n - 1; } }\n"
        "void good(int n, float a[N]) { for (int i = 0; i < n; i++) a[i] = 0.0; }\n"
    )
    units, diagnostics = parse_unit(SourceUnit("x.c", text))
    assert [u.name for u in units] == ["good"]
    assert len(diagnostics) == 1
    assert diagnostics[0].function == "bad"


def test_duplicate_function_names_quarantine_second():
    text = "void f(int n) { }\nvoid f(int n) { }\n"
    units, diagnostics = parse_unit(SourceUnit("x.c", text))
    assert len(units) == 1
    assert any("duplicate" in d.message for d in diagnostics)


def test_split_functions_counts_braces():
    text = "void a(int n) { if (n > 0) { n = 1; } }  void b(int n) { }"
    chunks = split_functions(tokenize(text))
    assert len(chunks) == 2


def test_diagnostic_carries_position():
    unit = SourceUnit("x.c", "void f(int n) {\n  while (n) { n = n - 1; }\n}")
    _, diagnostics = parse_unit(unit)
    d = diagnostics[0]
    assert isinstance(d, Diagnostic)
    assert d.line == 2
    assert "x.c" in d.render()


# -------------------------------------------------------------------- printer


def test_printer_minimal_parentheses():
    fn = parse_ast(
        "void f(int n, float a[N]) { a[0] = (1.0 + 2.0) * 3.0; a[1] = 1.0 + 2.0 * 3.0; }"
    )
    text = function_text(fn)
    assert "(1.0 + 2.0) * 3.0" in text
    assert "a[1] = 1.0 + 2.0 * 3.0" in text


def test_printer_fixed_point(shortest_paths_source):
    fn = parse_ast(shortest_paths_source)
    once = function_text(fn)
    again = function_text(parse_ast(once))
    assert once == again


def test_printer_round_trip_preserves_ast(shortest_paths_source):
    fn = parse_ast(shortest_paths_source)
    reparsed = parse_ast(function_text(fn))
    assert reparsed.body == fn.body
    assert reparsed.params == fn.params


def test_expr_text_ternary_nesting():
    e = A.Ternary(
        A.Binary("<", A.Name("a"), A.Name("b")),
        A.Name("a"),
        A.Ternary(A.Binary("<", A.Name("b"), A.Name("c")), A.Name("b"), A.Name("c")),
    )
    assert expr_text(e) == "a < b ? a : (b < c ? b : c)"


# ------------------------------------------------------------------ evaluator


def test_interp_scalar_sum():
    fn = parse_ast(
        "float f(int n, float a[N]) {\n"
        "  float s;\n  s = 0.0;\n"
        "  for (int i = 0; i < n; i++) s = s + a[i];\n"
        "  return s;\n}"
    )
    assert call_function(fn, [4, [1.0, 2.0, 3.0, 4.0]]) == 10.0


def test_interp_division_truncates_toward_zero():
    fn = parse_ast("int f(int n) { return n / 2; }")
    assert call_function(fn, [-3]) == -1
    assert call_function(fn, [3]) == 1


def test_interp_comparisons_yield_ints():
    fn = parse_ast("int f(int n) { return n > 2 && n < 5; }")
    assert call_function(fn, [3]) == 1
    assert call_function(fn, [7]) == 0


def test_interp_short_circuit_skips_division_by_zero():
    fn = parse_ast("int f(int n) { return n != 0 && 4 / n > 1; }")
    assert call_function(fn, [0]) == 0


def test_interp_uninitialized_read_fails():
    fn = parse_ast("float f(int n) { float s; return s; }")
    with pytest.raises(EvalError):
        call_function(fn, [1])


def test_interp_2d_array():
    fn = parse_ast(
        "float f(int n, float m[N][N]) {\n"
        "  float s;\n  s = 0.0;\n"
        "  for (int i = 0; i < n; i++) {\n"
        "    for (int j = 0; j < n; j++) s = s + m[i][j];\n"
        "  }\n  return s;\n}"
    )
    assert call_function(fn, [2, [[1.0, 2.0], [3.0, 4.0]]]) == 10.0

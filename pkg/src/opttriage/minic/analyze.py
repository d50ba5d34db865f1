"""Turns parsed functions into countable units.

Counting rules:

* Comparison and boolean connectives count as logical ops, the five
  arithmetic operators as arithmetic ops, and each ``if`` statement or
  conditional expression as one branch.
* Within a single statement, subexpressions with identical canonical text
  are counted once; repeats across statements count again.
* A loop nest's tallies cover every statement inside it but exclude the
  member ``for`` headers entirely (their operators and identifiers), and
  the member loop variables are not reported as scalars.
* Arrays and scalars are distinct-name counts. A name subscripted anywhere
  in the region, or declared as an array parameter, counts as an array.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from opttriage.minic import ast
from opttriage.minic.lexer import LexError, tokenize
from opttriage.minic.parser import Parser, ParseProblem, split_functions
from opttriage.minic.printer import expr_text
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

_LOGICAL_OPS = frozenset({"<", "<=", ">", ">=", "==", "!=", "&&", "||", "!"})
_ARITH_OPS = frozenset({"+", "-", "*", "/", "%"})
_BRANCH_OPS = frozenset({"if", "?:"})
_NEUTRAL_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "++", "--", ",", "[]", "[", "]"})


def classify_operator(token: str) -> str:
    """Map an operator token to "logical", "arith", "branch", or "neither"."""
    if token in _LOGICAL_OPS:
        return "logical"
    if token in _ARITH_OPS:
        return "arith"
    if token in _BRANCH_OPS:
        return "branch"
    if token in _NEUTRAL_OPS:
        return "neither"
    raise ValueError(f"unknown operator: {token!r}")


class AnalysisProblem(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class _UsageCounter:
    """Accumulates op and identifier usage for one region of code."""

    def __init__(self) -> None:
        self.logical = 0
        self.arith = 0
        self.branches = 0
        self.subscripted: set[str] = set()
        self.bare: set[str] = set()

    def count_statement(self, exprs: Iterable[Optional[ast.Expr]]) -> None:
        seen: set[str] = set()  # canonical texts already counted in this statement
        for e in exprs:
            if e is not None:
                self._walk(e, seen)

    def count_if(self) -> None:
        self.branches += 1

    def _tally(self, kind: str, e: ast.Expr, seen: set[str]) -> bool:
        text = expr_text(e)
        if text in seen:
            return False
        seen.add(text)
        if kind == "logical":
            self.logical += 1
        elif kind == "arith":
            self.arith += 1
        elif kind == "branch":
            self.branches += 1
        return True

    def _walk(self, e: ast.Expr, seen: set[str]) -> None:
        if isinstance(e, ast.Num):
            return
        if isinstance(e, ast.Name):
            self.bare.add(e.ident)
            return
        if isinstance(e, ast.Index):
            self.subscripted.add(e.base.ident)
            for s in e.subs:
                self._walk(s, seen)
            return
        if isinstance(e, ast.Unary):
            self._tally(classify_operator(e.op), e, seen)
            self._walk(e.operand, seen)
            return
        if isinstance(e, ast.Binary):
            self._tally(classify_operator(e.op), e, seen)
            self._walk(e.left, seen)
            self._walk(e.right, seen)
            return
        if isinstance(e, ast.Ternary):
            self._tally("branch", e, seen)
            self._walk(e.cond, seen)
            self._walk(e.then, seen)
            self._walk(e.orelse, seen)
            return
        raise TypeError(f"not an expression: {e!r}")

    def finalize(self, declared_arrays: set[str], excluded: set[str]) -> OpCounts:
        arrays = self.subscripted | (self.bare & declared_arrays)
        scalars = self.bare - declared_arrays - self.subscripted - excluded
        return OpCounts(
            logical_ops=self.logical,
            arith_ops=self.arith,
            branches=self.branches,
            arrays=len(arrays),
            scalars=len(scalars),
        )


# ------------------------------------------------------------------ loop trees


@dataclass
class _Loop:
    var: str
    trip: TripCount
    children: list["_Loop"] = field(default_factory=list)


def _const_int(e: ast.Expr) -> Optional[int]:
    if isinstance(e, ast.Num) and isinstance(e.value, int):
        return e.value
    if isinstance(e, ast.Unary) and e.op == "-":
        inner = _const_int(e.operand)
        return None if inner is None else -inner
    return None


def _trip_count(loop: ast.For) -> TripCount:
    step = _const_int(loop.step)
    if step is not None and step <= 0:
        raise AnalysisProblem("unsupported construct: non-positive constant loop step")
    lo = _const_int(loop.init)
    hi = _const_int(loop.bound)
    if lo is None or hi is None or step is None:
        return TripCount.symbolic()
    if loop.bound_op == "<=":
        hi += 1
    span = hi - lo
    if span <= 0:
        return TripCount.known(0)
    return TripCount.known(-(-span // step))


def _loop_depth(loop: _Loop) -> int:
    return 1 + max((_loop_depth(c) for c in loop.children), default=0)


def _trip_path(loop: _Loop) -> list[TripCount]:
    if not loop.children:
        return [loop.trip]
    deepest = max(loop.children, key=_loop_depth)  # first deepest child on ties
    return [loop.trip] + _trip_path(deepest)


class _FunctionScanner:
    def __init__(self, fn: ast.Function):
        self.fn = fn
        self.declared_arrays = {p.name for p in fn.params if p.extents}
        self.declared_names = {p.name for p in fn.params}
        self.header_names: set[str] = set()
        self.loop_vars: set[str] = set()
        self.nonloop = _UsageCounter()
        self.nests: list[LoopNest] = []
        self.min_extent = 0
        self._collect_decls(fn.body)

    def _collect_decls(self, s: ast.Stmt) -> None:
        if isinstance(s, ast.Block):
            for item in s.items:
                self._collect_decls(item)
        elif isinstance(s, ast.Decl):
            self.declared_names.update(s.names)
        elif isinstance(s, ast.If):
            self._collect_decls(s.then)
            if s.orelse is not None:
                self._collect_decls(s.orelse)
        elif isinstance(s, ast.For):
            self._collect_decls(s.body)

    # region outside all loops: each For starts a nest, everything else tallies
    def scan(self) -> None:
        self._scan_region(self.fn.body.items)

    def _scan_region(self, stmts: Iterable[ast.Stmt]) -> None:
        for s in stmts:
            if isinstance(s, ast.For):
                self.nests.append(self._build_nest(s))
            elif isinstance(s, ast.Block):
                self._scan_region(s.items)
            elif isinstance(s, ast.If):
                self.nonloop.count_if()
                self.nonloop.count_statement([s.cond])
                self._scan_region([s.then])
                if s.orelse is not None:
                    self._scan_region([s.orelse])
            elif isinstance(s, ast.Assign):
                self.nonloop.count_statement([s.target, s.value])
            elif isinstance(s, ast.Return):
                self.nonloop.count_statement([s.value])
            elif isinstance(s, ast.Decl):
                pass
            else:
                raise TypeError(f"not a statement: {s!r}")

    def _build_nest(self, outer: ast.For) -> LoopNest:
        counter = _UsageCounter()
        nest_vars: set[str] = set()
        root = self._build_loop(outer, counter, nest_vars)
        return LoopNest(
            depth=_loop_depth(root),
            trip_counts=tuple(_trip_path(root)),
            body_counts=counter.finalize(self.declared_arrays, nest_vars),
        )

    def _build_loop(self, node: ast.For, counter: _UsageCounter, nest_vars: set[str]) -> _Loop:
        nest_vars.add(node.var)
        self.loop_vars.add(node.var)
        for header_expr in (node.init, node.bound, node.step):
            self.header_names.update(_expr_names(header_expr))
        hi = _const_int(node.bound)
        if hi is not None:
            self.min_extent = max(self.min_extent, hi + 1 if node.bound_op == "<=" else hi)
        loop = _Loop(var=node.var, trip=_trip_count(node))
        self._scan_loop_body([node.body], loop, counter, nest_vars)
        return loop

    def _scan_loop_body(
        self,
        stmts: Iterable[ast.Stmt],
        loop: _Loop,
        counter: _UsageCounter,
        nest_vars: set[str],
    ) -> None:
        for s in stmts:
            if isinstance(s, ast.For):
                loop.children.append(self._build_loop(s, counter, nest_vars))
            elif isinstance(s, ast.Block):
                self._scan_loop_body(s.items, loop, counter, nest_vars)
            elif isinstance(s, ast.If):
                counter.count_if()
                counter.count_statement([s.cond])
                self._scan_loop_body([s.then], loop, counter, nest_vars)
                if s.orelse is not None:
                    self._scan_loop_body([s.orelse], loop, counter, nest_vars)
            elif isinstance(s, ast.Assign):
                counter.count_statement([s.target, s.value])
            elif isinstance(s, ast.Return):
                counter.count_statement([s.value])
            elif isinstance(s, ast.Decl):
                pass
            else:
                raise TypeError(f"not a statement: {s!r}")


def _expr_names(e: Optional[ast.Expr]) -> set[str]:
    if e is None or isinstance(e, ast.Num):
        return set()
    if isinstance(e, ast.Name):
        return {e.ident}
    if isinstance(e, ast.Index):
        names = {e.base.ident}
        for s in e.subs:
            names |= _expr_names(s)
        return names
    if isinstance(e, ast.Unary):
        return _expr_names(e.operand)
    if isinstance(e, ast.Binary):
        return _expr_names(e.left) | _expr_names(e.right)
    if isinstance(e, ast.Ternary):
        return _expr_names(e.cond) | _expr_names(e.then) | _expr_names(e.orelse)
    raise TypeError(f"not an expression: {e!r}")


def _max_literal_subscript(s) -> int:
    """Largest literal subscript + 1 anywhere under a statement or expression."""
    need = 0
    if isinstance(s, ast.Index):
        for sub in s.subs:
            if isinstance(sub, ast.Num) and isinstance(sub.value, int):
                need = max(need, sub.value + 1)
            need = max(need, _max_literal_subscript(sub))
        return need
    for attr in ("items", "subs"):
        for child in getattr(s, attr, ()) or ():
            need = max(need, _max_literal_subscript(child))
    for attr in ("cond", "then", "orelse", "left", "right", "operand", "target",
                 "value", "init", "bound", "step", "body"):
        child = getattr(s, attr, None)
        if child is not None and not isinstance(child, (str, int, float)):
            need = max(need, _max_literal_subscript(child))
    return need


def build_function_unit(fn: ast.Function, source_text: str = "") -> FunctionUnit:
    scanner = _FunctionScanner(fn)
    scanner.scan()
    extent_names = {x for p in fn.params for x in p.extents if isinstance(x, str)}
    free = (scanner.header_names | extent_names) - scanner.declared_names - scanner.loop_vars
    params = tuple(ParamInfo(p.name, p.base_type, p.extents) for p in fn.params)
    return FunctionUnit(
        name=fn.name,
        params=params,
        loop_nests=tuple(scanner.nests),
        nonloop_counts=scanner.nonloop.finalize(scanner.declared_arrays, set()),
        return_type=fn.return_type,
        source_text=source_text,
        bound_symbols=tuple(sorted(free)),
        min_extent=max(scanner.min_extent, _max_literal_subscript(fn.body)),
    )


# ------------------------------------------------------------------ front door


def parse_functions(
    src: Union[SourceUnit, str], strict: bool = False
) -> tuple[list[ast.Function], list[Diagnostic]]:
    """Parse a source unit into raw syntax trees with per-function recovery."""
    if isinstance(src, str):
        src = SourceUnit("<source>", src)
    diagnostics: list[Diagnostic] = []

    def report(line: int, col: int, message: str, function: Optional[str]) -> None:
        d = Diagnostic(line, col, message, "error", function=function, path=src.path)
        diagnostics.append(d)
        if strict:
            raise ParseError(d)

    try:
        tokens = tokenize(src.text)
    except LexError as e:
        report(e.line, e.col, e.message, None)
        return [], diagnostics

    functions: list[ast.Function] = []
    for chunk, first in split_functions(tokens):
        guessed = chunk[1].text if len(chunk) > 1 and chunk[1].kind == "ident" else None
        parser = Parser(chunk + [tokens[-1]])
        try:
            functions.append(parser.parse_function())
        except ParseProblem as e:
            report(e.line, e.col, e.message, guessed)
    return functions, diagnostics


def parse_unit(
    src: Union[SourceUnit, str], strict: bool = False
) -> tuple[list[FunctionUnit], list[Diagnostic]]:
    """Parse source text into function units plus diagnostics.

    With ``strict=False``, functions that fail to parse or analyze are
    skipped and described by a Diagnostic; with ``strict=True`` the first
    problem raises ParseError.
    """
    if isinstance(src, str):
        src = SourceUnit("<source>", src)
    functions, diagnostics = parse_functions(src, strict=strict)

    units: list[FunctionUnit] = []
    seen_names: set[str] = set()
    for fn in functions:
        start, end = fn.span
        line = 1 + src.text.count("\n", 0, start)
        col = start - (src.text.rfind("\n", 0, start) + 1) + 1
        problem: Optional[str] = None
        if fn.name in seen_names:
            problem = f"duplicate function name {fn.name!r}"
        else:
            try:
                units.append(build_function_unit(fn, source_text=src.text[start:end]))
                seen_names.add(fn.name)
            except AnalysisProblem as e:
                problem = e.message
        if problem is not None:
            d = Diagnostic(line, col, problem, "error", function=fn.name, path=src.path)
            diagnostics.append(d)
            if strict:
                raise ParseError(d)
    return units, diagnostics

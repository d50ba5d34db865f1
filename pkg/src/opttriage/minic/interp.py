"""Direct evaluator for the supported C subset.

Used for differential testing: exported decision code must agree with the
in-memory model, and this evaluator is the reference executor for that
check. Semantics follow C where the subset allows: int/int division
truncates toward zero, comparisons yield 0 or 1, and ``&&``/``||``
short-circuit.
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

from opttriage.minic import ast

Number = Union[int, float]


class EvalError(Exception):
    pass


class _Return(Exception):
    def __init__(self, value: Optional[Number]):
        self.value = value


_UNINITIALIZED = object()


def _c_div(a: Number, b: Number) -> Number:
    if b == 0:
        raise EvalError("division by zero")
    if isinstance(a, int) and isinstance(b, int):
        q = abs(a) // abs(b)
        return q if (a >= 0) == (b >= 0) else -q
    return a / b

def _c_mod(a: Number, b: Number) -> Number:
    if not (isinstance(a, int) and isinstance(b, int)):
        raise EvalError("'%' needs integer operands")
    if b == 0:
        raise EvalError("division by zero")
    return a - _c_div(a, b) * b


class _Frame:
    def __init__(self, max_steps: Optional[int]):
        self.vars: dict[str, object] = {}
        self.steps = 0
        self.max_steps = max_steps

    def tick(self) -> None:
        self.steps += 1
        if self.max_steps is not None and self.steps > self.max_steps:
            raise EvalError("step budget exceeded")


def call_function(
    fn: ast.Function,
    args: Sequence[object],
    max_steps: Optional[int] = None,
) -> Optional[Number]:
    """Run a function on concrete arguments and return its result.

    Scalar parameters take numbers; array parameters take (nested) mutable
    sequences, which the caller sees mutated in place.
    """
    if len(args) != len(fn.params):
        raise EvalError(f"{fn.name} expects {len(fn.params)} arguments, got {len(args)}")
    frame = _Frame(max_steps)
    for p, a in zip(fn.params, args):
        frame.vars[p.name] = a
    try:
        _exec(fn.body, frame)
    except _Return as r:
        return r.value
    return None


def _exec(s: ast.Stmt, frame: _Frame) -> None:
    frame.tick()
    if isinstance(s, ast.Block):
        for item in s.items:
            _exec(item, frame)
    elif isinstance(s, ast.Decl):
        for name in s.names:
            frame.vars[name] = _UNINITIALIZED
    elif isinstance(s, ast.Assign):
        value = _eval(s.value, frame)
        _store(s.target, value, frame)
    elif isinstance(s, ast.If):
        if _eval(s.cond, frame) != 0:
            _exec(s.then, frame)
        elif s.orelse is not None:
            _exec(s.orelse, frame)
    elif isinstance(s, ast.For):
        frame.vars[s.var] = _eval(s.init, frame)
        while True:
            frame.tick()
            var = _load_name(s.var, frame)
            bound = _eval(s.bound, frame)
            keep = var <= bound if s.bound_op == "<=" else var < bound
            if not keep:
                break
            _exec(s.body, frame)
            frame.vars[s.var] = _load_name(s.var, frame) + _eval(s.step, frame)
    elif isinstance(s, ast.Return):
        raise _Return(None if s.value is None else _eval(s.value, frame))
    else:
        raise TypeError(f"not a statement: {s!r}")


def _load_name(name: str, frame: _Frame) -> object:
    if name not in frame.vars:
        raise EvalError(f"undefined variable {name!r}")
    value = frame.vars[name]
    if value is _UNINITIALIZED:
        raise EvalError(f"read of uninitialized variable {name!r}")
    return value


def _subscript(e: ast.Index, frame: _Frame) -> tuple[object, int]:
    container = _load_name(e.base.ident, frame)
    for sub in e.subs[:-1]:
        i = _eval(sub, frame)
        if not isinstance(i, int):
            raise EvalError("array subscript must be an int")
        container = container[i]
    last = _eval(e.subs[-1], frame)
    if not isinstance(last, int):
        raise EvalError("array subscript must be an int")
    return container, last


def _store(target: Union[ast.Name, ast.Index], value: Number, frame: _Frame) -> None:
    if isinstance(target, ast.Name):
        frame.vars[target.ident] = value
        return
    container, i = _subscript(target, frame)
    try:
        container[i] = value  # type: ignore[index]
    except (IndexError, TypeError) as e:
        raise EvalError(f"bad array store into {target.base.ident!r}: {e}") from e


def _eval(e: ast.Expr, frame: _Frame) -> Number:
    if isinstance(e, ast.Num):
        return e.value
    if isinstance(e, ast.Name):
        value = _load_name(e.ident, frame)
        if not isinstance(value, (int, float)):
            raise EvalError(f"{e.ident!r} is not a scalar")
        return value
    if isinstance(e, ast.Index):
        container, i = _subscript(e, frame)
        try:
            value = container[i]  # type: ignore[index]
        except (IndexError, TypeError) as err:
            raise EvalError(f"bad array read from {e.base.ident!r}: {err}") from err
        if not isinstance(value, (int, float)):
            raise EvalError(f"{e.base.ident!r} element is not a scalar")
        return value
    if isinstance(e, ast.Unary):
        if e.op == "-":
            return -_eval(e.operand, frame)
        return 1 if _eval(e.operand, frame) == 0 else 0
    if isinstance(e, ast.Binary):
        if e.op == "&&":
            return 1 if (_eval(e.left, frame) != 0 and _eval(e.right, frame) != 0) else 0
        if e.op == "||":
            return 1 if (_eval(e.left, frame) != 0 or _eval(e.right, frame) != 0) else 0
        a = _eval(e.left, frame)
        b = _eval(e.right, frame)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return _c_div(a, b)
        if e.op == "%":
            return _c_mod(a, b)
        if e.op == "<":
            return 1 if a < b else 0
        if e.op == "<=":
            return 1 if a <= b else 0
        if e.op == ">":
            return 1 if a > b else 0
        if e.op == ">=":
            return 1 if a >= b else 0
        if e.op == "==":
            return 1 if a == b else 0
        if e.op == "!=":
            return 1 if a != b else 0
        raise TypeError(f"unknown operator {e.op!r}")
    if isinstance(e, ast.Ternary):
        if _eval(e.cond, frame) != 0:
            return _eval(e.then, frame)
        return _eval(e.orelse, frame)
    raise TypeError(f"not an expression: {e!r}")

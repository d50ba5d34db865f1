"""Syntax tree for the supported C subset.

Node equality ignores source spans so that a parse -> print -> parse round
trip compares equal structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Num:
    value: Union[int, float]


@dataclass(frozen=True)
class Name:
    ident: str


@dataclass(frozen=True)
class Index:
    base: Name
    subs: tuple["Expr", ...]  # one or two subscripts


@dataclass(frozen=True)
class Unary:
    op: str  # "-" | "!"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Ternary:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"


Expr = Union[Num, Name, Index, Unary, Binary, Ternary]


# ----------------------------------------------------------------- statements


@dataclass(frozen=True)
class Decl:
    base_type: str  # "int" | "float"
    names: tuple[str, ...]


@dataclass(frozen=True)
class Assign:
    target: Union[Name, Index]
    value: Expr


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    orelse: Optional["Stmt"] = None


@dataclass(frozen=True)
class For:
    var: str
    init: Expr
    bound_op: str  # "<" | "<="
    bound: Expr
    step: Expr  # increment added to var each iteration
    body: "Stmt"


@dataclass(frozen=True)
class Return:
    value: Optional[Expr] = None


@dataclass(frozen=True)
class Block:
    items: tuple["Stmt", ...]


Stmt = Union[Decl, Assign, If, For, Return, Block]


# ------------------------------------------------------------------ top level


Extent = Union[int, str]  # literal size or a symbolic name


@dataclass(frozen=True)
class ParamDecl:
    name: str
    base_type: str  # "int" | "float"
    extents: tuple[Extent, ...] = ()


@dataclass(frozen=True)
class Function:
    name: str
    return_type: str  # "void" | "int" | "float"
    params: tuple[ParamDecl, ...]
    body: Block
    span: tuple[int, int] = field(default=(0, 0), compare=False)  # text offsets


@dataclass(frozen=True)
class Program:
    functions: tuple[Function, ...]

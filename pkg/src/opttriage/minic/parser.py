"""Recursive-descent parser for the supported C subset.

The grammar covers what the rest of the pipeline can analyze and drive:
function definitions over int/float scalars and 1-D/2-D arrays, counted
``for`` loops with a single loop variable, if/else, assignment statements
(compound assignments are desugared), return, and side-effect-free
expressions built from arithmetic, comparison, and logical operators plus
the conditional operator. Anything else is reported as an unsupported
construct; there is no semantic checking.
"""

from __future__ import annotations

from opttriage.minic import ast
from opttriage.minic.lexer import KEYWORDS, RESERVED_UNSUPPORTED, Token

_TYPE_WORDS = ("void", "int", "float")
_COMPOUND_ASSIGN = {"+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%"}


class ParseProblem(Exception):
    """Internal signal for a parse failure inside one function."""

    def __init__(self, message: str, token: Token):
        super().__init__(f"{token.line}:{token.col}: {message}")
        self.message = message
        self.line = token.line
        self.col = token.col


def _unsupported(what: str, token: Token) -> ParseProblem:
    return ParseProblem(f"unsupported construct: {what}", token)


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0

    # ------------------------------------------------------------- utilities

    def peek(self, ahead: int = 0) -> Token:
        i = min(self.pos + ahead, len(self.toks) - 1)
        return self.toks[i]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("punct", "kw")

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text:
            shown = t.text if t.text else "end of input"
            raise ParseProblem(f"expected {text!r}, found {shown!r}", t)
        return self.next()

    def expect_ident(self) -> Token:
        t = self.peek()
        if t.kind != "ident":
            if t.kind == "kw" and t.text in RESERVED_UNSUPPORTED:
                raise _unsupported(f"{t.text!r} keyword", t)
            raise ParseProblem(f"expected identifier, found {t.text!r}", t)
        return self.next()

    # ------------------------------------------------------------- functions

    def parse_function(self) -> ast.Function:
        ret_tok = self.peek()
        if ret_tok.text not in _TYPE_WORDS:
            if ret_tok.kind == "kw" and ret_tok.text in RESERVED_UNSUPPORTED:
                raise _unsupported(f"{ret_tok.text!r} type", ret_tok)
            raise ParseProblem("expected a function definition", ret_tok)
        self.next()
        name = self.expect_ident()
        self.expect("(")
        params = self.parse_params()
        self.expect(")")
        if self.at(";"):
            raise _unsupported("function declaration without a body", self.peek())
        open_tok = self.peek()
        body = self.parse_block()
        end = self.toks[self.pos - 1]
        _ = open_tok
        return ast.Function(
            name=name.text,
            return_type=ret_tok.text,
            params=tuple(params),
            body=body,
            span=(ret_tok.offset, end.offset + len(end.text)),
        )

    def parse_params(self) -> list[ast.ParamDecl]:
        if self.at(")"):
            return []
        if self.at("void") and self.peek(1).text == ")":
            self.next()
            return []
        params = [self.parse_param()]
        while self.at(","):
            self.next()
            params.append(self.parse_param())
        return params

    def parse_param(self) -> ast.ParamDecl:
        t = self.peek()
        if t.text not in ("int", "float"):
            if t.kind == "kw":
                raise _unsupported(f"{t.text!r} parameter type", t)
            raise ParseProblem(f"expected parameter type, found {t.text!r}", t)
        self.next()
        if self.at("*"):
            raise _unsupported("pointer parameter", self.peek())
        name = self.expect_ident()
        extents: list[ast.Extent] = []
        while self.at("["):
            if len(extents) == 2:
                raise _unsupported("array with more than two dimensions", self.peek())
            self.next()
            ext = self.peek()
            if ext.kind == "num" and isinstance(ext.value, int):
                extents.append(ext.value)
                self.next()
            elif ext.kind == "ident":
                extents.append(ext.text)
                self.next()
            else:
                raise ParseProblem("expected array extent", ext)
            self.expect("]")
        return ast.ParamDecl(name=name.text, base_type=t.text, extents=tuple(extents))

    # ------------------------------------------------------------- statements

    def parse_block(self) -> ast.Block:
        self.expect("{")
        items: list[ast.Stmt] = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                raise ParseProblem("unterminated block", self.peek())
            items.append(self.parse_statement())
        self.expect("}")
        return ast.Block(tuple(items))

    def parse_statement(self) -> ast.Stmt:
        t = self.peek()
        if t.text == "{":
            return self.parse_block()
        if t.text == ";":
            self.next()
            return ast.Block(())
        if t.text in ("int", "float"):
            return self.parse_decl()
        if t.text == "for":
            return self.parse_for()
        if t.text == "if":
            return self.parse_if()
        if t.text == "return":
            self.next()
            if self.at(";"):
                self.next()
                return ast.Return(None)
            value = self.parse_expr()
            self.expect(";")
            return ast.Return(value)
        if t.kind == "kw" and t.text in RESERVED_UNSUPPORTED:
            raise _unsupported(f"{t.text!r} statement", t)
        if t.kind == "ident" or t.text == "void":
            return self.parse_assignment()
        raise ParseProblem(f"expected a statement, found {t.text!r}", t)

    def parse_decl(self) -> ast.Decl:
        base = self.next().text
        if self.at("*"):
            raise _unsupported("pointer declaration", self.peek())
        names = [self.expect_ident().text]
        if self.at("["):
            raise _unsupported("local array declaration", self.peek())
        if self.at("="):
            raise _unsupported("initializer in declaration", self.peek())
        while self.at(","):
            self.next()
            names.append(self.expect_ident().text)
            if self.at("[") or self.at("="):
                raise _unsupported("local array declaration or initializer", self.peek())
        self.expect(";")
        return ast.Decl(base_type=base, names=tuple(names))

    def parse_assignment(self) -> ast.Assign:
        target = self.parse_postfix()
        if not isinstance(target, (ast.Name, ast.Index)):
            raise ParseProblem("expected an assignable location", self.peek())
        op = self.peek()
        if op.text == "=":
            self.next()
            value = self.parse_expr()
        elif op.text in _COMPOUND_ASSIGN:
            self.next()
            rhs = self.parse_expr()
            value = ast.Binary(_COMPOUND_ASSIGN[op.text], target, rhs)
        elif op.text in ("++", "--"):
            self.next()
            value = ast.Binary(op.text[0], target, ast.Num(1))
        else:
            if op.text == "(":
                raise _unsupported("function call", op)
            raise ParseProblem(f"expected an assignment operator, found {op.text!r}", op)
        self.expect(";")
        return ast.Assign(target=target, value=value)

    def parse_if(self) -> ast.If:
        self.expect("if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_statement()
        orelse = None
        if self.at("else"):
            self.next()
            orelse = self.parse_statement()
        return ast.If(cond=cond, then=then, orelse=orelse)

    def parse_for(self) -> ast.For:
        self.expect("for")
        self.expect("(")
        if self.at("int"):  # C99-style declarator in the header
            self.next()
        elif self.at("float"):
            raise _unsupported("non-integer loop variable", self.peek())
        var = self.expect_ident()
        self.expect("=")
        init = self.parse_expr()
        self.expect(";")
        cmp_var = self.expect_ident()
        if cmp_var.text != var.text:
            raise _unsupported("loop condition on a different variable", cmp_var)
        rel = self.peek()
        if rel.text not in ("<", "<="):
            raise _unsupported(f"loop condition with {rel.text!r}", rel)
        self.next()
        bound = self.parse_expr()
        self.expect(";")
        step = self.parse_for_step(var.text)
        self.expect(")")
        body = self.parse_statement()
        return ast.For(
            var=var.text, init=init, bound_op=rel.text, bound=bound, step=step, body=body
        )

    def parse_for_step(self, var: str) -> ast.Expr:
        t = self.peek()
        if t.text == "++":  # prefix
            self.next()
            inc_var = self.expect_ident()
            if inc_var.text != var:
                raise _unsupported("loop increment on a different variable", inc_var)
            return ast.Num(1)
        inc_var = self.expect_ident()
        if inc_var.text != var:
            raise _unsupported("loop increment on a different variable", inc_var)
        op = self.peek()
        if op.text == "++":
            self.next()
            return ast.Num(1)
        if op.text == "+=":
            self.next()
            return self.parse_expr()
        if op.text == "=":
            self.next()
            lhs = self.expect_ident()
            if lhs.text != var or not self.at("+"):
                raise _unsupported("non-incrementing loop step", op)
            self.next()
            return self.parse_expr()
        if op.text in ("--", "-="):
            raise _unsupported("decrementing loop step", op)
        raise _unsupported(f"loop step with {op.text!r}", op)

    # ------------------------------------------------------------ expressions

    def parse_expr(self) -> ast.Expr:
        return self.parse_ternary()

    def parse_ternary(self) -> ast.Expr:
        cond = self.parse_or()
        if self.at("?"):
            self.next()
            then = self.parse_expr()
            self.expect(":")
            orelse = self.parse_ternary()
            return ast.Ternary(cond=cond, then=then, orelse=orelse)
        return cond

    def parse_or(self) -> ast.Expr:
        left = self.parse_and()
        while self.at("||"):
            self.next()
            left = ast.Binary("||", left, self.parse_and())
        return left

    def parse_and(self) -> ast.Expr:
        left = self.parse_equality()
        while self.at("&&"):
            self.next()
            left = ast.Binary("&&", left, self.parse_equality())
        return left

    def parse_equality(self) -> ast.Expr:
        left = self.parse_relational()
        while self.peek().text in ("==", "!="):
            op = self.next().text
            left = ast.Binary(op, left, self.parse_relational())
        return left

    def parse_relational(self) -> ast.Expr:
        left = self.parse_additive()
        while self.peek().text in ("<", "<=", ">", ">="):
            op = self.next().text
            left = ast.Binary(op, left, self.parse_additive())
        return left

    def parse_additive(self) -> ast.Expr:
        left = self.parse_multiplicative()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            left = ast.Binary(op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self) -> ast.Expr:
        left = self.parse_unary()
        while self.peek().text in ("*", "/", "%"):
            op = self.next().text
            left = ast.Binary(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> ast.Expr:
        t = self.peek()
        if t.text == "-":
            self.next()
            return ast.Unary("-", self.parse_unary())
        if t.text == "!":
            self.next()
            return ast.Unary("!", self.parse_unary())
        if t.text in ("&", "*", "~", "++", "--"):
            raise _unsupported(f"unary {t.text!r}", t)
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        base = self.parse_primary()
        if self.at("["):
            if not isinstance(base, ast.Name):
                raise ParseProblem("only named arrays can be subscripted", self.peek())
            subs: list[ast.Expr] = []
            while self.at("["):
                if len(subs) == 2:
                    raise _unsupported("more than two subscripts", self.peek())
                self.next()
                subs.append(self.parse_expr())
                self.expect("]")
            return ast.Index(base=base, subs=tuple(subs))
        if self.at("(") and isinstance(base, ast.Name):
            raise _unsupported("function call", self.peek())
        if self.at("."):
            raise _unsupported("member access", self.peek())
        return base

    def parse_primary(self) -> ast.Expr:
        t = self.peek()
        if t.kind == "num":
            self.next()
            return ast.Num(t.value)  # type: ignore[arg-type]
        if t.kind == "ident":
            self.next()
            return ast.Name(t.text)
        if t.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if t.kind == "kw" and t.text in RESERVED_UNSUPPORTED:
            raise _unsupported(f"{t.text!r} in expression", t)
        shown = t.text if t.text else "end of input"
        raise ParseProblem(f"expected an expression, found {shown!r}", t)


def split_functions(tokens: list[Token]) -> list[tuple[list[Token], Token]]:
    """Segment a token stream into per-function chunks by brace matching.

    Returns (chunk tokens, first token) pairs. Chunks that never open a
    body brace end at the next top-level type keyword so one malformed
    definition cannot swallow the rest of the file.
    """
    chunks = []
    i = 0
    n = len(tokens)
    while i < n and tokens[i].kind != "eof":
        start = i
        depth = 0
        opened = False
        j = i
        while j < n and tokens[j].kind != "eof":
            t = tokens[j]
            if t.text == "{":
                depth += 1
                opened = True
            elif t.text == "}":
                depth -= 1
                if opened and depth == 0:
                    j += 1
                    break
            elif not opened and j > start and t.text in _TYPE_WORDS and tokens[j - 1].text in (";", "}"):
                break
            j += 1
        chunks.append((tokens[start:j], tokens[start]))
        i = j
    return chunks


def parse_program(tokens: list[Token]) -> ast.Program:
    """Parse a whole token stream, raising on the first problem."""
    functions = []
    for chunk, _first in split_functions(tokens):
        p = Parser(chunk + [tokens[-1]])
        functions.append(p.parse_function())
        trailing = p.peek()
        if trailing.kind != "eof" and p.pos < len(chunk):
            raise ParseProblem(f"unexpected {trailing.text!r} after function", trailing)
    return ast.Program(tuple(functions))

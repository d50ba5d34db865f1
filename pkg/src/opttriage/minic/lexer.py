"""Tokenizer for the supported C subset."""

from dataclasses import dataclass, field

KEYWORDS = frozenset({"void", "int", "float", "for", "if", "else", "return"})

# Recognized so the parser can name the construct in its diagnostic instead of
# reporting a generic bad token.
RESERVED_UNSUPPORTED = frozenset(
    {
        "while",
        "do",
        "goto",
        "switch",
        "case",
        "default",
        "break",
        "continue",
        "struct",
        "union",
        "enum",
        "typedef",
        "static",
        "extern",
        "const",
        "volatile",
        "unsigned",
        "signed",
        "long",
        "short",
        "double",
        "char",
        "sizeof",
    }
)

_TWO_CHAR = (
    "<=",
    ">=",
    "==",
    "!=",
    "&&",
    "||",
    "+=",
    "-=",
    "*=",
    "/=",
    "%=",
    "++",
    "--",
    "->",
)
_ONE_CHAR = set("+-*/%<>=!?:;,()[]{}&|^~.")


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "num" | "kw" | "punct" | "eof"
    text: str
    line: int
    col: int
    offset: int
    value: object = field(default=None, compare=False)  # int or float for "num"


def tokenize(text: str) -> list[Token]:
    """Split source text into tokens, skipping whitespace and comments."""
    toks: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n\f\v":
            advance(1)
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            advance((j if j != -1 else n) - i)
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j == -1:
                raise LexError("unterminated comment", line, col)
            advance(j + 2 - i)
            continue
        tok_line, tok_col, tok_off = line, col, i
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "kw" if (word in KEYWORDS or word in RESERVED_UNSUPPORTED) else "ident"
            toks.append(Token(kind, word, tok_line, tok_col, tok_off))
            advance(j - i)
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            is_float = False
            if j < n and text[j] == ".":
                is_float = True
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    is_float = True
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            if j < n and text[j] in "fF":
                is_float = True
                lexeme = text[i:j]
                j += 1
            else:
                lexeme = text[i:j]
            value: object = float(lexeme) if is_float else int(lexeme)
            toks.append(Token("num", text[i:j], tok_line, tok_col, tok_off, value))
            advance(j - i)
            continue
        two = text[i : i + 2]
        if two in _TWO_CHAR:
            toks.append(Token("punct", two, tok_line, tok_col, tok_off))
            advance(2)
            continue
        if ch in _ONE_CHAR:
            toks.append(Token("punct", ch, tok_line, tok_col, tok_off))
            advance(1)
            continue
        if ch in "\"'":
            raise LexError("string and character literals are not supported", line, col)
        raise LexError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col, n))
    return toks

"""Cell formula language: parsing, canonical formatting, dependency extraction.

Grammar (whitespace insignificant, standard precedence, left-associative):

    formula := "=" expr
    expr    := term (("+"|"-") term)*
    term    := unary (("*"|"/") unary)*
    unary   := "-" unary | primary
    primary := number | cellref | "[" ident "]"
             | ident "(" [expr ("," expr)*] ")" | "(" expr ")"

Cell columns run A..Z then AA..ZZ (bijective base 26); attribute references
are written in square brackets, e.g. ``[TradePrice]``. Unknown function names
and wrong arities are rejected at parse time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .values import AGGREGATE_FUNCTIONS

# All current functions take exactly one argument.
FUNCTION_ARITY = {name: 1 for name in AGGREGATE_FUNCTIONS}

MAX_COLUMN = 26 + 26 * 26  # ZZ


class FormulaParseError(ValueError):
    """Parse failure; position is the 1-based character offset in the input."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.message = message
        self.position = position


@dataclass(frozen=True, order=True)
class CellAddress:
    """A grid cell address such as A1; ordering is row-major (row, column)."""

    row: int
    col: int

    def __post_init__(self) -> None:
        if self.row < 1:
            raise ValueError("row must be >= 1")
        if not 1 <= self.col <= MAX_COLUMN:
            raise ValueError("column out of range A..ZZ")

    @classmethod
    def parse(cls, text: str) -> "CellAddress":
        m = re.fullmatch(r"([A-Za-z]{1,2})([0-9]+)", text)
        if m is None:
            raise ValueError(f"invalid cell address {text!r}")
        return cls(row=int(m.group(2)), col=column_number(m.group(1).upper()))

    def __str__(self) -> str:
        return f"{column_letters(self.col)}{self.row}"


def column_number(letters: str) -> int:
    n = 0
    for ch in letters:
        n = n * 26 + (ord(ch) - ord("A") + 1)
    return n


def column_letters(n: int) -> str:
    letters = ""
    while n > 0:
        n, rem = divmod(n - 1, 26)
        letters = chr(ord("A") + rem) + letters
    return letters


class FormulaAst:
    __slots__ = ()


@dataclass(frozen=True)
class Number(FormulaAst):
    value: float


@dataclass(frozen=True)
class CellRef(FormulaAst):
    address: CellAddress


@dataclass(frozen=True)
class AttrRef(FormulaAst):
    name: str  # case preserved; matching is case-insensitive


@dataclass(frozen=True)
class BinOp(FormulaAst):
    op: str
    left: FormulaAst
    right: FormulaAst


@dataclass(frozen=True)
class Neg(FormulaAst):
    child: FormulaAst


@dataclass(frozen=True)
class Call(FormulaAst):
    fn: str  # stored uppercase
    args: tuple[FormulaAst, ...]


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER | IDENT | one of + - * / ( ) [ ] , | END
    text: str
    pos: int  # 1-based


_NUMBER_RE = re.compile(r"[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_CELL_RE = re.compile(r"([A-Za-z]{1,2})([0-9]+)\Z")


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        pos = i + 1
        if ch in "+-*/()[],":
            tokens.append(_Token(ch, ch, pos))
            i += 1
            continue
        if ch.isdigit():
            m = _NUMBER_RE.match(text, i)
            assert m is not None
            tokens.append(_Token("NUMBER", m.group(0), pos))
            i = m.end()
            continue
        m = _IDENT_RE.match(text, i)
        if m is not None:
            tokens.append(_Token("IDENT", m.group(0), pos))
            i = m.end()
            continue
        raise FormulaParseError(f"unexpected character {ch!r}", pos)
    tokens.append(_Token("END", "", n + 1))
    return tokens


@dataclass
class _Parser:
    tokens: list[_Token]
    index: int = field(default=0)

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise FormulaParseError(f"expected {kind!r}", tok.pos)
        return self.advance()

    def expr(self) -> FormulaAst:
        node = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> FormulaAst:
        node = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.advance().kind
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> FormulaAst:
        if self.peek().kind == "-":
            self.advance()
            return Neg(self.unary())
        return self.primary()

    def primary(self) -> FormulaAst:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            value = float(tok.text)
            if value == float("inf"):  # overflowed literal, e.g. 1e999
                raise FormulaParseError("number literal out of range", tok.pos)
            return Number(value)
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "[":
            self.advance()
            name = self.expect("IDENT")
            self.expect("]")
            return AttrRef(name.text)
        if tok.kind == "IDENT":
            self.advance()
            m = _CELL_RE.fullmatch(tok.text)
            if m is not None:
                row = int(m.group(2))
                if row < 1:
                    raise FormulaParseError("cell row must be >= 1", tok.pos)
                return CellRef(CellAddress(row=row, col=column_number(m.group(1).upper())))
            if self.peek().kind == "(":
                return self.call(tok)
            raise FormulaParseError(f"unknown reference {tok.text!r}", tok.pos)
        raise FormulaParseError("expected a number, cell, attribute or function", tok.pos)

    def call(self, name: _Token) -> FormulaAst:
        fn = name.text.upper()
        if fn not in FUNCTION_ARITY:
            raise FormulaParseError(f"unknown function {name.text!r}", name.pos)
        self.expect("(")
        args: list[FormulaAst] = []
        if self.peek().kind != ")":
            args.append(self.expr())
            while self.peek().kind == ",":
                self.advance()
                args.append(self.expr())
        self.expect(")")
        if len(args) != FUNCTION_ARITY[fn]:
            raise FormulaParseError(
                f"{fn} takes {FUNCTION_ARITY[fn]} argument(s), got {len(args)}", name.pos
            )
        return Call(fn, tuple(args))


def parse(text: str) -> FormulaAst:
    """Parse a formula string (must start with '='); raises FormulaParseError."""
    if not isinstance(text, str) or not text.lstrip().startswith("="):
        raise FormulaParseError("formula must start with '='", 1)
    eq = text.index("=")
    tokens = _tokenize(text[eq + 1 :])
    # Token positions are relative to the text after '='; shift to absolute.
    tokens = [_Token(t.kind, t.text, t.pos + eq + 1) for t in tokens]
    parser = _Parser(tokens)
    node = parser.expr()
    end = parser.peek()
    if end.kind != "END":
        raise FormulaParseError(f"unexpected trailing input {end.text!r}", end.pos)
    return node


# Precedence levels used for minimal parenthesisation.
_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 3
_PREC_ATOM = 4


def _prec(node: FormulaAst) -> int:
    if isinstance(node, BinOp):
        return _PREC_ADD if node.op in ("+", "-") else _PREC_MUL
    if isinstance(node, Neg):
        return _PREC_NEG
    return _PREC_ATOM


def _fmt_number(value: float) -> str:
    if value.is_integer():
        return str(int(value))
    return repr(value)


def format_formula(ast: FormulaAst) -> str:
    """Render an AST to canonical text: '=' prefix, no whitespace, minimal parens."""
    return "=" + _fmt(ast)


def _fmt(node: FormulaAst) -> str:
    if isinstance(node, Number):
        return _fmt_number(node.value)
    if isinstance(node, CellRef):
        return str(node.address)
    if isinstance(node, AttrRef):
        return f"[{node.name}]"
    if isinstance(node, Call):
        return f"{node.fn}({','.join(_fmt(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = _fmt(node.child)
        if isinstance(node.child, BinOp):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        prec = _prec(node)
        left = _fmt(node.left)
        if _prec(node.left) < prec:
            left = f"({left})"
        right = _fmt(node.right)
        # Left-associative grammar: an equal-precedence right child needs
        # parens to survive a round trip.
        if _prec(node.right) <= prec:
            right = f"({right})"
        return f"{left}{node.op}{right}"
    raise TypeError(f"not a formula node: {node!r}")


def dependencies(ast: FormulaAst) -> tuple[set[CellAddress], set[str]]:
    """Exact sets of cell and attribute references appearing in the tree."""
    cells: set[CellAddress] = set()
    attrs: set[str] = set()
    stack = [ast]
    while stack:
        node = stack.pop()
        if isinstance(node, CellRef):
            cells.add(node.address)
        elif isinstance(node, AttrRef):
            attrs.add(node.name)
        elif isinstance(node, BinOp):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Neg):
            stack.append(node.child)
        elif isinstance(node, Call):
            stack.extend(node.args)
    return cells, attrs

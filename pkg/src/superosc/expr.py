"""A small expression language over the sl(2) generators.

Expressions are rational functions of the reserved symbols ``Jm``, ``Jp``,
``J3`` and named parameters, e.g.::

    Jp/2 + (omega^2/2)*Jm
    (Jp + omega^2*Jm)/(a + Jm)

Grammar (precedence low to high): additive ``+ -``; multiplicative
``* /``; unary minus; power ``^`` with an integer-literal exponent
(optionally negative, optionally parenthesised); atoms are numbers,
symbols and parenthesised subexpressions.  Whitespace is insignificant.

Any parsed expression, evaluated on the generator realisation, commutes
with the full set of chain integrals -- that is the point of restricting
user Hamiltonians to this symbol algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ExprDomainError,
    ExprExponentError,
    ExprNameError,
    ExprSyntaxError,
)
from .phase import Observable, coalgebra_observable

__all__ = [
    "RESERVED_SYMBOLS",
    "Num",
    "Sym",
    "Neg",
    "BinOp",
    "Pow",
    "parse",
    "unparse",
    "symbols_of",
    "eval_generators",
    "eval_jet",
    "expression_observable",
]

RESERVED_SYMBOLS = ("Jm", "Jp", "J3")


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Node:
    pass


@dataclass(frozen=True)
class Num(Node):
    value: float
    pos: tuple[int, int] = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Sym(Node):
    name: str
    pos: tuple[int, int] = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Neg(Node):
    operand: Node
    pos: tuple[int, int] = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class BinOp(Node):
    op: str  # one of + - * /
    lhs: Node
    rhs: Node
    pos: tuple[int, int] = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int
    pos: tuple[int, int] = field(default=(1, 1), compare=False)


# ---------------------------------------------------------------------------
# Tokenizer

@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    pos: tuple[int, int]
    is_integer: bool = False


_OPS = set("+-*/^()")


def _tokenize(src: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    while i < len(src):
        ch = src[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        pos = (line, col)
        if ch.isdigit() or (ch == "." and i + 1 < len(src) and src[i + 1].isdigit()):
            j = i
            seen_dot = False
            seen_exp = False
            while j < len(src):
                c = src[j]
                if c.isdigit():
                    j += 1
                elif c == "." and not seen_dot and not seen_exp:
                    seen_dot = True
                    j += 1
                elif c in "eE" and not seen_exp and j + 1 < len(src) and (
                        src[j + 1].isdigit() or (src[j + 1] in "+-" and j + 2 < len(src)
                                                 and src[j + 2].isdigit())):
                    seen_exp = True
                    j += 2 if src[j + 1] in "+-" else 1
                else:
                    break
            text = src[i:j]
            tokens.append(_Token("number", text, pos,
                                 is_integer=not seen_dot and not seen_exp))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(_Token("name", src[i:j], pos))
            col += j - i
            i = j
            continue
        if ch in _OPS:
            tokens.append(_Token("op", ch, pos))
            col += 1
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("end", "", (line, col)))
    return tokens


# ---------------------------------------------------------------------------
# Parser (recursive descent)

class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def match_op(self, *ops: str) -> _Token | None:
        tok = self.peek()
        if tok.kind == "op" and tok.text in ops:
            return self.advance()
        return None

    def expect_op(self, op: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            raise ExprSyntaxError(f"expected {op!r}, found {tok.text or 'end of input'!r}",
                                  *tok.pos)
        return self.advance()

    def additive(self) -> Node:
        node = self.multiplicative()
        while (tok := self.match_op("+", "-")) is not None:
            node = BinOp(tok.text, node, self.multiplicative(), tok.pos)
        return node

    def multiplicative(self) -> Node:
        node = self.unary()
        while (tok := self.match_op("*", "/")) is not None:
            node = BinOp(tok.text, node, self.unary(), tok.pos)
        return node

    def unary(self) -> Node:
        if (tok := self.match_op("-")) is not None:
            return Neg(self.unary(), tok.pos)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if (tok := self.match_op("^")) is not None:
            exponent = self.exponent()
            return Pow(base, exponent, tok.pos)
        return base

    def exponent(self) -> int:
        sign = 1
        if self.match_op("-") is not None:
            sign = -1
        tok = self.peek()
        if tok.kind == "op" and tok.text == "(" and sign == 1:
            self.advance()
            value = self.exponent()
            self.expect_op(")")
            return value
        if tok.kind != "number":
            raise ExprExponentError(
                f"exponent must be an integer literal, found {tok.text or 'end of input'!r}",
                *tok.pos)
        if not tok.is_integer:
            raise ExprExponentError(
                f"exponent must be an integer literal, found {tok.text!r}", *tok.pos)
        self.advance()
        return sign * int(tok.text)

    def atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text), tok.pos)
        if tok.kind == "name":
            self.advance()
            return Sym(tok.text, tok.pos)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.additive()
            self.expect_op(")")
            return node
        raise ExprSyntaxError(
            f"expected a number, symbol or '(', found {tok.text or 'end of input'!r}",
            *tok.pos)


def parse(src: str, declared_params=None) -> Node:
    """Parse expression text into an AST.

    If ``declared_params`` (an iterable of names) is given, every symbol
    must be a reserved generator or one of those names; otherwise symbol
    binding is checked at evaluation time.
    """
    parser = _Parser(_tokenize(src))
    node = parser.additive()
    tok = parser.peek()
    if tok.kind != "end":
        raise ExprSyntaxError(f"unexpected trailing input {tok.text!r}", *tok.pos)
    if declared_params is not None:
        allowed = set(RESERVED_SYMBOLS) | set(declared_params)
        for sym in _iter_symbols(node):
            if sym.name not in allowed:
                raise ExprNameError(f"unknown symbol {sym.name!r}", *sym.pos)
    return node


def _iter_symbols(node: Node):
    if isinstance(node, Sym):
        yield node
    elif isinstance(node, Neg):
        yield from _iter_symbols(node.operand)
    elif isinstance(node, BinOp):
        yield from _iter_symbols(node.lhs)
        yield from _iter_symbols(node.rhs)
    elif isinstance(node, Pow):
        yield from _iter_symbols(node.base)


def symbols_of(node: Node) -> set[str]:
    """All symbol names appearing in an AST."""
    return {sym.name for sym in _iter_symbols(node)}


# ---------------------------------------------------------------------------
# Printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _print(node: Node, parent_prec: int) -> str:
    if isinstance(node, Num):
        text = repr(node.value)
        if text.endswith(".0"):
            text = text[:-2]
        return text
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Neg):
        inner = _print(node.operand, _PREC["neg"])
        text = f"-{inner}"
        return f"({text})" if parent_prec > _PREC["neg"] else text
    if isinstance(node, Pow):
        base = _print(node.base, _PREC["^"] + 1)
        exp = str(node.exponent) if node.exponent >= 0 else f"(-{-node.exponent})"
        return f"{base}^{exp}"
    if isinstance(node, BinOp):
        prec = _PREC[node.op]
        lhs = _print(node.lhs, prec)
        # All four operators parse left-associatively, so a right operand
        # of equal precedence needs parentheses to reparse identically.
        rhs = _print(node.rhs, prec + 1)
        text = f"{lhs} {node.op} {rhs}" if node.op in "+-" else f"{lhs}{node.op}{rhs}"
        return f"({text})" if parent_prec > prec else text
    raise TypeError(f"not an AST node: {node!r}")


def unparse(node: Node) -> str:
    """Render an AST back to source text; reparsing rebuilds the same tree."""
    return _print(node, 0)


# ---------------------------------------------------------------------------
# Evaluation

def eval_generators(node: Node, env: dict, params: dict):
    """Evaluate an AST over generator values (numbers or jets)."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Sym):
        if node.name in env:
            return env[node.name]
        try:
            return float(params[node.name])
        except KeyError:
            raise ExprNameError(f"unbound parameter {node.name!r}", *node.pos) from None
    if isinstance(node, Neg):
        return -eval_generators(node.operand, env, params)
    if isinstance(node, Pow):
        base = eval_generators(node.base, env, params)
        if node.exponent < 0 and _is_zero(base):
            raise ExprDomainError(
                f"zero raised to a negative power in {unparse(node)!r}", *node.pos)
        if isinstance(base, (int, float)):
            return float(base) ** node.exponent
        return base ** node.exponent
    if isinstance(node, BinOp):
        lhs = eval_generators(node.lhs, env, params)
        rhs = eval_generators(node.rhs, env, params)
        if node.op == "+":
            return lhs + rhs
        if node.op == "-":
            return lhs - rhs
        if node.op == "*":
            return lhs * rhs
        if _is_zero(rhs):
            raise ExprDomainError(
                f"division by zero in {unparse(node)!r}", *node.pos)
        return lhs / rhs
    raise TypeError(f"not an AST node: {node!r}")


def _is_zero(value) -> bool:
    if isinstance(value, (int, float)):
        return value == 0.0
    inner = getattr(value, "value", getattr(value, "v", None))
    if inner is None:
        return False
    return bool(np.any(np.asarray(inner) == 0.0))


def expression_observable(source, params: dict, name: str | None = None) -> Observable:
    """Build an observable from expression text or a parsed AST."""
    node = parse(source, declared_params=params) if isinstance(source, str) else source
    params = {k: float(v) for k, v in params.items()}

    def fn(jm, jp, j3):
        return eval_generators(node, {"Jm": jm, "Jp": jp, "J3": j3}, params)

    label = name if name is not None else (source if isinstance(source, str) else unparse(node))
    return coalgebra_observable(label, fn)


def eval_jet(source, state, params: dict):
    """Value and full phase-space gradient of an expression at a state."""
    return expression_observable(source, params).eval_jet(state)

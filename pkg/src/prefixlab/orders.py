"""A tiny closed expression grammar for orders given on the command line.

Grammar (integer-valued, total on the naturals):

    expr   := term (("+" | "-") term)*
    term   := atom ("*" atom)*
    atom   := "n" | integer | "(" expr ")"
            | "ceil(" expr "/" expr ")"
            | "log2(" expr ")"            # floor of log2, log2(0) = 0
            | "min(" expr "," expr ")" | "max(" expr "," expr ")"
            | atom "^" integer

Values are clamped at zero, so every expression denotes a total function
into the naturals.  A table file (one value per line) is the fallback for
orders outside the grammar.
"""

from __future__ import annotations

import re
from typing import Callable, Sequence

__all__ = ["OrderError", "parse_order", "order_table", "validate_order_table"]


class OrderError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(ceil|log2|min|max|n|\d+|[()+\-*/,^])")


def _tokenize(text: str) -> list[str]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise OrderError(f"bad token at {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens: list[str]):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise OrderError(f"expected {expected!r}, got {tok!r}")
        self.i += 1
        return tok

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            node = (op, node, rhs)
        return node

    def term(self):
        node = self.atom()
        while self.peek() == "*":
            self.take()
            node = ("*", node, self.atom())
        return node

    def atom(self):
        tok = self.take()
        if tok == "n":
            node = ("n",)
        elif tok.isdigit():
            node = ("const", int(tok))
        elif tok == "(":
            node = self.expr()
            self.take(")")
        elif tok == "ceil":
            self.take("(")
            a = self.expr()
            self.take("/")
            b = self.expr()
            self.take(")")
            node = ("ceil", a, b)
        elif tok == "log2":
            self.take("(")
            node = ("log2", self.expr())
            self.take(")")
        elif tok in ("min", "max"):
            self.take("(")
            a = self.expr()
            self.take(",")
            b = self.expr()
            self.take(")")
            node = (tok, a, b)
        else:
            raise OrderError(f"unexpected token {tok!r}")
        while self.peek() == "^":
            self.take()
            p = self.take()
            if not p.isdigit():
                raise OrderError("exponent must be a literal integer")
            node = ("pow", node, int(p))
        return node


def _eval(node, n: int) -> int:
    kind = node[0]
    if kind == "n":
        return n
    if kind == "const":
        return node[1]
    if kind == "+":
        return _eval(node[1], n) + _eval(node[2], n)
    if kind == "-":
        return max(0, _eval(node[1], n) - _eval(node[2], n))
    if kind == "*":
        return _eval(node[1], n) * _eval(node[2], n)
    if kind == "ceil":
        a, b = _eval(node[1], n), _eval(node[2], n)
        if b == 0:
            raise OrderError("division by zero in order expression")
        return -(-a // b)
    if kind == "log2":
        a = _eval(node[1], n)
        return a.bit_length() - 1 if a > 0 else 0
    if kind == "min":
        return min(_eval(node[1], n), _eval(node[2], n))
    if kind == "max":
        return max(_eval(node[1], n), _eval(node[2], n))
    if kind == "pow":
        return _eval(node[1], n) ** node[2]
    raise OrderError(f"bad node {node!r}")


def parse_order(text: str) -> Callable[[int], int]:
    tokens = _tokenize(text)
    parser = _Parser(tokens)
    tree = parser.expr()
    if parser.peek() is not None:
        raise OrderError(f"trailing tokens from {parser.peek()!r}")
    return lambda n: _eval(tree, n)


def order_table(text: str, depth: int) -> list[int]:
    """Evaluate a grammar expression on 0..depth."""
    fn = parse_order(text)
    return [fn(n) for n in range(depth + 1)]


def validate_order_table(
    table: Sequence[int], *, step_le_one: bool = False, start_zero: bool = False
) -> None:
    if start_zero and table and table[0] != 0:
        raise OrderError("order must start at 0")
    for i in range(len(table) - 1):
        if table[i + 1] < table[i]:
            raise OrderError("order must be nondecreasing")
        if step_le_one and table[i + 1] > table[i] + 1:
            raise OrderError("order must grow by at most 1 per step")

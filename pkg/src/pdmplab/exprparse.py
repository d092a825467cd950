"""Tiny arithmetic expression language for defining vector-field components.

Grammar (EBNF)::

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = "-" unary | power ;
    power    = atom [ "^" integer ] ;
    atom     = number | variable | func "(" expr ")" | "(" expr ")" ;
    func     = "sin" | "cos" | "exp" | "tanh" ;
    variable = "x" digits ;                      (* x1 .. xd, 1-based *)
    number   = digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ] ;
    integer  = digits ;                          (* exponent must be a
                                                    non-negative integer
                                                    literal, so every parsed
                                                    power is smooth *)

Binary operators are left-associative; ``^`` binds tighter than unary
minus (``-x1^2`` is ``-(x1^2)``), which binds tighter than ``*``/``/``,
which bind tighter than ``+``/``-``.  Parsed trees are immutable and can
be evaluated with plain floats, numpy arrays (one value per row), or
dual numbers, because evaluation only uses the standard arithmetic
operators plus the four function names.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExprAst",
    "ExprSyntaxError",
    "ExprDomainError",
    "UnknownIdentifierError",
    "parse_expr",
    "eval_expr",
    "to_source",
]


class ExprSyntaxError(ValueError):
    """Malformed source text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ExprDomainError(ArithmeticError):
    """Evaluation left the real domain (division by zero, overflow, NaN)."""


_FUNCTIONS = ("sin", "cos", "exp", "tanh")


@dataclass(frozen=True)
class ExprAst:
    """One node of a parsed expression.

    ``kind`` is one of ``const``, ``var``, ``neg``, ``add``, ``sub``,
    ``mul``, ``div``, ``pow``, ``sin``, ``cos``, ``exp``, ``tanh``.
    ``value`` holds the constant for ``const``, the 1-based variable
    index for ``var`` and the integer exponent for ``pow``.
    """

    kind: str
    value: float | int | None = None
    children: tuple["ExprAst", ...] = ()

    def max_var_index(self) -> int:
        if self.kind == "var":
            return int(self.value)
        return max((c.max_var_index() for c in self.children), default=0)


class _Tokenizer:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []  # (type, text, offset)
        self._run()

    def _run(self):
        src, n = self.src, len(self.src)
        i = 0
        while i < n:
            c = src[i]
            if c.isspace():
                i += 1
                continue
            if c in "+-*/^()":
                self.tokens.append(("op", c, i))
                i += 1
                continue
            if c.isdigit():
                j = i
                while j < n and src[j].isdigit():
                    j += 1
                if j < n and src[j] == ".":
                    j += 1
                    while j < n and src[j].isdigit():
                        j += 1
                if j < n and src[j] in "eE":
                    k = j + 1
                    if k < n and src[k] in "+-":
                        k += 1
                    if k < n and src[k].isdigit():
                        j = k
                        while j < n and src[j].isdigit():
                            j += 1
                self.tokens.append(("num", src[i:j], i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (src[j].isalnum() or src[j] == "_"):
                    j += 1
                self.tokens.append(("ident", src[i:j], i))
                i = j
                continue
            raise ExprSyntaxError(f"unexpected character {c!r}", i)
        self.tokens.append(("end", "", n))


class _Parser:
    def __init__(self, source: str, dim: int):
        self.toks = _Tokenizer(source).tokens
        self.k = 0
        self.dim = dim

    def peek(self):
        return self.toks[self.k]

    def advance(self):
        tok = self.toks[self.k]
        self.k += 1
        return tok

    def expect_op(self, text):
        typ, val, off = self.peek()
        if typ != "op" or val != text:
            raise ExprSyntaxError(f"expected {text!r}", off)
        return self.advance()

    def parse(self) -> ExprAst:
        node = self.expr()
        typ, val, off = self.peek()
        if typ != "end":
            raise ExprSyntaxError(f"unexpected trailing input {val!r}", off)
        return node

    def expr(self) -> ExprAst:
        node = self.term()
        while True:
            typ, val, _ = self.peek()
            if typ == "op" and val in "+-":
                self.advance()
                rhs = self.term()
                node = ExprAst("add" if val == "+" else "sub", children=(node, rhs))
            else:
                return node

    def term(self) -> ExprAst:
        node = self.unary()
        while True:
            typ, val, _ = self.peek()
            if typ == "op" and val in "*/":
                self.advance()
                rhs = self.unary()
                node = ExprAst("mul" if val == "*" else "div", children=(node, rhs))
            else:
                return node

    def unary(self) -> ExprAst:
        typ, val, _ = self.peek()
        if typ == "op" and val == "-":
            self.advance()
            return ExprAst("neg", children=(self.unary(),))
        return self.power()

    def power(self) -> ExprAst:
        base = self.atom()
        typ, val, off = self.peek()
        if typ == "op" and val == "^":
            self.advance()
            etyp, etext, eoff = self.peek()
            if etyp != "num" or any(c in etext for c in ".eE"):
                raise ExprSyntaxError(
                    "exponent must be a non-negative integer literal", eoff
                )
            self.advance()
            node = ExprAst("pow", value=int(etext), children=(base,))
            typ2, val2, off2 = self.peek()
            if typ2 == "op" and val2 == "^":
                raise ExprSyntaxError("chained '^' is not allowed", off2)
            return node
        return base

    def atom(self) -> ExprAst:
        typ, val, off = self.advance()
        if typ == "num":
            return ExprAst("const", value=float(val))
        if typ == "ident":
            if val in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return ExprAst(val, children=(arg,))
            if val[0] == "x" and val[1:].isdigit():
                idx = int(val[1:])
                if not 1 <= idx <= self.dim:
                    raise ExprSyntaxError(
                        f"variable {val} out of range for dimension {self.dim}", off
                    )
                return ExprAst("var", value=idx)
            raise UnknownIdentifierError(f"unknown identifier {val!r}", off)
        if typ == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        shown = val if val else "end of input"
        raise ExprSyntaxError(f"unexpected {shown!r}", off)


def parse_expr(source: str, dim: int) -> ExprAst:
    """Parse ``source`` into an expression tree over variables x1..x``dim``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return _Parser(source, dim).parse()


def _apply_fn(name, x):
    # Dispatch on the scalar carrier: dual numbers bring their own chain
    # rule; everything else (floats, numpy arrays) goes through numpy so
    # scalar and vectorized evaluation agree bitwise.
    fn = getattr(x, name, None)
    if fn is not None and not isinstance(x, np.ndarray):
        return fn()
    return getattr(np, name)(x)


def _int_pow(x, n: int):
    # iterated products rather than **: the same multiply sequence for
    # floats, arrays and dual numbers, so all evaluation paths agree bitwise
    if n == 0:
        return 1.0
    out = x
    for _ in range(n - 1):
        out = out * x
    return out


def _eval(node: ExprAst, point):
    kind = node.kind
    if kind == "const":
        return node.value
    if kind == "var":
        return point[node.value - 1]
    if kind == "neg":
        return -_eval(node.children[0], point)
    if kind in ("add", "sub", "mul", "div"):
        a = _eval(node.children[0], point)
        b = _eval(node.children[1], point)
        if kind == "add":
            return a + b
        if kind == "sub":
            return a - b
        if kind == "mul":
            return a * b
        return a / b
    if kind == "pow":
        return _int_pow(_eval(node.children[0], point), node.value)
    if kind in _FUNCTIONS:
        return _apply_fn(kind, _eval(node.children[0], point))
    raise AssertionError(f"unknown node kind {kind}")


def eval_expr(ast: ExprAst, point) -> float:
    """Evaluate at a point (sequence of floats).  Raises ExprDomainError
    on division by zero or a non-finite result."""
    try:
        out = _eval(ast, point)
    except ZeroDivisionError as exc:
        raise ExprDomainError("division by zero") from exc
    except OverflowError as exc:
        raise ExprDomainError("overflow") from exc
    if isinstance(out, (int, float)) and not math.isfinite(out):
        raise ExprDomainError("non-finite result")
    return out


def eval_expr_rows(ast: ExprAst, rows: np.ndarray) -> np.ndarray:
    """Evaluate on an (N, d) array, one result per row."""
    cols = [rows[:, j] for j in range(rows.shape[1])]
    with np.errstate(divide="raise", invalid="raise", over="raise"):
        try:
            out = _eval(ast, cols)
        except (FloatingPointError, ZeroDivisionError, OverflowError) as exc:
            raise ExprDomainError(str(exc)) from exc
    out = np.asarray(out, dtype=float)
    if out.ndim == 0:
        out = np.full(rows.shape[0], float(out))
    return out


def eval_expr_generic(ast: ExprAst, point):
    """Evaluate with arbitrary scalar carriers (e.g. dual numbers)."""
    try:
        return _eval(ast, point)
    except ZeroDivisionError as exc:
        raise ExprDomainError("division by zero") from exc


_PREC = {
    "add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4,
    "const": 5, "var": 5, "sin": 5, "cos": 5, "exp": 5, "tanh": 5,
}
_BINOP = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def to_source(node: ExprAst) -> str:
    """Render a tree back to source.  Re-parsing the result yields a tree
    that evaluates identically (same operation order)."""
    kind = node.kind
    if kind == "const":
        return repr(node.value)
    if kind == "var":
        return f"x{node.value}"
    if kind == "neg":
        inner = to_source(node.children[0])
        if _PREC[node.children[0].kind] < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if kind in _BINOP:
        a, b = node.children
        left = to_source(a)
        if _PREC[a.kind] < _PREC[kind]:
            left = f"({left})"
        right = to_source(b)
        # grammar is left-associative: parenthesise equal precedence on the right
        if _PREC[b.kind] <= _PREC[kind]:
            right = f"({right})"
        return f"{left} {_BINOP[kind]} {right}"
    if kind == "pow":
        base = to_source(node.children[0])
        # a pow base must be parenthesised too: '^' does not chain
        if _PREC[node.children[0].kind] <= _PREC["pow"]:
            base = f"({base})"
        return f"{base}^{node.value}"
    if kind in _FUNCTIONS:
        return f"{kind}({to_source(node.children[0])})"
    raise AssertionError(kind)

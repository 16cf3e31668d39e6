"""Arithmetic expressions for metric components.

Metric components in a chart file are written as formulas in the chart
coordinates ("-1/(x*x)", "2 + sin(t)", ...).  This module tokenizes and
parses such formulas into a small AST and evaluates them on scalars or
numpy arrays.

Grammar (precedence climbing):

    expr    := term (("+" | "-") term)*
    term    := factor (("*" | "/") factor)*
    factor  := "-" factor | power
    power   := atom ("^" factor)?          # right associative
    atom    := number | name | name "(" expr ("," expr)* ")" | "(" expr ")"

so ``^`` binds tighter than unary minus, which binds tighter than ``*``
and ``/``.  Known functions: exp, log, sqrt, sin, cos, abs, min, max.
Parsing fails fast with a positioned ParseError; evaluation raises
EvalError naming the offending point (division by zero, log of a
non-positive value, sqrt of a negative value, fractional power of a
negative base).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = {
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "sin": 1,
    "cos": 1,
    "abs": 1,
    "min": 2,
    "max": 2,
}


class ParseError(ValueError):
    """Syntax error with 1-based line/column position."""

    def __init__(self, message, line, column, token=""):
        detail = f"line {line}, column {column}: {message}"
        if token:
            detail += f" (near {token!r})"
        super().__init__(detail)
        self.message = message
        self.line = line
        self.column = column
        self.token = token


class EvalError(ValueError):
    """Domain error during evaluation, carrying the offending point."""

    def __init__(self, message, point=None):
        if point:
            pretty = ", ".join(f"{k}={v!r}" for k, v in sorted(point.items()))
            message = f"{message} at ({pretty})"
        super().__init__(message)
        self.point = point or {}


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Expr = Num | Var | Unary | Bin | Call


def free_vars(node):
    """Set of coordinate names referenced by an expression."""
    if isinstance(node, Num):
        return set()
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Unary):
        return free_vars(node.arg)
    if isinstance(node, Bin):
        return free_vars(node.lhs) | free_vars(node.rhs)
    if isinstance(node, Call):
        out = set()
        for a in node.args:
            out |= free_vars(a)
        return out
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Tokenizer (shared with the chart-file parser)

TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<string>"[^"\n]*")
  | (?P<punct>[-+*/^(),;:={}\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "number" | "name" | "string" | "punct" | "end"
    text: str
    line: int
    column: int


def tokenize(source):
    """Split source into tokens, dropping whitespace and # comments."""
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(source):
        m = TOKEN_RE.match(source, pos)
        if m is None:
            col = pos - line_start + 1
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("end", "", line, len(source) - line_start + 1))
    return tokens


class TokenStream:
    """Cursor over a token list with positioned error helpers."""

    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        if tok.kind != "end":
            self.i += 1
        return tok

    def expect(self, text):
        tok = self.peek()
        if tok.text != text:
            raise ParseError(f"expected {text!r}", tok.line, tok.column, tok.text)
        return self.next()

    def error(self, message):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.column, tok.text)


# ---------------------------------------------------------------------------
# Parser

_BIN_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30  # between mul and pow: -x^2 == -(x^2), -x*y == (-x)*y


def parse_expression(stream):
    """Parse one expression from a TokenStream (precedence climbing)."""
    return _parse_binary(stream, 0)


def _parse_binary(stream, min_bp):
    lhs = _parse_prefix(stream)
    while True:
        tok = stream.peek()
        bp = _BIN_LBP.get(tok.text) if tok.kind == "punct" else None
        if bp is None or bp < min_bp:
            return lhs
        stream.next()
        # right associativity for ^ comes from recursing at equal power
        rhs = _parse_binary(stream, bp if tok.text == "^" else bp + 1)
        lhs = Bin(tok.text, lhs, rhs)


def _parse_prefix(stream):
    tok = stream.peek()
    if tok.text == "-":
        stream.next()
        return Unary("-", _parse_binary(stream, _UNARY_BP))
    return _parse_atom(stream)


def _parse_atom(stream):
    tok = stream.next()
    if tok.kind == "number":
        return Num(float(tok.text))
    if tok.kind == "name":
        if stream.peek().text == "(":
            return _parse_call(stream, tok)
        return Var(tok.text)
    if tok.text == "(":
        inner = _parse_binary(stream, 0)
        stream.expect(")")
        return inner
    raise ParseError("expected a number, name or '('", tok.line, tok.column, tok.text)


def _parse_call(stream, name_tok):
    func = name_tok.text
    if func not in FUNCTIONS:
        raise ParseError(
            f"unknown function {func!r}", name_tok.line, name_tok.column, func
        )
    stream.expect("(")
    args = [_parse_binary(stream, 0)]
    while stream.peek().text == ",":
        stream.next()
        args.append(_parse_binary(stream, 0))
    stream.expect(")")
    if len(args) != FUNCTIONS[func]:
        raise ParseError(
            f"{func} takes {FUNCTIONS[func]} argument(s), got {len(args)}",
            name_tok.line,
            name_tok.column,
            func,
        )
    return Call(func, tuple(args))


def parse_expr(source):
    """Parse a standalone expression string."""
    stream = TokenStream(tokenize(source))
    node = parse_expression(stream)
    if stream.peek().kind != "end":
        stream.error("unexpected trailing input")
    return node


# ---------------------------------------------------------------------------
# Evaluation


def _first_bad_point(bindings, bad_mask):
    """Coordinates of the first offending array entry, for error messages."""
    bad_mask = np.asarray(bad_mask)
    if bad_mask.ndim == 0:
        idx = ()
    else:
        flat = np.flatnonzero(bad_mask.ravel())
        if flat.size == 0:
            return {}
        idx = np.unravel_index(flat[0], bad_mask.shape)
    point = {}
    for name, val in bindings.items():
        arr = np.asarray(val)
        point[name] = float(arr[idx]) if arr.ndim == bad_mask.ndim else float(arr.flat[0])
    return point


def eval_expr(node, bindings):
    """Evaluate an expression over scalar or numpy-array bindings.

    All array bindings must share a shape; the result is broadcast
    against them.  Domain violations raise EvalError naming the point.
    """
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name not in bindings:
            raise EvalError(f"unbound coordinate {node.name!r}")
        return bindings[node.name]
    if isinstance(node, Unary):
        return -eval_expr(node.arg, bindings)
    if isinstance(node, Bin):
        lhs = eval_expr(node.lhs, bindings)
        rhs = eval_expr(node.rhs, bindings)
        if node.op == "+":
            return lhs + rhs
        if node.op == "-":
            return lhs - rhs
        if node.op == "*":
            return lhs * rhs
        if node.op == "/":
            bad = np.asarray(rhs) == 0
            if np.any(bad):
                raise EvalError("division by zero", _first_bad_point(bindings, bad))
            return lhs / rhs
        if node.op == "^":
            base = np.asarray(lhs, dtype=float)
            expo = np.asarray(rhs, dtype=float)
            frac = expo != np.floor(expo)
            bad = (base < 0) & frac
            if np.any(bad):
                raise EvalError(
                    "fractional power of a negative base",
                    _first_bad_point(bindings, bad),
                )
            bad = (base == 0) & (expo < 0)
            if np.any(bad):
                raise EvalError(
                    "zero raised to a negative power", _first_bad_point(bindings, bad)
                )
            out = np.power(base, expo)
            return out if out.ndim else float(out)
        raise EvalError(f"unknown operator {node.op!r}")
    if isinstance(node, Call):
        args = [eval_expr(a, bindings) for a in node.args]
        if node.func == "min":
            return np.minimum(args[0], args[1])
        if node.func == "max":
            return np.maximum(args[0], args[1])
        if node.func == "abs":
            return np.abs(args[0])
        arg = np.asarray(args[0], dtype=float)
        if node.func == "exp":
            out = np.exp(arg)
        elif node.func == "log":
            bad = arg <= 0
            if np.any(bad):
                raise EvalError(
                    "log of a non-positive value", _first_bad_point(bindings, bad)
                )
            out = np.log(arg)
        elif node.func == "sqrt":
            bad = arg < 0
            if np.any(bad):
                raise EvalError(
                    "sqrt of a negative value", _first_bad_point(bindings, bad)
                )
            out = np.sqrt(arg)
        elif node.func == "sin":
            out = np.sin(arg)
        elif node.func == "cos":
            out = np.cos(arg)
        else:
            raise EvalError(f"unknown function {node.func!r}")
        return out if out.ndim else float(out)
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Pretty printer (emits a string that parses back to the same AST)

_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "unary": 30, "^": 40, "atom": 50}


def pretty(node):
    """Render an expression with minimal parentheses."""
    text, _ = _pretty(node)
    return text


def _pretty(node):
    if isinstance(node, Num):
        return repr(node.value), _PREC["atom"]
    if isinstance(node, Var):
        return node.name, _PREC["atom"]
    if isinstance(node, Unary):
        text, prec = _pretty(node.arg)
        if prec < _PREC["unary"]:
            text = f"({text})"
        return f"-{text}", _PREC["unary"]
    if isinstance(node, Call):
        args = ", ".join(pretty(a) for a in node.args)
        return f"{node.func}({args})", _PREC["atom"]
    if isinstance(node, Bin):
        prec = _PREC[node.op]
        ltext, lprec = _pretty(node.lhs)
        rtext, rprec = _pretty(node.rhs)
        # left operand needs parens when looser, or equal for right-assoc ^
        if lprec < prec or (node.op == "^" and lprec == prec):
            ltext = f"({ltext})"
        # right operand needs parens when looser, or equal for left-assoc ops
        if rprec < prec or (node.op != "^" and rprec == prec):
            rtext = f"({rtext})"
        return f"{ltext} {node.op} {rtext}", prec
    raise TypeError(f"not an expression node: {node!r}")

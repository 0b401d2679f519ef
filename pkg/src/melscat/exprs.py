"""Mini-language for scalar fields over (p, q, I, theta, t, eps).

Expressions are written over the variables ``p1..pn``, ``q1..qn``,
``I1..Id``, ``theta1..thetad``, ``t`` and ``eps``, the constant ``pi``,
the binary operators ``+ - * / ^`` (with ``^`` right-associative and
binding tighter than unary minus), and the unary functions ``sin``,
``cos``, ``exp``, ``tanh``, ``sech``, ``sqrt``.

The module provides a tokenizer, a Pratt parser producing an immutable
AST, a plain evaluator, forward-mode dual numbers for first derivatives,
a precedence-aware printer (round-trip stable), and a compiler to the
stack-program form consumed by the numeric kernels.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np

__all__ = [
    "Expr", "Num", "Const", "Var", "BinOp", "Neg", "Call", "Dual",
    "ExprError", "EvalError", "parse", "eval_expr", "derivative",
    "to_source", "depends_on", "compile_program",
]

FUNCTIONS = ("sin", "cos", "exp", "tanh", "sech", "sqrt")
CONSTANTS = {"pi": math.pi}


class ExprError(ValueError):
    """Parse-time failure, carrying the byte span of the offending token."""

    def __init__(self, message: str, span: tuple[int, int]):
        super().__init__(f"{message} at {span[0]}..{span[1]}")
        self.message = message
        self.span = span


class EvalError(ValueError):
    """Evaluation failure: unbound variable or non-finite result."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str  # currently only "pi"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Const, Var, BinOp, Neg, Call]


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_VAR_RE = re.compile(r"^(p|q|I|theta)([1-9][0-9]*)$")


@dataclass(frozen=True)
class _Token:
    kind: str  # num | ident | op | end
    text: str
    span: tuple[int, int]


def _tokenize(source: str) -> list[_Token]:
    if len(source.encode("utf-8")) > 64 * 1024:
        raise ExprError("source exceeds 64 KiB", (0, len(source)))
    tokens: list[_Token] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            # skip whitespace-only tail
            rest = source[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ExprError(f"lexical error: unexpected character {source[bad]!r}",
                            (bad, bad + 1))
        pos = m.end()
        for kind in ("num", "ident", "op"):
            text = m.group(kind)
            if text is not None:
                tokens.append(_Token(kind, text, (m.start(kind), m.end(kind))))
                break
    tokens.append(_Token("end", "", (len(source), len(source))))
    return tokens


# ---------------------------------------------------------------------------
# Pratt parser
# ---------------------------------------------------------------------------

_BINARY_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_MINUS_BP = 30  # binds tighter than * /, looser than ^


class _Parser:
    def __init__(self, tokens: list[_Token], n: int | None, d: int | None):
        self.tokens = tokens
        self.i = 0
        self.n = n
        self.d = d

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, text: str, context: str) -> None:
        tok = self.peek()
        if tok.kind == "op" and tok.text == text:
            self.advance()
            return
        if text == ")":
            raise ExprError(f"unbalanced parentheses: expected ')' {context}", tok.span)
        raise ExprError(f"expected {text!r} {context}", tok.span)

    def parse_expr(self, min_bp: int) -> Expr:
        node = self.parse_prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _BINARY_BP:
                break
            bp = _BINARY_BP[tok.text]
            if bp < min_bp:
                break
            self.advance()
            # '^' is right-associative: allow equal binding power on the right
            rhs = self.parse_expr(bp if tok.text == "^" else bp + 1)
            node = BinOp(tok.text, node, rhs)
        return node

    def parse_prefix(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "op":
            if tok.text == "-":
                return Neg(self.parse_expr(_UNARY_MINUS_BP))
            if tok.text == "(":
                inner = self.parse_expr(0)
                self.expect_op(")", "to close group")
                return inner
            raise ExprError(f"unexpected operator {tok.text!r}", tok.span)
        if tok.kind == "ident":
            return self.parse_ident(tok)
        raise ExprError("unexpected end of input", tok.span)

    def parse_ident(self, tok: _Token) -> Expr:
        name = tok.text
        if name in FUNCTIONS:
            nxt = self.peek()
            if not (nxt.kind == "op" and nxt.text == "("):
                raise ExprError(f"arity error: function {name!r} needs an argument list",
                                tok.span)
            self.advance()
            arg = self.parse_expr(0)
            self.expect_op(")", f"to close call of {name!r}")
            return Call(name, arg)
        if name in CONSTANTS:
            return Const(name)
        if name in ("t", "eps"):
            return Var(name)
        m = _VAR_RE.match(name)
        if m:
            base, idx = m.group(1), int(m.group(2))
            bound = self.n if base in ("p", "q") else self.d
            if bound is not None and idx > bound:
                raise ExprError(f"unknown identifier {name}", tok.span)
            return Var(name)
        raise ExprError(f"unknown identifier {name}", tok.span)


def parse(source: str, *, n: int | None = None, d: int | None = None) -> Expr:
    """Parse ``source`` into an AST.

    When ``n``/``d`` are given, pendulum and rotator variable indices are
    checked against them (``q3`` with n=1 is rejected at parse time).
    """
    tokens = _tokenize(source)
    parser = _Parser(tokens, n, d)
    node = parser.parse_expr(0)
    tail = parser.peek()
    if tail.kind != "end":
        if tail.kind == "op" and tail.text == ")":
            raise ExprError("unbalanced parentheses: unmatched ')'", tail.span)
        raise ExprError(f"trailing input {tail.text!r}", tail.span)
    return node


# ---------------------------------------------------------------------------
# Dual numbers (forward mode)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dual:
    """Value plus one directional-derivative slot."""

    value: float
    dot: float = 0.0

    @staticmethod
    def lift(x: "Dual | float") -> "Dual":
        return x if isinstance(x, Dual) else Dual(float(x), 0.0)

    def __add__(self, other):
        o = Dual.lift(other)
        return Dual(self.value + o.value, self.dot + o.dot)

    __radd__ = __add__

    def __sub__(self, other):
        o = Dual.lift(other)
        return Dual(self.value - o.value, self.dot - o.dot)

    def __rsub__(self, other):
        o = Dual.lift(other)
        return Dual(o.value - self.value, o.dot - self.dot)

    def __mul__(self, other):
        o = Dual.lift(other)
        return Dual(self.value * o.value, self.dot * o.value + self.value * o.dot)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Dual.lift(other)
        return Dual(self.value / o.value,
                    (self.dot * o.value - self.value * o.dot) / (o.value * o.value))

    def __rtruediv__(self, other):
        return Dual.lift(other).__truediv__(self)

    def __neg__(self):
        return Dual(-self.value, -self.dot)

    def __pow__(self, other):
        o = Dual.lift(other)
        a, da, b, db = self.value, self.dot, o.value, o.dot
        val = a ** b
        if db == 0.0:
            # d(a^b) = b a^(b-1) da, valid for negative bases at integer powers
            dot = 0.0 if da == 0.0 else b * a ** (b - 1.0) * da
        else:
            dot = val * (db * math.log(a) + b * da / a)
        return Dual(val, dot)

    def __rpow__(self, other):
        return Dual.lift(other).__pow__(self)


def _sech(x: float) -> float:
    return 1.0 / math.cosh(x)


_FUNC_VALUE: dict[str, Callable[[float], float]] = {
    "sin": math.sin, "cos": math.cos, "exp": math.exp,
    "tanh": math.tanh, "sech": _sech, "sqrt": math.sqrt,
}

_FUNC_DERIV: dict[str, Callable[[float], float]] = {
    "sin": math.cos,
    "cos": lambda v: -math.sin(v),
    "exp": math.exp,
    "tanh": lambda v: _sech(v) ** 2,
    "sech": lambda v: -_sech(v) * math.tanh(v),
    "sqrt": lambda v: 0.5 / math.sqrt(v),
}


def _apply_fn(fn: str, x):
    f = _FUNC_VALUE[fn]
    if isinstance(x, Dual):
        return Dual(f(x.value), _FUNC_DERIV[fn](x.value) * x.dot)
    return f(x)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _eval_node(e: Expr, env: Mapping[str, object]):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Neg):
        return -_eval_node(e.arg, env)
    if isinstance(e, Call):
        try:
            return _apply_fn(e.fn, _eval_node(e.arg, env))
        except (ValueError, OverflowError) as exc:
            raise EvalError(f"domain error in {e.fn}: {exc}") from None
    if isinstance(e, BinOp):
        a = _eval_node(e.lhs, env)
        b = _eval_node(e.rhs, env)
        try:
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                return a / b
            return a ** b
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise EvalError(f"arithmetic error in {e.op!r}: {exc}") from None
    raise TypeError(f"not an expression node: {e!r}")


def eval_expr(e: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate with all free variables bound; non-finite results raise."""
    out = _eval_node(e, bindings)
    val = out.value if isinstance(out, Dual) else float(out)
    if not math.isfinite(val):
        raise EvalError(f"non-finite result {val!r}")
    return val


def derivative(e: Expr, var: str) -> Callable[[Mapping[str, float]], float]:
    """Forward-mode partial derivative with respect to ``var``.

    Returns an evaluator taking the same bindings as :func:`eval_expr`.
    """

    def deval(bindings: Mapping[str, float]) -> float:
        env = {k: Dual(float(v), 1.0 if k == var else 0.0)
               for k, v in bindings.items()}
        if var not in env:
            env[var] = Dual(0.0, 1.0)
        out = _eval_node(e, env)
        dot = out.dot if isinstance(out, Dual) else 0.0
        if not math.isfinite(dot):
            raise EvalError(f"non-finite derivative {dot!r}")
        return dot

    return deval


def depends_on(e: Expr) -> frozenset[str]:
    """Free variables of the expression (constants excluded)."""
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, (Num, Const)):
        return frozenset()
    if isinstance(e, Neg):
        return depends_on(e.arg)
    if isinstance(e, Call):
        return depends_on(e.arg)
    return depends_on(e.lhs) | depends_on(e.rhs)


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _BINARY_BP[e.op]
    if isinstance(e, Neg):
        return _UNARY_MINUS_BP
    return 100


def to_source(e: Expr) -> str:
    """Serialize with minimal parentheses; parses back to an equal AST."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = to_source(e.arg)
        if _prec(e.arg) < _UNARY_MINUS_BP:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Call):
        return f"{e.fn}({to_source(e.arg)})"
    lhs, rhs = to_source(e.lhs), to_source(e.rhs)
    bp = _BINARY_BP[e.op]
    # left operand: parenthesize when strictly looser; '^' is right-assoc so
    # an equal-precedence left child also needs parens
    if _prec(e.lhs) < bp or (e.op == "^" and _prec(e.lhs) == bp):
        lhs = f"({lhs})"
    # right operand: equal precedence needs parens for left-assoc operators,
    # and subtraction/division never absorb a bare right operand of equal bp
    rp = _prec(e.rhs)
    if rp < bp or (e.op in ("-", "/", "+", "*") and rp == bp):
        rhs = f"({rhs})"
    return f"{lhs} {e.op} {rhs}" if e.op in ("+", "-") else f"{lhs}{e.op}{rhs}"


# ---------------------------------------------------------------------------
# Compilation to the kernel stack-program form
# ---------------------------------------------------------------------------

def compile_program(e: Expr, layout: Mapping[str, int]) -> tuple[np.ndarray, np.ndarray]:
    """Compile to (code, consts) for the stack interpreter in ``_kernels``.

    ``layout`` maps variable names to slots of the flat evaluation vector.
    """
    from . import _kernels as K

    code: list[int] = []
    consts: list[float] = []

    def push_const(v: float) -> None:
        code.extend((K.OP_CONST, len(consts)))
        consts.append(float(v))

    def emit(node: Expr) -> None:
        if isinstance(node, Num):
            push_const(node.value)
        elif isinstance(node, Const):
            push_const(CONSTANTS[node.name])
        elif isinstance(node, Var):
            if node.name not in layout:
                raise EvalError(f"variable {node.name!r} not in kernel layout")
            code.extend((K.OP_VAR, layout[node.name]))
        elif isinstance(node, Neg):
            emit(node.arg)
            code.extend((K.OP_NEG, 0))
        elif isinstance(node, Call):
            emit(node.arg)
            code.extend((K.FUNC_OPS[node.fn], 0))
        elif isinstance(node, BinOp):
            emit(node.lhs)
            emit(node.rhs)
            code.extend((K.BIN_OPS[node.op], 0))
        else:
            raise TypeError(f"not an expression node: {node!r}")

    emit(e)
    return (np.asarray(code, dtype=np.int32),
            np.asarray(consts, dtype=np.float64))

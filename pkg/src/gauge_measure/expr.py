"""Safe arithmetic expressions in t (and optional parameters such as n).

Vocabulary: numbers, ``pi``, ``e``, + - * / and ** (``^`` is accepted as a
power), comparisons, ``and``/``or``/``not``, and the functions sin, cos, exp,
log, sqrt, abs, sign, min, max and piecewise(cond1, val1, ..., default).
Expressions are parsed with ``ast`` and compiled into closures; nothing is
passed to ``eval``.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial


class ExprError(ValueError):
    """Bad expression; ``column`` is 1-based within the expression text."""

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column


CONSTANTS = {"pi": math.pi, "e": math.e, "inf": math.inf}

FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log, "sqrt": np.sqrt,
    "abs": np.abs, "sign": np.sign,
}
BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide,
          ast.Pow: np.power, ast.BitXor: np.power}
CMPOPS = {ast.Lt: np.less, ast.LtE: np.less_equal, ast.Gt: np.greater, ast.GtE: np.greater_equal,
          ast.Eq: np.equal, ast.NotEq: np.not_equal}


def _fail(node, msg):
    raise ExprError(msg, getattr(node, "col_offset", -1) + 1)


@dataclass
class Expr:
    """Compiled expression; call as ``expr(t, n=...)``."""

    text: str
    variables: tuple[str, ...]
    _fn: Callable = field(repr=False)
    poly: Polynomial | None = field(default=None, repr=False)
    breakpoints: list[float] = field(default_factory=list)

    def __call__(self, t, **params):
        t = np.asarray(t, dtype=float)
        env = {"t": t}
        for name in self.variables:
            if name != "t":
                if name not in params:
                    raise ExprError(f"missing value for parameter {name!r}")
                env[name] = params[name]
        with np.errstate(all="ignore"):
            out = np.asarray(self._fn(env), dtype=float)
        return np.broadcast_to(out, t.shape).copy() if out.shape != t.shape else out

    def bind(self, **params) -> Callable:
        """One-variable function of t with the parameters fixed."""
        fn = self

        def f(t):
            return fn(t, **params)

        f.breakpoints = list(_bound_breakpoints(self, params))
        return f

    @property
    def is_polynomial(self) -> bool:
        return self.poly is not None


def _bound_breakpoints(e: Expr, params) -> list[float]:
    out = []
    for b in e._breaks:
        try:
            v = float(b(params))
        except Exception:
            continue
        if math.isfinite(v):
            out.append(v)
    return sorted(set(out))


def parse(text: str, variables=("t",)) -> Expr:
    """Compile ``text``; names other than ``variables`` and constants are errors."""
    src = text.replace("^", "**")
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        # offset 0 means the text ended too early
        col = exc.offset if exc.offset else len(src.strip()) + 1
        raise ExprError(f"syntax error in {text!r}: {exc.msg}", col) from None
    variables = tuple(variables)
    breaks: list[Callable] = []
    fn = _compile(tree.body, variables, breaks)
    poly = _as_poly(tree.body) if variables == ("t",) or "t" in variables else None
    e = Expr(text, variables, fn, poly)
    e._breaks = breaks
    e.breakpoints = _bound_breakpoints(e, {v: 1 for v in variables if v != "t"}) if variables == ("t",) else []
    return e


def _const_of(node, variables):
    """Closure for a t-free subexpression, used to locate breakpoints."""
    names = {n.id for n in ast.walk(node) if isinstance(n, ast.Name)}
    if "t" in names:
        return None
    fn = _compile(node, variables, [])
    return lambda params: fn(dict(params))


def _compile(node, variables, breaks) -> Callable:
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            _fail(node, "only numeric constants are allowed")
        v = float(node.value)
        return lambda env: v
    if isinstance(node, ast.Name):
        if node.id in variables:
            name = node.id
            return lambda env: env[name]
        if node.id in CONSTANTS:
            v = CONSTANTS[node.id]
            return lambda env: v
        _fail(node, f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp):
        inner = _compile(node.operand, variables, breaks)
        if isinstance(node.op, ast.USub):
            return lambda env: -inner(env)
        if isinstance(node.op, ast.UAdd):
            return inner
        if isinstance(node.op, ast.Not):
            return lambda env: np.logical_not(inner(env))
        _fail(node, "unsupported unary operator")
    if isinstance(node, ast.BinOp):
        op = BINOPS.get(type(node.op))
        if op is None:
            _fail(node, "unsupported operator")
        a, b = _compile(node.left, variables, breaks), _compile(node.right, variables, breaks)
        return lambda env: op(a(env), b(env))
    if isinstance(node, ast.BoolOp):
        parts = [_compile(v, variables, breaks) for v in node.values]
        comb = np.logical_and if isinstance(node.op, ast.And) else np.logical_or

        def boolop(env):
            out = parts[0](env)
            for p in parts[1:]:
                out = comb(out, p(env))
            return out

        return boolop
    if isinstance(node, ast.Compare):
        terms = [node.left] + list(node.comparators)
        fns = [_compile(x, variables, breaks) for x in terms]
        ops = []
        for op in node.ops:
            f = CMPOPS.get(type(op))
            if f is None:
                _fail(node, "unsupported comparison")
            ops.append(f)
        # a jump location is known only when t is compared directly with a t-free term
        if any(isinstance(x, ast.Name) and x.id == "t" for x in terms):
            for x in terms:
                c = _const_of(x, variables)
                if c is not None:
                    breaks.append(c)

        def compare(env):
            vals = [f(env) for f in fns]
            out = ops[0](vals[0], vals[1])
            for k in range(1, len(ops)):
                out = np.logical_and(out, ops[k](vals[k], vals[k + 1]))
            return out

        return compare
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name):
            _fail(node, "only plain function names can be called")
        name = node.func.id
        if node.keywords:
            _fail(node, "keyword arguments are not supported")
        if name not in FUNCTIONS and name not in ("min", "max", "piecewise"):
            _fail(node, f"unknown function {name!r}")
        args = [_compile(a, variables, breaks) for a in node.args]
        if name in FUNCTIONS:
            if len(args) != 1:
                _fail(node, f"{name} takes one argument")
            f = FUNCTIONS[name]
            a = args[0]
            if name in ("abs", "sign"):
                c = _kink(node.args[0], variables)
                if c is not None:
                    breaks.append(c)
            return lambda env: f(a(env))
        if name in ("min", "max"):
            if len(args) < 2:
                _fail(node, f"{name} takes at least two arguments")
            red = np.minimum if name == "min" else np.maximum

            def minmax(env):
                out = args[0](env)
                for g in args[1:]:
                    out = red(out, g(env))
                return out

            return minmax
        if name == "piecewise":
            if len(args) < 3 or len(args) % 2 == 0:
                _fail(node, "piecewise needs cond, value pairs and a default")
            conds, vals, default = args[0:-1:2], args[1:-1:2], args[-1]

            def piecewise(env):
                t = env["t"]
                cs = [np.broadcast_to(np.asarray(c(env), dtype=bool), np.shape(t)) for c in conds]
                vs = [np.broadcast_to(np.asarray(v(env), dtype=float), np.shape(t)) for v in vals]
                d = np.broadcast_to(np.asarray(default(env), dtype=float), np.shape(t))
                return np.select(cs, vs, d)

            return piecewise
    _fail(node, f"unsupported syntax {type(node).__name__}")


def _kink(node, variables):
    """For abs(t - c) or sign(t - c), the closure giving c."""
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Sub, ast.Add)):
        if isinstance(node.left, ast.Name) and node.left.id == "t":
            c = _const_of(node.right, variables)
            if c is not None:
                if isinstance(node.op, ast.Sub):
                    return c
                return lambda params: -c(params)
    if isinstance(node, ast.Name) and node.id == "t":
        return lambda params: 0.0
    return None


def _as_poly(node) -> Polynomial | None:
    """Coefficients in t when the expression is a polynomial with numeric constants."""
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return Polynomial([float(node.value)])
    if isinstance(node, ast.Name):
        if node.id == "t":
            return Polynomial([0.0, 1.0])
        if node.id in ("pi", "e"):
            return Polynomial([CONSTANTS[node.id]])
        return None
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        p = _as_poly(node.operand)
        if p is None:
            return None
        return -p if isinstance(node.op, ast.USub) else p
    if isinstance(node, ast.BinOp):
        a, b = _as_poly(node.left), _as_poly(node.right)
        if a is None or b is None:
            return None
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div) and b.degree() == 0 and b.coef[0] != 0:
            return a / float(b.coef[0])
        if isinstance(node.op, (ast.Pow, ast.BitXor)) and b.degree() == 0:
            k = float(b.coef[0])
            if k.is_integer() and 0 <= k <= 64:
                return a ** int(k)
    return None


def function_of_t(text: str) -> Callable:
    """Vectorized f(t) for an expression in t, carrying its breakpoints."""
    e = parse(text, ("t",))
    return e.bind()


__all__ = ["Expr", "ExprError", "function_of_t", "parse"]

"""Exact symbolic differentiation with a shared memo table."""
from __future__ import annotations

import threading
from collections import OrderedDict

from . import nodes as N
from .nodes import (Add, Const, Div, EF, Func, Jb, Lam, LamD, Mul, Neg, Node, Pow, Sub, Var,
                    add, const, div, ef, func, lamd, mul, neg, power, sub)

__all__ = ["differentiate", "derivative", "axis_var"]

_MEMO: "OrderedDict[tuple, Node]" = OrderedDict()
_MEMO_CAP = 200_000
_memo_lock = threading.Lock()


def axis_var(axis) -> Var:
    """Accept a Var, or a name such as 'x1', 'xi2', 'z'."""
    if isinstance(axis, Var):
        return axis
    if axis == "z":
        return Var("z", 1)
    if isinstance(axis, str):
        if axis.startswith("xi"):
            return Var("xi", int(axis[2:]))
        if axis.startswith("x"):
            return Var("x", int(axis[1:]))
    raise ValueError(f"bad differentiation axis {axis!r}")


def differentiate(e: Node, axis) -> Node:
    """d e / d axis, simplified with constant folding and the 0/1 rules."""
    v = axis_var(axis)
    order = N._postorder(e)
    local: dict = {}
    for node in order:
        key = (node, v)
        with _memo_lock:
            hit = _MEMO.get(key)
        if hit is not None:
            local[id(node)] = hit
            continue
        d = _rule(node, v, lambda c: local[id(c)])
        local[id(node)] = d
        with _memo_lock:
            _MEMO[key] = d
            if len(_MEMO) > _MEMO_CAP:
                _MEMO.popitem(last=False)
    return local[id(e)]


def derivative(e: Node, alpha=(), beta=()) -> Node:
    """Mixed derivative d_x^alpha d_xi^beta of ``e``."""
    for j, a in enumerate(alpha, start=1):
        for _ in range(a):
            e = differentiate(e, Var("x", j))
    for j, b in enumerate(beta, start=1):
        for _ in range(b):
            e = differentiate(e, Var("xi", j))
    return e


_ZERO = Const(0.0)
_ONE = Const(1.0)


def _rule(e: Node, v: Var, d) -> Node:
    if isinstance(e, Const):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e is v else _ZERO
    if isinstance(e, Add):
        return add(d(e.a), d(e.b))
    if isinstance(e, Sub):
        return sub(d(e.a), d(e.b))
    if isinstance(e, Neg):
        return neg(d(e.a))
    if isinstance(e, Mul):
        return add(mul(d(e.a), e.b), mul(e.a, d(e.b)))
    if isinstance(e, Div):
        da, db = d(e.a), d(e.b)
        # (a/b)' = (a' - (a/b) b') / b keeps the denominator from squaring on each pass
        if db is _ZERO:
            return div(da, e.b)
        return div(sub(da, mul(e, db)), e.b)
    if isinstance(e, Pow):
        da, db = d(e.a), d(e.b)
        if isinstance(e.b, Const) or db is _ZERO:
            return mul(mul(e.b, power(e.a, sub(e.b, _ONE))), da)
        # general exponent: b^e (e' log b + e b'/b)
        return mul(e, add(mul(db, func("log", e.a)), div(mul(e.b, da), e.a)))
    if isinstance(e, Func):
        da = d(e.a)
        if da is _ZERO:
            return _ZERO
        a = e.a
        name = e.name
        if name == "sin":
            outer = func("cos", a)
        elif name == "cos":
            outer = neg(func("sin", a))
        elif name == "exp":
            outer = e
        elif name == "sqrt":
            outer = div(const(0.5), e)
        elif name == "atan":
            outer = div(_ONE, add(_ONE, power(a, const(2))))
        elif name == "log":
            outer = div(_ONE, a)
        elif name in ("re", "im", "conj"):
            return func(name, da)
        elif name == "step":
            b = sub(_ONE, a)
            den = add(ef(0, a), ef(0, b))
            num = add(mul(ef(2, a), ef(0, b)), mul(ef(0, a), ef(2, b)))
            outer = div(num, power(den, const(2)))
        else:  # pragma: no cover
            raise ValueError(name)
        return mul(outer, da)
    if isinstance(e, EF):
        da = d(e.a)
        if da is _ZERO:
            return _ZERO
        # d/dt exp(-1/t) t^-k = exp(-1/t) (t^-(k+2) - k t^-(k+1))
        outer = ef(e.k + 2, e.a)
        if e.k:
            outer = sub(outer, mul(const(e.k), ef(e.k + 1, e.a)))
        return mul(outer, da)
    if isinstance(e, Jb):
        total = _ZERO
        for a in e.args:
            total = add(total, mul(a, d(a)))
        return div(total, e) if total is not _ZERO else _ZERO
    if isinstance(e, (Lam, LamD)):
        alpha = e.alpha if isinstance(e, LamD) else (0,) * len(e.args)
        total = _ZERO
        for j, a in enumerate(e.args):
            da = d(a)
            if da is _ZERO:
                continue
            bumped = list(alpha)
            bumped[j] += 1
            total = add(total, mul(lamd(e.name, bumped, e.args), da))
        return total
    raise TypeError(f"cannot differentiate {type(e).__name__}")  # pragma: no cover

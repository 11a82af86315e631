"""Vectorised numerical evaluation of expressions."""
from __future__ import annotations

import functools

import numpy as np

from ..errors import DomainError, EvaluationError
from . import nodes as N
from .differentiate import derivative

__all__ = ["evaluate", "coords"]


def coords(p, dim: int | None = None) -> list:
    """Normalise a point argument to a list of per-coordinate arrays.

    A list or tuple is read as coordinates; a scalar or ndarray is the
    single coordinate of a one-dimensional point set.
    """
    if p is None:
        return []
    if isinstance(p, (list, tuple)):
        out = [np.asarray(c) for c in p]
    else:
        out = [np.asarray(p)]
    if dim is not None and len(out) != dim:
        raise ValueError(f"expected {dim} coordinates, got {len(out)}")
    return out


@functools.lru_cache(maxsize=4096)
def _order(e: N.Node) -> tuple:
    return tuple(N._postorder(e))


def _default_registry():
    from ..weights import REGISTRY
    return REGISTRY


def _weight_expr(weights, name: str, alpha, dim: int) -> N.Node:
    try:
        w = weights[name]
    except KeyError:
        raise EvaluationError(f"unknown weight {name!r}") from None
    expr = w if isinstance(w, N.Node) else w.expr_for(dim)
    if alpha is None or not any(alpha):
        return expr
    return derivative(expr, beta=alpha)


def _ef(k: int, t: np.ndarray) -> np.ndarray:
    t = np.real(t)
    pos = t > 0
    safe = np.where(pos, t, 1.0)
    with np.errstate(over="ignore", under="ignore"):
        val = np.exp(-1.0 / safe - k * np.log(safe))
    return np.where(pos, val, 0.0)


def _pow(base, ex, node, real):
    if isinstance(node.b, N.Const) and node.b.value.imag == 0.0:
        p = node.b.value.real
        if float(p).is_integer() and abs(p) <= 64:
            ip = int(p)
            if ip < 0 and np.any(base == 0):
                raise EvaluationError("zero raised to a negative power")
            if np.all(np.imag(base) == 0):
                return np.power(np.real(base), float(ip)).astype(complex)
            return np.power(base, ip)
        if np.all(np.imag(base) == 0):
            rb = np.real(base)
            if np.all(rb >= 0):
                if p < 0 and np.any(rb == 0):
                    raise EvaluationError("zero raised to a negative power")
                return np.power(rb, p).astype(complex)
            if real:
                raise DomainError("negative base raised to a fractional power")
    if np.any(base == 0):
        raise EvaluationError("zero base with a general exponent")
    if np.all(np.imag(ex) == 0) and np.all(np.imag(base) == 0) and np.all(np.real(base) > 0):
        return np.power(np.real(base), np.real(ex)).astype(complex)
    return np.exp(ex * np.log(base))


def evaluate(e: N.Node, x=None, xi=None, weights=None, z=None, real: bool = False,
             check: bool = True):
    """Evaluate ``e`` at points ``(x, xi)``; inputs broadcast with numpy rules.

    Returns a Python complex when every input is scalar, else a complex array.
    ``real=True`` declares the expression real-valued: sqrt/log of a negative
    real then raise DomainError instead of going complex.
    """
    if weights is None:
        weights = _default_registry()
    xs = coords(x)
    xis = coords(xi)
    zs = coords(z)
    env = {}
    for kind, vals in (("x", xs), ("xi", xis), ("z", zs)):
        for j, c in enumerate(vals, start=1):
            env[N.Var(kind, j)] = np.asarray(c, dtype=complex)
    scalar = all(np.ndim(c) == 0 for c in xs + xis + zs)
    val: dict = {}
    for node in _order(e):
        val[id(node)] = _eval_node(node, val, env, weights, real)
    out = val[id(e)]
    if check and not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(np.broadcast_to(out, np.shape(out))))
        idx = tuple(int(i) for i in bad[0]) if bad.size else None
        raise EvaluationError(f"non-finite value at index {idx}", index=idx)
    if scalar:
        return complex(out)
    return out


def _eval_node(node, val, env, weights, real):
    g = lambda c: val[id(c)]  # noqa: E731
    if isinstance(node, N.Const):
        return np.complex128(node.value)
    if isinstance(node, N.Var):
        try:
            return env[node]
        except KeyError:
            raise EvaluationError(f"no value supplied for {node.name}") from None
    if isinstance(node, N.Add):
        return g(node.a) + g(node.b)
    if isinstance(node, N.Sub):
        return g(node.a) - g(node.b)
    if isinstance(node, N.Mul):
        return g(node.a) * g(node.b)
    if isinstance(node, N.Div):
        den = g(node.b)
        if np.any(den == 0):
            raise EvaluationError("division by zero")
        return g(node.a) / den
    if isinstance(node, N.Neg):
        return -g(node.a)
    if isinstance(node, N.Pow):
        with np.errstate(all="ignore"):
            return _pow(g(node.a), g(node.b), node, real)
    if isinstance(node, N.Func):
        a = g(node.a)
        name = node.name
        with np.errstate(all="ignore"):
            if name in ("sqrt", "log") and np.all(np.imag(a) == 0):
                ra = np.real(a)
                if np.any(ra < 0):
                    if real:
                        k = [int(i) for i in np.argwhere(np.atleast_1d(ra) < 0)[0]]
                        raise DomainError(f"{name} of a negative argument at index {tuple(k)}",
                                          index=tuple(k))
                else:
                    if name == "log" and np.any(ra == 0):
                        raise EvaluationError("log of zero")
                    return (np.sqrt(ra) if name == "sqrt" else np.log(ra)).astype(complex)
            if name == "sin":
                return np.sin(a)
            if name == "cos":
                return np.cos(a)
            if name == "exp":
                return np.exp(a)
            if name == "sqrt":
                return np.sqrt(a)
            if name == "atan":
                if np.all(np.imag(a) == 0):
                    return np.arctan(np.real(a)).astype(complex)
                return np.arctan(a)
            if name == "log":
                return np.log(a)
            if name == "re":
                return np.real(a).astype(complex)
            if name == "im":
                return np.imag(a).astype(complex)
            if name == "conj":
                return np.conj(a)
            if name == "step":
                p, q = _ef(0, a), _ef(0, 1.0 - np.real(a))
                return (p / (p + q)).astype(complex)
    if isinstance(node, N.EF):
        return _ef(node.k, g(node.a)).astype(complex)
    if isinstance(node, N.Jb):
        total = 1.0
        for c in node.args:
            v = g(c)
            total = total + v * v
        if np.all(np.imag(total) == 0):
            return np.sqrt(np.real(total)).astype(complex)
        return np.sqrt(total)
    if isinstance(node, (N.Lam, N.LamD)):
        alpha = node.alpha if isinstance(node, N.LamD) else None
        expr = _weight_expr(weights, node.name, alpha, len(node.args))
        args = [np.real(g(c)) if np.all(np.imag(g(c)) == 0) else g(c) for c in node.args]
        return np.asarray(evaluate(expr, None, args, weights=weights, check=False), dtype=complex)
    raise TypeError(f"cannot evaluate {type(node).__name__}")  # pragma: no cover

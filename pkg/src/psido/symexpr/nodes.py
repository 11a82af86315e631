"""Hash-consed expression nodes for symbols sigma(x, xi).

Every node is interned: two structurally equal expressions are the same
Python object, so identity comparison is structural comparison and nodes
can key memo tables cheaply.  Nodes are immutable.
"""
from __future__ import annotations

import threading
import weakref

import numpy as np

__all__ = [
    "Node", "Const", "Var", "Add", "Sub", "Mul", "Div", "Neg", "Pow",
    "Func", "EF", "Jb", "Lam", "LamD",
    "FUNCTIONS", "const", "var", "xvars", "xivars",
    "add", "sub", "mul", "div", "neg", "power", "func", "ef", "jb", "lam", "lamd",
    "children", "free_vars", "depends_on", "node_count", "simplify",
]

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "atan", "log", "re", "im", "conj", "step")

_table: "weakref.WeakValueDictionary[tuple, Node]" = weakref.WeakValueDictionary()
_lock = threading.Lock()


class Node:
    __slots__ = ("__weakref__",)

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")

    def __str__(self):
        from .printer import to_text
        return to_text(self)

    def __repr__(self):
        return f"<{type(self).__name__} {self}>"

    # operator sugar builds simplified nodes
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, other):
        return power(self, _coerce(other))


def _coerce(value) -> Node:
    if isinstance(value, Node):
        return value
    return const(value)


def _intern(cls, key: tuple, fields: dict) -> Node:
    full = (cls,) + key
    with _lock:
        node = _table.get(full)
        if node is None:
            node = object.__new__(cls)
            for name, value in fields.items():
                object.__setattr__(node, name, value)
            _table[full] = node
    return node


class Const(Node):
    __slots__ = ("value",)

    def __new__(cls, value):
        value = complex(value)
        value = complex(value.real + 0.0, value.imag + 0.0)  # no signed zeros
        if value != value:  # NaN never interns
            node = object.__new__(cls)
            object.__setattr__(node, "value", value)
            return node
        return _intern(cls, (value,), {"value": value})

    @property
    def is_real(self) -> bool:
        return self.value.imag == 0.0


class Var(Node):
    """Coordinate variable: kind 'x', 'xi' or 'z', 1-based index."""

    __slots__ = ("kind", "index")

    def __new__(cls, kind: str, index: int):
        if kind not in ("x", "xi", "z"):
            raise ValueError(f"unknown variable kind {kind!r}")
        return _intern(cls, (kind, int(index)), {"kind": kind, "index": int(index)})

    @property
    def name(self) -> str:
        return self.kind if self.kind == "z" else f"{self.kind}{self.index}"


class _Binary(Node):
    __slots__ = ("a", "b")

    def __new__(cls, a: Node, b: Node):
        return _intern(cls, (a, b), {"a": a, "b": b})


class Add(_Binary):
    __slots__ = ()


class Sub(_Binary):
    __slots__ = ()


class Mul(_Binary):
    __slots__ = ()


class Div(_Binary):
    __slots__ = ()


class Pow(_Binary):
    __slots__ = ()


class Neg(Node):
    __slots__ = ("a",)

    def __new__(cls, a: Node):
        return _intern(cls, (a,), {"a": a})


class Func(Node):
    __slots__ = ("name", "a")

    def __new__(cls, name: str, a: Node):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        return _intern(cls, (name, a), {"name": name, "a": a})


class EF(Node):
    """exp(-1/t) * t**(-k) for real t > 0, else 0 (smooth glue family)."""

    __slots__ = ("k", "a")

    def __new__(cls, k: int, a: Node):
        return _intern(cls, (int(k), a), {"k": int(k), "a": a})


class Jb(Node):
    """Japanese bracket sqrt(1 + sum a_i^2) of a vector argument."""

    __slots__ = ("args",)

    def __new__(cls, args):
        args = tuple(args)
        return _intern(cls, (args,), {"args": args})


class Lam(Node):
    """Named weight evaluated at the vector ``args`` (default: xi)."""

    __slots__ = ("name", "args")

    def __new__(cls, name: str, args):
        args = tuple(args)
        return _intern(cls, (name, args), {"name": name, "args": args})


class LamD(Node):
    """Partial derivative ``d^alpha`` of a named weight, evaluated at ``args``."""

    __slots__ = ("name", "alpha", "args")

    def __new__(cls, name: str, alpha, args):
        alpha = tuple(int(a) for a in alpha)
        args = tuple(args)
        if len(alpha) != len(args):
            raise ValueError("multi-index length must match the argument vector")
        return _intern(cls, (name, alpha, args), {"name": name, "alpha": alpha, "args": args})


ZERO = Const(0.0)
ONE = Const(1.0)


def children(e: Node) -> tuple:
    if isinstance(e, _Binary):
        return (e.a, e.b)
    if isinstance(e, (Neg, Func, EF)):
        return (e.a,)
    if isinstance(e, (Jb, Lam, LamD)):
        return e.args
    return ()


def _postorder(e: Node) -> list:
    seen = set()
    order = []
    stack = [(e, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for c in reversed(children(node)):
            if id(c) not in seen:
                stack.append((c, False))
    return order


def free_vars(e: Node) -> set:
    return {n for n in _postorder(e) if isinstance(n, Var)}


def depends_on(e: Node, kind: str) -> bool:
    return any(v.kind == kind for v in free_vars(e))


def node_count(e: Node) -> int:
    """Number of distinct nodes (DAG size)."""
    return len(_postorder(e))


def tree_size(e: Node) -> int:
    """Number of nodes once shared subexpressions are expanded (printed size)."""
    size: dict = {}
    for node in _postorder(e):
        size[id(node)] = 1 + sum(size[id(c)] for c in children(node))
    return size[id(e)]


# ---------------------------------------------------------------------------
# constructors with constant folding and the x*0 / x*1 rules

def const(value) -> Const:
    return Const(value)


def var(kind: str, index: int) -> Var:
    return Var(kind, index)


def xvars(n: int) -> tuple:
    return tuple(Var("x", j) for j in range(1, n + 1))


def xivars(n: int) -> tuple:
    return tuple(Var("xi", j) for j in range(1, n + 1))


def _c(e):
    return e.value if isinstance(e, Const) else None


def _fold(fn, *values) -> Const:
    with np.errstate(all="ignore"):
        return Const(complex(fn(*[np.complex128(v) for v in values])))


def add(a: Node, b: Node) -> Node:
    ca, cb = _c(a), _c(b)
    if ca is not None and cb is not None:
        return _fold(np.add, ca, cb)
    if ca == 0:
        return b
    if cb == 0:
        return a
    return Add(a, b)


def sub(a: Node, b: Node) -> Node:
    ca, cb = _c(a), _c(b)
    if ca is not None and cb is not None:
        return _fold(np.subtract, ca, cb)
    if cb == 0:
        return a
    if ca == 0:
        return neg(b)
    return Sub(a, b)


def mul(a: Node, b: Node) -> Node:
    ca, cb = _c(a), _c(b)
    if ca is not None and cb is not None:
        return _fold(np.multiply, ca, cb)
    if ca == 0 or cb == 0:
        return ZERO
    if ca == 1:
        return b
    if cb == 1:
        return a
    return Mul(a, b)


def div(a: Node, b: Node) -> Node:
    ca, cb = _c(a), _c(b)
    if cb == 0:
        raise ZeroDivisionError("division by the constant 0")
    if ca is not None and cb is not None:
        return _fold(np.divide, ca, cb)
    if ca == 0:
        return ZERO
    if cb == 1:
        return a
    return Div(a, b)


def neg(a: Node) -> Node:
    ca = _c(a)
    if ca is not None:
        return Const(-ca)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def power(a: Node, b: Node) -> Node:
    ca, cb = _c(a), _c(b)
    if cb == 0:
        return ONE
    if cb == 1:
        return a
    if ca is not None and cb is not None:
        if ca == 0 and cb.real < 0:
            raise ZeroDivisionError("0 raised to a negative power")
        return _fold(np.power, ca, cb)
    return Pow(a, b)


_FOLDERS = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt,
    "atan": np.arctan, "log": np.log, "re": np.real, "im": np.imag, "conj": np.conj,
}


def func(name: str, a: Node) -> Node:
    ca = _c(a)
    if ca is not None and name in _FOLDERS:
        if name == "log" and ca == 0:
            raise ZeroDivisionError("log(0)")
        return _fold(_FOLDERS[name], ca)
    if name in ("re", "conj") and isinstance(a, Func) and a.name in ("re", "im"):
        return a
    return Func(name, a)


def ef(k: int, a: Node) -> Node:
    return EF(k, a)


def jb(args) -> Node:
    return Jb(args)


def lam(name: str, args) -> Node:
    return Lam(name, args)


def lamd(name: str, alpha, args) -> Node:
    if not any(alpha):
        return Lam(name, args)
    return LamD(name, alpha, args)


def rebuild(e: Node, kids: tuple) -> Node:
    """Rebuild ``e`` with new children using the simplifying constructors."""
    if isinstance(e, Add):
        return add(*kids)
    if isinstance(e, Sub):
        return sub(*kids)
    if isinstance(e, Mul):
        return mul(*kids)
    if isinstance(e, Div):
        return div(*kids)
    if isinstance(e, Pow):
        return power(*kids)
    if isinstance(e, Neg):
        return neg(kids[0])
    if isinstance(e, Func):
        return func(e.name, kids[0])
    if isinstance(e, EF):
        return ef(e.k, kids[0])
    if isinstance(e, Jb):
        return jb(kids)
    if isinstance(e, Lam):
        return lam(e.name, kids)
    if isinstance(e, LamD):
        return lamd(e.name, e.alpha, kids)
    return e


def transform(e: Node, leaf) -> Node:
    """Bottom-up rebuild; ``leaf(node)`` may replace Const/Var leaves."""
    memo: dict = {}
    for node in _postorder(e):
        kids = children(node)
        if kids:
            memo[id(node)] = rebuild(node, tuple(memo[id(c)] for c in kids))
        else:
            memo[id(node)] = leaf(node)
    return memo[id(e)]


def simplify(e: Node) -> Node:
    """Constant folding and the x*0, x*1 rules; nothing more."""
    return transform(e, lambda n: n)


def substitute(e: Node, mapping: dict) -> Node:
    """Replace variables by expressions; ``mapping`` is keyed by Var nodes."""
    return transform(e, lambda n: mapping.get(n, n) if isinstance(n, Var) else n)

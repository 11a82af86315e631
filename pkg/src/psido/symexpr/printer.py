"""Text form of expressions with the minimal parentheses for a round trip."""
from __future__ import annotations

import math

from . import nodes as N

__all__ = ["to_text"]

# binding strength: higher binds tighter
_ADD, _MUL, _NEG, _POW, _ATOM = 1, 2, 3, 4, 5


def _num(v: float, allow_pi: bool = True) -> str:
    if allow_pi and v == math.pi:
        return "pi"
    if float(v).is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def _signed(v: float) -> str:
    return _num(v, False) if v >= 0 else "-" + _num(-v, False)


def _const(value: complex):
    """Return (text, precedence) for a constant."""
    re_, im_ = value.real, value.imag
    if im_ == 0.0:
        if re_ < 0:
            # a negative literal parses back only as a unary operand
            return "-" + _num(-re_, False), _NEG
        return _num(re_), _ATOM
    if re_ == 0.0 and im_ == 1.0:
        return "i", _ATOM
    return f"cplx({_signed(re_)}, {_signed(im_)})", _ATOM


def _is_default(args: tuple, dim) -> str | None:
    if dim is None:
        return None
    if args == N.xivars(dim):
        return "xi"
    if args == N.xvars(dim):
        return "x"
    return None


def to_text(e: N.Node, dim: int | None = None) -> str:
    """Render ``e``; with ``dim`` given, default vector arguments print short."""
    memo: dict = {}

    def vec(args):
        short = _is_default(args, dim)
        if short:
            return short
        return "[" + ", ".join(go(a)[0] for a in args) + "]"

    def wrap(child, need: int) -> str:
        text, prec = go(child)
        return text if prec >= need else f"({text})"

    def go(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, N.Const):
            out = _const(node.value)
        elif isinstance(node, N.Var):
            out = node.name, _ATOM
        elif isinstance(node, (N.Add, N.Sub)):
            op = " + " if isinstance(node, N.Add) else " - "
            out = wrap(node.a, _ADD) + op + wrap(node.b, _MUL), _ADD
        elif isinstance(node, (N.Mul, N.Div)):
            op = "*" if isinstance(node, N.Mul) else "/"
            out = wrap(node.a, _MUL) + op + wrap(node.b, _NEG), _MUL
        elif isinstance(node, N.Neg):
            inner, prec = go(node.a)
            # "-2" would re-parse as a literal, and "--x" is fine but keep it readable
            if prec < _NEG or isinstance(node.a, N.Const):
                inner = f"({inner})"
            out = "-" + inner, _NEG
        elif isinstance(node, N.Pow):
            base, prec = go(node.a)
            if prec <= _POW:
                base = f"({base})"
            out = base + "^" + wrap(node.b, _NEG), _POW
        elif isinstance(node, N.Func):
            out = f"{node.name}({go(node.a)[0]})", _ATOM
        elif isinstance(node, N.EF):
            arg = go(node.a)[0]
            out = (f"ef({arg})" if node.k == 0 else f"ef({arg}, {node.k})"), _ATOM
        elif isinstance(node, N.Jb):
            out = f"jb({vec(node.args)})", _ATOM
        elif isinstance(node, N.Lam):
            short = _is_default(node.args, dim)
            if short == "xi":
                out = f"lam({node.name})", _ATOM
            else:
                out = f"lam({node.name}, {vec(node.args)})", _ATOM
        elif isinstance(node, N.LamD):
            alpha = "[" + ", ".join(str(a) for a in node.alpha) + "]"
            if _is_default(node.args, dim) == "xi":
                out = f"lamd({node.name}, {alpha})", _ATOM
            else:
                out = f"lamd({node.name}, {alpha}, {vec(node.args)})", _ATOM
        else:  # pragma: no cover
            raise TypeError(f"unknown node {type(node).__name__}")
        memo[key] = out
        return out

    return go(e)[0]

"""Recursive-descent parser for the symbol language.

Grammar (EBNF, whitespace is insignificant)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ ("^" | "**") unary ] ;          (* right associative *)
    atom    = number | name | call | "(" expr ")" ;
    call    = func "(" expr ")"
            | "jb" "(" vector ")"
            | "lam" "(" ident [ "," vector ] ")"
            | "lamd" "(" ident "," "[" int { "," int } "]" [ "," vector ] ")"
            | "ef" "(" expr [ "," int ] ")"
            | "cplx" "(" signed "," signed ")" ;
    vector  = "x" | "xi" | "[" expr { "," expr } "]" ;
    func    = "sin" | "cos" | "exp" | "sqrt" | "atan" | "log"
            | "re" | "im" | "conj" | "step" ;
    name    = "x" digit+ | "xi" digit+ | "z" | "pi" | "i" ;

A leading minus directly in front of a number literal folds into a negative
constant unless the literal is the base of a power, so ``-2^2`` is ``-(2^2)``.
"""
from __future__ import annotations

import math
import re

from . import nodes as N
from .nodes import FUNCTIONS

__all__ = ["ParseError", "parse"]


class ParseError(ValueError):
    """Syntax error at byte ``offset`` of the input."""

    def __init__(self, offset: int, expected: str, text: str = ""):
        self.offset = offset
        self.expected = expected
        self.text = text
        super().__init__(f"at offset {offset}: expected {expected}")


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),\[\]]))"
)


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    while True:
        m = re.compile(r"\s*").match(text, pos)
        pos = m.end()
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(pos, "a number, identifier or operator", text)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        value = m.group(kind)
        if value == "**":
            value = "^"
        toks.append((kind, value, start))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, dim: int, allow_z: bool):
        self.text = text
        self.dim = dim
        self.allow_z = allow_z
        self.toks = _tokenize(text)
        self.i = 0

    # token helpers
    def peek(self, ahead: int = 0):
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, expected: str, tok=None):
        tok = tok or self.peek()
        raise ParseError(tok[2], expected, self.text)

    def expect(self, value: str):
        tok = self.peek()
        if tok[1] != value or tok[0] not in ("op",):
            self.error(f"'{value}'")
        return self.next()

    def at(self, value: str) -> bool:
        tok = self.peek()
        return tok[0] == "op" and tok[1] == value

    # grammar
    def parse(self):
        e = self.expr()
        if self.peek()[0] != "eof":
            self.error("an operator or end of input")
        return e

    def expr(self):
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.next()[1]
            rhs = self.term()
            e = N.Add(e, rhs) if op == "+" else N.Sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.at("*") or self.at("/"):
            op = self.next()[1]
            rhs = self.unary()
            e = N.Mul(e, rhs) if op == "*" else N.Div(e, rhs)
        return e

    def unary(self):
        if self.at("-"):
            self.next()
            nxt = self.peek()
            after = self.peek(1)
            if nxt[0] == "num" and not (after[0] == "op" and after[1] == "^"):
                self.next()
                return N.Const(-_number(nxt[1]))
            return N.Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.at("^"):
            self.next()
            return N.Pow(base, self.unary())
        return base

    def signed(self) -> float:
        neg = False
        if self.at("-"):
            self.next()
            neg = True
        tok = self.peek()
        if tok[0] != "num":
            self.error("a number")
        self.next()
        v = _number(tok[1])
        return -v if neg else v

    def integer(self) -> int:
        neg = False
        if self.at("-"):
            self.next()
            neg = True
        tok = self.peek()
        if tok[0] != "num" or not tok[1].isdigit():
            self.error("an integer")
        self.next()
        return -int(tok[1]) if neg else int(tok[1])

    def vector(self):
        tok = self.peek()
        if tok[0] == "id" and tok[1] in ("x", "xi"):
            self.next()
            return N.xvars(self.dim) if tok[1] == "x" else N.xivars(self.dim)
        if self.at("["):
            self.next()
            items = [self.expr()]
            while self.at(","):
                self.next()
                items.append(self.expr())
            self.expect("]")
            return tuple(items)
        self.error("a vector argument 'x', 'xi' or '[...]'")

    def atom(self):
        tok = self.peek()
        kind, value, off = tok
        if kind == "num":
            self.next()
            return N.Const(_number(value))
        if kind == "op" and value == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if kind != "id":
            self.error("an operand")
        self.next()
        if value in FUNCTIONS:
            self.expect("(")
            arg = self.expr()
            if self.at(","):
                self.error(f"')' ({value} takes one argument)")
            self.expect(")")
            return N.Func(value, arg)
        if value == "jb":
            self.expect("(")
            args = self.vector()
            self.expect(")")
            return N.Jb(args)
        if value == "lam":
            self.expect("(")
            name = self.ident()
            args = N.xivars(self.dim)
            if self.at(","):
                self.next()
                args = self.vector()
            self.expect(")")
            return N.Lam(name, args)
        if value == "lamd":
            self.expect("(")
            name = self.ident()
            self.expect(",")
            self.expect("[")
            alpha = [self.integer()]
            while self.at(","):
                self.next()
                alpha.append(self.integer())
            self.expect("]")
            args = N.xivars(self.dim)
            if self.at(","):
                self.next()
                args = self.vector()
            self.expect(")")
            if len(alpha) != len(args):
                raise ParseError(off, "a multi-index matching the argument length", self.text)
            return N.LamD(name, alpha, args)
        if value == "ef":
            self.expect("(")
            arg = self.expr()
            k = 0
            if self.at(","):
                self.next()
                k = self.integer()
            self.expect(")")
            return N.EF(k, arg)
        if value == "cplx":
            self.expect("(")
            re_ = self.signed()
            self.expect(",")
            im_ = self.signed()
            self.expect(")")
            return N.Const(complex(re_, im_))
        if value == "pi":
            return N.Const(math.pi)
        if value == "i":
            return N.Const(1j)
        if value == "z" and self.allow_z:
            return N.Var("z", 1)
        m = re.fullmatch(r"(xi|x)(\d+)", value)
        if m:
            idx = int(m.group(2))
            if 1 <= idx <= self.dim:
                return N.Var(m.group(1), idx)
        raise ParseError(off, "a known identifier", self.text)

    def ident(self) -> str:
        tok = self.peek()
        if tok[0] != "id":
            self.error("a weight name")
        self.next()
        return tok[1]


def _number(text: str) -> float:
    return float(text) if any(c in text for c in ".eE") else float(int(text))


def parse(text: str, dim: int = 1, allow_z: bool = False) -> N.Node:
    """Parse ``text`` into an unsimplified expression over ``dim`` variables.

    ``allow_z`` enables the scalar variable ``z`` used by post-composition
    functions F(z).
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    return _Parser(text, dim, allow_z).parse()

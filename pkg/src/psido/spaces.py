"""Weighted Sobolev norms built from the multipliers J_m = T_{Lambda^-m}."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptor import SymbolDescriptor
from .quantize import Field, apply_op
from .symexpr import Const, Lam, Node, mul, power, xivars, xvars
from .weights import BRACKET, Weight

__all__ = ["NormSpec", "lp_norm", "j_symbol", "apply_J", "sobolev_norm", "sg_j_symbol",
           "apply_sg_J", "sg_norm"]


@dataclass(frozen=True)
class NormSpec:
    """H^{m,p} with weight ``weight``; SG norms set ``m=(m1, m2)`` and ``xweight``."""

    m: float | tuple = 0.0
    p: float = 2.0
    weight: Weight = BRACKET
    xweight: Weight | None = None

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if isinstance(self.m, (tuple, list)) != (self.xweight is not None):
            raise ValueError("SG norms need both an order pair and an x-weight")

    @property
    def sg(self) -> bool:
        return self.xweight is not None


def lp_norm(u: Field, p: float = 2.0) -> float:
    """(cell * sum |u_j|^p)^(1/p) with the cell size of the field's domain."""
    a = np.abs(u.values.ravel())
    return float((u.grid.cell(u.domain) * np.sum(a ** p)) ** (1.0 / p))


def j_symbol(m: float, w: Weight, dim: int) -> Node:
    """Lambda(xi)^(-m) as an expression."""
    return power(Lam(w.name, xivars(dim)), Const(-float(m)))


def sg_j_symbol(m1: float, m2: float, w: Weight, xw: Weight, dim: int) -> Node:
    """Lambda_x(x)^(-m2) Lambda(xi)^(-m1); reduces to ``j_symbol`` when m2 = 0."""
    return mul(power(Lam(xw.name, xvars(dim)), Const(-float(m2))), j_symbol(m1, w, dim))


def _desc(expr: Node, w: Weight, dim: int) -> SymbolDescriptor:
    return SymbolDescriptor(expr, 0.0, 1.0 / w.mu, w, dim)


def apply_J(u: Field, m: float, w: Weight = BRACKET) -> Field:
    """Fourier multiplier by Lambda(xi)^(-m); m = 0 returns ``u`` unchanged."""
    if m == 0:
        return u
    return apply_op(_desc(j_symbol(m, w, u.grid.dim), w, u.grid.dim), u)


def apply_sg_J(u: Field, m1: float, m2: float, w: Weight = BRACKET,
               xw: Weight = BRACKET) -> Field:
    """T_{Lambda_x(x)^(-m2) Lambda(xi)^(-m1)} u, the x-dependent part to the left."""
    if m1 == 0 and m2 == 0:
        return u
    return apply_op(_desc(sg_j_symbol(m1, m2, w, xw, u.grid.dim), w, u.grid.dim), u)


def sobolev_norm(u: Field, spec: NormSpec) -> float:
    """||J_{-m} u||_p, or ||J_{-m1,-m2} u||_p for SG specs."""
    if spec.sg:
        m1, m2 = spec.m
        return lp_norm(apply_sg_J(u, -m1, -m2, spec.weight, spec.xweight), spec.p)
    return lp_norm(apply_J(u, -spec.m, spec.weight), spec.p)


def sg_norm(u: Field, m1: float, m2: float, p: float = 2.0, w: Weight = BRACKET,
            xw: Weight = BRACKET) -> float:
    return sobolev_norm(u, NormSpec((m1, m2), p, w, xw))

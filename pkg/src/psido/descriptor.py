"""Symbol descriptors: an expression plus its claimed order, type and weights."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .symexpr import Node, as_expr, evaluate, to_text
from .weights import BRACKET, Weight, get_weight

__all__ = ["SymbolDescriptor", "describe"]


@dataclass(frozen=True)
class SymbolDescriptor:
    """sigma(x, xi) with order ``m`` (a pair (m1, m2) in SG mode) and type ``rho``.

    In SG mode ``m = (m1, m2)`` where m1 is the xi-order and m2 the x-order,
    and ``xweight`` is the weight applied to x.
    """

    expr: Node
    m: float | tuple = 0.0
    rho: float = 1.0
    weight: Weight = BRACKET
    dim: int = 1
    xweight: Weight | None = None

    def __post_init__(self):
        if not isinstance(self.expr, Node):
            object.__setattr__(self, "expr", as_expr(self.expr, self.dim))
        sg_orders = isinstance(self.m, (tuple, list))
        if sg_orders:
            object.__setattr__(self, "m", tuple(float(v) for v in self.m))
        if sg_orders != (self.xweight is not None):
            raise ValueError("SG mode needs both an order pair and an x-weight")
        if not (0 < self.rho <= 1.0 / self.weight.mu + 1e-12):
            raise ValueError(f"rho must lie in (0, 1/mu] = (0, {1.0 / self.weight.mu}]")

    @property
    def sg(self) -> bool:
        return self.xweight is not None

    @property
    def order(self) -> float:
        """xi-order (m, or m1 in SG mode)."""
        return self.m[0] if self.sg else self.m

    def with_expr(self, expr: Node, m=None) -> "SymbolDescriptor":
        return replace(self, expr=expr, m=self.m if m is None else m)

    def __call__(self, x, xi):
        return evaluate(self.expr, x, xi)

    def sample(self, xpts, xipts) -> np.ndarray:
        """Table sigma(x_p, xi_q) for point lists of shape (P, n) and (Q, n)."""
        xpts = np.atleast_2d(np.asarray(xpts, dtype=float))
        xipts = np.atleast_2d(np.asarray(xipts, dtype=float))
        xs = [xpts[:, j][:, None] for j in range(self.dim)]
        xis = [xipts[:, j][None, :] for j in range(self.dim)]
        out = evaluate(self.expr, xs, xis)
        return np.broadcast_to(out, (xpts.shape[0], xipts.shape[0])).astype(complex)

    def to_dict(self) -> dict:
        d = {
            "expr": to_text(self.expr, self.dim),
            "m": list(self.m) if self.sg else self.m,
            "rho": self.rho,
            "weight": self.weight.name,
            "dim": self.dim,
        }
        if self.sg:
            d["xweight"] = self.xweight.name
        return d


def describe(expr, m=0.0, rho=1.0, weight="bracket", dim=1, xweight=None) -> SymbolDescriptor:
    """Convenience constructor accepting text and weight names."""
    w = get_weight(weight, dim) if not isinstance(weight, Weight) else weight
    xw = None
    if xweight is not None:
        xw = get_weight(xweight, dim) if not isinstance(xweight, Weight) else xweight
    return SymbolDescriptor(as_expr(expr, dim), m, rho, w, dim, xw)

"""Asymptotic symbol calculus: composition, formal adjoint and parametrix."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .descriptor import SymbolDescriptor
from .errors import PreconditionError, SizeCapError
from .symclass import Box, EllipticityCertificate, _lam, _samples, _table
from .symexpr import (Const, Func, Node, add, derivative, div, evaluate, func, mul, node_count,
                      sub, to_text, tree_size, xivars)
from .symexpr.nodes import Jb, power
from .weights import BRACKET

__all__ = ["ExpansionResult", "compose_symbols", "adjoint_symbol", "cutoff", "parametrix",
           "remainder_decay_probe", "ProbeFit", "AST_CAP"]

AST_CAP = 200_000
TEXT_CAP = 20_000  # expressions with a larger expanded tree are not printed


@dataclass
class ExpansionResult:
    expr: Node
    M: int
    claimed_order: float
    terms: list
    descriptor: SymbolDescriptor

    def to_dict(self) -> dict:
        dim = self.descriptor.dim

        def text(e):
            return to_text(e, dim) if tree_size(e) <= TEXT_CAP else None
        return {
            "symbol": text(self.expr),
            "M": self.M,
            "claimed_remainder_order": self.claimed_order,
            "terms": [{"mu": list(mu), "term": text(t)} for mu, t in self.terms],
            "nodes": node_count(self.expr),
            "tree_size": tree_size(self.expr),
        }


def _multi(n: int, M: int):
    """Multi-indices with |mu| < M in graded lexicographic order."""
    out = [mu for mu in itertools.product(range(M), repeat=n) if sum(mu) < M]
    return sorted(out, key=lambda mu: (sum(mu), tuple(-a for a in mu)))


def _coef(mu) -> Const:
    k = sum(mu)
    fact = math.prod(math.factorial(a) for a in mu)
    return Const((-1j) ** k / fact)


def _check_size(e: Node, M: int, cap: int):
    if node_count(e) > cap:
        raise SizeCapError(f"expansion exceeds {cap} nodes at M={M}; try a lower M")


def _compose_expr(a: Node, b: Node, n: int, M: int, cap: int):
    terms = []
    total = Const(0.0)
    for mu in _multi(n, M):
        t = mul(_coef(mu), mul(derivative(a, beta=mu), derivative(b, alpha=mu)))
        terms.append((mu, t))
        total = add(total, t)
        _check_size(total, M, cap)
    return total, terms


def compose_symbols(s: SymbolDescriptor, t: SymbolDescriptor, M: int = 3,
                    cap: int = AST_CAP) -> ExpansionResult:
    """sum_{|mu|<M} (-i)^|mu| / mu! (d_xi^mu sigma)(d_x^mu tau), the symbol of T_s T_t."""
    if M < 1:
        raise ValueError("M must be at least 1")
    if s.dim != t.dim or s.weight != t.weight:
        raise ValueError("composition needs the same dimension and weight")
    expr, terms = _compose_expr(s.expr, t.expr, s.dim, M, cap)
    if s.sg:
        m = (s.m[0] + t.m[0], s.m[1] + t.m[1])
        claimed = m[0] - s.rho * M
    else:
        m = s.m + t.m
        claimed = m - s.rho * M
    desc = SymbolDescriptor(expr, m, s.rho, s.weight, s.dim, s.xweight)
    return ExpansionResult(expr, M, claimed, terms, desc)


def adjoint_symbol(s: SymbolDescriptor, M: int = 3, cap: int = AST_CAP) -> ExpansionResult:
    """sum_{|mu|<M} (-i)^|mu| / mu! d_xi^mu d_x^mu conj(sigma)."""
    if M < 1:
        raise ValueError("M must be at least 1")
    c = func("conj", s.expr)
    terms = []
    total = Const(0.0)
    for mu in _multi(s.dim, M):
        t = mul(_coef(mu), derivative(c, alpha=mu, beta=mu))
        terms.append((mu, t))
        total = add(total, t)
        _check_size(total, M, cap)
    desc = SymbolDescriptor(total, s.m, s.rho, s.weight, s.dim, s.xweight)
    return ExpansionResult(total, M, s.order - s.rho * M, terms, desc)


def cutoff(R: float, dim: int) -> Node:
    """Smooth chi_R(xi): 0 for |xi| <= R, 1 for |xi| >= 2R (1 everywhere if R = 0)."""
    if R <= 0:
        return Const(1.0)
    r2 = Const(0.0)
    for v in xivars(dim):
        r2 = add(r2, power(v, Const(2.0)))
    arg = div(sub(r2, Const(R * R)), Const(3.0 * R * R))
    return func("step", arg)


def parametrix(s: SymbolDescriptor, M: int = 3, K: int = 2, R: float | None = None,
               certificate: EllipticityCertificate | None = None, box: Box | None = None,
               threshold: float = 1e-8, cap: int = AST_CAP) -> SymbolDescriptor:
    """Newton-type parametrix tau_K with T_tau T_sigma = I + smoothing.

    tau_0 = chi_R / sigma and tau_{k+1} = (1 - r_k) # tau_k with
    r_k = tau_k # sigma - 1, every # truncated at order M.
    """
    if not isinstance(certificate, EllipticityCertificate):
        raise PreconditionError("parametrix needs an ellipticity certificate for the symbol")
    R = certificate.R if R is None else float(R)
    if R < certificate.R:
        raise PreconditionError(f"cutoff radius {R} is inside the certified radius {certificate.R}")
    box = box or Box()
    smp = _samples(s, box)
    live = np.linalg.norm(smp.xipts, axis=1) > R if R > 0 else np.ones(len(smp.xipts), bool)
    with np.errstate(all="ignore"):
        vals = np.abs(_table(s.expr, smp.xpts, smp.xipts[live]))
    if vals.size and float(np.min(vals)) < threshold:
        i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
        raise PreconditionError(
            f"|sigma| falls below {threshold} where the cutoff is active, at "
            f"x={smp.xpts[i].tolist()}, xi={smp.xipts[live][j].tolist()}")
    n = s.dim
    tau = div(cutoff(R, n), s.expr)
    one = Const(1.0)
    for _ in range(K):
        r, _t = _compose_expr(tau, s.expr, n, M, cap)
        r = sub(r, one)
        tau, _t = _compose_expr(sub(one, r), tau, n, M, cap)
    m = tuple(-v for v in s.m) if s.sg else -s.m
    return SymbolDescriptor(tau, m, s.rho, s.weight, n, s.xweight)


@dataclass
class ProbeFit:
    slope: float
    claimed_order: float
    radii: list
    errors: list
    verdict: str
    margin: float = 0.3
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def remainder_decay_probe(exact: np.ndarray, approx, claimed_order: float, radii, grid,
                          weight=None, x_mask=None, margin: float = 0.3) -> ProbeFit:
    """Fit log sup_x |exact - approx| against log Lambda(xi) at xi = +-r.

    ``exact`` is an (nodes x frequencies) table from ``extract_symbol``;
    ``approx`` is an expression or descriptor.  Passes when the slope is at
    most ``claimed_order + margin``; identically zero errors give -inf.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 4:
        raise ValueError("remainder probe needs at least 4 radii")
    if grid.dim != 1:
        raise ValueError("remainder probe samples rays of a one-dimensional grid")
    expr = approx.expr if isinstance(approx, SymbolDescriptor) else approx
    w = weight or (approx.weight if isinstance(approx, SymbolDescriptor) else BRACKET)
    freqs = grid.freqs
    xs = grid.nodes
    mask = np.ones(len(xs), bool) if x_mask is None else np.asarray(x_mask, bool)
    errs = []
    for r in radii:
        e = 0.0
        for sgn in (1.0, -1.0):
            k = int(np.argmin(np.abs(freqs - sgn * r)))
            if abs(freqs[k] - sgn * r) > 1e-9 * max(1.0, r):
                raise ValueError(f"radius {sgn * r} is not a grid frequency")
            vals = np.broadcast_to(evaluate(expr, xs[mask], freqs[k]), xs[mask].shape)
            e = max(e, float(np.max(np.abs(exact[mask, k] - vals))))
        errs.append(e)
    errs_a = np.array(errs)
    lam = np.asarray(_lam(w, np.array(radii)[:, None]))
    notes = []
    if np.all(errs_a == 0):
        slope = -math.inf
        notes.append("errors are identically zero")
    else:
        pos = errs_a > 0
        slope = float(np.polyfit(np.log(lam[pos]), np.log(errs_a[pos]), 1)[0])
    verdict = "pass" if slope <= claimed_order + margin else "fail"
    return ProbeFit(slope, claimed_order, radii, errs, verdict, margin, notes)

"""Rescaling operators R_{lam,t}(x0, xi0), conjugated symbols, and the
concentration probes built on them.

    R u(x)      = lam^(t n/p) exp(i lam x.xi0) u(lam^t (x - x0))
    R^-1 v(x)   = lam^(-t n/p) exp(-i lam (x0 + lam^-t x).xi0) v(x0 + lam^-t x)
    sigma_{lam,t}(x, eta) = sigma(x0 + lam^-t x, lam xi0 + lam^t eta)
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .calculus import compose_symbols
from .descriptor import SymbolDescriptor
from .quantize import Field, GridSpec, apply_op, inner
from .spaces import j_symbol, lp_norm
from .symclass import Witness, _lam
from .symexpr import Const, Node, Var, add, derivative, evaluate, mul, simplify, substitute

__all__ = ["RescaleParams", "apply_R", "apply_R_inverse", "weak_decay_probe",
           "conjugated_symbol", "decay_exponent_probe", "concentration_probe",
           "ConcentrationReport", "conjugate_order_reduction", "default_t", "DecayFit",
           "WeakDecayTable", "ESTIMATE_NOTE"]

ESTIMATE_NOTE = ("the estimate divides by Lambda(eta)^(+rho|beta|), a growing factor; "
                 "it is verified exactly as stated")


@dataclass(frozen=True)
class RescaleParams:
    lam: float = 1.0
    t: float = 0.25
    x0: tuple = (0.0,)
    xi0: tuple = (1.0,)
    p: float = 2.0

    def __post_init__(self):
        if self.lam < 1:
            raise ValueError("lambda must be >= 1")
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        object.__setattr__(self, "x0", tuple(float(v) for v in np.atleast_1d(self.x0)))
        object.__setattr__(self, "xi0", tuple(float(v) for v in np.atleast_1d(self.xi0)))
        if len(self.x0) != len(self.xi0):
            raise ValueError("x0 and xi0 must have the same dimension")

    @property
    def dim(self) -> int:
        return len(self.x0)

    def with_lam(self, lam: float) -> "RescaleParams":
        return RescaleParams(lam, self.t, self.x0, self.xi0, self.p)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "t": self.t, "x0": list(self.x0), "xi0": list(self.xi0),
                "p": self.p}


def default_t(rho: float, mu0: float) -> float:
    """Midpoint of the admissible range [0, rho mu0 / (1 + rho mu0)]."""
    return rho * mu0 / (2.0 * (1.0 + rho * mu0))


def _R_fn(fn, prm: RescaleParams):
    lam, t, n = prm.lam, prm.t, prm.dim
    amp = lam ** (t * n / prm.p)
    dil = lam ** t

    def out(coords):
        coords = [np.asarray(c, dtype=float) for c in coords]
        phase = sum(c * w for c, w in zip(coords, prm.xi0))
        inner_c = [dil * (c - a) for c, a in zip(coords, prm.x0)]
        return amp * np.exp(1j * lam * phase) * np.asarray(fn(inner_c), dtype=complex)
    return out


def _Rinv_fn(fn, prm: RescaleParams):
    lam, t, n = prm.lam, prm.t, prm.dim
    amp = lam ** (-t * n / prm.p)
    shrink = lam ** (-t)

    def out(coords):
        coords = [np.asarray(c, dtype=float) for c in coords]
        y = [a + shrink * c for c, a in zip(coords, prm.x0)]
        phase = sum(c * w for c, w in zip(y, prm.xi0))
        return amp * np.exp(-1j * lam * phase) * np.asarray(fn(y), dtype=complex)
    return out


def _need_evaluator(u: Field):
    if u.evaluator is None:
        raise ValueError("rescaling needs a field with a closed-form evaluator")


def apply_R(u: Field, prm: RescaleParams) -> Field:
    """Sample R_{lam,t}(x0, xi0) u on the grid by analytic resampling."""
    _need_evaluator(u)
    fn = _R_fn(u.evaluator, prm)
    return Field(fn(u.grid.mesh("x")), u.grid, "x", fn)


def apply_R_inverse(v: Field, prm: RescaleParams) -> Field:
    _need_evaluator(v)
    fn = _Rinv_fn(v.evaluator, prm)
    return Field(fn(v.grid.mesh("x")), v.grid, "x", fn)


@dataclass
class WeakDecayTable:
    lambdas: list
    pairings: list
    floor: float
    decreasing: bool
    verdict: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def weak_decay_probe(u: Field, v: Field, prm: RescaleParams, lambdas) -> WeakDecayTable:
    """|(R_{lam,t} u, v)| over ``lambdas``; strictly decreasing down to the floor.

    The floor is the round-off level 1e-14 ||u|| ||v||; entries below it are
    not required to keep decreasing.
    """
    lambdas = [float(l) for l in lambdas]
    reach = max(lambdas) * float(np.linalg.norm(prm.xi0)) + 4 * max(lambdas) ** prm.t
    if reach > u.grid.nyquist:
        warnings.warn(f"rescaled frequencies up to {reach:g} exceed the grid Nyquist limit "
                      f"{u.grid.nyquist:g}; large-lambda pairings alias", RuntimeWarning,
                      stacklevel=2)
    vals = [abs(inner(apply_R(u, prm.with_lam(l)), v)) for l in lambdas]
    floor = 1e-14 * lp_norm(u) * lp_norm(v)
    dec = True
    for a, b in zip(vals, vals[1:]):
        if a <= floor:
            break
        if not (b < a or b <= floor):
            dec = False
    return WeakDecayTable(lambdas, vals, floor, dec, "pass" if dec else "fail")


def conjugated_symbol(s, prm: RescaleParams) -> Node:
    """sigma(x0 + lam^-t x, lam xi0 + lam^t eta), with eta written as xi."""
    expr = s.expr if isinstance(s, SymbolDescriptor) else s
    lam, t = prm.lam, prm.t
    mapping = {}
    for j in range(prm.dim):
        xv, xiv = Var("x", j + 1), Var("xi", j + 1)
        mapping[xv] = add(Const(prm.x0[j]), mul(Const(lam ** (-t)), xv))
        mapping[xiv] = add(Const(lam * prm.xi0[j]), mul(Const(lam ** t), xiv))
    return simplify(substitute(expr, mapping))


@dataclass
class DecayFit:
    alpha: tuple
    beta: tuple
    lambdas: list
    sups: list
    slope: float
    predicted: float
    bound: float
    verdict: str
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["alpha"], d["beta"] = list(self.alpha), list(self.beta)
        return d


def decay_exponent_probe(s: SymbolDescriptor, alpha, beta, prm: RescaleParams, lambdas,
                         x_half: float = 8.0, eta_half: float = 32.0,
                         points: int = 257) -> DecayFit:
    """Fit the lambda-decay of sup |d_x^a d_eta^b sigma_{lam,t}| / Lambda(eta)^(rho|b|).

    The supremum runs over the fixed box |x| <= x_half, |eta| <= eta_half
    (n = 1).  Identically zero derivatives give a -inf slope.
    """
    lambdas = [float(l) for l in lambdas]
    if len(lambdas) < 4:
        raise ValueError("decay fit needs at least 4 lambdas")
    if s.dim != 1:
        raise ValueError("decay_exponent_probe samples a one-dimensional box")
    if not any(prm.xi0):
        raise ValueError("xi0 must be nonzero")
    a, b = sum(alpha), sum(beta)
    mu0 = s.weight.mu0
    gap = s.rho * mu0 - (1 + s.rho * mu0) * prm.t
    predicted = -prm.t * a - gap * b
    xs = np.linspace(-x_half, x_half, points)
    etas = np.linspace(-eta_half, eta_half, 2 * points - 1)
    norm = _lam(s.weight, etas[:, None]) ** (s.rho * b)
    sups = []
    for lam in lambdas:
        e = derivative(conjugated_symbol(s, prm.with_lam(lam)), alpha=alpha, beta=beta)
        vals = np.broadcast_to(np.abs(evaluate(e, xs[:, None], etas[None, :])),
                               (len(xs), len(etas)))
        sups.append(float(np.max(vals / norm[None, :])))
    sups_a = np.array(sups)
    notes = [ESTIMATE_NOTE]
    if np.all(sups_a == 0):
        slope = -math.inf
        notes.append("derivative vanishes identically on the box")
    else:
        pos = sups_a > 0
        slope = float(np.polyfit(np.log(np.array(lambdas)[pos]), np.log(sups_a[pos]), 1)[0])
    bound = predicted + 0.1 * (a + b + 1)
    return DecayFit(tuple(alpha), tuple(beta), lambdas, sups, slope, predicted, bound,
                    "pass" if slope <= bound else "fail", notes)


@dataclass
class ConcentrationReport:
    rows: list
    sigma_inf: complex
    t: float
    p: float
    truncated: int
    isometry_spread: float
    lower_bound_fails: bool

    def to_dict(self) -> dict:
        return {"rows": self.rows, "sigma_inf": [self.sigma_inf.real, self.sigma_inf.imag],
                "t": self.t, "p": self.p, "truncated": self.truncated,
                "isometry_spread": self.isometry_spread,
                "lower_bound_fails": self.lower_bound_fails}


def _witness_points(witness) -> tuple:
    if isinstance(witness, Witness):
        return [np.array(x, float) for x in witness.x], [np.array(x, float) for x in witness.xi]
    xs, xis = witness
    return [np.atleast_1d(np.asarray(x, float)) for x in xs], \
        [np.atleast_1d(np.asarray(x, float)) for x in xis]


def concentration_probe(s: SymbolDescriptor, witness, u: Field, p: float = 2.0,
                        t: float | None = None, w: Field | None = None,
                        decay_tol: float = 1e-3) -> ConcentrationReport:
    """Apply T_sigma to v_k = R_{lam_k,t}(x_k, xi_k/|xi_k|) u with lam_k = |xi_k|.

    ``witness`` is a Witness from ``certify_elliptic`` or an explicit pair
    of sequences (x_k, xi_k).  Entries whose frequency band reaches the grid
    Nyquist limit are dropped with a warning.  When the ratios
    ||T v_k|| / ||v_k|| keep decreasing toward 0 no lower bound
    ||T v|| >= c ||v|| can hold.
    """
    if t is None:
        t = default_t(s.rho, s.weight.mu0)
    xs, xis = _witness_points(witness)
    grid = u.grid
    w = u if w is None else w
    rows, truncated = [], 0
    sig = []
    for x_k, xi_k in zip(xs, xis):
        lam = float(np.linalg.norm(xi_k))
        if lam == 0:
            continue
        if lam + 4 * lam ** t > grid.nyquist:
            truncated += 1
            warnings.warn(f"witness frequency {lam:g} is beyond the grid Nyquist limit "
                          f"{grid.nyquist:g}; sequence truncated", RuntimeWarning, stacklevel=2)
            break
        prm = RescaleParams(max(lam, 1.0), t, tuple(x_k), tuple(xi_k / lam), p)
        v = apply_R(u, prm)
        Tv = apply_op(s, v, with_evaluator=False)
        sv = complex(evaluate(s.expr, list(x_k), list(xi_k)))
        sig.append(sv)
        nv = lp_norm(v, p)
        rows.append({
            "k": len(rows) + 1,
            "lambda": lam,
            "x": x_k.tolist(),
            "xi": xi_k.tolist(),
            "sigma": [sv.real, sv.imag],
            "deviation": lp_norm(Tv - v * sv, p),
            "norm_v": nv,
            "ratio": lp_norm(Tv, p) / nv,
            "weak_pairing": abs(inner(v, w)),
        })
    tail = sig[-3:] if sig else [0j]
    sigma_inf = complex(sum(tail) / len(tail))
    norms = [r["norm_v"] for r in rows]
    spread = (max(norms) - min(norms)) / max(norms) if norms else 0.0
    ratios = [r["ratio"] for r in rows]
    fails = len(ratios) >= 2 and all(b < a for a, b in zip(ratios, ratios[1:])) \
        and abs(sigma_inf) < ratios[0]
    return ConcentrationReport(rows, sigma_inf, t, p, truncated, spread, fails)


def conjugate_order_reduction(s: SymbolDescriptor, sidx: float, M: int = 3) -> SymbolDescriptor:
    """Symbol of J_{m-s} T_sigma J_s, i.e. Lambda^(s-m) # sigma # Lambda^(-s), order 0."""
    m = s.order
    n = s.dim
    left = SymbolDescriptor(j_symbol(m - sidx, s.weight, n), sidx - m, s.rho, s.weight, n)
    right = SymbolDescriptor(j_symbol(sidx, s.weight, n), -sidx, s.rho, s.weight, n)
    base = SymbolDescriptor(s.expr, m, s.rho, s.weight, n)
    first = compose_symbols(left, base, M)
    second = compose_symbols(first.descriptor, right, M)
    return SymbolDescriptor(second.expr, 0.0, s.rho, s.weight, n)

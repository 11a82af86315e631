"""Sampled membership tests for the symbol classes S^m and M^m, ellipticity
certificates, the (eta, kappa) lower-bound fit and post-composition F(sigma).

Suprema over R^2n are read as maxima over a sampling box: x on a uniform
grid of [-Lx, Lx]^n and xi on dyadic shells 2^j <= |xi| < 2^(j+1), j < J,
plus a small ball around the origin.  Growth beyond the box is detected by
regressing per-shell maxima against log Lambda on the outer half of the shells.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .descriptor import SymbolDescriptor, describe
from .errors import DomainError, EvaluationError, PreconditionError
from .parallel import ordered_map
from .symexpr import (Const, Node, Var, as_expr, derivative, evaluate, mul, power, simplify,
                      substitute, to_text, xivars)
from .weights import Weight, weight_eval

__all__ = ["Box", "SymbolDescriptor", "describe", "ClassReport", "EllipticityCertificate",
           "Witness", "seminorm", "check_class", "certify_elliptic", "fit_lower_bound",
           "post_compose", "m_extension", "SG_NOTE"]

ROUNDOFF = 1e-12  # seminorms below ROUNDOFF * max(1, p_00) count as identically zero
SG_NOTE = ("assumed definition: |d_x^a d_xi^b sigma| <= C Lx(x)^(m2 - rho|a|) "
           "L(xi)^(m1 - rho|b|), with the M-extension in both variables")


def _directions(n: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        ang = np.arange(8) * (np.pi / 4)
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    dirs = [d for d in itertools.product((-1.0, 0.0, 1.0), repeat=n) if any(d)]
    dirs = np.array(dirs)
    return dirs / np.linalg.norm(dirs, axis=1)[:, None]


@dataclass(frozen=True)
class Box:
    """Sampling region: x-grid on [-Lx, Lx]^n, xi on J dyadic shells.

    In SG mode x additionally gets the same dyadic shells, so growth in x
    is visible too.
    """

    Lx: float = 2 * math.pi
    nx: int = 65
    J: int = 10
    shell_points: int = 16
    ball_points: int = 9

    def x_points(self, n: int, radial: bool = False) -> np.ndarray:
        nx = self.nx if n == 1 else max(5, int(round(self.nx ** (1.0 / n))) | 1)
        axis = np.linspace(-self.Lx, self.Lx, nx)
        pts = np.array(list(itertools.product(axis, repeat=n)))
        if radial:
            pts = np.vstack([pts, self.xi_points(n)[0]])
        return pts

    def xi_points(self, n: int):
        """Points and their shell labels (-1 for the central ball)."""
        b = np.linspace(-1.0, 1.0, self.ball_points)
        ball = np.array(list(itertools.product(b, repeat=n)))
        ball = ball[np.linalg.norm(ball, axis=1) < 1.0 + 1e-12]
        pts = [ball]
        labels = [np.full(len(ball), -1)]
        dirs = _directions(n)
        for j in range(self.J):
            r = 2.0 ** (j + np.arange(self.shell_points) / self.shell_points)
            shell = (r[:, None, None] * dirs[None, :, :]).reshape(-1, n)
            pts.append(shell)
            labels.append(np.full(len(shell), j))
        return np.vstack(pts), np.concatenate(labels)

    def to_dict(self) -> dict:
        return {"Lx": self.Lx, "nx": self.nx, "J": self.J, "shell_points": self.shell_points,
                "xi_radius": 2.0 ** self.J}


def _lam(w: Weight, pts: np.ndarray) -> np.ndarray:
    return np.asarray(weight_eval(w, [pts[:, j] for j in range(pts.shape[1])]), dtype=float)


def _table(expr: Node, xpts: np.ndarray, xipts: np.ndarray) -> np.ndarray:
    n = xpts.shape[1]
    xs = [xpts[:, j][:, None] for j in range(n)]
    xis = [xipts[:, j][None, :] for j in range(n)]
    out = evaluate(expr, xs, xis)
    return np.broadcast_to(out, (xpts.shape[0], xipts.shape[0]))


def multi_indices(n: int, order: int):
    return [a for a in itertools.product(range(order + 1), repeat=n) if sum(a) <= order]


def m_extension(expr: Node, gamma, dim: int) -> Node:
    """xi^gamma d_xi^gamma sigma (gamma in {0,1}^n)."""
    d = derivative(expr, beta=gamma)
    for j, g in enumerate(gamma):
        if g:
            d = mul(Var("xi", j + 1), d)
    return d


@dataclass
class _Samples:
    xpts: np.ndarray
    xipts: np.ndarray
    xi_labels: np.ndarray
    x_labels: np.ndarray | None
    lam_xi: np.ndarray
    lam_x: np.ndarray | None


def _samples(s: SymbolDescriptor, box: Box) -> _Samples:
    n = s.dim
    xipts, labels = box.xi_points(n)
    if s.sg:
        xgrid = box.x_points(n)
        xr, xl = box.xi_points(n)
        xpts = np.vstack([xgrid, xr])
        xlab = np.concatenate([np.full(len(xgrid), -1), xl])
        return _Samples(xpts, xipts, labels, xlab, _lam(s.weight, xipts), _lam(s.xweight, xpts))
    return _Samples(box.x_points(n), xipts, labels, None, _lam(s.weight, xipts), None)


def _regress(lam_at_max: np.ndarray, maxima: np.ndarray) -> float:
    """Slope of log(max) against log(Lambda); -inf when every maximum is 0."""
    pos = maxima > 0
    if not np.any(pos):
        return -math.inf
    if np.count_nonzero(pos) < 2:
        return -math.inf if maxima[-1] == 0 else 0.0
    return float(np.polyfit(np.log(lam_at_max[pos]), np.log(maxima[pos]), 1)[0])


def _shell_fit(vals: np.ndarray, lam: np.ndarray, labels: np.ndarray, axis: int) -> float:
    """Regress per-shell maxima along ``axis`` (1 = xi, 0 = x) over the outer half of the shells."""
    per = vals.max(axis=1 - axis)
    nshell = int(labels.max()) + 1
    shells = sorted(int(j) for j in set(labels.tolist()) if j >= max(2, nshell // 2))
    mx, lm = [], []
    for j in shells:
        idx = np.flatnonzero(labels == j)
        k = idx[np.argmax(per[idx])]
        mx.append(per[k])
        lm.append(lam[k])
    return _regress(np.array(lm), np.array(mx))


@dataclass
class _Entry:
    alpha: tuple
    beta: tuple
    seminorm: float
    exponent: float
    bound: float
    x_exponent: float | None = None
    x_bound: float | None = None

    def ok(self, tol: float) -> bool:
        if not math.isfinite(self.seminorm):
            return False
        if self.exponent > self.bound + tol:
            return False
        if self.x_exponent is not None and self.x_exponent > self.x_bound + tol:
            return False
        return True

    def to_dict(self) -> dict:
        d = {"alpha": list(self.alpha), "beta": list(self.beta), "seminorm": self.seminorm,
             "xi_exponent": self.exponent, "xi_bound": self.bound}
        if self.x_exponent is not None:
            d["x_exponent"] = self.x_exponent
            d["x_bound"] = self.x_bound
        return d


def _entry(s: SymbolDescriptor, expr: Node, alpha, beta, smp: _Samples,
           floor: float = 0.0) -> _Entry:
    m1 = s.order
    bound = m1 - s.rho * sum(beta)
    d = derivative(expr, alpha=alpha, beta=beta)
    try:
        with np.errstate(all="ignore"):
            vals = np.abs(_table(d, smp.xpts, smp.xipts))
    except EvaluationError:
        return _Entry(tuple(alpha), tuple(beta), math.inf, math.inf, bound)
    with np.errstate(all="ignore"):
        norm_xi = smp.lam_xi[None, :] ** bound
        if s.sg:
            xb = s.m[1] - s.rho * sum(alpha)
            norm_x = smp.lam_x[:, None] ** xb
            ratio = vals / (norm_x * norm_xi)
            xi_fit = _shell_fit(vals / norm_x, smp.lam_xi, smp.xi_labels, axis=1)
            x_fit = _shell_fit(vals / norm_xi, smp.lam_x, smp.x_labels, axis=0)
            sem = float(np.max(ratio))
            if sem <= floor:
                xi_fit = x_fit = -math.inf
            return _Entry(tuple(alpha), tuple(beta), sem if math.isfinite(sem) else math.inf,
                          xi_fit, bound, x_fit, xb)
        ratio = vals / norm_xi
    sem = float(np.max(ratio))
    # derivatives that vanish up to round-off carry no growth information
    fit = -math.inf if sem <= floor else _shell_fit(vals, smp.lam_xi, smp.xi_labels, axis=1)
    return _Entry(tuple(alpha), tuple(beta), sem if math.isfinite(sem) else math.inf, fit, bound)


def seminorm(s: SymbolDescriptor, alpha, beta, box: Box | None = None,
             max_total: int = 6) -> float:
    """p_{alpha,beta}: max over the box of |d_x^a d_xi^b sigma| / Lambda^(m - rho|b|).

    Divergence (non-finite derivative values) is reported as ``inf``.
    """
    if sum(alpha) + sum(beta) > max_total:
        raise ValueError(f"|alpha| + |beta| exceeds the configured maximum {max_total}")
    box = box or Box()
    return _entry(s, s.expr, tuple(alpha), tuple(beta), _samples(s, box)).seminorm


@dataclass
class ClassReport:
    s_table: list
    m_tables: dict
    verdict: str
    tolerance: float
    box: dict
    notes: list = field(default_factory=list)

    def seminorms(self, gamma=None) -> dict:
        table = self.s_table if gamma is None else self.m_tables[tuple(gamma)]
        return {(e.alpha, e.beta): e.seminorm for e in table}

    def to_dict(self) -> dict:
        return {
            "s_table": [e.to_dict() for e in self.s_table],
            "m_tables": {str(list(g)): [e.to_dict() for e in t] for g, t in self.m_tables.items()},
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "box": self.box,
            "notes": self.notes,
        }


def check_class(s: SymbolDescriptor, maxord: int = 3, box: Box | None = None,
                tol: float = 0.1, mclass: bool = True) -> ClassReport:
    """S-class table for |alpha|, |beta| <= maxord, then the M-extension tables."""
    box = box or Box()
    smp = _samples(s, box)
    n = s.dim
    pairs = [(a, b) for a in multi_indices(n, maxord) for b in multi_indices(n, maxord)]
    zero = (0,) * n
    p00 = _entry(s, s.expr, zero, zero, smp).seminorm
    floor = ROUNDOFF * max(1.0, p00) if math.isfinite(p00) else 0.0
    s_table = ordered_map(lambda ab: _entry(s, s.expr, ab[0], ab[1], smp, floor), pairs)
    m_tables = {zero: s_table}
    notes = []
    if mclass:
        for gamma in itertools.product((0, 1), repeat=n):
            if not any(gamma):
                continue
            ext = m_extension(s.expr, gamma, n)
            m_tables[gamma] = ordered_map(lambda ab, e=ext: _entry(s, e, ab[0], ab[1], smp, floor), pairs)
            if s.sg:
                # M-extension in x as well
                ext_x = derivative(s.expr, alpha=gamma)
                for j, g in enumerate(gamma):
                    if g:
                        ext_x = mul(Var("x", j + 1), ext_x)
                m_tables[("x",) + gamma] = ordered_map(
                    lambda ab, e=ext_x: _entry(s, e, ab[0], ab[1], smp, floor), pairs)
    if s.sg:
        notes.append(SG_NOTE)
    ok = all(e.ok(tol) for t in m_tables.values() for e in t)
    return ClassReport(s_table, m_tables, "pass" if ok else "fail", tol, box.to_dict(), notes)


# ---------------------------------------------------------------------------
# ellipticity

@dataclass
class EllipticityCertificate:
    C: float
    R: float
    kind: str
    shell_minima: list

    def to_dict(self) -> dict:
        return {"type": "certificate", "C": self.C, "R": self.R, "kind": self.kind,
                "shell_minima": self.shell_minima}


@dataclass
class Witness:
    kind: str
    x: list
    xi: list
    ratios: list
    sigma_values: list
    sigma_inf: complex
    shell_minima: list
    variable: str = "xi"

    def to_dict(self) -> dict:
        return {"type": "witness", "kind": self.kind, "x": self.x, "xi": self.xi,
                "ratios": self.ratios,
                "sigma_values": [[v.real, v.imag] for v in self.sigma_values],
                "sigma_inf": [self.sigma_inf.real, self.sigma_inf.imag],
                "shell_minima": self.shell_minima, "variable": self.variable}


KINDS = ("M-elliptic", "strongly-M-elliptic", "SG")


def _ratio_fn(s: SymbolDescriptor, kind: str):
    def ratio(xpts, xipts):
        vals = _table(s.expr, xpts, xipts)
        num = np.abs(vals) if kind == "M-elliptic" else np.real(vals)
        den = _lam(s.weight, xipts)[None, :] ** s.order
        if s.sg:
            den = den * _lam(s.xweight, xpts)[:, None] ** s.m[1]
        return num / den, vals
    return ratio


def _default_radii(box: Box) -> list:
    return [0.0] + [2.0 ** j for j in range(box.J - 1)]


def certify_elliptic(s: SymbolDescriptor, kind: str = "M-elliptic", radii=None,
                     box: Box | None = None, threshold: float = 1e-6, K: int = 8,
                     decay_slope: float = -0.1):
    """Return a certificate (C, R) or a minimizing Witness sequence.

    The ratio |sigma|/Lambda^m (Re sigma for the strong and SG kinds) is
    minimised over each dyadic shell.  A tail of shell minima that decays
    (log-log slope below ``decay_slope``) or drops under ``threshold`` gives
    a witness; otherwise C is the infimum over |xi| >= R for the first R in
    ``radii`` where it clears the threshold.  In SG mode the region is
    max(|x|, |xi|) >= R and x also runs over dyadic shells.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if kind == "SG" and not s.sg:
        raise PreconditionError("SG certification needs an SG descriptor")
    box = box or Box()
    radii = list(_default_radii(box) if radii is None else radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    n = s.dim
    smp = _samples(s, box)
    rfn = _ratio_fn(s, kind)
    with np.errstate(all="ignore"):
        ratio, _ = rfn(smp.xpts, smp.xipts)
    xin = np.linalg.norm(smp.xipts, axis=1)
    xn = np.linalg.norm(smp.xpts, axis=1)

    def tail(axis, labels, lam):
        per = ratio.min(axis=1 - axis)
        mins, lams = [], []
        for j in range(box.J):
            idx = np.flatnonzero(labels == j)
            k = idx[np.argmin(per[idx])]
            mins.append(float(per[k]))
            lams.append(float(lam[k]))
        return mins, lams

    xi_mins, xi_lams = tail(1, smp.xi_labels, smp.lam_xi)
    checks = [("xi", xi_mins, xi_lams)]
    if s.sg:
        x_mins, x_lams = tail(0, smp.x_labels, smp.lam_x)
        checks.append(("x", x_mins, x_lams))
    for var, mins, lams in checks:
        half = mins[len(mins) // 2:]
        lh = lams[len(lams) // 2:]
        failing = min(half) <= threshold or not np.all(np.isfinite(half))
        slope = 0.0
        if not failing:
            slope = float(np.polyfit(np.log(lh), np.log(half), 1)[0])
            failing = slope < decay_slope
        if failing:
            return _witness(s, kind, box, rfn, var, mins, K)
    for R in radii:
        if s.sg:
            mask = np.maximum(xn[:, None], xin[None, :]) >= R
        else:
            mask = np.broadcast_to((xin >= R)[None, :], ratio.shape)
        if not np.any(mask):
            continue
        inf = float(np.min(ratio[mask]))
        if inf >= threshold:
            return EllipticityCertificate(inf, float(R), kind, xi_mins)
    return _witness(s, kind, box, rfn, "xi", xi_mins, K)


def _witness(s, kind, box, rfn, var, shell_minima, K) -> Witness:
    n = s.dim
    dirs = _directions(n)
    rmax = 2.0 ** box.J
    if var == "xi":
        xgrid = box.x_points(n)
        with np.errstate(all="ignore"):
            r, _ = rfn(xgrid, rmax * dirs)
        omega = dirs[int(np.argmin(r.min(axis=0)))]
    else:
        xigrid = box.xi_points(n)[0]
        with np.errstate(all="ignore"):
            r, _ = rfn(rmax * dirs, xigrid)
        omega = dirs[int(np.argmin(r.min(axis=1)))]
    xs, xis, ratios, sig = [], [], [], []
    for k in range(1, K + 1):
        if var == "xi":
            xi_k = (2.0 ** k) * omega
            xgrid = box.x_points(n)
            with np.errstate(all="ignore"):
                r, v = rfn(xgrid, xi_k[None, :])
            r = r[:, 0]
            order = np.lexsort((np.linalg.norm(xgrid, axis=1), r))
            j = int(order[0])
            x_k = xgrid[j]
            val = v[j, 0]
        else:
            x_k = (2.0 ** k) * omega
            xigrid = box.xi_points(n)[0]
            with np.errstate(all="ignore"):
                r, v = rfn(x_k[None, :], xigrid)
            r = r[0]
            order = np.lexsort((np.linalg.norm(xigrid, axis=1), r))
            j = int(order[0])
            xi_k = xigrid[j]
            val = v[0, j]
        xs.append(x_k.tolist())
        xis.append(xi_k.tolist())
        ratios.append(float(r[j]))
        sig.append(complex(val))
    tail = sig[-3:]
    sigma_inf = complex(sum(tail) / len(tail))
    return Witness(kind, xs, xis, ratios, sig, sigma_inf, shell_minima, var)


# ---------------------------------------------------------------------------
# lower bound Re sigma >= eta Lambda^2m - kappa Lambda^(2m - rho)

@dataclass
class LowerBound:
    eta: float
    kappa: float
    sweep: list
    order: float
    rho: float

    def __iter__(self):
        return iter((self.eta, self.kappa))

    def to_dict(self) -> dict:
        return {"eta": self.eta, "kappa": self.kappa, "order": self.order, "rho": self.rho,
                "sweep": self.sweep}


def fit_lower_bound(s: SymbolDescriptor, box: Box | None = None, sweep: int = 64,
                    rtol: float = 1e-9, refine: int = 60) -> LowerBound:
    """Largest eta with a kappa >= 0 making Re sigma >= eta L^2m - kappa L^(2m - rho).

    On a finite box every eta admits some kappa, so eta counts as feasible
    when the outermost shell does not raise the needed kappa above what the
    inner samples already need.  Eta is swept over ``sweep`` log-spaced values
    in (0, p_00], refined by bisection; kappa is the minimal value at that eta.
    """
    box = box or Box()
    order = s.order
    smp = _samples(s, box)
    with np.errstate(all="ignore"):
        re = np.real(_table(s.expr, smp.xpts, smp.xipts))
    lam = smp.lam_xi[None, :]
    A = lam ** order / lam ** (order - s.rho)
    B = re / lam ** (order - s.rho)
    outer = smp.xi_labels == box.J - 1
    p00 = float(np.max(np.abs(re) / lam ** order))
    if not (p00 > 0 and math.isfinite(p00)):
        raise PreconditionError("symbol vanishes or diverges on the sampling box")

    def kappas(eta):
        k = eta * A - B
        return float(np.max(k[:, ~outer])), float(np.max(k[:, outer])), k

    def feasible(eta):
        kin, kout, _ = kappas(eta)
        return kout <= kin + rtol * (1.0 + abs(kin)) or kout <= 0.0

    etas = np.exp(np.linspace(math.log(p00 * 1e-6), math.log(p00), sweep))
    flags = [feasible(e) for e in etas]
    table = [[float(e), bool(f)] for e, f in zip(etas, flags)]
    ok = [i for i, f in enumerate(flags) if f]
    if not ok:
        _, _, k = kappas(etas[0])
        i, j = np.unravel_index(int(np.argmax(np.where(outer[None, :], k, -np.inf))), k.shape)
        raise PreconditionError(
            f"no feasible eta: the lower bound fails at x={smp.xpts[i].tolist()}, "
            f"xi={smp.xipts[j].tolist()}")
    best = ok[-1]
    lo = float(etas[best])
    if best + 1 < len(etas):
        hi = float(etas[best + 1])
        for _ in range(refine):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * hi:
                break
    kin, kout, _ = kappas(lo)
    kappa = max(0.0, kin, kout)
    return LowerBound(lo, kappa, table, order, s.rho)


# ---------------------------------------------------------------------------
# post-composition

def post_compose(F, s: SymbolDescriptor, inner=None, box: Box | None = None) -> SymbolDescriptor:
    """Descriptor for F(inner) with order 0; F is an expression in z.

    The composite is evaluated over the sampling box as a real-valued
    expression so that leaving F's domain is reported with the sample point.
    """
    box = box or Box()
    F = as_expr(F, s.dim, allow_z=True)
    inner = s.expr if inner is None else as_expr(inner, s.dim)
    out = simplify(substitute(F, {Var("z", 1): inner}))
    smp = _samples(s, box)
    xpts, xipts = smp.xpts, smp.xipts
    try:
        n = s.dim
        xs = [xpts[:, j][:, None] for j in range(n)]
        xis = [xipts[:, j][None, :] for j in range(n)]
        evaluate(out, xs, xis, real=True)
    except DomainError as exc:
        idx = exc.index
        point = None
        if idx is not None and len(idx) == 2:
            point = {"x": xpts[idx[0]].tolist(), "xi": xipts[idx[1]].tolist()}
        raise DomainError(f"F leaves its domain at sample {point}: {exc}", index=idx,
                          point=point) from exc
    return SymbolDescriptor(out, (0.0, 0.0) if s.sg else 0.0, s.rho, s.weight, s.dim, s.xweight)

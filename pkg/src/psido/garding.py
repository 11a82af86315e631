"""Numerical Garding-inequality harness.

For a strongly elliptic symbol of order 2m the inequality

    Re <T_sigma phi, phi> >= C' ||phi||_m^2 - C_s ||phi||_{m-s}^2

is fitted over a battery of unit test functions.  Any C' is feasible on a
finite battery once C_s is large enough, so C' is pinned to the
high-frequency ellipticity level of the symbol on the grid, and C_s is the
closed-form minimal value for that C'.  The full (C', C_s(C')) frontier is
reported alongside.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import hermite as H

from .descriptor import SymbolDescriptor
from .errors import PreconditionError
from .parallel import ordered_map
from .quantize import Field, GridSpec, apply_op, fourier, inner
from .spaces import NormSpec, sobolev_norm
from .symclass import Box, EllipticityCertificate, _lam, _samples, _table
from .symexpr import Const, Func, Lam, Node, add, mul, power, simplify, sub, xivars
from .symexpr import func as _func

__all__ = ["GARDING_GRID", "Battery", "default_battery", "quadratic_form", "GardingReport",
           "garding_fit", "sg_garding_fit", "sqrt_symbol", "split_diagnostic",
           "BATTERY_NOTE", "ASSUMED_NOTE"]

GARDING_GRID = GridSpec(1, 16.0, 512)
BATTERY_NOTE = "inequality checked on a finite battery, not on all Schwartz functions"
ASSUMED_NOTE = ("assumed external: SG-norm boundedness of order (-rho, -rho) operators and "
                "norm monotonicity in each SG index")
S1_NOTE = "s1 > rho/2 was passed; the estimate is only established for s1 <= rho/2"


@dataclass
class Battery:
    fields: list
    labels: list

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def reordered(self, order) -> "Battery":
        return Battery([self.fields[i] for i in order], [self.labels[i] for i in order])


def _hermite_fn(k: int):
    c = np.zeros(k + 1)
    c[k] = 1.0
    scale = 1.0 / math.sqrt(2.0 ** k * math.factorial(k) * math.sqrt(math.pi))

    def fn(coords):
        x = np.asarray(coords[0], dtype=float)
        return (scale * H.hermval(x, c) * np.exp(-x * x / 2)).astype(complex)
    return fn


def _gabor_fn(x0: float, xi0: float):
    def fn(coords):
        x = np.asarray(coords[0], dtype=float)
        return math.pi ** -0.25 * np.exp(-(x - x0) ** 2 / 2 + 1j * xi0 * x)
    return fn


def _normalized(fn, grid: GridSpec) -> Field:
    raw = Field.from_function(fn, grid)
    c = 1.0 / math.sqrt(inner(raw, raw).real)

    def scaled(coords, fn=fn, c=c):
        return c * np.asarray(fn(coords), dtype=complex)
    return Field(raw.values * c, grid, "x", scaled)


def default_battery(grid: GridSpec = GARDING_GRID, hermite: int = 6,
                    centers=(-4.0, 0.0, 4.0), freqs=(2.0, -2.0, 8.0, -8.0, 32.0, -32.0)) -> Battery:
    """Hermite h_0..h_{hermite-1} plus Gabor atoms, each unit in the grid L^2 norm."""
    if grid.dim != 1:
        raise ValueError("the default battery is one-dimensional")
    fields, labels = [], []
    for k in range(hermite):
        fields.append(_normalized(_hermite_fn(k), grid))
        labels.append(f"hermite{k}")
    for x0 in centers:
        for xi0 in freqs:
            if abs(xi0) + 6.0 > grid.nyquist:
                warnings.warn(f"Gabor atom at frequency {xi0:g} is not resolved below the "
                              f"Nyquist limit {grid.nyquist:g}", RuntimeWarning, stacklevel=2)
            fields.append(_normalized(_gabor_fn(x0, xi0), grid))
            labels.append(f"gabor(x0={x0:g},xi0={xi0:g})")
    return Battery(fields, labels)


def quadratic_form(s: SymbolDescriptor, phi: Field) -> complex:
    """<T_sigma phi, phi> with the grid inner product."""
    return inner(apply_op(s, phi, with_evaluator=False), phi)


@dataclass
class GardingReport:
    s: float | tuple
    C_prime: float
    C_s: float
    margins: list
    min_margin: float
    verdict: str
    labels: list
    frontier: list
    forms: list
    upper_norms: list
    lower_norms: list
    notes: list = field(default_factory=list)
    sg: bool = False

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["s"] = list(self.s) if isinstance(self.s, tuple) else self.s
        return d


def _fit(Q, A, B, cap: float, tol: float, snap: float = 1e-10, sweep: int = 64):
    Q, A, B = map(np.asarray, (Q, A, B))

    def cs_for(cp):
        need = (cp * A - Q) / B
        val = float(np.max(need))
        if val <= snap * max(1.0, float(np.max(np.abs(Q / B)))):
            return 0.0
        return val

    Cp = float(cap)
    Cs = cs_for(Cp)
    margins = Q - Cp * A + Cs * B
    frontier = [[float(c), cs_for(float(c))]
                for c in np.linspace(cap / sweep, cap, sweep)] if cap > 0 else []
    min_margin = float(np.min(margins))
    ok = min_margin >= -tol * float(np.max(A))
    return Cp, Cs, margins.tolist(), min_margin, ok, frontier


def _high_frequency_cap(s: SymbolDescriptor, grid: GridSpec, sg: bool) -> float:
    """min Re sigma / Lambda^2m over grid x and |xi| >= Nyquist/2 (SG: or |x| >= L/2)."""
    xpts = grid.points("x")
    xipts = grid.points("xi")
    with np.errstate(all="ignore"):
        re = np.real(_table(s.expr, xpts, xipts))
        den = _lam(s.weight, xipts)[None, :] ** s.order
        if sg:
            den = den * _lam(s.xweight, xpts)[:, None] ** s.m[1]
        ratio = re / den
    hi_xi = np.linalg.norm(xipts, axis=1) >= grid.nyquist / 2
    mask = np.broadcast_to(hi_xi[None, :], ratio.shape)
    if sg:
        far_x = np.linalg.norm(xpts, axis=1) >= grid.L / 2
        mask = mask | far_x[:, None]
    return float(np.min(ratio[mask]))


def _norm_data(s, battery, upper: NormSpec, lower: NormSpec):
    def one(phi):
        return (quadratic_form(s, phi).real, sobolev_norm(phi, upper) ** 2,
                sobolev_norm(phi, lower) ** 2)
    rows = ordered_map(one, list(battery))
    return [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows]


def garding_fit(s: SymbolDescriptor, sidx: float, battery: Battery | None = None,
                certificate: EllipticityCertificate | None = None,
                tol: float = 1e-8) -> GardingReport:
    """Fit (C', C_s) for a strongly elliptic symbol of order 2m and s >= rho/2."""
    if not isinstance(certificate, EllipticityCertificate) or \
            certificate.kind != "strongly-M-elliptic":
        raise PreconditionError("garding_fit needs a strong ellipticity certificate")
    if sidx < s.rho / 2:
        raise PreconditionError(f"s = {sidx} is below rho/2 = {s.rho / 2}")
    battery = battery or default_battery()
    grid = battery.fields[0].grid
    m = s.order / 2
    Q, A, B = _norm_data(s, battery, NormSpec(m, 2.0, s.weight),
                         NormSpec(m - sidx, 2.0, s.weight))
    cap = _high_frequency_cap(s, grid, sg=False)
    if cap <= 0:
        i = int(np.argmin(Q))
        raise PreconditionError(f"no positive C' available; most negative form at "
                                f"{battery.labels[i]}")
    Cp, Cs, margins, mn, ok, frontier = _fit(Q, A, B, cap, tol)
    return GardingReport(float(sidx), Cp, Cs, margins, mn, "pass" if ok else "fail",
                         list(battery.labels), frontier, list(Q), list(A), list(B),
                         [BATTERY_NOTE])


def sg_garding_fit(s: SymbolDescriptor, s1: float, s2: float, battery: Battery | None = None,
                   certificate: EllipticityCertificate | None = None,
                   tol: float = 1e-8) -> GardingReport:
    """SG variant with norms ||.||_{m1,m2} and ||.||_{m1-s1, m2-s2}."""
    if not s.sg:
        raise PreconditionError("sg_garding_fit needs an SG descriptor")
    if not isinstance(certificate, EllipticityCertificate) or certificate.kind != "SG":
        raise PreconditionError("sg_garding_fit needs an SG ellipticity certificate")
    if s2 < s.rho / 2:
        raise PreconditionError(f"s2 = {s2} is below rho/2 = {s.rho / 2}")
    notes = [BATTERY_NOTE, ASSUMED_NOTE]
    if s1 > s.rho / 2:
        notes.append(S1_NOTE)
    battery = battery or default_battery()
    grid = battery.fields[0].grid
    m1, m2 = s.m[0] / 2, s.m[1] / 2
    Q, A, B = _norm_data(s, battery, NormSpec((m1, m2), 2.0, s.weight, s.xweight),
                         NormSpec((m1 - s1, m2 - s2), 2.0, s.weight, s.xweight))
    cap = _high_frequency_cap(s, grid, sg=True)
    if cap <= 0:
        raise PreconditionError("no positive C' available on the grid")
    Cp, Cs, margins, mn, ok, frontier = _fit(Q, A, B, cap, tol)
    return GardingReport((float(s1), float(s2)), Cp, Cs, margins, mn, "pass" if ok else "fail",
                         list(battery.labels), frontier, list(Q), list(A), list(B), notes,
                         sg=True)


def sqrt_symbol(s: SymbolDescriptor, eta: float, kappa: float,
                box: Box | None = None) -> SymbolDescriptor:
    """tau = sqrt(2 Re sigma + 2 kappa Lambda^-rho - 1.5 eta), order 0.

    The argument must stay positive on the sampling box; otherwise the
    offending sample is reported.
    """
    box = box or Box()
    n = s.dim
    lam = Lam(s.weight.name, xivars(n))
    arg = sub(add(mul(Const(2.0), _func("re", s.expr)),
                  mul(Const(2.0 * kappa), power(lam, Const(-s.rho)))), Const(1.5 * eta))
    arg = simplify(arg)
    smp = _samples(s, box)
    with np.errstate(all="ignore"):
        vals = np.real(_table(arg, smp.xpts, smp.xipts))
    if float(np.min(vals)) <= 0:
        i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
        raise PreconditionError(f"square-root argument is not positive at "
                                f"x={smp.xpts[i].tolist()}, xi={smp.xipts[j].tolist()}")
    return SymbolDescriptor(_func("sqrt", arg), (0.0, 0.0) if s.sg else 0.0, s.rho, s.weight,
                            n, s.xweight)


def split_diagnostic(phi: Field, nu: float, eta: float, rho: float, sidx: float,
                     weight=None) -> dict:
    """Frequency split of nu ||phi||^2_{-rho/2} into I (small weight) and J (large).

    Reports I against (eta/2)||phi||^2 and J against C'_s ||phi||^2_{-s} with
    C'_s = nu (2 nu / eta)^((2s - rho)/rho).
    """
    from .weights import BRACKET
    w = weight or BRACKET
    g = phi.grid
    ph = fourier(phi).values.ravel()
    lam = _lam(w, g.points("xi"))
    dens = np.abs(ph) ** 2 * g.cell("xi")
    f = nu * lam ** (-rho)
    small = f <= eta / 2
    I = float(np.sum((f * dens)[small]))
    J = float(np.sum((f * dens)[~small]))
    cs = nu * (2 * nu / eta) ** ((2 * sidx - rho) / rho)
    l2 = float(np.sum(dens))
    neg = float(np.sum(lam ** (-2 * sidx) * dens))
    return {"I": I, "J": J, "I_bound": eta / 2 * l2, "J_bound": cs * neg, "C_s_prime": cs,
            "I_ok": I <= eta / 2 * l2 * (1 + 1e-12), "J_ok": J <= cs * neg * (1 + 1e-12)}

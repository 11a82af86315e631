"""Weight functions Lambda(xi) with polynomial growth, and their axiom checks."""
from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError
from .symexpr import Node, derivative, evaluate, parse, simplify

__all__ = ["Weight", "WeightReport", "REGISTRY", "BRACKET", "QUASI", "get_weight",
           "register_weight", "make_weight", "weight_eval", "check_weight", "ray_directions"]


@dataclass(frozen=True)
class Weight:
    """A positive weight given as an expression in xi.

    ``dim=None`` marks a dimension-generic weight (the bracket), whose
    expression is rebuilt for whatever argument length it is applied to.
    """

    name: str
    text: str
    mu0: float
    mu1: float
    mu: float
    C0: float
    C1: float
    dim: int | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, compare=False, repr=False)

    def __post_init__(self):
        if not (self.mu0 <= self.mu1 <= self.mu):
            raise ValueError("weight exponents must satisfy mu0 <= mu1 <= mu")
        if not (0 < self.C0 <= self.C1):
            raise ValueError("weight constants must satisfy 0 < C0 <= C1")

    def expr_for(self, dim: int) -> Node:
        if self.dim is not None and dim != self.dim:
            raise ValueError(f"weight {self.name!r} is {self.dim}-dimensional, got {dim}")
        with self._lock:
            e = self._cache.get(dim)
            if e is None:
                e = simplify(parse(self.text, dim))
                self._cache[dim] = e
        return e

    @property
    def expr(self) -> Node:
        return self.expr_for(self.dim or 1)

    def __call__(self, xi, dim: int | None = None):
        return weight_eval(self, xi, dim)


def weight_eval(w: Weight, xi, dim: int | None = None):
    """Lambda(xi) as a real number or array; ``xi`` as in ``evaluate``."""
    if isinstance(xi, (list, tuple)):
        n = len(xi)
    else:
        n = 1
    if dim is not None and dim != n:
        raise ValueError(f"point has {n} coordinates, expected {dim}")
    if w.dim is not None and w.dim != n:
        raise ValueError(f"weight {w.name!r} needs {w.dim} coordinates, got {n}")
    val = evaluate(w.expr_for(n), None, xi, weights=REGISTRY)
    out = np.real(val)
    if not np.all(np.isfinite(out)) or np.any(out <= 0):
        raise EvaluationError(f"weight {w.name!r} is not a finite positive value")
    return float(out) if np.ndim(out) == 0 else out


BRACKET = Weight("bracket", "jb(xi)", 1.0, 1.0, 1.0, 2 ** -0.5, 1.0)
QUASI = Weight("quasi", "(1 + xi1^2 + xi2^4)^(1/4)", 0.5, 1.0, 1.0, 3 ** -0.25, 1.0, dim=2)

REGISTRY: dict = {"bracket": BRACKET, "quasi": QUASI}
_registry_lock = threading.Lock()


def register_weight(w: Weight) -> Weight:
    with _registry_lock:
        REGISTRY[w.name] = w
    return w


def make_weight(name: str, text: str, dim: int, mu0: float, mu1: float, mu: float,
                C0: float = 1.0, C1: float = 1.0, register: bool = True) -> Weight:
    """Build a user weight from a DSL expression in xi."""
    w = Weight(name, text, mu0, mu1, mu, C0, C1, dim)
    w.expr_for(dim)  # parse eagerly so syntax errors surface here
    return register_weight(w) if register else w


def get_weight(name_or_text: str, dim: int = 1) -> Weight:
    """Look up a registered weight; otherwise treat the text as an expression."""
    if isinstance(name_or_text, Weight):
        return name_or_text
    if name_or_text in REGISTRY:
        return REGISTRY[name_or_text]
    w = Weight(f"user:{name_or_text}", name_or_text, 1.0, 1.0, 1.0, 1.0, 1.0, dim)
    w.expr_for(dim)
    return w


@dataclass
class WeightReport:
    fitted_mu0: float
    fitted_mu1: float
    ray_slopes: dict
    slope_drift: float
    derivative_ratios: dict
    verdict: str
    tolerance: float
    cap: float
    notes: list

    def to_dict(self) -> dict:
        return {
            "fitted_mu0": self.fitted_mu0,
            "fitted_mu1": self.fitted_mu1,
            "ray_slopes": self.ray_slopes,
            "slope_drift": self.slope_drift,
            "derivative_ratios": self.derivative_ratios,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "cap": self.cap,
            "notes": self.notes,
        }


def ray_directions(n: int) -> dict:
    """Unit directions: +-coordinate axes and the main diagonal."""
    dirs = {}
    for j in range(n):
        for sgn, tag in ((1.0, "+"), (-1.0, "-")):
            d = np.zeros(n)
            d[j] = sgn
            dirs[f"{tag}e{j + 1}"] = d
    if n > 1:
        dirs["diag"] = np.ones(n) / math.sqrt(n)
    return dirs


def _slope(logr: np.ndarray, logv: np.ndarray) -> float:
    return float(np.polyfit(logr, logv, 1)[0])


def _eval_weight_derivative(w: Weight, n: int, beta, pts: np.ndarray) -> np.ndarray:
    e = derivative(w.expr_for(n), beta=beta) if any(beta) else w.expr_for(n)
    return evaluate(e, None, [pts[:, j] for j in range(n)], weights=REGISTRY)


def check_weight(w: Weight, ray_radii, max_alpha: int = 2, dim: int | None = None,
                 tol: float = 0.1, cap: float = 1e3) -> WeightReport:
    """Fit growth exponents along rays and tabulate the derivative axiom ratios.

    Exponents come from least squares of log Lambda against log|xi|; the ratio
    table holds sup |xi^gamma d^(alpha+gamma) Lambda| / Lambda^(1-|alpha|/mu).
    """
    radii = np.asarray(ray_radii, dtype=float)
    if radii.size < 4:
        raise ValueError("growth regression needs at least 4 radii")
    if np.any(np.diff(radii) <= 0) or radii[0] < 1:
        raise ValueError("ray radii must be increasing and >= 1")
    n = dim or w.dim or 1
    notes = []
    slopes, drifts = {}, []
    ok = True
    logr = np.log(radii)
    half = radii.size // 2
    ray_pts = []
    for tag, d in ray_directions(n).items():
        pts = radii[:, None] * d[None, :]
        ray_pts.append(pts)
        try:
            with np.errstate(all="ignore"):
                vals = np.real(_eval_weight_derivative(w, n, (0,) * n, pts))
        except (EvaluationError, FloatingPointError, OverflowError) as exc:
            notes.append(f"ray {tag}: evaluation failed ({exc})")
            slopes[tag] = math.inf
            ok = False
            continue
        if np.any(vals <= 0):
            notes.append(f"ray {tag}: non-positive weight value")
            ok = False
            slopes[tag] = math.nan
            continue
        lv = np.log(vals)
        slopes[tag] = _slope(logr, lv)
        if half >= 2 and radii.size - half >= 2:
            drifts.append(abs(_slope(logr[half:], lv[half:]) - _slope(logr[:half], lv[:half])))
    finite = [s for s in slopes.values() if math.isfinite(s)]
    mu0_fit = min(finite) if finite else math.nan
    mu1_fit = max(finite) if finite else math.nan
    if len(finite) != len(slopes):
        mu1_fit = math.inf
    drift = max(drifts) if drifts else 0.0
    if drift > tol:
        notes.append(f"fitted exponent drifts by {drift:.3g} between radius windows")
        ok = False
    if not (math.isfinite(mu0_fit) and math.isfinite(mu1_fit)
            and w.mu0 - tol <= mu0_fit and mu1_fit <= w.mu1 + tol):
        ok = False

    # derivative axiom ratios on ray samples plus a small grid near the origin
    g = np.linspace(-2.0, 2.0, 9)
    near = np.array(list(itertools.product(g, repeat=n)))
    pts = np.vstack(ray_pts + [near])
    ratios = {}
    try:
        with np.errstate(all="ignore"):
            lam = np.real(_eval_weight_derivative(w, n, (0,) * n, pts))
    except EvaluationError as exc:
        notes.append(f"derivative table skipped: {exc}")
        lam = None
        ok = False
    if lam is not None:
        for alpha in itertools.product(range(max_alpha + 1), repeat=n):
            if sum(alpha) > max_alpha:
                continue
            for gamma in itertools.product((0, 1), repeat=n):
                beta = tuple(a + c for a, c in zip(alpha, gamma))
                key = f"a={list(alpha)},g={list(gamma)}"
                try:
                    with np.errstate(all="ignore"):
                        d = _eval_weight_derivative(w, n, beta, pts)
                        xg = np.prod(pts ** np.array(gamma)[None, :], axis=1)
                        r = np.abs(xg * d) / lam ** (1.0 - sum(alpha) / w.mu)
                    val = float(np.max(r))
                except EvaluationError:
                    val = math.inf
                ratios[key] = val if math.isfinite(val) else math.inf
                if not (math.isfinite(val) and val <= cap):
                    ok = False
    return WeightReport(mu0_fit, mu1_fit, slopes, drift, ratios, "pass" if ok else "fail",
                        tol, cap, notes)

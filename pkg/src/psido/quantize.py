"""Periodic-grid quantization T_sigma u(x) = (2 pi)^(-n/2) int e^{ix.xi} sigma(x, xi) u^(xi) dxi.

Conventions.  On the grid ``x_j = -L + j h`` (h = 2L/N) with frequencies
``xi_k = (pi/L) k``, k in [-N/2, N/2), the transform is

    u^_k = (h / sqrt(2 pi))^n sum_j u_j exp(-i x_j . xi_k)

and its inverse uses the weight (dxi / sqrt(2 pi))^n.  Frequency arrays are
stored in natural order (k = -N/2 first).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .descriptor import SymbolDescriptor, describe
from .errors import EvaluationError, SizeCapError
from .parallel import ordered_map
from .symexpr import depends_on

__all__ = ["GridSpec", "Field", "fourier", "inverse_fourier", "apply_op", "dense_matrix",
           "extract_symbol", "operator_norm", "NormEstimate", "symbol_table", "plane_wave",
           "gaussian", "inner", "DENSE_CAP"]

DENSE_CAP = 4096
_ROW_CHUNK = 64


@dataclass(frozen=True)
class GridSpec:
    dim: int = 1
    L: float = 16.0
    N: int = 256

    def __post_init__(self):
        if self.N < 2 or self.N % 2:
            raise ValueError("N must be even")
        if self.N & (self.N - 1):
            raise ValueError("N must be a power of two")
        if self.L <= 0 or self.dim < 1:
            raise ValueError("need L > 0 and dim >= 1")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        return math.pi / self.L

    @property
    def nyquist(self) -> float:
        return self.dxi * self.N / 2

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.dim

    @property
    def size(self) -> int:
        return self.N ** self.dim

    @property
    def nodes(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    @property
    def kindex(self) -> np.ndarray:
        return np.arange(-self.N // 2, self.N // 2)

    @property
    def freqs(self) -> np.ndarray:
        return self.dxi * self.kindex

    def mesh(self, domain: str = "x") -> list:
        axis = self.nodes if domain == "x" else self.freqs
        return np.meshgrid(*([axis] * self.dim), indexing="ij")

    def points(self, domain: str = "x") -> np.ndarray:
        """All nodes (or frequencies) as a (N^n, n) array in C order."""
        return np.stack([c.ravel() for c in self.mesh(domain)], axis=1)

    def cell(self, domain: str = "x") -> float:
        return (self.h if domain == "x" else self.dxi) ** self.dim

    def to_dict(self) -> dict:
        return {"dim": self.dim, "L": self.L, "N": self.N}


@dataclass(frozen=True)
class Field:
    """Complex samples on a grid; ``evaluator`` maps coordinate arrays to values."""

    values: np.ndarray
    grid: GridSpec
    domain: str = "x"
    evaluator: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).reshape(self.grid.shape)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.domain not in ("x", "xi"):
            raise ValueError("domain must be 'x' or 'xi'")

    @classmethod
    def from_function(cls, fn: Callable, grid: GridSpec, check: float = 1e-12) -> "Field":
        """Sample an evaluator on the node set and keep it for off-grid use."""
        vals = np.asarray(fn(grid.mesh("x")), dtype=complex)
        f = cls(vals, grid, "x", fn)
        if check is not None:
            again = np.asarray(fn(grid.mesh("x")), dtype=complex)
            scale = max(1.0, float(np.max(np.abs(vals))))
            if np.max(np.abs(again - vals)) > check * scale:
                raise ValueError("evaluator is not reproducible on the grid")
        return f

    def __call__(self, coords) -> np.ndarray:
        if self.evaluator is None:
            raise ValueError("field has no closed-form evaluator")
        return np.asarray(self.evaluator(coords), dtype=complex)

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def with_values(self, values, evaluator=None) -> "Field":
        return Field(values, self.grid, self.domain, evaluator)

    def __add__(self, other: "Field") -> "Field":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "Field":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def _sign(grid: GridSpec) -> np.ndarray:
    s = np.where(grid.kindex % 2 == 0, 1.0, -1.0)
    out = np.ones(grid.shape)
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.N
        out = out * s.reshape(shape)
    return out


def fourier(u: Field) -> Field:
    """Grid Fourier transform with the (h / sqrt(2 pi))^n normalization."""
    g = u.grid
    if u.domain != "x":
        raise ValueError("fourier expects a spatial field")
    uh = np.fft.fftshift(np.fft.fftn(u.values)) * _sign(g)
    return Field(uh * (g.h / math.sqrt(2 * math.pi)) ** g.dim, g, "xi")


def inverse_fourier(v: Field) -> Field:
    """Inverse transform with the (dxi / sqrt(2 pi))^n normalization."""
    g = v.grid
    if v.domain != "xi":
        raise ValueError("inverse_fourier expects a frequency field")
    raw = np.fft.ifftn(np.fft.ifftshift(v.values * _sign(g))) * g.size
    return Field(raw * (g.dxi / math.sqrt(2 * math.pi)) ** g.dim, g, "x")


def inner(u: Field, v: Field) -> complex:
    """Grid inner product h^n sum u conj(v), in fixed summation order."""
    return complex(u.grid.cell(u.domain) * np.sum(u.values.ravel() * np.conj(v.values.ravel())))


def plane_wave(grid: GridSpec, k) -> Field:
    """exp(i x . xi_k) for the integer frequency index ``k`` (tuple for n > 1)."""
    k = np.atleast_1d(k)
    xi = grid.dxi * k
    mesh = grid.mesh("x")

    def fn(coords, xi=xi):
        return np.exp(1j * sum(c * w for c, w in zip(coords, xi)))

    return Field(fn(mesh), grid, "x", fn)


def gaussian(grid: GridSpec, x0=0.0, xi0=0.0) -> Field:
    """exp(-|x - x0|^2 / 2 + i x . xi0) with its closed-form evaluator."""
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (grid.dim,))
    xi0 = np.broadcast_to(np.asarray(xi0, dtype=float), (grid.dim,))

    def fn(coords, x0=x0, xi0=xi0):
        r2 = sum((np.asarray(c, dtype=float) - a) ** 2 for c, a in zip(coords, x0))
        return np.exp(-r2 / 2 + 1j * sum(c * w for c, w in zip(coords, xi0)))

    return Field.from_function(fn, grid)


def _as_descriptor(s, grid: GridSpec) -> SymbolDescriptor:
    if isinstance(s, SymbolDescriptor):
        if s.dim != grid.dim:
            raise ValueError("symbol dimension does not match the grid")
        return s
    return describe(s, dim=grid.dim)


def symbol_table(s, grid: GridSpec, xpts=None) -> np.ndarray:
    """sigma(x_p, xi_k) as a (P, N^n) array; default x points are the nodes."""
    s = _as_descriptor(s, grid)
    xpts = grid.points("x") if xpts is None else np.atleast_2d(xpts)
    try:
        return s.sample(xpts, grid.points("xi"))
    except EvaluationError as exc:
        raise EvaluationError(f"symbol evaluation failed: {exc}", index=exc.index) from exc


def _phase(xpts: np.ndarray, xipts: np.ndarray) -> np.ndarray:
    return np.exp(1j * (xpts @ xipts.T))


def _direct(s: SymbolDescriptor, uh: np.ndarray, grid: GridSpec, xpts: np.ndarray) -> np.ndarray:
    """(dxi/sqrt(2pi))^n sum_k exp(i x.xi_k) sigma(x, xi_k) u^_k at arbitrary x."""
    xipts = grid.points("xi")
    c = (grid.dxi / math.sqrt(2 * math.pi)) ** grid.dim
    chunks = [xpts[i:i + _ROW_CHUNK] for i in range(0, xpts.shape[0], _ROW_CHUNK)]

    def rows(block):
        sym = s.sample(block, xipts)
        return (_phase(block, xipts) * sym) @ uh

    return c * np.concatenate(ordered_map(rows, chunks)) if chunks else np.zeros(0, complex)


def apply_op(s, u: Field, with_evaluator: bool = True) -> Field:
    """T_sigma u on the grid.

    x-independent symbols take the multiplier path (one inverse FFT); other
    symbols use the direct sum.  The returned field carries an evaluator for
    the same formula at arbitrary x (the trigonometric interpolant).
    """
    grid = u.grid
    s = _as_descriptor(s, grid)
    uh_field = fourier(u)
    uh = uh_field.values.ravel()
    if not depends_on(s.expr, "x"):
        mult = symbol_table(s, grid, np.zeros((1, grid.dim)))[0]
        out = inverse_fourier(Field((mult * uh).reshape(grid.shape), grid, "xi")).values
    else:
        out = _direct(s, uh, grid, grid.points("x")).reshape(grid.shape)
    evaluator = None
    if with_evaluator:
        def evaluator(coords, s=s, uh=uh, grid=grid):
            coords = [np.asarray(c, dtype=float) for c in coords]
            shape = np.broadcast(*coords).shape
            pts = np.stack([np.broadcast_to(c, shape).ravel() for c in coords], axis=1)
            return _direct(s, uh, grid, pts).reshape(shape)
    return Field(out, grid, "x", evaluator)


def dense_matrix(s, grid: GridSpec, cap: int = DENSE_CAP) -> np.ndarray:
    """A_jl = (dxi h / 2pi)^n sum_k exp(i (x_j - x_l).xi_k) sigma(x_j, xi_k), no FFT."""
    if grid.size > cap:
        raise SizeCapError(f"dense matrix of size {grid.size} exceeds the cap {cap}")
    s = _as_descriptor(s, grid)
    xpts, xipts = grid.points("x"), grid.points("xi")
    sym = s.sample(xpts, xipts)
    left = _phase(xpts, xipts) * sym * (grid.dxi / math.sqrt(2 * math.pi)) ** grid.dim
    right = np.conj(_phase(xpts, xipts)).T * (grid.h / math.sqrt(2 * math.pi)) ** grid.dim
    return left @ right


def extract_symbol(op, grid: GridSpec) -> np.ndarray:
    """Demodulate plane waves: sigma(x_j, xi_k) = exp(-i x_j.xi_k) (T e_k)(x_j).

    ``op`` is a dense matrix or a callable Field -> Field.  Returns a
    (N^n, N^n) table indexed by (node, frequency) in C order.
    """
    xpts, xipts = grid.points("x"), grid.points("xi")
    E = _phase(xpts, xipts)
    if callable(op):
        cols = []
        for q in range(xipts.shape[0]):
            f = Field(E[:, q].reshape(grid.shape), grid, "x")
            cols.append(np.asarray(op(f).values).ravel())
        TE = np.stack(cols, axis=1)
    else:
        TE = np.asarray(op) @ E
    return np.conj(E) * TE


@dataclass
class NormEstimate:
    value: float
    p: float
    lower_bound: bool
    iterations: int
    residual: float
    converged: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _lp(v: np.ndarray, p: float, cell: float) -> float:
    return float((cell * np.sum(np.abs(v) ** p)) ** (1.0 / p))


def operator_norm(s, grid: GridSpec, p: float = 2.0, seed: int = 0, maxiter: int = 2000,
                  tol: float = 1e-6, battery: int = 64) -> NormEstimate:
    """Estimate ||T_sigma||_{p->p} on the grid.

    p = 2 runs power iteration on A^H A for the dense matrix.  Other p
    maximise ||T u||_p / ||u||_p over a seeded random battery, which only
    gives a lower bound.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    rng = np.random.default_rng(seed)
    A = dense_matrix(s, grid)
    if p == 2:
        v = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
        v /= np.linalg.norm(v)
        est, it, res = 0.0, 0, math.inf
        for it in range(1, maxiter + 1):
            w = A.conj().T @ (A @ v)
            rq = float(np.real(np.vdot(v, w)))
            if rq <= 0:
                return NormEstimate(0.0, p, False, it, 0.0, True)
            # eigen-residual of the Rayleigh quotient; the norm error is O(res^2)
            res = float(np.linalg.norm(w - rq * v)) / rq
            est = math.sqrt(rq)
            if res < tol:
                break
            v = w / np.linalg.norm(w)
        return NormEstimate(est, p, False, it, res, res < tol)
    cell = grid.cell("x")
    best = 0.0
    trials = [np.ones(A.shape[1], dtype=complex)]
    trials += [rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
               for _ in range(battery)]
    xs = grid.points("x")
    for width, shift in itertools.product((0.5, 1.0, 2.0), (0.0,)):
        trials.append(np.exp(-np.sum((xs - shift) ** 2, axis=1) / (2 * width ** 2)).astype(complex))
    for u in trials:
        nu = _lp(u, p, cell)
        if nu > 0:
            best = max(best, _lp(A @ u, p, cell) / nu)
    return NormEstimate(best, p, True, len(trials), math.nan, True)

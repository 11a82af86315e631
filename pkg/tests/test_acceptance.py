"""Acceptance criteria 1-11, each at its stated tolerance.

Every test prints one ``criterion N: PASS/FAIL`` line; the lines are also
collected into the terminal summary.  Criteria that do not hold as stated
are strict xfails with the measured numbers in the reason.
"""
import json
import math
import time

import numpy as np
import pytest

from psido.calculus import adjoint_symbol, compose_symbols, parametrix, remainder_decay_probe
from psido.cli import main
from psido.corpus import corpus_symbol, sample_corpus
from psido.garding import default_battery, garding_fit, sg_garding_fit, sqrt_symbol
from psido.probes import (RescaleParams, apply_R, apply_R_inverse, concentration_probe,
                          conjugate_order_reduction, conjugated_symbol, decay_exponent_probe,
                          weak_decay_probe)
from psido.quantize import (Field, GridSpec, apply_op, dense_matrix, extract_symbol, fourier,
                            gaussian, inner)
from psido.report import strip_clock
from psido.spaces import lp_norm
from psido.symclass import EllipticityCertificate, Witness, certify_elliptic, check_class, \
    describe, fit_lower_bound
from psido.symexpr import evaluate


def _random_field(grid, seed):
    rng = np.random.default_rng(seed)
    return Field(rng.standard_normal(grid.N) + 1j * rng.standard_normal(grid.N), grid)


def test_criterion_1_oracle_equivalence(criterion):
    g = GridSpec(1, 16.0, 64)
    t0 = time.perf_counter()
    worst = 0.0
    for i, name in enumerate(sample_corpus(10, seed=0)):
        s = corpus_symbol(name)
        u = _random_field(g, i)
        fast = apply_op(s, u).values
        slow = dense_matrix(s, g) @ u.values
        worst = max(worst, float(np.max(np.abs(fast - slow)) / np.max(np.abs(slow))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 5.0
    criterion(1, ok, f"max rel {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_criterion_2_quantization_identities(criterion):
    g = GridSpec(1, 16.0, 256)
    u = _random_field(g, 0)
    ident = float(np.max(np.abs(apply_op(describe("1"), u).values - u.values)))
    x = g.nodes
    mult = float(np.max(np.abs(apply_op(describe("sin(x1) + x1^2/16"), u).values
                               - (np.sin(x) + x ** 2 / 16) * u.values)))
    planch = abs(lp_norm(u) - lp_norm(fourier(u))) / lp_norm(u)
    pair = float(np.max(np.abs(fourier(gaussian(g)).values - np.exp(-g.freqs ** 2 / 2))))
    ok = ident <= 1e-12 and mult <= 1e-12 and planch <= 1e-12 and pair <= 1e-10
    criterion(2, ok, f"identity {ident:.1e}, pointwise {mult:.1e}, Plancherel {planch:.1e}, "
                     f"Gaussian pair {pair:.1e}")
    assert ok


def _band_projector(g):
    F = np.stack([fourier(Field(col, g)).values for col in np.eye(g.N)], axis=1)
    band = (np.abs(g.freqs) <= g.nyquist / 2).astype(float)
    return np.linalg.solve(F, band[:, None] * F)


def test_criterion_3_calculus_exactness(criterion):
    t0 = time.perf_counter()
    X, XI = np.linspace(-5, 5, 41)[:, None], np.linspace(-40, 40, 81)[None, :]

    def vals(e):
        return np.broadcast_to(evaluate(e, [X], [XI]), (41, 81))

    exact = 0.0
    for a, b, M in [("sin(x1)*jb(xi) + xi1^2", "jb(xi)^(-1)", 3),
                    ("exp(-x1^2) + cos(x1)", "sin(x1)*jb(xi)", 4)]:
        r = compose_symbols(describe(a, 2), describe(b, 1), M)
        exact = max([exact] + [float(np.max(np.abs(vals(term)))) for mu, term in r.terms if sum(mu)])
    s = describe("jb(xi)^2 + atan(xi1)", 2)
    self_adj = max(float(np.max(np.abs(vals(adjoint_symbol(s, M).expr) - vals(s.expr))))
                   / float(np.max(np.abs(vals(s.expr)))) for M in (1, 2, 3))

    # sin(x) is periodic on the box only when 2L is a multiple of 2 pi
    g = GridSpec(1, 4 * math.pi, 64)
    s = describe("sin(x1)*jb(xi)", 1)
    star = dense_matrix(s, g).conj().T
    P = _band_projector(g)
    band, full = [], []
    for M in (1, 2, 3):
        D = star - dense_matrix(adjoint_symbol(s, M).descriptor, g)
        band.append(float(np.linalg.norm(P @ D @ P, 2)))
        full.append(float(np.linalg.norm(D, 2)))
    elapsed = time.perf_counter() - t0
    ok = exact <= 1e-15 and self_adj <= 1e-15 and band[0] > band[1] > band[2] and elapsed < 30
    criterion(3, ok, "mu != 0 terms {:.0e}, real multiplier {:.0e}, band-projected adjoint "
                     "gap {}, full-matrix gap {}, {:.1f} s".format(
                         exact, self_adj, ", ".join(f"{v:.3f}" for v in band),
                         ", ".join(f"{v:.3f}" for v in full), elapsed))
    assert ok


def test_criterion_4_remainder_order(criterion):
    # the right factor of t # s carries the x-dependence; s # t terminates at mu = 0
    g = GridSpec(1, 2 * math.pi, 1024)
    s, t = describe("jb(xi)*(1 + 0.5*cos(x1))", 1), describe("jb(xi)^(-1)", -1)
    exact = extract_symbol(dense_matrix(t, g) @ dense_matrix(s, g), g)
    radii = [8, 16, 32, 64, 128]
    slopes = []
    for M in (1, 2):
        r = compose_symbols(t, s, M)
        slopes.append(remainder_decay_probe(exact, r.descriptor, r.claimed_order, radii, g).slope)
    gap = slopes[0] - slopes[1]
    ok = abs(gap - s.rho) <= 0.3
    criterion(4, ok, f"slopes M=1 {slopes[0]:.3f}, M=2 {slopes[1]:.3f}, gap {gap:.3f}")
    assert ok


def _parametrix_residuals(M=3):
    g = GridSpec(1, 8.0, 256)
    s = describe("2 + sin(x1)", 0)
    cert = certify_elliptic(s)
    xi0 = 32.0
    u = gaussian(g, 0.0, xi0)
    Tsu = apply_op(s, u, with_evaluator=False)
    R = xi0 / math.sqrt(2.5)  # the cutoff equals 1/2 at xi0
    res = []
    for K in (0, 1, 2):
        r = apply_op(parametrix(s, M, K, R, cert), Tsu, with_evaluator=False) - u
        res.append(lp_norm(r) / lp_norm(u))
    return res


@pytest.mark.xfail(strict=True, reason="Newton defect (1 - chi)^(2^K) gives about 6x, not 10x, "
                                       "at the a-priori radius; see the decisions ledger")
def test_criterion_5_parametrix(criterion):
    t0 = time.perf_counter()
    res = _parametrix_residuals()
    elapsed = time.perf_counter() - t0
    drop = res[0] / res[2]
    ok = drop >= 10 and elapsed < 60
    criterion(5, ok, "residuals K=0,1,2: {}, drop {:.1f}x, {:.1f} s".format(
        ", ".join(f"{v:.4f}" for v in res), drop, elapsed))
    assert ok


def test_criterion_5_residual_still_decreases():
    res = _parametrix_residuals()
    assert res[0] > res[1] > res[2]


def test_criterion_6_rescaling(criterion):
    g = GridSpec(1, 16.0, 1024)
    u = gaussian(g)
    lams = [1, 2, 4, 8, 16, 32, 64]
    inv, iso = 0.0, 0.0
    for p in (1.5, 2.0, 3.0):
        base = lp_norm(u, p)
        for lam in lams:
            prm = RescaleParams(lam, 0.25, (0.5,), (1.0,), p)
            Ru = apply_R(u, prm)
            inv = max(inv, float(np.max(np.abs(apply_R_inverse(Ru, prm).values - u.values))))
            iso = max(iso, abs(lp_norm(Ru, p) - base) / base)
    weak = weak_decay_probe(u, u, RescaleParams(1.0, 0.25, (0.0,), (1.0,)), lams)
    gc = GridSpec(1, 16.0, 256)
    s = describe("(2 + sin(x1))*atan(xi1)", 0)
    v = gaussian(gc, 0.0, 0.0)
    prm = RescaleParams(4.0, 0.25, (0.5,), (1.0,))
    lhs = apply_R_inverse(apply_op(s, apply_R(v, prm)), prm)
    rhs = apply_op(describe(conjugated_symbol(s, prm), 0), v)
    conj = lp_norm(lhs - rhs) / lp_norm(v)
    ok = inv <= 1e-10 and iso <= 1e-6 and weak.decreasing and conj <= 1e-6
    criterion(6, ok, f"inverse {inv:.1e}, isometry {iso:.1e}, weak pairing decreasing "
                     f"{weak.decreasing}, conjugation {conj:.1e}")
    assert ok


def _decay_slopes(text):
    s = describe(text, 0)
    prm = RescaleParams(1.0, 0.2, (0.0,), (1.0,))
    lams = [2, 4, 8, 16, 32, 64]
    fa = decay_exponent_probe(s, (1,), (0,), prm, lams)
    fb = decay_exponent_probe(s, (0,), (1,), prm, lams)
    return fa, fb


@pytest.mark.xfail(strict=True, reason="sin(x) has no xi-dependence: the (0,1) derivative "
                                       "vanishes and its slope is -inf; see the decisions ledger")
def test_criterion_7_decay_exponents(criterion):
    fa, fb = _decay_slopes("sin(x1)")
    va, vb = _decay_slopes("sin(x1)*(2 + cos(atan(xi1)))")
    ok = abs(fa.slope - fa.predicted) <= 0.15 and abs(fb.slope - fb.predicted) <= 0.15
    criterion(7, ok, f"sin(x): (1,0) {fa.slope:.3f} vs {fa.predicted:.3f}, (0,1) {fb.slope} vs "
                     f"{fb.predicted:.3f}; sin(x)(2+cos(atan xi)): (1,0) {va.slope:.3f}, "
                     f"(0,1) {vb.slope:.3f}")
    assert ok


def test_criterion_7_xi_dependent_variant():
    fa, fb = _decay_slopes("sin(x1)*(2 + cos(atan(xi1)))")
    assert fa.slope == pytest.approx(fa.predicted, abs=0.15)
    assert fb.slope == pytest.approx(fb.predicted, abs=0.15)
    fa, _ = _decay_slopes("sin(x1)")
    assert fa.slope == pytest.approx(-0.2, abs=0.15)


def test_criterion_8_fredholm_contrapositive(criterion):
    g = GridSpec(1, 16.0, 512)
    u = gaussian(g)
    s = describe("jb(xi)^(-1/2)", 0)
    w = certify_elliptic(s)
    assert isinstance(w, Witness)
    with pytest.warns(RuntimeWarning):
        rep = concentration_probe(s, w, u)
    rows = {round(math.log2(r["lambda"])): r["ratio"] for r in rep.rows}
    ks = range(1, 6)
    bound_ok = all(k in rows and rows[k] <= 1.1 * (1 + 4.0 ** k) ** -0.25 for k in ks)
    one = concentration_probe(describe("1", 0), ([[0.0]] * 5, [[2.0 ** k] for k in ks]), u)
    unit = max(abs(r["ratio"] - 1) for r in one.rows)
    ok = bound_ok and rep.lower_bound_fails and unit <= 1e-6
    criterion(8, ok, "ratios k=1..5: {}, identity deviation {:.1e}".format(
        ", ".join(f"{rows.get(k, float('nan')):.3f}" for k in ks), unit))
    assert ok


def test_criterion_9_garding(criterion):
    t0 = time.perf_counter()
    b = default_battery()

    def fit(text):
        s = describe(text, 2)
        cert = certify_elliptic(s, "strongly-M-elliptic")
        assert isinstance(cert, EllipticityCertificate)
        return garding_fit(s, 0.5, b, cert)

    pure = fit("jb(xi)^2")
    pure_ok = pure.C_prime == 1 and pure.C_s == 0 and max(map(abs, pure.margins)) <= 1e-10
    mix = fit("jb(xi)^2 + 5*sin(x1)*jb(xi)")
    mix_ok = mix.C_prime > 0 and mix.min_margin >= -1e-8
    dbl = fit("2*(jb(xi)^2 + 5*sin(x1)*jb(xi))")
    dbl_ok = dbl.C_prime == 2 * mix.C_prime and dbl.C_s == 2 * mix.C_s

    reduced = conjugate_order_reduction(describe("jb(xi)^2 + 5*sin(x1)*jb(xi)", 2), 1.0, 3)
    eta, kappa = fit_lower_bound(reduced)
    tau = sqrt_symbol(reduced, eta, kappa)
    cls = check_class(tau, maxord=2).verdict
    forms = [inner(v, v).real for v in (apply_op(tau, phi, with_evaluator=False) for phi in b)]
    sqrt_ok = tau.order == 0 and cls == "pass" and min(forms) >= 0
    elapsed = time.perf_counter() - t0
    ok = pure_ok and mix_ok and dbl_ok and sqrt_ok and elapsed < 120
    criterion(9, ok, f"pure power C'={pure.C_prime}, C_s={pure.C_s}; mixed C'={mix.C_prime:.4f}, "
                     f"C_s={mix.C_s:.4f}, min margin {mix.min_margin:.2e}; doubling exact {dbl_ok}; "
                     f"sqrt symbol class {cls}; {elapsed:.1f} s")
    assert ok


def test_criterion_10_sg_garding(criterion):
    b = default_battery()
    s = describe("jb(xi)^2", 2)
    plain = garding_fit(s, 0.5, b, certify_elliptic(s, "strongly-M-elliptic"))
    sg = describe("jb(xi)^2", (2, 0), xweight="bracket")
    deg = sg_garding_fit(sg, 0.5, 0.5, b, certify_elliptic(sg, "SG"))
    # lower norms differ by construction: s2 >= rho/2 with m2 = 0 weights them by <x>^(-s2)
    keys = ("C_prime", "C_s", "margins", "min_margin", "verdict", "frontier", "forms",
            "upper_norms", "labels")
    same = [k for k in keys if getattr(deg, k) == getattr(plain, k)]
    prod = describe("jb(x)^2*jb(xi)^2", (2, 2), xweight="bracket")
    rep = sg_garding_fit(prod, 0.5, 0.5, b, certify_elliptic(prod, "SG"))
    ok = len(same) == len(keys) and rep.C_prime > 0 and rep.verdict == "pass"
    criterion(10, ok, f"degenerate case matches on {len(same)}/{len(keys)} fit fields "
                      f"(lower norms excluded); <x>^2<xi>^2 C'={rep.C_prime:.4f}")
    assert ok


RUNS = [
    ["check-symbol", "--symbol", "jb(xi)^2 + 5*sin(x1)*jb(xi)", "--order", "2"],
    ["certify", "--symbol", "jb(xi)^(-1/2)"],
    ["fit-eta-kappa", "--symbol", "jb(xi)^2 + 5*sin(x1)*jb(xi)", "--order", "2"],
    ["compose", "--symbol", "sin(x1)*jb(xi)", "--order", "1", "--symbol2", "jb(xi)^(-1)",
     "--order2", "-1", "-M", "3"],
    ["fredholm-probe", "--symbol", "jb(xi)^(-1/2)", "--N", "512"],
    ["rescale-probe", "--N", "1024"],
    ["garding", "--symbol", "jb(xi)^2 + 5*sin(x1)*jb(xi)", "--two-m", "2"],
    ["garding-sg", "--symbol", "jb(x)^2*jb(xi)^2", "--two-m1", "2", "--two-m2", "2"],
]


def test_criterion_11_determinism(criterion, tmp_path):
    differ = []
    for i, argv in enumerate(RUNS):
        texts = []
        for rep in ("a", "b"):
            out = tmp_path / f"{i}{rep}.json"
            main([*argv, "--seed", "11", "--out", str(out)])
            texts.append(json.dumps(strip_clock(json.loads(out.read_text())), sort_keys=True,
                                    indent=2))
        if texts[0] != texts[1]:
            differ.append(argv[0])
    ok = not differ
    criterion(11, ok, f"{len(RUNS)} commands run twice, identical modulo wall clock"
              if ok else f"differ: {differ}")
    assert ok

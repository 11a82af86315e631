import math

import numpy as np
import pytest

from psido.errors import DomainError, PreconditionError
from psido.symclass import (Box, EllipticityCertificate, Witness, certify_elliptic, check_class,
                            describe, fit_lower_bound, post_compose, seminorm)
from psido.symexpr import evaluate

SMALL = Box(nx=33, J=8, shell_points=8)


def test_seminorm_examples():
    one = describe("1", 0)
    assert seminorm(one, (0,), (0,)) == 1.0
    assert seminorm(one, (1,), (0,)) == 0.0
    assert seminorm(one, (0,), (2,)) == 0.0
    assert seminorm(describe("jb(xi)", 1), (0,), (0,)) == pytest.approx(1.0, abs=1e-14)
    # sup |cos x| over the x grid, which contains x = 0
    assert seminorm(describe("sin(x1)*jb(xi)", 1), (1,), (0,)) == pytest.approx(1.0, abs=1e-14)


def test_seminorm_order_cap():
    with pytest.raises(ValueError):
        seminorm(describe("1", 0), (4,), (3,))


def test_seminorm_divergence_is_inf():
    assert seminorm(describe("1/x1", 0), (0,), (0,), box=SMALL) == math.inf


@pytest.mark.parametrize("c", [2.0, -1.0])
def test_seminorm_homogeneous(c):
    base = "sin(x1)*jb(xi) + xi1"
    s = describe(base, 1)
    cs = describe(f"({c})*({base})", 1)
    for a, b in [((0,), (0,)), ((1,), (0,)), ((0,), (1,)), ((1,), (2,))]:
        assert seminorm(cs, a, b, box=SMALL) == abs(c) * seminorm(s, a, b, box=SMALL)


@pytest.mark.parametrize("m", [1.0, -0.5, 2.0])
def test_bracket_power_is_in_M(m):
    rep = check_class(describe(f"jb(xi)^({m})", m), maxord=3, tol=0.05)
    assert rep.verdict == "pass"
    for table in rep.m_tables.values():
        for e in table:
            assert e.exponent <= e.bound + 0.05


def test_sin_xi_fails_M0():
    rep = check_class(describe("sin(xi1)", 0), maxord=3)
    assert rep.verdict == "fail"
    first = {(e.alpha, e.beta): e for e in rep.s_table}[((0,), (1,))]
    assert first.exponent == pytest.approx(0.0, abs=0.1)


def test_zero_symbol_passes():
    rep = check_class(describe("0", 0), maxord=2)
    assert rep.verdict == "pass"
    assert all(e.seminorm == 0.0 for t in rep.m_tables.values() for e in t)


def test_m_table_gamma_zero_is_s_table():
    rep = check_class(describe("cos(x1)*jb(xi)", 1), maxord=2, box=SMALL)
    assert rep.m_tables[(0,)] == rep.s_table
    assert rep.seminorms((0,)) == rep.seminorms()


def test_two_dimensional_class():
    rep = check_class(describe("jb(xi)^2 + sin(x1)*xi2", 2, dim=2), maxord=1, box=SMALL)
    assert rep.verdict == "pass"
    assert set(rep.m_tables) == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_sg_class_report_flags_definition():
    s = describe("jb(x)*jb(xi)", (1, 1), dim=1, xweight="bracket")
    rep = check_class(s, maxord=2, box=SMALL)
    assert rep.verdict == "pass"
    assert rep.notes and "assumed definition" in rep.notes[0]
    bad = describe("jb(x)^2*jb(xi)", (1, 1), dim=1, xweight="bracket")
    assert check_class(bad, maxord=1, box=SMALL).verdict == "fail"


def test_certificate_bracket_square():
    cert = certify_elliptic(describe("jb(xi)^2", 2))
    assert isinstance(cert, EllipticityCertificate)
    assert cert.C == pytest.approx(1.0, abs=1e-12)
    assert cert.R == 0.0


def test_certificate_two_plus_sin():
    cert = certify_elliptic(describe("2 + sin(x1)", 0))
    assert isinstance(cert, EllipticityCertificate)
    # sin reaches -1 only at x = -pi/2 and 3pi/2; the grid samples -pi/2 exactly
    assert cert.C == pytest.approx(1.0, abs=1e-12)
    assert cert.R == 0.0


def test_witness_for_decaying_symbol():
    w = certify_elliptic(describe("jb(xi)^(-1/2)", 0))
    assert isinstance(w, Witness)
    xi = np.abs(np.array(w.xi)[:, 0])
    assert np.all(np.diff(xi) > 0)
    expected = (1 + xi ** 2) ** -0.25
    assert np.allclose(w.ratios, expected, rtol=1e-12)
    assert np.all(np.diff(w.ratios) < 0)
    assert abs(w.sigma_inf) < 0.1


def test_certificate_invariant_holds_on_samples():
    s = describe("jb(xi)^2 + 5*sin(x1)*jb(xi)", 2)
    cert = certify_elliptic(s, kind="strongly-M-elliptic")
    assert isinstance(cert, EllipticityCertificate)
    box = Box()
    xi, _ = box.xi_points(1)
    xi = xi[np.abs(xi[:, 0]) >= cert.R]
    vals = np.real(s.sample(box.x_points(1), xi))
    assert np.all(vals >= cert.C * (1 + xi[:, 0] ** 2)[None, :] * (1 - 1e-12))


@pytest.mark.parametrize("c", [3.0, -2.0])
def test_certificate_scales(c):
    base = certify_elliptic(describe("2 + sin(x1)", 0), radii=[0, 1, 2])
    scaled = certify_elliptic(describe(f"({c})*(2 + sin(x1))", 0), radii=[0, 1, 2])
    assert scaled.R == base.R
    assert scaled.C == pytest.approx(abs(c) * base.C, rel=1e-14)


def test_certify_rejects_unordered_radii():
    with pytest.raises(ValueError):
        certify_elliptic(describe("1", 0), radii=[2, 1])


def test_sg_certify_needs_sg_descriptor():
    with pytest.raises(PreconditionError):
        certify_elliptic(describe("1", 0), kind="SG")


def test_fit_lower_bound_pure_power():
    eta, kappa = fit_lower_bound(describe("jb(xi)^2", 2))
    assert eta == pytest.approx(1.0, rel=1e-9)
    assert kappa == pytest.approx(0.0, abs=1e-9)


def test_fit_lower_bound_constructed():
    lb = fit_lower_bound(describe("jb(xi)^2 - 3*jb(xi)", 2))
    assert lb.eta >= 1.0 - 1e-6
    assert lb.kappa == pytest.approx(3.0, rel=1e-6)


def test_fit_lower_bound_mixed_and_reasserted():
    s = describe("jb(xi)^2 + 5*sin(x1)*jb(xi)", 2)
    box = Box()
    eta, kappa = fit_lower_bound(s, box=box)
    assert 0 < eta <= 1.0 + 1e-9
    assert 0 <= kappa <= 5.0 + 1e-6
    xi, _ = box.xi_points(1)
    lam = np.sqrt(1 + xi[:, 0] ** 2)[None, :]
    re = np.real(s.sample(box.x_points(1), xi))
    assert np.all(re >= eta * lam ** 2 - kappa * lam - 1e-9 * lam ** 2)


def test_fit_lower_bound_infeasible():
    with pytest.raises(PreconditionError):
        fit_lower_bound(describe("jb(xi)^2*(1 - 2*cos(x1))", 2))


def test_post_compose_identity_and_constant():
    s = describe("2 + sin(x1)", 0)
    assert post_compose("z", s).expr is s.expr
    c = post_compose("sqrt(0.5/2 + z)", s, inner="0")
    assert complex(evaluate(c.expr, [0.3], [1.7])) == pytest.approx(math.sqrt(0.25), abs=1e-15)
    assert c.order == 0.0


def test_post_compose_sqrt_in_class():
    out = post_compose("sqrt(0.5/2 + z)", describe("2 + sin(x1)", 0))
    assert check_class(out, maxord=3).verdict == "pass"


def test_post_compose_domain_error_names_point():
    with pytest.raises(DomainError) as info:
        post_compose("sqrt(z)", describe("sin(x1)", 0), box=SMALL)
    assert "x" in str(info.value) and info.value.point is not None


@pytest.mark.parametrize("a,b", [(2.0, 1.0), (-0.5, 3.0), (1.0, -7.0)])
def test_post_compose_affine_seminorms(a, b):
    s = describe("sin(x1)*jb(xi)^(-1)", 0)
    out = post_compose(f"({a})*z + ({b})", s)
    for al, be in [((1,), (0,)), ((0,), (1,)), ((1,), (1,)), ((2,), (0,))]:
        lhs = seminorm(out, al, be, box=SMALL)
        rhs = abs(a) * seminorm(s, al, be, box=SMALL)
        assert lhs <= rhs * (1 + 1e-10) + 1e-10

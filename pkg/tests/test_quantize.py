import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from psido import fieldio
from psido.descriptor import describe
from psido.errors import SizeCapError
from psido.quantize import (Field, GridSpec, apply_op, dense_matrix, extract_symbol, fourier,
                            gaussian, inner, inverse_fourier, operator_norm, plane_wave)
from psido.spaces import lp_norm

G64 = GridSpec(1, 16.0, 64)
G256 = GridSpec(1, 16.0, 256)


def _random_field(grid, seed):
    r = np.random.default_rng(seed)
    return Field(r.standard_normal(grid.shape) + 1j * r.standard_normal(grid.shape), grid)


def test_grid_invariants():
    g = GridSpec(1, 16.0, 256)
    assert g.h * g.N == pytest.approx(2 * g.L)
    assert g.freqs[0] == -g.nyquist and g.freqs[-1] == pytest.approx(g.nyquist - g.dxi)
    assert np.allclose(g.freqs[1:], -g.freqs[1:][::-1])
    with pytest.raises(ValueError):
        GridSpec(1, 16.0, 100)
    with pytest.raises(ValueError):
        GridSpec(1, 16.0, 7)


def test_plane_wave_transform_is_a_single_spike():
    for k0 in (-5, 0, 13):
        uh = fourier(plane_wave(G64, k0)).values
        spike = np.argmax(np.abs(uh))
        assert G64.kindex[spike] == k0
        rest = np.delete(uh, spike)
        assert np.max(np.abs(rest)) <= 1e-12 * abs(uh[spike])


def test_fft_round_trip():
    u = _random_field(G256, 1)
    back = inverse_fourier(fourier(u))
    assert np.max(np.abs(back.values - u.values)) <= 1e-12 * np.max(np.abs(u.values))


def test_gaussian_fourier_pair():
    u = gaussian(G256)
    uh = fourier(u).values
    assert np.max(np.abs(uh - np.exp(-G256.freqs ** 2 / 2))) <= 1e-10


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_discrete_plancherel(seed):
    u = _random_field(G256, seed)
    a, b = lp_norm(u, 2), lp_norm(fourier(u), 2)
    assert abs(a - b) <= 1e-12 * a


def test_identity_symbol():
    u = _random_field(G64, 3)
    assert np.max(np.abs(apply_op(describe("1"), u).values - u.values)) <= 1e-12
    assert np.max(np.abs(dense_matrix(describe("1"), G64) - np.eye(64))) <= 1e-12


def test_multiplication_symbol_acts_pointwise():
    u = _random_field(G64, 4)
    v = apply_op(describe("sin(x1) + x1^2/16"), u)
    x = G64.nodes
    assert np.max(np.abs(v.values - (np.sin(x) + x ** 2 / 16) * u.values)) <= 1e-12


def test_xi_symbol_on_plane_wave():
    u = plane_wave(G64, 7)
    v = apply_op(describe("xi1", 1), u)
    assert np.max(np.abs(v.values - G64.freqs[G64.kindex == 7][0] * u.values)) <= 1e-12


def test_dense_matrix_diagonalized_by_fourier_basis():
    s = describe("jb(xi)", 1)
    A = dense_matrix(s, G64)
    F = np.stack([plane_wave(G64, k).values for k in G64.kindex], axis=1)
    D = np.linalg.solve(F, A @ F)
    assert np.max(np.abs(np.diag(D) - np.sqrt(1 + G64.freqs ** 2))) <= 1e-10
    assert np.max(np.abs(D - np.diag(np.diag(D)))) <= 1e-10


@pytest.mark.parametrize("text", ["sin(x1)*jb(xi)", "exp(-x1^2)*xi1 + 2", "jb(xi)^(-1)"])
def test_dense_matrix_matches_apply_op(text):
    s = describe(text, 1)
    u = _random_field(G64, 5)
    a = apply_op(s, u).values
    b = dense_matrix(s, G64) @ u.values
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))


def test_fast_multiplier_path_matches_dense_path():
    s = describe("atan(xi1)*jb(xi)", 1)
    u = _random_field(G64, 6)
    fast = apply_op(s, u).values
    # force the direct sum by adding an x term that is identically zero on the grid
    slow = apply_op(describe("atan(xi1)*jb(xi) + 0*x1 + sin(x1)*0 + (x1 - x1)", 1), u)
    direct = dense_matrix(s, G64) @ u.values
    assert np.max(np.abs(fast - direct)) <= 1e-10 * np.max(np.abs(direct))
    assert np.max(np.abs(slow.values - fast)) <= 1e-10 * np.max(np.abs(fast))


def test_apply_op_evaluator_matches_grid_values():
    s = describe("sin(x1)*jb(xi)", 1)
    v = apply_op(s, gaussian(G64))
    assert np.max(np.abs(v([G64.nodes]) - v.values)) <= 1e-12


def test_apply_op_two_dimensions():
    g = GridSpec(2, 8.0, 16)
    s = describe("sin(x1)*jb(xi) + xi2", dim=2)
    u = _random_field(g, 7)
    a = apply_op(s, u).values.ravel()
    b = dense_matrix(s, g) @ u.values.ravel()
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))


def test_extract_symbol_examples():
    assert np.max(np.abs(extract_symbol(np.eye(64), G64) - 1)) <= 1e-12
    s = describe("jb(xi)", 1)
    tab = extract_symbol(dense_matrix(s, G64), G64)
    assert np.max(np.abs(tab - np.sqrt(1 + G64.freqs ** 2)[None, :])) <= 1e-10 * 16
    t = describe("atan(xi1)", 1)
    prod = extract_symbol(dense_matrix(s, G64) @ dense_matrix(t, G64), G64)
    assert np.max(np.abs(prod - (np.sqrt(1 + G64.freqs ** 2) * np.arctan(G64.freqs))[None, :])) \
        <= 1e-10 * 16


def test_extract_symbol_inverts_dense_matrix_for_x_dependent_symbol():
    s = describe("sin(x1)*jb(xi) + exp(-x1^2)", 1)
    tab = extract_symbol(dense_matrix(s, G64), G64)
    ref = s.sample(G64.points("x"), G64.points("xi"))
    assert np.max(np.abs(tab - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_extract_symbol_from_closure():
    s = describe("cos(x1)*xi1", 1)
    tab = extract_symbol(lambda f: apply_op(s, f, with_evaluator=False), G64)
    ref = s.sample(G64.points("x"), G64.points("xi"))
    assert np.max(np.abs(tab - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_dense_cap():
    with pytest.raises(SizeCapError):
        dense_matrix(describe("1"), GridSpec(1, 16.0, 8192))


def test_operator_norms():
    assert operator_norm(describe("1"), G64).value == pytest.approx(1.0, abs=1e-10)
    est = operator_norm(describe("1"), G64, p=3.0)
    assert est.lower_bound and est.value == pytest.approx(1.0, abs=1e-12)
    s = describe("2 + cos(atan(xi1))", 1)
    assert operator_norm(s, G64).value == pytest.approx(
        np.max(np.abs(2 + np.cos(np.arctan(G64.freqs)))), rel=1e-9)
    sin_norm = operator_norm(describe("sin(x1)"), G64).value
    assert abs(sin_norm - 1) <= 1e-3 and sin_norm <= 1 + 1e-12


def test_operator_norm_is_seeded():
    s = describe("sin(x1)*jb(xi)^(-1)", 1)
    assert operator_norm(s, G64, p=1.5, seed=3).value == operator_norm(s, G64, p=1.5, seed=3).value


@given(st.integers(0, 2 ** 16), st.complex_numbers(max_magnitude=10, allow_nan=False,
                                                   allow_infinity=False))
def test_apply_op_is_linear(seed, c):
    s = describe("sin(x1)*jb(xi) + xi1", 1)
    u, v = _random_field(G64, seed), _random_field(G64, seed + 1)
    lhs = apply_op(s, u + v * c, with_evaluator=False).values
    rhs = apply_op(s, u, with_evaluator=False).values + c * apply_op(s, v, with_evaluator=False).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(lhs)))


def test_apply_op_is_deterministic():
    s = describe("sin(x1)*jb(xi)", 1)
    u = _random_field(G256, 8)
    assert np.array_equal(apply_op(s, u).values, apply_op(s, u).values)


def test_inner_product_convention():
    u = gaussian(G256)
    assert inner(u, u).real == pytest.approx(math.sqrt(math.pi), rel=1e-12)


# field files -------------------------------------------------------------

def test_field_binary_round_trip(tmp_path):
    u = _random_field(GridSpec(2, 4.0, 8), 9)
    p = fieldio.save_field(u, tmp_path / "u.field")
    back = fieldio.load_field(p)
    assert np.array_equal(back.values, u.values) and back.grid == u.grid
    data = p.read_bytes()
    assert data[:8] == b"PSIDOFLD" and len(data) == 32 + 16 * 64


def test_field_binary_layout_is_interleaved_little_endian():
    u = Field(np.array([1 + 2j, 3 - 4j]), GridSpec(1, 1.0, 2))
    payload = fieldio.to_bytes(u)[32:]
    assert np.array_equal(np.frombuffer(payload, "<f8"), [1, 2, 3, -4])


def test_field_binary_rejects_corruption():
    data = fieldio.to_bytes(gaussian(G64))
    with pytest.raises(ValueError):
        fieldio.from_bytes(b"XXXXXXXX" + data[8:])
    with pytest.raises(ValueError):
        fieldio.from_bytes(data[:-3])


def test_field_json_round_trip():
    u = _random_field(GridSpec(1, 2.0, 8), 10)
    back = fieldio.from_json(fieldio.to_json(u))
    assert np.array_equal(back.values, u.values)

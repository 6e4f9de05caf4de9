import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patchlab.fields import LineField, PeriodicField, bump, bump_prime
from patchlab.hilbert import (IdentityViolation, RecursionDepthError, TContext, commutation_residual,
                              constant, cotlar_residual, diff_quotient, diff_quotient_torus,
                              dv_of_PiQ_check, hilbert_line, hilbert_line_at, hilbert_line_nodes,
                              hilbert_torus, hilbert_torus_quadrature, op_A, op_HT_recursion, op_T,
                              product_formula_Hfg, product_formula_residual)
from patchlab.hilbert.twopoint import q_product

L = 3.0


def grid(M, L=L):
    return -L + 2 * L / M * np.arange(M)


def bump_field(M, c=0.0, r=1.0, k=0.0, L=L):
    x = grid(M, L)
    d = -k * np.sin(k * x) * bump(x, c, r) + np.cos(k * x) * bump_prime(x, c, r)
    return LineField(np.cos(k * x) * bump(x, c, r), L, deriv=d)


def band_limited(rng, N, kmax):
    k = np.fft.fftfreq(N, 1 / N)
    c = rng.normal(size=N) + 1j * rng.normal(size=N)
    c[np.abs(k) > kmax] = 0
    return PeriodicField(np.fft.ifft(c).real * N / kmax)


# --- torus ---------------------------------------------------------------------

def test_torus_examples():
    N = 64
    xi = 2 * np.pi * np.arange(N) / N
    assert np.allclose(hilbert_torus(PeriodicField(np.cos(xi))).samples, np.sin(xi), atol=1e-14)
    assert np.allclose(hilbert_torus(PeriodicField(np.ones(N))).samples, 0, atol=1e-15)
    f = PeriodicField(np.cos(3 * xi) + np.sin(5 * xi))
    assert np.allclose(hilbert_torus(f).samples, np.sin(3 * xi) - np.cos(5 * xi), atol=1e-13)


def test_torus_isometry_and_antisymmetry(rng):
    for _ in range(10):
        f = band_limited(rng, 128, 40)
        g = band_limited(rng, 128, 40)
        f0 = f.samples - f.mean()
        Hf = hilbert_torus(f).samples
        assert np.linalg.norm(Hf) == pytest.approx(np.linalg.norm(f0), rel=1e-12)
        Hg = hilbert_torus(g).samples
        assert np.dot(f.samples, Hg) == pytest.approx(-np.dot(Hf, g.samples), abs=1e-10 * np.linalg.norm(f0) * np.linalg.norm(g.samples))


def test_torus_quadrature_matches_spectral(rng):
    N = 512
    h = 2 * np.pi / N
    for _ in range(20):
        f = band_limited(rng, N, 24)
        quad = hilbert_torus_quadrature(f)
        spec = hilbert_torus(f)(f.xi + h / 2)
        assert np.max(np.abs(quad - spec)) < 1e-3


def test_torus_quadrature_cos():
    errs = []
    for N in (32, 64, 128):
        xi = 2 * np.pi * np.arange(N) / N
        quad = hilbert_torus_quadrature(PeriodicField(np.cos(xi)))
        errs.append(np.max(np.abs(quad - np.sin(xi + np.pi / N))))
    # the staggered rule is exact on low modes, well inside the O(N^-2) allowance
    assert all(e < 1e-12 for e in errs)
    assert np.max(np.abs(hilbert_torus_quadrature(PeriodicField(np.zeros(16))))) == 0.0


def test_torus_commutation(rng):
    f = band_limited(rng, 128, 12)
    assert commutation_residual(f, rng.uniform(0, 2 * np.pi, 40)) < 1e-8


def test_torus_quotient_diagonal():
    N = 64
    xi = 2 * np.pi * np.arange(N) / N
    f = PeriodicField(np.sin(2 * xi))
    assert diff_quotient_torus(f, 0.7, 0.7) == pytest.approx(2 * np.cos(1.4), abs=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=25, deadline=None)
def test_torus_linearity(a, b):
    N = 64
    xi = 2 * np.pi * np.arange(N) / N
    f, g = np.cos(2 * xi) + xi * 0, np.sin(5 * xi) * np.cos(xi)
    lhs = hilbert_torus(PeriodicField(a * f + b * g)).samples
    rhs = a * hilbert_torus(PeriodicField(f)).samples + b * hilbert_torus(PeriodicField(g)).samples
    assert np.allclose(lhs, rhs, atol=1e-12)


# --- line ----------------------------------------------------------------------

def test_line_zero_and_even():
    M = 512
    assert np.all(hilbert_line(LineField(np.zeros(M), L)).samples == 0)
    H = hilbert_line(bump_field(M))
    # x = 0 sits at index M on the doubled grid
    assert abs(H.samples[M]) < 1e-14


def test_line_semicircle_value():
    # finite Hilbert transform of sqrt(1 - y^2) is x on [-1, 1]
    M = 4096
    x = grid(M, 2.0)
    f = LineField(np.sqrt(np.clip(1 - x ** 2, 0, None)), 2.0)
    H = hilbert_line(f)
    i = int(np.argmin(np.abs(H.x - 0.5)))
    assert H.samples[i] == pytest.approx(0.5, abs=2e-3)


def test_line_gaussian_oracle():
    # H[exp(-x^2)] = (2/sqrt(pi)) Dawson(x)
    from scipy.special import dawsn
    M = 1024
    Lg = 8.0
    x = grid(M, Lg)
    f = LineField(np.exp(-x ** 2) * (np.abs(x) < 7.5), Lg)
    H = hilbert_line_nodes(f)
    xs = np.concatenate([x, [Lg]])
    m = np.abs(xs) < 4
    assert np.max(np.abs(H[m] - 2 / np.sqrt(np.pi) * dawsn(xs[m]))) < 1e-6


def test_line_decay_bound():
    M = 1024
    f = bump_field(M, r=0.5)
    c = np.sum(np.abs(f.samples)) * f.dx / np.pi
    R = f.support_radius()
    for x in (2 * R + 0.1, 3.05, 10.0, 100.0):
        val = abs(float(hilbert_line_at(f, np.array([x]))[0]))
        assert val * (x - R) <= c + 1e-9


def test_line_antisymmetry():
    M = 1024
    f, g = bump_field(M, 0.2, 0.8, k=2.0), bump_field(M, -0.3, 1.0, k=1.0)
    Hf, Hg = hilbert_line_nodes(f)[:-1], hilbert_line_nodes(g)[:-1]
    assert np.dot(f.samples, Hg) == pytest.approx(-np.dot(Hf, g.samples), abs=1e-6)


# --- Cotlar and the product formula ----------------------------------------------

def test_cotlar_zero_g():
    M = 512
    f = bump_field(M)
    assert cotlar_residual(f, LineField(np.zeros(M), L)).residual < 1e-14


def test_cotlar_bumps_refine():
    res = [cotlar_residual(bump_field(M, 0.1, 0.9, 1.0), bump_field(M, -0.2, 1.1, 2.0)).residual
           for M in (1024, 2048)]
    assert res[1] < 1e-4
    assert res[1] < res[0]


def test_product_formula_symmetric_and_zero():
    M = 512
    f, g = bump_field(M, 0.1, 0.9, 1.0), bump_field(M, -0.2, 1.1, 2.0)
    a = product_formula_Hfg(f, g).samples
    b = product_formula_Hfg(g, f).samples
    assert np.allclose(a, b, atol=1e-13)
    assert np.max(np.abs(product_formula_Hfg(f, LineField(np.zeros(M), L)).samples)) < 1e-14


def test_product_formula_against_direct():
    M = 2048
    f, g = bump_field(M, 0.1, 0.9, 1.0), bump_field(M, -0.2, 1.1, 2.0)
    assert product_formula_residual(f, g) < 1e-4


# --- two-point fields and A[f, g] --------------------------------------------------

def test_diff_quotient_examples():
    M = 64
    x = grid(M)
    q = diff_quotient(LineField(x ** 2, L, deriv=2 * x))
    i, j = int(np.argmin(np.abs(x - 1.5))), int(np.argmin(np.abs(x + 0.75)))
    assert q.nodes(i, j) == pytest.approx(x[i] + x[j], rel=1e-12)
    assert q.nodes(i, i) == pytest.approx(2 * x[i], rel=1e-12)
    lin = diff_quotient(LineField(x.copy(), L, deriv=np.ones(M)))
    assert lin.nodes(5, 9) == pytest.approx(1.0, rel=1e-12)
    assert lin.nodes(7, 7) == 1.0


def test_op_A_constant_g_is_hilbert():
    M = 1024
    f = bump_field(M, 0.1, 0.9, 1.0)
    A = op_A(f, constant(1.0, f))
    assert np.max(np.abs(A.value.samples - hilbert_line_nodes(f)[:-1])[M // 8: -M // 8]) < 1e-6


def test_op_A_dual_path():
    M = 1024
    f = bump_field(M, 0.1, 0.9, 1.0)
    A = op_A(f, diff_quotient(f))
    assert A.residual < 1e-4


def test_op_A_zero_f():
    M = 256
    z = LineField(np.zeros(M), L)
    A = op_A(z, diff_quotient(bump_field(M)))
    assert np.max(np.abs(A.value.samples)) == 0.0


def test_op_A_violation_raises():
    M = 256
    f = bump_field(M, 0.0, 0.3, 6.0)  # badly under-resolved
    with pytest.raises(IdentityViolation):
        op_A(f, diff_quotient(f), tol=1e-12)


# --- T operators ---------------------------------------------------------------------

def test_T_with_zero_power_is_pi_H_of_derivative():
    M = 1024
    f = bump_field(M, 0.1, 0.9, 1.0)
    T = op_T(1, (0,), [f]).samples
    H = np.pi * hilbert_line_nodes(f.derivative())[:-1]
    assert np.max(np.abs(T - H)[M // 8: -M // 8]) < 1e-6


def test_T1_one_matches_op_A():
    M = 1024
    f = bump_field(M, 0.1, 0.9, 1.0)
    T = op_T(1, (1,), [f]).samples
    # op_A's direct path is the independent route to the same integral
    A = op_A(f.derivative(), diff_quotient(f)).other.samples
    assert np.max(np.abs(T - np.pi * A)[M // 8: -M // 8]) < 1e-6


def test_T0_rejects_zero_powers():
    f = bump_field(256)
    with pytest.raises(ValueError):
        op_T(0, (0,), [f])


def test_HT_j0_is_minus_pi_derivative():
    M = 1024
    f = bump_field(M, 0.1, 0.9, 1.0)
    r = op_HT_recursion(0, (1,), [f])
    assert r.residual < 1e-3
    fp = np.pi * f.derivative().samples
    # H H = -1 holds on the line only up to the truncated tail of the outer transform
    assert np.max(np.abs(r.value.samples + fp)[M // 8: -M // 8]) < 5e-3


def test_HT_two_component_recursion():
    M = 1024
    f1, f2 = bump_field(M, 0.1, 0.9, 1.0), bump_field(M, -0.2, 1.2, 0.5)
    r = op_HT_recursion(1, (1, 1), [f1, f2])
    assert r.residual < 1e-2


def test_HT_printed_convention_disagrees():
    M = 1024
    f = bump_field(M, 0.1, 0.9, 1.0)
    good = op_HT_recursion(1, (1,), [f]).residual
    bad = op_HT_recursion(1, (1,), [f], convention="printed").residual
    assert bad > 100 * good


def test_HT_zero_field():
    M = 256
    z = LineField(np.zeros(M), L)
    assert np.max(np.abs(op_HT_recursion(1, (1,), [z]).value.samples)) == 0.0


def test_HT_depth_error():
    f = bump_field(256)
    with pytest.raises(RecursionDepthError):
        op_HT_recursion(0, (3,), [f], max_depth=2)


def test_context_rejects_unknown_convention():
    with pytest.raises(ValueError):
        TContext([bump_field(64)], convention="other")


def test_q_product_diagonal():
    M = 128
    f = bump_field(M, 0.0, 1.0, 1.0)
    tp = q_product([f, f], (2, 1))
    d = f.derivative().samples
    assert np.allclose(tp.diag()[:-1], d ** 3, atol=1e-14)


# --- product-of-quotients identity -----------------------------------------------------

def test_dv_of_PiQ_quadratic_exact():
    pairs = np.array([[0.3, -0.2], [1.5, 0.4], [-2.0, 1.0]])
    r = dv_of_PiQ_check((1,), [(lambda x: x ** 2, lambda x: 2 * x)], pairs)
    assert r < 1e-12


def test_dv_of_PiQ_second_order(rng):
    funcs = [(np.sin, np.cos), (lambda x: np.cos(2 * x), lambda x: -2 * np.sin(2 * x))]
    y = rng.uniform(-2, 2, 1000)
    z = y + rng.choice([-1, 1], 1000) * rng.uniform(0.2, 2, 1000)
    pairs = np.stack([y, z], axis=1)
    r1 = dv_of_PiQ_check((2, 1), funcs, pairs, h=1e-2)
    r2 = dv_of_PiQ_check((2, 1), funcs, pairs, h=5e-3)
    assert r2 < 1e-3
    assert r1 / r2 == pytest.approx(4.0, rel=0.1)


def test_dv_of_PiQ_rejects_diagonal():
    with pytest.raises(ValueError):
        dv_of_PiQ_check((1,), [(np.sin, np.cos)], [[0.5, 0.5]])

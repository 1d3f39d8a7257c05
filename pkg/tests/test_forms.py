import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosymlab import forms as F

TWO_PI = 2.0 * math.pi


def t4():
    return F.ChartManifold(4, (True,) * 4, name="T4")


def standard_omega4():
    return F.wedge(F.coordinate_form(4, 0), F.coordinate_form(4, 1)) \
        + F.wedge(F.coordinate_form(4, 2), F.coordinate_form(4, 3))


def frame_vectors(chart, coords):
    p = chart.point(coords)
    return [F.TangentVector(p, e) for e in np.eye(chart.dim)]


# -- chart / point / vector basics ------------------------------------------------


def test_point_reduces_periodic_coordinates():
    chart = t4()
    p = chart.point([TWO_PI + 0.5, -1.0, 0.0, 3.0])
    assert np.allclose(p.coords, [0.5, TWO_PI - 1.0, 0.0, 3.0])


def test_point_dimension_mismatch():
    with pytest.raises(ValueError):
        t4().point([1.0, 2.0])


def test_tangent_vector_length_check():
    p = t4().point([0, 0, 0, 0])
    with pytest.raises(ValueError):
        F.TangentVector(p, [1.0, 2.0])


def test_chart_validation():
    with pytest.raises(ValueError):
        F.ChartManifold(0)
    with pytest.raises(ValueError):
        F.ChartManifold(2, (True, True), (1.0, -1.0))


def test_wrapped_delta():
    chart = F.ChartManifold(2, (True, False), (1.0, 1.0))
    d = chart.wrapped_delta(np.array([0.95, 2.0]), np.array([0.05, 0.0]))
    assert np.allclose(d, [-0.1, 2.0])


# -- evaluation --------------------------------------------------------------------


def test_evaluate_coordinate_basis():
    ex, ey, ez, eth = frame_vectors(t4(), [0.3, 1.0, 2.0, 0.1])
    dxdy = F.wedge(F.coordinate_form(4, 0), F.coordinate_form(4, 1))
    assert F.evaluate(dxdy, [ex, ey]) == 1.0
    assert F.evaluate(dxdy, [ex, ex]) == 0.0
    assert F.evaluate(standard_omega4(), [ez, eth]) == 1.0


def test_evaluate_arity_and_dimension_errors():
    ex, ey, *_ = frame_vectors(t4(), [0, 0, 0, 0])
    dxdy = F.wedge(F.coordinate_form(4, 0), F.coordinate_form(4, 1))
    with pytest.raises(ValueError):
        F.evaluate(dxdy, [ex])
    d3 = F.coordinate_form(3, 0)
    with pytest.raises(ValueError):
        F.evaluate(d3, [ex])


def test_evaluate_requires_shared_base():
    chart = t4()
    a = F.TangentVector(chart.point([0, 0, 0, 0]), [1, 0, 0, 0])
    b = F.TangentVector(chart.point([1, 0, 0, 0]), [0, 1, 0, 0])
    with pytest.raises(ValueError):
        F.evaluate(standard_omega4(), [a, b])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1_000_000))
def test_antisymmetry_exact_sign_flip(seed):
    rng = np.random.default_rng(seed)
    omega = standard_omega4()
    x = rng.normal(size=4)
    u, v = rng.normal(size=4), rng.normal(size=4)
    plus = F.evaluate_at(omega, x, u, v)
    minus = F.evaluate_at(omega, x, v, u)
    assert plus == -minus


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1_000_000), st.floats(-3, 3), st.floats(-3, 3))
def test_multilinearity(seed, a, b):
    rng = np.random.default_rng(seed)
    omega = standard_omega4()
    x = rng.normal(size=4)
    u, v, w = rng.normal(size=(3, 4))
    lhs = F.evaluate_at(omega, x, a * u + b * v, w)
    rhs = a * F.evaluate_at(omega, x, u, w) + b * F.evaluate_at(omega, x, v, w)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs), abs(rhs))


# -- wedge -------------------------------------------------------------------------


def test_wedge_standard_two_form():
    dxdy = F.wedge(F.coordinate_form(4, 0), F.coordinate_form(4, 1))
    # lexicographic pair basis: {01, 02, 03, 12, 13, 23}
    assert np.allclose(dxdy.coeffs(np.zeros(4)), [1, 0, 0, 0, 0, 0])


def test_wedge_self_vanishes():
    dx = F.coordinate_form(4, 0)
    assert np.allclose(F.wedge(dx, dx).coeffs(np.zeros(4)), 0.0)


def test_wedge_top_degree_value():
    dxdy = F.wedge(F.coordinate_form(4, 0), F.coordinate_form(4, 1))
    dzdth = F.wedge(F.coordinate_form(4, 2), F.coordinate_form(4, 3))
    top = F.wedge(dxdy, dzdth)
    assert F.evaluate_at(top, np.zeros(4), *np.eye(4)) == 1.0


def test_wedge_graded_commutativity():
    rng = np.random.default_rng(5)
    a = F.KForm(1, 4, lambda x: np.stack([x[..., 1], np.cos(x[..., 2]),
                                          x[..., 0] ** 2, np.sin(x[..., 3])], axis=-1))
    b = F.KForm(2, 4, lambda x: np.stack([x[..., 0], x[..., 3], np.ones_like(x[..., 0]),
                                          x[..., 1] * x[..., 2], x[..., 2],
                                          np.cos(x[..., 0])], axis=-1))
    ab, ba = F.wedge(a, b), F.wedge(b, a)
    xs = rng.normal(size=(8, 4))
    sign = (-1.0) ** (a.degree * b.degree)
    assert np.allclose(ab.coeffs(xs), sign * ba.coeffs(xs), atol=1e-14)


def test_wedge_degree_overflow():
    top = F.wedge(F.wedge(F.coordinate_form(4, 0), F.coordinate_form(4, 1)),
                  F.wedge(F.coordinate_form(4, 2), F.coordinate_form(4, 3)))
    with pytest.raises(ValueError):
        F.wedge(top, F.coordinate_form(4, 0))


# -- interior product --------------------------------------------------------------


def test_interior_basis_examples():
    dxdy = F.wedge(F.coordinate_form(4, 0), F.coordinate_form(4, 1))
    ex = lambda x: np.broadcast_to(np.eye(4)[0], np.shape(x))
    assert np.allclose(F.covector_values(F.interior(ex, dxdy), np.zeros(4)), [0, 1, 0, 0])

    dqdp = F.wedge(F.coordinate_form(2, 0), F.coordinate_form(2, 1))
    eq = lambda x: np.broadcast_to(np.eye(2)[0], np.shape(x))
    assert np.allclose(F.covector_values(F.interior(eq, dqdp), np.zeros(2)), [0, 1])

    neg_th = lambda x: np.broadcast_to(-np.eye(4)[3], np.shape(x))
    res = F.interior(neg_th, standard_omega4())
    assert np.allclose(F.covector_values(res, np.zeros(4)), [0, 0, 1, 0])


def test_interior_squares_to_zero():
    rng = np.random.default_rng(2)
    X = lambda x: np.stack([x[..., 1], -x[..., 0], np.cos(x[..., 3]),
                            np.ones_like(x[..., 0])], axis=-1)
    top = F.power(standard_omega4(), 2)
    once = F.interior(X, top)
    twice = F.interior(X, once)
    assert np.max(np.abs(twice.coeffs(rng.normal(size=(16, 4))))) < 1e-14


def test_interior_degree_zero_rejected():
    f = F.constant_form(4, 0, [1.0])
    with pytest.raises(ValueError):
        F.interior(lambda x: np.zeros(np.shape(x)), f)


# -- exterior derivative ------------------------------------------------------------


def test_d_of_sine_angle():
    f = F.function_form(4, lambda x: np.sin(x[..., 3]))
    df = F.exterior_derivative(f)
    x = np.array([0.0, 0.0, 0.0, 0.7])
    assert np.allclose(F.covector_values(df, x), [0, 0, 0, np.cos(0.7)], atol=1e-10)


def test_d_of_constant_form_is_zero():
    df = F.exterior_derivative(F.constant_form(4, 1, [1.0, 2.0, 0.0, -1.0]))
    assert np.max(np.abs(df.coeffs(np.random.default_rng(0).normal(size=(8, 4))))) == 0.0


def test_d_of_p_dq():
    # chart (q, p); the one-form p dq differentiates to dp ^ dq = -(dq ^ dp)
    pdq = F.KForm(1, 2, lambda x: np.stack([x[..., 1], np.zeros_like(x[..., 1])], axis=-1))
    d = F.exterior_derivative(pdq)
    assert np.allclose(d.coeffs(np.array([0.4, 0.9])), [-1.0], atol=1e-9)


def test_d_top_degree_rejected():
    top = F.power(standard_omega4(), 2)
    with pytest.raises(ValueError):
        F.exterior_derivative(top)


def test_d_squared_vanishes_fd_path():
    f = F.KForm(1, 3, lambda x: np.stack([np.sin(x[..., 1]), x[..., 0] * x[..., 2],
                                          np.cos(x[..., 0] + x[..., 1])], axis=-1))
    ddf = F.exterior_derivative(F.exterior_derivative(f))
    samples = np.random.default_rng(1).normal(size=(16, 3))
    assert np.max(np.abs(ddf.coeffs(samples))) < 1e-6


def test_d_squared_vanishes_analytic_path():
    f = F.function_form(3, lambda x: np.sin(x[..., 0]) * x[..., 1],
                        gradient=lambda x: np.stack([np.cos(x[..., 0]) * x[..., 1],
                                                     np.sin(x[..., 0]),
                                                     np.zeros_like(x[..., 0])], axis=-1))
    ddf = F.exterior_derivative(F.exterior_derivative(f))
    samples = np.random.default_rng(1).normal(size=(16, 3))
    assert np.max(np.abs(ddf.coeffs(samples))) == 0.0


def test_leibniz_rule_sampled():
    a = F.KForm(1, 3, lambda x: np.stack([np.sin(x[..., 1]), x[..., 2],
                                          np.zeros_like(x[..., 0])], axis=-1))
    b = F.KForm(1, 3, lambda x: np.stack([x[..., 0], np.ones_like(x[..., 0]),
                                          np.cos(x[..., 0])], axis=-1))
    lhs = F.exterior_derivative(F.wedge(a, b))
    rhs = F.wedge(F.exterior_derivative(a), b) - F.wedge(a, F.exterior_derivative(b))
    samples = np.random.default_rng(3).normal(size=(12, 3))
    assert np.max(np.abs(lhs.coeffs(samples) - rhs.coeffs(samples))) < 1e-6


# -- pullback -----------------------------------------------------------------------


def test_pullback_along_projection_lifts_angle_form():
    proj = F.ChartMap.coordinate_projection(2, [1])
    dth = F.coordinate_form(1, 0)
    lifted = F.pullback(proj, dth)
    assert np.allclose(F.covector_values(lifted, np.array([0.4, 1.0])), [0, 1])


def test_pullback_identity():
    omega = standard_omega4()
    back = F.pullback(F.ChartMap.identity(4), omega)
    xs = np.random.default_rng(0).normal(size=(8, 4))
    assert np.allclose(back.coeffs(xs), omega.coeffs(xs))


def test_pullback_degree_two_circle_map():
    doubling = F.ChartMap(1, 1, lambda x: 2.0 * np.asarray(x, dtype=float),
                          lambda x: np.full(np.shape(x)[:-1] + (1, 1), 2.0))
    pulled = F.pullback(doubling, F.coordinate_form(1, 0))
    assert np.allclose(pulled.coeffs(np.array([0.3])), [2.0])


def test_pullback_commutes_with_wedge():
    rng = np.random.default_rng(4)

    def val(x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.sin(x[..., 0]) + x[..., 1], x[..., 2] ** 2,
                         x[..., 0] * x[..., 1]], axis=-1)

    def jac(x):
        x = np.asarray(x, dtype=float)
        z = np.zeros_like(x[..., 0])
        one = np.ones_like(z)
        return np.stack([
            np.stack([np.cos(x[..., 0]), one, z], axis=-1),
            np.stack([z, z, 2 * x[..., 2]], axis=-1),
            np.stack([x[..., 1], x[..., 0], z], axis=-1)], axis=-2)

    phi = F.ChartMap(3, 3, val, jac)
    a = F.KForm(1, 3, lambda x: np.stack([x[..., 1], np.cos(x[..., 2]), x[..., 0] ** 2], axis=-1))
    b = F.KForm(1, 3, lambda x: np.stack([np.ones_like(x[..., 0]), x[..., 0],
                                          np.sin(x[..., 1])], axis=-1))
    lhs = F.pullback(phi, F.wedge(a, b))
    rhs = F.wedge(F.pullback(phi, a), F.pullback(phi, b))
    xs = rng.normal(size=(8, 3))
    assert np.max(np.abs(lhs.coeffs(xs) - rhs.coeffs(xs))) < 1e-12


def test_pullback_dimension_mismatch():
    proj = F.ChartMap.coordinate_projection(4, [0, 1])
    with pytest.raises(ValueError):
        F.pullback(proj, F.coordinate_form(3, 0))


# -- power --------------------------------------------------------------------------


def test_power_of_standard_form_counts_pairs():
    sq = F.power(standard_omega4(), 2)
    assert F.evaluate_at(sq, np.zeros(4), *np.eye(4)) == pytest.approx(2.0)


def test_power_zero_is_unit_function():
    one = F.power(standard_omega4(), 0)
    assert one.degree == 0
    assert np.allclose(one.coeffs(np.random.default_rng(0).normal(size=(5, 4))), 1.0)


def test_power_rank_deficient_square_vanishes():
    dxdy = F.wedge(F.coordinate_form(4, 0), F.coordinate_form(4, 1))
    sq = F.power(dxdy, 2)
    assert np.allclose(sq.coeffs(np.zeros(4)), 0.0)


def test_power_overflow_rejected():
    with pytest.raises(ValueError):
        F.power(standard_omega4(), 3)
    with pytest.raises(ValueError):
        F.power(standard_omega4(), -1)


# -- algebraic identities across operations ------------------------------------------


def _generic_one_form():
    return F.KForm(1, 4, lambda x: np.stack([x[..., 1], np.cos(x[..., 2]),
                                             x[..., 0] ** 2, np.sin(x[..., 3])], axis=-1))


def _generic_two_form():
    return F.KForm(2, 4, lambda x: np.stack([x[..., 0], x[..., 3], np.ones_like(x[..., 0]),
                                             x[..., 1] * x[..., 2], x[..., 2],
                                             np.cos(x[..., 0])], axis=-1))


def test_interior_is_an_antiderivation():
    # iota_X(a ^ b) = (iota_X a) b - a ^ (iota_X b) for a of degree one
    a, b = _generic_one_form(), _generic_two_form()
    X = lambda x: np.stack([x[..., 1], -x[..., 0], np.cos(x[..., 3]),
                            np.ones_like(x[..., 0])], axis=-1)
    lhs = F.interior(X, F.wedge(a, b))
    ia = F.interior(X, a)
    scaled_b = F.KForm(2, 4, lambda x: ia.coeffs(x) * b.coeffs(x))
    rhs = scaled_b - F.wedge(a, F.interior(X, b))
    xs = np.random.default_rng(42).normal(size=(16, 4))
    assert np.max(np.abs(lhs.coeffs(xs) - rhs.coeffs(xs))) < 1e-13


def test_wedge_associativity():
    a, b = _generic_one_form(), _generic_two_form()
    c = F.KForm(1, 4, lambda x: np.stack([np.sin(x[..., 0]), x[..., 2],
                                          np.ones_like(x[..., 0]), x[..., 1]], axis=-1))
    xs = np.random.default_rng(43).normal(size=(16, 4))
    lhs = F.wedge(F.wedge(a, b), c)
    rhs = F.wedge(a, F.wedge(b, c))
    assert np.max(np.abs(lhs.coeffs(xs) - rhs.coeffs(xs))) < 1e-13


def test_pullback_composition():
    rng = np.random.default_rng(44)

    def affine(A, c):
        A, c = np.asarray(A, float), np.asarray(c, float)
        return F.ChartMap(4, 4, lambda x: np.asarray(x, float) @ A.T + c,
                          lambda x: np.broadcast_to(A, np.shape(x)[:-1] + A.shape),
                          constant_jacobian=True)

    A1, A2 = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    c1, c2 = rng.normal(size=4), rng.normal(size=4)
    phi, psi = affine(A1, c1), affine(A2, c2)
    composed = affine(A2 @ A1, A2 @ c1 + c2)
    b = _generic_two_form()
    xs = rng.normal(size=(16, 4))
    lhs = F.pullback(phi, F.pullback(psi, b))
    rhs = F.pullback(composed, b)
    assert np.max(np.abs(lhs.coeffs(xs) - rhs.coeffs(xs))) < 1e-12


# -- periodic invariance -------------------------------------------------------------


def test_catalog_coefficients_respect_periods(rng):
    chart = t4()
    omega = standard_omega4()
    xs = chart.sample(np.random.default_rng(8), 16)
    shifted = xs + np.array([TWO_PI, 0.0, -TWO_PI, TWO_PI])
    assert np.allclose(omega.coeffs(xs), omega.coeffs(shifted))
    h = F.function_form(4, lambda x: np.sin(x[..., 3]))
    assert np.allclose(h.coeffs(xs), h.coeffs(shifted))


def test_constant_value_propagation():
    omega = standard_omega4()
    assert omega.constant_value is not None
    proj = F.ChartMap.coordinate_projection(5, [0, 1, 2, 3])
    lifted = F.pullback(proj, omega)
    assert lifted.constant_value is not None
    assert F.power(omega, 2).constant_value is not None

import math

import numpy as np
import pytest

from cosymlab import catalog, cosym as C, forms as F, section as S

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def t3_seed():
    return catalog.seed_t3()


@pytest.fixture(scope="module")
def samples3():
    return catalog.torus(3).sample(np.random.default_rng(0), 64)


def neg_dtheta(x):
    return np.broadcast_to(np.array([0.0, 0.0, 0.0, -1.0]), np.shape(x))


# -- verification ---------------------------------------------------------------


def test_verify_standard_t3(t3_seed, samples3):
    rep = C.verify_cosymplectic(t3_seed, samples3)
    assert rep.passed
    assert rep.volume_margin == pytest.approx(1.0)
    assert rep.d_alpha_max == 0.0 and rep.d_beta_max == 0.0


def test_verify_rank_deficient_t5_fails():
    t5 = catalog.torus(5)
    cs = C.CosymplecticStructure(t5, F.coordinate_form(5, 4),
                                 F.wedge(F.coordinate_form(5, 0), F.coordinate_form(5, 1)))
    rep = C.verify_cosymplectic(cs, t5.sample(np.random.default_rng(1), 16))
    assert not rep.passed
    assert rep.volume_margin == pytest.approx(0.0, abs=1e-15)


def test_verify_tilted_alpha_still_passes(samples3):
    # alpha = dz + 0.1 dx stays closed, and the dx part dies against dx ^ dy
    t3 = catalog.torus(3)
    cs = C.CosymplecticStructure(t3, F.coordinate_form(3, 2) + 0.1 * F.coordinate_form(3, 0),
                                 F.wedge(F.coordinate_form(3, 0), F.coordinate_form(3, 1)))
    rep = C.verify_cosymplectic(cs, samples3)
    assert rep.passed
    assert rep.volume_margin == pytest.approx(1.0)


def test_even_dimension_rejected():
    with pytest.raises(ValueError):
        C.CosymplecticStructure(catalog.torus(4), F.coordinate_form(4, 0),
                                F.wedge(F.coordinate_form(4, 0), F.coordinate_form(4, 1)))


def test_verify_needs_samples(t3_seed):
    with pytest.raises(ValueError):
        C.verify_cosymplectic(t3_seed, np.zeros((0, 3)))


# -- induced pair from a transverse field -----------------------------------------


def test_field_to_cosym_standard(t4_system, samples3):
    Z = catalog.product_energy_surface(t4_system)
    cs = C.field_to_cosym(t4_system, Z, neg_dtheta, samples3)
    assert np.allclose(F.covector_values(cs.alpha, samples3), [0, 0, 1])
    assert np.allclose(cs.beta.coeffs(samples3)[..., 0], 1.0)
    assert np.allclose(cs.beta.coeffs(samples3)[..., 1:], 0.0)


def test_field_to_cosym_scales_linearly(t4_system, samples3):
    Z = catalog.product_energy_surface(t4_system)
    doubled = lambda x: 2.0 * neg_dtheta(x)
    cs = C.field_to_cosym(t4_system, Z, doubled, samples3)
    assert np.allclose(F.covector_values(cs.alpha, samples3), [0, 0, 2])
    assert C.verify_cosymplectic(cs, samples3).passed


def test_field_to_cosym_rejects_tangent_field(t4_system, samples3):
    Z = catalog.product_energy_surface(t4_system)
    with pytest.raises(C.TransversalityError):
        C.field_to_cosym(t4_system, Z, t4_system.field, samples3)


def test_field_to_cosym_rejects_non_symplectic_field(t4_system, samples3):
    Z = catalog.product_energy_surface(t4_system)

    def warped(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        out[..., 3] = -(1.0 + 0.5 * np.sin(x[..., 0]))
        return out

    with pytest.raises(ValueError, match="not symplectic"):
        C.field_to_cosym(t4_system, Z, warped, samples3)


# -- field from a pair --------------------------------------------------------------


def test_cosym_to_field_recovers_transverse_field(t4_system, t3_seed, samples3):
    Z = catalog.product_energy_surface(t4_system)
    rep = C.cosym_to_field(t4_system, Z, t3_seed, samples3)
    assert rep.passed
    assert np.max(np.abs(rep.field_values - np.array([0, 0, 0, -1.0]))) < 1e-10
    assert rep.min_transversality == pytest.approx(1.0)
    assert rep.symplectic_residual < 1e-6


def test_round_trip_both_ways(t4_system, samples3):
    Z = catalog.product_energy_surface(t4_system)
    cs = C.field_to_cosym(t4_system, Z, neg_dtheta, samples3)
    rep = C.cosym_to_field(t4_system, Z, cs, samples3)
    ambient = Z.inclusion().value(samples3)
    assert np.max(np.abs(rep.field_values - neg_dtheta(ambient))) < 1e-8
    cs2 = C.field_to_cosym(t4_system, Z, rep.field, samples3)
    assert np.max(np.abs(F.covector_values(cs2.alpha, samples3)
                         - F.covector_values(cs.alpha, samples3))) < 1e-8
    assert np.max(np.abs(cs2.beta.coeffs(samples3) - cs.beta.coeffs(samples3))) < 1e-8


def test_cosym_to_field_rejects_zero_form(t4_system, samples3):
    Z = catalog.product_energy_surface(t4_system)
    cs = C.CosymplecticStructure(catalog.torus(3), F.zero_form(3, 1),
                                 F.wedge(F.coordinate_form(3, 0), F.coordinate_form(3, 1)))
    with pytest.raises(ValueError, match="vanishes"):
        C.cosym_to_field(t4_system, Z, cs, samples3)


# -- submanifold nondegeneracy -------------------------------------------------------


def test_submanifold_coordinate_torus_passes(t4_system, rng):
    patch = F.ChartMap.coordinate_inclusion(4, [0, 1], {2: 0.0, 3: 0.0})
    rep = C.symplectic_submanifold_test(t4_system, patch,
                                        np.random.default_rng(2).uniform(0, TWO_PI, (32, 2)))
    assert rep.passed and rep.min_abs_det == pytest.approx(1.0)


def test_submanifold_lagrangian_fails(t4_system):
    patch = F.ChartMap.coordinate_inclusion(4, [0, 2], {1: 0.5, 3: 0.0})
    rep = C.symplectic_submanifold_test(t4_system, patch,
                                        np.random.default_rng(3).uniform(0, TWO_PI, (32, 2)))
    assert not rep.passed
    assert rep.min_abs_det == pytest.approx(0.0, abs=1e-15)


def test_submanifold_graph_perturbation(t4_system):
    # numeric determinant scan over a graph-perturbed copy of the leaf
    def value(p):
        p = np.asarray(p, dtype=float)
        u, v = p[..., 0], p[..., 1]
        return np.stack([u, v, 0.2 * np.sin(u + v), 0.1 * np.cos(u)], axis=-1)

    def jacobian(p):
        p = np.asarray(p, dtype=float)
        u, v = p[..., 0], p[..., 1]
        one, zero = np.ones_like(u), np.zeros_like(u)
        du = np.stack([one, zero, 0.2 * np.cos(u + v), -0.1 * np.sin(u)], axis=-1)
        dv = np.stack([zero, one, 0.2 * np.cos(u + v), zero], axis=-1)
        return np.stack([du, dv], axis=-1)

    patch = F.ChartMap(2, 4, value, jacobian)
    rep = C.symplectic_submanifold_test(t4_system, patch,
                                        np.random.default_rng(4).uniform(0, TWO_PI, (64, 2)))
    assert rep.passed
    assert rep.min_abs_det > 0.9


def test_submanifold_odd_patch_rejected(t4_system):
    patch = F.ChartMap.coordinate_inclusion(4, [0], {1: 0.0, 2: 0.0, 3: 0.0})
    with pytest.raises(ValueError):
        C.symplectic_submanifold_test(t4_system, patch, np.zeros((4, 1)))


# -- product construction -------------------------------------------------------------


def test_product_system_matches_construction(t3_seed, t4_system, rng):
    # the lifted form must be the seed area form plus (seed angle form) ^ dtheta,
    # the energy the sine of the circle angle
    xs = t4_system.manifold.sample(np.random.default_rng(5), 32)
    # pair basis on dim 4: {01, 02, 03, 12, 13, 23}
    expected = np.zeros((32, 6))
    expected[:, 0] = 1.0   # dx ^ dy
    expected[:, 5] = 1.0   # dz ^ dtheta
    assert np.allclose(t4_system.omega.coeffs(xs), expected)
    assert np.allclose(t4_system.energy(xs), np.sin(xs[..., 3]))
    assert t4_system.manifold.periods[3] == pytest.approx(TWO_PI)


def test_product_field_components(t4_system):
    # the flow is cos(theta) times the seed angle direction; all other
    # components vanish to solver accuracy
    rng = np.random.default_rng(6)
    xs = t4_system.manifold.sample(rng, 16)
    X = t4_system.field(xs)
    expected = np.zeros_like(X)
    expected[:, 2] = np.cos(xs[:, 3])
    assert np.max(np.abs(X - expected)) < 1e-10


def test_product_rejects_degenerate_seed():
    # a circle cannot carry the pair at all: the two-form degree exceeds the
    # dimension, so the degenerate case is unrepresentable by construction
    s1 = catalog.torus(1)
    with pytest.raises(ValueError):
        C.CosymplecticStructure(s1, F.coordinate_form(1, 0), F.KForm(2, 1, lambda x: x))


def test_product_t5_passes_structure_checks(t6_system):
    rng = np.random.default_rng(7)
    report = t6_system.validate(t6_system.manifold.sample(rng, 32))
    assert report["omega_rcond_min"] > 0.5
    # zero level passes globality on its leaf
    sec = catalog.product_leaf_section(t6_system)
    samples = catalog.sample_product_leaf(t6_system, rng, 50)
    assert S.verify_global(t6_system, sec, samples, t_max=50.0).passed


def test_product_rejects_unverified_seed():
    t3 = catalog.torus(3)
    cs = C.CosymplecticStructure(t3, F.coordinate_form(3, 2), F.zero_form(3, 2))
    with pytest.raises(ValueError, match="fails verification"):
        C.build_product_system(cs)


# -- collar ---------------------------------------------------------------------------


def test_collar_standard_form(t3_seed):
    col = C.build_collar_form(t3_seed)
    assert col.epsilon == pytest.approx(0.1 * TWO_PI)
    assert not col.chart.periodic[3]
    xs = np.zeros((1, 4))
    expected = np.zeros(6)
    expected[0] = 1.0   # dx ^ dy
    expected[5] = 1.0   # dz ^ dt
    assert np.allclose(col.form.coeffs(xs), expected)


def test_collar_pairs_normal_direction_with_alpha(t3_seed):
    # inserting the collar direction returns the angle form, up to the sign
    # of the wedge ordering (alpha ^ dt evaluated on (e_t, v) is -alpha(v))
    col = C.build_collar_form(t3_seed)
    e_t = lambda x: np.broadcast_to(np.eye(4)[3], np.shape(x))
    paired = F.interior(e_t, col.form)
    assert np.allclose(F.covector_values(paired, np.zeros(4)), [0, 0, -1, 0])


def test_collar_volume_and_restriction(t3_seed, samples3):
    col = C.build_collar_form(t3_seed)
    assert F.evaluate_at(F.power(col.form, 2), np.zeros(4), *np.eye(4)) == pytest.approx(2.0)
    # restriction to the zero slice agrees with beta on coordinate frames
    incl = F.ChartMap.coordinate_inclusion(4, [0, 1, 2], {3: 0.0})
    restricted = F.pullback(incl, col.form)
    assert np.allclose(restricted.coeffs(samples3), t3_seed.beta.coeffs(samples3))


def test_collar_closed_and_nondegenerate_inside(t3_seed):
    col = C.build_collar_form(t3_seed)
    rng = np.random.default_rng(13)
    collar_pts = np.concatenate(
        [t3_seed.manifold.sample(rng, 32),
         rng.uniform(-col.epsilon, col.epsilon, (32, 1))], axis=-1)
    d_form = F.exterior_derivative(col.form)
    assert np.max(np.abs(d_form.coeffs(collar_pts))) < 1e-6
    M = F.two_form_matrix(col.form, collar_pts)
    svals = np.linalg.svd(M, compute_uv=False)
    assert float(np.min(svals[..., -1] / svals[..., 0])) > 1e-10


# -- extension to a global energy function --------------------------------------------


def test_extension_recovers_momentum(r4_system, rng):
    # coordinates (q1, q2, p1, p2); pairing d/dq1 into dp ^ dq gives -dp1,
    # so the primitive is -p1 up to a constant
    X = lambda x: np.broadcast_to(np.eye(4)[0], np.shape(x))
    samples = np.random.default_rng(8).normal(size=(16, 4))
    res = C.extend_to_hamiltonian_field(r4_system, X, samples)
    pts = np.random.default_rng(9).normal(size=(8, 4))
    values = res.h(pts) - res.h(np.zeros(4))
    assert np.max(np.abs(values - (-pts[:, 2]))) < 1e-9
    assert res.max_gradient_error < 1e-6


def test_extension_refuses_nonexact_pairing_on_torus(t4_system):
    # a field pairing to the angle form has a nonzero loop period: no
    # single-valued primitive exists
    def X(x):
        M = F.two_form_matrix(t4_system.omega, np.asarray(x, dtype=float))
        a = np.broadcast_to(np.array([0.0, 0.0, 1.0, 0.0]), np.shape(x))
        return np.linalg.solve(np.swapaxes(M, -1, -2), a[..., None])[..., 0]

    samples = t4_system.manifold.sample(np.random.default_rng(10), 8)
    with pytest.raises(C.PathDependenceError):
        C.extend_to_hamiltonian_field(t4_system, X, samples)


def test_extension_zero_field_gives_constant(r4_system):
    X = lambda x: np.zeros(np.shape(x))
    samples = np.random.default_rng(11).normal(size=(8, 4))
    res = C.extend_to_hamiltonian_field(r4_system, X, samples)
    pts = np.random.default_rng(12).normal(size=(8, 4))
    assert np.max(np.abs(res.h(pts) - res.h(np.zeros(4)))) < 1e-12

import numpy as np
import pytest
from hypothesis import given, settings

from twistorlab import catalog
from twistorlab import frame_algebra as fa
from twistorlab import hopf_cp3 as hc
from strategies import seeds


def random_z(rng):
    return rng.normal(size=4) + 1j * rng.normal(size=4)


def random_sigma_z(rng):
    """A point with 4|z_3|^2 = 4|z_4|^2 = |z|^2, drawn without the contact data."""
    a, b = rng.uniform(0, 2 * np.pi, size=2)
    w = random_z(rng)[:2]
    w *= np.sqrt(0.5) / np.linalg.norm(w)
    scale = rng.normal() + 1j * rng.normal()
    return scale * np.array([w[0], w[1], 0.5 * np.exp(1j * a), 0.5 * np.exp(1j * b)])


def tangent_of_fiber(ce, rng):
    """A unit-sphere tangent at xi inside T_p S^3."""
    v = rng.normal(size=4)
    v -= (v @ ce.p) * ce.p + (v @ ce.xi) * ce.xi
    return v


# --- contact elements -------------------------------------------------------------------


@settings(max_examples=30)
@given(seeds)
def test_contact_element_invariants(seed):
    ce = hc.random_contact_element(np.random.default_rng(seed))
    r = ce.residuals()
    assert r["phi_squared"] <= 1e-12 and r["metric"] <= 1e-12
    assert np.max(np.abs(ce.phi @ ce.p)) <= 1e-12
    assert np.max(np.abs(ce.phi @ ce.xi)) <= 1e-12
    rng = np.random.default_rng(seed + 1)
    v = tangent_of_fiber(ce, rng)
    assert np.allclose(ce.phi @ v, hc.cross(ce.p, ce.xi, v))


def test_contact_element_validation():
    with pytest.raises(ValueError, match="unit vector of R\\^4"):
        hc.ContactElement(np.array([2.0, 0, 0, 0]), np.array([0, 1.0, 0, 0]))
    with pytest.raises(ValueError, match="tangent"):
        hc.ContactElement(np.array([1.0, 0, 0, 0]), np.array([1.0, 0, 0, 0]))


def test_s3_frame_matches_catalog_fields():
    rng = np.random.default_rng(3)
    p = rng.normal(size=4)
    p /= np.linalg.norm(p)
    assert np.allclose(hc.s3_frame(p), catalog.s3_fields(p))


# --- F and the twistor metric ----------------------------------------------------------------


@settings(max_examples=30)
@given(seeds)
def test_f_map_is_a_compatible_complex_structure(seed):
    ce = hc.random_contact_element(np.random.default_rng(seed))
    I = hc.f_map(ce, 0.3)
    assert np.max(np.abs(I @ I + np.eye(4))) <= 1e-12
    assert np.max(np.abs(I.T @ I - np.eye(4))) <= 1e-12
    # I xi = d/dt: column of xi = sum lam_i xi_i is the d/dt slot
    lam = ce.frame_coords
    xi_frame = np.array([lam[0], 0, lam[1], lam[2]])
    assert np.allclose(I @ xi_frame, [0, 1, 0, 0])
    sigma = hc.f_map_bivector(ce)
    assert fa.is_self_dual(sigma) and abs(fa.norm(sigma) - 1) <= 1e-12
    assert np.allclose(fa.sd_coords(sigma), [lam[0], lam[2], -lam[1]])


def test_f_map_of_xi1_is_standard_structure():
    rng = np.random.default_rng(0)
    p = rng.normal(size=4)
    p /= np.linalg.norm(p)
    ce = hc.ContactElement.from_frame_coords(p, [1, 0, 0])
    assert np.array_equal(hc.f_map(ce), catalog.standard_J(exact=False))
    assert np.array_equal(hc.f_map(ce), catalog.s3xs1_hopf().J)


@settings(max_examples=30)
@given(seeds)
def test_twistor_metric_is_g_of_xi(seed):
    rng = np.random.default_rng(seed)
    p = rng.normal(size=4)
    p /= np.linalg.norm(p)
    l1, l2 = rng.normal(size=3), rng.normal(size=3)
    a = hc.ContactElement.from_frame_coords(p, l1 / np.linalg.norm(l1))
    b = hc.ContactElement.from_frame_coords(p, l2 / np.linalg.norm(l2))
    assert hc.twistor_metric(hc.f_map(a), hc.f_map(b)) == pytest.approx(a.xi @ b.xi, abs=1e-12)


def test_orthogonal_iff_xi_orthogonal():
    p = np.array([0.5, 0.5, 0.5, 0.5])
    pairs = [([1, 0, 0], [0, 1, 0], True), ([0, 0, 1], [0, 1, 0], True),
             ([1, 0, 0], [0.6, 0.8, 0], False), ([0, 1, 0], [0, -1, 0], False)]
    for l1, l2, orth in pairs:
        a = hc.ContactElement.from_frame_coords(p, l1)
        b = hc.ContactElement.from_frame_coords(p, l2)
        assert (abs(hc.twistor_metric(hc.f_map(a), hc.f_map(b))) <= 1e-12) == orth
        assert (abs(a.xi @ b.xi) <= 1e-12) == orth


# --- kappa ---------------------------------------------------------------------------------


@settings(max_examples=30)
@given(seeds)
def test_kappa_is_an_oriented_complex_structure(seed):
    ce = hc.random_contact_element(np.random.default_rng(seed))
    J = hc.kappa(ce)
    r = hc.complex_structure_residuals(J)
    assert r["square"] <= 1e-12 and r["orthogonal"] <= 1e-12
    assert r["orientation"] == 1
    a6 = np.eye(6)[5]
    p6 = np.concatenate([ce.p, [0, 0]])
    assert np.allclose(J @ p6, -a6, atol=1e-15)
    assert np.allclose(J @ a6, p6, atol=1e-15)


def test_orientation_sign_of_standard_and_reversed():
    std = np.zeros((6, 6))
    for k in range(3):
        std[2 * k + 1, 2 * k], std[2 * k, 2 * k + 1] = 1, -1
    assert hc.orientation_sign(std) == 1
    flip = std.copy()
    flip[:2, :2] *= -1
    assert hc.orientation_sign(flip) == -1


@settings(max_examples=30)
@given(seeds)
def test_half_kappa_pullback_is_contact_metric_at_half(seed):
    rng = np.random.default_rng(seed)
    ce = hc.random_contact_element(rng)
    d1, d2 = tangent_of_fiber(ce, rng), tangent_of_fiber(ce, rng)
    lhs = 0.5 * hc.skew_metric(hc.kappa_differential(ce, d1), hc.kappa_differential(ce, d2))
    assert lhs == pytest.approx(hc.fiber_metric_c(0.5, ce, d1, d2), abs=1e-12)


def test_kappa_differential_matches_finite_difference():
    rng = np.random.default_rng(9)
    ce = hc.random_contact_element(rng)
    d = tangent_of_fiber(ce, rng)
    d /= np.linalg.norm(d)
    h = 1e-6

    def at(s):
        xi = np.cos(s) * ce.xi + np.sin(s) * d
        return hc.kappa(hc.ContactElement(ce.p, xi))

    fd = (at(h) - at(-h)) / (2 * h)
    assert np.max(np.abs(fd - hc.kappa_differential(ce, d))) <= 1e-8


# --- CP^3 --------------------------------------------------------------------------------


def test_cp3_to_j6_at_first_coordinate_point():
    """z = [1, 0, 0, 0]: J A_1 = i A_1, J A_2 = -i A_2, J A_3 = -i A_3 with
    A_k = (a_{2k-1} - i a_{2k}) / sqrt 2, i.e. a_1 -> a_2, a_3 -> -a_4, a_5 -> -a_6."""
    J = hc.cp3_to_j6([1, 0, 0, 0])
    expected = np.zeros((6, 6))
    for k, s in enumerate((1, -1, -1)):
        expected[2 * k + 1, 2 * k] = s
        expected[2 * k, 2 * k + 1] = -s
    assert np.max(np.abs(J - expected)) <= 1e-15


def test_cp3_rejects_zero_and_wrong_shape():
    with pytest.raises(ValueError, match="vanish"):
        hc.cp3_to_j6(np.zeros(4))
    with pytest.raises(ValueError, match="four"):
        hc.cp3_to_j6(np.ones(3))


def test_cp3_to_j6_complex_structure_at_100_points():
    rng = np.random.default_rng(100)
    for _ in range(100):
        z = random_z(rng)
        J = hc.cp3_to_j6(z)
        r = hc.complex_structure_residuals(J)
        assert r["square"] <= 1e-12 and r["orthogonal"] <= 1e-12
        assert r["orientation"] == 1
        lam = rng.normal() + 1j * rng.normal()
        assert np.max(np.abs(hc.cp3_to_j6(lam * z) - J)) <= 1e-12
        assert hc.projective_distance(hc.j6_to_cp3(J), z) <= 1e-10


@settings(max_examples=30)
@given(seeds)
def test_contact_to_cp3_normalization_and_predicate(seed):
    ce = hc.random_contact_element(np.random.default_rng(seed), orthogonal_to_xi1=True)
    _, l2, l3 = ce.frame_coords
    z = hc.contact_to_cp3(ce.p, l2, l3)
    assert z[2] == 0.5
    assert np.vdot(z, z).real == pytest.approx(1.0, abs=1e-12)
    assert 4 * abs(z[3]) ** 2 == pytest.approx(1.0, abs=1e-12)
    assert hc.sigma_image_predicate(z)


@settings(max_examples=30)
@given(seeds)
def test_round_trip_contact_cp3_contact(seed):
    ce = hc.random_contact_element(np.random.default_rng(seed), orthogonal_to_xi1=True)
    _, l2, l3 = ce.frame_coords
    p, m2, m3 = hc.cp3_to_contact(hc.contact_to_cp3(ce.p, l2, l3))
    assert np.max(np.abs(p - ce.p)) <= 1e-10
    assert abs(m2 - l2) <= 1e-10 and abs(m3 - l3) <= 1e-10


@settings(max_examples=30)
@given(seeds)
def test_round_trip_cp3_contact_cp3(seed):
    z = random_sigma_z(np.random.default_rng(seed))
    p, l2, l3 = hc.cp3_to_contact(z)
    assert abs(np.linalg.norm(p) - 1) <= 1e-12
    assert abs(l2 ** 2 + l3 ** 2 - 1) <= 1e-12
    assert hc.projective_distance(hc.contact_to_cp3(p, l2, l3), z) <= 1e-10


@settings(max_examples=30)
@given(seeds)
def test_triangle_kappa_equals_cp3_image(seed):
    ce = hc.random_contact_element(np.random.default_rng(seed), orthogonal_to_xi1=True)
    _, l2, l3 = ce.frame_coords
    J = hc.cp3_to_j6(hc.contact_to_cp3(ce.p, l2, l3))
    assert np.max(np.abs(hc.kappa(ce) - J)) <= 1e-10


def test_predicate_cases():
    assert not hc.sigma_image_predicate([1, 0, 0, 0])
    assert not hc.sigma_image_predicate([0, 0, 1, 1])       # |z|^2 = 2, 4|z_3|^2 = 4
    z = np.array([0.5, 0.5j, 0.5, -0.5])
    assert hc.sigma_image_predicate(z)
    assert hc.sigma_image_predicate((2 - 3j) * z)
    assert not hc.sigma_image_predicate(z + np.array([1e-4, 0, 0, 0]))
    with pytest.raises(hc.PredicateError):
        hc.cp3_to_contact([1, 0, 0, 0])


@settings(max_examples=30)
@given(seeds)
def test_kappa_images_lie_on_squared_twistor_level(seed):
    ce = hc.random_contact_element(np.random.default_rng(seed))
    z = hc.j6_to_cp3(hc.kappa(ce))
    assert abs(hc.twistor_level(z)) <= 1e-9
    assert hc.twistor_level(random_z(np.random.default_rng(seed))) != pytest.approx(0, abs=1e-9)


def test_unsquared_moduli_relation_fails_on_kappa_images():
    rng = np.random.default_rng(11)
    levels = [abs(hc.twistor_level(hc.j6_to_cp3(hc.kappa(hc.random_contact_element(rng))),
                                   squared=False)) for _ in range(20)]
    assert max(levels) > 1e-2


def test_projective_distance():
    z = np.array([1, 2j, 0, 1])
    assert hc.projective_distance(z, (1 + 1j) * z) <= 1e-15
    assert hc.projective_distance([1, 0, 0, 0], [0, 1, 0, 0]) == pytest.approx(1.0)

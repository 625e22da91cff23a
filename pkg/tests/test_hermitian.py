import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from twistorlab import catalog
from twistorlab import frame_algebra as fa
from twistorlab import frame_manifold as fm
from twistorlab import hermitian as hm
from strategies import sd_coords, seeds

ORIGIN = np.zeros(4)
PHIS = (0.0, math.pi / 6, math.pi / 4, math.pi / 2)
SIGNS = list(itertools.product((1, -1), repeat=2))


def structures():
    """Every catalog structure plus the auxiliary non-minimal ones."""
    out = {
        "flat": catalog.get("flat_r4").structure(),
        "J_eps+": catalog.kodaira_hermitian(1),
        "J_eps-": catalog.kodaira_hermitian(-1),
        "J_sympl": catalog.kodaira_symplectic(1, -1, math.pi / 6),
        "secondary": catalog.kodaira_secondary_complex(1),
        "hopf": catalog.s3xs1_hopf(),
        "semidirect": catalog.semidirect_almost_kahler(),
        "conformal": catalog.conformally_flat_hermitian(),
    }
    return out


STRUCTURES = structures()


def points(h, n=3, seed=0):
    if h.manifold.frame is None:
        return [ORIGIN]
    rng = np.random.default_rng(seed)
    return [h.manifold.sample_point(rng) for _ in range(n)]


def generic_structure(seed):
    """Left-invariant J from a random unit self-dual bivector on the primary
    Kodaira frame: neither integrable nor symplectic in general."""
    rng = np.random.default_rng(seed)
    m = catalog.kodaira_primary_manifold(exact=False)
    return hm.AlmostHermitianStructure(m, fa.k_endo(fa.unit_self_dual(rng)), name="random")


# --- construction and classification ------------------------------------------------------


def test_rejects_non_complex_structure():
    with pytest.raises(ValueError, match="not an orthogonal complex structure"):
        hm.AlmostHermitianStructure(catalog.get("flat_r4").manifold, np.eye(4))


def test_rejects_frame_not_oriented_by_J():
    J = fa.k_endo(fa.s_basis(-1).s1)
    m = catalog.get("flat_r4").manifold
    with pytest.raises(ValueError, match="oriented"):
        hm.AlmostHermitianStructure(m, J)
    m2, J2 = hm.orient_by(m, J)
    assert hm.AlmostHermitianStructure(m2, J2).classification == hm.KAHLER


def test_rejects_wrong_declared_class():
    with pytest.raises(ValueError, match="declared"):
        hm.AlmostHermitianStructure(catalog.kodaira_primary_manifold(False),
                                    catalog.kodaira_J_eps_in_A_frame(1, False),
                                    declared_class=hm.KAHLER)


@pytest.mark.parametrize("name, expected", [
    ("flat", (True, True)), ("J_eps+", (True, False)), ("J_eps-", (True, False)),
    ("J_sympl", (False, True)), ("secondary", (True, False)), ("hopf", (True, False)),
    ("semidirect", (False, True)), ("conformal", (True, False)),
])
def test_integrable_symplectic_flags(name, expected):
    h = STRUCTURES[name]
    assert (hm.is_integrable(h), hm.is_symplectic(h)) == expected


@pytest.mark.parametrize("eid", catalog.MANIFOLD_IDS)
def test_catalog_classification_tags(eid):
    entry = catalog.get(eid)
    for name, spec in entry.structures.items():
        assert entry.structure(name).classification == spec.expected_class


@pytest.mark.parametrize("seed", range(4))
def test_random_left_invariant_structure_is_generic(seed):
    assert generic_structure(seed).classification == hm.GENERIC


# --- alpha ------------------------------------------------------------------------------


def test_flat_standard_alpha_is_s1():
    assert np.array_equal(hm.alpha(STRUCTURES["flat"], ORIGIN), fa.s_basis(1).s1)


@pytest.mark.parametrize("eps", [1, -1])
def test_kodaira_alpha_is_s1_of_oriented_frame(eps):
    h = catalog.kodaira_hermitian(eps, exact=True)
    a = hm.alpha(h, np.zeros(4, dtype=int))
    assert np.all(a == fa.exact(fa.s_basis(1).s1))
    # in the A-frame: alpha = A1^(eps A2) + A3^A4 = eps A12 + A34
    assert fa.k_endo(a)[1, 0] == 1


def test_alpha_unit_at_100_points():
    h = STRUCTURES["conformal"]
    for p in points(h, 100):
        a = np.asarray(hm.alpha(h, p), float)
        assert fa.norm(a) == pytest.approx(1.0, abs=1e-12)
        assert fa.is_self_dual(a)
        assert np.allclose(fa.k_endo(a), h.J_at(p))


# --- Nijenhuis, dOmega ------------------------------------------------------------------


@pytest.mark.parametrize("name", ["flat", "J_eps+", "J_eps-", "secondary", "hopf"])
def test_nijenhuis_vanishes_for_integrable(name):
    h = STRUCTURES[name]
    for p in points(h):
        assert hm._max_abs(h.at(p).nijenhuis) == 0 or hm._max_abs(h.at(p).nijenhuis) <= 1e-12


@pytest.mark.parametrize("e1, e2", SIGNS)
def test_nijenhuis_nonzero_for_symplectic_family(e1, e2):
    h = catalog.kodaira_symplectic(e1, e2, math.pi / 4)
    assert hm._max_abs(h.at(ORIGIN).nijenhuis) > 0.1


@settings(max_examples=20)
@given(seeds)
def test_nijenhuis_antisymmetric_and_matches_nabla_route(seed):
    h = generic_structure(seed % 1000)
    g = h.at(ORIGIN)
    N = np.asarray(g.nijenhuis, float)
    assert np.max(np.abs(N + np.swapaxes(N, 0, 1))) <= 1e-12
    assert np.max(np.abs(N - np.asarray(g.nijenhuis_via_nabla, float))) <= 1e-12
    rng = np.random.default_rng(seed)
    Y, Z = rng.normal(size=4), rng.normal(size=4)
    assert np.allclose(hm.nijenhuis(h, Y, Z, ORIGIN), np.einsum("a,b,abk->k", Y, Z, N))


@pytest.mark.parametrize("name", sorted(STRUCTURES))
def test_d_omega_bracket_and_nabla_routes_agree(name):
    h = STRUCTURES[name]
    for p in points(h):
        g = h.at(p)
        diff = np.asarray(g.d_kahler_form, float) - np.asarray(g.d_kahler_form_via_nabla, float)
        assert np.max(np.abs(diff)) <= 1e-10


def dx_dy_du(frame):
    """The coordinate 3-form dx^dy^du on the ambient frame rows, as a tensor."""
    rows = frame[:, :3]
    out = np.zeros((4, 4, 4))
    for a, b, c in itertools.product(range(4), repeat=3):
        out[a, b, c] = np.linalg.det(rows[[a, b, c]])
    return out


@pytest.mark.parametrize("eps", [1, -1])
def test_kodaira_d_omega_matches_coordinate_form(eps):
    """dOmega = -2 a_34 dx^dy^du with J A_i = sum a_ij A_j (here a_34 = 1)."""
    h = catalog.kodaira_hermitian(eps)
    A = np.asarray(catalog.kodaira_A_directions(eps), float)
    J_A = catalog.kodaira_J_eps_in_A_frame(eps, exact=False)
    a34 = J_A[3, 2]                           # column 3 holds J A_3
    assert a34 == 1
    for p in points(h, 3):
        frame = h.manifold.frame_matrix(p)
        expected = -2 * a34 * dx_dy_du(frame)
        assert np.max(np.abs(expected - np.asarray(h.at(p).d_kahler_form, float))) <= 1e-10
        assert np.allclose(A @ frame, catalog.kodaira_frame(p))


@pytest.mark.parametrize("e1, e2", SIGNS)
@pytest.mark.parametrize("phi", PHIS)
def test_kodaira_symplectic_structure_is_closed(e1, e2, phi):
    h = catalog.kodaira_symplectic(e1, e2, phi)
    assert hm.d_kahler_residual(h) <= 1e-12


# --- identity relating nabla J, dOmega and N -----------------------------------------------


@pytest.mark.parametrize("name", sorted(STRUCTURES))
def test_nabla_J_identity_on_frame_triples(name):
    h = STRUCTURES[name]
    for p in points(h):
        g = h.at(p)
        J, nJ = np.asarray(g.J, float), np.asarray(g.nabla_J, float)
        dom, N = np.asarray(g.d_kahler_form, float), np.asarray(g.nijenhuis, float)
        worst = 0.0
        for x, y, z in itertools.product(range(4), repeat=3):
            lhs = 2 * nJ[x][:, y] @ np.eye(4)[z]
            rhs = (dom[x, y, z] - np.einsum("b,c,bc->", J[:, y], J[:, z], dom[x])
                   + N[y, z] @ J[:, x])
            worst = max(worst, abs(lhs - rhs))
        assert worst <= 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_nabla_J_identity_on_generic_structure(seed):
    h = generic_structure(seed)
    g = h.at(ORIGIN)
    J, nJ, dom, N = (np.asarray(v, float) for v in (g.J, g.nabla_J, g.d_kahler_form, g.nijenhuis))
    lhs = 2 * np.einsum("xzy->xyz", nJ)
    rhs = dom - np.einsum("xbc,by,cz->xyz", dom, J, J) + np.einsum("yzk,kx->xyz", N, J)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


@pytest.mark.parametrize("name", ["J_eps+", "J_eps-", "secondary", "hopf", "conformal"])
def test_integrable_nabla_J_closed_form(name):
    """2 (nabla_X J)Y = g(JX,Y)B - g(B,Y)JX + g(X,Y)JB - g(JB,Y)X."""
    h = STRUCTURES[name]
    for p in points(h):
        g = h.at(p)
        J, B, nJ = np.asarray(g.J, float), np.asarray(g.B, float), np.asarray(g.nabla_J, float)
        for X, Y in itertools.product(np.eye(4), repeat=2):
            lhs = 2 * np.einsum("i,ikl,l->k", X, nJ, Y)
            rhs = ((J @ X) @ Y * B - (B @ Y) * (J @ X) + (X @ Y) * (J @ B) - ((J @ B) @ Y) * X)
            assert np.max(np.abs(lhs - rhs)) <= 1e-9


# --- Lee form ---------------------------------------------------------------------------


@pytest.mark.parametrize("eps", [1, -1])
def test_kodaira_lee_form_anchor(eps):
    h = catalog.kodaira_hermitian(eps, exact=True)
    g = h.at(np.zeros(4, dtype=int))
    A = catalog.kodaira_A_directions(eps)
    assert list(A @ g.theta) == [0, 0, -2 * eps, 0]
    assert np.all(g.nabla_theta == 0)
    assert g.lee.norm2 == 4


def test_flat_lee_form_zero():
    assert np.all(hm.lee_form(STRUCTURES["flat"], ORIGIN).theta == 0)


@pytest.mark.parametrize("name", ["J_eps+", "J_eps-", "secondary", "hopf", "conformal"])
def test_d_omega_is_omega_wedge_theta(name):
    h = STRUCTURES[name]
    for p in points(h):
        g = h.at(p)
        om, th = np.asarray(g.kahler_form, float), np.asarray(g.theta, float)
        wedge = (np.einsum("ab,c->abc", om, th) + np.einsum("bc,a->abc", om, th)
                 + np.einsum("ca,b->abc", om, th))
        assert np.max(np.abs(wedge - np.asarray(g.d_kahler_form, float))) <= 1e-9


def test_conformal_lee_form_is_twice_df():
    """For g = e^{2f} g_0 with the standard J, theta = 2 df (an independent oracle)."""
    h = STRUCTURES["conformal"]
    a = np.array([0.3, -0.2, 0.1, 0.25])
    Q = np.array([[0.4, 0, 0.3, 0], [0, -0.2, 0, 0.1], [0.3, 0, 0, 0], [0, 0.1, 0, 0.2]])
    for p in points(h):
        df = a + Q @ p
        frame = h.manifold.frame_matrix(p)
        assert np.allclose(np.asarray(h.at(p).theta, float), 2 * frame @ df, atol=1e-10)


def test_hopf_lee_form_is_parallel():
    h = STRUCTURES["hopf"]
    for p in points(h):
        g = h.at(p)
        assert hm._max_abs(g.nabla_theta) <= 1e-12
        assert hm._max_abs(g.d_theta) <= 1e-12
        assert float(g.lee.norm2) == pytest.approx(4.0)


# --- nabla alpha ---------------------------------------------------------------------------


def test_kahler_alpha_parallel():
    h = STRUCTURES["flat"]
    g = h.at(ORIGIN)
    assert np.all(np.asarray(g.nabla_alpha) == 0)
    assert np.all(np.asarray(g.second_nabla_alpha) == 0)


@pytest.mark.parametrize("name", sorted(STRUCTURES))
def test_nabla_alpha_orthogonal_to_alpha(name):
    h = STRUCTURES[name]
    for p in points(h):
        g = h.at(p)
        for i in range(4):
            assert abs(float(fa.inner(g.nabla_alpha[i], g.alpha))) <= 1e-12


@pytest.mark.parametrize("name", ["J_eps+", "J_eps-", "secondary", "hopf", "conformal"])
def test_integrable_nabla_alpha_closed_form(name):
    h = STRUCTURES[name]
    for p in points(h):
        for X in np.eye(4):
            diff = (np.asarray(hm.nabla_alpha(h, X, p), float)
                    - np.asarray(hm.nabla_alpha_integrable(h, X, p), float))
            assert np.max(np.abs(diff)) <= 1e-10


@pytest.mark.parametrize("eps", [1, -1])
def test_kodaira_nabla_a3_alpha_both_routes_with_B(eps):
    h = catalog.kodaira_hermitian(eps, exact=True)
    A = catalog.kodaira_A_directions(eps)
    p = np.zeros(4, dtype=int)
    B = h.at(p).B
    assert np.all(B == -2 * eps * A[2])
    assert np.all(hm.nabla_alpha(h, A[2], p) == hm.nabla_alpha_integrable(h, A[2], p))


@pytest.mark.parametrize("name", ["J_sympl", "semidirect", "flat"])
def test_symplectic_nabla_alpha_pairing(name):
    h = STRUCTURES[name]
    rng = np.random.default_rng(1)
    for p in points(h):
        for _ in range(10):
            X, a = rng.normal(size=4), rng.normal(size=6)
            lhs = float(fa.inner(hm.nabla_alpha(h, X, p), a))
            rhs = float(hm.nabla_alpha_symplectic_pairing(h, X, a, p))
            assert abs(lhs - rhs) <= 1e-10


def test_symplectic_pairing_against_s2():
    h = STRUCTURES["J_sympl"]
    s2 = fa.s_basis(1).s2.astype(float)
    for X in np.eye(4):
        lhs = fa.inner(hm.nabla_alpha(h, X, ORIGIN), s2)
        assert lhs == pytest.approx(float(hm.nabla_alpha_symplectic_pairing(h, X, s2, ORIGIN)),
                                    abs=1e-12)


@pytest.mark.parametrize("name, tol", [("J_eps+", 1e-9), ("J_eps-", 1e-9), ("secondary", 1e-9),
                                       ("hopf", 1e-9), ("conformal", 1e-7)])
def test_integrable_second_nabla_alpha_closed_form(name, tol):
    """Direct second derivative (finite differences of nabla alpha on
    non-invariant data) against the closed form."""
    h = STRUCTURES[name]
    for p in points(h, 2):
        for X, Y in itertools.product(np.eye(4), repeat=2):
            diff = (np.asarray(hm.second_nabla_alpha(h, X, Y, p), float)
                    - np.asarray(hm.second_nabla_alpha_integrable(h, X, Y, p), float))
            assert np.max(np.abs(diff)) <= tol


@pytest.mark.parametrize("e1, e2", SIGNS)
def test_trace_second_nabla_alpha_is_frame_sum(e1, e2):
    h = catalog.kodaira_symplectic(e1, e2, math.pi / 6)
    g = h.at(ORIGIN)
    direct = sum(hm.second_nabla_alpha(h, e, e, ORIGIN) for e in np.eye(4))
    assert np.allclose(direct, g.trace_second_nabla_alpha, atol=1e-14)


# --- star Ricci and S(Omega) ----------------------------------------------------------------


@pytest.mark.parametrize("e1, e2", SIGNS)
@pytest.mark.parametrize("phi", PHIS)
def test_kodaira_star_ricci_values(e1, e2, phi):
    rs = np.asarray(hm.star_ricci(catalog.kodaira_symplectic(e1, e2, phi), ORIGIN), float)
    target = -e1 * math.sin(phi) * math.cos(phi)
    assert abs(rs[0, 3] - target) <= 1e-12 and abs(rs[3, 0] - target) <= 1e-12
    assert abs(rs[0, 2]) <= 1e-12 and abs(rs[2, 0]) <= 1e-12


def test_kodaira_star_ricci_exact_pythagorean_angle():
    h = catalog.kodaira_symplectic(1, 1, cos=Fraction(3, 5), sin=Fraction(4, 5))
    rs = hm.star_ricci(h, np.zeros(4, dtype=int))
    assert rs[0, 3] == rs[3, 0] == Fraction(-12, 25)


def test_flat_star_ricci_zero():
    assert np.all(hm.star_ricci(STRUCTURES["flat"], ORIGIN) == 0)


@pytest.mark.parametrize("name", sorted(STRUCTURES))
def test_star_ricci_J_relation(name):
    h = STRUCTURES[name]
    for p in points(h):
        g = h.at(p)
        J, rs = np.asarray(g.J, float), np.asarray(g.star_ricci, float)
        assert np.max(np.abs(J.T @ rs @ J - rs.T)) <= 1e-10
        for X in np.eye(4):
            assert abs(X @ rs @ (J @ X)) <= 1e-10


def test_flat_s_omega_zero():
    assert hm.s_omega(STRUCTURES["flat"], np.eye(4)[0], np.eye(4)[2], ORIGIN) == 0


@pytest.mark.parametrize("e1, e2", SIGNS)
def test_kodaira_s_omega_combination_vanishes(e1, e2):
    h = catalog.kodaira_symplectic(e1, e2, math.pi / 6)
    E = np.eye(4)
    total = hm.s_omega(h, E[0], E[2], ORIGIN) + hm.s_omega(h, E[3], E[1], ORIGIN)
    assert abs(total) <= 1e-12


@pytest.mark.parametrize("name", ["semidirect", "J_sympl", "flat"])
def test_s_omega_defining_trace(name):
    h = STRUCTURES[name]
    g = h.at(ORIGIN if h.manifold.frame is None else points(h, 1)[0])
    rng = np.random.default_rng(4)
    for _ in range(10):
        X, Y = rng.normal(size=4), rng.normal(size=4)
        assert abs(float(g.s_omega(X, Y)) - float(g.s_omega_trace(X, Y))) <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_s_omega_conditions_equal_star_ricci_asymmetry(seed):
    """On a random structure: S13 + S42 = 2 (rho*_14 - rho*_41) and
    S14 + S23 = -2 (rho*_13 - rho*_24) in a J-adapted frame."""
    h = generic_structure(seed)
    g = h.at(ORIGIN)
    J, rs = np.asarray(g.J, float), np.asarray(g.star_ricci, float)
    rng = np.random.default_rng(seed)
    X = rng.normal(size=4)
    X /= np.linalg.norm(X)
    Y = rng.normal(size=4)
    Y -= (Y @ X) * X + (Y @ (J @ X)) * (J @ X)
    Y /= np.linalg.norm(Y)
    E = [X, J @ X, Y, J @ Y]

    def S(i, j):
        return float(g.s_omega(E[i], E[j]))

    def r(i, j):
        return E[i] @ rs @ E[j]

    assert S(0, 2) + S(3, 1) == pytest.approx(2 * (r(0, 3) - r(3, 0)), abs=1e-10)
    assert S(0, 3) + S(1, 2) == pytest.approx(-2 * (r(0, 2) - r(1, 3)), abs=1e-10)


def test_semidirect_star_ricci_not_symmetric():
    rs = np.asarray(STRUCTURES["semidirect"].at(ORIGIN).star_ricci, float)
    assert np.max(np.abs(rs - rs.T)) > 0.1


# --- (1,1) forms and the scaled Lee form ------------------------------------------------------


def test_omega_is_type_11():
    for name in ("J_eps+", "J_sympl", "conformal"):
        h = STRUCTURES[name]
        for p in points(h, 2):
            assert hm.is_type_11(np.asarray(h.at(p).kahler_form, float), h, p)


@pytest.mark.parametrize("eps", [1, -1])
def test_kodaira_d_theta_is_type_11_and_zero(eps):
    h = catalog.kodaira_hermitian(eps)
    dth = np.asarray(h.at(ORIGIN).d_theta, float)
    assert np.all(dth == 0)
    assert hm.is_type_11(dth, h, ORIGIN)


def test_s2_dual_form_is_not_type_11():
    h = STRUCTURES["flat"]
    beta = fa.bivector_matrix(fa.s_basis(1).s2.astype(float))
    assert not hm.is_type_11(beta, h, ORIGIN)


@given(sd_coords)
def test_type_11_iff_no_s2_s3_component(c):
    h = STRUCTURES["flat"]
    beta = fa.bivector_matrix(fa.from_sd_coords(c))
    expected = abs(c[1]) <= 1e-12 and abs(c[2]) <= 1e-12
    assert hm.is_type_11(beta, h, ORIGIN) == expected or max(abs(c[1]), abs(c[2])) < 1e-9


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("name", ["J_eps+", "J_eps-", "flat", "hopf"])
def test_scaled_lee_form_vanishes_for_parallel_lee_form(name, t):
    h = STRUCTURES[name]
    for p in points(h, 2):
        assert hm._max_abs(hm.scaled_lee_two_form(h, t, p)) <= 1e-12


def test_scaled_lee_form_rejects_non_positive_t():
    with pytest.raises(ValueError):
        hm.scaled_lee_two_form(STRUCTURES["flat"], 0.0, ORIGIN)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_scaled_lee_form_expansion_on_conformal_structure(t):
    h = STRUCTURES["conformal"]
    for p in points(h, 3):
        direct = hm.scaled_lee_two_form(h, t, p)
        expanded = hm.scaled_lee_two_form_expanded(h, t, p)
        assert np.max(np.abs(direct - expanded)) <= 1e-8
        assert hm.type_11_residual(direct, h, p) > 1e-3

"""Example manifolds and structures with their regression tables.

Kodaira manifolds are handled on the universal cover C^2 = R^4 with
coordinates (x, y, u, v); every tensor involved is left-invariant, so the
lattice quotient plays no role.  S^3 x S^1 lives in R^4 x R with the
linear frame fields of S^3 and d/dt.

Every entry checks its tables against the computed geometry when it is
built, and refuses to load on a mismatch.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import frame_algebra as fa
from . import frame_manifold as fm
from . import hermitian as hm
from . import twistor as tw
from .frame_manifold import FramedManifold
from .hermitian import AlmostHermitianStructure

FIXTURE_TOL = 1e-12

MANIFOLD_IDS = ("flat_r4", "kodaira_primary", "kodaira_secondary", "s3xs1")


class FixtureMismatch(AssertionError):
    pass


@dataclass(frozen=True)
class StructureSpec:
    name: str
    build: Callable[..., AlmostHermitianStructure]
    defaults: dict
    expected_class: str
    expected_minimal: bool


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    id: str
    manifold: FramedManifold
    structures: dict
    description: str = ""
    fixtures: dict = field(default_factory=dict)

    def structure(self, name: Optional[str] = None, **params) -> AlmostHermitianStructure:
        spec = self.structure_spec(name)
        merged = dict(spec.defaults)
        unknown = set(params) - set(merged)
        if unknown:
            raise KeyError(f"{self.id}/{spec.name}: unknown parameters {sorted(unknown)}")
        merged.update(params)
        return spec.build(**merged)

    def structure_spec(self, name: Optional[str] = None) -> StructureSpec:
        if name is None:
            name = next(iter(self.structures))
        if name not in self.structures:
            raise KeyError(f"{self.id}: unknown structure {name!r}; "
                           f"known: {sorted(self.structures)}")
        return self.structures[name]


# --- helpers -------------------------------------------------------------------------


def _exact_or_float(*values):
    return all(isinstance(v, (int, Fraction)) for v in values)


def _cos_sin(phi=None, cos=None, sin=None):
    """cos/sin pair of the angle; exact when given as Fractions."""
    if cos is not None or sin is not None:
        if cos is None or sin is None:
            raise ValueError("give both cos and sin")
        if _exact_or_float(cos, sin):
            cos, sin = Fraction(cos), Fraction(sin)
            if cos * cos + sin * sin != 1:
                raise ValueError("cos^2 + sin^2 must equal 1")
        elif abs(cos * cos + sin * sin - 1) > 1e-12:
            raise ValueError("cos^2 + sin^2 must equal 1")
        return cos, sin
    phi = 0.0 if phi is None else phi
    return math.cos(phi), math.sin(phi)


def _array(rows, exact: bool):
    return fa.exact(rows) if exact else np.array(rows, dtype=float)


def standard_J(exact: bool = True) -> np.ndarray:
    """J E_1 = E_2, J E_3 = E_4."""
    J = [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]
    return fa.exact(J) if exact else np.array(J, dtype=float)


def _structure_constants(brackets: dict, exact: bool = True) -> np.ndarray:
    """c_ijk from {(i, j): {k: coeff}} with 1-based indices, i < j."""
    c = np.zeros((4, 4, 4), dtype=object if exact else float)
    if exact:
        c[...] = Fraction(0)
    for (i, j), combo in brackets.items():
        for k, coeff in combo.items():
            coeff = Fraction(coeff) if exact else float(coeff)
            c[i - 1, j - 1, k - 1] = coeff
            c[j - 1, i - 1, k - 1] = -coeff
    return c


def _vec(combo: dict, exact: bool) -> np.ndarray:
    v = np.zeros(4, dtype=object if exact else float)
    if exact:
        v[...] = Fraction(0)
    for k, coeff in combo.items():
        v[k - 1] = v[k - 1] + coeff
    return v


def _is_zero(a, tol=FIXTURE_TOL) -> bool:
    a = np.asarray(a)
    if a.dtype == object and all(isinstance(x, (int, Fraction)) for x in a.ravel()):
        return all(x == 0 for x in a.ravel())
    return float(np.max(np.abs(a.astype(float)), initial=0.0)) <= tol


def _residual(diff) -> tuple:
    """(max |diff| as float, exact flag)."""
    a = np.asarray(diff)
    exact = a.dtype == object and all(isinstance(x, (int, Fraction)) for x in a.ravel())
    if exact:
        return float(max((abs(x) for x in a.ravel()), default=0)), True
    return float(np.max(np.abs(a.astype(float)), initial=0.0)), False


def _check(label: str, computed, expected, report: Optional[list] = None):
    """Raise on mismatch, or append (label, residual, exact) to ``report``."""
    diff = np.asarray(computed) - np.asarray(expected)
    if report is not None:
        report.append((label,) + _residual(diff))
        return
    if not _is_zero(diff):
        raise FixtureMismatch(f"{label}: computed {computed}, expected {expected}")


def _directions(directions, exact):
    if directions is None:
        return fa.exact(np.eye(4, dtype=int)) if exact else np.eye(4)
    return np.asarray(directions)


def check_connection_table(m: FramedManifold, table: dict, label: str, p=None,
                           report: Optional[list] = None):
    """table[(i, j)] = {k: coeff} for nabla_{E_i} E_j; entries absent are zero."""
    p = np.zeros(m.ambient_dim) if p is None else p
    gam = fm.levi_civita(m, p)
    exact = fa.is_exact(gam)
    for i in range(1, 5):
        for j in range(1, 5):
            _check(f"{label} nabla_E{i} E{j}", gam[i - 1, j - 1],
                   _vec(table.get((i, j), {}), exact), report)


def check_bivector_connection_table(m: FramedManifold, table: dict, label: str, p=None,
                                    directions=None, report: Optional[list] = None):
    """table[(i, k)] = {l: coeff} for nabla_{D_i} s_k^+ = sum coeff s_l^+.

    ``directions`` holds the D_i as rows of frame components (default: the frame).
    """
    p = np.zeros(m.ambient_dim) if p is None else p
    s = fa.s_basis(1)
    exact = fa.is_exact(fm.levi_civita(m, p))
    dirs = _directions(directions, exact)
    for i in range(1, 5):
        e = dirs[i - 1]
        for k in range(1, 4):
            computed = fm.nabla_bivector_field(m, e, s[k - 1], p)
            expected = sum((coeff * s[l - 1] for l, coeff in table.get((i, k), {}).items()),
                           np.zeros(6, dtype=object if exact else float))
            _check(f"{label} nabla_E{i} s{k}", computed, expected, report)


def fiber_velocity_table(m: FramedManifold, x, p=None, directions=None):
    """u_i(x) = -sum_j x_j <nabla_{D_i} s_j, s_k>: minus the vertical drift of
    the horizontal lift of D_i at sigma = sum x_k s_k, in s-coordinates."""
    p = np.zeros(m.ambient_dim) if p is None else p
    s = fa.s_basis(1)
    dirs = _directions(directions, fa.is_exact(fm.levi_civita(m, p)))
    rows = []
    for i in range(4):
        e = dirs[i]
        nabla_s = [fa.sd_coords(fm.nabla_bivector_field(m, e, s[j], p)) for j in range(3)]
        rows.append(-sum(x[j] * nabla_s[j] for j in range(3)))
    return np.array(rows)


# --- flat R^4 ------------------------------------------------------------------------------


def flat_r4() -> CatalogEntry:
    c = _structure_constants({})
    m = FramedManifold("flat_r4", 4, frame=lambda p: np.eye(4), structure_constants=c,
                       frame_jacobian=lambda p: np.zeros((4, 4, 4)))

    def build(exact: bool = False):
        return AlmostHermitianStructure(m, standard_J(exact), name="J_std",
                                        params={}, declared_class=hm.KAHLER)

    check_connection_table(m, {}, "flat_r4")
    return CatalogEntry("flat_r4", m, {
        "standard": StructureSpec("standard", build, {"exact": False}, hm.KAHLER, True)},
        description="Euclidean R^4 with J E1 = E2, J E3 = E4 (Kahler baseline)")


# --- primary Kodaira surface -----------------------------------------------------------


def kodaira_frame(p) -> np.ndarray:
    """A_1 = d_x - x d_u + y d_v, A_2 = d_y - y d_u - x d_v, A_3 = d_u, A_4 = d_v."""
    x, y, _, _ = p
    return np.array([[1, 0, -x, y], [0, 1, -y, -x], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=float)


def kodaira_frame_jacobian(p) -> np.ndarray:
    jac = np.zeros((4, 4, 4))
    jac[0, 2, 0] = -1.0
    jac[0, 3, 1] = 1.0
    jac[1, 2, 1] = -1.0
    jac[1, 3, 0] = -1.0
    return jac


KODAIRA_PRIMARY_BRACKETS = {(1, 2): {4: -2}}

# nabla_{A_i} A_j
KODAIRA_PRIMARY_CONNECTION = {
    (1, 2): {4: -1}, (2, 1): {4: 1},
    (1, 4): {2: 1}, (4, 1): {2: 1},
    (2, 4): {1: -1}, (4, 2): {1: -1},
}


def kodaira_primary_manifold(exact: bool = True) -> FramedManifold:
    return FramedManifold("kodaira_primary", 4, frame=kodaira_frame,
                          structure_constants=_structure_constants(KODAIRA_PRIMARY_BRACKETS, exact),
                          frame_jacobian=kodaira_frame_jacobian)


def kodaira_hermitian_connection_table(eps: int) -> dict:
    """nabla_{A_i} s_k^eps; s^eps is s^+ of the oriented frame (A_1, eps A_2, A_3, A_4)."""
    return {
        (1, 1): {3: -eps}, (4, 2): {3: eps},
        (1, 3): {1: eps}, (2, 2): {1: -1},
        (2, 1): {2: 1}, (4, 3): {2: -eps},
    }


def kodaira_A_directions(eps: int) -> np.ndarray:
    """A_1..A_4 in components of the oriented frame (A_1, eps A_2, A_3, A_4)."""
    return fa.exact(np.diag([1, eps, 1, 1]))


def kodaira_hermitian_u(eps: int, x) -> list:
    x1, x2, x3 = x
    return [eps * np.array([-x3, 0, x1]), np.array([x2, -x1, 0]),
            np.zeros(3, dtype=int), eps * np.array([0, x3, -x2])]


def kodaira_J_eps_in_A_frame(eps: int, exact: bool = True) -> np.ndarray:
    J = [[0, -eps, 0, 0], [eps, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]
    return fa.exact(J) if exact else np.array(J, dtype=float)


def kodaira_hermitian(eps: int = 1, exact: bool = False) -> AlmostHermitianStructure:
    """J A_1 = eps A_2, J A_3 = A_4, in the frame (A_1, eps A_2, A_3, A_4)."""
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")
    base = kodaira_primary_manifold(exact)
    m, J = hm.orient_by(base, kodaira_J_eps_in_A_frame(eps, exact))
    return AlmostHermitianStructure(m, J, name=f"J_eps(eps={eps})", params={"eps": eps},
                                    declared_class=hm.HERMITIAN)


def kodaira_symplectic_frame_change(eps1, eps2, cos, sin) -> np.ndarray:
    """Rows express E_1..E_4 in A_1..A_4:
    E_1 = A_1, E_2 = -e1 sin A_3 + e1 e2 cos A_4, E_3 = cos A_3 + e2 sin A_4, E_4 = A_2."""
    zero = Fraction(0) if _exact_or_float(cos, sin) else 0.0
    one = Fraction(1) if _exact_or_float(cos, sin) else 1.0
    rows = [[one, zero, zero, zero],
            [zero, zero, -eps1 * sin, eps1 * eps2 * cos],
            [zero, zero, cos, eps2 * sin],
            [zero, one, zero, zero]]
    return np.array(rows, dtype=object if _exact_or_float(cos, sin) else float)


def kodaira_J_symplectic_in_A_frame(eps1, eps2, cos, sin) -> np.ndarray:
    """Matrix of J^{eps,phi} in the A-frame (column j = J A_j)."""
    cols = [
        [0, 0, -eps1 * sin, eps1 * eps2 * cos],
        [0, 0, -cos, -eps2 * sin],
        [eps1 * sin, cos, 0, 0],
        [-eps1 * eps2 * cos, eps2 * sin, 0, 0],
    ]
    return np.array(cols, dtype=object if _exact_or_float(cos, sin) else float).T


def kodaira_symplectic_tables(eps1, eps2, cos, sin) -> dict:
    a = eps1 * eps2 * cos
    b = eps2 * sin
    brackets = {(1, 4): {2: -2 * a, 3: -2 * b}}
    connection = {
        (1, 2): {4: a}, (2, 1): {4: a},
        (1, 3): {4: b}, (3, 1): {4: b},
        (1, 4): {2: -a, 3: -b}, (4, 1): {2: a, 3: b},
        (2, 4): {1: -a}, (4, 2): {1: -a},
        (3, 4): {1: -b}, (4, 3): {1: -b},
    }
    s_connection = {
        (1, 1): {3: a}, (4, 2): {3: a},
        (4, 1): {3: -b}, (1, 2): {3: b},
        (2, 1): {2: a}, (2, 2): {1: -a},
        (3, 1): {2: b}, (3, 2): {1: -b},
        (1, 3): {1: -a, 2: -b}, (4, 3): {1: b, 2: -a},
    }
    return {"brackets": brackets, "connection": connection, "s_connection": s_connection}


def kodaira_symplectic_u(eps1, eps2, cos, sin, x) -> list:
    x1, x2, x3 = x
    a = eps1 * eps2 * cos
    b = eps2 * sin
    return [np.array([x3 * a, x3 * b, -x1 * a - x2 * b]),
            np.array([x2 * a, -x1 * a, 0 * x1]),
            np.array([x2 * b, -x1 * b, 0 * x1]),
            np.array([-x3 * b, x3 * a, x1 * b - x2 * a])]


def kodaira_symplectic(eps1: int = 1, eps2: int = 1, phi: float = 0.0, cos=None, sin=None,
                       exact: Optional[bool] = None) -> AlmostHermitianStructure:
    """J^{eps,phi} in its adapted frame E_1..E_4 (J E_1 = E_2, J E_3 = E_4).

    Pass ``cos``/``sin`` as Fractions (Pythagorean angles) for exact arithmetic.
    """
    if eps1 not in (1, -1) or eps2 not in (1, -1):
        raise ValueError("eps1, eps2 must be +1 or -1")
    c, s = _cos_sin(phi, cos, sin)
    is_exact = _exact_or_float(c, s) if exact is None else exact
    P = kodaira_symplectic_frame_change(eps1, eps2, c, s)
    base = kodaira_primary_manifold(is_exact)
    m = base.change_frame(P, name="kodaira_primary[E]")
    if not is_exact:
        m = FramedManifold(m.name, 4, frame=m.frame,
                           structure_constants=np.asarray(m.structure_constants, dtype=float),
                           frame_jacobian=m.frame_jacobian)
    # J in the E frame must agree with the A-frame formulas
    J_A = kodaira_J_symplectic_in_A_frame(eps1, eps2, c, s)
    J = P @ J_A @ P.T
    _check("J^{eps,phi} adapted frame", J, standard_J(is_exact))
    return AlmostHermitianStructure(m, standard_J(is_exact), name=f"J^(eps={eps1},{eps2};phi)",
                                    params={"eps1": eps1, "eps2": eps2, "cos": c, "sin": s},
                                    declared_class=hm.ALMOST_KAHLER)


def verify_kodaira_primary_fixtures(exact_angles=((Fraction(3, 5), Fraction(4, 5)),),
                                    report: Optional[list] = None) -> None:
    """Check every table of the primary Kodaira example; exact for rational data.

    With ``report`` the residuals are collected instead of raising."""
    base = kodaira_primary_manifold(exact=True)
    check_connection_table(base, KODAIRA_PRIMARY_CONNECTION, "kodaira A-frame", report=report)
    x = (Fraction(2, 3), Fraction(1, 3), Fraction(2, 3))
    for eps in (1, -1):
        h = kodaira_hermitian(eps, exact=True)
        dirs = kodaira_A_directions(eps)
        check_bivector_connection_table(h.manifold, kodaira_hermitian_connection_table(eps),
                                        f"J_eps={eps}", directions=dirs, report=report)
        u = fiber_velocity_table(h.manifold, x, directions=dirs)
        expected = kodaira_hermitian_u(eps, x)
        for i in range(4):
            _check(f"u_{i + 1}^eps (eps={eps})", u[i], expected[i], report)
        theta = h.at(np.zeros(4)).theta
        _check(f"Lee form (eps={eps})", dirs @ theta, fa.exact([0, 0, -2 * eps, 0]), report)
    for eps1 in (1, -1):
        for eps2 in (1, -1):
            for cos, sin in tuple(exact_angles) + ((Fraction(1), Fraction(0)),
                                                   (Fraction(0), Fraction(1))):
                h = kodaira_symplectic(eps1, eps2, cos=cos, sin=sin)
                tables = kodaira_symplectic_tables(eps1, eps2, cos, sin)
                label = f"J^(eps={eps1},{eps2}; cos={cos})"
                c = fm.structure_functions(h.manifold, np.zeros(4))
                _check(label + " brackets", c, _structure_constants(tables["brackets"]), report)
                check_connection_table(h.manifold, tables["connection"], label, report=report)
                check_bivector_connection_table(h.manifold, tables["s_connection"], label,
                                                report=report)
                u = fiber_velocity_table(h.manifold, x)
                expected = kodaira_symplectic_u(eps1, eps2, cos, sin, x)
                for i in range(4):
                    _check(f"{label} u_{i + 1}", u[i], expected[i], report)
                rs = h.at(np.zeros(4)).star_ricci
                _check(label + " rho*(E1,E4)", [rs[0, 3], rs[3, 0]], [-eps1 * sin * cos] * 2, report)
                _check(label + " rho*(E1,E3)", [rs[0, 2], rs[2, 0]], [0, 0], report)


def kodaira_primary() -> CatalogEntry:
    verify_kodaira_primary_fixtures()
    return CatalogEntry("kodaira_primary", kodaira_primary_manifold(exact=False), {
        "hermitian": StructureSpec("hermitian", kodaira_hermitian, {"eps": 1, "exact": False},
                                   hm.HERMITIAN, True),
        "symplectic": StructureSpec("symplectic", kodaira_symplectic,
                                    {"eps1": 1, "eps2": 1, "phi": 0.0, "cos": None, "sin": None,
                                     "exact": None},
                                    hm.ALMOST_KAHLER, True),
    }, description="primary Kodaira surface, left-invariant metric with A_1..A_4 orthonormal",
        fixtures={"connection": KODAIRA_PRIMARY_CONNECTION})


# --- secondary Kodaira surface ------------------------------------------------------


KODAIRA_SECONDARY_BRACKETS = {
    (1, 2): {4: -2},
    (1, 3): {2: Fraction(-1, 2)},   # 2[A_3, A_1] = A_2
    (2, 3): {1: Fraction(1, 2)},    # 2[A_3, A_2] = -A_1
}


def kodaira_secondary_manifold(exact: bool = True) -> FramedManifold:
    return FramedManifold("kodaira_secondary", 4,
                          structure_constants=_structure_constants(KODAIRA_SECONDARY_BRACKETS, exact))


def left_invariant_J(manifold: FramedManifold, alpha, name: str, **kw) -> AlmostHermitianStructure:
    """Left-invariant compatible J from a unit bivector (self- or anti-self-dual
    with respect to the frame); the frame is re-oriented when necessary."""
    J = fa.k_endo(np.asarray(alpha))
    m, J = hm.orient_by(manifold, J)
    return AlmostHermitianStructure(m, J, name=name, **kw)


def kodaira_secondary_complex(eps: int = 1, exact: bool = False) -> AlmostHermitianStructure:
    """J A_1 = A_2, J A_3 = eps A_4 (up to sign these are all the compatible
    left-invariant complex structures, see :func:`compatible_complex_scan`)."""
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")
    J = [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -eps], [0, 0, eps, 0]]
    m, J = hm.orient_by(kodaira_secondary_manifold(exact), fa.exact(J) if exact else np.array(J, float))
    return AlmostHermitianStructure(m, J, name=f"J_sec(eps={eps})", params={"eps": eps},
                                    declared_class=hm.HERMITIAN)


def closed_left_invariant_two_forms(manifold: FramedManifold) -> list:
    """Exact basis (bivector components) of the left-invariant 2-forms with
    dOmega = 0, from the linear system on the six coefficients."""
    import sympy

    c = manifold.structure_constants
    triples = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    cols = []
    for n in range(6):
        e = [0] * 6
        e[n] = 1
        om = fa.bivector_matrix(np.array(e))
        cols.append([-sum(c[a, b, k] * om[k, d] for k in range(4))
                     + sum(c[a, d, k] * om[k, b] for k in range(4))
                     - sum(c[b, d, k] * om[k, a] for k in range(4)) for a, b, d in triples])
    null = sympy.Matrix(cols).T.nullspace()
    return [fa.exact([sympy.Rational(x) for x in v]) for v in null]


def left_invariant_symplectic_dimension(manifold: FramedManifold) -> int:
    """Largest rank (0, 2 or 4) of a closed left-invariant 2-form.

    Rank 4 exists iff the Pfaffian restricted to the closed forms is not
    identically zero; it is a quadratic form in the basis coefficients.
    """
    basis = closed_left_invariant_two_forms(manifold)
    if not basis:
        return 0

    def pf(a):
        return a[0] * a[5] - a[1] * a[4] + a[2] * a[3]

    for a in basis:
        if pf(a) != 0:
            return 4
    for a, b in itertools.combinations(basis, 2):
        if pf(a + b) != 0:
            return 4
    return 2


def compatible_complex_scan(manifold: FramedManifold, n: int = 12, tol: float = 1e-9) -> list:
    """Unit bivectors of Lambda^2_+ or Lambda^2_- (orientation, sd-coords) on a
    sphere grid whose left-invariant J is integrable."""
    hits = []
    m_float = FramedManifold(manifold.name, 4,
                             structure_constants=np.asarray(manifold.structure_constants, float))
    for orientation in (1, -1):
        s = fa.s_basis(orientation).as_array().astype(float)
        for i in range(n + 1):
            theta = math.pi * i / n
            for j in range(1 if i in (0, n) else 2 * n):
                ph = math.pi * j / n
                coords = np.array([math.cos(theta), math.sin(theta) * math.cos(ph),
                                   math.sin(theta) * math.sin(ph)])
                m, J = hm.orient_by(m_float, fa.k_endo(coords @ s))
                h = AlmostHermitianStructure(m, J, name="scan")
                if hm.nijenhuis_residual(h) <= tol:
                    hits.append((orientation, coords))
    return hits


def kodaira_secondary() -> CatalogEntry:
    m = kodaira_secondary_manifold(exact=True)
    c = m.structure_constants
    _check("secondary [A3,A1]", -c[0, 2], _vec({2: Fraction(1, 2)}, True))
    return CatalogEntry("kodaira_secondary", kodaira_secondary_manifold(exact=False), {
        "complex": StructureSpec("complex", kodaira_secondary_complex, {"eps": 1, "exact": False},
                                 hm.HERMITIAN, True),
    }, description="secondary Kodaira surface, left-invariant data only",
        fixtures={"symplectic_rank": left_invariant_symplectic_dimension(m)})


# --- S^3 x S^1 ---------------------------------------------------------------------------

# xi_k(p) = L_k p on R^4
S3_GENERATORS = np.array([
    [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]],
    [[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]],
    [[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]],
])

# frame order oriented by the standard complex structure: (xi_1, d/dt, xi_2, xi_3)
S3XS1_ORDER = ("xi1", "dt", "xi2", "xi3")


def s3_fields(p) -> np.ndarray:
    return np.einsum("kab,b->ka", S3_GENERATORS, np.asarray(p)[:4])


def s3xs1_frame(p) -> np.ndarray:
    xi = s3_fields(p)
    out = np.zeros((4, 5))
    out[0, :4] = xi[0]
    out[1, 4] = 1.0
    out[2, :4] = xi[1]
    out[3, :4] = xi[2]
    return out


def s3xs1_frame_jacobian(p) -> np.ndarray:
    jac = np.zeros((4, 5, 5))
    jac[0, :4, :4] = S3_GENERATORS[0]
    jac[2, :4, :4] = S3_GENERATORS[1]
    jac[3, :4, :4] = S3_GENERATORS[2]
    return jac


def s3_brackets() -> dict:
    """[xi_i, xi_j] from the linear fields: [Ap, Bp] = (BA - AB)p."""
    out = {}
    L = S3_GENERATORS
    flat = L.reshape(3, -1).T
    for i in range(3):
        for j in range(i + 1, 3):
            comm = (L[j] @ L[i] - L[i] @ L[j]).ravel()
            coeffs = np.linalg.lstsq(flat, comm, rcond=None)[0]
            rounded = np.rint(coeffs).astype(int)
            if not np.array_equal(flat @ rounded, comm):
                raise FixtureMismatch("S^3 frame brackets are not a combination of the frame")
            out[(i + 1, j + 1)] = {k + 1: int(rounded[k]) for k in range(3) if rounded[k]}
    return out


def _s3xs1_structure_constants() -> np.ndarray:
    index = {1: 0, 2: 2, 3: 3}  # xi_k -> frame slot
    c = np.zeros((4, 4, 4), dtype=object)
    c[...] = Fraction(0)
    for (i, j), combo in s3_brackets().items():
        for k, coeff in combo.items():
            c[index[i], index[j], index[k]] = Fraction(coeff)
            c[index[j], index[i], index[k]] = Fraction(-coeff)
    return c


def _s3xs1_sampler(rng: np.random.Generator) -> np.ndarray:
    p = rng.normal(size=4)
    return np.concatenate([p / np.linalg.norm(p), [rng.uniform(0, 2 * math.pi)]])


def _s3xs1_retract(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.concatenate([q[:4] / np.linalg.norm(q[:4]), q[4:]])


def s3xs1_manifold(exact: bool = True) -> FramedManifold:
    c = _s3xs1_structure_constants()
    if not exact:
        c = c.astype(float)
    return FramedManifold("s3xs1", 5, frame=s3xs1_frame, structure_constants=c,
                          frame_jacobian=s3xs1_frame_jacobian,
                          domain=lambda p: abs(float(np.linalg.norm(p[:4])) - 1.0) <= 1e-3,
                          sampler=_s3xs1_sampler, retract=_s3xs1_retract)


def s3xs1_hopf(exact: bool = False) -> AlmostHermitianStructure:
    """Standard complex structure: xi_1 -> d/dt, xi_2 -> xi_3."""
    return AlmostHermitianStructure(s3xs1_manifold(exact), standard_J(exact), name="J_hopf",
                                    declared_class=hm.HERMITIAN)


def s3xs1() -> CatalogEntry:
    m = s3xs1_manifold(exact=False)
    rng = np.random.default_rng(7)
    for _ in range(5):
        p = m.sample_point(rng)
        xi = s3_fields(p)
        _check("xi orthonormal", xi @ xi.T, np.eye(3))
        _check("xi tangent", xi @ p[:4], np.zeros(3))
        c_fd = fm.structure_functions(
            FramedManifold("s3xs1_fd", 5, frame=s3xs1_frame, domain=m.domain), p)
        if not _is_zero(c_fd - np.asarray(m.structure_constants, dtype=float), 1e-8):
            raise FixtureMismatch("s3xs1 bracket constants disagree with finite differences")
    return CatalogEntry("s3xs1", m, {
        "hopf": StructureSpec("hopf", s3xs1_hopf, {"exact": False}, hm.HERMITIAN, True)},
        description="Hopf surface S^3 x S^1, product metric, standard complex structure")


# --- fixture reports --------------------------------------------------------------------


S3_BRACKETS = {(1, 2): {3: -2}, (1, 3): {2: 2}, (2, 3): {1: -2}}


def fixture_report(entry_id: str, seed: int = 0) -> list:
    """(label, residual, exact) for every regression table of an entry."""
    report: list = []
    if entry_id == "flat_r4":
        m = get("flat_r4").manifold
        check_connection_table(m, {}, "flat_r4", report=report)
    elif entry_id == "kodaira_primary":
        verify_kodaira_primary_fixtures(report=report)
        h = kodaira_hermitian(1)
        e3 = np.array([0.0, 0, 1, 0, 0, 0, 0])
        e1 = np.array([1.0, 0, 0, 0, 0, 0, 0])
        for t in (0.5, 1.0, 2.0):
            _check(f"pushforward A3 (t={t})",
                   pushforward_metric(h, t, np.zeros(4), [0, 0, 1], e3, e3), 1.0, report)
            _check(f"pushforward A1 at x=(0,0,1) (t={t})",
                   pushforward_metric(h, t, np.zeros(4), [0, 0, 1], e1, e1), 1.0 + t, report)
    elif entry_id == "kodaira_secondary":
        m = kodaira_secondary_manifold(exact=True)
        c = m.structure_constants
        _check("secondary [A1,A2]", c[0, 1], _vec({4: -2}, True), report)
        _check("secondary 2[A3,A1]", -2 * c[0, 2], _vec({2: 1}, True), report)
        _check("secondary 2[A3,A2]", -2 * c[1, 2], _vec({1: -1}, True), report)
        _check("secondary Jacobi", [Fraction(0)], [fm.jacobi_residual(c)], report)
    elif entry_id == "s3xs1":
        rng = np.random.default_rng(seed)
        found = s3_brackets()
        for key in sorted(S3_BRACKETS):
            i, j = key
            _check(f"S^3 [xi{i},xi{j}]", _vec(found.get(key, {}), True)[:3],
                   _vec(S3_BRACKETS[key], True)[:3], report)
        m = get("s3xs1").manifold
        for _ in range(5):
            p = m.sample_point(rng)
            xi = s3_fields(p)
            _check("xi orthonormal", xi @ xi.T, np.eye(3), report)
            _check("xi tangent", xi @ p[:4], np.zeros(3), report)
    else:
        raise KeyError(f"unknown catalog entry {entry_id!r}")
    return report


# --- pushforward metrics on M x S^2 --------------------------------------------------------


@dataclass(frozen=True)
class PushforwardMetricSample:
    p: tuple
    x: tuple
    first: tuple   # (X, P): X in frame components, P in R^3 tangent to S^2 at x
    second: tuple
    value: float


def reference_directions(h: AlmostHermitianStructure) -> np.ndarray:
    """Rows: the vectors the u-table is indexed by, in frame components
    (A_1..A_4 for J_eps, the frame itself otherwise)."""
    if set(h.params) == {"eps"}:
        return np.asarray(kodaira_A_directions(h.params["eps"]), float)
    return np.eye(4)


def u_table(h: AlmostHermitianStructure, x, p=None) -> np.ndarray:
    """u_i(x) for i = 1..4, from the printed tables where the structure has
    one, else from the Levi-Civita connection."""
    x = np.asarray(x, float)
    if set(h.params) == {"eps"}:
        return np.array(kodaira_hermitian_u(h.params["eps"], x), float)
    if set(h.params) == {"eps1", "eps2", "cos", "sin"}:
        q = h.params
        return np.array(kodaira_symplectic_u(q["eps1"], q["eps2"], float(q["cos"]),
                                             float(q["sin"]), x), float)
    return np.asarray(fiber_velocity_table(_float_manifold(h.manifold), x, p), float)


def _float_manifold(m: FramedManifold) -> FramedManifold:
    if m.structure_constants is None or not fa.is_exact(m.structure_constants):
        return m
    return FramedManifold(m.name, m.ambient_dim, frame=m.frame, frame_jacobian=m.frame_jacobian,
                          structure_constants=np.asarray(m.structure_constants, float),
                          domain=m.domain, sampler=m.sampler, retract=m.retract)


def _split_pair(v):
    v = np.asarray(v, float)
    if v.shape != (7,):
        raise ValueError("tangent vector must be X (4 frame components) followed by P (3)")
    return v[:4], v[4:]


def pushforward_metric(h: AlmostHermitianStructure, t: float, p, x, first, second,
                       route: str = "formula", tol: float = 1e-10) -> float:
    """h_t transported to M x S^2 by the frame s_1, s_2, s_3 of Lambda^2_+.

    ``route="formula"`` evaluates g(X, Y) + t <P - sum g(X, D_i) u_i, Q - ...>
    with the u-table; ``route="twistor"`` pulls X + P back to the twistor
    space through the chart and evaluates h_t there.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, float)
    if abs(x @ x - 1) > tol:
        raise ValueError("x must lie on the unit sphere")
    X, P = _split_pair(first)
    Y, Q = _split_pair(second)
    if abs(P @ x) > tol or abs(Q @ x) > tol:
        raise ValueError("P and Q must be tangent to S^2 at x")
    if route == "formula":
        D = reference_directions(h)
        u = u_table(h, x, p)
        a = P - (D @ X) @ u
        b = Q - (D @ Y) @ u
        return float(X @ Y + t * a @ b)
    if route == "twistor":
        m = _float_manifold(h.manifold)
        chart = tw.TwistorChart(m, t, p)
        z = np.concatenate([chart.u0, x])
        Fc = chart.frame_components(chart.u0)
        tau = tw.TwistorPoint.from_y(np.asarray(p, float), x)
        # frame components X -> chart components x with Fc.T x = X
        e1 = chart.from_chart(z, np.concatenate([np.linalg.solve(Fc.T, X), P]), tau)
        e2 = chart.from_chart(z, np.concatenate([np.linalg.solve(Fc.T, Y), Q]), tau)
        return float(tw.h_t(t, e1, e2))
    raise ValueError(f"unknown route {route!r}")


def horizontal_lift_images(h: AlmostHermitianStructure, p, x) -> np.ndarray:
    """S^2 parts of the images of D_1^h..D_4^h at sigma = sum x_k s_k."""
    m = _float_manifold(h.manifold)
    chart = tw.TwistorChart(m, 1.0, p)
    z = np.concatenate([chart.u0, np.asarray(x, float)])
    tau = tw.TwistorPoint.from_y(np.asarray(p, float), x)
    D = reference_directions(h)
    return np.array([chart.to_chart(z, tw.horizontal_lift(tau, D[i]))[4:] for i in range(4)])


def pushforward_samples(h: AlmostHermitianStructure, t: float, n: int, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        p = np.asarray(h.manifold.sample_point(rng), float)
        x = rng.normal(size=3)
        x /= np.linalg.norm(x)
        vecs = []
        for _ in range(2):
            P = rng.normal(size=3)
            vecs.append(np.concatenate([rng.normal(size=4), P - (P @ x) * x]))
        value = pushforward_metric(h, t, p, x, vecs[0], vecs[1])
        out.append(PushforwardMetricSample(tuple(p), tuple(x), tuple(vecs[0]), tuple(vecs[1]), value))
    return out


# --- auxiliary structures (not catalog entries) --------------------------------------------
# Used by the test suite to exercise the minimality criteria on examples
# where they fail.

SEMIDIRECT_D = ((0, 0, -2), (-1, -1, 1), (-1, 0, 0))


def semidirect_manifold(D=SEMIDIRECT_D, exact: bool = True) -> FramedManifold:
    """Lie algebra R^3 x_D R: [E_4, E_i] = sum_k D[k][i] E_k, i <= 3."""
    brackets = {}
    for i in range(3):
        combo = {k + 1: -D[k][i] for k in range(3) if D[k][i]}
        if combo:
            brackets[(i + 1, 4)] = combo
    return FramedManifold("semidirect", 4, structure_constants=_structure_constants(brackets, exact))


def semidirect_almost_kahler(exact: bool = False) -> AlmostHermitianStructure:
    """Left-invariant almost Kahler structure with alpha = -s_2 whose
    star-Ricci tensor is not symmetric (so Sigma_J is not minimal)."""
    m = semidirect_manifold(exact=exact)
    s = fa.s_basis(1)
    a = -fa.exact(s.s2) if exact else -s.s2.astype(float)
    J = fa.k_endo(a)
    return AlmostHermitianStructure(m, J, name="semidirect_ak", declared_class=hm.ALMOST_KAHLER)


def conformally_flat_hermitian(a=(0.3, -0.2, 0.1, 0.25),
                               Q=((0.4, 0.0, 0.3, 0.0), (0.0, -0.2, 0.0, 0.1),
                                  (0.3, 0.0, 0.0, 0.0), (0.0, 0.1, 0.0, 0.2))) -> AlmostHermitianStructure:
    """Metric e^{2f} (dx^2) on the cube [-1, 1]^4 with f = a.x + x.Qx/2 and
    the standard J.  The Lee form is 2 df; for generic symmetric Q the
    gradient of its length leaves span(df, J df), so Sigma_J is not minimal.
    (Radial Q = 2b I is a degenerate choice where it stays minimal.)"""
    a = np.asarray(a, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if not np.allclose(Q, Q.T):
        raise ValueError("Q must be symmetric")

    def f(p):
        p = np.asarray(p, float)
        return float(a @ p + 0.5 * p @ Q @ p)

    def df(p):
        return a + Q @ np.asarray(p, float)

    def frame(p):
        return math.exp(-f(p)) * np.eye(4)

    def jac(p):
        return -math.exp(-f(p)) * np.einsum("ia,b->iab", np.eye(4), df(p))

    m = FramedManifold("conformally_flat", 4, frame=frame, frame_jacobian=jac,
                       domain=lambda p: bool(np.all(np.abs(p) <= 1.0 + 1e-9)),
                       sampler=lambda rng: rng.uniform(-0.5, 0.5, size=4))
    return AlmostHermitianStructure(m, lambda p: standard_J(False), name="conformal_J",
                                    declared_class=hm.HERMITIAN)


_BUILDERS = {
    "flat_r4": flat_r4,
    "kodaira_primary": kodaira_primary,
    "kodaira_secondary": kodaira_secondary,
    "s3xs1": s3xs1,
}

_CACHE: dict = {}


def get(entry_id: str) -> CatalogEntry:
    if entry_id not in _BUILDERS:
        raise KeyError(f"unknown manifold {entry_id!r}; known: {list(MANIFOLD_IDS)}")
    if entry_id not in _CACHE:
        _CACHE[entry_id] = _BUILDERS[entry_id]()
    return _CACHE[entry_id]


def all_entries() -> list:
    return [get(i) for i in MANIFOLD_IDS]

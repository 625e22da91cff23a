"""Almost Hermitian structures over a :class:`FramedManifold`.

``J`` is a 4x4 matrix of frame components (column = input vector), either
constant in the frame (left-invariant data) or a callable of the point.
The frame of the manifold must be oriented by ``J``: the Kahler bivector
``alpha`` is then self-dual.  :func:`orient_by` re-frames a manifold when
``J`` induces the opposite orientation.

Sign conventions fixed here:

* ``Omega(X, Y) = <JX, Y>``; 2-forms are 4x4 antisymmetric matrices.
* ``d`` of a k-form uses the determinant convention, e.g.
  ``dtheta(X, Y) = X theta(Y) - Y theta(X) - theta([X, Y])``.
* The codifferential is ``deltaOmega(X) = -sum_i (nabla_{E_i} Omega)(E_i, X)``
  and the Lee form is ``theta = -deltaOmega o J``; with these choices the
  primary Kodaira structure J_eps has ``theta(A_3) = -2 eps`` and every
  Hermitian structure satisfies ``dOmega = Omega ^ theta``.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import frame_algebra as fa
from . import frame_manifold as fm
from .frame_manifold import FramedManifold

CLASSIFY_TOL = 1e-9
CLASSIFY_SAMPLES = 64
STRUCTURE_TOL = 1e-12

KAHLER = "kahler"
HERMITIAN = "hermitian"
ALMOST_KAHLER = "almost_kahler"
GENERIC = "generic"

Matrix = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class LeeData:
    theta: np.ndarray
    B: np.ndarray
    norm2: float


def orient_by(manifold: FramedManifold, J) -> tuple[FramedManifold, np.ndarray]:
    """Return ``(manifold', J')`` with the frame oriented by the constant
    structure ``J``; the frame is changed by ``E_2 -> -E_2`` if needed."""
    J = np.asarray(J)
    alpha = fa.endo_to_bivector(J)
    if fa.is_self_dual(alpha):
        return manifold, J
    flip = np.diag([1, -1, 1, 1])
    return manifold.change_frame(flip), flip @ J @ flip


@dataclass(frozen=True, eq=False)
class AlmostHermitianStructure:
    manifold: FramedManifold
    J: Matrix
    name: str = "J"
    params: dict = field(default_factory=dict)
    declared_class: Optional[str] = None
    sample_seed: int = 0

    def __post_init__(self):
        rng = np.random.default_rng(self.sample_seed)
        points = [self.manifold.sample_point(rng) for _ in range(3 if self.left_invariant else 8)]
        for p in points:
            j = self.J_at(p)
            if fa.is_exact(j):
                ok = np.all(j @ j == -np.eye(4, dtype=int)) and np.all(j.T == -j)
            else:
                ok = (np.max(np.abs(j @ j + np.eye(4))) <= STRUCTURE_TOL
                      and np.max(np.abs(j.T + j)) <= STRUCTURE_TOL)
            if not ok:
                raise ValueError(f"{self.name}: J is not an orthogonal complex structure at {p}")
            if not fa.is_self_dual(fa.endo_to_bivector(j)):
                raise ValueError(f"{self.name}: frame is not oriented by J (use orient_by)")
        if self.declared_class is not None and self.declared_class != self.classification:
            raise ValueError(
                f"{self.name}: declared {self.declared_class}, computed {self.classification}")

    @property
    def left_invariant(self) -> bool:
        return self.manifold.constant_structure and not callable(self.J)

    def J_at(self, p) -> np.ndarray:
        return np.asarray(self.J(p) if callable(self.J) else self.J)

    def at(self, p) -> "PointGeometry":
        return geometry_at(self, tuple(np.asarray(p).tolist()))

    def sample_points(self, n: int = CLASSIFY_SAMPLES, seed: int = 0) -> list:
        rng = np.random.default_rng(seed)
        return [self.manifold.sample_point(rng) for _ in range(n)]

    @functools.cached_property
    def classification(self) -> str:
        integrable = is_integrable(self)
        symplectic = is_symplectic(self)
        if integrable and symplectic:
            return KAHLER
        if integrable:
            return HERMITIAN
        if symplectic:
            return ALMOST_KAHLER
        return GENERIC


@functools.lru_cache(maxsize=4096)
def _cached_geometry(h: AlmostHermitianStructure, key: tuple) -> "PointGeometry":
    return PointGeometry(h, np.array(key, dtype=object if any(
        not isinstance(v, float) for v in key) else float))


def geometry_at(h: AlmostHermitianStructure, p) -> "PointGeometry":
    if isinstance(p, tuple):
        return _cached_geometry(h, p)
    return PointGeometry(h, np.asarray(p))


class PointGeometry:
    """All pointwise data of ``(g, J)`` at a base point, computed lazily.

    Arrays are frame components; leading index ``i`` always stands for
    the direction ``E_i`` of differentiation.
    """

    def __init__(self, h: AlmostHermitianStructure, p):
        self.h = h
        self.m = h.manifold
        self.p = p if fa.is_exact(p) else np.asarray(p, dtype=float)

    def _derivative(self, attr: str) -> np.ndarray:
        return fm.frame_derivative(
            self.m, lambda q: getattr(PointGeometry(self.h, q), attr), self.p,
            constant=self.h.left_invariant)

    @functools.cached_property
    def c(self):
        return fm.structure_functions(self.m, self.p)

    @functools.cached_property
    def gamma(self):
        return fm.levi_civita(self.m, self.p)

    @functools.cached_property
    def omega(self):
        return fm.connection_matrices(self.gamma)

    @functools.cached_property
    def riemann(self):
        return fm.riemann(self.m, self.p)

    @functools.cached_property
    def ricci(self):
        return fm.ricci(self.m, self.p, self.riemann)

    @functools.cached_property
    def J(self):
        return self.h.J_at(self.p)

    @functools.cached_property
    def dJ(self):
        """dJ[i] = E_i(J) (componentwise derivative)."""
        return self._derivative("J")

    @functools.cached_property
    def kahler_form(self):
        return self.J.T

    @functools.cached_property
    def alpha(self):
        return fa.endo_to_bivector(self.J)

    @functools.cached_property
    def nabla_J(self):
        """nabla_J[i] = nabla_{E_i} J."""
        return np.array([self.dJ[i] + self.omega[i] @ self.J - self.J @ self.omega[i]
                         for i in range(4)])

    @functools.cached_property
    def nabla_alpha(self):
        """nabla_alpha[i] = nabla_{E_i} alpha (6 components)."""
        return np.array([fa.endo_to_bivector(self.nabla_J[i]) for i in range(4)])

    @functools.cached_property
    def second_nabla_alpha(self):
        """second[i, j] = nabla^2_{E_i E_j} alpha
        = nabla_{E_i} nabla_{E_j} alpha - nabla_{nabla_{E_i} E_j} alpha."""
        d = self._derivative("nabla_alpha")
        out = np.zeros((4, 4, 6), dtype=self.nabla_alpha.dtype)
        for i in range(4):
            for j in range(4):
                outer = d[i, j] + fa.derivation(self.omega[i], self.nabla_alpha[j])
                out[i, j] = outer - np.einsum("k,kn->n", self.gamma[i, j], self.nabla_alpha)
        return out

    @functools.cached_property
    def nijenhuis(self):
        """N[a, b] = N(E_a, E_b) = -[E_a,E_b] + [JE_a,JE_b] - J[E_a,JE_b] - J[JE_a,E_b]."""
        J, dJ, c = self.J, self.dJ, self.c
        br = c
        br_jj = (np.einsum("ia,ikb->abk", J, dJ) - np.einsum("ib,ika->abk", J, dJ)
                 + np.einsum("ia,jb,ijk->abk", J, J, c))
        br_xj = np.einsum("akb->abk", dJ) + np.einsum("jb,ajk->abk", J, c)
        br_jx = -np.einsum("bka->abk", dJ) + np.einsum("ia,ibk->abk", J, c)
        return -br + br_jj - np.einsum("kl,abl->abk", J, br_xj) - np.einsum("kl,abl->abk", J, br_jx)

    @functools.cached_property
    def nijenhuis_via_nabla(self):
        """N(X,Y) = (nabla_JX J)Y - (nabla_JY J)X - J(nabla_X J)Y + J(nabla_Y J)X."""
        J, nJ = self.J, self.nabla_J
        nJ_J = np.einsum("ia,ikb->abk", J, nJ)  # (nabla_{JE_a} J) E_b
        direct = np.einsum("akb->abk", nJ)  # (nabla_{E_a} J) E_b
        return (nJ_J - np.einsum("bak->abk", nJ_J) - np.einsum("kl,abl->abk", J, direct)
                + np.einsum("kl,bal->abk", J, direct))

    @functools.cached_property
    def d_kahler_form(self):
        """dOmega[a, b, c] via the bracket formula."""
        om = self.kahler_form
        dom = np.swapaxes(self.dJ, 1, 2)  # dom[i, a, b] = E_i(Omega(E_a, E_b))
        c = self.c
        out = np.zeros((4, 4, 4), dtype=object if fa.is_exact(om, c) else float)
        for a, b, e in itertools.product(range(4), repeat=3):
            out[a, b, e] = (dom[a, b, e] - dom[b, a, e] + dom[e, a, b]
                            - np.dot(c[a, b], om[:, e]) + np.dot(c[a, e], om[:, b])
                            - np.dot(c[b, e], om[:, a]))
        return out

    @functools.cached_property
    def d_kahler_form_via_nabla(self):
        """dOmega(X,Y,Z) = sum over cyclic (nabla_X Omega)(Y, Z)."""
        n_om = np.array([nj.T for nj in self.nabla_J])  # n_om[i, a, b] = (nabla_i Omega)(E_a, E_b)
        return (n_om + np.einsum("bca->abc", n_om) + np.einsum("cab->abc", n_om))

    @functools.cached_property
    def lee(self) -> LeeData:
        # theta(X) = sum_i (nabla_{E_i} Omega)(E_i, JX) = sum_i <(nabla_i J)E_i, JX>
        v = np.einsum("iki->k", self.nabla_J)
        theta = self.J.T @ v
        return LeeData(theta=theta, B=theta, norm2=np.dot(theta, theta))

    @property
    def theta(self):
        return self.lee.theta

    @property
    def B(self):
        return self.lee.B

    @functools.cached_property
    def nabla_B(self):
        """nabla_B[i] = nabla_{E_i} B."""
        dB = self._derivative("theta")
        return dB + np.einsum("ikj,j->ik", self.omega, self.B)

    @functools.cached_property
    def nabla_theta(self):
        """nabla_theta[i, j] = (nabla_{E_i} theta)(E_j)."""
        return self.nabla_B

    @functools.cached_property
    def d_theta(self):
        dth = self._derivative("theta")
        return dth - dth.T - np.einsum("abk,k->ab", self.c, self.theta)

    @functools.cached_property
    def star_ricci(self):
        """rho*(E_a, E_b) = sum_i <R(JE_i, E_a) JE_b, E_i>."""
        J = self.J
        return np.einsum("mi,nb,mani->ab", J, J, self.riemann)

    def s_omega(self, X, Y):
        J, ric, rs = self.J, self.ricci, self.star_ricci
        return Y @ ric @ (J @ X) - X @ ric @ (J @ Y) + 2 * (X @ rs @ (J @ Y))

    def s_omega_trace(self, X, Y):
        """S(Omega)(X,Y) from its defining trace, with R(Z,W) acting on
        Omega as a derivation."""
        om = self.kahler_form
        rm = self.riemann

        def r_omega(z, w, u, v):
            r = fm.curvature_endo(rm, fa.wedge(z, w))
            return -(r @ u) @ om @ v - u @ om @ (r @ v)

        eye = np.eye(4)
        return sum(r_omega(eye[i], Y, eye[i], X) - r_omega(eye[i], X, eye[i], Y) for i in range(4))

    @functools.cached_property
    def trace_second_nabla_alpha(self):
        sec = self.second_nabla_alpha
        return sum(sec[i, i] for i in range(4))


# --- operations on structures ------------------------------------------------


def alpha(h: AlmostHermitianStructure, p) -> np.ndarray:
    return h.at(p).alpha


def kahler_form(h: AlmostHermitianStructure, p) -> np.ndarray:
    return h.at(p).kahler_form


def nijenhuis(h: AlmostHermitianStructure, Y, Z, p) -> np.ndarray:
    return np.einsum("a,b,abk->k", Y, Z, h.at(p).nijenhuis)


def nijenhuis_on_bivector(g: "PointGeometry", a) -> np.ndarray:
    """N(a) for a bivector a, extended linearly from N(Y^Z) = N(Y, Z)."""
    return sum(a[n] * g.nijenhuis[i, j] for n, (i, j) in enumerate(fa.PAIRS))


def nijenhuis_on_bivector_float(nijenhuis, a) -> np.ndarray:
    """Same as :func:`nijenhuis_on_bivector` from a precomputed float tensor."""
    nij = np.asarray(nijenhuis, dtype=float)
    return sum(float(a[n]) * nij[i, j] for n, (i, j) in enumerate(fa.PAIRS))


def d_kahler_form(h: AlmostHermitianStructure, p) -> np.ndarray:
    return h.at(p).d_kahler_form


def _max_abs(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(max(abs(float(x)) for x in a.ravel()))


def nijenhuis_residual(h: AlmostHermitianStructure, n: int = CLASSIFY_SAMPLES) -> float:
    points = h.sample_points(1 if h.left_invariant else n)
    return max(_max_abs(h.at(p).nijenhuis) for p in points)


def d_kahler_residual(h: AlmostHermitianStructure, n: int = CLASSIFY_SAMPLES) -> float:
    points = h.sample_points(1 if h.left_invariant else n)
    return max(_max_abs(h.at(p).d_kahler_form) for p in points)


def integrability_residual_nabla(h: AlmostHermitianStructure, n: int = CLASSIFY_SAMPLES) -> float:
    """max |(nabla_X J)Y - (nabla_JX J)(JY)| over frame pairs and samples."""
    worst = 0.0
    for p in h.sample_points(1 if h.left_invariant else n):
        g = h.at(p)
        nJ_J = np.einsum("ia,ikl->akl", g.J, g.nabla_J)  # nabla_{JE_a} J
        diff = g.nabla_J - np.einsum("akl,lb->akb", nJ_J, g.J)
        worst = max(worst, _max_abs(diff))
    return worst


def is_integrable(h: AlmostHermitianStructure, tol: float = CLASSIFY_TOL) -> bool:
    by_bracket = nijenhuis_residual(h) <= tol
    by_nabla = integrability_residual_nabla(h) <= tol
    if by_bracket != by_nabla:
        raise ArithmeticError(f"{h.name}: Nijenhuis and nabla-J integrability tests disagree")
    return by_bracket


def is_symplectic(h: AlmostHermitianStructure, tol: float = CLASSIFY_TOL) -> bool:
    return d_kahler_residual(h) <= tol


def lee_form(h: AlmostHermitianStructure, p) -> LeeData:
    return h.at(p).lee


def nabla_alpha(h: AlmostHermitianStructure, X, p) -> np.ndarray:
    return np.asarray(X) @ h.at(p).nabla_alpha


def nabla_alpha_integrable(h: AlmostHermitianStructure, X, p) -> np.ndarray:
    """Closed form 1/2 (JX ^ B + X ^ JB), valid when J is integrable."""
    g = h.at(p)
    X = np.asarray(X)
    return fa.half(X, g.B) * (fa.wedge(g.J @ X, g.B) + fa.wedge(X, g.J @ g.B))


def nabla_alpha_symplectic_pairing(h: AlmostHermitianStructure, X, a, p):
    """<nabla_X alpha, a> = 1/4 <N(a), JX>, valid when dOmega = 0."""
    g = h.at(p)
    quarter = fa.half(a) * fa.half(a)
    return quarter * np.dot(nijenhuis_on_bivector(g, a), g.J @ np.asarray(X))


def second_nabla_alpha(h: AlmostHermitianStructure, X, Y, p) -> np.ndarray:
    return np.einsum("i,j,ijn->n", X, Y, h.at(p).second_nabla_alpha)


def second_nabla_alpha_integrable(h: AlmostHermitianStructure, X, Y, p) -> np.ndarray:
    """1/2 [(nabla_X J)Y ^ B + Y ^ (nabla_X J)B + JY ^ nabla_X B + Y ^ J nabla_X B]."""
    g = h.at(p)
    X = np.asarray(X)
    Y = np.asarray(Y)
    nXJ = np.einsum("i,ikl->kl", X, g.nabla_J)
    nXB = X @ g.nabla_B
    total = (fa.wedge(nXJ @ Y, g.B) + fa.wedge(Y, nXJ @ g.B)
             + fa.wedge(g.J @ Y, nXB) + fa.wedge(Y, g.J @ nXB))
    return fa.half(total) * total


def star_ricci(h: AlmostHermitianStructure, p) -> np.ndarray:
    return h.at(p).star_ricci


def s_omega(h: AlmostHermitianStructure, X, Y, p):
    return h.at(p).s_omega(np.asarray(X), np.asarray(Y))


def type_11_residual(two_form, h: AlmostHermitianStructure, p) -> float:
    """max over frame pairs of |beta(X, Y) - beta(JX, JY)|."""
    J = h.at(p).J
    beta = np.asarray(two_form)
    return _max_abs(beta - J.T @ beta @ J)


def is_type_11(two_form, h: AlmostHermitianStructure, p, tol: float = CLASSIFY_TOL) -> bool:
    return type_11_residual(two_form, h, p) <= tol


def scaled_lee_two_form(h: AlmostHermitianStructure, t: float, p) -> np.ndarray:
    """d( theta / sqrt(8 + 2 t |theta|^2) ) by the frame exterior derivative."""
    if t <= 0:
        raise ValueError("t must be positive")
    m = h.manifold

    def scaled(q):
        g = geometry_at(h, q)
        return np.asarray(g.theta, dtype=float) / np.sqrt(8 + 2 * t * float(g.lee.norm2))

    g = h.at(p)
    val = scaled(g.p)
    d = fm.frame_derivative(m, scaled, g.p, constant=h.left_invariant)
    c = np.asarray(g.c, dtype=float)
    return d - d.T - np.einsum("abk,k->ab", c, val)


def scaled_lee_two_form_expanded(h: AlmostHermitianStructure, t: float, p) -> np.ndarray:
    """(dtheta + theta ^ d ln sqrt(8 + 2t|theta|^2)) / sqrt(8 + 2t|theta|^2)."""
    g = h.at(p)
    theta = np.asarray(g.theta, dtype=float)
    u = 8 + 2 * t * float(g.lee.norm2)
    d_norm2 = 2 * np.asarray(g.nabla_theta, dtype=float) @ theta
    d_log = 0.5 * (2 * t * d_norm2) / u
    form = np.asarray(g.d_theta, dtype=float) + fa.two_form_from_covectors(theta, d_log)
    return form / np.sqrt(u)


def hermitian_trace_form(h: AlmostHermitianStructure, t: float, p) -> np.ndarray:
    """1/2 (dtheta + theta ^ d ln sqrt(8 + 2t|theta|^2)) as a 2-form."""
    g = h.at(p)
    u = 8 + 2 * t * float(g.lee.norm2)
    return 0.5 * np.sqrt(u) * scaled_lee_two_form_expanded(h, t, p)

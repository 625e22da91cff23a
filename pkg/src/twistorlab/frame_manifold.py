"""Four-manifolds presented by an oriented orthonormal frame.

A :class:`FramedManifold` lives in an ambient coordinate space of
dimension ``n >= 4`` (4 for a chart of R^4, 5 for S^3 x S^1 embedded in
R^4 x R).  The frame evaluator returns a ``4 x n`` matrix whose rows are
the ambient components of ``E_1..E_4``.  Everything downstream works with
frame components at a point.

Curvature follows the convention ``R(X, Y) = nabla_[X,Y] - [nabla_X, nabla_Y]``,
so ``<R(X, Y)X, Y>`` is the sectional curvature of the plane ``X^Y``.

Index conventions (0-based arrays):

* ``c[i, j, k] = <[E_i, E_j], E_k>``
* ``gamma[i, j, k] = <nabla_{E_i} E_j, E_k>``
* ``riemann[i, j, k, l] = <R(E_i, E_j) E_k, E_l>``
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import frame_algebra as fa

Field = Callable[[np.ndarray], np.ndarray]

FD_STEP = 1e-5
JACOBI_TOL = 1e-12


class ChartDomainError(ValueError):
    pass


@dataclass(frozen=True)
class FramedManifold:
    """A chart with an oriented orthonormal frame field.

    Exactly one of ``structure_constants``, ``structure`` or the frame
    itself (finite-difference fallback) supplies the bracket data.
    ``frame_jacobian(p)[i, a, b]`` is ``d E_i^a / d x_b``; when absent it
    is obtained by central differences.  ``retract`` maps ambient points
    near the manifold onto it (needed for charts when ``ambient_dim > 4``).
    """

    name: str
    ambient_dim: int
    frame: Optional[Callable[[np.ndarray], np.ndarray]] = None
    structure_constants: Optional[np.ndarray] = None
    structure: Optional[Callable[[np.ndarray], np.ndarray]] = None
    frame_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: Optional[Callable[[np.ndarray], bool]] = None
    sampler: Optional[Callable[[np.random.Generator], np.ndarray]] = None
    retract: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fd_step: float = FD_STEP

    def __post_init__(self):
        c = self.structure_constants
        if c is not None:
            c = np.asarray(c)
            if c.shape != (4, 4, 4):
                raise ValueError("structure constants must have shape (4, 4, 4)")
            if not _allclose(c, -np.swapaxes(c, 0, 1), 0.0):
                raise ValueError("structure constants must be antisymmetric in i, j")
            residual = jacobi_residual(c)
            if residual > JACOBI_TOL:
                raise ValueError(f"Jacobi identity fails (residual {residual:.3g})")

    @property
    def constant_structure(self) -> bool:
        return self.structure_constants is not None

    def check_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float) if not fa.is_exact(p) else np.asarray(p)
        if p.shape != (self.ambient_dim,):
            raise ChartDomainError(f"{self.name}: point must have {self.ambient_dim} coordinates")
        if self.domain is not None and not self.domain(p):
            raise ChartDomainError(f"{self.name}: point {p} outside chart domain")
        return p

    def sample_point(self, rng: np.random.Generator) -> np.ndarray:
        if self.sampler is not None:
            return self.sampler(rng)
        return rng.uniform(-1.0, 1.0, size=self.ambient_dim)

    def frame_matrix(self, p) -> np.ndarray:
        if self.frame is None:
            raise NotImplementedError(f"{self.name}: no coordinate realization of the frame")
        return np.asarray(self.frame(np.asarray(p)))

    def change_frame(self, transform, name: Optional[str] = None) -> "FramedManifold":
        """Manifold with the frame ``E'_i = sum_j P_ij E_j`` for a constant
        orthogonal ``P`` (used to re-orient or adapt the frame)."""
        P = np.asarray(transform)
        if not _allclose(P @ P.T, np.eye(4, dtype=int), 1e-12):
            raise ValueError("frame change must be orthogonal")
        base_frame = self.frame
        changes = {"name": name or self.name}
        if base_frame is not None:
            changes["frame"] = lambda p: P @ base_frame(p)
        if self.structure_constants is not None:
            changes["structure_constants"] = np.einsum(
                "ia,jb,kc,abc->ijk", P, P, P, np.asarray(self.structure_constants))
        if self.structure is not None:
            base_structure = self.structure
            changes["structure"] = lambda p: np.einsum(
                "ia,jb,kc,abc->ijk", P, P, P, base_structure(p))
        if self.frame_jacobian is not None:
            base_jac = self.frame_jacobian
            changes["frame_jacobian"] = lambda p: np.einsum("ij,jab->iab", P, base_jac(p))
        return dataclasses.replace(self, **changes)


def local_chart(m: FramedManifold, p0):
    """Coordinates ``u`` in R^4 around ``p0``: returns ``(phi, u0)`` with
    ``phi(u0) = p0``.  The identity when the ambient space is a 4-chart,
    otherwise ``u -> retract(p0 + sum u_i E_i(p0))`` with ``u0 = 0``."""
    p0 = np.asarray(p0, dtype=float)
    if m.ambient_dim == 4 and m.retract is None:
        return (lambda u: np.asarray(u, dtype=float)), p0.copy()
    if m.retract is None:
        raise ValueError(f"{m.name}: no retraction, cannot build a chart")
    frame0 = m.frame_matrix(p0)
    return (lambda u: m.retract(p0 + np.asarray(u, dtype=float) @ frame0)), np.zeros(4)


def chart_frame_components(m: FramedManifold, phi, u, step: float = FD_STEP,
                           identity: bool = False) -> np.ndarray:
    """Fc[a, i]: frame components of the coordinate field d/du_a at phi(u)."""
    u = np.asarray(u, dtype=float)
    q = phi(u)
    if identity:
        return _to_frame(m.frame_matrix(q), np.eye(4))
    cols = np.zeros((4, m.ambient_dim))
    for a in range(4):
        du = np.zeros(4)
        du[a] = step
        cols[a] = (phi(u + du) - phi(u - du)) / (2 * step)
    return _to_frame(m.frame_matrix(q), cols)


def _allclose(a, b, tol) -> bool:
    diff = np.asarray(a) - np.asarray(b)
    if diff.dtype == object:
        return all(abs(x) <= tol for x in diff.ravel())
    return bool(np.max(np.abs(diff), initial=0.0) <= tol)


def jacobi_residual(c) -> float:
    """Max violation of the Jacobi identity for constant structure c_ijk."""
    c = np.asarray(c)
    # [[E_i,E_j],E_k] = c_ijm c_mkn E_n
    t = np.einsum("ijm,mkn->ijkn", c, c)
    cyc = t + np.einsum("jkin->ijkn", t) + np.einsum("kijn->ijkn", t)
    if cyc.dtype == object:
        return float(max(abs(x) for x in cyc.ravel()))
    return float(np.max(np.abs(cyc)))


def _frame_jacobian(m: FramedManifold, p) -> np.ndarray:
    if m.frame_jacobian is not None:
        return np.asarray(m.frame_jacobian(p))
    h = m.fd_step
    n = m.ambient_dim
    jac = np.zeros((4, n, n))
    for b in range(n):
        step = np.zeros(n)
        step[b] = h
        jac[:, :, b] = (m.frame_matrix(p + step) - m.frame_matrix(p - step)) / (2 * h)
    return jac


def _to_frame(frame: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Frame components of ambient vectors (the last axis of ``v``)."""
    coeffs, *_ = np.linalg.lstsq(frame.T, np.moveaxis(v, -1, 0).reshape(frame.shape[1], -1),
                                 rcond=None)
    return np.moveaxis(coeffs.reshape((4,) + v.shape[:-1]), 0, -1)


def structure_functions(m: FramedManifold, p) -> np.ndarray:
    """c[i, j, k] = <[E_i, E_j], E_k> at ``p``."""
    if m.structure_constants is not None:
        return np.asarray(m.structure_constants)
    p = m.check_point(p)
    if m.structure is not None:
        return np.asarray(m.structure(p))
    frame = m.frame_matrix(p)
    jac = _frame_jacobian(m, p)
    # [E_i, E_j]^a = E_i^b d_b E_j^a - E_j^b d_b E_i^a
    d = np.einsum("ib,jab->ija", frame, jac)
    brackets = d - np.swapaxes(d, 0, 1)
    return _to_frame(frame, brackets)


def levi_civita(m: FramedManifold, p) -> np.ndarray:
    """Connection coefficients gamma[i, j, k] = <nabla_{E_i} E_j, E_k>.

    Koszul formula in an orthonormal frame:
    2 gamma_ijk = c_ijk - c_ikj - c_jki.
    """
    c = structure_functions(m, p)
    g = c - np.einsum("ikj->ijk", c) - np.einsum("jki->ijk", c)
    return fa.half(c) * g


def connection_matrices(gamma) -> np.ndarray:
    """omega[i] is the matrix of Y -> nabla_{E_i} Y on constant-component Y."""
    return np.transpose(np.asarray(gamma), (0, 2, 1))


def frame_derivative(m: FramedManifold, field: Field, p, constant: bool = False) -> np.ndarray:
    """``D[i] = E_i(f)(p)`` for a field of frame components, by central
    differences along the ambient direction of ``E_i``."""
    value = np.asarray(field(p))
    if constant:
        return np.zeros((4,) + value.shape, dtype=value.dtype)
    p = np.asarray(p, dtype=float)
    frame = m.frame_matrix(p)
    h = m.fd_step
    out = np.zeros((4,) + value.shape)
    for i in range(4):
        out[i] = (np.asarray(field(p + h * frame[i])) - np.asarray(field(p - h * frame[i]))) / (2 * h)
    return out


def connection_derivative(m: FramedManifold, p) -> np.ndarray:
    """dgamma[l, i, j, k] = E_l(gamma_ijk)."""
    return frame_derivative(m, lambda q: levi_civita(m, q), p, constant=m.constant_structure)


def riemann(m: FramedManifold, p) -> np.ndarray:
    """riemann[i, j, k, l] = <R(E_i, E_j) E_k, E_l>."""
    c = structure_functions(m, p)
    gam = levi_civita(m, p)
    dgam = connection_derivative(m, p)
    r = np.einsum("ijm,mkl->ijkl", c, gam)
    r = r - dgam + np.swapaxes(dgam, 0, 1)
    quad = np.einsum("jkm,iml->ijkl", gam, gam)
    r = r - quad + np.swapaxes(quad, 0, 1)
    return r


def curvature(m: FramedManifold, X, Y, Z, p, rm=None) -> np.ndarray:
    """R(X, Y)Z for vectors given by frame components at ``p``."""
    rm = riemann(m, p) if rm is None else rm
    return np.einsum("i,j,k,ijkl->l", X, Y, Z, rm)


def curvature_endo(rm, a) -> np.ndarray:
    """R(a) as a 4x4 matrix, extended linearly from R(X^Y) = R(X, Y)."""
    a = np.asarray(a)
    out = 0
    for n, (i, j) in enumerate(fa.PAIRS):
        out = out + a[n] * np.asarray(rm)[i, j].T
    return np.asarray(out)


def curvature_derivation(rm, a, b) -> np.ndarray:
    """R(a)b: the curvature endomorphism R(a) acting on the bivector b."""
    return fa.derivation(curvature_endo(rm, a), b)


def curvature_on_bivectors(m: FramedManifold, p, rm=None) -> np.ndarray:
    """6x6 matrix of the curvature operator with
    <Rop(X^Y), Z^T> = <R(X, Y)Z, T>, acting on PAIRS components."""
    rm = riemann(m, p) if rm is None else rm
    out = np.zeros((6, 6), dtype=np.asarray(rm).dtype)
    for col, (i, j) in enumerate(fa.PAIRS):
        for row, (k, l) in enumerate(fa.PAIRS):
            out[row, col] = 2 * rm[i, j, k, l]
    return out


def apply_curvature_operator(rop, a) -> np.ndarray:
    return np.asarray(rop) @ np.asarray(a)


def nabla_vector(m: FramedManifold, X, Y, p, constant: bool = False) -> np.ndarray:
    """nabla_X Y with X a vector at p and Y a field (callable) or constant
    frame components."""
    gam = levi_civita(m, p)
    omega = connection_matrices(gam)
    if callable(Y):
        dY = frame_derivative(m, Y, p, constant=constant)
        y = np.asarray(Y(p))
    else:
        y = np.asarray(Y)
        dY = np.zeros((4,) + y.shape, dtype=y.dtype)
    return np.einsum("i,ik->k", X, dY) + np.einsum("i,ikj,j->k", X, omega, y)


def nabla_bivector_field(m: FramedManifold, X, s, p, constant: bool = False) -> np.ndarray:
    """nabla_X s for a bivector field ``s`` (callable or constant frame
    components); Leibniz rule over wedge through the connection matrices."""
    gam = levi_civita(m, p)
    omega = connection_matrices(gam)
    if callable(s):
        ds = frame_derivative(m, s, p, constant=constant)
        sp = np.asarray(s(p))
    else:
        sp = np.asarray(s)
        ds = np.zeros((4, 6), dtype=sp.dtype)
    out = np.einsum("i,ik->k", X, ds)
    for i in range(4):
        if X[i] != 0:
            out = out + X[i] * fa.derivation(omega[i], sp)
    return out


def ricci(m: FramedManifold, p, rm=None) -> np.ndarray:
    """Ricci(X, Y) = sum_i <R(E_i, X)E_i, Y>; positive on round spheres."""
    rm = riemann(m, p) if rm is None else rm
    return np.einsum("iaib->ab", rm)


def scalar_curvature(m: FramedManifold, p, rm=None):
    return np.trace(ricci(m, p, rm))


def torsion_residual(m: FramedManifold, p) -> float:
    gam = np.asarray(levi_civita(m, p), dtype=float)
    c = np.asarray(structure_functions(m, p), dtype=float)
    # nabla_{E_i}E_j - nabla_{E_j}E_i - [E_i, E_j]
    t = gam - np.swapaxes(gam, 0, 1) - c
    metric = gam + np.swapaxes(gam, 1, 2)
    return float(max(np.max(np.abs(t)), np.max(np.abs(metric))))


def coordinate_christoffel(m: FramedManifold, x) -> np.ndarray:
    """Christoffel symbols ``ch[c, a, b]`` of the chart metric ``g_ab`` for a
    manifold whose ambient space is a 4-dimensional chart.

    Independent of the frame Koszul route: the metric is
    ``g = F^-1 F^-T`` with ``F`` the frame matrix, and its first
    derivatives come from the frame Jacobian.
    """
    if m.ambient_dim != 4:
        raise ValueError("coordinate Christoffels need a 4-dimensional chart")
    x = np.asarray(x, dtype=float)
    F = m.frame_matrix(x)
    Finv = np.linalg.inv(F)
    jac = _frame_jacobian(m, x)
    # d_c F^-1 = -F^-1 (d_c F) F^-1 ; g = F^-1 F^-T
    dFinv = -np.einsum("ai,ijc,jb->abc", Finv, jac, Finv)
    dg = np.einsum("aic,bi->abc", dFinv, Finv) + np.einsum("ai,bic->abc", Finv, dFinv)
    ginv = F.T @ F
    # lower[c, a, b] = 1/2 (d_a g_cb + d_b g_ca - d_c g_ab); dg[a, b, c] = d_c g_ab
    lower = 0.5 * (np.einsum("cba->cab", dg) + np.einsum("cab->cab", dg) - np.einsum("abc->cab", dg))
    return np.einsum("dc,cab->dab", ginv, lower)


def coordinate_riemann_fd(m: FramedManifold, x, step: float = FD_STEP) -> np.ndarray:
    """Frame components <R(E_i,E_j)E_k,E_l> obtained by central-differencing
    the chart Christoffel symbols (finite-difference oracle for
    :func:`riemann`)."""
    x = np.asarray(x, dtype=float)
    ch = coordinate_christoffel(m, x)
    dch = np.zeros((4, 4, 4, 4))  # dch[e, d, a, b] = d_e ch[d, a, b]
    for e in range(4):
        dx = np.zeros(4)
        dx[e] = step
        dch[e] = (coordinate_christoffel(m, x + dx) - coordinate_christoffel(m, x - dx)) / (2 * step)
    # standard R^d_{c a b} = d_a Gam^d_{bc} - d_b Gam^d_{ac} + Gam^d_{ae} Gam^e_{bc} - Gam^d_{be} Gam^e_{ac}
    std = (np.einsum("adbc->dcab", dch) - np.einsum("bdac->dcab", dch)
           + np.einsum("dae,ebc->dcab", ch, ch) - np.einsum("dbe,eac->dcab", ch, ch))
    F = m.frame_matrix(x)
    g = np.linalg.inv(F) @ np.linalg.inv(F).T
    # sign convention: R(X,Y)Z = -R_std(X,Y)Z ; <R(E_i,E_j)E_k,E_l>
    vec = -np.einsum("dcab,ia,jb,kc->ijkd", std, F, F, F)
    return np.einsum("ijkd,de,le->ijkl", vec, g, F)

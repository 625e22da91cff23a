"""The positive twistor space Z_+ of a framed four-manifold.

A point of Z_+ is a unit self-dual bivector ``sigma`` at a base point, a
tangent vector is a pair (horizontal base vector X, vertical self-dual V
orthogonal to sigma) standing for ``X^h + V``.  The metric is

    h_t(X^h + V, Y^h + W) = g(X, Y) + t <V, W>.

The Levi-Civita data below are the closed formulas

    D_{X^h} Y^h = (nabla_X Y)^h + 1/2 R(X^Y) tau
    D_V X^h     = -t/2 (R(tau x V) X)^h

and :class:`TwistorChart` recomputes them from scratch: it writes h_t in
the coordinates (u, y) of Lambda^2_+ (base chart coordinates and the
components y_k = <tau, s_k>), differentiates the metric numerically and
projects to the unit sphere bundle.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import frame_algebra as fa
from . import frame_manifold as fm
from .frame_manifold import FramedManifold

UNIT_TOL = 1e-10
ORACLE_STEP = 1e-4
ORACLE_TOL = 1e-6

VectorField = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


class StepSizeError(ArithmeticError):
    """Finite differences at two step sizes disagree beyond tolerance."""


@dataclass(frozen=True, eq=False)
class TwistorPoint:
    p: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma)
        if sigma.shape != (6,):
            raise ValueError("sigma must be a bivector (6 components)")
        if not fa.is_self_dual(sigma, UNIT_TOL):
            raise ValueError("sigma must be self-dual")
        if abs(float(fa.inner(sigma, sigma)) - 1.0) > UNIT_TOL:
            raise ValueError("sigma must be a unit bivector")

    @property
    def y(self) -> np.ndarray:
        """Fiber coordinates y_k = <sigma, s_k^+>."""
        return fa.sd_coords(self.sigma)

    @classmethod
    def from_y(cls, p, y) -> "TwistorPoint":
        return cls(np.asarray(p), fa.from_sd_coords(y))


@dataclass(frozen=True, eq=False)
class TwistorTangent:
    point: TwistorPoint
    horizontal: np.ndarray
    vertical: np.ndarray

    def __post_init__(self):
        if np.asarray(self.horizontal).shape != (4,) or np.asarray(self.vertical).shape != (6,):
            raise ValueError("tangent vector needs 4 horizontal and 6 vertical components")
        off = abs(float(fa.inner(self.vertical, self.point.sigma)))
        scale = max(1.0, fa.norm(self.vertical)) if not fa.is_exact(self.vertical) else 1.0
        if off > UNIT_TOL * scale:
            raise ValueError(f"vertical part not orthogonal to sigma (<V, sigma> = {off:.3g})")
        if not fa.is_self_dual(self.vertical, UNIT_TOL):
            raise ValueError("vertical part must be self-dual")

    def __add__(self, other: "TwistorTangent") -> "TwistorTangent":
        return TwistorTangent(self.point, self.horizontal + other.horizontal,
                              self.vertical + other.vertical)

    def __sub__(self, other: "TwistorTangent") -> "TwistorTangent":
        return self + (-1.0) * other

    def __rmul__(self, c) -> "TwistorTangent":
        return TwistorTangent(self.point, c * np.asarray(self.horizontal),
                              c * np.asarray(self.vertical))

    def coords(self) -> np.ndarray:
        """(X, V in s-coordinates) as a 7-vector."""
        return np.concatenate([np.asarray(self.horizontal, float),
                               np.asarray(fa.sd_coords(self.vertical), float)])


def tangent_from_coords(tau: TwistorPoint, v) -> TwistorTangent:
    v = np.asarray(v, dtype=float)
    return TwistorTangent(tau, v[:4], fa.from_sd_coords(v[4:]))


def horizontal_lift(tau: TwistorPoint, X) -> TwistorTangent:
    X = np.asarray(X)
    return TwistorTangent(tau, X, np.zeros(6, dtype=X.dtype))


def vertical_vector(tau: TwistorPoint, V) -> TwistorTangent:
    V = np.asarray(V)
    return TwistorTangent(tau, np.zeros(4, dtype=V.dtype), V)


def project_vertical(tau: TwistorPoint, V) -> np.ndarray:
    """Orthogonal projection of a self-dual bivector onto V_tau = sigma-perp."""
    sigma = tau.sigma
    return np.asarray(V) - fa.inner(V, sigma) * sigma


def h_t(t, u: TwistorTangent, v: TwistorTangent):
    if t <= 0:
        raise ValueError("t must be positive")
    if u.point is not v.point and not (np.array_equal(u.point.p, v.point.p)
                                       and np.array_equal(u.point.sigma, v.point.sigma)):
        raise ValueError("tangent vectors at different points")
    return np.dot(u.horizontal, v.horizontal) + t * fa.inner(u.vertical, v.vertical)


def gram_matrix(t, vectors) -> np.ndarray:
    return np.array([[h_t(t, a, b) for b in vectors] for a in vectors])


# --- closed formulas ------------------------------------------------------------------------


def _field_at(Y: VectorField, p) -> np.ndarray:
    return np.asarray(Y(p)) if callable(Y) else np.asarray(Y)


def _nabla(m: FramedManifold, X, Y: VectorField, p) -> np.ndarray:
    return fm.nabla_vector(m, X, Y, p, constant=not callable(Y))


def _rm(m: FramedManifold, p, rm):
    return fm.riemann(m, p) if rm is None else rm


def _checked_vertical(tau: TwistorPoint, V, label: str) -> np.ndarray:
    off = abs(float(fa.inner(V, tau.sigma)))
    if off > UNIT_TOL * max(1.0, float(np.max(np.abs(np.asarray(V, float))))):
        raise ArithmeticError(f"{label}: curvature term not orthogonal to tau ({off:.3g})")
    return project_vertical(tau, V)


def bracket_h_h(m: FramedManifold, X: VectorField, Y: VectorField, tau: TwistorPoint,
                rm=None) -> TwistorTangent:
    """[X^h, Y^h]_tau = [X, Y]^h + R(X^Y) tau."""
    p = tau.p
    x, y = _field_at(X, p), _field_at(Y, p)
    br = _nabla(m, x, Y, p) - _nabla(m, y, X, p)
    vert = fm.curvature_derivation(_rm(m, p, rm), fa.wedge(x, y), tau.sigma)
    return TwistorTangent(tau, br, _checked_vertical(tau, vert, "bracket_h_h"))


def d_hh(m: FramedManifold, X: VectorField, Y: VectorField, tau: TwistorPoint,
         rm=None) -> TwistorTangent:
    """D_{X^h} Y^h = (nabla_X Y)^h + 1/2 R(X^Y) tau."""
    p = tau.p
    x, y = _field_at(X, p), _field_at(Y, p)
    vert = fm.curvature_derivation(_rm(m, p, rm), fa.wedge(x, y), tau.sigma)
    return TwistorTangent(tau, _nabla(m, x, Y, p),
                          fa.half(vert) * _checked_vertical(tau, vert, "d_hh"))


def d_vh(m: FramedManifold, V, X, tau: TwistorPoint, t, rm=None) -> TwistorTangent:
    """D_V X^h = H(D_{X^h} V) = -t/2 (R(tau x V) X)^h, purely horizontal."""
    if t <= 0:
        raise ValueError("t must be positive")
    V = np.asarray(V)
    if abs(float(fa.inner(V, tau.sigma))) > UNIT_TOL:
        raise ValueError("V must be orthogonal to tau")
    x = _field_at(X, tau.p)
    r = fm.curvature_endo(_rm(m, tau.p, rm), fa.cross(tau.sigma, V))
    return horizontal_lift(tau, -fa.half(r) * t * (r @ x))


def curvature_on_fiber(m: FramedManifold, X, Y, tau: TwistorPoint, rm=None) -> np.ndarray:
    """R(X^Y) tau, the vertical part of the bracket of horizontal lifts."""
    return fm.curvature_derivation(_rm(m, tau.p, rm), fa.wedge(X, Y), tau.sigma)


# --- finite-difference oracle in the (u, y) chart -----------------------------------------


class TwistorChart:
    """Coordinates (u_1..u_4, y_1..y_3) on Lambda^2_+ over a base chart.

    In these coordinates the horizontal lift of a base vector with
    u-components x is ``x^a d/du_a - y_j <nabla_x s_j, s_k> d/dy_k`` and h_t
    extends to all of Lambda^2_+ as

        G(x + w, x' + w') = g(x, x') + t (w + y.omega(x)) . (w' + y.omega(x'))

    with ``omega(x)[j, k] = <nabla_x s_j, s_k>``.  The unit sphere bundle
    {|y| = 1} sits inside with unit normal ``y.d/dy / sqrt(t)``.
    """

    def __init__(self, m: FramedManifold, t: float, p0, step: float = ORACLE_STEP):
        if t <= 0:
            raise ValueError("t must be positive")
        self.m = m
        self.t = float(t)
        self.step = step
        self.identity = m.ambient_dim == 4 and m.retract is None
        self.phi, self.u0 = fm.local_chart(m, p0)
        self._s = fa.s_basis(1).as_array().astype(float)

    # chart data on the base
    def base_point(self, u) -> np.ndarray:
        return self.phi(u)

    def frame_components(self, u) -> np.ndarray:
        return fm.chart_frame_components(self.m, self.phi, u, identity=self.identity)

    def connection_forms(self, u) -> np.ndarray:
        """W[i, j, k] = <nabla_{E_i} s_j, s_k> at phi(u)."""
        omega = np.asarray(fm.connection_matrices(fm.levi_civita(self.m, self.phi(u))), float)
        W = np.zeros((4, 3, 3))
        for i in range(4):
            for j in range(3):
                W[i, j] = fa.sd_coords(fa.derivation(omega[i], self._s[j]))
        return W

    def _pieces(self, z):
        z = np.asarray(z, dtype=float)
        u, y = z[:4], z[4:]
        Fc = self.frame_components(u)
        W = self.connection_forms(u)
        # A[k, a] = sum_j y_j omega(d/du_a)[j, k]
        A = np.einsum("j,ai,ijk->ka", y, Fc, W)
        return Fc, W, A

    def metric(self, z) -> np.ndarray:
        Fc, _, A = self._pieces(z)
        G = np.zeros((7, 7))
        G[:4, :4] = Fc @ Fc.T + self.t * A.T @ A
        G[:4, 4:] = self.t * A.T
        G[4:, :4] = self.t * A
        G[4:, 4:] = self.t * np.eye(3)
        return G

    def christoffel(self, z, step: Optional[float] = None) -> np.ndarray:
        """gam[l, m, n] by central differences of the metric."""
        h = self.step if step is None else step
        z = np.asarray(z, dtype=float)
        dG = np.zeros((7, 7, 7))  # dG[m] = d_m G
        for mu in range(7):
            dz = np.zeros(7)
            dz[mu] = h
            dG[mu] = (self.metric(z + dz) - self.metric(z - dz)) / (2 * h)
        # lower[s, m, n] = 1/2 (d_m G_sn + d_n G_sm - d_s G_mn)
        lower = 0.5 * (np.einsum("msn->smn", dG) + np.einsum("nsm->smn", dG) - dG)
        return np.linalg.solve(self.metric(z), lower.reshape(7, -1)).reshape(7, 7, 7)

    def checked_christoffel(self, z, tol: float = ORACLE_TOL) -> np.ndarray:
        g1 = self.christoffel(z, self.step)
        g2 = self.christoffel(z, 2 * self.step)
        resid = float(np.max(np.abs(g1 - g2)))
        if resid > 10 * tol:
            raise StepSizeError(f"Christoffel symbols change by {resid:.3g} between steps "
                                f"{self.step:g} and {2 * self.step:g}")
        return g1

    # points and vectors
    def coords_of(self, tau: TwistorPoint) -> np.ndarray:
        if not np.allclose(self.phi(self.u0), np.asarray(tau.p, float), atol=1e-12):
            raise ValueError("twistor point is not over the chart origin")
        return np.concatenate([self.u0, np.asarray(tau.y, float)])

    def point_at(self, z) -> TwistorPoint:
        """Twistor point of chart coordinates, with y pushed to the unit sphere."""
        z = np.asarray(z, dtype=float)
        y = z[4:] / np.linalg.norm(z[4:])
        return TwistorPoint.from_y(self.phi(z[:4]), y)

    def to_chart(self, z, E: TwistorTangent) -> np.ndarray:
        """Chart components of X^h + V at chart point z."""
        Fc, W, _ = self._pieces(z)
        X = np.asarray(E.horizontal, float)
        x = np.linalg.solve(Fc.T, X)
        y = np.asarray(z, float)[4:]
        w = np.asarray(fa.sd_coords(E.vertical), float) - y @ np.einsum("i,ijk->jk", X, W)
        return np.concatenate([x, w])

    def from_chart(self, z, v, tau: Optional[TwistorPoint] = None) -> TwistorTangent:
        Fc, W, _ = self._pieces(z)
        v = np.asarray(v, dtype=float)
        X = Fc.T @ v[:4]
        y = np.asarray(z, float)[4:]
        vert = v[4:] + y @ np.einsum("i,ijk->jk", X, W)
        tau = self.point_at(z) if tau is None else tau
        return TwistorTangent(tau, X, project_vertical(tau, fa.from_sd_coords(vert)))

    def normal(self, z) -> np.ndarray:
        y = np.asarray(z, float)[4:]
        n = np.zeros(7)
        n[4:] = y / (np.sqrt(self.t) * np.linalg.norm(y))
        return n

    def tangential(self, z, v) -> np.ndarray:
        n = self.normal(z)
        return v - (n @ self.metric(z) @ v) * n

    def covariant_derivative(self, tau: TwistorPoint, E: TwistorTangent,
                             field: Callable[[TwistorPoint], TwistorTangent],
                             tol: float = ORACLE_TOL) -> TwistorTangent:
        """D_E F on Z_+ for a tangent vector field F given on twistor points."""
        z = self.coords_of(tau)
        e = self.to_chart(z, E)
        h = self.step

        def comps(zz):
            return self.to_chart(zz, field(self.point_at(zz)))

        def directional(step):
            return (comps(z + step * e) - comps(z - step * e)) / (2 * step)

        d1, d2 = directional(h), directional(2 * h)
        if float(np.max(np.abs(d1 - d2))) > 10 * tol:
            raise StepSizeError("field derivative unstable between step sizes")
        gam = self.checked_christoffel(z, tol)
        ambient = d1 + np.einsum("lmn,m,n->l", gam, e, comps(z))
        return self.from_chart(z, self.tangential(z, ambient), tau)

    def second_fundamental_form_of_fiber(self, tau: TwistorPoint, V, W) -> np.ndarray:
        """Horizontal part of D_V W for chart-constant vertical fields."""
        z = self.coords_of(tau)
        v = np.zeros(7)
        w = np.zeros(7)
        v[4:] = np.asarray(fa.sd_coords(V), float)
        w[4:] = np.asarray(fa.sd_coords(W), float)
        gam = self.checked_christoffel(z)
        out = self.from_chart(z, self.tangential(z, np.einsum("lmn,m,n->l", gam, v, w)), tau)
        return out.horizontal


def horizontal_field(Y: VectorField) -> Callable[[TwistorPoint], TwistorTangent]:
    """The vector field tau -> Y^h_tau on Z_+."""
    def field(tau: TwistorPoint) -> TwistorTangent:
        return horizontal_lift(tau, np.asarray(_field_at(Y, tau.p), dtype=float))
    return field


def vertical_field(V) -> Callable[[TwistorPoint], TwistorTangent]:
    """tau -> V - <V, tau> tau for a bivector with constant frame components."""
    V = np.asarray(V, dtype=float)

    def field(tau: TwistorPoint) -> TwistorTangent:
        return vertical_vector(tau, project_vertical(tau, V))
    return field


def fd_connection_oracle(m: FramedManifold, t: float, tau: TwistorPoint, E: TwistorTangent,
                         F: Callable[[TwistorPoint], TwistorTangent],
                         step: float = ORACLE_STEP, tol: float = ORACLE_TOL) -> TwistorTangent:
    """D_E F computed from the chart metric of h_t by finite differences."""
    chart = TwistorChart(m, t, tau.p, step=step)
    return chart.covariant_derivative(tau, E, F, tol=tol)


def random_twistor_point(m: FramedManifold, rng: np.random.Generator) -> TwistorPoint:
    p = m.sample_point(rng) if m.frame is not None else np.zeros(m.ambient_dim)
    return TwistorPoint(p, fa.unit_self_dual(rng))


def random_vertical(tau: TwistorPoint, rng: np.random.Generator) -> np.ndarray:
    return project_vertical(tau, fa.from_sd_coords(rng.normal(size=3)))

"""The hypersurface Sigma_J = {sigma in Z_+ : <sigma, alpha> = 0}.

Everything here is evaluated pointwise in float arithmetic.  The
quantity computed for the second fundamental form is the pairing
``h_t(Pi(E, F), grad rho)`` with the defining function
``rho(tau) = <tau, alpha>``; it vanishes exactly when Pi(E, F) does,
because grad rho has vertical part alpha / t and never vanishes on
Sigma_J.  Minimality is ``h_t(trace Pi, grad rho) = 0``.

Three routes compute the pairing: the general formula valid for any
almost Hermitian structure, its rewriting for integrable J in terms of
the Lee vector B, and its rewriting for dOmega = 0 in terms of the
Nijenhuis tensor.  :func:`pi_pair_oracle` is an independent fourth:
minus the h_t-Hessian of rho in the chart of :class:`TwistorChart`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import frame_algebra as fa
from . import frame_manifold as fm
from . import hermitian as hm
from . import twistor as tw
from .hermitian import AlmostHermitianStructure
from .twistor import TwistorPoint, TwistorTangent

SIGMA_TOL = 1e-10
TANGENT_TOL = 1e-9
DEGENERATE_TOL = 1e-9
MINIMAL_TOL = 1e-8
DEFAULT_T = (0.5, 1.0, 2.0)
DEFAULT_ANGLES = 16
DEFAULT_BASE_POINTS = 8

MODES = ("generic", "hermitian_B", "symplectic_N")


class NotOnSigma(ValueError):
    pass


class NotTangent(ValueError):
    pass


class ModeInapplicable(ValueError):
    pass


@dataclass(frozen=True)
class _Geo:
    """Float copies of the pointwise data used by the Pi formulas."""
    J: np.ndarray
    alpha: np.ndarray
    nabla_alpha: np.ndarray
    second: np.ndarray
    riemann: np.ndarray
    B: np.ndarray
    nabla_B: np.ndarray
    nijenhuis: np.ndarray


def _geo(h: AlmostHermitianStructure, p) -> _Geo:
    g = h.at(p)
    f = lambda a: np.asarray(a, dtype=float)  # noqa: E731
    return _Geo(J=f(g.J), alpha=f(g.alpha), nabla_alpha=f(g.nabla_alpha),
                second=f(g.second_nabla_alpha), riemann=f(g.riemann), B=f(g.B),
                nabla_B=f(g.nabla_B), nijenhuis=f(g.nijenhuis))


def _p(h: AlmostHermitianStructure, p) -> tuple:
    return tuple(np.asarray(p, dtype=float).tolist())


# --- points, defining function, gradient ---------------------------------------------


def sigma_point(h: AlmostHermitianStructure, p, sigma) -> TwistorPoint:
    tau = TwistorPoint(np.asarray(p, dtype=float), np.asarray(sigma, dtype=float))
    r = rho(tau, h)
    if abs(r) > SIGMA_TOL:
        raise NotOnSigma(f"<sigma, alpha> = {r:.3g} is not zero")
    return tau


def rho(tau: TwistorPoint, h: AlmostHermitianStructure) -> float:
    return float(fa.inner(tau.sigma, np.asarray(h.at(_p(h, tau.p)).alpha, float)))


def xi(tau: TwistorPoint, h: AlmostHermitianStructure) -> np.ndarray:
    """xi_tau = alpha x tau."""
    return fa.cross(np.asarray(h.at(_p(h, tau.p)).alpha, float), tau.sigma)


def _sigma_nabla_alpha(geo: _Geo, sigma) -> np.ndarray:
    """The covector X -> <sigma, nabla_X alpha>."""
    return fa.half(sigma) * (geo.nabla_alpha @ np.asarray(sigma, float))


def grad_rho(tau: TwistorPoint, h: AlmostHermitianStructure, t: float) -> TwistorTangent:
    """Horizontal part dual to X -> <tau, nabla_X alpha>, vertical part
    (alpha - <alpha, tau> tau) / t."""
    if t <= 0:
        raise ValueError("t must be positive")
    geo = _geo(h, _p(h, tau.p))
    hor = _sigma_nabla_alpha(geo, tau.sigma)
    return TwistorTangent(tau, hor, tw.project_vertical(tau, geo.alpha) / t)


def hat_lift(tau: TwistorPoint, h: AlmostHermitianStructure, X) -> TwistorTangent:
    """X^h + X^v with X^v = -<tau, nabla_X alpha> alpha + <tau, alpha> nabla_X alpha."""
    geo = _geo(h, _p(h, tau.p))
    X = np.asarray(X, dtype=float)
    nx = X @ geo.nabla_alpha
    vert = -fa.inner(tau.sigma, nx) * geo.alpha + fa.inner(tau.sigma, geo.alpha) * nx
    return TwistorTangent(tau, X, vert)


def tangency_residual(E: TwistorTangent, h: AlmostHermitianStructure) -> float:
    """|<V E, alpha> + <sigma, nabla_{pi_* E} alpha>|."""
    geo = _geo(h, _p(h, E.point.p))
    lhs = fa.inner(E.vertical, geo.alpha)
    rhs = -fa.inner(E.point.sigma, np.asarray(E.horizontal, float) @ geo.nabla_alpha)
    return abs(float(lhs - rhs))


def _check_tangent(E: TwistorTangent, h):
    r = tangency_residual(E, h)
    if r > TANGENT_TOL * max(1.0, float(np.linalg.norm(E.coords()))):
        raise NotTangent(f"vector not tangent to Sigma_J (residual {r:.3g})")


# --- fiber circle ----------------------------------------------------------------------


def adapted_basis(alpha) -> tuple:
    """(alpha, s2, s3) orthonormal in Lambda^2_+ with alpha x s2 = s3,
    chosen deterministically; for alpha = s_1 this is (s_1, s_2, s_3)."""
    a = np.asarray(fa.sd_coords(alpha), float)
    a = a / np.linalg.norm(a)
    k = int(np.argmin(np.abs(a)))
    e = np.zeros(3)
    e[k] = 1.0
    s2 = e - (e @ a) * a
    s2 /= np.linalg.norm(s2)
    s3 = np.cross(a, s2)
    return fa.from_sd_coords(a), fa.from_sd_coords(s2), fa.from_sd_coords(s3)


def fiber_circle(h: AlmostHermitianStructure, p, n: int = DEFAULT_ANGLES) -> list:
    """sigma(psi) = cos(psi) s2 + sin(psi) s3 at n equispaced angles."""
    _, s2, s3 = adapted_basis(np.asarray(h.at(_p(h, p)).alpha, float))
    pts = []
    for k in range(n):
        psi = 2 * math.pi * k / n
        pts.append(sigma_point(h, p, math.cos(psi) * s2 + math.sin(psi) * s3))
    return pts


# --- tangent frames ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SigmaFrame:
    vectors: tuple
    mode: str
    t: float

    def __post_init__(self):
        if len(self.vectors) != 5:
            raise ValueError("a tangent frame of Sigma_J has 5 members")
        gram = tw.gram_matrix(self.t, self.vectors)
        err = float(np.max(np.abs(gram - np.eye(5))))
        if err > 1e-10:
            raise ArithmeticError(f"{self.mode} frame not h_t-orthonormal (error {err:.3g})")

    def projector(self) -> np.ndarray:
        """h_t-orthogonal projector onto the span, in 7-coordinates."""
        # s-coordinates are orthonormal in the half-determinant metric
        metric = np.diag([1.0] * 4 + [self.t] * 3)
        A = np.array([v.coords() for v in self.vectors]).T
        return A @ A.T @ metric


def _gram_schmidt(t, vectors) -> list:
    out = []
    for v in vectors:
        for e in out:
            v = v - float(tw.h_t(t, v, e)) * e
        norm = math.sqrt(float(tw.h_t(t, v, v)))
        if norm <= 1e-12:
            continue
        out.append((1.0 / norm) * v)
    return out


def _frame_from_basis(tau, h, t, basis, hats_scale, mode) -> SigmaFrame:
    xi_s = xi(tau, h)
    vecs = [hats_scale[k] * hat_lift(tau, h, basis[k]) for k in range(4)]
    vecs.append((1.0 / math.sqrt(t)) * tw.vertical_vector(tau, xi_s))
    return SigmaFrame(tuple(vecs), mode, t)


def sigma_tangent_frame(tau: TwistorPoint, h: AlmostHermitianStructure, t: float,
                        mode: str = "generic") -> SigmaFrame:
    if mode not in MODES:
        raise ValueError(f"unknown frame mode {mode!r}; choose from {MODES}")
    if t <= 0:
        raise ValueError("t must be positive")
    sigma_point(h, tau.p, tau.sigma)
    geo = _geo(h, _p(h, tau.p))
    if mode == "generic":
        candidates = [hat_lift(tau, h, e) for e in np.eye(4)]
        candidates.append(tw.vertical_vector(tau, xi(tau, h)))
        vecs = _gram_schmidt(t, candidates)
        return SigmaFrame(tuple(vecs), mode, t)

    xi_s = xi(tau, h)
    if mode == "hermitian_B":
        if h.classification not in (hm.KAHLER, hm.HERMITIAN):
            raise ModeInapplicable("hermitian_B frame needs an integrable J")
        nb = float(np.linalg.norm(geo.B))
        E1 = geo.B / nb if nb > DEGENERATE_TOL else np.eye(4)[0]
        basis = [E1, geo.J @ E1, fa.k_endo(tau.sigma) @ E1, fa.k_endo(xi_s) @ E1]
        scale = [1.0, 1.0, 1.0, (1 + t * nb ** 2 / 4) ** -0.5 if nb > DEGENERATE_TOL else 1.0]
        return _frame_from_basis(tau, h, t, basis, scale, mode)

    if h.classification not in (hm.KAHLER, hm.ALMOST_KAHLER):
        raise ModeInapplicable("symplectic_N frame needs dOmega = 0")
    n_sigma = hm.nijenhuis_on_bivector_float(geo.nijenhuis, tau.sigma)
    nn = float(np.linalg.norm(n_sigma))
    if nn <= DEGENERATE_TOL:
        basis = list(np.eye(4))
        scale = [1.0] * 4
    else:
        E3 = n_sigma / nn
        E4 = geo.J @ E3
        E1 = None
        for e in np.eye(4):
            v = e - (e @ E3) * E3 - (e @ E4) * E4
            if np.linalg.norm(v) > 0.5:
                E1 = v / np.linalg.norm(v)
                break
        basis = [E1, geo.J @ E1, E3, E4]
        scale = [1.0, 1.0, 1.0, (1 + t * nn ** 2 / 16) ** -0.5]
    return _frame_from_basis(tau, h, t, basis, scale, mode)


def projector_difference(a: SigmaFrame, b: SigmaFrame) -> float:
    return float(np.max(np.abs(a.projector() - b.projector())))


# --- second fundamental form ------------------------------------------------------------


def _split(E: TwistorTangent):
    return np.asarray(E.horizontal, float), np.asarray(E.vertical, float)


def pi_pair_general(E: TwistorTangent, F: TwistorTangent, h: AlmostHermitianStructure,
                    t: float, check: bool = True) -> float:
    """h_t(Pi(E, F), grad rho) for an arbitrary almost Hermitian structure."""
    if check:
        _check_tangent(E, h)
        _check_tangent(F, h)
    tau = E.point
    geo = _geo(h, _p(h, tau.p))
    sigma, alpha = tau.sigma, geo.alpha
    X, V = _split(E)
    Y, W = _split(F)
    sna = _sigma_nabla_alpha(geo, sigma)  # covector
    r_sa = fm.curvature_endo(geo.riemann, fa.cross(sigma, alpha))
    r_a = fm.curvature_endo(geo.riemann, alpha)
    na = lambda Z: np.asarray(Z) @ geo.nabla_alpha  # noqa: E731
    sec_xy = np.einsum("i,j,ijn->n", X, Y, geo.second)
    sec_yx = np.einsum("i,j,ijn->n", Y, X, geo.second)
    val = (t / 2 * (sna @ X) * (sna @ (r_sa @ Y)) + t / 2 * (sna @ Y) * (sna @ (r_sa @ X))
           - 0.5 * fa.inner(sigma, sec_xy) - 0.5 * fa.inner(sigma, sec_yx)
           + t / 2 * fa.inner(fa.cross(alpha, V), na(r_a @ Y))
           + t / 2 * fa.inner(fa.cross(alpha, W), na(r_a @ X))
           - fa.inner(V, na(Y)) - fa.inner(W, na(X)))
    return float(val)


def _hermitian_terms(E, F, h, t):
    tau = E.point
    geo = _geo(h, _p(h, tau.p))
    sigma, alpha, J, B = tau.sigma, geo.alpha, geo.J, geo.B
    X, V = _split(E)
    Y, W = _split(F)
    xi_s = fa.cross(alpha, sigma)
    K_xi, K_s = fa.k_endo(xi_s), fa.k_endo(sigma)
    KB = K_xi @ B
    RKB = fm.curvature_endo(geo.riemann, xi_s) @ KB
    r_a = fm.curvature_endo(geo.riemann, alpha)
    return dict(X=X, Y=Y, J=J, B=B, K_xi=K_xi, KB=KB, RKB=RKB, r_a=r_a, KsB=K_s @ B,
                nBX=X @ geo.nabla_B, nBY=Y @ geo.nabla_B,
                v=fa.inner(V, xi_s), w=fa.inner(W, xi_s))


def pi_pair_hermitian(E: TwistorTangent, F: TwistorTangent, h: AlmostHermitianStructure,
                      t: float, check: bool = True, printed: bool = False) -> float:
    """The pairing rewritten through the Lee vector B (J integrable).

    Obtained from :func:`pi_pair_general` with the substitutions
    <sigma, nabla_X alpha> = 1/2 <X, K_xi B>, the second-derivative identity
    for nabla^2 alpha, <alpha x V, nabla_X alpha> = -1/2 <V, xi><X, K_xi B> and
    <V, nabla_X alpha> = -1/2 <V, xi><X, K_sigma B>.  ``printed=True`` gives
    the variant with the opposite sign on the t/8 terms, the vertical slots
    paired crosswise and no factor t on the R(alpha) terms; it does not
    agree with the general formula and is kept for comparison only.
    """
    if h.classification not in (hm.KAHLER, hm.HERMITIAN):
        raise ModeInapplicable("pi_pair_hermitian needs an integrable J")
    if check:
        _check_tangent(E, h)
        _check_tangent(F, h)
    d = _hermitian_terms(E, F, h, t)
    X, Y, J, B, KB, RKB, r_a, KsB, K_xi = (d[k] for k in
                                          ("X", "Y", "J", "B", "KB", "RKB", "r_a", "KsB", "K_xi"))
    v, w = d["v"], d["w"]
    common = (1 / 8 * ((J @ X) @ B) * ((J @ Y) @ KB) + 1 / 8 * ((J @ Y) @ B) * ((J @ X) @ KB)
              + 1 / 4 * d["nBX"] @ (K_xi @ Y) + 1 / 4 * d["nBY"] @ (K_xi @ X))
    if printed:
        return float(common - t / 8 * (X @ KB) * (Y @ RKB) - t / 8 * (Y @ KB) * (X @ RKB)
                     - 1 / 4 * v * ((r_a @ Y) @ KB) - 1 / 4 * w * ((r_a @ X) @ KB)
                     + 1 / 4 * v * (X @ KsB) + 1 / 4 * w * (Y @ KsB))
    return float(common + t / 8 * (X @ KB) * (Y @ RKB) + t / 8 * (Y @ KB) * (X @ RKB)
                 - t / 4 * v * ((r_a @ Y) @ KB) - t / 4 * w * ((r_a @ X) @ KB)
                 + 1 / 2 * v * (Y @ KsB) + 1 / 2 * w * (X @ KsB))


def pi_pair_symplectic(E: TwistorTangent, F: TwistorTangent, h: AlmostHermitianStructure,
                       t: float, check: bool = True, printed: bool = False) -> float:
    """The pairing rewritten through the Nijenhuis tensor (dOmega = 0).

    From :func:`pi_pair_general` with <nabla_X alpha, a> = 1/4 <N(a), JX>.
    ``printed=True`` flips the sign of the t/32 terms and pairs the vertical
    slots crosswise; kept for comparison only.
    """
    if h.classification not in (hm.KAHLER, hm.ALMOST_KAHLER):
        raise ModeInapplicable("pi_pair_symplectic needs dOmega = 0")
    if check:
        _check_tangent(E, h)
        _check_tangent(F, h)
    tau = E.point
    geo = _geo(h, _p(h, tau.p))
    sigma, alpha, J = tau.sigma, geo.alpha, geo.J
    X, V = _split(E)
    Y, W = _split(F)
    xi_s = fa.cross(alpha, sigma)
    N = lambda a: hm.nijenhuis_on_bivector_float(geo.nijenhuis, a)  # noqa: E731
    JN = J @ N(sigma)
    r_xi = fm.curvature_endo(geo.riemann, xi_s)
    r_a = fm.curvature_endo(geo.riemann, alpha)
    sec_xy = np.einsum("i,j,ijn->n", X, Y, geo.second)
    sec_yx = np.einsum("i,j,ijn->n", Y, X, geo.second)
    v, w = fa.inner(V, xi_s), fa.inner(W, xi_s)
    n_xi = N(xi_s)
    sign = 1 if printed else -1
    first, second = (X, Y) if printed else (Y, X)
    val = (sign * t / 32 * ((JN @ X) * (JN @ (r_xi @ Y)) + (JN @ Y) * (JN @ (r_xi @ X)))
           - 0.5 * fa.inner(sigma, sec_xy) - 0.5 * fa.inner(sigma, sec_yx)
           + t / 8 * N(fa.cross(alpha, V)) @ (J @ (r_a @ Y))
           + t / 8 * N(fa.cross(alpha, W)) @ (J @ (r_a @ X))
           - 1 / 4 * v * (n_xi @ (J @ first)) - 1 / 4 * w * (n_xi @ (J @ second)))
    return float(val)


def pi_pair_oracle(E: TwistorTangent, F: TwistorTangent, h: AlmostHermitianStructure,
                   t: float, step: float = tw.ORACLE_STEP) -> float:
    """-Hess(rho)(E, F) in the (u, y) chart of Lambda^2_+.

    rho extends to Lambda^2_+ as y . a(u) with a_k = <alpha, s_k>; its
    derivative along the unit normal of Z_+ is rho itself, which vanishes
    on Sigma_J, so the ambient Hessian restricts to the Z_+ one there.
    """
    tau = E.point
    chart = tw.TwistorChart(h.manifold, t, tau.p, step=step)
    z0 = chart.coords_of(tau)

    def rho_chart(z):
        q = chart.base_point(z[:4])
        a = np.asarray(fa.sd_coords(np.asarray(hm.geometry_at(h, q).alpha, float)), float)
        return float(z[4:] @ a)

    e, f = chart.to_chart(z0, E), chart.to_chart(z0, F)
    s = step
    # mixed second derivative along e, f and first derivatives along all axes
    d2 = (rho_chart(z0 + s * e + s * f) - rho_chart(z0 + s * e - s * f)
          - rho_chart(z0 - s * e + s * f) + rho_chart(z0 - s * e - s * f)) / (4 * s * s)
    grad = np.zeros(7)
    for mu in range(7):
        dz = np.zeros(7)
        dz[mu] = s
        grad[mu] = (rho_chart(z0 + dz) - rho_chart(z0 - dz)) / (2 * s)
    gam = chart.checked_christoffel(z0)
    return float(np.einsum("lmn,m,n,l->", gam, e, f, grad) - d2)


# --- trace and minimality ---------------------------------------------------------------


def trace_pi(tau: TwistorPoint, h: AlmostHermitianStructure, t: float,
             route: str = "direct", mode: str = "generic") -> float:
    """h_t(trace Pi, grad rho) at a point of Sigma_J.

    route ``direct`` sums pi_pair_general over a SigmaFrame (``mode``);
    ``closed_form`` uses the Lee-form expression (integrable J) or
    -<trace nabla^2 alpha, sigma> (dOmega = 0).
    """
    if route == "direct":
        frame = sigma_tangent_frame(tau, h, t, mode)
        return float(sum(pi_pair_general(e, e, h, t) for e in frame.vectors))
    if route != "closed_form":
        raise ValueError(f"unknown route {route!r}")
    cls = h.classification
    if cls in (hm.KAHLER, hm.HERMITIAN):
        form = hm.hermitian_trace_form(h, t, _p(h, tau.p))
        return float(fa.evaluate_two_form(form, xi(tau, h)))
    if cls == hm.ALMOST_KAHLER:
        tr = np.asarray(h.at(_p(h, tau.p)).trace_second_nabla_alpha, float)
        return float(-fa.inner(tr, tau.sigma))
    raise ModeInapplicable("no closed form for a structure that is neither integrable "
                           "nor symplectic")


def closed_form_available(h: AlmostHermitianStructure) -> bool:
    return h.classification != hm.GENERIC


@dataclass
class MinimalityReport:
    manifold: str
    structure: str
    params: dict
    t: float
    classification: str
    traces: list = field(default_factory=list)  # (base index, angle index, value)
    max_abs_trace: float = 0.0
    analytic_verdict: Optional[bool] = None
    analytic_residual: Optional[float] = None
    numeric_verdict: bool = True
    closed_form_residual: Optional[float] = None
    tolerance: float = MINIMAL_TOL

    @property
    def consistent(self) -> bool:
        return self.analytic_verdict is None or self.analytic_verdict == self.numeric_verdict


def analytic_minimality(h: AlmostHermitianStructure, t: float, points: Sequence,
                        tol: float = hm.CLASSIFY_TOL) -> tuple:
    """(verdict, residual) from the (1,1)-type criterion (integrable J) or the
    symmetry of rho* (dOmega = 0); (None, None) for other structures."""
    cls = h.classification
    if cls in (hm.KAHLER, hm.HERMITIAN):
        res = max(hm.type_11_residual(hm.scaled_lee_two_form(h, t, p), h, p) for p in points)
        return res <= tol, res
    if cls == hm.ALMOST_KAHLER:
        res = max(hm._max_abs(np.asarray(h.at(p).star_ricci, float)
                              - np.asarray(h.at(p).star_ricci, float).T) for p in points)
        return res <= tol, res
    return None, None


def base_points(h: AlmostHermitianStructure, n: int = DEFAULT_BASE_POINTS, seed: int = 0) -> list:
    m = h.manifold
    if m.frame is None:
        return [tuple([0.0] * m.ambient_dim)]
    rng = np.random.default_rng(seed)
    return [tuple(np.asarray(m.sample_point(rng), float).tolist()) for _ in range(n)]


def is_minimal(h: AlmostHermitianStructure, t: float, n_base: int = DEFAULT_BASE_POINTS,
               n_angles: int = DEFAULT_ANGLES, seed: int = 0, tol: float = MINIMAL_TOL,
               manifold_id: Optional[str] = None, mode: str = "generic") -> MinimalityReport:
    if t <= 0:
        raise ValueError("t must be positive")
    points = base_points(h, n_base, seed)
    report = MinimalityReport(manifold=manifold_id or h.manifold.name, structure=h.name,
                              params=dict(h.params), t=t, classification=h.classification,
                              tolerance=tol)
    closed = closed_form_available(h)
    worst_cf = 0.0
    for b, p in enumerate(points):
        for a, tau in enumerate(fiber_circle(h, p, n_angles)):
            value = trace_pi(tau, h, t, "direct", mode)
            report.traces.append((b, a, value))
            if closed:
                worst_cf = max(worst_cf, abs(value - trace_pi(tau, h, t, "closed_form")))
    report.max_abs_trace = max(abs(v) for _, _, v in report.traces)
    report.numeric_verdict = report.max_abs_trace <= tol
    if closed:
        report.closed_form_residual = worst_cf
    report.analytic_verdict, report.analytic_residual = analytic_minimality(h, t, points)
    return report

"""The Hopf surface S^3 x S^1 and complex projective 3-space.

Chain of identifications used here::

    C_+(S^3) x S^1  --F-->  Z_+(S^3 x S^1)
    C_+(S^3)  --kappa-->  J_+(R^6)  <-->  CP^3

A point of C_+(S^3) is a linear contact structure (phi, xi) on T_p S^3; it
is determined by the unit vector xi through phi(v) = xi x v.  The cross
product on T_p S^3 is the one of the oriented frame xi_1, xi_2, xi_3.

R^6 has standard basis a_1..a_6 with R^4 = span(a_1..a_4) containing S^3,
and complex vectors A_k = (a_{2k-1} - i a_{2k}) / sqrt 2.
"""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from . import frame_algebra as fa

UNIT_TOL = 1e-10
PREDICATE_TOL = 1e-9  # relative, on |z|^2


class PredicateError(ValueError):
    """Homogeneous coordinates outside the image of the contact elements orthogonal to xi_1."""


# --- S^3 frame and contact elements ---------------------------------------------------------


def s3_frame(p) -> np.ndarray:
    """Rows xi_1(p), xi_2(p), xi_3(p)."""
    p1, p2, p3, p4 = np.asarray(p, dtype=float)
    return np.array([[-p2, p1, -p4, p3],
                     [-p3, p4, p1, -p2],
                     [-p4, -p3, p2, p1]])


def _check_sphere(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (4,) or abs(p @ p - 1) > UNIT_TOL:
        raise ValueError("p must be a unit vector of R^4")
    return p


def cross(p, v, w) -> np.ndarray:
    """Cross product on T_p S^3 (R^4-valued)."""
    F = s3_frame(p)
    return np.cross(F @ v, F @ w) @ F


@dataclass(frozen=True, eq=False)
class ContactElement:
    p: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        p = _check_sphere(self.p)
        xi = np.asarray(self.xi, dtype=float)
        if xi.shape != (4,) or abs(xi @ xi - 1) > UNIT_TOL or abs(xi @ p) > UNIT_TOL:
            raise ValueError("xi must be a unit vector tangent to S^3 at p")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "xi", xi)

    @classmethod
    def from_frame_coords(cls, p, lam) -> "ContactElement":
        """xi = sum lam_i xi_i(p)."""
        lam = np.asarray(lam, dtype=float)
        return cls(p, lam @ s3_frame(p))

    @property
    def frame_coords(self) -> np.ndarray:
        return s3_frame(self.p) @ self.xi

    @property
    def phi(self) -> np.ndarray:
        """phi as a 4x4 matrix on R^4, zero on p."""
        F = s3_frame(self.p)
        c = F @ self.xi
        # v -> c x (F v) in frame coordinates, mapped back
        C = np.array([[0, -c[2], c[1]], [c[2], 0, -c[0]], [-c[1], c[0], 0]])
        return F.T @ C @ F

    def residuals(self) -> dict:
        """Deviations from phi^2 = -1 + xi xi^T and the metric identity on T_p S^3."""
        P = np.eye(4) - np.outer(self.p, self.p)  # projection onto T_p S^3
        phi = self.phi
        target = -P + np.outer(self.xi, self.xi)
        return {"phi_squared": float(np.max(np.abs(phi @ phi - target))),
                "metric": float(np.max(np.abs(phi.T @ phi - (P - np.outer(self.xi, self.xi)))))}


def random_contact_element(rng: np.random.Generator, orthogonal_to_xi1: bool = False) -> ContactElement:
    p = rng.normal(size=4)
    p /= np.linalg.norm(p)
    lam = rng.normal(size=3)
    if orthogonal_to_xi1:
        lam[0] = 0.0
    lam /= np.linalg.norm(lam)
    return ContactElement.from_frame_coords(p, lam)


# --- F: C_+(S^3) x S^1 -> Z_+(S^3 x S^1) ---------------------------------------------------


def f_map(ce: ContactElement, a: float = 0.0) -> np.ndarray:
    """The complex structure I on T_p S^3 x T_a S^1 with I = phi on Im phi,
    I xi = d/dt, I d/dt = -xi.

    Returned as a 4x4 matrix in the frame (xi_1, d/dt, xi_2, xi_3) used
    for S^3 x S^1 elsewhere in the package; ``a`` only labels the S^1 point.
    """
    F = s3_frame(ce.p)
    c = F @ ce.xi
    C = np.array([[0, -c[2], c[1]], [c[2], 0, -c[0]], [-c[1], c[0], 0]])
    I = np.zeros((4, 4))
    idx = [0, 2, 3]  # positions of xi_1, xi_2, xi_3
    for r in range(3):
        for s in range(3):
            I[idx[r], idx[s]] = C[r, s]
        I[1, idx[r]] = c[r]
        I[idx[r], 1] = -c[r]
    return I


def f_map_bivector(ce: ContactElement, a: float = 0.0) -> np.ndarray:
    """The point of Z_+ over (p, a): the unit self-dual bivector of f_map.

    In the s-basis of the frame (xi_1, d/dt, xi_2, xi_3) it is
    lam_1 s_1 + lam_3 s_2 - lam_2 s_3 for xi = sum lam_i xi_i, so the fibre of
    Sigma (orthogonal to s_1) is the circle xi perpendicular to xi_1.
    """
    return fa.endo_to_bivector(f_map(ce, a))


def twistor_metric(J1, J2) -> float:
    """G(J', J'') = -1/4 tr(J' J'') on compatible complex structures of a 4-space."""
    return float(fa.endo_metric(np.asarray(J1, float), np.asarray(J2, float)))


# --- kappa: C_+(S^3) -> J_+(R^6) -------------------------------------------------------------


def kappa(ce: ContactElement) -> np.ndarray:
    """J = phi on Im phi, J xi = -a_5, J p = -a_6, J a_5 = xi, J a_6 = p."""
    J = np.zeros((6, 6))
    J[:4, :4] = ce.phi
    a5, a6 = np.zeros(6), np.zeros(6)
    a5[4], a6[5] = 1.0, 1.0
    xi = np.concatenate([ce.xi, [0, 0]])
    p = np.concatenate([ce.p, [0, 0]])
    J += -np.outer(a5, xi) + np.outer(xi, a5) - np.outer(a6, p) + np.outer(p, a6)
    return J


def skew_metric(P, Q) -> float:
    """G(P, Q) = -1/2 tr(PQ) on skew endomorphisms of R^6."""
    return float(-0.5 * np.trace(np.asarray(P) @ np.asarray(Q)))


def orientation_sign(J, tol: float = 1e-9) -> int:
    """Sign of det(e_1, J e_1, e_2, J e_2, e_3, J e_3) for a J-adapted
    orthonormal basis; +1 for the standard structure a_1 -> a_2, a_3 -> a_4, ..."""
    J = np.asarray(J, dtype=float)
    n = J.shape[0]
    basis = []
    for k in range(n):
        v = np.eye(n)[k]
        for b in basis:
            v = v - (v @ b) * b
        if np.linalg.norm(v) < tol:
            continue
        v = v / np.linalg.norm(v)
        w = J @ v
        for b in basis:
            w = w - (w @ b) * b
        w = w / np.linalg.norm(w)
        basis += [v, w]
        if len(basis) == n:
            break
    return int(np.sign(np.linalg.det(np.array(basis))))


def complex_structure_residuals(J) -> dict:
    J = np.asarray(J, dtype=float)
    n = J.shape[0]
    return {"square": float(np.max(np.abs(J @ J + np.eye(n)))),
            "orthogonal": float(np.max(np.abs(J.T @ J - np.eye(n)))),
            "orientation": orientation_sign(J)}


def fiber_metric_c(t: float, ce: ContactElement, dxi1, dxi2) -> float:
    """Vertical part of h^c_t at (phi, xi): t (-1/2 tr(phi' phi'') + g(xi', xi''))
    for fiber directions xi', xi'' (unit-sphere tangents at xi in T_p S^3)."""
    phi1 = ContactElement._phi_of(ce.p, dxi1)
    phi2 = ContactElement._phi_of(ce.p, dxi2)
    return float(t * (-0.5 * np.trace(phi1 @ phi2) + np.dot(dxi1, dxi2)))


def _phi_of(p, v) -> np.ndarray:
    F = s3_frame(p)
    c = F @ np.asarray(v, float)
    C = np.array([[0, -c[2], c[1]], [c[2], 0, -c[0]], [-c[1], c[0], 0]])
    return F.T @ C @ F


ContactElement._phi_of = staticmethod(_phi_of)


def kappa_differential(ce: ContactElement, dxi) -> np.ndarray:
    """d kappa along the fiber curve xi(s) with xi'(0) = dxi (kappa is linear in xi)."""
    dxi = np.asarray(dxi, dtype=float)
    D = np.zeros((6, 6))
    D[:4, :4] = _phi_of(ce.p, dxi)
    a5 = np.zeros(6)
    a5[4] = 1.0
    v = np.concatenate([dxi, [0, 0]])
    D += -np.outer(a5, v) + np.outer(v, a5)
    return D


# --- CP^3 <-> J_+(R^6) ------------------------------------------------------------------------


def _A_basis() -> np.ndarray:
    """Columns A_1, A_2, A_3, conj A_1, conj A_2, conj A_3 in C^6."""
    M = np.zeros((6, 6), dtype=complex)
    for k in range(3):
        M[2 * k, k] = 1 / np.sqrt(2)
        M[2 * k + 1, k] = -1j / np.sqrt(2)
    M[:, 3:] = M[:, :3].conj()
    return M


def _as_projective(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.shape != (4,):
        raise ValueError("expected four homogeneous coordinates")
    if np.linalg.norm(z) == 0:
        raise ValueError("homogeneous coordinates must not all vanish")
    return z


def _coefficients(H: np.ndarray) -> np.ndarray:
    """Column k: coefficients of -i |z|^2 J A_k in A_1, A_2, A_3, conj A_1,
    conj A_2, conj A_3, written through H = z z^* (conj(z_a) z_b = H[b, a])."""
    n = [H[i, i] for i in range(4)]

    def c(a, b):
        return H[b, a]

    return np.array([
        [n[0] - n[1] - n[2] + n[3], 2 * c(1, 0), 2 * c(2, 0)],
        [2 * c(0, 1), -n[0] + n[1] - n[2] + n[3], 2 * c(2, 1)],
        [2 * c(0, 2), 2 * c(1, 2), -n[0] - n[1] + n[2] + n[3]],
        [0, -2 * c(3, 2), 2 * c(3, 1)],
        [2 * c(3, 2), 0, -2 * c(3, 0)],
        [-2 * c(3, 1), 2 * c(3, 0), 0],
    ], dtype=complex)


def _j6_linear(H: np.ndarray) -> np.ndarray:
    """|z|^2 J as a real-linear function of H; the result is real because
    the images of A_k and conj A_k are conjugate."""
    M = _A_basis()
    JA = 1j * (M @ _coefficients(H))
    return (np.concatenate([JA, JA.conj()], axis=1) @ np.linalg.inv(M)).real


def cp3_to_j6(z) -> np.ndarray:
    z = _as_projective(z)
    return _j6_linear(np.outer(z, z.conj())) / float(np.vdot(z, z).real)


def j6_to_cp3(J) -> np.ndarray:
    """Inverse of cp3_to_j6: recover [z] from J (normalized with |z| = 1 and the
    first coordinate of largest modulus real positive)."""
    J = np.asarray(J, dtype=float)
    # cp3_to_j6 is linear in H = z z^* / |z|^2; solve for H over Hermitian matrices of trace 1
    units = []
    for a in range(4):
        for b in range(a, 4):
            E = np.zeros((4, 4), dtype=complex)
            E[a, b] = E[b, a] = 1
            units.append(E)
            if a != b:
                E = np.zeros((4, 4), dtype=complex)
                E[a, b], E[b, a] = 1j, -1j
                units.append(E)
    cols = [_j6_linear(E).ravel() for E in units]
    rows = np.array(cols).T
    trace_row = np.array([np.trace(E).real for E in units])
    A = np.vstack([rows, trace_row])
    rhs = np.concatenate([J.ravel(), [1.0]])
    coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    H = sum(c * E for c, E in zip(coef, units))
    w, v = np.linalg.eigh(H)
    z = v[:, -1]
    k = int(np.argmax(np.abs(z)))
    return z * (abs(z[k]) / z[k])


# --- contact elements orthogonal to xi_1 and their coordinates -------------------------------


def contact_to_cp3(p, lam2: float, lam3: float) -> np.ndarray:
    p = _check_sphere(p)
    if abs(lam2 ** 2 + lam3 ** 2 - 1) > UNIT_TOL:
        raise ValueError("lambda_2^2 + lambda_3^2 must be 1")
    p1, p2, p3, p4 = p
    mu = lam3 - 1j * lam2
    z1 = 0.5 * (-(p1 + 1j * p2) - mu * (p3 - 1j * p4))
    z2 = 0.5 * (mu * (p1 - 1j * p2) - (p3 + 1j * p4))
    return np.array([z1, z2, 0.5, -0.5 * mu])


def sigma_image_predicate(z, tol: float = PREDICATE_TOL) -> bool:
    """4|z_3|^2 = 4|z_4|^2 = |z|^2, relative tolerance."""
    z = _as_projective(z)
    n2 = float(np.vdot(z, z).real)
    return bool(abs(4 * abs(z[2]) ** 2 - n2) <= tol * n2 and abs(4 * abs(z[3]) ** 2 - n2) <= tol * n2)


def cp3_to_contact(z, tol: float = PREDICATE_TOL):
    """(p, lambda_2, lambda_3) of a point satisfying the predicate."""
    z = _as_projective(z)
    if not sigma_image_predicate(z, tol):
        raise PredicateError("need 4|z_3|^2 = 4|z_4|^2 = |z|^2")
    z1, z2, z3, z4 = z
    n2 = float(np.vdot(z, z).real)
    w12 = -2 * (z1 * np.conj(z3) + np.conj(z2) * z4) / n2
    w34 = 2 * (np.conj(z1) * z4 - z2 * np.conj(z3)) / n2
    lam = -4 * z3 * np.conj(z4) / n2
    p = np.array([w12.real, w12.imag, w34.real, w34.imag])
    return p, float(lam.imag), float(lam.real)


def twistor_level(z, squared: bool = True) -> float:
    """(|z_1|^2 + |z_2|^2 - |z_3|^2 - |z_4|^2) / |z|^2, zero exactly on the
    image of C_+(S^3).  ``squared=False`` gives the unsquared moduli
    relation, which does not cut out that image."""
    z = _as_projective(z)
    a = np.abs(z)
    if squared:
        a = a ** 2
        return float((a[0] + a[1] - a[2] - a[3]) / a.sum())
    return float((a[0] + a[1] - a[2] - a[3]) / np.linalg.norm(z))


def projective_distance(z, w) -> float:
    """Distance between the lines [z], [w]: |P_z - P_w| / sqrt 2 for the
    orthogonal projectors (Frobenius norm)."""
    z, w = _as_projective(z), _as_projective(w)
    z = z / np.linalg.norm(z)
    w = w / np.linalg.norm(w)
    return float(np.linalg.norm(np.outer(z, z.conj()) - np.outer(w, w.conj())) / np.sqrt(2))

"""Pointwise exterior algebra of an oriented Euclidean 4-space.

Vectors are 4-arrays of components in an oriented orthonormal frame
``E_1..E_4``.  Bivectors are 6-arrays of components in the lexicographic
basis ``E_i^E_j`` (i < j), see :data:`PAIRS`.  The inner product on
bivectors uses the half-determinant convention

    <v1^v2, v3^v4> = 1/2 det[<v_i, v_j>]

so ``|E_1^E_2|^2 = 1/2`` while the s-basis ``E_1^E_2 + E_3^E_4`` etc. is
orthonormal.

All functions accept float arrays or numpy object arrays holding
:class:`fractions.Fraction` entries; exact inputs give exact outputs.
"""
from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple

import numpy as np

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
PAIR_INDEX = {pair: n for n, pair in enumerate(PAIRS)}

SELF_DUAL_TOL = 1e-10

# Hodge star in the PAIRS basis: *(E12)=E34, *(E13)=-E24, *(E14)=E23, ...
_HODGE_PERM = (5, 4, 3, 2, 1, 0)
_HODGE_SIGN = (1, -1, 1, 1, -1, 1)


class SelfDualTriple(NamedTuple):
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.stack([self.s1, self.s2, self.s3])


def is_exact(*arrays) -> bool:
    return any(np.asarray(a).dtype == object for a in arrays)


def half(*arrays):
    """The scalar 1/2 in the arithmetic of ``arrays``."""
    return Fraction(1, 2) if is_exact(*arrays) else 0.5


def exact(a) -> np.ndarray:
    """Convert ints/Fractions (or an array of them) to a Fraction object array."""
    arr = np.asarray(a, dtype=object)
    return np.vectorize(Fraction, otypes=[object])(arr) if arr.size else arr


def wedge(x, y) -> np.ndarray:
    x = np.asarray(x)
    y = np.asarray(y)
    return np.array([x[i] * y[j] - x[j] * y[i] for i, j in PAIRS])


def inner(a, b):
    """Half-determinant inner product of two bivectors."""
    return half(a, b) * np.dot(np.asarray(a), np.asarray(b))


def norm(a) -> float:
    return float(np.sqrt(float(inner(a, a))))


def bivector_matrix(a) -> np.ndarray:
    """Antisymmetric 4x4 matrix ``M`` with ``M[i, j] = a_ij``."""
    a = np.asarray(a)
    m = np.zeros((4, 4), dtype=a.dtype)
    for n, (i, j) in enumerate(PAIRS):
        m[i, j] = a[n]
        m[j, i] = -a[n]
    return m


def bivector_from_matrix(m) -> np.ndarray:
    m = np.asarray(m)
    return np.array([m[i, j] for i, j in PAIRS])


def k_endo(a) -> np.ndarray:
    """Skew endomorphism K_a defined by <K_a X, Y> = 2 <a, X^Y>.

    Returned as the matrix acting on frame components (column = input).
    For ``a = E_1^E_2`` this sends E_1 to E_2 and E_2 to -E_1.
    """
    return bivector_matrix(a).T


def endo_to_bivector(k) -> np.ndarray:
    """Inverse of :func:`k_endo` on skew matrices."""
    k = np.asarray(k)
    return np.array([k[j, i] for i, j in PAIRS])


def endo_metric(p, q):
    """Metric on skew endomorphisms of the 4-space normalized so that
    ``endo_metric(k_endo(a), k_endo(b)) == inner(a, b)``.

    In terms of traces this is ``-1/4 tr(PQ)``.
    """
    p = np.asarray(p)
    q = np.asarray(q)
    scale = Fraction(-1, 4) if is_exact(p, q) else -0.25
    return scale * np.trace(p @ q)


def hodge(a) -> np.ndarray:
    a = np.asarray(a)
    return np.array([_HODGE_SIGN[n] * a[_HODGE_PERM[n]] for n in range(6)])


def self_dual_part(a) -> np.ndarray:
    a = np.asarray(a)
    return half(a) * (a + hodge(a))


def anti_self_dual_part(a) -> np.ndarray:
    a = np.asarray(a)
    return half(a) * (a - hodge(a))


def s_basis(orientation_sign: int = 1) -> SelfDualTriple:
    """The triple s_1, s_2, s_3 of Lambda^2_+ (sign +1) or Lambda^2_- (sign -1).

    s_1 = E12 +- E34, s_2 = E13 +- E42, s_3 = E14 +- E23, with integer
    components so they combine exactly with Fraction arrays.
    """
    if orientation_sign not in (1, -1):
        raise ValueError("orientation_sign must be +1 or -1")
    e = orientation_sign
    s1 = np.array([1, 0, 0, 0, 0, e])
    s2 = np.array([0, 1, 0, 0, -e, 0])
    s3 = np.array([0, 0, 1, e, 0, 0])
    return SelfDualTriple(s1, s2, s3)


_S_PLUS = s_basis(1).as_array()


def sd_coords(a) -> np.ndarray:
    """Components <a, s_k^+> of a bivector in the s^+ basis."""
    a = np.asarray(a)
    return half(a) * (_S_PLUS @ a)


def from_sd_coords(c) -> np.ndarray:
    return np.asarray(c) @ _S_PLUS


def is_self_dual(a, tol: float = SELF_DUAL_TOL) -> bool:
    a = np.asarray(a)
    if is_exact(a):
        return bool(np.all(a == hodge(a)))
    scale = max(1.0, float(np.max(np.abs(a))))
    return float(np.max(np.abs(a - hodge(a)))) <= tol * scale


def cross(a, b, check: bool = True) -> np.ndarray:
    """Cross product on Lambda^2_+, oriented so that s1 x s2 = s3."""
    if check and not (is_self_dual(a) and is_self_dual(b)):
        raise ValueError("cross product is defined on self-dual bivectors only")
    ca = sd_coords(a)
    cb = sd_coords(b)
    c = np.array([
        ca[1] * cb[2] - ca[2] * cb[1],
        ca[2] * cb[0] - ca[0] * cb[2],
        ca[0] * cb[1] - ca[1] * cb[0],
    ])
    return from_sd_coords(c)


def derivation(endo, b) -> np.ndarray:
    """Action of a skew endomorphism A on a bivector: A(Z^T) = AZ^T + Z^AT."""
    endo = np.asarray(endo)
    mb = bivector_matrix(b)
    return bivector_from_matrix(endo @ mb - mb @ endo)


def evaluate_two_form(beta, a):
    """Evaluate an antisymmetric bilinear form (4x4 matrix) on a bivector,
    with beta(X^Y) = beta(X, Y)."""
    beta = np.asarray(beta)
    a = np.asarray(a)
    return sum(a[n] * beta[i, j] for n, (i, j) in enumerate(PAIRS))


def two_form_from_covectors(u, v) -> np.ndarray:
    """(u ^ v)(X, Y) = u(X) v(Y) - u(Y) v(X), as a 4x4 matrix."""
    u = np.asarray(u)
    v = np.asarray(v)
    return np.outer(u, v) - np.outer(v, u)


def unit_self_dual(rng: np.random.Generator) -> np.ndarray:
    c = rng.normal(size=3)
    return from_sd_coords(c / np.linalg.norm(c))

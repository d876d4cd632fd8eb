"""Exterior algebra on R^4 and the symplectic structure used throughout.

Two-vectors are stored as length-6 arrays of Plücker coordinates in the
fixed order ``(p12, p13, p14, p23, p24, p34)`` with the minor convention
``p_ij = a_i b_j - a_j b_i`` (1-based indices).  With this convention the
symplectic pairing of the two spanning vectors is ``omega(a, b) = p13 - p24``.

All functions are pure and operate on plain numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: index pairs (0-based) of the Plücker coordinates, in storage order
PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

#: complex structure with omega(a, b) = <a, J b>
J = np.array(
    [
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ]
)

#: default relative rank tolerance for plane intersections
TOL_RANK = 1e-9


class IrregularGeometryError(ValueError):
    """Raised when an intersection dimension cannot be decided reliably."""


def wedge(a, b) -> np.ndarray:
    """Plücker coordinates of ``a ∧ b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.array([a[i] * b[j] - a[j] * b[i] for i, j in PAIRS])


def quad_volume(a1, a2, b1, b2) -> float:
    """Coefficient of ``a1∧a2∧b1∧b2`` on the volume form (a 4x4 determinant)."""
    return float(np.linalg.det(np.column_stack([a1, a2, b1, b2])))


def pair(P, Q) -> float:
    """Volume coefficient of ``P ∧ Q`` for two-vectors given in Plücker form.

    For ``P = a1∧a2`` and ``Q = b1∧b2`` this equals ``quad_volume(a1, a2, b1, b2)``.
    """
    p12, p13, p14, p23, p24, p34 = P
    q12, q13, q14, q23, q24, q34 = Q
    return float(
        p12 * q34 - p13 * q24 + p14 * q23 + p23 * q14 - p24 * q13 + p34 * q12
    )


def omega(a, b) -> float:
    """The symplectic form ``a1 b3 - a3 b1 - (a2 b4 - a4 b2)``."""
    return float(a[0] * b[2] - a[2] * b[0] - (a[1] * b[3] - a[3] * b[1]))


def omega_weighted(z: float, c: float, a, b) -> float:
    """The weighted form ``e^{c z} omega(a, b)``.

    Raises ``OverflowError`` when ``|c z| > 700`` since the weight is then not
    representable in double precision.
    """
    if abs(c * z) > 700.0:
        raise OverflowError(f"weight exp({c * z:.3g}) outside double range")
    return float(np.exp(c * z)) * omega(a, b)


def symplectic_det(a1, a2, b1, b2) -> float:
    """The 4x4 determinant expressed through symplectic pairings only."""
    m = np.array([[omega(a1, b1), omega(a1, b2)], [omega(a2, b1), omega(a2, b2)]])
    return float(-(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) + omega(a1, a2) * omega(b1, b2))


def grassmann_residual(T) -> float:
    """Plücker quadric ``p12 p34 - p13 p24 + p14 p23`` (zero iff decomposable)."""
    p12, p13, p14, p23, p24, p34 = T
    return float(p12 * p34 - p13 * p24 + p14 * p23)


def lagrangian_residual(T) -> float:
    """``p13 - p24``; for ``T = a∧b`` this is ``omega(a, b)``."""
    return float(T[1] - T[4])


def skew_matrix(T) -> np.ndarray:
    """The 4x4 antisymmetric matrix ``a b^T - b a^T`` of ``T = a∧b``."""
    S = np.zeros((4, 4))
    for k, (i, j) in enumerate(PAIRS):
        S[i, j] = T[k]
        S[j, i] = -T[k]
    return S


def plane_basis(T) -> tuple[np.ndarray, np.ndarray]:
    """Two vectors ``(a, b)`` spanning the plane of a decomposable ``T`` with
    ``wedge(a, b) == T`` (up to rounding); ``a`` and ``b`` are orthogonal with
    equal norms ``sqrt(|T|)``.
    """
    T = np.asarray(T, dtype=float)
    norm = float(np.linalg.norm(T))
    if norm == 0.0:
        raise ValueError("zero two-vector does not represent a plane")
    U, _, _ = np.linalg.svd(skew_matrix(T))
    a, b = U[:, 0], U[:, 1]
    w = wedge(a, b)
    s = np.sqrt(norm)
    if float(np.dot(w, T)) < 0.0:
        b = -b
    return s * a, s * b


@dataclass(frozen=True)
class PlaneBasis:
    """A plane in R^4 given by two linearly independent spanning vectors."""

    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        M = np.column_stack([self.b1, self.b2]).astype(float)
        if M.shape != (4, 2) or not np.all(np.isfinite(M)):
            raise ValueError("plane basis must be two finite vectors in R^4")
        s = np.linalg.svd(M, compute_uv=False)
        if s[0] == 0.0 or s[1] <= TOL_RANK * s[0]:
            raise ValueError("plane basis vectors are linearly dependent")

    @classmethod
    def from_two_vector(cls, T) -> "PlaneBasis":
        return cls(*plane_basis(T))

    def orthonormal(self) -> np.ndarray:
        """4x2 matrix with orthonormal columns spanning the plane."""
        Q, _ = np.linalg.qr(np.column_stack([self.b1, self.b2]))
        return Q


def plane_intersection(P: PlaneBasis, Q: PlaneBasis, tol_rank: float = TOL_RANK):
    """Dimension and orthonormal basis of ``span P ∩ span Q``.

    The decision uses the singular values of ``[p1 p2 | -q1 -q2]`` built from
    orthonormalised bases; a singular value below ``tol_rank`` (relative to
    the largest) counts as a null direction.  Values within a factor of 10 of
    the threshold are reported as irregular geometry.
    """
    A = P.orthonormal()
    B = Q.orthonormal()
    M = np.hstack([A, -B])
    _, s, Vt = np.linalg.svd(M)
    thresh = tol_rank * s[0]
    for sv in s:
        if thresh / 10.0 < sv < thresh * 10.0:
            raise IrregularGeometryError(
                f"singular value {sv:.3e} too close to rank threshold {thresh:.3e}; adjust tau"
            )
    null = Vt[s < thresh]
    dim = int(null.shape[0])
    if dim == 0:
        return 0, []
    vecs = np.array([A @ v[:2] for v in null]).T
    Qb, _ = np.linalg.qr(vecs)
    return dim, [Qb[:, k] for k in range(dim)]

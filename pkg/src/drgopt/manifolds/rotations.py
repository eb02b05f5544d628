"""SO(m) with Cayley or exponential retractions.

Tangent vectors at ``Q`` are ``Q B`` with ``B`` skew; coefficients refer to the
basis ``B_ij = (e_i e_j^T - e_j e_i^T) / sqrt(2)``, ``i < j``, which is
orthonormal for the trace metric ``<X, Y> = tr(X^T Y)``.
"""

import numpy as np
import scipy.linalg

from ..errors import SingularSolveError
from ..geometry import ManifoldBackend

SQRT2 = np.sqrt(2.0)
CAYLEY_RADIUS = 1e6


def skew_pairs(m):
    """Index pairs ``(i, j)``, ``i < j``, in row-major order."""
    return [(i, j) for i in range(m) for j in range(i + 1, m)]


def skew_from_coeffs(v, m):
    """Skew matrix ``sum_l v_l B_l``."""
    v = np.asarray(v, dtype=float)
    B = np.zeros((m, m))
    iu = np.triu_indices(m, 1)
    B[iu] = v / SQRT2
    return B - B.T


def coeffs_from_skew(B):
    """Coefficients of a skew matrix in the orthonormal basis."""
    m = B.shape[0]
    iu = np.triu_indices(m, 1)
    return SQRT2 * 0.5 * (B[iu] - B.T[iu])


def cayley(B):
    """Cayley transform ``(I - B)^{-1} (I + B)`` of a skew matrix.

    Note the derivative at 0 is ``2 id``; :func:`so_retract` halves its
    argument to obtain a retraction.
    """
    B = np.asarray(B, dtype=float)
    if not np.all(np.isfinite(B)) or np.linalg.norm(B) >= CAYLEY_RADIUS:
        raise SingularSolveError("skew argument outside the Cayley guard radius")
    I = np.eye(B.shape[0])
    try:
        return np.linalg.solve(I - B, I + B)
    except np.linalg.LinAlgError as exc:
        raise SingularSolveError(str(exc)) from exc


def cayley_inverse(R):
    """Skew ``B`` with ``cayley(B) = R``, i.e. ``(R - I)(R + I)^{-1}``."""
    I = np.eye(R.shape[0])
    try:
        B = np.linalg.solve((R + I).T, (R - I).T).T
    except np.linalg.LinAlgError as exc:
        raise SingularSolveError(str(exc)) from exc
    return 0.5 * (B - B.T)


def so_retract(Q, v, mode="cayley"):
    """``Q cay(B/2)`` or ``Q exp(B)`` with ``B`` built from coefficients ``v``."""
    Q = np.asarray(Q, dtype=float)
    B = skew_from_coeffs(v, Q.shape[0])
    if mode == "cayley":
        return Q @ cayley(0.5 * B)
    if mode == "exp":
        return Q @ scipy.linalg.expm(B)
    raise ValueError(f"unknown retraction mode {mode!r}")


def plane_rotation_angle(alpha, mode="cayley"):
    """Rotation angle produced by a single basis coefficient ``alpha``."""
    b = alpha / SQRT2
    if mode == "cayley":
        return 2.0 * np.arctan(0.5 * b)
    return b


def rotation_audit(Q):
    """``(||Q^T Q - I||_F, det Q)``."""
    Q = np.asarray(Q)
    return float(np.linalg.norm(Q.T @ Q - np.eye(Q.shape[0]))), float(np.linalg.det(Q))


class RotationBackend(ManifoldBackend):
    """SO(m) with the trace metric and a Cayley or exponential retraction."""

    def __init__(self, m, mode="cayley"):
        if m < 2:
            raise ValueError("SO(m) needs m >= 2")
        if mode not in ("cayley", "exp"):
            raise ValueError(f"unknown retraction mode {mode!r}")
        self.m = m
        self.mode = mode
        self.name = f"so{m}-{mode}"
        # cay(B/2) maps onto rotations without eigenvalue -1; keep well inside
        self.domain_radius = np.pi / 2 if mode == "cayley" else np.pi

    def dim(self, p):
        return self.m * (self.m - 1) // 2

    def retract(self, p, v):
        return so_retract(p, v, self.mode)

    def inverse(self, p, q):
        R = np.asarray(p).T @ np.asarray(q)
        if self.mode == "cayley":
            return coeffs_from_skew(2.0 * cayley_inverse(R))
        L = scipy.linalg.logm(R)
        return coeffs_from_skew(np.real(L))

    def inner(self, p, x, y):
        return float(np.dot(x, y))

    def gram(self, p):
        return np.eye(self.dim(p))

    def dist(self, p, q):
        L = scipy.linalg.logm(np.asarray(p).T @ np.asarray(q))
        return float(np.linalg.norm(np.real(L)))

    def embed(self, p):
        return np.asarray(p, dtype=float).ravel()

    def tangent_embed(self, p, v):
        return (np.asarray(p) @ skew_from_coeffs(v, self.m)).ravel()

    def random_point(self, rng):
        G = rng.standard_normal((self.m, self.m))
        Q, R = np.linalg.qr(G)
        Q = Q * np.sign(np.diag(R))
        if np.linalg.det(Q) < 0:
            Q[:, 0] = -Q[:, 0]
        return Q

    def validate(self, p):
        err, det = rotation_audit(p)
        if err > 1e-10 or abs(det - 1.0) > 1e-8:
            raise ValueError(f"not a rotation: orthogonality error {err}, det {det}")

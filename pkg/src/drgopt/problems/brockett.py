"""Brockett trace energy on SO(m).

The energy is ``V(Q) = tr(Q^T A Q D)`` with ``D`` diagonal and distinct.  Its
minimisers make ``X = Q^T A Q`` diagonal with the eigenvalues of ``A`` paired
in the opposite order to the entries of ``D``.

A coefficient along basis element ``B_ij`` moves ``Q`` by a plane rotation in
columns ``i`` and ``j``.  Only ``X_ii`` and ``X_jj`` enter the energy, and their
changes sum to zero, so a trial step needs ``X_ii``, ``X_jj`` and ``X_ij`` only.
"""

import math

import numpy as np

from ..engine.sweep import Problem, SweepState
from ..manifolds.rotations import RotationBackend, plane_rotation_angle, skew_pairs


def brockett_energy(Q, A, D):
    """``tr(Q^T A Q D)`` for diagonal ``D`` given as a vector."""
    X = Q.T @ A @ Q
    return float(np.diag(X) @ D)


def reference_spectrum(A, D):
    """Eigenvalues of ``A`` in the order the minimiser puts them on the diagonal."""
    descending = np.sort(np.linalg.eigvalsh(A))[::-1]
    rank = np.argsort(np.argsort(np.asarray(D)))
    return descending[rank]


def optimal_energy(A, D):
    return float(np.dot(reference_spectrum(A, D), D))


def brockett_diag_error(Q, A, spectrum):
    """``||diag(Q^T A Q) - spectrum||_2``."""
    return float(np.linalg.norm(np.diag(Q.T @ A @ Q) - spectrum))


def givens_delta(xii, xjj, xij, di, dj, phi):
    """Energy change of rotating columns ``i, j`` of ``Q`` by angle ``phi``."""
    s = math.sin(phi)
    return (di - dj) * (s * s * (xjj - xii) - math.sin(2.0 * phi) * xij)


def rotate_columns(M, i, j, phi):
    """``M <- M R`` for the plane rotation with ``R_ii = R_jj = cos``, ``R_ij = sin``."""
    c, s = math.cos(phi), math.sin(phi)
    mi = M[:, i].copy()
    mj = M[:, j]
    M[:, i] = c * mi - s * mj
    M[:, j] = s * mi + c * mj


def brockett_delta(Q, pair, alpha, A, D, mode="cayley"):
    """``V(Q R) - V(Q)`` where ``R`` is the retraction step along ``B_pair``."""
    i, j = pair
    X = Q.T @ A @ Q
    return givens_delta(X[i, i], X[j, j], X[i, j], D[i], D[j], plane_rotation_angle(alpha, mode))


class BrockettProblem(Problem):
    """Minimise ``tr(Q^T A Q D)`` over rotations.

    Parameters
    ----------
    A : (m, m) symmetric array
    D : (m,) array, optional
        Distinct diagonal entries; defaults to ``1, ..., m``.
    mode : {"cayley", "exp"}
    recenter : bool
        With ``True`` (default) each accepted coordinate step becomes the
        new retraction center, so every update is an exact plane rotation
        costing O(m).  With ``False`` the center stays at ``u^k`` for the
        whole sweep and every trial point is a full retraction.
    """

    def __init__(self, A, D=None, mode="cayley", recenter=True):
        A = np.asarray(A, dtype=float)
        m = A.shape[0]
        if A.shape != (m, m) or not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise ValueError("A must be square and symmetric")
        D = np.arange(1.0, m + 1) if D is None else np.asarray(D, dtype=float)
        if D.shape != (m,):
            raise ValueError("D must have one entry per row of A")
        gaps = np.diff(np.sort(D))
        if gaps.size and gaps.min() <= 1e-12 * max(1.0, np.abs(D).max()):
            raise ValueError("entries of D must be distinct")
        self.A = 0.5 * (A + A.T)
        self.D = D
        self.m = m
        self.mode = mode
        self.recenter = recenter
        self.backend = RotationBackend(m, mode)
        self.pairs = skew_pairs(m)

    def energy(self, Q):
        return brockett_energy(Q, self.A, self.D)

    def spectrum(self):
        return reference_spectrum(self.A, self.D)

    def optimal_energy(self):
        return optimal_energy(self.A, self.D)

    def begin(self, Q):
        if not self.recenter:
            return super().begin(Q)
        Q = np.array(Q, dtype=float)
        X = Q.T @ self.A @ Q
        state = SweepState(center=Q, eta=np.zeros(len(self.pairs)), current=Q,
                           value=float(np.diag(X) @ self.D))
        state.cache = {"X": X}
        return state

    def delta(self, state, j, alpha):
        if not self.recenter:
            return super().delta(state, j, alpha)
        if alpha == 0.0:
            return 0.0
        i, k = self.pairs[j]
        X = state.cache["X"]
        return givens_delta(X[i, i], X[k, k], X[i, k], self.D[i], self.D[k],
                            plane_rotation_angle(alpha, self.mode))

    def accept(self, state, j, alpha, dv):
        if not self.recenter:
            return super().accept(state, j, alpha, dv)
        i, k = self.pairs[j]
        phi = plane_rotation_angle(alpha, self.mode)
        X = state.cache["X"]
        rotate_columns(X, i, k, phi)
        rotate_columns(X.T, i, k, phi)
        rotate_columns(state.current, i, k, phi)
        state.eta[j] += alpha
        state.value += dv

    def end(self, state):
        return state.current

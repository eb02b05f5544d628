"""Sym+(3) with the affine-invariant metric.

Functions accept stacks of matrices with shape ``(..., 3, 3)``.  Tangent
coefficients refer to the sparse basis ``E_ij = e_i e_j^T + e_j e_i^T``
(``i <= j``, ordered 00, 01, 02, 11, 12, 22), which is not orthonormal for
the metric; :meth:`SpdBackend.gram` supplies the Gram matrix.
"""

from functools import cached_property

import numpy as np

from ..errors import DomainError, EigenFailure
from ..geometry import ManifoldBackend

EIG_FLOOR = 1e-13
BASIS_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_ROWS = np.array([p[0] for p in BASIS_PAIRS])
_COLS = np.array([p[1] for p in BASIS_PAIRS])


def basis_element(b):
    i, j = BASIS_PAIRS[b]
    E = np.zeros((3, 3))
    E[i, j] += 1.0
    E[j, i] += 1.0
    return E


def sym_from_coeffs(v):
    """Symmetric matrices ``sum_b v_b E_b`` from coefficients of shape (..., 6)."""
    v = np.asarray(v, dtype=float)
    Y = np.zeros(v.shape[:-1] + (3, 3))
    Y[..., _ROWS, _COLS] = v
    Y[..., _COLS, _ROWS] = v
    Y[..., [0, 1, 2], [0, 1, 2]] *= 2.0
    return Y


def coeffs_from_sym(Y):
    Y = np.asarray(Y, dtype=float)
    v = 0.5 * (Y[..., _ROWS, _COLS] + Y[..., _COLS, _ROWS])
    v[..., [0, 3, 5]] *= 0.5
    return v


def upper(A):
    """The six stored components a11 a12 a13 a22 a23 a33."""
    return np.asarray(A)[..., _ROWS, _COLS]


def from_upper(c):
    c = np.asarray(c, dtype=float)
    A = np.empty(c.shape[:-1] + (3, 3))
    A[..., _ROWS, _COLS] = c
    A[..., _COLS, _ROWS] = c
    return A


def _sym(A):
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def _eigh(A):
    try:
        return np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc


def _eigvalsh(A):
    try:
        return np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc


def _apply(w, V, f):
    """``V diag(f(w)) V^T``."""
    return np.einsum("...ik,...k,...jk->...ij", V, f(w), V)


def spd_powers(A):
    """``(A^{1/2}, A^{-1/2}, A^{-1})`` from one eigendecomposition."""
    w, V = _eigh(A)
    if np.any(w <= EIG_FLOOR):
        raise DomainError("matrix is not positive definite")
    return (_apply(w, V, np.sqrt), _apply(w, V, lambda x: 1.0 / np.sqrt(x)),
            _apply(w, V, lambda x: 1.0 / x))


def is_spd(A, floor=EIG_FLOOR):
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)) or not np.allclose(A, np.swapaxes(A, -1, -2), rtol=0, atol=1e-12):
        return False
    return bool(np.all(_eigvalsh(A) > floor))


def spd_retract(A, Y, A_inv=None):
    """Second-order retraction ``A + Y + Y A^{-1} Y / 2``."""
    A = np.asarray(A, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if A_inv is None:
        A_inv = np.linalg.inv(A)
    return _sym(A + Y + 0.5 * Y @ A_inv @ Y)


def spd_retract_inverse(A, B):
    """Tangent ``Y`` with ``spd_retract(A, Y) = B``.

    With ``Z = A^{-1/2} Y A^{-1/2}`` the retraction reads
    ``A^{-1/2} B A^{-1/2} = ((I + Z)^2 + I) / 2``, so ``Z`` follows from a
    square root on the branch where ``I + Z`` is positive definite.
    """
    rA, irA, _ = spd_powers(A)
    C = 2.0 * _sym(irA @ B @ irA) - np.eye(3)
    w, V = _eigh(C)
    if np.any(w <= 0):
        raise DomainError("point outside the second-order retraction's range")
    Z = _apply(w, V, lambda x: np.sqrt(x) - 1.0)
    return _sym(rA @ Z @ rA)


def spd_exp(A, Y):
    """Riemannian exponential ``A^{1/2} e^{A^{-1/2} Y A^{-1/2}} A^{1/2}``.

    Evaluated as ``A + A^{1/2} (e^Z - I) A^{1/2}`` so that ``Y = 0`` returns
    ``A`` exactly.
    """
    A = np.asarray(A, dtype=float)
    rA, irA, _ = spd_powers(A)
    w, V = _eigh(_sym(irA @ Y @ irA))
    return _sym(A + rA @ _apply(w, V, np.expm1) @ rA)


def spd_log(A, B):
    """Riemannian logarithm, the inverse of :func:`spd_exp`."""
    rA, irA, _ = spd_powers(A)
    w, V = _eigh(_sym(irA @ B @ irA))
    if np.any(w <= 0):
        raise DomainError("argument is not positive definite")
    return _sym(rA @ _apply(w, V, np.log) @ rA)


def spd_metric(A, X, Y, A_inv=None):
    """Affine-invariant inner product ``tr(A^{-1/2} X A^{-1} Y A^{-1/2})``."""
    if A_inv is None:
        A_inv = np.linalg.inv(A)
    return np.einsum("...ij,...ji->...", A_inv @ X, A_inv @ Y)


def spd_distance(A, B, A_invsqrt=None):
    """Geodesic distance ``sqrt(sum log(kappa_i)^2)``.

    ``kappa`` are the eigenvalues of ``A^{-1/2} B A^{-1/2}``; pass a cached
    ``A^{-1/2}`` to skip one eigendecomposition.
    """
    if A_invsqrt is None:
        A_invsqrt = spd_powers(A)[1]
    kappa = _eigvalsh(_sym(A_invsqrt @ B @ A_invsqrt))
    return np.sqrt(np.sum(np.log(kappa) ** 2, axis=-1))


def random_spd(rng, size=(), spread=1.0):
    """Random SPD matrices ``exp(S)`` with Gaussian symmetric ``S``."""
    G = rng.standard_normal(tuple(size) + (3, 3)) * spread
    w, V = _eigh(_sym(G))
    return _sym(_apply(w, V, np.exp))


class SpdAtom:
    """One SPD(3) sample with lazily cached square roots and inverse."""

    def __init__(self, A):
        A = np.array(A, dtype=float)
        if A.shape == (6,):
            A = from_upper(A)
        if not is_spd(A):
            raise ValueError("atom is not symmetric positive definite")
        self.A = A

    @cached_property
    def _powers(self):
        return spd_powers(self.A)

    @property
    def sqrt(self):
        return self._powers[0]

    @property
    def invsqrt(self):
        return self._powers[1]

    @property
    def inv(self):
        return self._powers[2]

    @property
    def components(self):
        return upper(self.A)


class SpdBackend(ManifoldBackend):
    """Sym+(3) with the affine-invariant metric.

    ``mode="second_order"`` uses ``A + Y + Y A^{-1} Y / 2``; ``mode="exp"`` the
    Riemannian exponential.  The second-order inverse exists while
    ``I + A^{-1/2} Y A^{-1/2}`` stays positive definite, which holds inside the
    unit ball of the metric norm.
    """

    atom_shape = (3, 3)
    atom_dim = 6

    def __init__(self, mode="second_order"):
        if mode not in ("second_order", "exp"):
            raise ValueError(f"unknown retraction mode {mode!r}")
        self.mode = mode
        self.name = f"spd3-{mode}"
        self.domain_radius = 1.0 if mode == "second_order" else np.inf

    def dim(self, p):
        return 6

    def retract(self, p, v):
        return self.atom_retract(np.asarray(p, dtype=float), np.asarray(v, dtype=float))

    def inverse(self, p, q):
        return self.atom_inverse(np.asarray(p, dtype=float), np.asarray(q, dtype=float))

    def inner(self, p, x, y):
        return float(spd_metric(p, sym_from_coeffs(x), sym_from_coeffs(y)))

    def gram(self, p):
        Ainv = np.linalg.inv(p)
        E = np.stack([basis_element(b) for b in range(6)])
        M = Ainv @ E
        return np.einsum("aij,bji->ab", M, M)

    def dist(self, p, q):
        return float(spd_distance(p, q))

    def embed(self, p):
        return np.asarray(p, dtype=float).ravel()

    def tangent_embed(self, p, v):
        return sym_from_coeffs(v).ravel()

    def random_point(self, rng):
        return random_spd(rng)

    def validate(self, p):
        if not is_spd(p):
            raise ValueError("not symmetric positive definite")

    # batched atom rules
    def atom_retract(self, p, v):
        Y = sym_from_coeffs(v)
        if self.mode == "second_order":
            return spd_retract(p, Y)
        return spd_exp(p, Y)

    def atom_inverse(self, p, q):
        if self.mode == "second_order":
            return coeffs_from_sym(spd_retract_inverse(p, q))
        return coeffs_from_sym(spd_log(p, q))

    def atom_dist(self, p, q):
        return spd_distance(p, q)

    def atom_inner(self, p, x, y):
        return spd_metric(p, sym_from_coeffs(x), sym_from_coeffs(y))

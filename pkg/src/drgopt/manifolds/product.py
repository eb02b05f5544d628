"""Fiberwise lift of an atom backend to an l x m image of atoms.

Product points are arrays of shape ``(l, m) + atom_shape``.  Tangent
coefficients are flat vectors of length ``l * m * atom_dim`` in raster order
(row-major over atoms, then the atom's own basis order).
"""

import numpy as np

from ..geometry import ManifoldBackend


class ProductBackend(ManifoldBackend):
    """Riemannian product of ``l * m`` copies of a batched atom backend.

    The metric is the sum of atom metrics, the retraction acts atom by atom
    and the distance is the l2 combination of atom distances.
    """

    def __init__(self, atom, shape):
        l, m = shape
        if l < 1 or m < 1:
            raise ValueError("grid dimensions must be positive")
        self.atom = atom
        self.shape = (int(l), int(m))
        self.name = f"product-{atom.name}-{l}x{m}"
        self.domain_radius = atom.domain_radius

    @property
    def k(self):
        return self.atom.atom_dim

    def dim(self, p=None):
        return self.shape[0] * self.shape[1] * self.k

    def _coeffs(self, v):
        return np.asarray(v, dtype=float).reshape(self.shape + (self.k,))

    def retract(self, p, v):
        return self.atom.atom_retract(np.asarray(p, dtype=float), self._coeffs(v))

    def inverse(self, p, q):
        return self.atom.atom_inverse(np.asarray(p, dtype=float), np.asarray(q, dtype=float)).ravel()

    def inner(self, p, x, y):
        return float(np.sum(self.atom.atom_inner(p, self._coeffs(x), self._coeffs(y))))

    def gram(self, p):
        n = self.dim()
        k = self.k
        G = np.zeros((n, n))
        l, m = self.shape
        for i in range(l):
            for j in range(m):
                s = (i * m + j) * k
                G[s:s + k, s:s + k] = self.atom.gram(p[i, j])
        return G

    def dist(self, p, q):
        return float(np.sqrt(np.sum(self.atom.atom_dist(p, q) ** 2)))

    def embed(self, p):
        l, m = self.shape
        return np.concatenate([self.atom.embed(p[i, j]) for i in range(l) for j in range(m)])

    def tangent_embed(self, p, v):
        l, m = self.shape
        c = self._coeffs(v)
        parts = [self.atom.tangent_embed(p[i, j], c[i, j]) for i in range(l) for j in range(m)]
        return np.concatenate(parts)

    def random_point(self, rng):
        l, m = self.shape
        atoms = [self.atom.random_point(rng) for _ in range(l * m)]
        return np.asarray(atoms, dtype=float).reshape(self.shape + tuple(self.atom.atom_shape))

    def validate(self, p):
        p = np.asarray(p)
        if p.shape != self.shape + tuple(self.atom.atom_shape):
            raise ValueError(f"expected shape {self.shape + tuple(self.atom.atom_shape)}, got {p.shape}")
        for i in range(self.shape[0]):
            for j in range(self.shape[1]):
                self.atom.validate(p[i, j])


def product_lift(atom, shape):
    """Product-manifold backend over an ``l x m`` grid of ``atom`` points."""
    return ProductBackend(atom, shape)

"""The circle S^1 represented by phase angles in (-pi, pi].

All functions broadcast over arrays, so the same backend serves single atoms
and whole phase images.
"""

import numpy as np

from ..geometry import ManifoldBackend

TWO_PI = 2.0 * np.pi


def wrap(x):
    """Map reals to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), TWO_PI)


def angular_distance(phi, theta):
    """Geodesic distance on S^1 between phase angles, in [0, pi]."""
    d = np.abs(np.asarray(phi, dtype=float) - np.asarray(theta, dtype=float))
    return np.where(d <= np.pi, d, TWO_PI - d)


def circle_retract(phi, t):
    """Move ``phi`` by ``t`` radians and wrap back into (-pi, pi]."""
    return wrap(np.asarray(phi, dtype=float) + t)


def circle_inverse(phi, psi):
    """Signed wrapped offset ``t`` with ``circle_retract(phi, t) = psi``."""
    return wrap(np.asarray(psi, dtype=float) - phi)


class CircleBackend(ManifoldBackend):
    """S^1 with metric ``g(x, y) = x y``.

    Points are scalars (or arrays of scalars for batched use); tangent
    coefficients carry a trailing axis of length one.
    """

    name = "circle"
    atom_shape = ()
    atom_dim = 1
    domain_radius = np.pi

    def dim(self, p):
        return int(np.size(p))

    def retract(self, p, v):
        v = np.asarray(v, dtype=float)
        return circle_retract(p, v.reshape(np.shape(p)))

    def inverse(self, p, q):
        return np.atleast_1d(circle_inverse(p, q)).ravel()

    def inner(self, p, x, y):
        return float(np.sum(np.asarray(x) * np.asarray(y)))

    def gram(self, p):
        return np.eye(self.dim(p))

    def dist(self, p, q):
        return float(np.sqrt(np.sum(angular_distance(p, q) ** 2)))

    def embed(self, p):
        p = np.asarray(p, dtype=float)
        return np.stack([np.cos(p), np.sin(p)], axis=-1).ravel()

    def tangent_embed(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float).reshape(p.shape)
        return np.stack([-np.sin(p) * v, np.cos(p) * v], axis=-1).ravel()

    def random_point(self, rng):
        return float(wrap(rng.uniform(-np.pi, np.pi)))

    def validate(self, p):
        p = np.asarray(p)
        if not np.all(np.isfinite(p)) or np.any(p <= -np.pi) or np.any(p > np.pi):
            raise ValueError("phase outside (-pi, pi]")

    # batched atom rules used by the product lift and the TV problem
    def atom_retract(self, p, v):
        return circle_retract(p, v[..., 0])

    def atom_inverse(self, p, q):
        return circle_inverse(p, q)[..., None]

    def atom_dist(self, p, q):
        return angular_distance(p, q)

    def atom_inner(self, p, x, y):
        return np.sum(x * y, axis=-1)

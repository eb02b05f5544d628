"""The (m-1)-sphere in spherical coordinates.

Points are angle vectors ``theta`` of length ``m - 1``.  The retraction is
plain addition in angle space, so a single-coordinate step rescales a
contiguous block of the embedded unit vector and the Rayleigh energy can be
updated from a handful of cached partial sums.
"""

import math

import numpy as np

from ..errors import NearPoleError
from ..geometry import ManifoldBackend

#: |sin| or |cos| of an angle below this disables the incremental path
POLE_GUARD = 1e-8


def spherical_embed(theta):
    """Unit vector in R^m with spherical coordinates ``theta`` (length m-1)."""
    theta = np.asarray(theta, dtype=float)
    m = theta.size + 1
    u = np.empty(m)
    sin_prod = 1.0
    for r in range(m - 1):
        u[r] = np.cos(theta[r]) * sin_prod
        sin_prod *= np.sin(theta[r])
    u[m - 1] = sin_prod
    return u


def spherical_angles(u):
    """Inverse of :func:`spherical_embed` with angles in [0, pi] and a last angle in (-pi, pi]."""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    m = u.size
    theta = np.zeros(m - 1)
    for r in range(m - 2):
        tail = np.linalg.norm(u[r + 1:])
        theta[r] = np.arctan2(tail, u[r])
    theta[m - 2] = np.arctan2(u[m - 1], u[m - 2])
    return theta


def embed_jacobian(theta):
    """Derivative of :func:`spherical_embed`, shape (m, m-1)."""
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    m = n + 1
    s, c = np.sin(theta), np.cos(theta)
    J = np.zeros((m, n))
    for r in range(m):
        lead = c[r] if r < n else 1.0
        for l in range(min(r + 1, n)):
            if l == r:
                J[r, l] = -s[r] * np.prod(s[:r])
            else:
                others = np.prod(np.delete(s[:r], l))
                J[r, l] = lead * c[l] * others
    return J


def sphere_update_factors(theta, l, alpha, guard=POLE_GUARD):
    """Scaling factors of a step ``theta_l -> theta_l + alpha``.

    Returns ``(c, s, kappa)`` with ``c = cos(theta_l + alpha) / cos(theta_l)``,
    ``s = sin(theta_l + alpha) / sin(theta_l)`` and
    ``kappa = (c - 1, s - 1, s c - 1, s^2 - 1, c^2 - 1)``.
    """
    t = float(theta[l])
    st, ct = math.sin(t), math.cos(t)
    if abs(st) <= guard or abs(ct) <= guard:
        raise NearPoleError(f"angle {l} = {t!r} within {guard} of a pole")
    # differences written through half-angle products to avoid cancellation
    sh = 2.0 * math.sin(0.5 * alpha)
    mid = t + 0.5 * alpha
    k1 = -sh * math.sin(mid) / ct
    k2 = sh * math.cos(mid) / st
    c, s = 1.0 + k1, 1.0 + k2
    return c, s, (k1, k2, k1 + k2 + k1 * k2, k2 * (2.0 + k2), k1 * (2.0 + k1))


class SphereBackend(ManifoldBackend):
    """Angle space of S^{m-1} with the additive retraction ``theta + eta``.

    The metric is the flat one on angle space, so the coordinate basis is
    orthonormal and the distance is Euclidean in ``theta``.  ``embed`` maps to
    the unit vector in R^m, which is what tangency checks look at.
    """

    name = "sphere"

    def __init__(self, m):
        if m < 2:
            raise ValueError("sphere needs m >= 2")
        self.m = m

    def dim(self, p):
        return self.m - 1

    def retract(self, p, v):
        return np.asarray(p, dtype=float) + np.asarray(v, dtype=float)

    def inverse(self, p, q):
        return np.asarray(q, dtype=float) - np.asarray(p, dtype=float)

    def inner(self, p, x, y):
        return float(np.dot(x, y))

    def gram(self, p):
        return np.eye(self.m - 1)

    def dist(self, p, q):
        return float(np.linalg.norm(np.asarray(q) - np.asarray(p)))

    def embed(self, p):
        return spherical_embed(p)

    def tangent_embed(self, p, v):
        return embed_jacobian(p) @ np.asarray(v, dtype=float)

    def random_point(self, rng):
        return spherical_angles(rng.standard_normal(self.m))

    def validate(self, p):
        p = np.asarray(p)
        if p.shape != (self.m - 1,) or not np.all(np.isfinite(p)):
            raise ValueError("expected a finite angle vector of length m-1")

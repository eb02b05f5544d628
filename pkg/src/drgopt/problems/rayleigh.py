"""Rayleigh quotient ``u^T A u`` on the unit sphere in spherical coordinates.

A step in angle ``l`` rescales ``u_l`` by ``c`` and the tail ``u_{l+1:}`` by
``s``; the head is untouched.  Splitting ``A u`` into the contributions of the
head and of the tail gives five scalar sums, after which every trial step
costs a few flops.  The sums are moved from one angle to the next in O(m).
"""

import math

import numpy as np

from ..engine.sweep import Problem, SweepState
from ..manifolds.sphere import POLE_GUARD, SphereBackend, spherical_embed, sphere_update_factors


def rayleigh_energy(theta, A):
    u = spherical_embed(theta)
    return float(u @ A @ u)


def partial_sums(u, A, l):
    """``(S1, ..., S5)`` of angle ``l``; see :func:`kappa_delta`."""
    z_pre = A[:, :l] @ u[:l]
    z_tail = A[:, l + 1:] @ u[l + 1:]
    x = u[l]
    tail = u[l + 1:]
    return (x * z_pre[l], float(tail @ z_pre[l + 1:]), x * z_tail[l],
            float(tail @ z_tail[l + 1:]), x * x * A[l, l])


def kappa_delta(kappa, sums):
    k1, k2, k3, k4, k5 = kappa
    S1, S2, S3, S4, S5 = sums
    return 2.0 * (k1 * S1 + k2 * S2 + k3 * S3) + k4 * S4 + k5 * S5


def rayleigh_delta(theta, l, alpha, A, guard=POLE_GUARD):
    """``V(theta + alpha e_l) - V(theta)`` from the partial sums.

    Raises :class:`NearPoleError` when ``theta_l`` is too close to a multiple
    of pi/2 for the scaling factors to be formed.
    """
    if alpha == 0.0:
        return 0.0
    _, _, kappa = sphere_update_factors(theta, l, alpha, guard)
    return kappa_delta(kappa, partial_sums(spherical_embed(theta), A, l))


class RayleighProblem(Problem):
    """Minimise ``u^T A u`` over unit vectors ``u = embed(theta)``.

    Parameters
    ----------
    A : (m, m) symmetric array
    audit : bool
        Compare every incremental delta with a full recomputation and keep
        the largest discrepancy (relative to ``1 + |V|``) in
        ``audit_max``.  Slow; meant for tests.
    """

    def __init__(self, A, audit=False, guard=POLE_GUARD):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise ValueError("A must be symmetric")
        self.A = 0.5 * (A + A.T)
        self.m = A.shape[0]
        self.backend = SphereBackend(self.m)
        self.guard = guard
        self.audit = audit
        self.audit_max = 0.0
        self.fallbacks = 0

    def energy(self, theta):
        return rayleigh_energy(theta, self.A)

    def begin(self, theta):
        theta = np.array(theta, dtype=float)
        u = spherical_embed(theta)
        state = SweepState(center=theta.copy(), eta=np.zeros(self.m - 1), current=theta,
                           value=float(u @ self.A @ u))
        state.cache = {"u": u, "pos": -1, "j": -1}
        return state

    def _locate(self, state, l):
        """Arrange the split products and sums for angle ``l``."""
        cache = state.cache
        u, A = cache["u"], self.A
        pos = cache["pos"]
        if pos < 0 or pos > l:
            cache["z_pre"] = A[:, :l] @ u[:l]
            cache["z_tail"] = A[:, l + 1:] @ u[l + 1:]
        else:
            z_pre, z_tail = cache["z_pre"], cache["z_tail"]
            for r in range(pos, l):
                z_pre += A[:, r] * u[r]
                z_tail -= A[:, r + 1] * u[r + 1]
        cache["pos"] = l
        z_pre, z_tail = cache["z_pre"], cache["z_tail"]
        x = float(u[l])
        tail = u[l + 1:]
        cache["sums"] = (x * float(z_pre[l]), float(tail @ z_pre[l + 1:]), x * float(z_tail[l]),
                         float(tail @ z_tail[l + 1:]), x * x * float(A[l, l]))
        t = float(state.current[l])
        cache["j"] = l
        cache["pole"] = abs(math.sin(t)) <= self.guard or abs(math.cos(t)) <= self.guard

    def delta(self, state, j, alpha):
        if alpha == 0.0:
            return 0.0
        cache = state.cache
        if cache["j"] != j:
            self._locate(state, j)
        if cache["pole"]:
            self.fallbacks += 1
            trial = state.current.copy()
            trial[j] += alpha
            return self.energy(trial) - self.energy(state.current)
        _, _, kappa = sphere_update_factors(state.current, j, alpha, self.guard)
        d = kappa_delta(kappa, cache["sums"])
        if self.audit:
            trial = state.current.copy()
            trial[j] += alpha
            ref = self.energy(trial) - self.energy(state.current)
            self.audit_max = max(self.audit_max, abs(d - ref) / (1.0 + abs(state.value)))
        return d

    def accept(self, state, j, alpha, dv):
        cache = state.cache
        if cache["j"] != j:
            self._locate(state, j)
        if not cache["pole"]:
            c, s, _ = sphere_update_factors(state.current, j, alpha, self.guard)
        state.eta[j] += alpha
        state.current[j] += alpha
        state.value += dv
        if cache["pole"]:
            cache["u"] = spherical_embed(state.current)
            cache["pos"] = -1
        else:
            u = cache["u"]
            u[j] *= c
            u[j + 1:] *= s
            cache["z_tail"] *= s
        cache["j"] = -1

    def end(self, state):
        return state.current

    def coordinate_scale(self, state, j):
        return 1.0


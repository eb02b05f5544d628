"""Manifold backend contract and generic verification helpers.

Tangent vectors are carried as coefficient vectors with respect to a
per-point basis ``{E_l}`` of the tangent space.  Every backend maps those
coefficients to an ambient ("embedded") representation so that generic
checks such as first-order tangency of a retraction can be run by finite
differences without knowing anything about the manifold.
"""

from dataclasses import dataclass

import numpy as np

FD_STEP = 1e-5


class ManifoldBackend:
    """Bundle of retraction, metric, distance and basis rules for one manifold.

    Subclasses implement the abstract methods below.  All methods are pure
    functions of their arguments; backends hold only immutable configuration
    and may be shared freely.
    """

    name = "abstract"
    #: radius (in the metric norm) within which ``inverse`` undoes ``retract``
    domain_radius = np.inf

    def dim(self, p):
        raise NotImplementedError

    def retract(self, p, v):
        raise NotImplementedError

    def inverse(self, p, q):
        raise NotImplementedError

    def inner(self, p, x, y):
        raise NotImplementedError

    def dist(self, p, q):
        raise NotImplementedError

    def embed(self, p):
        """Flat ambient representation of a point."""
        raise NotImplementedError

    def tangent_embed(self, p, v):
        """Ambient representation of the tangent vector with coefficients ``v``."""
        raise NotImplementedError

    def random_point(self, rng):
        raise NotImplementedError

    def validate(self, p):
        """Raise ``ValueError`` if ``p`` is not a valid point."""

    # -- derived rules -----------------------------------------------------

    def norm(self, p, x):
        return float(np.sqrt(max(self.inner(p, x, x), 0.0)))

    def zero(self, p):
        return np.zeros(self.dim(p))

    def gram(self, p):
        """Matrix of metric inner products of the basis vectors at ``p``."""
        n = self.dim(p)
        eye = np.eye(n)
        G = np.empty((n, n))
        for a in range(n):
            for b in range(a, n):
                G[a, b] = G[b, a] = self.inner(p, eye[a], eye[b])
        return G

    def random_tangent(self, rng, p, scale=1.0):
        """Random tangent with metric norm ``scale``."""
        v = rng.standard_normal(self.dim(p))
        nv = self.norm(p, v)
        return v * (scale / nv) if nv > 0 else v


@dataclass
class RetractionReport:
    zero_ok: bool
    identity_ok: bool
    roundtrip_ok: bool
    zero_error: float = 0.0
    identity_error: float = 0.0
    roundtrip_error: float = 0.0

    @property
    def ok(self):
        return self.zero_ok and self.identity_ok and self.roundtrip_ok


def _fd_jacobian_at_zero(backend, p, h=FD_STEP):
    """Central-difference Jacobian of ``v -> embed(retract(p, v))`` at 0."""
    n = backend.dim(p)
    cols = []
    for l in range(n):
        e = np.zeros(n)
        e[l] = h
        plus = backend.embed(backend.retract(p, e))
        minus = backend.embed(backend.retract(p, -e))
        cols.append((plus - minus) / (2 * h))
    return np.stack(cols, axis=1)


def verify_retraction_axioms(backend, point, tolerance=1e-6, trials=5, rng=None):
    """Check ``phi_p(0) = p``, ``dphi_p|0 = id`` and ``inverse o retract = id``.

    Never raises on a failed property; failures show up as ``False`` flags.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    report = RetractionReport(False, False, False)
    try:
        base = backend.embed(point)
        at_zero = backend.embed(backend.retract(point, backend.zero(point)))
        report.zero_error = float(np.max(np.abs(at_zero - base), initial=0.0))
        report.zero_ok = report.zero_error <= 1e-15 * max(1.0, np.max(np.abs(base)))
    except Exception:
        return report

    try:
        n = backend.dim(point)
        scale = max(1.0, float(np.max(np.abs(base))))
        J = _fd_jacobian_at_zero(backend, point, FD_STEP * scale)
        ref = np.stack([backend.tangent_embed(point, e) for e in np.eye(n)], axis=1)
        report.identity_error = float(np.max(np.abs(J - ref)) / max(1.0, np.max(np.abs(ref))))
        report.identity_ok = report.identity_error <= tolerance
    except Exception:
        report.identity_ok = False

    try:
        radius = min(backend.domain_radius, 1.0)
        worst = 0.0
        for _ in range(trials):
            v = backend.random_tangent(rng, point, 0.1 * radius * rng.uniform(0.1, 1.0))
            back = backend.inverse(point, backend.retract(point, v))
            worst = max(worst, float(np.max(np.abs(back - v))))
        report.roundtrip_error = worst
        report.roundtrip_ok = worst <= tolerance
    except Exception:
        report.roundtrip_ok = False
    return report


def verify_metric_symmetry(backend, point, trials=10, rng=None):
    """True iff ``g(x, y)`` and ``g(y, x)`` agree on ``trials`` random pairs."""
    rng = np.random.default_rng(1) if rng is None else rng
    n = backend.dim(point)
    for _ in range(trials):
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        gxy = backend.inner(point, x, y)
        gyx = backend.inner(point, y, x)
        if abs(gxy - gyx) > 1e-12 * (1 + abs(gxy)):
            return False
    return True


def tangency_order(backend, point, v, steps=(1e-2, 1e-3, 1e-4)):
    """Observed order of ``|embed(phi_p(hv)) - embed(p) - h v_emb|`` in ``h``.

    Returns ``inf`` when the remainder vanishes to rounding at every step
    (retractions that are affine in the chosen embedding).
    """
    base = backend.embed(point)
    tv = backend.tangent_embed(point, v)
    errs = []
    for h in steps:
        moved = backend.embed(backend.retract(point, h * np.asarray(v)))
        errs.append(float(np.linalg.norm(moved - base - h * tv)))
    floor = 1e-14 * max(1.0, float(np.linalg.norm(base)))
    if all(e <= floor for e in errs):
        return np.inf
    orders = []
    for (h1, e1), (h2, e2) in zip(zip(steps, errs), zip(steps[1:], errs[1:])):
        if e2 <= floor:
            continue
        orders.append(np.log(e1 / e2) / np.log(h1 / h2))
    return float(min(orders)) if orders else np.inf

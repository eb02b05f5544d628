"""Itoh-Abe discrete Riemannian gradient sweeps.

One outer iteration fixes the retraction center ``c = u^k`` and walks the
tangent basis once.  For coordinate ``j`` it solves the scalar equation

    alpha = -tau * (V(phi_c(eta + alpha E_j)) - V(phi_c(eta))) / alpha

for a nonzero root, written as ``r(alpha) = alpha + tau dV(alpha) / alpha = 0``
with ``r(0)`` defined by its limit ``tau * dV'(0)``.  Every accepted root has
``dV = -alpha^2 / tau <= 0``, so the energy never increases whatever ``tau``.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import DrgError, EvaluationError, MaxEvalExceeded, NoBracket
from .log import ConvergenceLog, LogRow
from .roots import brent_dekker, brent_dekker_batch, expand_bracket
from .schedules import StepSchedule, StopRule

FD_REL_STEP = 1e-7
SKIP_R0 = 1e-14
ROOT_TOL = 1e-12
MAX_EXPAND = 60
#: energy differences below this multiple of eps * (1 + |V|) count as rounding
NOISE_REL = 64 * np.finfo(float).eps


@dataclass
class SweepState:
    """Running quantities of one sweep: ``current = retract(center, eta)``."""

    center: Any
    eta: np.ndarray
    current: Any
    value: float
    j: int = 0
    cache: Any = None


@dataclass
class SweepStats:
    alphas: np.ndarray
    n_eval: int = 0
    skipped: int = 0
    dv: float = 0.0
    dgnorm2: float = 0.0

    def finish(self, tau):
        self.dgnorm2 = float(math.fsum((self.alphas / tau) ** 2))
        return self


class Problem:
    """An energy on a manifold plus the bookkeeping a coordinate sweep needs.

    The default implementation is the literal fixed-center scheme: every
    trial point is ``backend.retract(center, eta + alpha e_j)`` and the energy
    is evaluated from scratch.  Subclasses override :meth:`begin`,
    :meth:`delta` and :meth:`accept` with cheap incremental versions.
    """

    backend = None

    def energy(self, u):
        raise NotImplementedError

    def n_coords(self, u):
        return self.backend.dim(u)

    def begin(self, u):
        n = self.n_coords(u)
        return SweepState(center=u, eta=np.zeros(n), current=u, value=self.energy(u),
                          cache={})

    def _trial(self, state, j, alpha):
        eta = state.eta.copy()
        eta[j] += alpha
        return self.backend.retract(state.center, eta)

    def delta(self, state, j, alpha):
        """``V(phi_c(eta + alpha E_j)) - V(phi_c(eta))``."""
        if alpha == 0.0:
            return 0.0
        memo = state.cache
        if memo.get("key") == (j, alpha):
            return memo["value"] - state.value
        trial = self._trial(state, j, alpha)
        value = self.energy(trial)
        memo.update(key=(j, alpha), point=trial, value=value)
        return value - state.value

    def accept(self, state, j, alpha, dv):
        memo = state.cache
        if memo.get("key") != (j, alpha):
            self.delta(state, j, alpha)
        state.eta[j] += alpha
        state.current = memo["point"]
        state.value = memo["value"]
        memo.clear()

    def end(self, state):
        return state.current

    def coordinate_scale(self, state, j):
        """Magnitude used to size the difference step for ``r(0)``."""
        return 0.0


class EnergyProblem(Problem):
    """Wrap a plain callable ``V(point)`` on a backend."""

    def __init__(self, backend, energy):
        self.backend = backend
        self._energy = energy

    def energy(self, u):
        return float(self._energy(u))


@dataclass
class SolverOptions:
    root_tol: float = ROOT_TOL
    max_eval: int = 200
    max_expand: int = MAX_EXPAND
    warm_start: bool = True


def _direction_estimate(delta, h, noise=0.0):
    """Derivative estimate of ``alpha -> dV(alpha)`` at 0, or ``None`` at a
    kink that is a local minimum along the coordinate.

    The symmetric quotient is used where the one-sided quotients agree in
    sign; at a concave kink the one-sided quotient of smaller magnitude is
    used.  A concave kink must rise above ``noise`` on both sides, otherwise
    rounding in the energy differences could pose as one.
    """
    dp = delta(h)
    dm = delta(-h)
    if not (math.isfinite(dp) and math.isfinite(dm)):
        raise EvaluationError("non-finite energy difference")
    qp = dp / h
    qm = -dm / h
    if qp > 0 and qm < 0:
        return None
    if qp < 0 and qm > 0 and min(-dp, -dm) > noise and _is_kink(delta, h, qp):
        return qp if abs(qp) < abs(qm) else qm
    return (dp - dm) / (2 * h)


def _is_kink(delta, h, qp):
    # first-order growth on both sides is a kink; a smooth saddle with zero
    # slope halves its one-sided quotient when the step is halved
    half = delta(0.5 * h) / (0.5 * h)
    return abs(half) >= 0.75 * abs(qp)


def coordinate_residual(delta, alpha, tau, h=FD_REL_STEP):
    """``r(alpha) = alpha + tau * dV(alpha) / alpha``, continuous at 0.

    ``delta`` maps a step along the coordinate to the energy change.
    """
    if alpha == 0.0:
        d = _direction_estimate(delta, h)
        return 0.0 if d is None else tau * d
    dv = delta(alpha)
    if not math.isfinite(dv):
        raise EvaluationError(f"non-finite energy difference at alpha={alpha!r}")
    return alpha + tau * dv / alpha


def solve_coordinate(delta, tau, scale=0.0, alpha_prev=0.0, opts=None, noise=0.0):
    """Nonzero root of the coordinate residual.

    ``noise`` is the rounding level of ``delta`` (see :func:`_direction_estimate`).

    Returns ``(alpha, dv, n_eval)``; ``alpha = 0`` marks a skipped coordinate
    (no descent direction, no bracket, or a root that failed the dissipation
    check).
    """
    opts = opts or SolverOptions()
    seen = {}

    def dV(a):
        if a not in seen:
            seen[a] = delta(a)
        return seen[a]

    h = FD_REL_STEP * (1.0 + abs(scale))
    d = _direction_estimate(dV, h, noise)
    if d is None:
        return 0.0, 0.0, len(seen)
    r0 = tau * d
    if abs(r0) < SKIP_R0 or not math.isfinite(r0):
        return 0.0, 0.0, len(seen)
    direction = -1.0 if d > 0 else 1.0
    width = abs(alpha_prev) if (opts.warm_start and alpha_prev * direction > 0) else abs(r0)

    def r_expand(a):
        # far trial points may leave the domain numerically; that ends the walk
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                v = dV(a)
        except (DrgError, np.linalg.LinAlgError):
            return math.nan
        return a + tau * v / a if math.isfinite(v) else math.nan

    def r(a):
        v = dV(a)
        if not math.isfinite(v):
            raise EvaluationError(f"non-finite energy difference at alpha={a!r}")
        return a + tau * v / a

    try:
        a, b, fa, fb, _ = expand_bracket(r_expand, 0.0, direction, width,
                                         max_expand=opts.max_expand, f_guess=r0)
    except NoBracket:
        return 0.0, 0.0, len(seen)
    ftol = opts.root_tol * (1.0 + abs(r0))
    try:
        alpha, _, _ = brent_dekker(r, a, b, tol=opts.root_tol, max_eval=opts.max_eval,
                                   ftol=ftol, fa=fa, fb=fb)
    except MaxEvalExceeded as exc:
        alpha = exc.best
    if alpha == 0.0:
        return 0.0, 0.0, len(seen)
    dv = dV(alpha)
    if not dv <= 0.0:
        return 0.0, 0.0, len(seen)
    return alpha, dv, len(seen)


def itoh_abe_sweep(problem, u, tau, warm=None, opts=None):
    """One outer iteration of the coordinate scheme with center ``u``.

    Returns ``(u_next, stats)``; ``stats.alphas`` holds the accepted step of
    every coordinate in basis order.
    """
    opts = opts or SolverOptions()
    state = problem.begin(u)
    n = problem.n_coords(u)
    alphas = np.zeros(n)
    n_eval = skipped = 0
    dv_total = 0.0
    for j in range(n):
        state.j = j
        prev = 0.0 if warm is None else float(warm[j])
        noise = NOISE_REL * (1.0 + abs(state.value)) if math.isfinite(state.value) else 0.0
        alpha, dv, ne = solve_coordinate(lambda a: problem.delta(state, j, a), tau,
                                         problem.coordinate_scale(state, j), prev, opts, noise)
        n_eval += ne
        if alpha == 0.0:
            skipped += 1
            continue
        problem.accept(state, j, alpha, dv)
        alphas[j] = alpha
        dv_total += dv
    state.j = n
    stats = SweepStats(alphas=alphas, n_eval=n_eval, skipped=skipped, dv=dv_total)
    return problem.end(state), stats.finish(tau)


def _solve_batch(delta, tau, alpha_prev, opts):
    """Vectorised :func:`solve_coordinate` over independent problems.

    ``delta(idx, alpha)`` returns energy changes of problems ``idx``.
    """
    N = alpha_prev.size
    all_idx = np.arange(N)
    h = FD_REL_STEP
    dp = delta(all_idx, np.full(N, h))
    dm = delta(all_idx, np.full(N, -h))
    if not (np.all(np.isfinite(dp)) and np.all(np.isfinite(dm))):
        raise EvaluationError("non-finite energy difference")
    n_eval = np.full(N, 2)
    qp, qm = dp / h, -dm / h
    min_kink = (qp > 0) & (qm < 0)
    max_kink = (qp < 0) & (qm > 0)
    if np.any(max_kink):
        mk = np.flatnonzero(max_kink)
        half = delta(mk, np.full(mk.size, 0.5 * h)) / (0.5 * h)
        n_eval[mk] += 1
        max_kink[mk] = np.abs(half) >= 0.75 * np.abs(qp[mk])
    d = np.where(max_kink, np.where(np.abs(qp) < np.abs(qm), qp, qm), (dp - dm) / (2 * h))
    r0 = tau * d
    active = ~min_kink & (np.abs(r0) >= SKIP_R0)
    direction = np.where(d > 0, -1.0, 1.0)
    use_prev = opts.warm_start & (alpha_prev * direction > 0)
    width = np.where(use_prev, np.abs(alpha_prev), np.abs(r0))

    alpha = np.zeros(N)
    idx = np.flatnonzero(active)
    if idx.size == 0:
        return alpha, np.zeros(N), n_eval

    def resid(sub, x):
        with np.errstate(invalid="ignore", over="ignore"):
            v = delta(sub, x)
            return x + tau * v / x

    x = direction[idx] * width[idx]
    fx = resid(idx, x)
    n_eval[idx] += 1
    found = np.isfinite(fx) & (np.sign(fx) != np.sign(r0[idx]))
    for _ in range(opts.max_expand - 1):
        todo = np.flatnonzero(~found & np.isfinite(fx))
        if todo.size == 0:
            break
        x[todo] *= 2.0
        fx[todo] = resid(idx[todo], x[todo])
        n_eval[idx[todo]] += 1
        found[todo] = np.isfinite(fx[todo]) & (np.sign(fx[todo]) != np.sign(r0[idx[todo]]))
    idx, x, fx = idx[found], x[found], fx[found]
    if idx.size == 0:
        return alpha, np.zeros(N), n_eval

    lo = np.minimum(x, 0.0)
    hi = np.maximum(x, 0.0)
    flo = np.where(x < 0, fx, r0[idx])
    fhi = np.where(x < 0, r0[idx], fx)

    def f(sub, pts):
        out = resid(idx[sub], pts)
        if not np.all(np.isfinite(out)):
            raise EvaluationError("non-finite energy difference inside a bracket")
        return out

    root, _, ne = brent_dekker_batch(f, lo, hi, flo, fhi, tol=opts.root_tol,
                                     ftol=opts.root_tol * (1.0 + np.abs(r0[idx])),
                                     max_iter=opts.max_eval)
    n_eval[idx] += ne
    nz = root != 0.0
    idx, root = idx[nz], root[nz]
    dv = np.zeros(N)
    if idx.size:
        dvi = delta(idx, root)
        n_eval[idx] += 1
        ok = dvi <= 0.0
        alpha[idx[ok]] = root[ok]
        dv[idx[ok]] = dvi[ok]
    return alpha, dv, n_eval


def colored_sweep(problem, u, tau, warm=None, opts=None):
    """Checkerboard variant for image problems.

    Atoms of one color do not interact through the energy, so their scalar
    equations are solved together.  This is the fixed-center scheme with the
    basis ordered color by color.
    """
    opts = opts or SolverOptions()
    state = problem.batch_begin(u)
    k = problem.atom_dim
    n = problem.n_coords(u)
    alphas = np.zeros(n)
    n_eval = skipped = 0
    dv_total = 0.0
    for atoms in problem.colors():
        problem.batch_color_begin(state, atoms)
        for b in range(k):
            coords = atoms * k + b
            prev = np.zeros(atoms.size) if warm is None else np.asarray(warm)[coords]

            def delta(sub, a, atoms=atoms, b=b):
                return problem.batch_delta(state, atoms[sub], b, a)

            alpha, dv, ne = _solve_batch(delta, tau, prev, opts)
            n_eval += int(ne.sum())
            ok = alpha != 0.0
            skipped += int((~ok).sum())
            if np.any(ok):
                problem.batch_accept(state, atoms[ok], b, alpha[ok], dv[ok])
            alphas[coords] = alpha
            dv_total += float(dv.sum())
    stats = SweepStats(alphas=alphas, n_eval=n_eval, skipped=skipped, dv=dv_total)
    return problem.batch_end(state), stats.finish(tau)


@dataclass
class RunResult:
    point: Any
    log: ConvergenceLog
    stop_reason: str
    iterations: int
    last_stats: Any = None
    extras: dict = field(default_factory=dict)


def run(problem, u0, schedule=None, stop=None, mode="sequential", log_sink=None, opts=None,
        on_iterate=None):
    """Iterate sweeps from ``u0`` until the stop rule fires.

    ``mode="colored"`` uses :func:`colored_sweep` (image problems only).
    ``log_sink``, if given, receives every :class:`LogRow` as it is produced;
    ``on_iterate(k, u)`` sees every iterate.
    On an exception the partial log is attached to it as ``partial_log``.
    """
    schedule = schedule or StepSchedule.constant(0.1)
    stop = stop or StopRule()
    opts = opts or SolverOptions()
    if mode == "colored":
        sweep = colored_sweep
    elif mode == "sequential":
        sweep = itoh_abe_sweep
    else:
        raise ValueError(f"unknown sweep mode {mode!r}")

    v0 = problem.energy(u0)
    log = ConvergenceLog(v0=v0)
    u = u0
    prev = v0
    norm = abs(v0) if v0 != 0 else 1.0
    warm = None
    stats = None
    start = time.perf_counter()
    reason = "max_iters"
    k = 0
    try:
        while k < stop.max_iters:
            if (time.perf_counter() - start) * 1e3 >= stop.max_wall_ms:
                reason = "max_wall_ms"
                break
            tau = schedule.tau(k)
            t0 = time.perf_counter()
            u_next, stats = sweep(problem, u, tau, warm, opts)
            value = problem.energy(u_next)
            wall = (time.perf_counter() - t0) * 1e3
            k += 1
            row = LogRow(k, tau, value, value - prev, stats.dgnorm2, wall)
            log.append(row)
            if log_sink is not None:
                log_sink(row)
            if on_iterate is not None:
                on_iterate(k, u_next)
            u = u_next
            warm = stats.alphas if opts.warm_start else None
            decrease = (prev - value) / norm
            prev = value
            if stop.rel_tol > 0 and decrease < stop.rel_tol:
                reason = "rel_tol"
                break
    except Exception as exc:
        log.stop_reason = "error"
        exc.partial_log = log
        exc.partial_point = u
        raise
    log.stop_reason = reason
    return RunResult(point=u, log=log, stop_reason=reason, iterations=k, last_stats=stats)


def itoh_abe_drg(problem, u, v, h=1e-5):
    """Itoh-Abe discrete Riemannian gradient at ``(u, v)`` with center ``u``.

    Returns coefficients in the backend basis at ``u``.  The coefficient
    quotients ``a_j = (V(w_j) - V(w_{j-1})) / alpha_j`` are mapped through the
    inverse Gram matrix, so ``g(grad, phi_u^{-1}(v)) = V(v) - V(u)`` holds for
    any basis, orthonormal or not.  Zero increments fall back to a central
    difference along the coordinate.
    """
    backend = problem.backend
    c = u
    start = backend.inverse(c, u)
    total = backend.inverse(c, v) - start
    eta = np.array(start, dtype=float)
    value = problem.energy(u)
    n = total.size
    a = np.zeros(n)
    for j in range(n):
        alpha = total[j]
        if alpha != 0.0:
            nxt = eta.copy()
            nxt[j] += alpha
            w_value = problem.energy(backend.retract(c, nxt))
            a[j] = (w_value - value) / alpha
            eta, value = nxt, w_value
        else:
            plus, minus = eta.copy(), eta.copy()
            plus[j] += h
            minus[j] -= h
            a[j] = (problem.energy(backend.retract(c, plus))
                    - problem.energy(backend.retract(c, minus))) / (2 * h)
    return np.linalg.solve(backend.gram(c), a)

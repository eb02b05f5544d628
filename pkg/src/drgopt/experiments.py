"""Experiment drivers shared by the command line and the acceptance tests.

Each driver builds a problem, runs the optimiser and returns the raw
material (log, final point, oracle values) together with the derived
convergence statistics.  Nothing here writes files.
"""

from dataclasses import dataclass, field

import numpy as np

from .engine import StepSchedule, StopRule, run
from .manifolds import RotationBackend, is_spd, spd_distance, spherical_angles
from .problems import BrockettProblem, RayleighProblem, TVConfig, TVProblem

#: error floor below which Brockett optimality errors are dominated by rounding
FIT_FLOOR = 1e-10

#: energy decrease at which the continued InSAR run is treated as converged
VSTAR_DV = 1e-15

#: time-step strategies compared on tensor fields
DTI_SCHEDULES = {
    "constant-0.05": StepSchedule.constant(0.05),
    "constant-0.01": StepSchedule.constant(0.01),
    "mixed": StepSchedule.piecewise([(0, 0.05), (12, 0.01)]),
}


@dataclass
class Experiment:
    """Outcome of one driver call; ``stats`` holds named scalar results."""

    result: object
    problem: object
    stats: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)


# ---- convergence statistics --------------------------------------------

def optimality_errors(values, vstar):
    """``(V_k - V*) / (V_0 - V*)`` for every entry of ``values``."""
    v = np.asarray(values, dtype=float)
    return (v - vstar) / (v[0] - vstar)


def linear_tail_fit(errors, floor=FIT_FLOOR):
    """Least-squares line through ``log e_k`` over the tail of the run.

    The tail is the second half of the iterations whose error is above
    ``floor``.  Returns ``(slope, r2)``; a slope below zero means linear
    (geometric) convergence with rate ``exp(slope)``.
    """
    e = np.asarray(errors, dtype=float)
    k = np.flatnonzero(e > floor)
    if k.size < 4:
        return np.nan, np.nan
    k = k[k.size // 2:]
    y = np.log(e[k])
    slope, icpt = np.polyfit(k, y, 1)
    resid = y - (slope * k + icpt)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss if ss > 0 else 1.0
    return float(slope), float(r2)


def loglog_slope(errors, window):
    """Slope of ``log e_k`` against ``log k`` over ``k`` in ``[lo, hi)``."""
    lo, hi = window
    e = np.asarray(errors, dtype=float)
    k = np.arange(max(lo, 1), min(hi, e.size))
    k = k[e[k] > 0]
    if k.size < 2:
        return np.nan
    return float(np.polyfit(np.log(k), np.log(e[k]), 1)[0])


def first_below(errors, threshold):
    """Smallest ``k`` with ``e_k < threshold``, or ``None``."""
    hits = np.flatnonzero(np.asarray(errors) < threshold)
    return int(hits[0]) if hits.size else None


# ---- Rayleigh quotient ---------------------------------------------------

def random_symmetric(m, rng):
    G = rng.standard_normal((m, m))
    return 0.5 * (G + G.T)


def rayleigh_experiment(A, tau=1.0, tol=1e-14, max_iters=5000, init="random", rng=None,
                        audit=False, log_sink=None):
    """Minimise the Rayleigh quotient of ``A`` and compare with ``eigvalsh``.

    ``init`` is ``"random"`` (angles of a Gaussian vector drawn from ``rng``)
    or ``"e1"`` (all angles zero, the first unit vector).
    """
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if m < 2:
        raise ValueError("need m >= 2")
    if init == "e1":
        theta0 = np.zeros(m - 1)
    elif init == "random":
        rng = rng if rng is not None else np.random.default_rng(0)
        theta0 = spherical_angles(rng.standard_normal(m))
    else:
        raise ValueError(f"unknown init {init!r}")
    prob = RayleighProblem(A, audit=audit)
    res = run(prob, theta0, StepSchedule.constant(tau), StopRule(rel_tol=tol, max_iters=max_iters),
              log_sink=log_sink)
    lam_min = float(np.linalg.eigvalsh(prob.A)[0])
    v = np.asarray(res.log.values)
    final = float(v[-1])
    settled = np.flatnonzero(v - final <= tol * max(abs(v[0]), 1.0))
    stats = {"lambda_min": lam_min, "final_V": final, "gap": final - lam_min,
             "converged_iteration": int(settled[0]), "audit_max": prob.audit_max}
    return Experiment(res, prob, stats)


# ---- Brockett flow -------------------------------------------------------

def brockett_setup(m, seed):
    """Seeded symmetric ``A`` and random initial rotation."""
    rng = np.random.default_rng(seed)
    A = random_symmetric(m, rng)
    Q0 = RotationBackend(m).random_point(rng)
    return A, Q0


def brockett_experiment(A, Q0, tau=0.1, mode="cayley", iters=2000, D=None, log_sink=None):
    """Run the flow and collect the diagonal of ``Q^T A Q`` at every iterate."""
    prob = BrockettProblem(A, D, mode=mode)
    diag = [np.diag(Q0.T @ prob.A @ Q0).copy()]

    def record(k, Q):
        diag.append(np.diag(Q.T @ prob.A @ Q).copy())

    res = run(prob, Q0, StepSchedule.constant(tau), StopRule(max_iters=iters),
              log_sink=log_sink, on_iterate=record)
    vstar = prob.optimal_energy()
    errors = optimality_errors(res.log.values, vstar)
    slope, r2 = linear_tail_fit(errors)
    spectrum = prob.spectrum()
    diag = np.array(diag)
    stats = {"V_star": vstar, "final_V": res.log.final_value,
             "diag_error": float(np.linalg.norm(diag[-1] - spectrum)),
             "tail_slope": slope, "tail_r2": r2}
    return Experiment(res, prob, stats, {"diag": diag, "errors": errors, "spectrum": spectrum})


# ---- phase images --------------------------------------------------------

def insar_experiment(noisy, config=None, schedule=None, iters=500, vstar_iters=1500,
                     window=None, mode="colored", log_sink=None):
    """Denoise a phase image and estimate the log-log tail slope.

    The run continues past ``iters`` up to ``vstar_iters`` sweeps (or until a
    sweep lowers the energy by less than ``VSTAR_DV``) and the last energy
    serves as ``V*``.  The returned result covers the first ``iters`` sweeps
    only; ``window`` defaults to the second half of them.
    """
    config = config or TVConfig(0.3, 2, 1)
    schedule = schedule or StepSchedule.constant(0.002)
    prob = TVProblem(noisy, config)
    total = max(iters, vstar_iters)
    snap = {}

    def keep(k, u):
        if k == iters:
            snap["u"] = u

    sink = None
    if log_sink is not None:
        def sink(row):
            if row.k <= iters:
                log_sink(row)

    v0 = prob.energy(noisy)
    stop = StopRule(rel_tol=VSTAR_DV / abs(v0) if v0 else 0.0, max_iters=total)
    res = run(prob, noisy, schedule, stop, mode=mode, log_sink=sink, on_iterate=keep)
    values = np.asarray(res.log.values)
    vstar = float(values[-1])
    errors = optimality_errors(values, vstar) if values[0] > vstar else np.zeros_like(values)
    window = window or (iters // 2, iters)
    head = values[:iters + 1]
    stats = {"V_star": vstar, "V_star_iters": res.iterations,
             "tail_slope": loglog_slope(errors[:iters + 1], window),
             "strict_decrease": bool(np.all(np.diff(head) < 0)),
             "monotone": bool(np.all(np.diff(head) <= 0))}
    if res.iterations > iters:
        res.log.rows = res.log.rows[:iters]
        res.point = snap["u"]
        res.iterations = iters
        res.stop_reason = res.log.stop_reason = "max_iters"
    return Experiment(res, prob, stats, {"values": values, "errors": errors})


def insar_compare(noisy, config=None, iters=500, vstar_iters=1500, thresholds=(1e-1, 1e-2, 1e-3),
                  mode="colored"):
    """Constant ``tau = 0.002`` against halving from 0.005 every 200 sweeps.

    Each schedule is measured against its own ``V*``: the two runs need not
    settle in the same minimiser.  Returns the two experiments and, per
    schedule, the first sweep at which each threshold is undercut.
    """
    runs = {
        "constant": insar_experiment(noisy, config, StepSchedule.constant(0.002), iters,
                                     vstar_iters, mode=mode),
        "halving": insar_experiment(noisy, config, StepSchedule.halving(0.005, 200), iters,
                                    vstar_iters, mode=mode),
    }
    reach = {name: {t: first_below(e.series["errors"], t) for t in thresholds}
             for name, e in runs.items()}
    return runs, reach


# ---- tensor fields -------------------------------------------------------

def dti_experiment(noisy, config=None, schedule=None, stop_rel=1e-5, max_iters=300,
                   mode="colored", log_sink=None):
    """Denoise an SPD field, checking that every iterate stays SPD."""
    config = config or TVConfig(0.05, 2, 1)
    schedule = schedule or DTI_SCHEDULES["mixed"]
    prob = TVProblem(noisy, config)
    spd = [bool(np.all(is_spd(np.asarray(noisy))))]

    def check(k, u):
        spd.append(bool(np.all(is_spd(u))))

    res = run(prob, noisy, schedule, StopRule(rel_tol=stop_rel, max_iters=max_iters), mode=mode,
              log_sink=log_sink, on_iterate=check)
    stats = {"iterations": res.iterations, "stop_reason": res.stop_reason,
             "all_spd": all(spd), "final_V": res.log.final_value}
    return Experiment(res, prob, stats)


def dti_compare(noisy, config=None, stop_rel=1e-5, max_iters=300, mode="colored"):
    """Iterations to the stop threshold for every entry of ``DTI_SCHEDULES``."""
    return {name: dti_experiment(noisy, config, sch, stop_rel, max_iters, mode)
            for name, sch in DTI_SCHEDULES.items()}


def edge_distance_ratio(u):
    """Mean distance across the two-region boundary over the mean interior
    horizontal edge distance."""
    u = np.asarray(u)
    m = u.shape[1]
    d = spd_distance(u[:, 1:], u[:, :-1])
    boundary = d[:, m // 2 - 1]
    interior = np.delete(d, m // 2 - 1, axis=1)
    return float(boundary.mean() / interior.mean())

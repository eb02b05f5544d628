"""Property suites behind ``drgopt verify`` and the acceptance tests.

Each suite returns a list of :class:`Check` records; nothing here raises on a
failed property.  Gradient oracles are written out analytically so that the
consistency check compares two independent routes.
"""

from dataclasses import dataclass

import numpy as np

from .engine import (EnergyProblem, StepSchedule, StopRule, dissipation_audit, itoh_abe_drg,
                     run)
from .geometry import tangency_order, verify_metric_symmetry, verify_retraction_axioms
from .manifolds import (CircleBackend, ProductBackend, RotationBackend, SpdBackend,
                        SphereBackend, basis_element, embed_jacobian, random_spd, skew_from_coeffs,
                        skew_pairs, spd_distance, spd_log, spd_metric, spherical_angles,
                        spherical_embed, wrap)
from .problems import BrockettProblem, RayleighProblem, TVConfig, TVProblem

TAUS = (1e-3, 1e-2, 1e-1, 1.0, 10.0)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


def backend_cases(rng):
    """``(name, backend)`` pairs covering every manifold and retraction."""
    return [
        ("sphere-5", SphereBackend(5)),
        ("so4-cayley", RotationBackend(4, "cayley")),
        ("so4-exp", RotationBackend(4, "exp")),
        ("circle", CircleBackend()),
        ("spd3-second_order", SpdBackend("second_order")),
        ("spd3-exp", SpdBackend("exp")),
        ("product-circle-3x3", ProductBackend(CircleBackend(), (3, 3))),
        ("product-spd3-2x2", ProductBackend(SpdBackend(), (2, 2))),
    ]


def geometry_suite(trials=5, seed=0):
    rng = np.random.default_rng(seed)
    checks = []
    for name, backend in backend_cases(rng):
        axioms = symmetric = True
        order = np.inf
        for _ in range(trials):
            p = backend.random_point(rng)
            axioms &= verify_retraction_axioms(backend, p, rng=rng).ok
            symmetric &= verify_metric_symmetry(backend, p, trials=5, rng=rng)
            v = backend.random_tangent(rng, p, 1.0)
            order = min(order, tangency_order(backend, p, v))
        checks.append(Check(f"{name}: retraction axioms", bool(axioms)))
        checks.append(Check(f"{name}: metric symmetry", bool(symmetric)))
        checks.append(Check(f"{name}: tangency order", order >= 1.8, f"order {order:.2f}"))
    return checks


# ---- energies with analytic gradients ----------------------------------

def _coeffs_from_derivs(backend, p, d):
    return np.linalg.solve(backend.gram(p), d)


@dataclass
class DrgCase:
    name: str
    problem: object
    gradient: object
    sample: object


def _tv_circle_gradient(s, lam):
    def grad(u):
        g = wrap(u - s)
        e = 2.0 * lam * wrap(u[1:] - u[:-1])
        g[1:] += e
        g[:-1] -= e
        e = 2.0 * lam * wrap(u[:, 1:] - u[:, :-1])
        g[:, 1:] += e
        g[:, :-1] -= e
        return g.ravel()
    return grad


def _spd_derivs(A, G):
    """Derivatives ``g_A(G, E_b)`` of a Riemannian gradient ``G`` along the basis."""
    return np.array([spd_metric(A, G, basis_element(b)) for b in range(6)])


def drg_cases(rng):
    cases = []

    m = 5
    M = rng.standard_normal((m, m))
    A = M + M.T
    ray = RayleighProblem(A)
    cases.append(DrgCase(
        "sphere-5 rayleigh", ray,
        lambda th, A=A: embed_jacobian(th).T @ (2.0 * A @ spherical_embed(th)),
        lambda r, m=m: spherical_angles(r.standard_normal(m))))

    m = 4
    M = rng.standard_normal((m, m))
    A4 = M + M.T
    D = np.arange(1.0, m + 1)
    for mode in ("cayley", "exp"):
        prob = BrockettProblem(A4, D, mode=mode, recenter=False)

        def brockett_grad(Q, A4=A4, D=D, m=m):
            X = Q.T @ A4 @ Q
            C = np.diag(D) @ X - X @ np.diag(D)
            out = []
            for l in range(len(skew_pairs(m))):
                e = np.zeros(len(skew_pairs(m)))
                e[l] = 1.0
                out.append(np.trace(skew_from_coeffs(e, m) @ C))
            return np.array(out)

        cases.append(DrgCase(f"so4-{mode} brockett", prob, brockett_grad,
                             lambda r, b=prob.backend: b.random_point(r)))

    s1 = float(wrap(rng.uniform(-np.pi, np.pi)))
    circ = EnergyProblem(CircleBackend(), lambda p: 1.0 - np.cos(p - s1) + 0.3 * np.sin(2.0 * p))
    cases.append(DrgCase("circle", circ,
                         lambda p: np.atleast_1d(np.sin(p - s1) + 0.6 * np.cos(2.0 * p)),
                         lambda r: float(wrap(r.uniform(-np.pi, np.pi)))))

    S = random_spd(rng)
    for mode in ("second_order", "exp"):
        be = SpdBackend(mode)
        prob = EnergyProblem(be, lambda P, S=S: spd_distance(P, S) ** 2)
        cases.append(DrgCase(
            f"spd3-{mode} distance", prob,
            lambda P, be=be, S=S: _coeffs_from_derivs(be, P, _spd_derivs(P, -2.0 * spd_log(P, S))),
            lambda r: random_spd(r)))

    cfg = TVConfig(0.3, 2, 2)
    s = wrap(rng.uniform(-np.pi, np.pi, (3, 3)))
    tvc = TVProblem(s, cfg)
    cases.append(DrgCase("product-circle tv", tvc, _tv_circle_gradient(s, cfg.lam),
                         lambda r, s=s: wrap(s + 0.3 * r.standard_normal(s.shape))))

    s_spd = random_spd(rng, (2, 2), 0.5)
    tvs = TVProblem(s_spd, cfg)

    def spd_tv_grad(u, s=s_spd, lam=cfg.lam, be=tvs.backend):
        coeffs = []
        for i in range(2):
            for j in range(2):
                G = -spd_log(u[i, j], s[i, j])
                for ii, jj in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
                    if 0 <= ii < 2 and 0 <= jj < 2:
                        G = G - 2.0 * lam * spd_log(u[i, j], u[ii, jj])
                coeffs.append(np.linalg.solve(be.atom.gram(u[i, j]), _spd_derivs(u[i, j], G)))
        return np.concatenate(coeffs)

    cases.append(DrgCase("product-spd3 tv", tvs, spd_tv_grad,
                         lambda r: random_spd(r, (2, 2), 0.5)))
    return cases


def mean_value_residual(problem, u, v):
    """``|g(grad, phi_u^{-1}(v) - phi_u^{-1}(u)) - (V(v) - V(u))|`` over ``1 + |dV|``."""
    be = problem.backend
    g = itoh_abe_drg(problem, u, v)
    step = be.inverse(u, v) - be.inverse(u, u)
    dv = problem.energy(v) - problem.energy(u)
    return abs(be.inner(u, g, step) - dv) / (1.0 + abs(dv))


def gradient_error(case, u):
    g = itoh_abe_drg(case.problem, u, u)
    ref = np.asarray(case.gradient(u), dtype=float)
    return float(np.linalg.norm(g - ref) / max(np.linalg.norm(ref), 1e-8))


def _nearby(case, rng, u):
    be = case.problem.backend
    radius = min(be.domain_radius, 2.0)
    return be.retract(u, be.random_tangent(rng, u, 0.4 * radius * rng.uniform(0.05, 1.0)))


def drg_suite(trials=20, seed=0, pairs=None, taus=TAUS, sweeps=3):
    """Mean-value identity, gradient consistency and dissipation checks.

    ``pairs`` fuzzed ``(u, v)`` pairs per backend (defaults to ``trials``).
    """
    rng = np.random.default_rng(seed)
    pairs = trials if pairs is None else pairs
    checks = []
    for case in drg_cases(rng):
        worst = 0.0
        for _ in range(pairs):
            u = case.sample(rng)
            worst = max(worst, mean_value_residual(case.problem, u, _nearby(case, rng, u)))
        checks.append(Check(f"{case.name}: mean-value identity", worst <= 1e-9,
                            f"max residual {worst:.2e}"))
        worst = 0.0
        for _ in range(trials):
            worst = max(worst, gradient_error(case, case.sample(rng)))
        checks.append(Check(f"{case.name}: gradient consistency", worst <= 1e-5,
                            f"max relative error {worst:.2e}"))
        if trials == 0:
            continue
        ok = True
        for tau in taus:
            res = run(case.problem, case.sample(rng), StepSchedule.constant(tau),
                      StopRule(max_iters=sweeps))
            ok &= dissipation_audit(res.log)[0]
        checks.append(Check(f"{case.name}: dissipation", bool(ok)))
    return checks


def run_suites(suite="all", trials=5, seed=0):
    """Checks of the chosen suite; ``trials=0`` checks nothing."""
    checks = []
    if trials == 0:
        return checks
    if suite in ("geometry", "all"):
        checks += geometry_suite(trials, seed)
    if suite in ("drg", "all"):
        checks += drg_suite(trials, seed)
    return checks


def format_table(checks):
    width = max((len(c.name) for c in checks), default=10)
    lines = [f"{'property':<{width}}  result  detail"]
    for c in checks:
        lines.append(f"{c.name:<{width}}  {'pass' if c.passed else 'FAIL':<6}  {c.detail}")
    return "\n".join(lines)

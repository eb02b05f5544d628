import math

import numpy as np
import pytest

from drgopt.engine import StepSchedule, StopRule, itoh_abe_sweep, run
from drgopt.manifolds import (CircleBackend, RotationBackend, SpdBackend, angular_distance,
                              plane_rotation_angle, random_spd, so_retract, spd_distance,
                              spherical_angles, spherical_embed, wrap)
from drgopt.problems import (BrockettProblem, RayleighProblem, TVConfig, TVProblem,
                             brockett_delta, brockett_diag_error, brockett_energy, rayleigh_delta,
                             rayleigh_energy, reference_spectrum, tv_energy, tv_local_delta)


def sym(rng, m):
    G = rng.standard_normal((m, m))
    return G + G.T


# ---- Rayleigh ------------------------------------------------------------

def test_rayleigh_energy_examples(rng):
    theta = rng.uniform(0, np.pi, 4)
    assert rayleigh_energy(theta, np.eye(5)) == pytest.approx(1.0, abs=1e-15)
    assert rayleigh_energy(np.array([0.0, 2.0]), np.diag([1.0, 2.0, 3.0])) == 1.0
    A = sym(rng, 5)
    u = spherical_embed(theta)
    assert rayleigh_energy(theta, A) == pytest.approx(u @ A @ u, rel=1e-14)


def test_rayleigh_delta_matches_recomputation(rng):
    A = sym(rng, 3)
    assert rayleigh_delta(np.array([0.4, 0.9]), 0, 0.0, A) == 0.0
    for _ in range(200):
        theta = spherical_angles(rng.standard_normal(3))
        l = int(rng.integers(2))
        a = rng.normal(0, 1)
        t2 = theta.copy()
        t2[l] += a
        ref = rayleigh_energy(t2, A) - rayleigh_energy(theta, A)
        assert rayleigh_delta(theta, l, a, A) == pytest.approx(ref, abs=1e-10 * (1 + abs(ref)))


def test_rayleigh_bookkeeping_over_a_sweep(rng):
    A = sym(rng, 12)
    prob = RayleighProblem(A, audit=True)
    theta = spherical_angles(rng.standard_normal(12))
    state = prob.begin(theta)
    for j in range(11):
        a = rng.normal(0, 0.3)
        prob.accept(state, j, a, prob.delta(state, j, a))
    assert state.value == pytest.approx(rayleigh_energy(state.current, A), abs=1e-9)
    assert prob.audit_max <= 1e-12


def test_rayleigh_pole_fallback():
    prob = RayleighProblem(np.diag([1.0, 2.0, 3.0]))
    state = prob.begin(np.array([0.0, 0.5]))
    d = prob.delta(state, 0, 0.3)
    ref = rayleigh_energy(np.array([0.3, 0.5]), prob.A) - 1.0
    assert d == pytest.approx(ref, abs=1e-14)
    assert prob.fallbacks == 1


def test_rayleigh_iterates_stay_in_spectrum(rng):
    A = sym(rng, 8)
    w = np.linalg.eigvalsh(A)
    prob = RayleighProblem(A)
    res = run(prob, spherical_angles(rng.standard_normal(8)), StepSchedule.constant(1.0),
              StopRule(max_iters=30))
    v = np.array(res.log.values)
    assert np.all(v >= w[0] - 1e-12) and np.all(v <= w[-1] + 1e-12)


def test_rayleigh_rejects_bad_matrix():
    with pytest.raises(ValueError):
        RayleighProblem(np.array([[1.0, 2.0], [0.0, 1.0]]))


# ---- Brockett ------------------------------------------------------------

def test_brockett_energy_examples(rng):
    D = np.arange(1.0, 5)
    A = np.diag(rng.standard_normal(4))
    assert brockett_energy(np.eye(4), A, D) == pytest.approx(np.sum(np.diag(A) * D))
    A = sym(rng, 4)
    assert brockett_energy(np.eye(4), A, D) == pytest.approx(np.sum(np.diag(A) * D))
    Q = RotationBackend(4).random_point(rng)
    assert brockett_energy(Q, A, D) == pytest.approx(np.trace(Q.T @ A @ Q @ np.diag(D)))


@pytest.mark.parametrize("mode", ["cayley", "exp"])
def test_brockett_delta_2x2_closed_form(mode, rng):
    A = sym(rng, 2)
    D = np.array([1.0, 2.0])
    assert brockett_delta(np.eye(2), (0, 1), 0.0, A, D, mode) == 0.0
    for a in rng.normal(0, 2, 20):
        phi = plane_rotation_angle(a, mode)
        R = np.array([[math.cos(phi), math.sin(phi)], [-math.sin(phi), math.cos(phi)]])
        ref = np.trace(R.T @ A @ R @ np.diag(D)) - np.trace(A @ np.diag(D))
        assert brockett_delta(np.eye(2), (0, 1), a, A, D, mode) == pytest.approx(ref, abs=1e-12)


def test_brockett_cayley_angle():
    # the retraction is cay(B/2), so a coefficient alpha turns by 2 atan(alpha / (2 sqrt 2))
    assert plane_rotation_angle(1.0, "cayley") == pytest.approx(2 * math.atan(1 / (2 * math.sqrt(2))))


@pytest.mark.parametrize("mode", ["cayley", "exp"])
def test_brockett_delta_random(mode, rng):
    A = sym(rng, 6)
    D = rng.permutation(6).astype(float)
    pairs = RotationBackend(6).dim(None)
    for _ in range(100):
        Q = RotationBackend(6).random_point(rng)
        l = int(rng.integers(pairs))
        a = rng.normal(0, 2)
        v = np.zeros(pairs)
        v[l] = a
        ref = brockett_energy(so_retract(Q, v, mode), A, D) - brockett_energy(Q, A, D)
        from drgopt.manifolds import skew_pairs
        d = brockett_delta(Q, skew_pairs(6)[l], a, A, D, mode)
        assert d == pytest.approx(ref, abs=1e-10 * (1 + abs(brockett_energy(Q, A, D))))


def test_brockett_stationary_sweep(rng):
    A = np.diag(rng.standard_normal(5))
    for recenter in (True, False):
        prob = BrockettProblem(A, recenter=recenter)
        _, stats = itoh_abe_sweep(prob, np.eye(5), 0.3)
        assert np.all(stats.alphas == 0)


def test_recentered_and_fixed_center_both_descend(rng):
    A = sym(rng, 5)
    Q0 = RotationBackend(5).random_point(rng)
    for recenter in (True, False):
        prob = BrockettProblem(A, recenter=recenter)
        Q, stats = itoh_abe_sweep(prob, Q0, 0.1)
        assert prob.energy(Q) < prob.energy(Q0)
        assert prob.energy(Q) - prob.energy(Q0) == pytest.approx(stats.dv, abs=1e-10)
        assert np.allclose(Q.T @ Q, np.eye(5), atol=1e-12)


def test_diag_error_examples(rng):
    A = sym(rng, 5)
    D = np.arange(1.0, 6)
    ref_spectrum = reference_spectrum(A, D)
    w, V = np.linalg.eigh(A)
    Q = V[:, ::-1]  # descending eigenvalues against ascending D
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1
    assert brockett_diag_error(Q, A, ref_spectrum) <= 1e-10
    Ad = np.diag([4.0, 3.0, 2.0, 1.0, 0.0])
    assert brockett_diag_error(np.eye(5), Ad, reference_spectrum(Ad, D)) == 0.0


def test_brockett_converged_run(rng):
    A = sym(rng, 5)
    prob = BrockettProblem(A)
    res = run(prob, RotationBackend(5).random_point(rng), StepSchedule.constant(0.5),
              StopRule(max_iters=1500))
    assert brockett_diag_error(res.point, prob.A, prob.spectrum()) <= 1e-6


def test_brockett_rejects_repeated_d():
    with pytest.raises(ValueError):
        BrockettProblem(np.eye(3), np.array([1.0, 1.0, 2.0]))


# ---- TV ------------------------------------------------------------------

def _naive_tv(u, s, cfg, dist):
    l, m = u.shape[:2]
    total = 0.0
    for i in range(l):
        for j in range(m):
            total += dist(u[i, j], s[i, j]) ** cfg.beta / cfg.beta
            if i + 1 < l:
                total += cfg.lam * dist(u[i, j], u[i + 1, j]) ** cfg.gamma
            if j + 1 < m:
                total += cfg.lam * dist(u[i, j], u[i, j + 1]) ** cfg.gamma
    return total


def test_tv_energy_examples(rng):
    s = np.full((4, 4), 0.7)
    assert tv_energy(s, s, TVConfig(), CircleBackend()) == 0.0
    u = np.array([[0.0, np.pi / 2]])
    assert tv_energy(u, u, TVConfig(0.3, 2, 1), CircleBackend()) == pytest.approx(0.3 * np.pi / 2)
    cfg = TVConfig(0.4, 2, 1)
    u, s = random_spd(rng, (5, 5)), random_spd(rng, (5, 5))
    assert tv_energy(u, s, cfg, SpdBackend()) == pytest.approx(
        _naive_tv(u, s, cfg, spd_distance), rel=1e-12)


def test_tv_local_delta_same_atom_is_zero(rng):
    u = random_spd(rng, (3, 3))
    assert tv_local_delta(u, u, (1, 1), u[1, 1], TVConfig()) == 0.0


def test_corner_atom_uses_three_distances(rng):
    s = wrap(rng.uniform(-3, 3, (4, 5)))
    prob = TVProblem(s, TVConfig(0.3, 2, 1))
    cur = s.ravel()
    for atom, count in ((0, 3), (4, 3), (19, 3), (1, 4), (6, 5)):
        prob.n_dist = 0
        prob.local(cur[[atom]], np.array([atom]), cur)
        assert prob.n_dist == count


@pytest.mark.parametrize("kind", ["circle", "spd"])
@pytest.mark.parametrize("beta,gamma", [(2, 1), (1, 2)])
def test_tv_local_delta_matches_full(kind, beta, gamma, rng):
    cfg = TVConfig(0.3, beta, gamma)
    atom = CircleBackend() if kind == "circle" else SpdBackend()
    for _ in range(100):
        if kind == "circle":
            u, s = wrap(rng.uniform(-3.2, 3.2, (2, 8, 8)))
            new = float(wrap(rng.uniform(-3.2, 3.2)))
        else:
            u, s = random_spd(rng, (2, 8, 8), 0.5)
            new = random_spd(rng, (), 0.5)
        i, j = rng.integers(8, size=2)
        u2 = u.copy()
        u2[i, j] = new
        ref = tv_energy(u2, s, cfg, atom) - tv_energy(u, s, cfg, atom)
        got = tv_local_delta(u, s, (i, j), new, cfg, atom)
        assert got == pytest.approx(ref, abs=1e-9 * (1 + abs(tv_energy(u, s, cfg, atom))))


@pytest.mark.parametrize("kind", ["circle", "spd"])
def test_tv_without_coupling_fits_data(kind, rng):
    if kind == "circle":
        s = wrap(rng.uniform(-3, 3, (4, 4)))
        u = wrap(s + rng.normal(0, 0.5, s.shape))
        dist = angular_distance
    else:
        s = random_spd(rng, (3, 3), 0.5)
        u = random_spd(rng, (3, 3), 0.5)
        dist = spd_distance
    prob = TVProblem(s, TVConfig(0.0, 2, 1))
    u1, _ = itoh_abe_sweep(prob, u, 0.5)
    assert np.sum(dist(u1, s) ** 2) < np.sum(dist(u, s) ** 2)
    u_s, stats = itoh_abe_sweep(prob, s, 0.5)
    assert np.all(stats.alphas == 0) and np.array_equal(u_s, s)


def test_sequential_and_colored_agree_on_energy_drop(rng):
    s = wrap(rng.uniform(-3, 3, (6, 6)))
    prob = TVProblem(s, TVConfig(0.3, 2, 1))
    for mode in ("sequential", "colored"):
        res = run(prob, s, StepSchedule.constant(0.05), StopRule(max_iters=3), mode=mode)
        assert res.log.final_value < prob.energy(s)
        for row in res.log.rows:
            assert row.dV <= 0


def test_tv_config_validation():
    with pytest.raises(ValueError):
        TVConfig(-1.0)
    with pytest.raises(ValueError):
        TVConfig(0.3, 3, 1)

"""Derivative-free scalar root finding.

:func:`brent_dekker` is the classical zeroin iteration (bisection safeguarded
by secant and inverse quadratic interpolation).  :func:`brent_dekker_batch`
runs the same iteration on many independent scalar problems at once, which
is what the colored image sweeps use.
"""

import math

import numpy as np

from ..errors import MaxEvalExceeded, NoBracket

EPS = np.finfo(float).eps


def _sign(x):
    return int(x > 0) - int(x < 0)


def brent_dekker(f, a, b, tol=1e-12, max_eval=200, ftol=0.0, fa=None, fb=None):
    """Root of ``f`` in ``[a, b]``.

    Stops when ``|f(x)| <= ftol`` or the bracket has shrunk below
    ``tol * (1 + |x|)``.  ``f`` is only evaluated strictly inside the
    bracket; known end values may be passed as ``fa``/``fb``.

    Returns ``(x, fx, n_eval)``.
    """
    n_eval = 0
    if fa is None:
        fa = f(a)
        n_eval += 1
    if fb is None:
        fb = f(b)
        n_eval += 1
    if fa == 0.0:
        return a, fa, n_eval
    if fb == 0.0:
        return b, fb, n_eval
    if _sign(fa) == _sign(fb):
        raise NoBracket(f"f({a!r}) and f({b!r}) have the same sign")

    c, fc = a, fa
    d = e = b - a
    while True:
        if _sign(fb) == _sign(fc):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * EPS * abs(b) + 0.5 * tol * (1.0 + abs(b))
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or abs(fb) <= ftol:
            return b, fb, n_eval
        if n_eval >= max_eval:
            raise MaxEvalExceeded(f"no convergence after {n_eval} evaluations", best=b, fbest=fb)
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = xm
        else:
            d = e = xm
        a, fa = b, fb
        b = b + d if abs(d) > tol1 else b + math.copysign(tol1, xm)
        fb = f(b)
        n_eval += 1


def bisect(f, a, b, tol=1e-14, max_iter=400):
    """Plain bisection; the independent cross-check for :func:`brent_dekker`."""
    fa = f(a)
    if fa == 0:
        return a
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0 or 0.5 * (b - a) < tol * (1 + abs(m)):
            return m
        if _sign(fm) == _sign(fa):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def expand_bracket(f, guess, direction, width=1.0, growth=2.0, max_expand=60, f_guess=None):
    """Walk away from ``guess`` until ``f`` changes sign.

    Trial points are ``guess + direction * width * growth**i``.  Returns
    ``(a, b, fa, fb, n_eval)`` with ``a < b`` and ``fa * fb <= 0``.
    """
    n_eval = 0
    if f_guess is None:
        f_guess = f(guess)
        n_eval += 1
    if f_guess == 0:
        return guess, guess, f_guess, f_guess, n_eval
    step = abs(width) * (1.0 if direction >= 0 else -1.0)
    if step == 0:
        raise NoBracket("zero initial bracket width")
    s0 = _sign(f_guess)
    for _ in range(max_expand):
        x = guess + step
        fx = f(x)
        n_eval += 1
        if not math.isfinite(fx):
            break
        if _sign(fx) != s0:
            if x < guess:
                return x, guess, fx, f_guess, n_eval
            return guess, x, f_guess, fx, n_eval
        step *= growth
    raise NoBracket(f"no sign change within {max_expand} expansions")


def brent_dekker_batch(f, a, b, fa, fb, tol=1e-12, ftol=None, max_iter=200):
    """Vectorised :func:`brent_dekker` over arrays of brackets.

    ``f(idx, x)`` must return the residuals of problems ``idx`` at points
    ``x``; only unfinished problems are evaluated.  ``ftol`` may be an array.
    Returns ``(x, fx, n_eval)`` arrays; problems that hit ``max_iter`` return
    their best end point.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    fa = np.array(fa, dtype=float)
    fb = np.array(fb, dtype=float)
    N = a.size
    ftol = np.zeros(N) if ftol is None else np.broadcast_to(np.asarray(ftol, dtype=float), (N,)).copy()
    if np.any(np.sign(fa) * np.sign(fb) > 0):
        raise NoBracket("some brackets have no sign change")
    n_eval = np.zeros(N, dtype=int)
    c, fc = a.copy(), fa.copy()
    d = b - a
    e = d.copy()
    active = np.ones(N, dtype=bool)
    zero_a = fa == 0
    b[zero_a] = a[zero_a]
    fb[zero_a] = 0.0

    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        A, B, C = a[idx], b[idx], c[idx]
        FA, FB, FC = fa[idx], fb[idx], fc[idx]
        D, E = d[idx], e[idx]

        same = np.sign(FB) == np.sign(FC)
        C = np.where(same, A, C)
        FC = np.where(same, FA, FC)
        D = np.where(same, B - A, D)
        E = np.where(same, B - A, E)

        swap = np.abs(FC) < np.abs(FB)
        A, B, C = np.where(swap, B, A), np.where(swap, C, B), np.where(swap, B, C)
        FA, FB, FC = np.where(swap, FB, FA), np.where(swap, FC, FB), np.where(swap, FB, FC)

        tol1 = 2.0 * EPS * np.abs(B) + 0.5 * tol * (1.0 + np.abs(B))
        xm = 0.5 * (C - B)
        done = (np.abs(xm) <= tol1) | (np.abs(FB) <= ftol[idx])

        with np.errstate(divide="ignore", invalid="ignore"):
            s = FB / FA
            secant = A == C
            q_ = FA / FC
            r_ = FB / FC
            p = np.where(secant, 2.0 * xm * s,
                         s * (2.0 * xm * q_ * (q_ - r_) - (B - A) * (r_ - 1.0)))
            q = np.where(secant, 1.0 - s, (q_ - 1.0) * (r_ - 1.0) * (s - 1.0))
        q = np.where(p > 0, -q, q)
        p = np.abs(p)
        interp_ok = (np.abs(E) >= tol1) & (np.abs(FA) > np.abs(FB))
        accept = interp_ok & (2.0 * p < np.minimum(3.0 * xm * q - np.abs(tol1 * q), np.abs(E * q)))
        with np.errstate(divide="ignore", invalid="ignore"):
            D_new = np.where(accept, p / q, xm)
        E_new = np.where(accept, D, xm)

        step = np.where(np.abs(D_new) > tol1, D_new, np.copysign(tol1, xm))

        fin = idx[done]
        b[fin], fb[fin] = B[done], FB[done]
        active[fin] = False

        lv = ~done
        li = idx[lv]
        if li.size == 0:
            continue
        a[li], fa[li] = B[lv], FB[lv]
        c[li], fc[li] = C[lv], FC[lv]
        d[li], e[li] = D_new[lv], E_new[lv]
        b[li] = B[lv] + step[lv]
        fb[li] = f(li, b[li])
        n_eval[li] += 1

    # out of iterations: fall back to the better bracket end
    left = np.flatnonzero(active)
    better = left[np.abs(fc[left]) < np.abs(fb[left])]
    b[better], fb[better] = c[better], fc[better]
    return b, fb, n_eval

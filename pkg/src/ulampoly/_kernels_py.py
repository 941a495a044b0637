"""Pure-Python/numpy versions of the hot loops.

Same call signatures and return values as the compiled ``_kernels``
extension; :mod:`ulampoly._backend` picks one at import time.
"""

import numpy as np

FULL = 0
TILDE = 1

CONVERGED = 0
AT_INFINITY = 1
FAILED = 2

BACKEND = "python"


def _esym(c):
    e = np.zeros(len(c) + 1, dtype=np.complex128)
    e[0] = 1.0
    for k, cn in enumerate(c, start=1):
        e[1:k + 1] = e[1:k + 1] + cn * e[0:k]
    return e


def _esym_excluding(c):
    """Row i holds e_0..e_{n-1} of c with entry i removed."""
    n = len(c)
    out = np.zeros((n, n), dtype=np.complex128)
    out[:, 0] = 1.0
    for m in range(n):
        mult = np.full(n, c[m])
        mult[m] = 0.0
        out[:, 1:] = out[:, 1:] + mult[:, None] * out[:, :-1]
    return out


def target_system(x, kind):
    """Residual vector and Jacobian of the FULL or TILDE fixed-point system."""
    n = len(x)
    e = _esym(x)
    signs = (-1.0) ** np.arange(1, n + 1)
    f = e[1:] - signs * x
    ex = _esym_excluding(x)
    jac = ex.T.copy() - np.diag(signs)
    if kind == TILDE:
        head = x[:n - 1]
        f[n - 1] = _esym(head)[n - 1] - (-1.0) ** n
        jac[n - 1, :] = 0.0
        if n >= 2:
            jac[n - 1, :n - 1] = _esym_excluding(head)[:, n - 2]
    return f, jac


def _start_system(x, degrees, consts):
    s = x ** degrees - consts
    js = np.diag(degrees * x ** (degrees - 1))
    return s, js


def _max_abs(v):
    return float(np.max(np.abs(v))) if len(v) else 0.0


def _solve(a, b):
    try:
        out = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(out)):
        return None
    return out


def _correct(x, t, kind, degrees, consts, gamma, corr_tol, iters=3):
    prev = np.inf
    for _ in range(iters):
        f, jf = target_system(x, kind)
        s, js = _start_system(x, degrees, consts)
        h = gamma * t * s + (1.0 - t) * f
        hx = gamma * t * js + (1.0 - t) * jf
        dx = _solve(hx, -h)
        if dx is None:
            return False, x
        x = x + dx
        size = _max_abs(dx)
        if size <= corr_tol * (1.0 + _max_abs(x)):
            return True, x
        if size > 0.5 * prev:
            return False, x
        prev = size
    return False, x


def _final_newton(x, kind, max_iter=100):
    """Newton on the target system at t = 0, tolerant of singular endpoints.

    Returns the iterate with the smallest residual seen and that residual.
    """
    best_x = x
    best_res = _max_abs(target_system(x, kind)[0])
    stall = 0
    prev = np.inf
    for _ in range(max_iter):
        f, jf = target_system(x, kind)
        dx = _solve(jf, -f)
        if dx is None:
            break
        x = x + dx
        res = _max_abs(target_system(x, kind)[0])
        if res < best_res:
            best_x, best_res = x, res
        size = _max_abs(dx)
        if size <= 1e-14 * (1.0 + _max_abs(x)):
            break
        stall = stall + 1 if size >= prev else 0
        if stall >= 5:
            break
        prev = size
    return best_x, best_res


def track_path(start, kind, degrees, consts, gamma, h_init=0.05, h_max=0.1,
               h_min=1e-14, max_steps=10000, escape_norm=1e8, corr_tol=1e-9,
               final_tol=1e-9, jump_guard=0.05):
    """Track one path of ``gamma*t*S(x) + (1-t)*F(x) = 0`` from t=1 to t=0.

    Euler predictor, up-to-3-step Newton corrector with contraction test,
    step halving on failure and doubling after three straight successes.
    The last step lands on t=0 and switches to a plain Newton loop on F
    that tolerates singular endpoints.

    Returns ``(endpoint, status, steps, min_step)``.
    """
    x = np.array(start, dtype=np.complex128)
    degrees = np.asarray(degrees, dtype=np.int64)
    consts = np.asarray(consts, dtype=np.complex128)
    gamma = complex(gamma)
    t = 1.0
    h = h_init
    min_step = h
    streak = 0
    steps = 0
    while t > 0.0:
        if steps >= max_steps:
            return x, FAILED, steps, min_step
        steps += 1
        h = min(h, t)
        min_step = min(min_step, h)
        f, jf = target_system(x, kind)
        s, js = _start_system(x, degrees, consts)
        hx = gamma * t * js + (1.0 - t) * jf
        ht = gamma * s - f
        v = _solve(hx, -ht)
        ok = v is not None
        if ok:
            t1 = t - h if h < t else 0.0
            xp = x - h * v
            if t1 == 0.0:
                xc, res = _final_newton(xp, kind)
                scale = 1.0 + _max_abs(xc)
                ok = (res <= final_tol * scale ** len(x)
                      and _max_abs(xc - xp) <= jump_guard * scale)
            else:
                ok, xc = _correct(xp, t1, kind, degrees, consts, gamma, corr_tol)
        if ok:
            x = xc
            t = t1
            streak += 1
            if streak >= 3:
                h = min(2.0 * h, h_max)
                streak = 0
            if _max_abs(x) > escape_norm:
                return x, AT_INFINITY, steps, min_step
        else:
            streak = 0
            h *= 0.5
            if h < h_min:
                return x, FAILED, steps, min_step
    return x, CONVERGED, steps, min_step


def _flow_rhs_batch(z, coeffs):
    """Right-hand side for a batch of states; also returns the min pairwise gap."""
    n = z.shape[1]
    p = np.ones_like(z)
    for cm in coeffs:
        p = p * z + cm
    diff = z[:, :, None] - z[:, None, :]
    idx = np.arange(n)
    diff[:, idx, idx] = 1.0
    denom = np.prod(diff, axis=2)
    gap = np.abs(diff)
    gap[:, idx, idx] = np.inf
    # collided rows divide by zero; the caller discards them via the gap
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = -p / denom
    return rhs, gap.min(axis=(1, 2)) if n > 1 else np.full(z.shape[0], np.inf)


def rk4_flow(zeta0, coeffs, dt, nsteps, record_every=1, gap_tol=1e-10):
    """Classical RK4 for the zero flow, batched over rows of ``zeta0``.

    Returns ``(states, n_valid)`` with ``states`` of shape
    ``(batch, nsteps // record_every + 1, N)``.  A row whose state (or an
    intermediate stage) comes within ``gap_tol`` of a collision stops
    advancing; ``n_valid[b]`` counts its records before truncation.
    """
    z = np.array(zeta0, dtype=np.complex128, copy=True)
    if z.ndim == 1:
        z = z[None, :]
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    batch, n = z.shape
    n_rec = nsteps // record_every + 1
    states = np.empty((batch, n_rec, n), dtype=np.complex128)
    n_valid = np.zeros(batch, dtype=np.int64)
    alive = np.ones(batch, dtype=bool)

    _, gap = _flow_rhs_batch(z, coeffs)
    alive &= gap > gap_tol
    states[:, 0, :] = z
    n_valid[alive] = 1
    rec = 1
    for step in range(1, nsteps + 1):
        if not alive.any():
            states[:, rec:, :] = states[:, rec - 1:rec, :]
            break
        za = z[alive]
        k1, g1 = _flow_rhs_batch(za, coeffs)
        k2, g2 = _flow_rhs_batch(za + 0.5 * dt * k1, coeffs)
        k3, g3 = _flow_rhs_batch(za + 0.5 * dt * k2, coeffs)
        k4, g4 = _flow_rhs_batch(za + dt * k3, coeffs)
        znew = za + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _, g5 = _flow_rhs_batch(znew, coeffs)
        good = (np.minimum.reduce([g1, g2, g3, g4, g5]) > gap_tol) & np.all(np.isfinite(znew), axis=1)
        rows = np.flatnonzero(alive)
        z[rows[good]] = znew[good]
        alive[rows[~good]] = False
        if step % record_every == 0:
            states[:, rec, :] = z
            n_valid[alive] = rec + 1
            rec += 1
    return states, n_valid

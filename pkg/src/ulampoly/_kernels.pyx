# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled path tracker and RK4 zero-flow stepper.

Mirrors ``_kernels_py`` step for step; work arrays live on the stack, so
systems are capped at ``MAXN`` unknowns.
"""

import numpy as np
cimport numpy as cnp

cdef extern from "complex.h" nogil:
    double cabs(double complex)

cdef extern from "math.h" nogil:
    bint isfinite(double)
    double INFINITY

cnp.import_array()

cdef enum:
    MAXN = 16
    K_FULL = 0
    K_TILDE = 1
    K_CONVERGED = 0
    K_AT_INFINITY = 1
    K_FAILED = 2

FULL = K_FULL
TILDE = K_TILDE
CONVERGED = K_CONVERGED
AT_INFINITY = K_AT_INFINITY
FAILED = K_FAILED
BACKEND = "cython"


cdef inline double max_abs(const double complex* v, int n) noexcept nogil:
    cdef double m = 0.0, a
    cdef int i
    for i in range(n):
        a = cabs(v[i])
        if a > m:
            m = a
    return m


cdef inline void esym(const double complex* c, int n, double complex* e) noexcept nogil:
    cdef int k, j
    e[0] = 1.0
    for k in range(1, n + 1):
        e[k] = 0.0
    for k in range(n):
        for j in range(k + 1, 0, -1):
            e[j] = e[j] + c[k] * e[j - 1]


cdef void target(const double complex* x, int n, int kind,
                 double complex* f, double complex* jac) noexcept nogil:
    cdef double complex e[MAXN + 1]
    cdef double complex ex[MAXN + 1]
    cdef double complex tmp[MAXN]
    cdef int i, j, m, k
    cdef double sign
    esym(x, n, e)
    for i in range(n):
        k = 0
        for m in range(n):
            if m != i:
                tmp[k] = x[m]
                k += 1
        esym(tmp, n - 1, ex)
        for j in range(n):
            jac[j * n + i] = ex[j]
    sign = -1.0
    for j in range(n):
        f[j] = e[j + 1] - sign * x[j]
        jac[j * n + j] = jac[j * n + j] - sign
        sign = -sign
    if kind == K_TILDE:
        esym(x, n - 1, e)
        # sign now equals (-1)**(n+1)
        f[n - 1] = e[n - 1] + sign
        for i in range(n):
            jac[(n - 1) * n + i] = 0.0
        for i in range(n - 1):
            k = 0
            for m in range(n - 1):
                if m != i:
                    tmp[k] = x[m]
                    k += 1
            esym(tmp, n - 2, ex)
            jac[(n - 1) * n + i] = ex[n - 2]


cdef void start_sys(const double complex* x, int n, const long* deg,
                    const double complex* consts, double complex* s,
                    double complex* js) noexcept nogil:
    cdef int i, k
    cdef double complex pw
    for i in range(n):
        pw = 1.0
        for k in range(deg[i] - 1):
            pw = pw * x[i]
        js[i] = deg[i] * pw
        s[i] = pw * x[i] - consts[i]


cdef int solve(double complex* a, double complex* b, int n) noexcept nogil:
    """In-place Gaussian elimination with partial pivoting; 0 on failure."""
    cdef int i, j, k, p
    cdef double best, v
    cdef double complex tmp, factor
    for k in range(n):
        p = k
        best = cabs(a[k * n + k])
        for i in range(k + 1, n):
            v = cabs(a[i * n + k])
            if v > best:
                best = v
                p = i
        if best == 0.0:
            return 0
        if p != k:
            for j in range(n):
                tmp = a[k * n + j]
                a[k * n + j] = a[p * n + j]
                a[p * n + j] = tmp
            tmp = b[k]
            b[k] = b[p]
            b[p] = tmp
        for i in range(k + 1, n):
            factor = a[i * n + k] / a[k * n + k]
            if factor != 0.0:
                for j in range(k, n):
                    a[i * n + j] = a[i * n + j] - factor * a[k * n + j]
                b[i] = b[i] - factor * b[k]
    for i in range(n - 1, -1, -1):
        tmp = b[i]
        for j in range(i + 1, n):
            tmp = tmp - a[i * n + j] * b[j]
        b[i] = tmp / a[i * n + i]
        if not (isfinite(b[i].real) and isfinite(b[i].imag)):
            return 0
    return 1


cdef int homotopy_lin(const double complex* x, int n, int kind, const long* deg,
                      const double complex* consts, double complex gamma, double t,
                      double complex* hmat, double complex* rhs, bint want_ht) noexcept nogil:
    """Fill hmat = H_x and rhs = -H (or -H_t when want_ht)."""
    cdef double complex f[MAXN]
    cdef double complex jf[MAXN * MAXN]
    cdef double complex s[MAXN]
    cdef double complex js[MAXN]
    cdef int i, j
    target(x, n, kind, f, jf)
    start_sys(x, n, deg, consts, s, js)
    for i in range(n):
        for j in range(n):
            hmat[i * n + j] = (1.0 - t) * jf[i * n + j]
        hmat[i * n + i] = hmat[i * n + i] + gamma * t * js[i]
        if want_ht:
            rhs[i] = -(gamma * s[i] - f[i])
        else:
            rhs[i] = -(gamma * t * s[i] + (1.0 - t) * f[i])
    return 0


cdef bint correct(double complex* x, int n, int kind, const long* deg,
                  const double complex* consts, double complex gamma, double t,
                  double corr_tol) noexcept nogil:
    cdef double complex hmat[MAXN * MAXN]
    cdef double complex rhs[MAXN]
    cdef double prev = INFINITY, size
    cdef int it, i
    for it in range(3):
        homotopy_lin(x, n, kind, deg, consts, gamma, t, hmat, rhs, False)
        if not solve(hmat, rhs, n):
            return False
        for i in range(n):
            x[i] = x[i] + rhs[i]
        size = max_abs(rhs, n)
        if size <= corr_tol * (1.0 + max_abs(x, n)):
            return True
        if size > 0.5 * prev:
            return False
        prev = size
    return False


cdef double final_newton(double complex* x, int n, int kind) noexcept nogil:
    """Newton on F alone; leaves the best iterate in x and returns its residual."""
    cdef double complex f[MAXN]
    cdef double complex jf[MAXN * MAXN]
    cdef double complex best[MAXN]
    cdef double best_res, res, size, prev = INFINITY
    cdef int it, i, stall = 0
    target(x, n, kind, f, jf)
    best_res = max_abs(f, n)
    for i in range(n):
        best[i] = x[i]
    for it in range(100):
        target(x, n, kind, f, jf)
        for i in range(n):
            f[i] = -f[i]
        if not solve(jf, f, n):
            break
        for i in range(n):
            x[i] = x[i] + f[i]
        size = max_abs(f, n)
        target(x, n, kind, f, jf)
        res = max_abs(f, n)
        if res < best_res:
            best_res = res
            for i in range(n):
                best[i] = x[i]
        if size <= 1e-14 * (1.0 + max_abs(x, n)):
            break
        if size >= prev:
            stall += 1
        else:
            stall = 0
        if stall >= 5:
            break
        prev = size
    for i in range(n):
        x[i] = best[i]
    return best_res


cdef int track_c(double complex* x, int n, int kind, const long* deg,
                 const double complex* consts, double complex gamma,
                 double h_init, double h_max, double h_min, long max_steps,
                 double escape_norm, double corr_tol, double final_tol,
                 double jump_guard, long* steps_out, double* min_step_out) noexcept nogil:
    cdef double complex hmat[MAXN * MAXN]
    cdef double complex v[MAXN]
    cdef double complex xc[MAXN]
    cdef double t = 1.0, h = h_init, min_step = h_init, t1, res, scale, disp, d, scale_n
    cdef long steps = 0
    cdef int streak = 0, i, status = K_CONVERGED
    cdef bint ok
    while t > 0.0:
        if steps >= max_steps:
            status = K_FAILED
            break
        steps += 1
        if h > t:
            h = t
        if h < min_step:
            min_step = h
        homotopy_lin(x, n, kind, deg, consts, gamma, t, hmat, v, True)
        ok = solve(hmat, v, n)
        if ok:
            t1 = t - h if h < t else 0.0
            for i in range(n):
                xc[i] = x[i] - h * v[i]
            if t1 == 0.0:
                for i in range(n):
                    v[i] = xc[i]  # keep the predicted point
                res = final_newton(xc, n, kind)
                scale = 1.0 + max_abs(xc, n)
                scale_n = 1.0
                for i in range(n):
                    scale_n = scale_n * scale
                disp = 0.0
                for i in range(n):
                    d = cabs(xc[i] - v[i])
                    if d > disp:
                        disp = d
                ok = res <= final_tol * scale_n and disp <= jump_guard * scale
            else:
                ok = correct(xc, n, kind, deg, consts, gamma, t1, corr_tol)
        if ok:
            for i in range(n):
                x[i] = xc[i]
            t = t1
            streak += 1
            if streak >= 3:
                h = 2.0 * h
                if h > h_max:
                    h = h_max
                streak = 0
            if max_abs(x, n) > escape_norm:
                status = K_AT_INFINITY
                break
        else:
            streak = 0
            h *= 0.5
            if h < h_min:
                status = K_FAILED
                break
    steps_out[0] = steps
    min_step_out[0] = min_step
    return status


def target_system(x, int kind):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] xa = np.ascontiguousarray(x, dtype=np.complex128)
    cdef int n = xa.shape[0]
    if n > MAXN:
        raise ValueError(f"system size {n} exceeds compiled limit {MAXN}")
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] f = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] jac = np.empty((n, n), dtype=np.complex128)
    target(<double complex*> xa.data, n, kind, <double complex*> f.data,
           <double complex*> jac.data)
    return f, jac


def track_path(start, int kind, degrees, consts, gamma, double h_init=0.05,
               double h_max=0.1, double h_min=1e-14, long max_steps=10000,
               double escape_norm=1e8, double corr_tol=1e-9, double final_tol=1e-9,
               double jump_guard=0.05):
    """Track one homotopy path; see ``_kernels_py.track_path``."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] x = np.array(start, dtype=np.complex128)
    cdef cnp.ndarray[long, ndim=1] deg = np.ascontiguousarray(degrees, dtype=np.int_)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] cs = np.ascontiguousarray(consts, dtype=np.complex128)
    cdef int n = x.shape[0]
    if n > MAXN:
        raise ValueError(f"system size {n} exceeds compiled limit {MAXN}")
    cdef double complex g = gamma
    cdef long steps = 0
    cdef double min_step = 0.0
    cdef int status
    with nogil:
        status = track_c(<double complex*> x.data, n, kind, <long*> deg.data,
                         <double complex*> cs.data, g, h_init, h_max, h_min,
                         max_steps, escape_norm, corr_tol, final_tol, jump_guard,
                         &steps, &min_step)
    return x, status, steps, min_step


cdef double flow_rhs_c(const double complex* z, int n, const double complex* coeffs,
                       double complex* out) noexcept nogil:
    """Writes f(z) into out and returns the minimum pairwise gap."""
    cdef int i, l, m
    cdef double complex p, den, diff
    cdef double gap = INFINITY, a
    for i in range(n):
        p = 1.0
        for m in range(n):
            p = p * z[i] + coeffs[m]
        den = 1.0
        for l in range(n):
            if l != i:
                diff = z[i] - z[l]
                a = cabs(diff)
                if a < gap:
                    gap = a
                den = den * diff
        out[i] = -p / den
    return gap


def rk4_flow(zeta0, coeffs, double dt, long nsteps, long record_every=1,
             double gap_tol=1e-10):
    """Batched RK4 for the zero flow; see ``_kernels_py.rk4_flow``."""
    z_in = np.array(zeta0, dtype=np.complex128)
    if z_in.ndim == 1:
        z_in = z_in[None, :]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] z = np.ascontiguousarray(z_in)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] cf = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef int batch = z.shape[0], n = z.shape[1]
    if n > MAXN:
        raise ValueError(f"system size {n} exceeds compiled limit {MAXN}")
    cdef long n_rec = nsteps // record_every + 1
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] states = np.empty((batch, n_rec, n), dtype=np.complex128)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] n_valid = np.zeros(batch, dtype=np.int64)
    cdef double complex* zp = <double complex*> z.data
    cdef double complex* sp = <double complex*> states.data
    cdef double complex* cp = <double complex*> cf.data
    cdef double complex k1[MAXN]
    cdef double complex k2[MAXN]
    cdef double complex k3[MAXN]
    cdef double complex k4[MAXN]
    cdef double complex tmp[MAXN]
    cdef double complex cur[MAXN]
    cdef long b, step, rec, r
    cdef int i
    cdef double g, a2, a3, a4, a5
    cdef bint alive
    with nogil:
        for b in range(batch):
            for i in range(n):
                cur[i] = zp[b * n + i]
                sp[(b * n_rec) * n + i] = cur[i]
            g = flow_rhs_c(cur, n, cp, k1)
            alive = g > gap_tol
            rec = 1
            n_valid[b] = 1 if alive else 0
            for step in range(1, nsteps + 1):
                if alive:
                    g = flow_rhs_c(cur, n, cp, k1)
                    for i in range(n):
                        tmp[i] = cur[i] + 0.5 * dt * k1[i]
                    a2 = flow_rhs_c(tmp, n, cp, k2)
                    for i in range(n):
                        tmp[i] = cur[i] + 0.5 * dt * k2[i]
                    a3 = flow_rhs_c(tmp, n, cp, k3)
                    for i in range(n):
                        tmp[i] = cur[i] + dt * k3[i]
                    a4 = flow_rhs_c(tmp, n, cp, k4)
                    for i in range(n):
                        tmp[i] = cur[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                    a5 = flow_rhs_c(tmp, n, cp, k1)
                    if (g > gap_tol and a2 > gap_tol and a3 > gap_tol and a4 > gap_tol
                            and a5 > gap_tol and isfinite(max_abs(tmp, n))):
                        for i in range(n):
                            cur[i] = tmp[i]
                    else:
                        alive = False
                if step % record_every == 0:
                    for i in range(n):
                        sp[(b * n_rec + rec) * n + i] = cur[i]
                    if alive:
                        n_valid[b] = rec + 1
                    rec += 1
    return states, n_valid

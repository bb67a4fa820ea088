# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trajectory loop. Must stay operation-for-operation identical to
``_kernel_py.simulate`` so both backends produce bit-identical series."""

from libc.math cimport tanh, sin, pow, fabs, isfinite


cdef inline double _phi(int kind, double p0, double p1, const double[::1] tx,
                        const double[::1] ty, double x) noexcept nogil:
    cdef Py_ssize_t lo, hi, mid, n
    cdef double slope
    if kind == 0:
        return tanh(p0 * x)
    elif kind == 1:
        return p1 * tanh(p0 * x / p1)
    elif kind == 2:
        return p0 * (x - p1 * sin(x))
    elif kind == 3:
        return tanh(x - 1.0) * tanh(x) * tanh(x + 1.0)
    else:
        n = tx.shape[0]
        # largest i with tx[i] <= x, clamped to [0, n-2]
        lo = 0
        hi = n
        while lo < hi:
            mid = (lo + hi) // 2
            if x < tx[mid]:
                hi = mid
            else:
                lo = mid + 1
        lo = lo - 1
        if lo < 0:
            lo = 0
        if lo > n - 2:
            lo = n - 2
        slope = (ty[lo + 1] - ty[lo]) / (tx[lo + 1] - tx[lo])
        return ty[lo] + (x - tx[lo]) * slope


def simulate(int kind, double p0, double p1, const double[::1] tx, const double[::1] ty,
             int rule, double u, double d, double gbar, double c, double alpha,
             double x0, double gamma0, double gamma1, const double[::1] xi,
             long conv_window, double conv_tol, double gamma_tail_tol, double blowup_bound,
             bint early_stop, double[::1] xs, double[::1] ys, double[::1] gs):
    """Run the recursion; fills ``xs``, ``ys``, ``gs`` at indices 0..t_final.

    Returns ``(t_final, status, t_stop, gamma_max)`` with status codes
    0 raw, 1 converged, 2 horizon exhausted, 3 blowup.
    """
    cdef long horizon = xi.shape[0]
    cdef long t, i, last_big = 0, t_final = 0, t_stop = -1, s = 1
    cdef int status = 0
    cdef double x = x0, y, x_new, g_active = gamma0, g = gamma1, gmax, lo, hi
    with nogil:
        xs[0] = x0
        ys[0] = 0.0
        gs[0] = gamma0
        gmax = gamma0 if gamma0 > gamma1 else gamma1
        for t in range(1, horizon + 1):
            y = _phi(kind, p0, p1, tx, ty, x) + xi[t - 1]
            x_new = x - g_active * y
            xs[t] = x_new
            ys[t] = y
            if t >= 2:
                if rule == 0:
                    if ys[t - 1] * y > 0:
                        g = u * g
                        if g > gbar:
                            g = gbar
                    else:
                        g = d * g
                elif rule == 1:
                    if not (ys[t - 1] * y > 0):
                        s = s + 1
                    g = c / pow(<double>(s + 1), alpha)
                elif rule == 2:
                    g = c / pow(<double>(t + 1), alpha)
                else:
                    g = c
            gs[t] = g
            t_final = t
            if not isfinite(x_new) or not isfinite(g) or fabs(x_new) > blowup_bound:
                status = 3
                break
            x = x_new
            g_active = g
            if g > gmax:
                gmax = g
            if g >= gamma_tail_tol * gmax:
                last_big = t
            if early_stop and t - last_big >= conv_window:
                lo = xs[t]
                hi = xs[t]
                for i in range(t - conv_window + 1, t):
                    if xs[i] < lo:
                        lo = xs[i]
                    if xs[i] > hi:
                        hi = xs[i]
                if hi - lo < conv_tol:
                    status = 1
                    t_stop = t
                    break
        if status == 0 and early_stop:
            status = 2
    return t_final, status, t_stop, gmax

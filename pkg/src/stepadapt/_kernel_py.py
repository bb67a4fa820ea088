"""Pure-Python trajectory loop, used when the compiled kernel is unavailable
or the problem/rule is an arbitrary Python callable.

Mirrors ``_kernel.pyx`` step for step; any change must be made in both.
"""

import math

from .stepsize import Constant, Deterministic, Kesten, Multiplicative

RAW, CONVERGED, HORIZON, BLOWUP = 0, 1, 2, 3


def simulate(phi, rule, x0, gamma0, gamma1, xi, conv_window, conv_tol, gamma_tail_tol,
             blowup_bound, early_stop):
    horizon = len(xi)
    xs = [0.0] * (horizon + 1)
    ys = [0.0] * (horizon + 1)
    gs = [0.0] * (horizon + 1)
    xs[0] = x0
    gs[0] = gamma0
    gmax = gamma0 if gamma0 > gamma1 else gamma1
    x, g_active, g = x0, gamma0, gamma1
    last_big, t_final, t_stop, s = 0, 0, -1, 1
    status = RAW

    mult = isinstance(rule, Multiplicative)
    kesten = isinstance(rule, Kesten)
    determ = isinstance(rule, Deterministic)
    if mult:
        u, d, gbar = rule.u, rule.d, rule.gbar
    elif kesten or determ:
        schedule = rule.schedule
    elif isinstance(rule, Constant):
        gc = rule.g
    isfinite = math.isfinite

    for t in range(1, horizon + 1):
        y = phi(x) + xi[t - 1]
        x_new = x - g_active * y
        xs[t] = x_new
        ys[t] = y
        if t >= 2:
            if mult:
                if ys[t - 1] * y > 0:
                    g = u * g
                    if g > gbar:
                        g = gbar
                else:
                    g = d * g
            elif kesten:
                if not (ys[t - 1] * y > 0):
                    s += 1
                g = schedule(s)
            elif determ:
                g = schedule(t)
            else:
                g = gc
        gs[t] = g
        t_final = t
        if not isfinite(x_new) or not isfinite(g) or abs(x_new) > blowup_bound:
            status = BLOWUP
            break
        x = x_new
        g_active = g
        if g > gmax:
            gmax = g
        if g >= gamma_tail_tol * gmax:
            last_big = t
        if early_stop and t - last_big >= conv_window:
            window = xs[t - conv_window + 1:t + 1]
            if max(window) - min(window) < conv_tol:
                status = CONVERGED
                t_stop = t
                break
    if status == RAW and early_stop:
        status = HORIZON
    n = t_final + 1
    return xs[:n], ys[:n], gs[:n], t_final, status, t_stop, gmax

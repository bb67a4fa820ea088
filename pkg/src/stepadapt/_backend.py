"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``STEPADAPT_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import os
from typing import NamedTuple

import numpy as np

from . import _kernel_py
from .problem import KIND_CODES, TargetFunction
from .stepsize import Constant, Deterministic, Kesten, Multiplicative, PowerSchedule

try:
    from . import _kernel as _ckernel
except ImportError:  # extension not built
    _ckernel = None

COMPILED_AVAILABLE = _ckernel is not None
DEFAULT_BACKEND = "compiled" if COMPILED_AVAILABLE and os.environ.get("STEPADAPT_BACKEND", "auto") != "python" else "python"

_EMPTY = np.zeros(2)


class RawRun(NamedTuple):
    xs: np.ndarray
    ys: np.ndarray
    gammas: np.ndarray
    t_final: int
    status: int
    t_stop: int
    gamma_max: float


def _rule_code(rule):
    if isinstance(rule, Multiplicative):
        return 0, rule.u, rule.d, rule.gbar, 0.0, 0.0
    if isinstance(rule, Kesten) and isinstance(rule.schedule, PowerSchedule):
        return 1, 0.0, 0.0, 0.0, rule.schedule.c, rule.schedule.alpha
    if isinstance(rule, Deterministic) and isinstance(rule.schedule, PowerSchedule):
        return 2, 0.0, 0.0, 0.0, rule.schedule.c, rule.schedule.alpha
    if isinstance(rule, Constant):
        return 3, 0.0, 0.0, 0.0, rule.g, 0.0
    return None


def compilable(problem: TargetFunction, rule) -> bool:
    return problem.kind in KIND_CODES and _rule_code(rule) is not None


def resolve(backend: str | None, problem: TargetFunction, rule) -> str:
    backend = backend or DEFAULT_BACKEND
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "compiled" and not (COMPILED_AVAILABLE and compilable(problem, rule)):
        return "python"
    return backend


def simulate(problem: TargetFunction, rule, x0: float, gamma0: float, gamma1: float, xi: np.ndarray,
             conv_window: int, conv_tol: float, gamma_tail_tol: float, blowup_bound: float,
             early_stop: bool, backend: str | None = None) -> RawRun:
    if resolve(backend, problem, rule) == "compiled":
        horizon = xi.shape[0]
        xs = np.empty(horizon + 1)
        ys = np.empty(horizon + 1)
        gs = np.empty(horizon + 1)
        p = tuple(problem.params) + (0.0, 0.0)
        if problem.table is not None:
            tx, ty = (np.ascontiguousarray(a, dtype=float) for a in problem.table)
        else:
            tx = ty = _EMPTY
        code, u, d, gbar, c, alpha = _rule_code(rule)
        t_final, status, t_stop, gmax = _ckernel.simulate(
            KIND_CODES[problem.kind], float(p[0]), float(p[1]), tx, ty, code, u, d, gbar, c, alpha,
            float(x0), float(gamma0), float(gamma1), np.ascontiguousarray(xi, dtype=float),
            int(conv_window), float(conv_tol), float(gamma_tail_tol), float(blowup_bound),
            bool(early_stop), xs, ys, gs,
        )
        n = t_final + 1
        xs, ys, gs = xs[:n].copy(), ys[:n].copy(), gs[:n].copy()
    else:
        xs, ys, gs, t_final, status, t_stop, gmax = _kernel_py.simulate(
            problem.eval, rule, float(x0), float(gamma0), float(gamma1), xi.tolist(),
            int(conv_window), float(conv_tol), float(gamma_tail_tol), float(blowup_bound), bool(early_stop),
        )
        xs, ys, gs = np.array(xs), np.array(ys), np.array(gs)
    ys[0] = np.nan
    return RawRun(xs, ys, gs, int(t_final), int(status), int(t_stop), float(gmax))

"""Threshold theory and experiment-side estimators.

Theory side: classify (u, d) against the crossing-probability thresholds and
test limit-set membership. Experiment side: geometric rate fits, phase
sweeps over (u, d) and the precision-versus-rate table.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

from .engine import EnsembleResult, SimConfig, log_linear_fit, run_ensemble
from .errors import EmptySet, InsufficientData, InvalidConfig
from .noise import NoiseModel, inf_k, k_lower_limit, k_upper_limit
from .problem import TargetFunction
from .stepsize import Multiplicative, kappa, lambda_of

CONVERGE = "Converge"
DIVERGE = "Diverge"
INDETERMINATE = "Indeterminate"

IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class ThresholdReport:
    kappa: float
    lambda_: float
    k_plus_at_0: float
    inf_k_minus: float
    theoretical_class: str


def theoretical_classification(u: float, d: float, noise: NoiseModel,
                               z_grid: Sequence[float] | None = None) -> ThresholdReport:
    """Converge if kappa > k_plus(0), Diverge if kappa < inf_z k_minus(z), else Indeterminate."""
    kap = kappa(u, d)
    lam = lambda_of(u, d)
    kp0 = k_upper_limit(noise, 0.0)
    kinf, _ = inf_k(noise, z_grid)
    if kap > kp0:
        cls = CONVERGE
    elif kap < kinf:
        cls = DIVERGE
    else:
        cls = INDETERMINATE
    return ThresholdReport(kap, lam, kp0, kinf, cls)


def _checked_threshold(u: float, d: float) -> float:
    kap = kappa(u, d)
    via_lambda = 1.0 / (1.0 + lambda_of(u, d))
    if abs(via_lambda - kap) > IDENTITY_TOL:
        raise ArithmeticError(f"1/(1+lambda)={via_lambda!r} disagrees with kappa={kap!r}")
    return kap


def limit_set_membership(x_star: float, f: TargetFunction, noise: NoiseModel, u: float, d: float,
                         tol: float = 0.0) -> tuple[bool, float, float]:
    """Whether ``x_star`` lies in {x : k_minus(phi(x)) <= kappa} (closed set), up to ``tol``.

    Returns ``(member, k_value, threshold)``.
    """
    thr = _checked_threshold(u, d)
    k_val = k_lower_limit(noise, f.eval(x_star))
    return k_val <= thr + tol, k_val, thr


def boundary_abs_phi(noise: NoiseModel, threshold: float, xtol: float = 1e-12) -> float:
    """Smallest |z| >= 0 with k(z) = threshold, by bisection on [0, 50 sigma].

    Returns 0 when k(0) already meets the threshold and inf when it is never
    reached. Assumes k is nondecreasing in |z| (true for the symmetric families).
    """

    def g(z):
        return k_lower_limit(noise, z) - threshold

    if g(0.0) >= 0:
        return 0.0
    hi = 50.0 * noise.sigma_scale
    if g(hi) < 0:
        return math.inf
    return float(optimize.bisect(g, 0.0, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500))


def limit_set_sample(f: TargetFunction, noise: NoiseModel, lam: float, grid: Iterable[float]) -> np.ndarray:
    """Grid points x with k(phi(x)) <= 1 / (1 + lam)."""
    thr = 1.0 / (1.0 + lam)
    return np.array([x for x in grid if k_lower_limit(noise, f.eval(x)) <= thr])


def hausdorff_upper(a: Iterable[float], b: Iterable[float]) -> float:
    """sup over a of the distance to the nearest point of b."""
    a = np.asarray(list(a), dtype=float)
    b = np.asarray(list(b), dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptySet("both samples must be non-empty")
    worst = 0.0
    for chunk in np.array_split(a, max(1, a.size * b.size // 1_000_000)):
        worst = max(worst, float(np.max(np.min(np.abs(chunk[:, None] - b[None, :]), axis=1))))
    return worst


# -- rate fits ------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    window: tuple[int, int]


def geometric_rate(trajectory, window: tuple[int, int] | None = None) -> RateFit:
    """Least-squares fit of ln(gamma_t) against t over recorded points in ``window``.

    ``trajectory`` needs ``ts`` and ``gammas`` arrays; the default window is
    the whole record.
    """
    ts = np.asarray(trajectory.ts)
    gs = np.asarray(trajectory.gammas)
    if window is None:
        window = (int(ts[0]), int(ts[-1]))
    lo, hi = window
    if lo < ts[0] or hi > ts[-1] or lo > hi:
        raise InsufficientData(f"window {window} outside recorded range [{ts[0]}, {ts[-1]}]")
    sel = (ts >= lo) & (ts <= hi)
    if np.count_nonzero(sel) < 10:
        raise InsufficientData("rate fit needs at least 10 recorded points")
    slope, intercept, r2 = log_linear_fit(ts[sel], gs[sel])
    return RateFit(slope, intercept, r2, (int(lo), int(hi)))


# -- sweeps -----------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseCell:
    u: float
    d: float
    ud: float
    kappa: float
    theoretical_class: str
    empirical_conv_fraction: float
    median_limit_error: float
    median_rate_slope: float
    n_seeds: int


def _with_rule(base: SimConfig, u: float, d: float) -> SimConfig:
    if not isinstance(base.rule, Multiplicative):
        raise InvalidConfig("sweeps need a multiplicative base rule")
    return replace(base, rule=Multiplicative(u, d, base.rule.gbar))


def phase_cell(u: float, d: float, base_config: SimConfig, n_seeds: int, threads: int = 1) -> PhaseCell:
    report = theoretical_classification(u, d, base_config.noise)
    ens = run_ensemble(_with_rule(base_config, u, d), n_seeds, threads=threads)
    return PhaseCell(u, d, u * d, report.kappa, report.theoretical_class, ens.conv_fraction,
                     ens.median_limit_error, ens.median_rate_slope, n_seeds)


def phase_sweep(u_grid: Sequence[float], d_grid: Sequence[float], base_config: SimConfig, n_seeds: int,
                threads: int = 1) -> list[PhaseCell]:
    """One :class:`PhaseCell` per (u, d), u-major order."""
    return [phase_cell(u, d, base_config, n_seeds, threads) for u in u_grid for d in d_grid]


@dataclass(frozen=True)
class PrecisionRow:
    d: float
    lambda_: float
    kappa: float
    boundary_abs_phi: float
    median_err: float
    median_steps: float
    conv_fraction: float


def precision_vs_rate(u: float, d_list: Sequence[float], base_config: SimConfig, n_seeds: int,
                      threads: int = 1, small_gamma_frac: float = 1e-4) -> list[PrecisionRow]:
    """Limit error and steps until gamma < small_gamma_frac * gbar, per shrink factor d."""
    d_list = list(d_list)
    if any(b <= a for a, b in zip(d_list, d_list[1:])):
        raise InvalidConfig("d_list must be strictly ascending")
    if any(u * d >= 1 for d in d_list):
        raise InvalidConfig("precision sweep requires u * d < 1 for every d")
    rows = []
    for d in d_list:
        cfg = _with_rule(base_config, u, d)
        ens = run_ensemble(cfg, n_seeds, threads=threads, small_gamma_frac=small_gamma_frac)
        thr = _checked_threshold(u, d)
        rows.append(PrecisionRow(d, lambda_of(u, d), thr, boundary_abs_phi(base_config.noise, thr),
                                 ens.median_limit_error, ens.median_steps_to_small_gamma, ens.conv_fraction))
    return rows


def zero_histogram(ensemble: EnsembleResult) -> dict[float, int]:
    """How many converged seeds settled nearest each declared zero."""
    return dict(sorted(Counter(s.nearest_zero for s in ensemble.converged).items()))


def count_inversions(values: Sequence[float], increasing: bool) -> int:
    """Adjacent pairs violating the claimed monotone direction."""
    bad = 0
    for a, b in zip(values, values[1:]):
        if (b < a) if increasing else (b > a):
            bad += 1
    return bad

"""The stochastic approximation recursion, trajectories, ensembles, classification.

Indexing: ``y_t = phi(x_{t-1}) + xi_t`` and ``x_t = x_{t-1} - gamma_{t-1} y_t``
for t >= 1. gamma_0 and gamma_1 are initial conditions; the first sign
comparison is ``y_1 * y_2`` and produces gamma_2.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _backend
from .errors import InvalidConfig, InsufficientData, NonFiniteState, StepAdaptError
from .noise import NoiseModel, sample_array
from .problem import AssumptionReport, TargetFunction, check_assumptions
from .rng import child_seed, make_rng
from .stepsize import (
    StepRuleConfig,
    StepRuleState,
    initial_gamma0,
    init_state,
    sign_of,
    update,
)

CONVERGED = "Converged"
NOT_CONVERGED = "NotConverged"
STOPPED = "Stopped"
HORIZON_EXHAUSTED = "HorizonExhausted"
BLOWUP = "Blowup"


@dataclass(frozen=True)
class StopCriteria:
    conv_window: int = 200
    conv_tol: float = 1e-6
    gamma_tail_tol: float = 1e-8
    blowup_bound: float = 1e6

    def __post_init__(self):
        if self.conv_window < 1 or not (self.conv_tol > 0 and self.gamma_tail_tol > 0 and self.blowup_bound > 0):
            raise InvalidConfig("stop criteria must all be positive")


@dataclass(frozen=True)
class Status:
    kind: str
    x_star: float | None = None
    t_stop: int | None = None
    reason: str | None = None

    @property
    def converged(self) -> bool:
        return self.kind == CONVERGED

    @property
    def label(self) -> str:
        if self.kind == NOT_CONVERGED:
            return "horizon_exhausted" if self.reason == HORIZON_EXHAUSTED else "blowup"
        return self.kind.lower()


@dataclass(frozen=True)
class SimConfig:
    problem: TargetFunction
    noise: NoiseModel
    rule: StepRuleConfig
    x0: float
    gamma0: float | None = None
    gamma1: float | None = None
    horizon: int = 20_000
    seed: int = 0
    record_stride: int = 1
    stop: StopCriteria = field(default_factory=StopCriteria)
    force: bool = False

    def __post_init__(self):
        if self.horizon < 2:
            raise InvalidConfig("horizon must be >= 2")
        if self.record_stride < 1:
            raise InvalidConfig("record_stride must be >= 1")
        if not math.isfinite(self.x0):
            raise InvalidConfig("x0 must be finite")
        init_state(self.rule, self.gamma0, self.gamma1)

    @property
    def gbar(self) -> float:
        return self.rule.max_step

    def assumptions(self) -> AssumptionReport:
        return check_assumptions(self.problem, self.noise, self.gbar)

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, seed=seed)


@dataclass
class Trajectory:
    """Series recorded every ``stride`` steps plus the unthinned trailing window."""

    ts: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    gammas: np.ndarray
    t_final: int
    status: Status
    stride: int
    tail_ts: np.ndarray
    tail_xs: np.ndarray
    tail_gammas: np.ndarray
    gamma_max: float
    gbar: float


def step(problem: TargetFunction, noise: NoiseModel, rule: StepRuleConfig, x_prev: float,
         gamma_active: float, state: StepRuleState, y_prev: float | None, rng: np.random.Generator,
         xi: float | None = None) -> tuple[float, float, StepRuleState]:
    """One iteration. ``y_prev`` is None on the first step (no sign update).

    ``xi`` overrides the noise draw (the rng is then left untouched).
    """
    if xi is None:
        xi = float(sample_array(noise, 1, rng)[0])
    y = problem.eval(x_prev) + xi
    x_next = x_prev - gamma_active * y
    if y_prev is not None:
        state = update(rule, state, sign_of(y_prev, y))
    if not (math.isfinite(x_next) and math.isfinite(state.gamma)):
        raise NonFiniteState(f"non-finite state x={x_next!r} gamma={state.gamma!r}")
    return x_next, y, state


def _start(config: SimConfig) -> tuple[float, float]:
    g0 = initial_gamma0(config.rule, config.gamma0)
    return g0, init_state(config.rule, config.gamma0, config.gamma1).gamma


def simulate_raw(config: SimConfig, early_stop: bool = True, backend: str | None = None) -> _backend.RawRun:
    """Full-resolution series for one seed (no assumption gate)."""
    xi = sample_array(config.noise, config.horizon, make_rng(config.seed))
    g0, g1 = _start(config)
    s = config.stop
    return _backend.simulate(config.problem, config.rule, config.x0, g0, g1, xi, s.conv_window, s.conv_tol,
                             s.gamma_tail_tol, s.blowup_bound, early_stop, backend)


def _status_from_raw(raw: _backend.RawRun, stop: StopCriteria) -> Status:
    if raw.status == _backend._kernel_py.CONVERGED:
        w = raw.xs[raw.t_final - stop.conv_window + 1:raw.t_final + 1]
        return Status(CONVERGED, float(np.mean(w)), raw.t_stop)
    if raw.status == _backend._kernel_py.BLOWUP:
        return Status(NOT_CONVERGED, reason=BLOWUP)
    if raw.status == _backend._kernel_py.HORIZON:
        return Status(NOT_CONVERGED, reason=HORIZON_EXHAUSTED)
    return Status(STOPPED)


def _gate(config: SimConfig) -> None:
    config.assumptions().require(force=config.force)


def run(config: SimConfig, early_stop: bool = True, backend: str | None = None) -> Trajectory:
    """Simulate one trajectory; deterministic in ``config`` (including the seed)."""
    _gate(config)
    raw = simulate_raw(config, early_stop, backend)
    stride = config.record_stride
    idx = np.arange(0, raw.t_final + 1, stride)
    w = min(config.stop.conv_window, raw.t_final + 1)
    tail = slice(raw.t_final + 1 - w, raw.t_final + 1)
    return Trajectory(
        ts=idx, xs=raw.xs[idx], ys=raw.ys[idx], gammas=raw.gammas[idx], t_final=raw.t_final,
        status=_status_from_raw(raw, config.stop), stride=stride,
        tail_ts=np.arange(raw.t_final + 1)[tail], tail_xs=raw.xs[tail], tail_gammas=raw.gammas[tail],
        gamma_max=raw.gamma_max, gbar=config.gbar,
    )


def classify(trajectory: Trajectory, criteria: StopCriteria) -> Status:
    """Classify a finished trajectory from its trailing unthinned window."""
    x_last = trajectory.tail_xs[-1]
    g_last = trajectory.tail_gammas[-1]
    if not (math.isfinite(x_last) and math.isfinite(g_last)) or abs(x_last) > criteria.blowup_bound:
        return Status(NOT_CONVERGED, reason=BLOWUP)
    w = criteria.conv_window
    if trajectory.t_final >= w and trajectory.tail_xs.size >= w:
        xs = trajectory.tail_xs[-w:]
        gs = trajectory.tail_gammas[-w:]
        if np.max(gs) < criteria.gamma_tail_tol * trajectory.gamma_max and np.ptp(xs) < criteria.conv_tol:
            return Status(CONVERGED, float(np.mean(xs)), trajectory.t_final)
    return Status(NOT_CONVERGED, reason=HORIZON_EXHAUSTED)


# -- log-linear fit shared with analysis ----------------------------------------


def log_linear_fit(ts: np.ndarray, gammas: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line through (t, ln gamma). Returns (slope, intercept, r2)."""
    ts = np.asarray(ts, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if ts.size < 2 or np.any(~(gammas > 0)):
        raise InsufficientData("need >= 2 points with gamma > 0")
    lg = np.log(gammas)
    tc = ts - ts.mean()
    sxx = float(tc @ tc)
    if sxx == 0:
        raise InsufficientData("degenerate time window")
    slope = float(tc @ (lg - lg.mean())) / sxx
    intercept = float(lg.mean() - slope * ts.mean())
    resid = lg - (intercept + slope * ts)
    ss_tot = float(((lg - lg.mean()) ** 2).sum())
    ss_res = float(resid @ resid)
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return slope, intercept, r2


# -- ensembles -----------------------------------------------------------------


@dataclass(frozen=True)
class SeedSummary:
    index: int
    seed: int
    status: str
    x_star: float
    t_stop: int
    t_final: int
    rate_slope: float
    limit_error: float
    nearest_zero: float
    steps_to_small_gamma: int
    tail_gamma_median: float

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _nanmedian(values: Sequence[float]) -> float:
    vals = [v for v in values if not math.isnan(v)]
    return float(np.median(vals)) if vals else math.nan


@dataclass(frozen=True)
class EnsembleResult:
    seeds: tuple[SeedSummary, ...]

    @property
    def n_seeds(self) -> int:
        return len(self.seeds)

    @property
    def converged(self) -> list[SeedSummary]:
        return [s for s in self.seeds if s.converged]

    @property
    def conv_fraction(self) -> float:
        return len(self.converged) / len(self.seeds)

    @property
    def median_limit_error(self) -> float:
        return _nanmedian([s.limit_error for s in self.converged])

    @property
    def median_rate_slope(self) -> float:
        return _nanmedian([s.rate_slope for s in self.seeds])

    @property
    def median_steps_to_small_gamma(self) -> float:
        return _nanmedian([float(s.steps_to_small_gamma) for s in self.converged if s.steps_to_small_gamma >= 0])

    @property
    def median_tail_gamma(self) -> float:
        return _nanmedian([s.tail_gamma_median for s in self.seeds])

    def aggregate(self) -> dict:
        return {
            "n_seeds": self.n_seeds,
            "conv_fraction": self.conv_fraction,
            "median_limit_err": self.median_limit_error,
            "median_slope": self.median_rate_slope,
            "median_steps": self.median_steps_to_small_gamma,
            "median_tail_gamma": self.median_tail_gamma,
        }


def summarize(config: SimConfig, raw: _backend.RawRun, index: int, rate_window: int = 2000,
              small_gamma_frac: float = 1e-4) -> SeedSummary:
    status = _status_from_raw(raw, config.stop)
    lo = max(0, raw.t_final + 1 - rate_window)
    try:
        slope = log_linear_fit(np.arange(lo, raw.t_final + 1), raw.gammas[lo:])[0]
    except InsufficientData:
        slope = math.nan
    if status.converged:
        x_star = status.x_star
        err = config.problem.nearest_zero_distance(x_star)
        nz = config.problem.nearest_zero(x_star)
    else:
        x_star = err = nz = math.nan
    small = np.flatnonzero(raw.gammas < small_gamma_frac * config.gbar)
    w = min(config.stop.conv_window, raw.t_final + 1)
    return SeedSummary(
        index=index, seed=config.seed, status=status.label, x_star=x_star,
        t_stop=raw.t_stop, t_final=raw.t_final, rate_slope=slope, limit_error=err, nearest_zero=nz,
        steps_to_small_gamma=int(small[0]) if small.size else -1,
        tail_gamma_median=float(np.median(raw.gammas[raw.t_final + 1 - w:])),
    )


def _failed_summary(index: int, seed: int) -> SeedSummary:
    nan = math.nan
    return SeedSummary(index, seed, "error", nan, -1, -1, nan, nan, nan, -1, nan)


def run_ensemble(config: SimConfig, n_seeds: int, threads: int = 1, rate_window: int = 2000,
                 small_gamma_frac: float = 1e-4, backend: str | None = None) -> EnsembleResult:
    """Independent runs with child seeds ``child_seed(config.seed, i)``.

    ``threads`` only changes wall time; summaries are assembled by seed index.
    """
    if n_seeds < 1:
        raise InvalidConfig("n_seeds must be >= 1")
    _gate(config)

    def one(i: int) -> SeedSummary:
        cfg = config.with_seed(child_seed(config.seed, i))
        try:
            raw = simulate_raw(cfg, True, backend)
            return summarize(cfg, raw, i, rate_window, small_gamma_frac)
        except StepAdaptError:
            return _failed_summary(i, cfg.seed)

    if threads <= 1:
        results = [one(i) for i in range(n_seeds)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(n_seeds)))
    return EnsembleResult(tuple(sorted(results, key=lambda s: s.index)))

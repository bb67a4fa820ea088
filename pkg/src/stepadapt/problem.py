"""Target functions and the assumption checker.

Every built-in problem carries a ``kind``/``params`` encoding so the compiled
kernel can evaluate it without calling back into Python. Arbitrary callables
are still accepted but force the pure-Python engine.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidConfig
from .noise import NoiseModel

ZERO_TOL = 1e-12
DERIV_SLACK = 1e-9

# kernel problem codes
KIND_CODES = {"tanh": 0, "linear_sat": 1, "sine_drift": 2, "three_zeros": 3, "table": 4}


@dataclass(frozen=True)
class TargetFunction:
    name: str
    eval: Callable[[float], float] = field(repr=False)
    deriv: Callable[[float], float] = field(repr=False)
    M: float
    R: float
    zeros: tuple[float, ...]
    kind: str = "custom"
    params: tuple[float, ...] = ()
    table: tuple[tuple[float, ...], tuple[float, ...]] | None = field(default=None, repr=False)
    # |phi| is nondecreasing on |x| >= R beyond any finite probe window
    tail_monotone: bool = False

    def __post_init__(self):
        if not (self.M > 0 and math.isfinite(self.M)):
            raise InvalidConfig(f"M must be positive and finite, got {self.M!r}")
        if not self.R > 0:
            raise InvalidConfig(f"R must be positive, got {self.R!r}")
        zs = tuple(sorted(float(z) for z in self.zeros))
        if not zs:
            raise InvalidConfig("zero set must be non-empty")
        for z in zs:
            if abs(z) >= self.R:
                raise InvalidConfig(f"zero {z} lies outside (-R, R) with R={self.R}")
            if abs(self.eval(z)) > ZERO_TOL:
                raise InvalidConfig(f"declared zero {z} has |phi| = {abs(self.eval(z)):.3e}")
        object.__setattr__(self, "zeros", zs)

    def __call__(self, x: float) -> float:
        return self.eval(x)

    @property
    def compiled(self) -> bool:
        return self.kind in KIND_CODES

    def nearest_zero_distance(self, x: float) -> float:
        return min(abs(x - z) for z in self.zeros)

    def nearest_zero(self, x: float) -> float:
        return min(self.zeros, key=lambda z: abs(x - z))

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "params": list(self.params), "M": self.M, "R": self.R}


def evaluate(f: TargetFunction, x: float) -> float:
    return f.eval(x)


def derivative(f: TargetFunction, x: float) -> float:
    return f.deriv(x)


# -- built-ins ---------------------------------------------------------------


def tanh_problem(a: float = 1.0) -> TargetFunction:
    a = float(a)
    if a <= 0:
        raise InvalidConfig("tanh slope a must be positive")

    def phi(x):
        return math.tanh(a * x)

    def dphi(x):
        t = math.tanh(a * x)
        return a * (1.0 - t * t)

    return TargetFunction(f"tanh({a:g})", phi, dphi, M=a, R=1.0, zeros=(0.0,), kind="tanh",
                          params=(a,), tail_monotone=True)


def linear_sat(a: float = 1.0, c: float = 1.0) -> TargetFunction:
    """c * tanh(a x / c): slope ``a`` at the origin, saturating at ``+-c``."""
    a, c = float(a), float(c)
    if a <= 0 or c <= 0:
        raise InvalidConfig("linear_sat needs a > 0 and c > 0")

    def phi(x):
        return c * math.tanh(a * x / c)

    def dphi(x):
        t = math.tanh(a * x / c)
        return a * (1.0 - t * t)

    return TargetFunction(f"linear_sat({a:g},{c:g})", phi, dphi, M=a, R=1.0, zeros=(0.0,),
                          kind="linear_sat", params=(a, c), tail_monotone=True)


def sine_drift(alpha: float = 1.0, beta: float = 0.5) -> TargetFunction:
    alpha, beta = float(alpha), float(beta)
    if alpha <= 0 or not (0 <= beta < 1):
        raise InvalidConfig("sine_drift needs alpha > 0 and 0 <= beta < 1")

    def phi(x):
        return alpha * (x - beta * math.sin(x))

    def dphi(x):
        return alpha * (1.0 - beta * math.cos(x))

    return TargetFunction(f"sine_drift({alpha:g},{beta:g})", phi, dphi, M=alpha * (1.0 + beta), R=1.0,
                          zeros=(0.0,), kind="sine_drift", params=(alpha, beta), tail_monotone=True)


def _three_zeros_phi(x):
    return math.tanh(x - 1.0) * math.tanh(x) * math.tanh(x + 1.0)


def _three_zeros_dphi(x):
    a, b, c = math.tanh(x - 1.0), math.tanh(x), math.tanh(x + 1.0)
    return (1.0 - a * a) * b * c + a * (1.0 - b * b) * c + a * b * (1.0 - c * c)


def three_zeros() -> TargetFunction:
    grid = np.linspace(-6.0, 6.0, 120_001)
    probe = max(abs(_three_zeros_dphi(x)) for x in grid)
    return TargetFunction("three_zeros", _three_zeros_phi, _three_zeros_dphi, M=1.1 * probe, R=2.0,
                          zeros=(-1.0, 0.0, 1.0), kind="three_zeros", tail_monotone=True)


def table_function(xs: Sequence[float], ys: Sequence[float], M: float, R: float,
                   zeros: Sequence[float], name: str = "table") -> TargetFunction:
    """Piecewise-linear interpolant of samples, extended linearly past the ends."""
    xs = tuple(float(v) for v in xs)
    ys = tuple(float(v) for v in ys)
    if len(xs) < 2 or len(xs) != len(ys):
        raise InvalidConfig("table needs at least two (x, y) samples of equal length")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise InvalidConfig("table x values must be strictly increasing")
    n = len(xs)

    def segment(x):
        return min(max(bisect.bisect_right(xs, x) - 1, 0), n - 2)

    def phi(x):
        i = segment(x)
        slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
        return ys[i] + (x - xs[i]) * slope

    def dphi(x):
        i = segment(x)
        return (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])

    s_lo = (ys[1] - ys[0]) / (xs[1] - xs[0])
    s_hi = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    right = [abs(y) for x, y in zip(xs, ys) if x >= R]
    left = [abs(y) for x, y in zip(xs, ys) if x <= -R][::-1]
    monotone = (ys[-1] * s_hi >= 0 and ys[0] * s_lo <= 0 and ys[-1] > 0 > ys[0]
                and all(b >= a for seq in (right, left) for a, b in zip(seq, seq[1:])))
    return TargetFunction(name, phi, dphi, M=float(M), R=float(R), zeros=tuple(zeros), kind="table",
                          table=(xs, ys), tail_monotone=monotone)


def problem_from_dict(entry: dict) -> TargetFunction:
    name = entry.get("name")
    params = dict(entry.get("params") or {})
    try:
        if name == "tanh":
            return tanh_problem(**params)
        if name == "linear_sat":
            return linear_sat(**params)
        if name == "sine_drift":
            return sine_drift(**params)
        if name == "three_zeros":
            return three_zeros(**params)
        if name == "table":
            return table_function(**params)
    except TypeError as exc:
        raise InvalidConfig(f"bad parameters for problem {name!r}: {exc}") from None
    raise InvalidConfig(f"unknown problem {name!r}")


# -- assumption checking -----------------------------------------------------


def estimate_sup_deriv(f: TargetFunction, lo: float, hi: float, n_grid: int) -> float:
    if not lo < hi or n_grid < 2:
        raise InvalidConfig("need lo < hi and n_grid >= 2")
    return max(abs(f.deriv(x)) for x in np.linspace(lo, hi, n_grid))


@dataclass(frozen=True)
class AssumptionResult:
    assumption: str
    verdict: str
    lhs: float | None
    rhs: float | None
    margin: float | None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _json_num(v):
    if v is None:
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass(frozen=True)
class AssumptionReport:
    results: tuple[AssumptionResult, ...]
    window: tuple[float, float]
    window_verified: bool

    def __getitem__(self, name: str) -> AssumptionResult:
        for r in self.results:
            if r.assumption == name:
                return r
        raise KeyError(name)

    @property
    def gate_failures(self) -> list[str]:
        """Failed assumptions that block a run (A5 and A6)."""
        return [r.assumption for r in self.results if r.assumption in ("A5", "A6(a)", "A6(b)") and not r.passed]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {
            "assumptions": [
                {"assumption": r.assumption, "verdict": r.verdict, "lhs": _json_num(r.lhs),
                 "rhs": _json_num(r.rhs), "margin": _json_num(r.margin)}
                for r in self.results
            ],
            "window": list(self.window),
            "window_verified": self.window_verified,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def require(self, force: bool = False) -> None:
        """Raise :class:`InvalidConfig` on a failed A5/A6 gate unless forced."""
        failed = self.gate_failures
        if failed and not force:
            details = "; ".join(
                f"{self[a].assumption}: lhs={self[a].lhs!r} rhs={self[a].rhs!r}" for a in failed
            )
            hint = " (A5 requires gbar < 2/M)" if "A5" in failed else ""
            raise InvalidConfig(f"assumption check failed: {details}{hint}")


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def check_assumptions(f: TargetFunction, noise: NoiseModel, gbar: float,
                      window: float | None = None, n_probe: int = 2001) -> AssumptionReport:
    """Evaluate A1-A6 for ``(f, noise, gbar)``.

    The A6 infima over |x| >= R are probed on ``[R, R + window]`` on both
    sides (default window ``10 * gbar * M``) and rely on ``f.tail_monotone``
    beyond it.
    """
    if not gbar > 0:
        raise InvalidConfig("gbar must be positive")
    M, R, S = f.M, f.R, noise.variance
    W = 10.0 * gbar * M if window is None else float(window)
    out = []

    out.append(AssumptionResult("A1", "pass", None, None, None))
    out.append(AssumptionResult("A2", _verdict(math.isfinite(S)), S, None, None))
    L = noise.density_interval
    out.append(AssumptionResult("A3(a)", _verdict(L is not None and L > 0), L if L is not None else 0.0, 0.0,
                                L if L is not None else 0.0))
    atoms = 1.0 if noise.family == "zero" else noise.atom_total
    out.append(AssumptionResult("A3(b)", _verdict(atoms == 0.0), atoms, 0.0, -atoms))

    lo, hi = -R - W, R + W
    sup = estimate_sup_deriv(f, lo, hi, 10_001)
    out.append(AssumptionResult("A4", _verdict(sup <= M + DERIV_SLACK), sup, M, M - sup))

    out.append(AssumptionResult("A5", _verdict(gbar < 2.0 / M), gbar, 2.0 / M, 2.0 / M - gbar))

    probe = np.concatenate([np.linspace(R, R + W, n_probe), -np.linspace(R, R + W, n_probe)])
    phis = np.array([f.eval(x) for x in probe])
    sign_min = float(np.min(probe * phis))
    out.append(AssumptionResult("A6(a)", _verdict(sign_min > 0 and f.tail_monotone), sign_min, 0.0, sign_min))

    inf_sq = float(np.min(phis * phis))
    thr = gbar * M * S / (2.0 - gbar * M) if gbar * M < 2 else math.inf
    out.append(AssumptionResult("A6(b)", _verdict(inf_sq > thr and f.tail_monotone), inf_sq, thr, inf_sq - thr))

    return AssumptionReport(tuple(out), (R, R + W), f.tail_monotone)

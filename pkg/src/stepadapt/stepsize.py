"""Step-size rules as small immutable state machines, plus threshold quantities."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Union

from .errors import InvalidConfig


class Sign(enum.Enum):
    POSITIVE = 1
    NONPOSITIVE = 0


def sign_of(y_prev: float, y: float) -> Sign:
    # an exact zero product takes the shrink branch
    return Sign.POSITIVE if y_prev * y > 0 else Sign.NONPOSITIVE


@dataclass(frozen=True)
class PowerSchedule:
    """gamma(m) = c / (m + 1) ** alpha."""

    c: float
    alpha: float = 1.0

    def __post_init__(self):
        if not self.c > 0 or not self.alpha >= 0:
            raise InvalidConfig("schedule needs c > 0 and alpha >= 0")

    def __call__(self, m: int) -> float:
        return self.c / (m + 1) ** self.alpha


@dataclass(frozen=True)
class Multiplicative:
    u: float
    d: float
    gbar: float

    def __post_init__(self):
        if not self.u > 1:
            raise InvalidConfig(f"u must be > 1, got {self.u!r}")
        if not 0 < self.d < 1:
            raise InvalidConfig(f"d must be in (0,1), got {self.d!r}")
        if not self.gbar > 0:
            raise InvalidConfig(f"gbar must be > 0, got {self.gbar!r}")

    @property
    def max_step(self) -> float:
        return self.gbar


@dataclass(frozen=True)
class Kesten:
    schedule: Callable[[int], float]

    @property
    def max_step(self) -> float:
        return self.schedule(0)


@dataclass(frozen=True)
class Deterministic:
    schedule: Callable[[int], float]

    @property
    def max_step(self) -> float:
        return self.schedule(0)


@dataclass(frozen=True)
class Constant:
    g: float

    def __post_init__(self):
        if not self.g > 0:
            raise InvalidConfig(f"constant step must be > 0, got {self.g!r}")

    @property
    def max_step(self) -> float:
        return self.g


StepRuleConfig = Union[Multiplicative, Kesten, Deterministic, Constant]


@dataclass(frozen=True)
class StepRuleState:
    gamma: float
    s: int
    t: int


def initial_gamma0(rule: StepRuleConfig, gamma0: float | None) -> float:
    """Step size used by the very first update x_1 = x_0 - gamma_0 y_1."""
    if isinstance(rule, Multiplicative):
        return rule.gbar if gamma0 is None else gamma0
    if isinstance(rule, (Kesten, Deterministic)):
        return rule.schedule(0)
    return rule.g


def init_state(rule: StepRuleConfig, gamma0: float | None = None, gamma1: float | None = None) -> StepRuleState:
    """State at t = 1 with gamma_1 active. ``gamma1`` defaults to ``gamma0``."""
    if isinstance(rule, Multiplicative):
        g0 = rule.gbar if gamma0 is None else gamma0
        g1 = g0 if gamma1 is None else gamma1
        for name, g in (("gamma0", g0), ("gamma1", g1)):
            if not 0 < g <= rule.gbar:
                raise InvalidConfig(f"{name}={g!r} must lie in (0, gbar={rule.gbar!r}]")
        return StepRuleState(g1, 0, 1)
    if isinstance(rule, Kesten):
        return StepRuleState(rule.schedule(1), 1, 1)
    if isinstance(rule, Deterministic):
        return StepRuleState(rule.schedule(1), 0, 1)
    if isinstance(rule, Constant):
        return StepRuleState(rule.g, 0, 1)
    raise InvalidConfig(f"unknown rule {rule!r}")


def update(rule: StepRuleConfig, state: StepRuleState, sign: Sign) -> StepRuleState:
    """Advance one step given the sign of y_{t-1} * y_t."""
    t = state.t + 1
    if isinstance(rule, Multiplicative):
        if sign is Sign.POSITIVE:
            return StepRuleState(min(rule.u * state.gamma, rule.gbar), state.s, t)
        return StepRuleState(rule.d * state.gamma, state.s, t)
    if isinstance(rule, Kesten):
        s = state.s if sign is Sign.POSITIVE else state.s + 1
        return StepRuleState(rule.schedule(s), s, t)
    if isinstance(rule, Deterministic):
        return replace(state, gamma=rule.schedule(t), t=t)
    return replace(state, gamma=rule.g, t=t)


def _check_ud(u: float, d: float) -> None:
    if not (u > 1 and 0 < d < 1):
        raise InvalidConfig(f"need 0 < d < 1 < u, got u={u!r}, d={d!r}")


def kappa(u: float, d: float) -> float:
    """Sign-agreement probability at which the expected log-step drift vanishes."""
    _check_ud(u, d)
    return math.log(1.0 / d) / math.log(u / d)


def lambda_of(u: float, d: float) -> float:
    """ln u / (-ln d); satisfies 1 / (1 + lambda) = kappa(u, d)."""
    _check_ud(u, d)
    return math.log(u) / -math.log(d)


def predicted_drift(u: float, d: float, k: float) -> float:
    """Expected change of ln(gamma) per step when signs agree with probability k."""
    if not 0.0 <= k <= 1.0:
        raise InvalidConfig(f"k must be a probability, got {k!r}")
    return k * math.log(u) + (1.0 - k) * math.log(d)

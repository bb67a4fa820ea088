"""Measurement-noise families and sign-agreement (crossing) probabilities.

The crossing probability of two independent noisy readings taken at levels
``z1`` and ``z2`` is

    k(z1, z2) = P((z1 + xi1) (z2 + xi2) > 0)
              = P(xi > -z1) P(xi > -z2) + P(xi < -z1) P(xi < -z2).

Everything here is evaluated from closed-form CDFs; :func:`k_mc_oracle` is
an independent brute-force estimate used to cross-check them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .errors import InvalidConfig, UnsupportedQuery

CONTINUOUS_FAMILIES = ("gaussian", "uniform", "laplace")
FAMILIES = CONTINUOUS_FAMILIES + ("zero",)

DEFAULT_EPSILONS = (1e-1, 1e-2, 1e-3, 1e-4)

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean i.i.d. noise.

    ``family`` is one of ``gaussian`` (scale = sigma), ``uniform``
    (scale = half-width), ``laplace`` (scale = b) or ``zero`` (a point mass at
    0, used to run the noiseless recursion). A non-empty ``atoms`` tuple of
    ``(location, mass)`` pairs turns the model into a mixture whose continuous
    part carries the remaining weight ``1 - sum(mass)``.
    """

    family: str
    scale: float = 1.0
    atoms: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidConfig(f"unknown noise family {self.family!r}")
        if self.family != "zero" and not (self.scale > 0 and math.isfinite(self.scale)):
            raise InvalidConfig(f"{self.family} scale must be a positive finite number, got {self.scale!r}")
        atoms = tuple((float(loc), float(m)) for loc, m in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if atoms:
            if self.family == "zero":
                raise InvalidConfig("atoms cannot be mixed into the zero family")
            if any(not (0.0 < m < 1.0) for _, m in atoms):
                raise InvalidConfig("atom masses must lie in (0, 1)")
            if sum(m for _, m in atoms) >= 1.0:
                raise InvalidConfig("total atom mass must be < 1")
            # continuous parts are symmetric, so only the atoms carry a first moment
            first = sum(loc * m for loc, m in atoms)
            if abs(first) > 1e-12 * max(1.0, max(abs(loc) for loc, _ in atoms)):
                raise InvalidConfig(f"atom mixture must have zero mean, got first moment {first!r}")

    # -- descriptive properties -------------------------------------------

    @property
    def kind(self) -> str:
        return "atom_mixture" if self.atoms else self.family

    @property
    def atom_total(self) -> float:
        return float(sum(m for _, m in self.atoms))

    @property
    def has_atoms(self) -> bool:
        return bool(self.atoms) or self.family == "zero"

    @property
    def sign_symmetric(self) -> bool:
        if self.family == "zero":
            return True
        if not self.atoms:
            return True
        return math.isclose(
            sum(m for loc, m in self.atoms if loc > 0),
            sum(m for loc, m in self.atoms if loc < 0),
            rel_tol=0.0,
            abs_tol=1e-15,
        )

    @property
    def base_variance(self) -> float:
        if self.family == "gaussian":
            return self.scale**2
        if self.family == "uniform":
            return self.scale**2 / 3.0
        if self.family == "laplace":
            return 2.0 * self.scale**2
        return 0.0

    @property
    def variance(self) -> float:
        """Second moment S of the configured distribution."""
        w = 1.0 - self.atom_total
        return w * self.base_variance + sum(m * loc * loc for loc, m in self.atoms)

    @property
    def density_interval(self) -> float | None:
        """Half-width L such that every subinterval of [-L, L] has positive mass."""
        if self.family == "zero":
            return None
        if self.family == "uniform":
            return self.scale
        return math.inf

    @property
    def sigma_scale(self) -> float:
        """Standard deviation, or 1 for the degenerate zero family."""
        v = self.variance
        return math.sqrt(v) if v > 0 else 1.0

    def to_dict(self) -> dict:
        out = {"family": self.family, "scale": self.scale}
        if self.atoms:
            out["atoms"] = [list(a) for a in self.atoms]
        return out


def gaussian(sigma: float) -> NoiseModel:
    return NoiseModel("gaussian", sigma)


def uniform(halfwidth: float) -> NoiseModel:
    return NoiseModel("uniform", halfwidth)


def laplace(scale: float) -> NoiseModel:
    return NoiseModel("laplace", scale)


def zero() -> NoiseModel:
    return NoiseModel("zero", 0.0)


def atom_mixture(base: NoiseModel, atoms: Sequence[tuple[float, float]]) -> NoiseModel:
    if base.atoms or base.family == "zero":
        raise InvalidConfig("atom mixture base must be a continuous family")
    return NoiseModel(base.family, base.scale, tuple(atoms))


# -- sampling ----------------------------------------------------------------


def _sample_base(model: NoiseModel, n: int, rng: np.random.Generator) -> np.ndarray:
    if model.family == "gaussian":
        return rng.normal(0.0, model.scale, n)
    if model.family == "uniform":
        return rng.uniform(-model.scale, model.scale, n)
    if model.family == "laplace":
        return rng.laplace(0.0, model.scale, n)
    if model.family == "zero":
        return np.zeros(n)
    raise UnsupportedQuery(f"no sampler for family {model.family!r}")


def sample_array(model: NoiseModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. errors. Consumes ``rng`` in a fixed order."""
    if not model.atoms:
        return _sample_base(model, n, rng)
    pick = rng.random(n)
    out = _sample_base(model, n, rng)
    lo = 0.0
    for loc, m in model.atoms:
        out[(pick >= lo) & (pick < lo + m)] = loc
        lo += m
    return out


def sample(model: NoiseModel, rng: np.random.Generator) -> float:
    return float(sample_array(model, 1, rng)[0])


# -- distribution functions --------------------------------------------------


def _base_cdf(model: NoiseModel, x: float) -> float:
    s = model.scale
    if model.family == "gaussian":
        return 0.5 * math.erfc(-x / (s * _SQRT2))
    if model.family == "uniform":
        return min(1.0, max(0.0, (x + s) / (2.0 * s)))
    if model.family == "laplace":
        return 0.5 * math.exp(x / s) if x < 0 else 1.0 - 0.5 * math.exp(-x / s)
    raise UnsupportedQuery(f"no CDF for family {model.family!r}")


def _base_sf(model: NoiseModel, x: float) -> float:
    s = model.scale
    if model.family == "gaussian":
        return 0.5 * math.erfc(x / (s * _SQRT2))
    if model.family == "uniform":
        return min(1.0, max(0.0, (s - x) / (2.0 * s)))
    if model.family == "laplace":
        return 0.5 * math.exp(-x / s) if x > 0 else 1.0 - 0.5 * math.exp(x / s)
    raise UnsupportedQuery(f"no CDF for family {model.family!r}")


def cdf(model: NoiseModel, x: float) -> float:
    """P(xi <= x)."""
    if model.family == "zero":
        return 1.0 if x >= 0 else 0.0
    w = 1.0 - model.atom_total
    return w * _base_cdf(model, x) + sum(m for loc, m in model.atoms if loc <= x)


def cdf_left(model: NoiseModel, x: float) -> float:
    """P(xi < x)."""
    if model.family == "zero":
        return 1.0 if x > 0 else 0.0
    w = 1.0 - model.atom_total
    return w * _base_cdf(model, x) + sum(m for loc, m in model.atoms if loc < x)


def sf(model: NoiseModel, x: float) -> float:
    """P(xi > x), computed directly to avoid cancellation in the tails."""
    if model.family == "zero":
        return 1.0 if x < 0 else 0.0
    w = 1.0 - model.atom_total
    return w * _base_sf(model, x) + sum(m for loc, m in model.atoms if loc > x)


def atom_mass(model: NoiseModel, x: float) -> float:
    if model.family == "zero":
        return 1.0 if x == 0 else 0.0
    return sum(m for loc, m in model.atoms if loc == x)


# -- crossing probabilities --------------------------------------------------


def k_pair(model: NoiseModel, z1: float, z2: float) -> float:
    """P((z1 + xi1)(z2 + xi2) > 0) for independent xi1, xi2."""
    return sf(model, -z1) * sf(model, -z2) + cdf_left(model, -z1) * cdf_left(model, -z2)


def k_diag(model: NoiseModel, z: float) -> float:
    return k_pair(model, z, z)


class KLimit(NamedTuple):
    """Limit value of k_plus / k_minus with the per-epsilon trace it came from."""

    value: float
    epsilons: tuple[float, ...]
    trace: tuple[float, ...]


def _neighbourhood_values(model: NoiseModel, z: float, eps: float) -> list[float]:
    # 3x3 probe of the eps-box; the centre matters when an atom sits at -z
    pts = (z - eps, z, z + eps)
    return [k_pair(model, a, b) for a in pts for b in pts]


def _k_limit(model, z, epsilons, reduce) -> KLimit:
    if epsilons is None:
        epsilons = tuple(e * model.sigma_scale for e in DEFAULT_EPSILONS)
    epsilons = tuple(float(e) for e in epsilons)
    if not epsilons or any(e <= 0 for e in epsilons):
        raise InvalidConfig("epsilons must be positive")
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise InvalidConfig("epsilons must be strictly decreasing")
    trace = tuple(reduce(_neighbourhood_values(model, z, e)) for e in epsilons)
    return KLimit(trace[-1], epsilons, trace)


def k_plus(model: NoiseModel, z: float, epsilons: Sequence[float] | None = None) -> KLimit:
    """Upper limit of k over shrinking level neighbourhoods of ``z``."""
    return _k_limit(model, z, epsilons, max)


def k_minus(model: NoiseModel, z: float, epsilons: Sequence[float] | None = None) -> KLimit:
    """Lower limit of k over shrinking level neighbourhoods of ``z``."""
    return _k_limit(model, z, epsilons, min)


def k_mc_oracle(model: NoiseModel, z1: float, z2: float, n: int, rng: np.random.Generator) -> float:
    """Monte Carlo estimate of :func:`k_pair` from ``n`` independent pairs."""
    if n < 1:
        raise InvalidConfig("n must be >= 1")
    xi1 = sample_array(model, n, rng)
    xi2 = sample_array(model, n, rng)
    return float(np.count_nonzero((z1 + xi1) * (z2 + xi2) > 0)) / n


def default_z_grid(model: NoiseModel) -> np.ndarray:
    """1601 points on [-8 sigma, 8 sigma], with z = 0 represented exactly."""
    return model.sigma_scale * (np.arange(-800, 801) / 100.0)


def grid_infimum(fn: Callable[[float], float], z_grid: Sequence[float]) -> tuple[float, float]:
    """Grid minimum of ``fn`` refined by golden-section search around the argmin."""
    grid = np.asarray(z_grid, dtype=float)
    if grid.size == 0:
        raise InvalidConfig("z_grid must be non-empty")
    vals = np.array([fn(z) for z in grid])
    i = int(np.argmin(vals))
    best_v, best_z = float(vals[i]), float(grid[i])
    if 0 < i < grid.size - 1 and vals[i] < vals[i - 1] and vals[i] < vals[i + 1]:
        res = optimize.minimize_scalar(
            fn, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden", options={"xtol": 1e-10}
        )
        if res.fun < best_v:
            best_v, best_z = float(res.fun), float(res.x)
    return best_v, best_z


def inf_k_minus(model: NoiseModel, z_grid: Sequence[float] | None = None) -> tuple[float, float]:
    """(inf_z k_minus(z), argmin) over ``z_grid`` (default :func:`default_z_grid`)."""
    if z_grid is None:
        z_grid = default_z_grid(model)
    return grid_infimum(lambda z: k_minus(model, z).value, z_grid)


def inf_k(model: NoiseModel, z_grid: Sequence[float] | None = None) -> tuple[float, float]:
    """Infimum of the limiting lower crossing probability.

    Atom-free models have a continuous k, so the limit equals :func:`k_diag`
    exactly and no epsilon probe is needed.
    """
    if z_grid is None:
        z_grid = default_z_grid(model)
    if model.has_atoms:
        return inf_k_minus(model, z_grid)
    return grid_infimum(lambda z: k_diag(model, z), z_grid)


def k_upper_limit(model: NoiseModel, z: float) -> float:
    """k_plus(z), exact (= k_diag) for atom-free models."""
    return k_plus(model, z).value if model.has_atoms else k_diag(model, z)


def k_lower_limit(model: NoiseModel, z: float) -> float:
    """k_minus(z), exact (= k_diag) for atom-free models."""
    return k_minus(model, z).value if model.has_atoms else k_diag(model, z)


def noise_from_dict(entry: dict) -> NoiseModel:
    """Build a model from ``{"family": ..., "params": {...}}`` config entries."""
    family = entry.get("family")
    params = dict(entry.get("params") or {})
    atoms = params.pop("atoms", None)
    if family == "gaussian":
        model = gaussian(float(params.pop("sigma")))
    elif family == "uniform":
        model = uniform(float(params.pop("halfwidth")))
    elif family == "laplace":
        model = laplace(float(params.pop("scale")))
    elif family == "zero":
        model = zero()
    elif family == "atom_mixture":
        base = noise_from_dict({"family": params.pop("base"), "params": params})
        params = {}
        model = atom_mixture(base, [tuple(a) for a in atoms or ()])
        atoms = None
    else:
        raise InvalidConfig(f"unknown noise family {family!r}")
    if atoms is not None:
        raise InvalidConfig("atoms are only valid for family atom_mixture")
    if params:
        raise InvalidConfig(f"unknown noise parameters: {sorted(params)}")
    return model

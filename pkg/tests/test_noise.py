import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepadapt import noise
from stepadapt.errors import InvalidConfig
from stepadapt.rng import make_rng

# closed forms evaluated with mpmath at 30 digits
K_GAUSS_Z1 = 0.73303247133719613
K_LAPLACE_Z1 = 0.69978820044686402

SYMMETRIC = [noise.gaussian(1.0), noise.uniform(1.0), noise.laplace(1.0)]


def mixture():
    return noise.atom_mixture(noise.uniform(1.0), [(0.0, 0.2)])


def symmetric_atoms():
    return noise.atom_mixture(noise.uniform(1.0), [(-0.5, 0.1), (0.5, 0.1)])


class TestSample:
    def test_gaussian_mean(self):
        xs = noise.sample_array(noise.gaussian(1.0), 10**6, make_rng(1))
        assert abs(xs.mean()) < 4 / math.sqrt(10**6)

    def test_uniform_support(self):
        xs = noise.sample_array(noise.uniform(1.0), 10**5, make_rng(2))
        assert xs.min() >= -1 and xs.max() <= 1

    def test_gaussian_variance(self):
        model = noise.gaussian(0.1)
        xs = noise.sample_array(model, 10**6, make_rng(3))
        assert model.variance == pytest.approx(0.01)
        assert xs.var() == pytest.approx(0.01, rel=0.01)

    def test_deterministic_stream(self):
        a = noise.sample_array(noise.laplace(2.0), 100, make_rng(9))
        b = noise.sample_array(noise.laplace(2.0), 100, make_rng(9))
        assert np.array_equal(a, b)
        assert noise.sample(noise.laplace(2.0), make_rng(9)) == a[0]

    def test_mixture_atom_frequency(self):
        xs = noise.sample_array(mixture(), 10**5, make_rng(4))
        frac = np.mean(xs == 0.0)
        assert frac == pytest.approx(0.2, abs=4 * math.sqrt(0.2 * 0.8 / 1e5))

    @pytest.mark.parametrize("model", SYMMETRIC + [symmetric_atoms()], ids=lambda m: m.kind)
    def test_variance_matches_empirical(self, model):
        xs = noise.sample_array(model, 10**6, make_rng(5))
        assert xs.var() == pytest.approx(model.variance, rel=0.01)


class TestConstruction:
    def test_nonzero_mean_mixture_rejected(self):
        with pytest.raises(InvalidConfig):
            noise.atom_mixture(noise.gaussian(1.0), [(0.3, 0.1)])

    @pytest.mark.parametrize("atoms", [[(0.0, 1.0)], [(0.0, 0.6), (0.0, 0.5)], [(0.0, 0.0)]])
    def test_bad_masses_rejected(self, atoms):
        with pytest.raises(InvalidConfig):
            noise.atom_mixture(noise.gaussian(1.0), atoms)

    def test_bad_scale(self):
        with pytest.raises(InvalidConfig):
            noise.gaussian(0.0)

    def test_density_interval(self):
        assert noise.uniform(2.0).density_interval == 2.0
        assert noise.gaussian(1.0).density_interval == math.inf
        assert noise.zero().density_interval is None

    def test_from_dict(self):
        m = noise.noise_from_dict({"family": "atom_mixture",
                                   "params": {"base": "uniform", "halfwidth": 1.0, "atoms": [[0.0, 0.2]]}})
        assert m == mixture()
        with pytest.raises(InvalidConfig):
            noise.noise_from_dict({"family": "gaussian", "params": {"sigma": 1.0, "bogus": 2}})


class TestCdf:
    def test_gaussian_half(self):
        assert noise.cdf(noise.gaussian(1.0), 0.0) == 0.5

    def test_uniform_linear(self):
        assert noise.cdf(noise.uniform(2.0), 1.0) == 0.75

    def test_atom_jump(self):
        m = mixture()
        assert noise.cdf(m, 0.0) - noise.cdf_left(m, 0.0) == pytest.approx(0.2)
        assert noise.atom_mass(m, 0.0) == 0.2

    @pytest.mark.parametrize("model", SYMMETRIC, ids=lambda m: m.kind)
    def test_sign_symmetry(self, model):
        assert noise.sf(model, 0.0) == pytest.approx(noise.cdf_left(model, 0.0))
        for x in np.linspace(-3, 3, 13):
            assert noise.cdf(model, x) + noise.sf(model, x) == pytest.approx(1.0)
            assert noise.cdf(model, x) == pytest.approx(1 - noise.cdf(model, -x))

    def test_zero_family(self):
        z = noise.zero()
        assert noise.cdf(z, 0.0) == 1.0 and noise.cdf_left(z, 0.0) == 0.0
        assert z.variance == 0.0


class TestKPair:
    def test_gaussian_origin_is_half(self):
        assert noise.k_pair(noise.gaussian(1.0), 0.0, 0.0) == 0.5

    @pytest.mark.parametrize("model", SYMMETRIC, ids=lambda m: m.kind)
    def test_far_levels_agree(self, model):
        s = model.sigma_scale
        assert noise.k_pair(model, 10 * s, 10 * s) > 1 - 1e-4

    def test_gaussian_z1_closed_form(self):
        assert noise.k_pair(noise.gaussian(1.0), 1.0, 1.0) == pytest.approx(K_GAUSS_Z1, abs=1e-12)

    def test_gaussian_z1_vs_mc(self):
        est = noise.k_mc_oracle(noise.gaussian(1.0), 1.0, 1.0, 10**6, make_rng(11))
        assert abs(est - noise.k_pair(noise.gaussian(1.0), 1.0, 1.0)) < 0.002

    def test_laplace_vs_mc(self):
        model = noise.laplace(1.0)
        assert noise.k_diag(model, 1.0) == pytest.approx(K_LAPLACE_Z1, abs=1e-12)
        est = noise.k_mc_oracle(model, 1.0, 1.0, 10**6, make_rng(12))
        assert abs(est - noise.k_diag(model, 1.0)) < 0.002

    def test_diag_even(self):
        g = noise.gaussian(1.0)
        for z in (0.1, 0.7, 2.5):
            assert noise.k_diag(g, z) == noise.k_diag(g, -z)

    @pytest.mark.parametrize("model", SYMMETRIC, ids=lambda m: m.kind)
    def test_diag_nondecreasing_in_abs_z(self, model):
        zs = np.linspace(0, 6 * model.sigma_scale, 300)
        vals = [noise.k_diag(model, z) for z in zs]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_gaussian_limit(self):
        assert noise.k_diag(noise.gaussian(0.3), 3.0) >= 1 - 1e-4

    @settings(max_examples=200, deadline=None)
    @given(z1=st.floats(-5, 5), z2=st.floats(-5, 5), which=st.integers(0, 4))
    def test_probability_range(self, z1, z2, which):
        model = (SYMMETRIC + [mixture(), symmetric_atoms()])[which]
        k = noise.k_pair(model, z1, z2)
        assert 0.0 <= k <= 1.0

    @settings(max_examples=200, deadline=None)
    @given(z=st.floats(-5, 5), which=st.integers(0, 2))
    def test_diag_at_least_half(self, z, which):
        assert noise.k_diag(SYMMETRIC[which], z) >= 0.5 - 1e-15


class TestMonteCarloOracle:
    def test_origin(self):
        est = noise.k_mc_oracle(noise.gaussian(1.0), 0.0, 0.0, 10**6, make_rng(13))
        assert abs(est - 0.5) < 0.002

    def test_degenerate(self):
        assert noise.k_mc_oracle(noise.zero(), 1.0, 1.0, 1000, make_rng(0)) == 1.0

    def test_n_positive(self):
        with pytest.raises(InvalidConfig):
            noise.k_mc_oracle(noise.zero(), 1.0, 1.0, 0, make_rng(0))

    @pytest.mark.parametrize("model", [noise.gaussian(0.5), mixture()], ids=lambda m: m.kind)
    def test_grid_within_three_se(self, model):
        n = 200_000
        rng = make_rng(21)
        for z1, z2 in zip(np.linspace(-1, 1, 20), np.linspace(0.8, -0.3, 20)):
            p = noise.k_pair(model, z1, z2)
            est = noise.k_mc_oracle(model, z1, z2, n, rng)
            assert abs(est - p) <= 3 * math.sqrt(p * (1 - p) / n) + 1e-12


class TestKLimits:
    @pytest.mark.parametrize("model", SYMMETRIC, ids=lambda m: m.kind)
    def test_continuous_limits_coincide(self, model):
        # k_pair is Lipschitz in each level with constant <= max density,
        # so an eps-box moves it by at most 2 * eps * pdf_max
        pdf_max = {"gaussian": 1 / math.sqrt(2 * math.pi), "uniform": 0.5, "laplace": 0.5}[model.family]
        for z in np.linspace(-2, 2, 9):
            kd = noise.k_diag(model, z)
            for lim in (noise.k_plus(model, z), noise.k_minus(model, z)):
                gaps = [abs(v - kd) for v in lim.trace]
                for eps, gap in zip(lim.epsilons, gaps):
                    assert gap <= 2 * eps * pdf_max + 1e-15
                assert gaps[-1] <= gaps[0]

    def test_trace_attached(self):
        r = noise.k_plus(noise.gaussian(1.0), 0.3)
        assert len(r.trace) == len(r.epsilons) == 4
        assert r.value == r.trace[-1]

    def test_atom_splits_limits(self):
        m = mixture()
        assert noise.k_plus(m, 0.0).value > noise.k_minus(m, 0.0).value

    def test_atom_at_origin_values(self):
        # derived by hand: atom of mass w at 0 over a symmetric continuous part
        m = mixture()
        w = 0.2
        assert noise.k_plus(m, 0.0).value == pytest.approx(0.5 + w * w / 2, abs=1e-4)
        assert noise.k_minus(m, 0.0).value == pytest.approx((1 - w) ** 2 / 2, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(z=st.floats(-3, 3), which=st.integers(0, 4))
    def test_ordering_and_half(self, z, which):
        model = (SYMMETRIC + [mixture(), symmetric_atoms()])[which]
        kp, km = noise.k_plus(model, z), noise.k_minus(model, z)
        kd = noise.k_diag(model, z)
        assert kp.value >= 0.5
        for a, b in zip(kp.trace, km.trace):
            assert a >= kd >= b

    def test_epsilons_must_decrease(self):
        with pytest.raises(InvalidConfig):
            noise.k_plus(noise.gaussian(1.0), 0.0, [1e-3, 1e-2])


class TestInfimum:
    def test_gaussian(self):
        value, argmin = noise.inf_k_minus(noise.gaussian(1.0))
        assert value == pytest.approx(0.5, abs=1e-8)
        assert argmin == pytest.approx(0.0, abs=1e-3)

    def test_explicit_grid(self):
        grid = np.arange(-50, 51) / 10.0
        value, argmin = noise.inf_k_minus(noise.gaussian(1.0), grid)
        assert value == pytest.approx(0.5, abs=1e-8) and abs(argmin) < 1e-3

    def test_uniform(self):
        value, argmin = noise.inf_k_minus(noise.uniform(1.0))
        assert value == pytest.approx(0.5, abs=1e-8)
        assert argmin == pytest.approx(0.0, abs=1e-3)

    def test_exact_for_continuous(self):
        assert noise.inf_k(noise.gaussian(0.1)) == (0.5, 0.0)

    def test_symmetric_atoms_at_least_half(self):
        # finite-eps probe at z = 0 sits O(eps^2) below the limit
        value, _ = noise.inf_k_minus(symmetric_atoms())
        assert value >= 0.5 - 1e-8

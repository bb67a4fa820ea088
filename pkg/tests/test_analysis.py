import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepadapt import analysis, noise, problem
from stepadapt.engine import SimConfig
from stepadapt.errors import EmptySet, InsufficientData, InvalidConfig
from stepadapt.stepsize import Multiplicative, kappa, lambda_of

TANH = problem.tanh_problem(1.0)
G = noise.gaussian(0.1)
# root of k_diag(z) = kappa(1.1, 0.8) for sigma = 0.1, solved with mpmath
BOUNDARY_Z = 0.09031926465254578
BOUNDARY_X = 0.09056606900590634  # atanh(BOUNDARY_Z)


def base(n_horizon=20_000):
    return SimConfig(TANH, G, Multiplicative(1.05, 0.9, 0.5), x0=2.0, horizon=n_horizon, seed=0)


class TestClassification:
    @pytest.mark.parametrize("u,d,cls", [(1.1, 0.8, analysis.CONVERGE), (1.2, 0.9, analysis.DIVERGE),
                                         (2.0, 0.5, analysis.INDETERMINATE)])
    def test_examples(self, u, d, cls):
        rep = analysis.theoretical_classification(u, d, noise.gaussian(1.0))
        assert rep.theoretical_class == cls
        assert rep.k_plus_at_0 == 0.5 and rep.inf_k_minus == 0.5

    def test_report_fields(self):
        rep = analysis.theoretical_classification(1.2, 0.9, G)
        assert rep.kappa == pytest.approx(0.3662, abs=1e-4)
        assert 1 / (1 + rep.lambda_) == pytest.approx(rep.kappa, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(u=st.floats(1.01, 3.0), d=st.floats(0.05, 0.99), which=st.integers(0, 2))
    def test_matches_sign_of_one_minus_ud(self, u, d, which):
        model = [noise.gaussian(1.0), noise.uniform(0.5), noise.laplace(2.0)][which]
        cls = analysis.theoretical_classification(u, d, model).theoretical_class
        if abs(u * d - 1) > 1e-12:
            assert cls == (analysis.CONVERGE if u * d < 1 else analysis.DIVERGE)

    def test_atoms_split_thresholds(self):
        m = noise.atom_mixture(noise.uniform(1.0), [(0.0, 0.2)])
        rep = analysis.theoretical_classification(1.1, 0.8, m)
        assert rep.k_plus_at_0 == pytest.approx(0.52, abs=1e-4)
        assert rep.inf_k_minus < 0.5


class TestMembership:
    def test_zero_is_member(self):
        ok, k, thr = analysis.limit_set_membership(0.0, TANH, G, 1.1, 0.8)
        assert ok and k == 0.5 and thr == pytest.approx(kappa(1.1, 0.8))

    def test_boundary_by_bisection(self):
        thr = kappa(1.1, 0.8)
        z = analysis.boundary_abs_phi(G, thr, xtol=1e-12)
        assert z == pytest.approx(BOUNDARY_Z, abs=1e-9)
        assert math.atanh(z) == pytest.approx(BOUNDARY_X, abs=1e-9)
        assert analysis.limit_set_membership(BOUNDARY_X - 1e-6, TANH, G, 1.1, 0.8)[0]
        assert not analysis.limit_set_membership(BOUNDARY_X + 1e-6, TANH, G, 1.1, 0.8)[0]

    def test_boundary_inclusive(self):
        # a table function hitting the boundary value exactly at x = 1
        f = problem.table_function([-2.0, 0.0, 2.0], [-2 * BOUNDARY_Z, 0.0, 2 * BOUNDARY_Z], 1.0, 1.0, [0.0])
        _, k, thr = analysis.limit_set_membership(1.0, f, G, 1.1, 0.8)
        ok, _, _ = analysis.limit_set_membership(1.0, f, G, 1.1, 0.8, tol=abs(k - thr))
        assert ok

    @settings(max_examples=50, deadline=None)
    @given(x=st.floats(-1, 1), u=st.floats(1.01, 2.0), d=st.floats(0.1, 0.99))
    def test_lambda_and_kappa_agree(self, x, u, d):
        ok, k, thr = analysis.limit_set_membership(x, TANH, G, u, d)
        assert ok == (noise.k_diag(G, math.tanh(x)) <= 1 / (1 + lambda_of(u, d)))

    def test_boundary_edge_cases(self):
        assert analysis.boundary_abs_phi(G, 0.4) == 0.0
        assert analysis.boundary_abs_phi(G, 1.5) == math.inf


class TestRate:
    def test_exact_geometric(self):
        ts = np.arange(200)
        fit = analysis.geometric_rate(SimpleNamespace(ts=ts, gammas=0.5 * 0.9 ** ts))
        assert abs(fit.slope - math.log(0.9)) < 1e-12
        assert fit.r2 == pytest.approx(1.0) and fit.window == (0, 199)

    def test_two_cycle(self):
        n = 2000
        steps = np.where(np.arange(n) % 2 == 0, math.log(1.2), math.log(0.7))
        lg = np.concatenate([[0.0], np.cumsum(steps)])
        fit = analysis.geometric_rate(SimpleNamespace(ts=np.arange(n + 1), gammas=np.exp(lg)))
        # endpoint parity biases the slope by O(1/N^2)
        assert fit.slope == pytest.approx((math.log(1.2) + math.log(0.7)) / 2, abs=10 / n**2)

    def test_window(self):
        ts = np.arange(100)
        gs = np.where(ts < 50, 1.0, 0.5 ** (ts - 49))
        fit = analysis.geometric_rate(SimpleNamespace(ts=ts, gammas=gs), (60, 99))
        assert fit.slope == pytest.approx(math.log(0.5), abs=1e-12)

    def test_insufficient(self):
        ts = np.arange(100)
        traj = SimpleNamespace(ts=ts, gammas=np.ones(100))
        with pytest.raises(InsufficientData):
            analysis.geometric_rate(traj, (0, 5))
        with pytest.raises(InsufficientData):
            analysis.geometric_rate(traj, (50, 150))
        with pytest.raises(InsufficientData):
            analysis.geometric_rate(SimpleNamespace(ts=ts, gammas=np.zeros(100)))


class TestHausdorff:
    def test_examples(self):
        assert analysis.hausdorff_upper([0.1, 0.5], [0.1, 0.5]) == 0.0
        assert analysis.hausdorff_upper([0.0, 1.0], [0.0]) == 1.0
        assert analysis.hausdorff_upper([0.0], [0.0, 1.0]) == 0.0

    def test_empty(self):
        with pytest.raises(EmptySet):
            analysis.hausdorff_upper([], [0.0])

    def test_large_chunks(self):
        a = np.linspace(0, 1, 3001)
        assert analysis.hausdorff_upper(a, [0.0, 1.0]) == pytest.approx(0.5)

    def test_grid_vs_bisection(self):
        lam = 0.9
        step = 1e-3
        grid = np.arange(-1.0, 1.0 + step / 2, step)
        sample = analysis.limit_set_sample(TANH, G, lam, grid)
        dist = analysis.hausdorff_upper(sample, TANH.zeros)
        exact = math.atanh(analysis.boundary_abs_phi(G, 1 / (1 + lam)))
        assert exact - step <= dist <= exact + 1e-12

    def test_decreasing_family(self):
        grid = np.linspace(-1, 1, 801)
        lams = [0.3, 0.5, 0.7, 0.9, 0.99]
        samples = [set(analysis.limit_set_sample(TANH, G, lam, grid)) for lam in lams]
        for small, large in zip(samples, samples[1:]):
            assert large <= small
        dists = [analysis.hausdorff_upper(list(s), [0.0]) for s in samples]
        assert all(b <= a for a, b in zip(dists, dists[1:]))


class TestSweeps:
    def test_empty_grid(self):
        assert analysis.phase_sweep([], [0.9], base(), 5) == []

    def test_indeterminate_cell_reports_empirics(self):
        cell = analysis.phase_cell(2.0, 0.5, base(2000), 4)
        assert cell.theoretical_class == analysis.INDETERMINATE
        assert 0.0 <= cell.empirical_conv_fraction <= 1.0 and cell.n_seeds == 4
        assert cell.ud == 1.0

    def test_cell_order(self):
        cells = analysis.phase_sweep([1.05, 1.1], [0.8, 0.9], base(2000), 2)
        assert [(c.u, c.d) for c in cells] == [(1.05, 0.8), (1.05, 0.9), (1.1, 0.8), (1.1, 0.9)]

    def test_precision_validation(self):
        with pytest.raises(InvalidConfig):
            analysis.precision_vs_rate(1.1, [0.8, 0.7], base(), 2)
        with pytest.raises(InvalidConfig):
            analysis.precision_vs_rate(1.1, [0.5, 0.95], base(), 2)

    def test_precision_single_row(self):
        rows = analysis.precision_vs_rate(1.1, [0.8], base(), 3)
        assert len(rows) == 1
        assert rows[0].boundary_abs_phi == pytest.approx(BOUNDARY_Z, abs=1e-9)
        assert rows[0].lambda_ == pytest.approx(lambda_of(1.1, 0.8))

    @pytest.mark.slow
    def test_five_by_five(self):
        us = np.linspace(1.02, 1.3, 5)
        ds = np.linspace(0.7, 0.98, 5)
        cells = analysis.phase_sweep(us, ds, base(), 100, threads=4)
        for c in cells:
            if c.ud <= 0.95:
                assert c.empirical_conv_fraction >= 0.9, c
            if c.ud >= 1.05:
                assert c.empirical_conv_fraction <= 0.1, c


def test_inversions():
    assert analysis.count_inversions([1, 2, 2, 3], True) == 0
    assert analysis.count_inversions([1, 3, 2, 4], True) == 1
    assert analysis.count_inversions([3, 2, 2.5, 1], False) == 1

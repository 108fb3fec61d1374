import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from voxrag.errors import DegenerateVariance, LengthMismatch
from voxrag.evaluation import (paired_stats, pearson_r, regularized_incomplete_beta,
                               sample_std, student_t_p_two_tailed)


class TestIncompleteBeta:
    def test_against_scipy(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a = float(rng.uniform(0.1, 60))
            b = float(rng.uniform(0.1, 60))
            x = float(rng.uniform(0, 1))
            ours = regularized_incomplete_beta(a, b, x)
            ref = float(scipy.special.betainc(a, b, x))
            assert ours == pytest.approx(ref, rel=1e-10, abs=1e-12)

    def test_complement_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a, b = float(rng.uniform(0.5, 30)), float(rng.uniform(0.5, 30))
            x = float(rng.uniform(0, 1))
            total = (regularized_incomplete_beta(a, b, x)
                     + regularized_incomplete_beta(b, a, 1 - x))
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_endpoints(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0


class TestStudentT:
    def test_t_table_dof_49(self):
        # published two-tailed 5% critical value for 49 degrees of freedom
        assert student_t_p_two_tailed(2.0096, 49) == pytest.approx(0.05, abs=0.0005)

    @pytest.mark.parametrize("t,dof,p", [
        (12.706, 1, 0.05),
        (2.228, 10, 0.05),
        (2.042, 30, 0.05),
        (4.032, 5, 0.01),
        (2.845, 20, 0.01),
    ])
    def test_t_table_rows(self, t, dof, p):
        assert student_t_p_two_tailed(t, dof) == pytest.approx(p, abs=0.0005)

    def test_against_scipy_sf(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            t = float(rng.uniform(-8, 8))
            dof = int(rng.integers(1, 200))
            ours = student_t_p_two_tailed(t, dof)
            ref = float(2 * scipy.stats.t.sf(abs(t), dof))
            assert ours == pytest.approx(ref, rel=1e-10, abs=1e-14)

    def test_zero_t(self):
        assert student_t_p_two_tailed(0.0, 10) == 1.0


class TestPairedStats:
    def test_equal_arrays_degenerate(self):
        a = [1.0, 2.0, 3.0, 4.0]
        with pytest.raises(DegenerateVariance):
            paired_stats(a, list(a))

    def test_symmetric_diffs_give_t_zero_p_one(self):
        a = [1.0, 0.0, 1.0, 0.0]
        b = [0.0, 1.0, 0.0, 1.0]
        ps = paired_stats(a, b)
        assert ps.t == 0.0
        assert ps.p_value == 1.0
        assert ps.d_z == 0.0

    def test_identity_t_equals_dz_root_n(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(2, 200))
            a = rng.standard_normal(n).tolist()
            b = (rng.standard_normal(n) + rng.uniform(-1, 1)).tolist()
            try:
                ps = paired_stats(a, b)
            except DegenerateVariance:
                continue
            assert abs(ps.t - ps.d_z * math.sqrt(n)) <= 1e-9

    def test_against_scipy_ttest_rel(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            n = int(rng.integers(3, 100))
            a = rng.standard_normal(n)
            b = rng.standard_normal(n) + 0.3
            ps = paired_stats(a.tolist(), b.tolist())
            ref = scipy.stats.ttest_rel(a, b)
            assert ps.t == pytest.approx(float(ref.statistic), rel=1e-10)
            assert ps.p_value == pytest.approx(float(ref.pvalue), rel=1e-9, abs=1e-14)

    def test_large_effect_at_n50_is_significant(self):
        # a 0.67 standardized effect at n = 50 implies t ~= 4.74 and p < 0.01
        t = 0.67 * math.sqrt(50)
        assert t == pytest.approx(4.74, abs=0.01)
        assert student_t_p_two_tailed(t, 49) < 0.01

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            paired_stats([1.0, 2.0], [1.0])

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            paired_stats([1.0], [0.0])


class TestEffectSizeReconstruction:
    def test_paired_sd_from_marginals_and_correlation(self):
        # sd(diff) from the two stds and their correlation, then d_z from the
        # mean gap: 0.87/0.81 with r 0.77 and a 0.38 gap lands near 0.66
        sd_diff = math.sqrt(0.87**2 + 0.81**2 - 2 * 0.77 * 0.87 * 0.81)
        assert sd_diff == pytest.approx(0.573, abs=0.001)
        d_z = 0.38 / sd_diff
        assert d_z == pytest.approx(0.66, abs=0.02)

    @pytest.mark.parametrize("d_z", [0.49, 0.52, 0.67])
    def test_observed_effect_sizes_all_significant_at_n50(self, d_z):
        t = d_z * math.sqrt(50)
        assert student_t_p_two_tailed(t, 49) < 0.01


class TestPearson:
    def test_self_correlation(self):
        a = [1.0, 2.0, 5.0, 3.0]
        assert pearson_r(a, a) == 1.0

    def test_sign_flip(self):
        a = [1.0, 2.0, 5.0, 3.0]
        assert pearson_r(a, [-x for x in a]) == -1.0

    def test_matches_covariance_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(2, 100))
            a = rng.standard_normal(n)
            b = 0.5 * a + rng.standard_normal(n)
            ours = pearson_r(a.tolist(), b.tolist())
            ref = float(np.corrcoef(a, b)[0, 1])
            assert ours == pytest.approx(ref, abs=1e-12)

    def test_constant_input_degenerate(self):
        with pytest.raises(DegenerateVariance):
            pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_bounds(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            a = rng.standard_normal(10).tolist()
            b = rng.standard_normal(10).tolist()
            assert -1.0 <= pearson_r(a, b) <= 1.0


class TestSampleStd:
    def test_known_value(self):
        # sd of [2, 4, 4, 4, 5, 5, 7, 9] with n-1 denominator
        data = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]
        assert sample_std(data) == pytest.approx(float(np.std(data, ddof=1)), abs=1e-12)

import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from notimind.errors import ConstantInput, InsufficientData, LengthMismatch, UnknownFeatureName
from notimind.segment import SELECTED_FEATURES
from notimind.stats import (
    CorrelationReport,
    bonferroni,
    correlation_table,
    paired_t_test,
    pearson,
    pearson_pvalue,
    permutation_pvalue,
    select_features,
    sign_flip_pvalue,
)

from _oracles import paired_t_by_hand, t_cdf_df4

TABLE5 = {"k_a": 0.46, "e_a": 0.35, "m_a": 0.22, "p_a": 0.13, "o_a": 0.09, "r_a": 0.08,
          "u_a": -0.07, "g_a": -0.08, "w_a": -0.35}

vectors = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=30)


def varied(v):
    return np.ptp(v) > 1e-6 * max(1.0, np.abs(v).max())


class TestPearson:
    def test_perfect_line(self):
        x = np.arange(10.0)
        assert pearson(x, 2 * x + 1) == pytest.approx(1.0)
        assert pearson(x, -x) == pytest.approx(-1.0)

    def test_hand_value(self):
        # deviations (-1, 0, 1) and (-1, 1, 0): r = 1 / (sqrt 2 * sqrt 2)
        assert pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            pearson([1, 2, 3], [1, 2])
        with pytest.raises(ConstantInput):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(InsufficientData):
            pearson([1, 2], [2, 1])

    @given(vectors, st.floats(0.1, 10), st.floats(-10, 10), st.booleans())
    def test_affine_and_symmetric(self, x, a, b, negate):
        x = np.array(x)
        assume(varied(x))
        a = -a if negate else a
        assert pearson(x, a * x + b) == pytest.approx(math.copysign(1.0, a), abs=1e-9)
        y = np.sin(x) + np.arange(len(x))
        assert pearson(x, y) == pytest.approx(pearson(y, x), abs=1e-12)
        assert -1.0 <= pearson(x, y) <= 1.0


class TestPValues:
    def test_t_transform_against_closed_form(self):
        # r with n = 6 gives t on 4 degrees of freedom.
        r, n = 0.6, 6
        t = r * math.sqrt((n - 2) / (1 - r * r))
        assert pearson_pvalue(r, n) == pytest.approx(2 * (1 - t_cdf_df4(t)), abs=1e-12)

    def test_perfect_correlation(self):
        assert pearson_pvalue(1.0, 10) == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_permutation_agrees(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=30)
        y = 0.3 * x + rng.normal(size=30)
        exact = pearson_pvalue(pearson(x, y), 30)
        assert abs(permutation_pvalue(x, y, 10_000, seed) - exact) <= 0.02

    def test_permutation_deterministic(self):
        x, y = [1, 2, 3, 4, 5], [2, 1, 4, 3, 5]
        assert permutation_pvalue(x, y, 500, 7) == permutation_pvalue(x, y, 500, 7)


class TestCorrelationTable:
    def test_identity_column_on_top(self):
        scores = np.array([1.0, 4.0, 2.0, 8.0])
        report = correlation_table({"same": scores, "noise": [3.0, 1.0, 2.0, 1.0]}, scores)
        assert report.rows[0].feature == "same" and report.rows[0].r == pytest.approx(1.0)

    def test_order(self):
        scores = np.array([1.0, 4.0, 2.0, 8.0])
        report = correlation_table(np.column_stack([-scores, scores]), scores, ["neg", "pos"])
        assert report.features() == ["pos", "neg"]
        assert [row.r for row in report.rows] == pytest.approx([1.0, -1.0])

    def test_constant_column_flagged(self):
        report = correlation_table({"flat": [2, 2, 2, 2], "x": [1, 2, 3, 5]}, [1, 2, 3, 4])
        flat = report["flat"]
        assert flat.constant and flat.r == 0.0 and flat.p == 1.0

    def test_too_few_rows(self):
        with pytest.raises(InsufficientData):
            correlation_table({"x": [1.0]}, [2.0])

    def test_unknown_lookup(self):
        with pytest.raises(UnknownFeatureName):
            correlation_table({"x": [1, 2, 3]}, [1, 3, 2])["y"]

    def test_permutation_method(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=40)
        report = correlation_table({"x": x}, x + rng.normal(size=40), method="permutation",
                                   n_permutations=2000, seed=3)
        assert 0 < report["x"].p <= 1 / 2001 * 2

    def test_csv(self):
        report = correlation_table({"a": [1, 2, 3], "b": [3, 1, 2]}, [1, 2, 3])
        buf = io.StringIO()
        report.to_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "feature,r,p,n"
        assert lines[1].startswith("a,1.0,") and lines[1].endswith(",3")

    @given(st.integers(3, 40), st.integers(0, 10**6))
    def test_ranges(self, n, seed):
        rng = np.random.default_rng(seed)
        report = correlation_table(rng.normal(size=(n, 3)), rng.normal(size=n))
        rs = [row.r for row in report.rows]
        assert rs == sorted(rs, reverse=True)
        assert all(-1 <= row.r <= 1 and 0 <= row.p <= 1 and row.n == n for row in report.rows)


class TestSelectFeatures:
    report = CorrelationReport.from_values({**TABLE5, "f_a": -0.6, "s_a": 0.01})

    def test_default_nine(self):
        chosen = select_features(self.report)
        assert chosen == list(SELECTED_FEATURES)
        assert "f_a" not in chosen and len(chosen) == 9

    def test_threshold(self):
        assert set(select_features(CorrelationReport.from_values(TABLE5), threshold=0.3)) == {
            "k_a", "e_a", "w_a"}

    def test_threshold_above_one(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            assert select_features(self.report, threshold=1.1) == []
        assert caught

    def test_labels_accepted(self):
        assert select_features(self.report, ["Keyboard-Out", "emoji-count"]) == ["k_a", "e_a"]

    def test_unknown_name(self):
        with pytest.raises(UnknownFeatureName):
            select_features(self.report, ["Battery"])

    def test_missing_from_report(self):
        with pytest.raises(UnknownFeatureName):
            select_features(CorrelationReport.from_values({"k_a": 0.4}))


class TestPairedTTest:
    def test_identical(self):
        result = paired_t_test([0.5, 0.6, 0.7], [0.5, 0.6, 0.7])
        assert result.p_value == 1.0 and result.degenerate and result.better is None

    def test_constant_difference(self):
        a = np.full(15, 0.8)
        result = paired_t_test(a, a - 0.1)
        assert result.degenerate and result.p_value == 0.0 and result.better == "a"

    def test_hand_checked(self):
        d = [0.02, -0.01, 0.03, 0.00, 0.01]
        b = [0.5] * 5
        a = [x + y for x, y in zip(d, b)]
        t = paired_t_by_hand(a, b)
        assert t == pytest.approx(math.sqrt(2), rel=1e-9)
        p = 2 * (1 - t_cdf_df4(t))
        assert p == pytest.approx(0.230200, abs=1e-6)
        result = paired_t_test(a, b)
        assert result.statistic == pytest.approx(t, rel=1e-9)
        assert result.p_value == pytest.approx(p, abs=1e-9)
        assert result.better == "a"

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            paired_t_test([1, 2], [1, 2, 3])
        with pytest.raises(InsufficientData):
            paired_t_test([1], [2])

    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=20))
    def test_symmetric(self, pairs):
        a, b = zip(*pairs)
        ab, ba = paired_t_test(a, b), paired_t_test(b, a)
        assert ab.p_value == pytest.approx(ba.p_value, abs=1e-12)
        assert 0.0 <= ab.p_value <= 1.0

    @pytest.mark.parametrize("seed", range(5))
    def test_sign_flip_agrees(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(0.7, 0.1, 30)
        b = a - rng.normal(0.02, 0.06, 30)
        assert abs(sign_flip_pvalue(a, b, 10_000, seed) - paired_t_test(a, b).p_value) <= 0.02


class TestBonferroni:
    def test_threshold(self):
        assert bonferroni([0.1, 0.2, 0.3]).threshold == pytest.approx(0.0167, abs=1e-4)

    def test_within_subject_values(self):
        assert bonferroni([0.007, 0.009, 0.002]).significant == (True, True, True)

    def test_global_values(self):
        assert bonferroni([0.04, 0.012, 0.003]).significant == (False, True, True)

    def test_strict_inequality(self):
        assert bonferroni([0.025, 0.5], family_alpha=0.05).significant == (False, False)

    def test_empty(self):
        with pytest.raises(ValueError):
            bonferroni([])

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.floats(0.001, 0.5), st.floats(0.001, 0.5))
    def test_monotone_in_alpha(self, p, alpha1, alpha2):
        low, high = sorted((alpha1, alpha2))
        strict, loose = bonferroni(p, low).significant, bonferroni(p, high).significant
        assert all(l or not s for s, l in zip(strict, loose))

"""
Tests for distribution tails, rank tests and correlations.
"""

import math

import numpy as np
import pytest
from scipy import stats as sps

from stats import (
    CorrelationTable,
    GroupedSample,
    chi_square_sf,
    correlation_table,
    dunn_posthoc,
    exact_u_distribution,
    kruskal_wallis,
    mann_whitney,
    normal_sf,
    pearson,
    rank_with_ties,
    star_string,
    t_sf,
)
from stats.tails import two_sided_normal_p, two_sided_t_p
from utils.error_handler import DataError, DegenerateData, ParamError


class TestTails:
    """Test upper-tail probabilities."""

    def test_reported_chi_square_values(self):
        """Published H statistics on 5 df give the published p values."""
        assert 0.028 <= chi_square_sf(12.43, 5) <= 0.030
        assert 0.005 <= chi_square_sf(16.47, 5) <= 0.007

    @pytest.mark.parametrize("x,df", [(0.5, 1), (3.84, 1), (11.07, 5), (30.0, 10), (2.0, 4)])
    def test_chi_square_matches_scipy(self, x, df):
        """Values agree with scipy's distribution objects."""
        assert chi_square_sf(x, df) == pytest.approx(sps.chi2.sf(x, df), rel=1e-9)

    def test_chi_square_edges(self):
        """Non-positive x gives 1 and infinity gives 0."""
        assert chi_square_sf(0.0, 3) == 1.0
        assert chi_square_sf(-1.0, 3) == 1.0
        assert chi_square_sf(math.inf, 3) == 0.0

    def test_bad_df(self):
        """Degrees of freedom below 1 raise ParamError."""
        with pytest.raises(ParamError):
            chi_square_sf(1.0, 0)
        with pytest.raises(ParamError):
            t_sf(1.0, 0.5)

    @pytest.mark.parametrize("z", [-3.0, -1.0, 0.0, 1.96, 8.0])
    def test_normal(self, z):
        """Normal tails agree with scipy, including far out."""
        assert normal_sf(z) == pytest.approx(sps.norm.sf(z), rel=1e-9)

    @pytest.mark.parametrize("t,df", [(-2.0, 3), (0.0, 10), (2.228, 10), (5.0, 441)])
    def test_t(self, t, df):
        """t tails agree with scipy."""
        assert t_sf(t, df) == pytest.approx(sps.t.sf(t, df), rel=1e-7)

    def test_two_sided(self):
        """Two-sided values double the tail and cap at 1."""
        assert two_sided_normal_p(1.959964) == pytest.approx(0.05, abs=1e-6)
        assert two_sided_normal_p(0.0) == 1.0
        assert two_sided_t_p(-2.228, 10) == pytest.approx(0.05, abs=1e-3)
        assert t_sf(math.inf, 5) == 0.0
        assert t_sf(-math.inf, 5) == 1.0


class TestRanking:
    """Test midranking."""

    def test_midranks(self):
        """Ties share the mean of their ranks."""
        assert list(rank_with_ties([10, 20, 20, 30])) == [1.0, 2.5, 2.5, 4.0]
        assert list(rank_with_ties([3, 3, 3])) == [2.0, 2.0, 2.0]

    def test_invalid(self):
        """Empty or non-finite samples raise DataError."""
        with pytest.raises(DataError):
            rank_with_ties([])
        with pytest.raises(DataError):
            rank_with_ties([1.0, float("nan")])


class TestGroupedSample:
    """Test grouped sample validation."""

    def test_needs_two_groups(self):
        """One group is not enough."""
        with pytest.raises(DataError):
            GroupedSample.from_mapping({"a": [1, 2]})

    def test_empty_group(self):
        """Empty groups raise."""
        with pytest.raises(DataError, match="empty"):
            GroupedSample.from_mapping({"a": [1], "b": []})

    def test_order_is_kept(self):
        """Labels keep insertion order."""
        sample = GroupedSample.from_mapping({"z": [1], "a": [2, 3]})
        assert sample.labels == ["z", "a"]
        assert sample.sizes == [1, 2]


class TestKruskalWallis:
    """Test the Kruskal-Wallis H test."""

    def test_matches_scipy_with_ties(self):
        """H and p agree with scipy on tied data."""
        groups = {"a": [1, 2, 2, 3, 4], "b": [2, 3, 3, 5, 5, 6], "c": [4, 4, 6, 7, 7]}
        result = kruskal_wallis(GroupedSample.from_mapping(groups))
        expected = sps.kruskal(*groups.values())
        assert result.statistic == pytest.approx(expected.statistic, rel=1e-10)
        assert result.p_value == pytest.approx(expected.pvalue, rel=1e-9)
        assert result.df == 2

    def test_mean_ranks(self):
        """Mean ranks are reported per group."""
        result = kruskal_wallis(GroupedSample.from_mapping({"low": [1, 2, 3], "high": [4, 5, 6]}))
        assert result.mean_ranks == {"low": 2.0, "high": 5.0}

    def test_constant_data_is_degenerate(self):
        """All-equal data give H = 0 and p = 1."""
        result = kruskal_wallis(GroupedSample.from_mapping({"a": [3, 3], "b": [3, 3], "c": [3]}))
        assert result.degenerate
        assert result.statistic == 0.0
        assert result.p_value == 1.0

    def test_too_few_observations(self):
        """Fewer than three observations raise."""
        with pytest.raises(DataError):
            kruskal_wallis(GroupedSample.from_mapping({"a": [1], "b": [2]}))

    def test_two_groups_match_mann_whitney(self):
        """With two groups H equals z squared and Dunn's p equals the asymptotic Mann-Whitney p."""
        rng = np.random.default_rng(2024)
        for _ in range(200):
            a = rng.integers(1, 6, size=int(rng.integers(2, 16))).tolist()
            b = rng.integers(1, 6, size=int(rng.integers(2, 16))).tolist()
            sample = GroupedSample.from_mapping({"a": a, "b": b})

            h = kruskal_wallis(sample).statistic
            mw = mann_whitney(a, b, mode="asymptotic")
            (pair,) = dunn_posthoc(sample)

            assert h == pytest.approx(mw.z * mw.z, rel=1e-9, abs=1e-12)
            assert pair.p_adj == pytest.approx(mw.p_value, rel=1e-9, abs=1e-12)
            assert abs(pair.z) == pytest.approx(abs(mw.z), rel=1e-9, abs=1e-12)


class TestDunn:
    """Test Dunn's pairwise comparisons."""

    def test_pairs_and_bonferroni(self):
        """Three groups give three ordered pairs with adjusted p values."""
        sample = GroupedSample.from_mapping({"a": [1, 2, 3, 4], "b": [5, 6, 7, 8], "c": [9, 10, 11, 12]})
        pairs = dunn_posthoc(sample)
        assert [(p.group_a, p.group_b) for p in pairs] == [("a", "b"), ("a", "c"), ("b", "c")]
        for pair in pairs:
            assert pair.p_adj == pytest.approx(min(1.0, 3 * pair.p_raw))
        assert pairs[1].z < pairs[0].z < 0

    def test_z_value(self):
        """z uses the pooled rank variance and the group sizes."""
        pairs = dunn_posthoc(GroupedSample.from_mapping({"a": [1, 2, 3, 4], "b": [5, 6, 7, 8], "c": [9, 10, 11, 12]}))
        expected = (2.5 - 6.5) / math.sqrt(12 * 13 / 12.0 * (1 / 4 + 1 / 4))
        assert pairs[0].z == pytest.approx(expected)

    def test_no_adjustment(self):
        """'none' keeps the raw p values."""
        pairs = dunn_posthoc(GroupedSample.from_mapping({"a": [1, 2], "b": [3, 4], "c": [5, 6]}), adjust="none")
        assert all(p.p_adj == p.p_raw for p in pairs)

    def test_constant_data(self):
        """Constant data give z = 0 and p = 1."""
        pairs = dunn_posthoc(GroupedSample.from_mapping({"a": [1, 1], "b": [1, 1]}))
        assert pairs[0].z == 0.0
        assert pairs[0].p_adj == 1.0

    def test_unknown_adjustment(self):
        """Unknown adjustments raise ParamError."""
        with pytest.raises(ParamError):
            dunn_posthoc(GroupedSample.from_mapping({"a": [1, 2], "b": [3, 4]}), adjust="holm")


class TestMannWhitney:
    """Test the Mann-Whitney U test."""

    def test_complete_separation_exact(self):
        """{1,2,3} vs {4,5,6} has exact two-sided p = 2/20."""
        result = mann_whitney([1, 2, 3], [4, 5, 6], mode="exact")
        assert result.statistic == 0.0
        assert result.p_value == pytest.approx(0.1)
        assert result.method == "exact"
        assert result.z < 0

    def test_identical_groups(self):
        """Identical samples give p = 1."""
        values = [1, 2, 3, 4, 5, 6, 7]
        result = mann_whitney(values, values)
        assert result.statistic == pytest.approx(24.5)
        assert result.p_value == pytest.approx(1.0)
        assert result.z == pytest.approx(0.0)

    def test_exact_matches_scipy_without_ties(self):
        """Exact p agrees with scipy when there are no ties."""
        a, b = [1.1, 2.4, 3.3, 5.8, 7.2], [4.1, 6.5, 8.0, 9.9, 10.3, 12.0]
        result = mann_whitney(a, b, mode="exact")
        expected = sps.mannwhitneyu(a, b, alternative="two-sided", method="exact")
        assert result.statistic == pytest.approx(expected.statistic)
        assert result.p_value == pytest.approx(expected.pvalue, rel=1e-9)

    def test_asymptotic_matches_scipy(self):
        """Asymptotic p agrees with scipy's tie-corrected normal approximation."""
        rng = np.random.default_rng(4)
        a = rng.integers(0, 9, size=30)
        b = rng.integers(2, 11, size=25)
        result = mann_whitney(a, b, mode="asymptotic")
        expected = sps.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=False)
        assert result.statistic == pytest.approx(expected.statistic)
        assert result.p_value == pytest.approx(expected.pvalue, rel=1e-9)
        assert result.method == "asymptotic"

    def test_auto_mode(self):
        """Small samples use exact enumeration, large ones the approximation."""
        assert mann_whitney([1, 2, 3], [4, 5, 6]).method == "exact"
        assert mann_whitney(list(range(15)), list(range(10, 25))).method == "asymptotic"

    def test_orientation(self):
        """Swapping the samples mirrors U and z."""
        a, b = [1, 4, 6, 9], [2, 3, 5, 7, 8]
        ab = mann_whitney(a, b)
        ba = mann_whitney(b, a)
        assert ab.statistic + ba.statistic == len(a) * len(b)
        assert ab.z == pytest.approx(-ba.z)
        assert ab.p_value == pytest.approx(ba.p_value)

    def test_exact_with_ties(self):
        """Tied data are enumerated over midranks."""
        result = mann_whitney([1, 1, 2, 2], [2, 3, 3, 3], mode="exact")
        assert 0.0 < result.p_value < 0.2

    def test_constant_data(self):
        """All-equal data are degenerate with p = 1."""
        result = mann_whitney([2, 2, 2], [2, 2])
        assert result.degenerate
        assert result.p_value == 1.0

    def test_limits(self):
        """Oversized exact requests and bad modes raise ParamError."""
        with pytest.raises(ParamError):
            mann_whitney(list(range(40)), list(range(40, 80)), mode="exact")
        with pytest.raises(ParamError):
            mann_whitney([1], [2], mode="bootstrap")
        with pytest.raises(DataError):
            mann_whitney([], [1, 2])

    def test_exact_distribution(self):
        """The null distribution sums to one and is symmetric."""
        dist = exact_u_distribution([1, 2, 3], [4, 5, 6])
        assert sum(dist.values()) == pytest.approx(1.0)
        assert dist[0.0] == pytest.approx(1 / 20)
        assert dist[0.0] == pytest.approx(dist[9.0])
        assert min(dist) == 0.0 and max(dist) == 9.0


class TestPearson:
    """Test Pearson correlation."""

    def test_matches_scipy(self):
        """r and p agree with scipy."""
        x = [2.0, 4.0, 4.5, 5.0, 7.0, 8.5, 9.0]
        y = [1.0, 3.0, 2.0, 6.0, 5.5, 9.0, 7.0]
        result = pearson(x, y)
        expected = sps.pearsonr(x, y)
        assert result.r == pytest.approx(expected[0], rel=1e-10)
        assert result.p_value == pytest.approx(expected[1], rel=1e-7)

    def test_perfect_correlation(self):
        """|r| = 1 gives p = 0."""
        result = pearson([1, 2, 3, 4], [2, 4, 6, 8])
        assert result.r == pytest.approx(1.0)
        assert result.p_value < 1e-10

    def test_invalid(self):
        """Short, misaligned or constant inputs raise."""
        with pytest.raises(DataError):
            pearson([1, 2], [1, 2])
        with pytest.raises(DataError):
            pearson([1, 2, 3], [1, 2])
        with pytest.raises(DegenerateData):
            pearson([1, 1, 1], [1, 2, 3])

    def test_stars(self):
        """Stars count the levels p falls below."""
        assert star_string(0.2) == ""
        assert star_string(0.03) == "*"
        assert star_string(0.005) == "**"
        assert star_string(0.0001) == "***"
        assert star_string(float("nan")) == ""


class TestCorrelationTable:
    """Test labelled correlation tables."""

    def test_from_lower_triangle(self, table7):
        """Published rows rebuild a symmetric matrix."""
        table = CorrelationTable.from_lower_triangle(table7["labels"], table7["rows"], n=table7.get("n"))
        assert table.r.shape == (10, 10)
        assert np.allclose(table.r, table.r.T)
        assert table.r[5, 0] == pytest.approx(0.68)
        assert len(table.cells()) == 45

    def test_bad_triangle(self):
        """Rows of the wrong length raise DataError."""
        with pytest.raises(DataError):
            CorrelationTable.from_lower_triangle(["a", "b", "c"], [[0.1], [0.2]])
        with pytest.raises(DataError):
            CorrelationTable.from_lower_triangle(["a", "b"], [[1.5]])

    def test_correlation_table(self):
        """Every row and column variable pair is correlated."""
        rows = {"x": [1, 2, 3, 4, 5]}
        cols = {"y": [2, 1, 4, 3, 5], "z": [5, 4, 3, 2, 1]}
        table = correlation_table(rows, cols)
        assert table.r.shape == (1, 2)
        assert table.value("x", "z") == pytest.approx(-1.0)
        assert table.n == 5
        assert table.cells() == [(0, 0), (0, 1)]

    def test_misaligned_variables(self):
        """Variables of different lengths raise."""
        with pytest.raises(DataError, match="aligned"):
            correlation_table({"x": [1, 2, 3]}, {"y": [1, 2, 3, 4]})

from stats.correlation import CorrelationTable, PearsonResult, correlation_table, pearson, star_string
from stats.rank_tests import (
    GroupedSample,
    PairwiseComparison,
    TestResult,
    dunn_posthoc,
    exact_u_distribution,
    kruskal_wallis,
    mann_whitney,
    rank_with_ties,
)
from stats.tails import chi_square_sf, normal_sf, t_sf

__all__ = [
    "CorrelationTable",
    "GroupedSample",
    "PairwiseComparison",
    "PearsonResult",
    "TestResult",
    "chi_square_sf",
    "correlation_table",
    "dunn_posthoc",
    "exact_u_distribution",
    "kruskal_wallis",
    "mann_whitney",
    "normal_sf",
    "pearson",
    "rank_with_ties",
    "star_string",
    "t_sf",
]

"""Upper-tail probabilities for the chi-square, standard normal and Student t distributions."""

import math

from scipy import special

from utils.error_handler import ParamError


def _check_df(df: float) -> None:
    if df is None or not math.isfinite(df) or df < 1:
        raise ParamError(f"Degrees of freedom must be >= 1, got {df}")


def chi_square_sf(x: float, df: int) -> float:
    """P(X >= x) for X ~ chi-square(df), via the regularized upper incomplete gamma."""
    _check_df(df)
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


def normal_sf(z: float) -> float:
    """P(Z >= z) for Z ~ N(0, 1). ``ndtr`` keeps precision far into the upper tail."""
    return float(special.ndtr(-z))


def t_sf(t: float, df: float) -> float:
    """P(T >= t) for T ~ t(df), via the regularized incomplete beta."""
    _check_df(df)
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))
    return tail if t >= 0 else 1.0 - tail


def two_sided_normal_p(z: float) -> float:
    return min(1.0, 2.0 * normal_sf(abs(z)))


def two_sided_t_p(t: float, df: float) -> float:
    return min(1.0, 2.0 * t_sf(abs(t), df))

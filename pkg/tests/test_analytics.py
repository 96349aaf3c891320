import math
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np
import pandas as pd
import pytest

from contagion_lab import analytics
from contagion_lab.analytics import Regime
from contagion_lab.errors import ConfigurationError, FitError
from contagion_lab.Geometry.torus import TorusGeometry
from contagion_lab.Samplers.distance_sampler import normalization_constant


def test_critical_exponents_are_exact():
    assert analytics.alpha_k(2) == Fraction(8, 3)
    assert analytics.beta_k(2) == 3
    assert analytics.alpha_k(3) == Fraction(7, 3)
    assert analytics.beta_k(3) == Fraction(8, 3)
    assert analytics.alpha_k(4) == Fraction(11, 5)
    assert analytics.critical_exponent("I", 2) == 3
    with pytest.raises(ConfigurationError):
        analytics.alpha_k(0)


def test_fast_band_is_nonempty_and_shrinks():
    alphas = [analytics.alpha_k(k) for k in range(2, 65)]
    betas = [analytics.beta_k(k) for k in range(2, 65)]
    assert all(2 < a < b for a, b in zip(alphas, betas))
    assert all(later < earlier for earlier, later in zip(alphas, alphas[1:]))
    assert all(later < earlier for earlier, later in zip(betas, betas[1:]))


@pytest.mark.parametrize("variant, gamma, k, regime, why", [
    ("W", 1.9, 2, Regime.SLOW, "no-wide-bridges"),
    ("W", 2.0, 2, Regime.FAST, "gamma-2"),
    ("W", 2.5, 2, Regime.FAST, "recursive-spreading"),
    ("W", Fraction(8, 3), 2, Regime.UNKNOWN, "critical"),
    ("W", 2.8, 2, Regime.SLOW, "long-tie-shortage"),
    ("W", 3.0, 2, Regime.SLOW, "long-tie-shortage"),
    ("W", 3.2, 2, Regime.SLOW, "ties-too-short"),
    ("I", 2.8, 2, Regime.FAST, "recursive-spreading"),
    ("I", 3, 2, Regime.UNKNOWN, "critical"),
    ("I", 3.2, 2, Regime.SLOW, "ties-too-short"),
    ("W", 1.5, 1, Regime.FAST, "external"),
    ("I", 2.5, 1, Regime.UNKNOWN, "external"),
])
def test_regime_points(variant, gamma, k, regime, why):
    verdict = analytics.classify_regime(variant, gamma, k)
    assert (verdict.regime, verdict.justification) == (regime, why)


@pytest.mark.parametrize("k", [2, 3, 4])
@pytest.mark.parametrize("variant", ["W", "I"])
def test_regime_bands_on_grid(variant, k):
    crit = analytics.critical_exponent(variant, k)
    for gamma in analytics.gamma_grid(0, 4, 0.05):
        g = Fraction(str(gamma))
        regime = analytics.classify_regime(variant, gamma, k).regime
        if g == crit:
            assert regime is Regime.UNKNOWN
        elif 2 <= g < crit:
            assert regime is Regime.FAST, gamma
        else:
            assert regime is Regime.SLOW, gamma


def test_negative_gamma_rejected():
    with pytest.raises(ConfigurationError):
        analytics.classify_regime("W", -1, 2)


def test_chain_at_unit_square():
    chain = analytics.p5_lower_bound_W(2, 2.3, 0.05, ell=1.0, lam=1.0)
    assert chain.q == pytest.approx([0.5, 0.25])
    assert chain.p4 == pytest.approx(1 / 8)
    assert chain.p5 == pytest.approx(1 - math.exp(-1 / 16))
    assert chain.exponent == Fraction(7, 20)


def test_chain_grows_with_the_square():
    ells = np.logspace(0, 8, 30)
    p5 = np.array([analytics.p5_lower_bound_W(2, 2.3, 0.05, ell=ell, lam=1.0).p5 for ell in ells])
    assert np.all(np.diff(p5) >= 0)
    assert p5[-1] > p5[0]


def test_chain_spot_value_in_high_precision():
    lam = normalization_constant(TorusGeometry(256), 2.3)
    chain = analytics.p5_lower_bound_W(2, 2.3, 0.05, ell=1e4, lam=lam)
    with localcontext() as ctx:
        ctx.prec = 50
        L, ell = Decimal(repr(lam)), Decimal(10000)
        p2 = L * ell ** (Decimal("1") - Decimal("0.05") - Decimal("1.15"))
        p4 = (p2 / 2) * (p2 ** 2 / 4)
        b = ell ** Decimal("0.95")
        p5 = 1 - (-(p4 * b) / 2).exp()
    assert chain.p2 == pytest.approx(float(p2), rel=1e-9)
    assert chain.p4 == pytest.approx(float(p4), rel=1e-9)
    assert chain.p5 == pytest.approx(float(p5), rel=1e-9)


def test_multi_edge_chain():
    chain = analytics.p5_lower_bound("I", 2, 2.8, 0.05, 1.0, 1.0)
    assert chain.p4 == pytest.approx(2 ** -11.2)
    assert chain.p5 == pytest.approx(-math.expm1(-(2 ** -11.2) / 2))
    assert chain.exponent == Fraction(1, 20)


@pytest.mark.parametrize("args", [
    (2, 2.8, 0.05, 1.0, 1.0),
    (2, 2.3, 0.2, 1.0, 1.0),
    (2, 2.3, 0.05, 0.5, 1.0),
    (2, 2.3, 0.05, 1.0, 0.0),
    (1, 2.3, 0.05, 1.0, 1.0),
])
def test_chain_range_checks(args):
    with pytest.raises(ConfigurationError):
        analytics.p5_lower_bound_W(*args)


def test_recurrence_unrolls_to_the_base_case():
    assert analytics.recurrence_time_bound(2.0 ** 10, 0.5, 2, 2, 1).value == pytest.approx(32.0)
    bound = analytics.recurrence_time_bound(2.0 ** 40, 0.5, 2, 2, 1)
    assert bound.depth == 2
    assert bound.value == pytest.approx(2 * 3 + 4 * 32)
    assert bound.exponent == pytest.approx(2.0)


def test_recurrence_grows_slowly():
    samples = [(2.0 ** e, analytics.recurrence_time_bound(2.0 ** e, 0.5, 2, 2, 1).value) for e in range(10, 41, 5)]
    assert analytics.fit_scaling_exponent(samples).exponent < 0.2


def test_polylog_fit_sits_well_below_square_root():
    ns = [2.0 ** e for e in range(10, 21)]
    polylog = analytics.fit_scaling_exponent((n, math.log(n) ** 3) for n in ns)
    root = analytics.fit_scaling_exponent((n, math.sqrt(n)) for n in ns)
    assert polylog.exponent < 0.35
    assert root.exponent == pytest.approx(0.5)
    assert root.r_squared == pytest.approx(1.0)


@pytest.mark.parametrize("samples", [[(10, 1), (20, 2)], [(10, 1), (10, 2), (20, 3)], [(10, 1), (20, 0), (40, 3)]])
def test_bad_fits(samples):
    with pytest.raises(FitError):
        analytics.fit_scaling_exponent(samples)


def test_gamma_two_exponent():
    assert analytics.gamma2_exponent(2) == 3.0
    assert analytics.gamma2_exponent(3) == 4.5
    assert analytics.definition_r(1, 0.5, 2) == pytest.approx(144)


def test_upper_bound_parameters():
    params = analytics.upper_bound_parameters("W", 2, 2.3, 0.05, d=1.0, lam=1.0)
    assert params.c_min == pytest.approx(19 / 7)
    assert params.delta_max == pytest.approx(0.1375)
    assert params.r == pytest.approx(8 ** (19 / 7))
    assert params.exponent == pytest.approx(19 / 14 + math.log(2) / math.log(1 / 0.95))
    assert analytics.upper_bound_parameters("I", 2, 2.8, 0.05, d=1.0, lam=1.0).c_min == pytest.approx(19)
    with pytest.raises(ConfigurationError):
        analytics.upper_bound_parameters("W", 2, 2.3, 0.05, d=1.0, lam=1.0, c=1.0)


def test_z_bounds_branches():
    log = analytics.z_expectation_bounds(1e6, 1, 2, 0.05, 0.5)
    assert log.z1_branch == "log"
    assert log.delta_max == Fraction(1, 16)
    assert log.z1_exponent == Fraction(4, 5) == log.z2_exponent
    flat = analytics.z_expectation_bounds(1e6, 0.5, 2, 0.05, 0.5)
    assert (flat.z1_branch, flat.z1_exponent, flat.z2_exponent) == ("flat", Fraction(4, 5), Fraction(5, 4))
    steep = analytics.z_expectation_bounds(1e6, 1.5, 2, 0.05, 0.5)
    assert (steep.z1_branch, steep.z1_exponent) == ("steep", Fraction(7, 20))
    assert steep.z1_order == pytest.approx(1e6 ** -0.35)
    with pytest.raises(ConfigurationError):
        analytics.z_expectation_bounds(1e6, 2, 2, 0.05, 0.5)


def test_heavy_bound_interval():
    bound = analytics.heavy_subset_probability_bound(1e6, 3, 2, 0.05, m=2)
    assert (bound.zeta_low, bound.zeta_high) == (Fraction(-1, 20), Fraction(0))
    assert bound.nonempty and bound.in_range
    assert bound.p1 == pytest.approx(2 * 1e6 ** -0.35)
    assert bound.p2 == pytest.approx(bound.p1 ** 3)
    assert not analytics.heavy_subset_probability_bound(1e6, 2.8, 2, 0.05, m=2).nonempty


@pytest.mark.parametrize("k", [2, 3])
def test_heavy_interval_nonempty_exactly_above_alpha(k):
    eps = Fraction(1, 10 ** 6)
    for gamma in analytics.gamma_grid(0.1, 6.0, 0.1):
        bound = analytics.heavy_subset_probability_bound(1e4, gamma, k, eps, m=2)
        assert bound.nonempty == (Fraction(str(gamma)) > analytics.alpha_k(k)), gamma
        assert bound.nonempty == bound.in_range
        for coarse in (Fraction(1, 100), Fraction(1, 20)):
            wider = analytics.heavy_subset_probability_bound(1e4, gamma, k, coarse, m=2)
            assert wider.nonempty == wider.in_range


def test_too_short_parameters():
    params = analytics.too_short_block_parameters(3.2, 2)
    assert (params.slack, params.delta, params.beta) == (Fraction(1, 5), Fraction(1, 24), Fraction(1, 15))
    assert params.long_tie_exponent == Fraction(11, 20)
    assert params.any_vertex_exponent == Fraction(1, 10)
    assert params.min_rounds_order(2.0 ** 24) == pytest.approx(1.0)
    assert params.block_side(2.0 ** 24) == pytest.approx(2048)
    with pytest.raises(ConfigurationError):
        analytics.too_short_block_parameters(3, 2)


def test_cloud_round_bound():
    assert analytics.cloud_gen_round_bound(1e4, 0.5) == pytest.approx(100 / 3)


def test_predict_table():
    table = analytics.predict_table(["W", "I"], [2], [1.5, 2.0, 2.5, 2.8])
    assert len(table) == 8
    assert list(table.columns) == ["variant", "k", "gamma", "regime", "justification", "alpha_k", "beta_k",
                                   "polylog_exponent"]
    w = table[table["variant"] == "W"].set_index("gamma")
    assert w.loc[2.0, "polylog_exponent"] == 3.0
    assert w.loc[2.5, "polylog_exponent"] > 0
    assert pd.isna(w.loc[2.8, "polylog_exponent"])
    assert w.loc[2.8, "regime"] == "Slow"
    assert table[table["variant"] == "I"].set_index("gamma").loc[2.8, "regime"] == "Fast"


def test_gamma_grid():
    grid = analytics.gamma_grid(2.0, 3.0, 0.05)
    assert len(grid) == 21 and grid[-1] == 3.0 and grid[1] == 2.05
    with pytest.raises(ConfigurationError):
        analytics.gamma_grid(0, 1, 0)

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, NamedTuple, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import linregress

from .errors import ConfigurationError, FitError
from .Models.small_world_graph import Variant


def _exact(x) -> Fraction:
    """Exact rational for a user-facing real: 2.8 means 14/5, not the nearest double."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


def _check_k(k: int, minimum: int = 1) -> None:
    if int(k) != k or k < minimum:
        raise ConfigurationError(f"k must be an integer >= {minimum}, got {k}")


def alpha_k(k: int) -> Fraction:
    _check_k(k)
    return Fraction(2 * (k * k + k + 2), k * (k + 1))


def beta_k(k: int) -> Fraction:
    _check_k(k)
    return Fraction(2 * (k + 1), k)


def critical_exponent(variant, k: int) -> Fraction:
    return alpha_k(k) if Variant.parse(variant) is Variant.W else beta_k(k)


class Regime(str, Enum):
    FAST = "Fast"
    SLOW = "Slow"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class RegimeVerdict:
    regime: Regime
    justification: str


def classify_regime(variant, gamma, k: int) -> RegimeVerdict:
    """
    Place (variant, gamma, k) on the phase diagram.

    Fast means polylogarithmic rounds to full infection, Slow polynomial. The breakpoints are 2 and the
    critical exponent (alpha_k without multi-edges, beta_k with). k = 1 relies on diameter results for the
    underlying graph and is only claimed below 2.
    """
    variant = Variant.parse(variant)
    g = _exact(gamma)
    if g < 0:
        raise ConfigurationError(f"gamma must be >= 0, got {gamma}")
    _check_k(k)
    if k == 1:
        if g < 2:
            return RegimeVerdict(Regime.FAST, "external")
        return RegimeVerdict(Regime.UNKNOWN, "external")
    crit = critical_exponent(variant, k)
    if g < 2:
        return RegimeVerdict(Regime.SLOW, "no-wide-bridges")
    if g == 2:
        return RegimeVerdict(Regime.FAST, "gamma-2")
    if g < crit:
        return RegimeVerdict(Regime.FAST, "recursive-spreading")
    if g == crit:
        return RegimeVerdict(Regime.UNKNOWN, "critical")
    if variant is Variant.W and g <= beta_k(k):
        return RegimeVerdict(Regime.SLOW, "long-tie-shortage")
    return RegimeVerdict(Regime.SLOW, "ties-too-short")


# ---------------------------------------------------------------- new-seed probability chains


@dataclass
class SeedChain:
    """Intermediate terms of a new-seed probability lower bound; p5 is the bound itself."""

    p1: float
    p2: float
    q: List[float]
    p4: float
    p5: float
    b_size: float
    exponent: Fraction = field(default=Fraction(0))


def _check_chain_ranges(variant: Variant, k: int, gamma, delta, ell: float, lam: float) -> None:
    _check_k(k, 2)
    crit = critical_exponent(variant, k)
    g, d = _exact(gamma), _exact(delta)
    name = "alpha_k" if variant is Variant.W else "beta_k"
    if not 2 < g < crit:
        raise ConfigurationError(f"gamma={gamma} violates 2 < gamma < {name}={crit}")
    if not 0 < d < 1 - g / crit:
        raise ConfigurationError(f"delta={delta} violates 0 < delta < 1 - gamma/{name}={1 - g / crit}")
    if ell < 1:
        raise ConfigurationError(f"ell must be >= 1, got {ell}")
    if not 0 < lam <= 1:
        raise ConfigurationError(f"lambda must lie in (0, 1], got {lam}")


def p5_exponent_W(k: int, gamma, delta) -> Fraction:
    """Power of ell in P4 * |B| for K^W: (C + 1)(1 - delta) - C * gamma / 2 with C = C(k + 1, 2)."""
    C = k * (k + 1) // 2
    d = _exact(delta)
    return (C + 1) * (1 - d) - C * _exact(gamma) / 2


def p5_exponent_I(k: int, gamma, delta) -> Fraction:
    d = _exact(delta)
    return (k + 1) * (1 - d) - k * _exact(gamma) / 2


def p5_lower_bound_W(k: int, gamma: float, delta: float, ell: float, lam: float, b_size: float = None) -> SeedChain:
    """
    Lower bound on the chance that a new k-seed cluster forms in B, no multi-edges.

    P1 = lam / ell^(gamma/2) bounds one tie landing on a given node of the infected square,
    P2 = lam * ell^(1 - delta - gamma/2) one tie landing anywhere in it, Q_s = P2^s / (2 s!) the s-th
    cluster node finding its s ties, P4 = prod Q_s and P5 = 1 - exp(-P4 * |B| / 2).

    Args:
        k (int): Threshold, >= 2.
        gamma, delta: Must satisfy 2 < gamma < alpha_k and 0 < delta < 1 - gamma/alpha_k.
        ell (float): Node count of the enclosing square.
        lam (float): Normalization constant of the tie law.
        b_size (float): |B|, defaults to ell^(1 - delta).
    """
    _check_chain_ranges(Variant.W, k, gamma, delta, ell, lam)
    gamma, delta = float(gamma), float(delta)
    p1 = lam / ell ** (gamma / 2)
    p2 = lam * ell ** (1 - delta - gamma / 2)
    q = [p2 ** s / (2 * math.factorial(s)) for s in range(1, k + 1)]
    p4 = math.prod(q)
    if b_size is None:
        b_size = ell ** (1 - delta)
    p5 = min(1.0, max(0.0, -math.expm1(-p4 * b_size / 2)))
    return SeedChain(p1, p2, q, p4, p5, b_size, p5_exponent_W(k, gamma, delta))


def p5_lower_bound_I(k: int, gamma: float, delta: float, ell: float, lam: float, b_size: float = None) -> SeedChain:
    """
    Same bound with multi-edges: one node of B only needs k parallel ties into the square, so every cluster
    node has Q'_s = (lam / k^gamma)^k * ell^(1 - delta - gamma/2), P4 = prod Q'_s and
    P5 = 1 - exp(-P4 * |B| / k).
    """
    _check_chain_ranges(Variant.I, k, gamma, delta, ell, lam)
    gamma, delta = float(gamma), float(delta)
    p1 = lam / ell ** (gamma / 2)
    p2 = lam * ell ** (1 - delta - gamma / 2)
    q = [(lam / k ** gamma) ** k * ell ** (1 - delta - gamma / 2) for _ in range(k)]
    p4 = math.prod(q)
    if b_size is None:
        b_size = ell ** (1 - delta)
    p5 = min(1.0, max(0.0, -math.expm1(-p4 * b_size / k)))
    return SeedChain(p1, p2, q, p4, p5, b_size, p5_exponent_I(k, gamma, delta))


def p5_lower_bound(variant, *args, **kwargs) -> SeedChain:
    if Variant.parse(variant) is Variant.W:
        return p5_lower_bound_W(*args, **kwargs)
    return p5_lower_bound_I(*args, **kwargs)


# ---------------------------------------------------------------- recurrence and exponents


class RecurrenceBound(NamedTuple):
    value: float
    depth: int
    exponent: float


def polylog_exponent(delta: float, c: float) -> float:
    """c/2 + log_{1/(1 - delta)} 2."""
    return c / 2 + math.log(2) / math.log(1 / (1 - delta))


def recurrence_base_threshold(ell: float, delta: float, c: float, r: float) -> float:
    return (r * math.log(ell) ** c) ** (1 / (1 - delta)) if ell > 1 else 0.0


def recurrence_time_bound(n: float, delta: float, c: float, k: int, r: float) -> RecurrenceBound:
    """
    Unroll T(ell) = k + 2 T(ell^(1 - delta)) down to the base case T(ell) = sqrt(ell), which applies once
    ell <= (r log^c ell)^(1/(1 - delta)). Logs are natural.

    Returns:
        RecurrenceBound: the exact recursion value, its depth and the polylog exponent it should follow.
    """
    if not 0 < delta < 1:
        raise ConfigurationError(f"delta must lie in (0, 1), got {delta}")
    if c < 0 or r <= 0 or k < 1:
        raise ConfigurationError(f"Need c >= 0, r > 0 and k >= 1, got c={c}, r={r}, k={k}")
    ell = float(n)
    depth = 0
    while ell > 1 and ell > recurrence_base_threshold(ell, delta, c, r):
        ell = ell ** (1 - delta)
        depth += 1
    # T(n) = k (2^depth - 1) + 2^depth sqrt(ell_depth)
    value = k * (2 ** depth - 1) + 2 ** depth * math.sqrt(max(ell, 0.0))
    return RecurrenceBound(float(value), depth, polylog_exponent(delta, c))


def gamma2_exponent(k: int) -> float:
    _check_k(k, 2)
    return float(Fraction(k * (k + 1), 4) + Fraction(3, 2))


def definition_r(d: float, lam: float, c: float) -> float:
    """Size threshold constant (6 d / lambda)^c of the recursive-spreading property."""
    return (6 * d / lam) ** c


@dataclass
class UpperBoundParameters:
    c_min: float
    delta_max: float
    r: float
    exponent: float


def upper_bound_parameters(variant, k: int, gamma: float, delta: float, d: float, lam: float,
                           c: float = None) -> UpperBoundParameters:
    """
    Constants that make the graph recursively spreading in the fast regime.

    c must exceed (1 - delta) / ((C + 1)(1 - delta) - C gamma / 2), C = C(k + 1, 2), without multi-edges and
    (1 - delta) / ((k + 1)(1 - delta) - k gamma / 2) with them; c defaults to that minimum.
    """
    variant = Variant.parse(variant)
    _check_chain_ranges(variant, k, gamma, delta, 1.0, lam)
    C = k * (k + 1) // 2
    if variant is Variant.W:
        c_min = float((1 - _exact(delta)) / p5_exponent_W(k, gamma, delta))
        base = d * 2 ** k * math.prod(i ** (k - i + 1) for i in range(1, k + 1)) / lam ** C
    else:
        c_min = float((1 - _exact(delta)) / p5_exponent_I(k, gamma, delta))
        base = d * k ** (k * k * gamma + 1) / lam ** (k * k)
    if c is None:
        c = c_min
    elif c < c_min:
        raise ConfigurationError(f"c={c} is below the admissible minimum {c_min}")
    delta_max = float(1 - _exact(gamma) / critical_exponent(variant, k))
    return UpperBoundParameters(c_min=c_min, delta_max=delta_max, r=base ** c, exponent=polylog_exponent(delta, c))


# ---------------------------------------------------------------- lower-bound evaluators


@dataclass
class ZBounds:
    z1_order: float
    z2_order: float
    z1_exponent: Fraction
    z2_exponent: Fraction
    z1_branch: str
    delta_max: Fraction


def z_expectation_bounds(n: float, gamma, k: int, delta, eps) -> ZBounds:
    """
    Orders (constants 1) of the expected wide-bridge counts for gamma < 2.

    Z1 ~ n^-(k - 1 - 2k delta) for gamma < 2/k (times log n at gamma = 2/k) and
    n^-(k (1/2 - delta)(2 - gamma) - 2 delta) above; Z2 always takes the latter form. delta_max is the
    ceiling on delta that keeps both below n^-(1 - eps).
    """
    _check_k(k, 2)
    g, d, e = _exact(gamma), _exact(delta), _exact(eps)
    if not 0 <= g < 2:
        raise ConfigurationError(f"gamma must lie in [0, 2), got {gamma}")
    steep = k * (Fraction(1, 2) - d) * (2 - g) - 2 * d
    flat = k - 1 - 2 * k * d
    if g < Fraction(2, k):
        branch, z1_exp, z1 = "flat", flat, float(n) ** -float(flat)
    elif g == Fraction(2, k):
        branch, z1_exp, z1 = "log", flat, math.log(n) * float(n) ** -float(flat)
    else:
        branch, z1_exp, z1 = "steep", steep, float(n) ** -float(steep)
    delta_max = min((k - 2 + e / 2) / (2 * k), (k - g / 2 - 1 + e) / (2 + 2 * k - k * g))
    return ZBounds(z1, float(n) ** -float(steep), z1_exp, steep, branch, delta_max)


@dataclass
class HeavySubsetBound:
    p1: float
    p2: float
    p3_order: float
    zeta_low: Fraction
    zeta_high: Fraction
    nonempty: bool
    in_range: bool


def heavy_subset_probability_bound(n: float, gamma, k: int, eps, m: int) -> HeavySubsetBound:
    """
    Orders of the probabilities behind the long-tie shortage: P1 = m n^(1 - (1/2 - eps) gamma) for one node's
    long tie count, P2 = P1^C for a C(k + 1, 2)-heavy set, and the union bound
    P3 ~ n^(1 + C (1 - (1/2 - eps) gamma)) log^(k^2 - k) n. The failure exponent zeta may be taken in
    (1 + C (1 - gamma (1/2 - eps)), 0), which is nonempty exactly when gamma > alpha_k for eps in range.
    """
    _check_k(k, 2)
    g, e = _exact(gamma), _exact(eps)
    if not 0 < e < Fraction(1, 2):
        raise ConfigurationError(f"eps must lie in (0, 1/2), got {eps}")
    C = k * (k + 1) // 2
    crit = alpha_k(k)
    in_range = g > crit and e < (1 - crit / g) / 2
    single = 1 - (Fraction(1, 2) - e) * g
    p1 = m * float(n) ** float(single)
    zeta_low = 1 + C * single
    p3 = float(n) ** float(zeta_low) * math.log(n) ** (k * k - k)
    return HeavySubsetBound(p1=p1, p2=p1 ** C, p3_order=p3, zeta_low=zeta_low, zeta_high=Fraction(0),
                            nonempty=zeta_low < 0, in_range=in_range)


@dataclass
class TooShortParameters:
    slack: Fraction
    delta: Fraction
    beta: Fraction
    long_tie_exponent: Fraction
    any_vertex_exponent: Fraction

    def block_side(self, n: float) -> float:
        return float(n) ** (0.5 - float(self.delta))

    def min_rounds_order(self, n: float) -> float:
        """Block hops from the seed block to the opposite side of the torus."""
        return float(n) ** float(self.delta) / 2


def too_short_block_parameters(gamma, k: int) -> TooShortParameters:
    """
    Constants of the block argument for gamma > beta_k, writing gamma = 2(k + slack + 1)/k:
    delta = slack / (4 (1 + slack)), beta = slack / 3. A tie is longer than n^(1/2 - delta) with order
    n^-((1/2 - delta)(gamma - 2)), and some vertex has k such ties with order n^-(k (1/2 - delta)(gamma - 2) - 1).
    """
    _check_k(k, 1)
    g = _exact(gamma)
    slack = k * g / 2 - k - 1
    if slack <= 0:
        raise ConfigurationError(f"gamma={gamma} must exceed beta_k={beta_k(k)}")
    delta = slack / (4 * (1 + slack))
    single = (Fraction(1, 2) - delta) * (g - 2)
    return TooShortParameters(slack=slack, delta=delta, beta=slack / 3, long_tie_exponent=single,
                              any_vertex_exponent=k * single - 1)


def cloud_gen_round_bound(n: float, eps: float) -> float:
    """Rounds needed to cross to a cluster sqrt(n)/3 away when every hop is shorter than n^(1/2 - eps)."""
    return float(n) ** eps / 3


# ---------------------------------------------------------------- fits and tables


class ScalingFit(NamedTuple):
    exponent: float
    stderr: float
    r_squared: float


def fit_scaling_exponent(samples: Iterable[Tuple[float, float]]) -> ScalingFit:
    """
    Least-squares slope of log T against log n.

    Raises:
        FitError: fewer than 3 samples, repeated n, or a non-positive value.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise FitError(f"Need at least 3 samples to fit an exponent, got {len(samples)}")
    n = np.array([s[0] for s in samples], dtype=np.float64)
    T = np.array([s[1] for s in samples], dtype=np.float64)
    if np.unique(n).size != n.size:
        raise FitError("Sample sizes n must be distinct")
    if np.any(n <= 0) or np.any(T <= 0) or not np.all(np.isfinite(T)):
        raise FitError("Sample sizes and round counts must be positive and finite")
    fit = linregress(np.log(n), np.log(T))
    r = 0.0 if not np.isfinite(fit.rvalue) else fit.rvalue
    return ScalingFit(float(fit.slope), float(fit.stderr), float(r * r))


def predict_table(variants: Sequence, ks: Sequence[int], gammas: Sequence[float]) -> pd.DataFrame:
    """One row per (variant, k, gamma): regime, justification, critical exponents and the polylog exponent."""
    rows = []
    for variant in variants:
        variant = Variant.parse(variant)
        for k in ks:
            for gamma in gammas:
                verdict = classify_regime(variant, gamma, k)
                polylog = None
                if verdict.justification == "gamma-2":
                    polylog = gamma2_exponent(k)
                elif verdict.justification == "recursive-spreading":
                    # midpoint of the admissible delta range, smallest admissible c
                    delta = float((1 - _exact(gamma) / critical_exponent(variant, k)) / 2)
                    polylog = upper_bound_parameters(variant, k, gamma, delta, d=1.0, lam=1.0).exponent
                rows.append({
                    "variant": variant.value,
                    "k": k,
                    "gamma": float(gamma),
                    "regime": verdict.regime.value,
                    "justification": verdict.justification,
                    "alpha_k": float(alpha_k(k)),
                    "beta_k": float(beta_k(k)),
                    "polylog_exponent": polylog,
                })
    return pd.DataFrame(rows, columns=["variant", "k", "gamma", "regime", "justification", "alpha_k", "beta_k",
                                       "polylog_exponent"])


def gamma_grid(start: float, stop: float, step: float) -> List[float]:
    """Inclusive grid built from exact rationals, so 2.05 * 20 steps land on 3.0 exactly."""
    a, b, s = _exact(start), _exact(stop), _exact(step)
    if s <= 0:
        raise ConfigurationError(f"step must be > 0, got {step}")
    count = int((b - a) / s)
    return [float(a + i * s) for i in range(count + 1)]

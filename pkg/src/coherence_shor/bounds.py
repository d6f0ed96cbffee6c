"""Closed-form success-probability bounds and the supporting product lemma.

The lower bound is (4/pi^2) * (phi(r)/r) * prod_l (1 + C_l M_l)/2 and the
upper bound min{ (phi(r)/2^L) * (1 + 2*floor(2^L/r^2)) * prod_l (1 + C_l M_l), 1 },
where C_l is the cohering power of the block's preparation and M_l the NSID
measure of its detection.  The upper-bound prefactor exists in two published
variants differing by a factor of two on the floor term; the proved form is
the default and the other is exposed behind a flag.  All prefactors are
computed in exact rationals and converted to float once.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .measures import cohering_power, nsid_qubit
from .numtheory import FactorInstance, euler_totient, f_bounds, totient_ratio
from .protocol import ProtocolConfig

FOUR_OVER_PI_SQ = 4.0 / math.pi**2


def per_block_measures(config: ProtocolConfig) -> list[tuple[float, float]]:
    """(cohering power, NSID) of each block's channel pair."""
    return [
        (cohering_power(theta).value, nsid_qubit(lam).value)
        for theta, lam in zip(config.prep, config.detect)
    ]


def lower_bound(instance: FactorInstance, measures: list[tuple[float, float]]) -> float:
    """(4/pi^2) (phi(r)/r) prod (1 + C_l M_l)/2."""
    _check_measures(measures, instance.L)
    prod = 1.0
    for c, m in measures:
        prod *= (1.0 + c * m) / 2.0
    return FOUR_OVER_PI_SQ * float(totient_ratio(instance.r)) * prod


def upper_bound(instance: FactorInstance, measures: list[tuple[float, float]], variant: str = "sm") -> float:
    """min{ prefactor * prod (1 + C_l M_l), 1 } with the variant's floor term.

    variant "sm" uses 1 + 2*floor(q/r^2) (the proved form); variant "main"
    uses 1 + floor(q/r^2).  Neither is declared correct; they differ by a
    factor of two on the floor term only.
    """
    _check_measures(measures, instance.L)
    floor_term = instance.q // (instance.r * instance.r)
    if variant == "sm":
        coeff = 1 + 2 * floor_term
    elif variant == "main":
        coeff = 1 + floor_term
    else:
        raise ValueError(f"unknown variant {variant!r}")
    prefactor = Fraction(euler_totient(instance.r) * coeff, instance.q)
    prod = 1.0
    for c, m in measures:
        prod *= 1.0 + c * m
    return min(float(prefactor) * prod, 1.0)


def _check_measures(measures, L: int) -> None:
    if len(measures) != L:
        raise ValueError(f"need {L} per-block measure pairs, got {len(measures)}")
    for c, m in measures:
        if not (0.0 <= c <= 1.0 and 0.0 <= m <= 1.0):
            raise ValueError(f"measures must lie in [0, 1], got ({c}, {m})")


def classical_bounds(instance: FactorInstance) -> tuple[Fraction, Fraction]:
    """Exact bracket for the incoherent protocol's success probability: f_bounds / 2**L."""
    lo, hi = f_bounds(instance)
    return Fraction(lo, instance.q), Fraction(hi, instance.q)


def viete_product(L: int) -> float:
    """prod_{l=1..L} cos^2(pi / 2**(l+1)); decreasing in L with limit 4/pi^2."""
    if L < 1:
        raise ValueError(f"need L >= 1, got {L}")
    prod = 1.0
    for l in range(1, L + 1):
        prod *= math.cos(math.pi / 2 ** (l + 1)) ** 2
    return prod


def product_sandwich_check(coeffs, slack: float = 1e-12) -> bool:
    """Verify (4/pi^2) prod (1+a_l)/2 <= prod (1+a_l cos(pi/2^l))/2 <= prod (1+a_l)/2."""
    plain, damped = 1.0, 1.0
    for l, a in enumerate(coeffs, start=1):
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"coefficients must lie in [0, 1], got {a}")
        plain *= (1.0 + a) / 2.0
        damped *= (1.0 + a * math.cos(math.pi / 2**l)) / 2.0
    return FOUR_OVER_PI_SQ * plain <= damped + slack and damped <= plain + slack


@dataclass(frozen=True)
class BoundReport:
    """Every bound for one configuration, with the exact value when available."""

    lower: float
    upper: float
    classical_lo: Fraction
    classical_hi: Fraction
    exact: float | None
    per_block_factors: tuple[tuple[float, float], ...]

    def to_json_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "classical_lo": f"{self.classical_lo.numerator}/{self.classical_lo.denominator}",
            "classical_hi": f"{self.classical_hi.numerator}/{self.classical_hi.denominator}",
            "exact": self.exact,
            "per_block_factors": [list(pair) for pair in self.per_block_factors],
        }


def bound_report(config: ProtocolConfig, exact: float | None = None, variant: str = "sm") -> BoundReport:
    measures = per_block_measures(config)
    lo, hi = classical_bounds(config.instance)
    return BoundReport(
        lower=lower_bound(config.instance, measures),
        upper=upper_bound(config.instance, measures, variant=variant),
        classical_lo=lo,
        classical_hi=hi,
        exact=exact,
        per_block_factors=tuple(measures),
    )

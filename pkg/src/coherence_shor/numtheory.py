"""Integer arithmetic behind order finding.

Multiplicative orders, Euler's totient, continued fractions with their
convergents, the candidate outcome sets used by the classical post-processing,
and the counting function f(N, r) = number of register outcomes whose
continued-fraction post-processing recovers the order exactly.

All fraction comparisons are done in exact integer arithmetic (cross
multiplication); no floats enter any membership test.  Integers are assumed to
stay at desk scale (N < 2**31), which keeps every intermediate below 128 bits.
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction


class NotCoprime(ValueError):
    """Base and modulus (or rotation index and order) share a factor."""


class OddOrder(ValueError):
    """The order is odd, so the square-root factoring trick does not apply."""


class TrivialRoot(ValueError):
    """x**(r/2) is a trivial square root of 1 mod N; a fresh base is needed."""


class ZeroDenominator(ValueError):
    """Continued fractions need a positive denominator."""


def multiplicative_order(N: int, x: int) -> int:
    """Least r >= 1 with x**r = 1 mod N, by iterated modular multiplication."""
    if N < 2 or not 1 <= x < N:
        raise ValueError(f"need N >= 2 and 1 <= x < N, got N={N}, x={x}")
    if math.gcd(x, N) != 1:
        raise NotCoprime(f"gcd({x}, {N}) = {math.gcd(x, N)} != 1")
    r, y = 1, x % N
    while y != 1:
        y = (y * x) % N
        r += 1
    return r


def _prime_factors(n: int) -> list[int]:
    """Distinct prime factors of n by trial division (desk scale)."""
    factors = []
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            factors.append(p)
            while m % p == 0:
                m //= p
        p += 1 if p == 2 else 2
    if m > 1:
        factors.append(m)
    return factors


def euler_totient(r: int) -> int:
    """Count of 1 <= j <= r coprime to r; phi(1) = 1."""
    if r < 1:
        raise ValueError(f"need r >= 1, got {r}")
    result = r
    for p in _prime_factors(r):
        result -= result // p
    return result


def totient_ratio(r: int) -> Fraction:
    """phi(r)/r as an exact rational."""
    return Fraction(euler_totient(r), r)


def coprime_residues(r: int) -> list[int]:
    """Rotation indices j in [0, r) with gcd(j, r) = 1.

    For r = 1 this is [0]: the single rotation is the identity and the
    convergent 0/1 recovers the (trivial) order.
    """
    if r == 1:
        return [0]
    return [j for j in range(1, r) if math.gcd(j, r) == 1]


def is_true_order(N: int, x: int, v: int) -> bool:
    """Whether v is exactly the multiplicative order of x mod N.

    Needs only modular exponentiation and the prime factorization of v, so a
    classical post-processor can run this check without knowing the order in
    advance: x**v = 1 plus minimality over the maximal proper divisors v/p.
    """
    if v < 1 or pow(x, v, N) != 1:
        return False
    return all(pow(x, v // p, N) != 1 for p in _prime_factors(v)) if v > 1 else True


@dataclass(frozen=True)
class FactorInstance:
    """An order-finding instance: modulus N, base x, order r, register size L.

    In canonical mode the control register satisfies N**2 < 2**L < 2*N**2;
    test mode permits any L >= 1 so that cross-checks against the brute-force
    oracle stay small.
    """

    N: int
    x: int
    r: int
    L: int
    test_mode: bool = False

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"need N >= 2, got {self.N}")
        if not 1 <= self.x < self.N:
            raise ValueError(f"need 1 <= x < N, got x={self.x}, N={self.N}")
        if math.gcd(self.x, self.N) != 1:
            raise NotCoprime(f"gcd({self.x}, {self.N}) != 1")
        if not is_true_order(self.N, self.x, self.r):
            raise ValueError(f"{self.r} is not the order of {self.x} mod {self.N}")
        if self.L < 1:
            raise ValueError(f"need L >= 1, got {self.L}")
        if not self.test_mode and not self.N**2 < self.q < 2 * self.N**2:
            raise ValueError(
                f"L={self.L} is not canonical for N={self.N} "
                f"(need N**2 < 2**L < 2*N**2); pass test_mode=True to override"
            )

    @property
    def q(self) -> int:
        """Register dimension 2**L."""
        return 1 << self.L

    @classmethod
    def create(cls, N: int, x: int, L: int | None = None, test_mode: bool = False) -> "FactorInstance":
        """Build an instance, deriving the order and (if absent) the canonical L."""
        r = multiplicative_order(N, x)
        if L is None:
            L = (N * N).bit_length()  # smallest L with 2**L > N**2
        return cls(N=N, x=x, r=r, L=L, test_mode=test_mode)


def extract_factor(instance: FactorInstance) -> set[int]:
    """Non-trivial factors of N from gcd(x**(r/2) +- 1, N).

    Raises OddOrder / TrivialRoot when the square-root trick does not apply;
    both signal that the factoring loop should re-draw the base.
    """
    N, x, r = instance.N, instance.x, instance.r
    if r % 2:
        raise OddOrder(f"order {r} of {x} mod {N} is odd")
    a = pow(x, r // 2, N)
    if a == N - 1 or a == 1:
        raise TrivialRoot(f"{x}**{r // 2} = {a} mod {N} is a trivial root of 1")
    factors = {math.gcd(a - 1, N), math.gcd(a + 1, N)} - {1, N}
    if not factors:
        raise AssertionError(f"gcd lemma violated for N={N}, x={x}, r={r}")
    return factors


@dataclass(frozen=True)
class ContinuedFraction:
    """Finite continued fraction with all convergents in lowest terms."""

    coefficients: tuple[int, ...]
    convergents: tuple[Fraction, ...]

    def value(self) -> Fraction:
        """Fold the coefficients back into the represented rational."""
        acc = Fraction(self.coefficients[-1])
        for a in reversed(self.coefficients[:-1]):
            acc = a + 1 / acc
        return acc


def continued_fraction(num: int, den: int) -> ContinuedFraction:
    """Euclidean continued-fraction expansion of num/den, 0 <= num, den >= 1."""
    if den < 1:
        raise ZeroDenominator(f"need den >= 1, got {den}")
    if num < 0:
        raise ValueError(f"need num >= 0, got {num}")
    coeffs = []
    a, b = num, den
    while True:
        quot, rem = divmod(a, b)
        coeffs.append(quot)
        if rem == 0:
            break
        a, b = b, rem
    convs = []
    p_prev, p_curr = 1, coeffs[0]
    q_prev, q_curr = 0, 1
    convs.append(Fraction(p_curr, q_curr))
    for coeff in coeffs[1:]:
        p_prev, p_curr = p_curr, coeff * p_curr + p_prev
        q_prev, q_curr = q_curr, coeff * q_curr + q_prev
        convs.append(Fraction(p_curr, q_curr))
    return ContinuedFraction(tuple(coeffs), tuple(convs))


@dataclass(frozen=True)
class OrderEstimate:
    """Outcome of the continued-fraction post-processing of one measurement."""

    success: bool
    estimate: int | None
    convergent: Fraction | None


def cfa_estimate_order(k: int, instance: FactorInstance) -> OrderEstimate:
    """Post-process outcome k: scan convergents of k/q in increasing order.

    The first convergent denominator d < N passing the modular check
    x**d = 1 mod N is accepted; success means the accepted value equals the
    order.  Failure is a normal outcome, not an error.
    """
    if not 0 <= k < instance.q:
        raise ValueError(f"need 0 <= k < {instance.q}, got {k}")
    cf = continued_fraction(k, instance.q)
    for conv in cf.convergents:
        d = conv.denominator
        if d >= instance.N:
            break  # denominators increase, nothing smaller follows
        if pow(instance.x, d, instance.N) == 1:
            return OrderEstimate(d == instance.r, d, conv)
    return OrderEstimate(False, None, None)


class CandidateKind(Enum):
    """Which outcome window around j/r the set collects."""

    K1_BETA = "K1(beta)"  # |j/r - k/q| <= (q-1)/(2*q*r**2): guaranteed recovery
    K2 = "K2"             # |j/r - k/q| <= 1/r**2: necessary for recovery


@dataclass(frozen=True)
class CandidateSet:
    """Sorted outcomes k in [0, q) within the chosen window around j/r."""

    j: int
    kind: CandidateKind
    members: tuple[int, ...]


def _in_window(k: int, j: int, r: int, q: int, kind: CandidateKind) -> bool:
    # |j/r - k/q| = |j*q - k*r| / (r*q); both bounds cleared by cross multiplication
    diff = abs(j * q - k * r)
    if kind is CandidateKind.K2:
        return diff * r <= q
    return 2 * diff * r <= q - 1


def candidate_set(j: int, instance: FactorInstance, kind: CandidateKind) -> CandidateSet:
    """Exact membership for the outcome window of rotation index j."""
    r, q = instance.r, instance.q
    if not 0 <= j < max(r, 1):
        raise ValueError(f"need 0 <= j < r, got j={j}, r={r}")
    if math.gcd(j, r) != 1:
        raise NotCoprime(f"gcd({j}, {r}) != 1")
    center = Fraction(j * q, r)
    halfwidth = Fraction(q, r * r) if kind is CandidateKind.K2 else Fraction(q - 1, 2 * r * r)
    lo = max(0, math.ceil(center - halfwidth))
    hi = min(q - 1, math.floor(center + halfwidth))
    members = tuple(k for k in range(lo, hi + 1) if _in_window(k, j, r, q, kind))
    return CandidateSet(j, kind, members)


def candidate_union(instance: FactorInstance, kind: CandidateKind = CandidateKind.K2) -> tuple[int, ...]:
    """Union of the windows over all rotation indices coprime to r, sorted."""
    members: set[int] = set()
    for j in coprime_residues(instance.r):
        members.update(candidate_set(j, instance, kind).members)
    return tuple(sorted(members))


def successful_outcomes(instance: FactorInstance, method: str = "fast") -> tuple[int, ...]:
    """All k in [0, q) whose post-processing recovers the order, sorted.

    "fast" scans only the union of the K2 windows (successes cannot occur
    elsewhere); "full" enumerates the whole register range.  Both methods must
    agree, which the test suite checks.
    """
    if method == "full":
        ks = range(instance.q)
    elif method == "fast":
        ks = candidate_union(instance, CandidateKind.K2)
    else:
        raise ValueError(f"unknown method {method!r}")
    return tuple(k for k in ks if cfa_estimate_order(k, instance).success)


def count_f(instance: FactorInstance, method: str = "fast") -> int:
    """f(N, r): number of outcomes whose post-processing yields the order."""
    return len(successful_outcomes(instance, method))


def f_bounds(instance: FactorInstance) -> tuple[int, int]:
    """Closed-form bracket for f(N, r): (2*phi*floor((q-1)/(2r^2)), phi*(1+2*floor(q/r^2)))."""
    phi = euler_totient(instance.r)
    r2 = instance.r * instance.r
    lower = 2 * phi * ((instance.q - 1) // (2 * r2))
    upper = phi * (1 + 2 * (instance.q // r2))
    return lower, upper

"""Exact and sampled simulation of the sequential order-finding protocol.

Each of the L blocks prepares a fresh control qubit through the standardized
preparation (uniform populations, coherence c_l >= 0 on the x axis), entangles
it with the auxiliary register via a controlled modular-multiplication power,
applies the classically controlled feedback rotation, the phase-aligned
detection channel, total dephasing, and a computational-basis readout.

Two independent simulation routes are provided:

* the factorized route evaluates, for each rotation index j, the ordered
  product of per-block outcome probabilities (`outcome_probability`), where
  block l sees the phase 2*pi*(j/r * 2**(L-l) - feedback) exactly reduced
  modulo one before the single float conversion;

* the brute-force oracle propagates the joint control (x) auxiliary density
  matrix (dimension 2N) through all L blocks, applying the controlled
  permutation unitaries directly and branching on both measurement outcomes,
  with the auxiliary register initialized to |1>.

The two must agree outcome by outcome; the oracle never uses the rotation
decomposition, so the agreement validates both the encoding lemma and the
per-block factorization.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .numtheory import (
    FactorInstance,
    CandidateKind,
    candidate_union,
    cfa_estimate_order,
    count_f,
    successful_outcomes,
)
from .channels import (
    ChannelFamily,
    QuantumChannel,
    apply,
    basis_state,
    dephase,
    hadamard_like,
    is_unital,
    prep_standardize,
)

EXHAUSTIVE_MAX_L = 16
ORACLE_MAX_L = 12
ORACLE_MAX_N = 36


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, trial): streams are independent
    and order independent, so trials can run under any parallel schedule."""
    key = np.array([seed & ((1 << 64) - 1), trial & ((1 << 64) - 1)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class NotUnital(ValueError):
    """Detection channels must be unital."""


class TooLarge(ValueError):
    """Requested enumeration exceeds the mode's capacity cap."""


def _broadcast(channels, L: int, what: str) -> tuple[QuantumChannel, ...]:
    if isinstance(channels, (QuantumChannel, ChannelFamily)):
        channels = [channels] * L
    out = []
    for c in channels:
        out.append(c.channel() if isinstance(c, ChannelFamily) else c)
    if len(out) != L:
        raise ValueError(f"need {L} {what} channels, got {len(out)}")
    return tuple(out)


@dataclass(frozen=True)
class ProtocolConfig:
    """Instance plus per-block preparation/detection channels and RNG seed."""

    instance: FactorInstance
    prep: tuple[QuantumChannel, ...]
    detect: tuple[QuantumChannel, ...]
    seed: int = 0
    p_prep: tuple[float, ...] | None = None   # recorded when built from families
    p_detect: tuple[float, ...] | None = None

    def __post_init__(self):
        L = self.instance.L
        if len(self.prep) != L or len(self.detect) != L:
            raise ValueError(f"need {L} preparation and detection channels")
        for chan in self.prep + self.detect:
            if chan.in_dim != 2 or chan.out_dim != 2:
                raise ValueError("block channels must be qubit channels")
        for chan in self.detect:
            if not is_unital(chan):
                raise NotUnital("every detection channel must be unital")

    @classmethod
    def from_families(cls, instance: FactorInstance, p_prep, p_detect, seed: int = 0) -> "ProtocolConfig":
        """Build from interpolation parameters (scalars or per-block sequences)."""
        L = instance.L
        pp = [float(p_prep)] * L if np.isscalar(p_prep) else [float(p) for p in p_prep]
        pd = [float(p_detect)] * L if np.isscalar(p_detect) else [float(p) for p in p_detect]
        prep = _broadcast([ChannelFamily("prep", p) for p in pp], L, "preparation")
        detect = _broadcast([ChannelFamily("detect", p) for p in pd], L, "detection")
        return cls(instance=instance, prep=prep, detect=detect, seed=seed,
                   p_prep=tuple(pp), p_detect=tuple(pd))


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probability of each L-bit outcome k, conditioned on rotation index j
    (j is None for the oracle's physical mixture)."""

    j: int | None
    probs: np.ndarray

    def total(self) -> float:
        return float(np.sum(self.probs))


@dataclass(frozen=True)
class SuccessReport:
    """Success probability of one configuration.

    per_j maps each rotation index to its conditional success probability;
    it is None for the oracle route, which cannot decompose by j without
    using the encoding lemma it is meant to validate.
    """

    exact: float
    classical: Fraction
    per_j: dict[int, float] | None
    candidates_examined: int

    def to_json_dict(self, instance: FactorInstance, p_prep=None, p_detect=None,
                     lower: float | None = None, upper: float | None = None) -> dict:
        return {
            "N": instance.N,
            "x": instance.x,
            "r": instance.r,
            "L": instance.L,
            "p_prep": p_prep,
            "p_detect": p_detect,
            "exact": self.exact,
            "classical": float(self.classical),
            "lower_bound": lower,
            "upper_bound": upper,
        }


def encoding_phase(j: int, l: int, instance: FactorInstance) -> float:
    """Rotation angle 2*pi * j * 2**(L-l) / r reduced mod 2*pi, exact until the
    single float conversion."""
    if not 0 <= j < instance.r:
        raise ValueError(f"need 0 <= j < r, got j={j}")
    if not 1 <= l <= instance.L:
        raise ValueError(f"need 1 <= l <= L, got l={l}")
    num = (j * (1 << (instance.L - l))) % instance.r
    return 2.0 * math.pi * num / instance.r


def feedback_phase(bits, l: int) -> float:
    """Accumulated feedback angle 2*pi * sum_{a=2..l} k_{l-a} / 2**a.

    bits holds the previously measured k_0 ... k_{l-2}; the sum telescopes to
    (prefix mod 2**(l-1)) / 2**l, an exact dyadic rational.
    """
    if l < 1:
        raise ValueError(f"need l >= 1, got {l}")
    prefix = 0
    for i, b in enumerate(bits[: l - 1]):
        prefix |= (b & 1) << i
    return 2.0 * math.pi * prefix / (1 << l)


class _BlockEngine:
    """Per-block precomputation shared by the exact and sampling routes.

    After standardization the block state is 1/2 + c_l sigma_x, so the full
    2x2 algebra collapses to p(b) = 1/2 + 2 c_l Re(e^{-i theta} g_l[b]) with
    g_l[b] the (b,b,0,1) entry of the phase-aligned detection channel.  The
    accumulated phase fraction is reduced as an exact rational and converted
    to a float exactly once per block.
    """

    def __init__(self, config: ProtocolConfig):
        self.instance = config.instance
        self.c = []
        self.g = []
        for theta, lam in zip(config.prep, config.detect):
            state = prep_standardize(theta, basis_state(0, 2))
            self.c.append(float(state[0, 1].real))
            rep = hadamard_like(lam).index_rep
            self.g.append((complex(rep[0, 0, 0, 1]), complex(rep[1, 1, 0, 1])))

    def block_probs(self, j: int, prefix: int, l: int) -> tuple[float, float]:
        """(p0, p1) for block l given rotation index j and the measured prefix."""
        inst = self.instance
        enc = (j * (1 << (inst.L - l))) % inst.r
        den = inst.r << l
        num = (enc * (1 << l) - (prefix & ((1 << (l - 1)) - 1)) * inst.r) % den
        z = complex(math.cos(2.0 * math.pi * num / den), -math.sin(2.0 * math.pi * num / den))
        c = self.c[l - 1]
        g0, g1 = self.g[l - 1]
        p0 = 0.5 + 2.0 * c * (z * g0).real
        return p0, 1.0 - p0


def block_distribution(theta: QuantumChannel, lam: QuantumChannel, j: int, bits,
                       l: int, instance: FactorInstance) -> tuple[float, float]:
    """Single-block outcome probabilities by explicit 2x2 matrix algebra.

    Pipeline: standardized preparation, phase rotation by the encoding angle
    minus the feedback angle, phase-aligned detection channel, dephasing,
    diagonal readout.  Must equal the closed form
    1/2 * (1 + 2 c_l * M~(Lambda_l) * cos(theta_l + pi b)) on every input.
    """
    if not is_unital(lam):
        raise NotUnital("detection channel must be unital")
    rho = prep_standardize(theta, basis_state(0, 2))
    angle = encoding_phase(j, l, instance) - feedback_phase(bits, l)
    u = np.diag([1.0, complex(math.cos(angle), math.sin(angle))])
    rho = u @ rho @ u.conj().T
    rho = dephase(apply(hadamard_like(lam), rho))
    return float(rho[0, 0].real), float(rho[1, 1].real)


def outcome_probability(k: int, j: int, config: ProtocolConfig, _engine: _BlockEngine | None = None) -> float:
    """p_k^(j): ordered product of block probabilities, feeding each block the
    prefix of already-measured bits."""
    inst = config.instance
    if not 0 <= k < inst.q:
        raise ValueError(f"need 0 <= k < q, got {k}")
    engine = _engine if _engine is not None else _BlockEngine(config)
    prob = 1.0
    prefix = 0
    for l in range(1, inst.L + 1):
        bit = (k >> (l - 1)) & 1
        p0, p1 = engine.block_probs(j, prefix, l)
        prob *= p1 if bit else p0
        prefix |= bit << (l - 1)
    return prob


def outcome_distribution(config: ProtocolConfig, j: int) -> OutcomeDistribution:
    """Full outcome distribution for rotation index j by breadth-first sweep
    over measured prefixes (exhaustive; capped at L <= EXHAUSTIVE_MAX_L)."""
    inst = config.instance
    if inst.L > EXHAUSTIVE_MAX_L:
        raise TooLarge(f"L={inst.L} exceeds exhaustive cap {EXHAUSTIVE_MAX_L}")
    engine = _BlockEngine(config)
    weights = np.array([1.0])
    for l in range(1, inst.L + 1):
        nxt = np.empty(2 * len(weights))
        half = len(weights)
        for prefix, w in enumerate(weights):
            p0, p1 = engine.block_probs(j, prefix, l)
            nxt[prefix] = w * p0
            nxt[prefix + half] = w * p1
        weights = nxt
    return OutcomeDistribution(j, weights)


def mixed_distribution(config: ProtocolConfig) -> OutcomeDistribution:
    """Uniform mixture over rotation indices: (1/r) sum_j p^(j)."""
    inst = config.instance
    probs = np.zeros(inst.q)
    for j in range(inst.r):
        probs += outcome_distribution(config, j).probs
    return OutcomeDistribution(None, probs / inst.r)


def exact_success_probability(config: ProtocolConfig, mode: str = "fast") -> SuccessReport:
    """Exact protocol success probability, averaged uniformly over j.

    "fast" sums only over the union of the K2 candidate windows filtered by
    post-processing success; "exhaustive" enumerates all 2**L outcomes and
    must agree (the inclusion it tests is exactly the approximation theorem's
    necessity direction).
    """
    inst = config.instance
    if mode == "fast":
        examined = candidate_union(inst, CandidateKind.K2)
    elif mode == "exhaustive":
        if inst.L > EXHAUSTIVE_MAX_L:
            raise TooLarge(f"L={inst.L} exceeds exhaustive cap {EXHAUSTIVE_MAX_L}")
        examined = tuple(range(inst.q))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    good = [k for k in examined if cfa_estimate_order(k, inst).success]
    engine = _BlockEngine(config)
    per_j = {}
    for j in range(inst.r):
        per_j[j] = sum(outcome_probability(k, j, config, _engine=engine) for k in good)
    exact = sum(per_j.values()) / inst.r
    return SuccessReport(
        exact=exact,
        classical=classical_limit_probability(inst),
        per_j=per_j,
        candidates_examined=len(examined),
    )


def classical_limit_probability(instance: FactorInstance) -> Fraction:
    """Success probability of the incoherent protocol: f(N, r) / 2**L, exact."""
    return Fraction(count_f(instance), instance.q)


def _joint_block_ops(config: ProtocolConfig):
    """Per-block data for the joint simulation: standardized preparation state,
    controlled permutation unitary, and phase-aligned detection Kraus set."""
    inst = config.instance
    N = inst.N
    ops = []
    for l in range(1, inst.L + 1):
        rho_l = prep_standardize(config.prep[l - 1], basis_state(0, 2))
        mult = pow(inst.x, 1 << (inst.L - l), inst.N)
        v = np.zeros((N, N), dtype=complex)
        for n in range(N):
            v[(mult * n) % N, n] = 1.0
        cu = np.zeros((2 * N, 2 * N), dtype=complex)
        cu[:N, :N] = np.eye(N)
        cu[N:, N:] = v
        kraus = tuple(np.kron(k, np.eye(N)) for k in hadamard_like(config.detect[l - 1]).kraus)
        ops.append((rho_l, cu, kraus))
    return ops


def oracle_distribution(config: ProtocolConfig) -> OutcomeDistribution:
    """Outcome distribution from the joint control (x) auxiliary simulation.

    The auxiliary register starts in |1>, persists across blocks, and is acted
    on by the controlled modular-multiplication powers directly; both
    measurement outcomes are followed at every block (2**L leaf paths).
    """
    inst = config.instance
    if inst.L > ORACLE_MAX_L:
        raise TooLarge(f"L={inst.L} exceeds oracle cap {ORACLE_MAX_L}")
    if inst.N > ORACLE_MAX_N:
        raise TooLarge(f"N={inst.N} exceeds oracle cap {ORACLE_MAX_N}")
    N = inst.N
    ops = _joint_block_ops(config)
    probs = np.zeros(inst.q)

    def descend(chi: np.ndarray, l: int, prefix: int) -> None:
        if l > inst.L:
            probs[prefix] = float(np.trace(chi).real)
            return
        rho_l, cu, kraus = ops[l - 1]
        joint = np.kron(rho_l, chi)
        joint = cu @ joint @ cu.conj().T
        fb = feedback_phase([(prefix >> i) & 1 for i in range(l - 1)], l)
        rot = np.kron(np.diag([1.0, complex(math.cos(fb), -math.sin(fb))]), np.eye(N))
        joint = rot @ joint @ rot.conj().T
        joint = sum(k @ joint @ k.conj().T for k in kraus)
        for b in (0, 1):
            block = joint[b * N : (b + 1) * N, b * N : (b + 1) * N]
            descend(block, l + 1, prefix | (b << (l - 1)))

    chi0 = np.zeros((N, N), dtype=complex)
    chi0[1, 1] = 1.0
    descend(chi0, 1, 0)
    return OutcomeDistribution(None, probs)


def brute_force_oracle(config: ProtocolConfig) -> tuple[SuccessReport, OutcomeDistribution]:
    """Success probability from the joint simulation (no per-j decomposition)."""
    dist = oracle_distribution(config)
    inst = config.instance
    exact = float(sum(dist.probs[k] for k in successful_outcomes(inst, "full")))
    report = SuccessReport(
        exact=exact,
        classical=classical_limit_probability(inst),
        per_j=None,
        candidates_examined=inst.q,
    )
    return report, dist


def sample_trials(config: ProtocolConfig, n_trials: int) -> dict:
    """Monte Carlo protocol runs with a counter-based RNG keyed by (seed, trial).

    Each trial draws j uniformly, samples the L bits sequentially from the
    block distributions, and runs the continued-fraction post-processing.
    Trials are order independent, so results are reproducible under any
    parallel schedule.
    """
    if n_trials < 1:
        raise ValueError(f"need n_trials >= 1, got {n_trials}")
    inst = config.instance
    engine = _BlockEngine(config)
    successes = 0
    for trial in range(n_trials):
        rng = trial_rng(config.seed, trial)
        j = int(rng.integers(inst.r))
        prefix = 0
        for l in range(1, inst.L + 1):
            _, p1 = engine.block_probs(j, prefix, l)
            bit = 1 if rng.random() < p1 else 0
            prefix |= bit << (l - 1)
        if cfa_estimate_order(prefix, inst).success:
            successes += 1
    frequency = successes / n_trials
    stderr = math.sqrt(frequency * (1.0 - frequency) / n_trials)
    return {"successes": successes, "frequency": frequency, "stderr": stderr}

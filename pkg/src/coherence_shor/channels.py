"""Finite-dimensional states and channels in the incoherent (computational) basis.

Conventions
-----------
States are dim x dim complex numpy arrays.  A channel holds a non-empty tuple
of Kraus operators, each out_dim x in_dim, plus the eagerly materialized index
representation

    rep[k, l, n, m] = <k| Lambda(|n><m|) |l|> = sum_a K_a[k, n] * conj(K_a[l, m]).

The Choi matrix follows J = sum_{nm} |n><m| (x) Lambda(|n><m|), i.e. composite
row index (n, k) with the input factor first.  Trace preservation is then
equivalent to the partial trace over the output factor being the identity.

Tolerances: Hermiticity/trace tests use 1e-10, the PSD eigenvalue floor is
-1e-9.  Everything here is at most 36-dimensional, so double precision leaves
ample headroom.
"""

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np

TAU_HERM = 1e-10
TAU_PSD = 1e-9


class DimensionMismatch(ValueError):
    """Operands act on incompatible spaces."""


class NotCPTP(ValueError):
    """The data does not define a completely positive trace-preserving map."""


class NotDensityMatrix(ValueError):
    """Matrix fails the Hermiticity / unit-trace / positivity checks."""


def ket(i: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[i] = 1.0
    return v


def basis_state(i: int, dim: int) -> np.ndarray:
    """Projector |i><i| as a density matrix."""
    rho = np.zeros((dim, dim), dtype=complex)
    rho[i, i] = 1.0
    return rho


def assert_density(rho: np.ndarray, tau_h: float = TAU_HERM, tau_psd: float = TAU_PSD) -> None:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NotDensityMatrix(f"not square: shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tau_h:
        raise NotDensityMatrix("not Hermitian")
    if abs(np.trace(rho) - 1.0) > tau_h:
        raise NotDensityMatrix(f"trace {np.trace(rho)} != 1")
    if np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)) < -tau_psd:
        raise NotDensityMatrix("negative eigenvalue")


def dephase(rho: np.ndarray) -> np.ndarray:
    """Total dephasing: zero all off-diagonal entries."""
    return np.diag(np.diag(np.asarray(rho)))


@dataclass(frozen=True)
class QuantumChannel:
    """CPTP map stored as Kraus operators with derived index representation."""

    kraus: tuple[np.ndarray, ...]
    index_rep: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.kraus:
            raise NotCPTP("need at least one Kraus operator")
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        shape = ks[0].shape
        if len(shape) != 2 or any(k.shape != shape for k in ks):
            raise DimensionMismatch("Kraus operators must share one out_dim x in_dim shape")
        total = sum(k.conj().T @ k for k in ks)
        if np.max(np.abs(total - np.eye(shape[1]))) > TAU_HERM:
            raise NotCPTP("sum K^dag K != identity (not trace preserving)")
        rep = np.einsum("akn,alm->klnm", np.stack(ks), np.stack(ks).conj())
        object.__setattr__(self, "kraus", ks)
        object.__setattr__(self, "index_rep", rep)

    @property
    def out_dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def in_dim(self) -> int:
        return self.kraus[0].shape[1]


def apply(channel: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    """sum_a K_a rho K_a^dag (defined for any input matrix, not just states)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (channel.in_dim, channel.in_dim):
        raise DimensionMismatch(f"state shape {rho.shape} vs in_dim {channel.in_dim}")
    out = np.zeros((channel.out_dim, channel.out_dim), dtype=complex)
    for k in channel.kraus:
        out += k @ rho @ k.conj().T
    return out


def adjoint_apply(channel: QuantumChannel, obs: np.ndarray) -> np.ndarray:
    """Heisenberg picture: sum_a K_a^dag H K_a, so Tr[H L(rho)] = Tr[L^dag(H) rho]."""
    obs = np.asarray(obs, dtype=complex)
    if obs.shape != (channel.out_dim, channel.out_dim):
        raise DimensionMismatch(f"observable shape {obs.shape} vs out_dim {channel.out_dim}")
    out = np.zeros((channel.in_dim, channel.in_dim), dtype=complex)
    for k in channel.kraus:
        out += k.conj().T @ obs @ k
    return out


def compose(second: QuantumChannel, first: QuantumChannel) -> QuantumChannel:
    """second after first."""
    if first.out_dim != second.in_dim:
        raise DimensionMismatch(f"cannot chain out_dim {first.out_dim} into in_dim {second.in_dim}")
    return QuantumChannel(tuple(k2 @ k1 for k2 in second.kraus for k1 in first.kraus))


def tensor(a: QuantumChannel, b: QuantumChannel) -> QuantumChannel:
    return QuantumChannel(tuple(np.kron(ka, kb) for ka in a.kraus for kb in b.kraus))


def mix(channels: list[QuantumChannel], weights: list[float]) -> QuantumChannel:
    """Convex mixture sum_i w_i Lambda_i."""
    if len(channels) != len(weights) or abs(sum(weights) - 1.0) > TAU_HERM:
        raise ValueError("weights must match channels and sum to 1")
    kraus = []
    for chan, w in zip(channels, weights):
        if w < 0:
            raise ValueError("weights must be nonnegative")
        kraus.extend(math.sqrt(w) * k for k in chan.kraus)
    return QuantumChannel(tuple(kraus))


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi matrix J = sum_{nm} |n><m| (x) Lambda(|n><m|)."""

    in_dim: int
    out_dim: int
    matrix: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)

    def output_partial_trace(self) -> np.ndarray:
        """Trace over the output factor; identity on the input iff TP."""
        j = self.matrix.reshape(self.in_dim, self.out_dim, self.in_dim, self.out_dim)
        return np.einsum("nkmk->nm", j)


def choi(channel: QuantumChannel) -> ChoiMatrix:
    d_in, d_out = channel.in_dim, channel.out_dim
    # J[(n,k),(m,l)] = rep[k,l,n,m]
    j = channel.index_rep.transpose(2, 0, 3, 1).reshape(d_in * d_out, d_in * d_out)
    return ChoiMatrix(d_in, d_out, j)


def from_choi(j: ChoiMatrix | np.ndarray, in_dim: int | None = None, out_dim: int | None = None) -> QuantumChannel:
    """Reconstruct Kraus operators from a Choi matrix, validating CPTP."""
    if isinstance(j, ChoiMatrix):
        in_dim, out_dim, mat = j.in_dim, j.out_dim, j.matrix
    else:
        mat = np.asarray(j, dtype=complex)
        if in_dim is None or out_dim is None:
            raise ValueError("raw Choi matrices need explicit in_dim and out_dim")
    if mat.shape != (in_dim * out_dim, in_dim * out_dim):
        raise DimensionMismatch(f"Choi shape {mat.shape} vs dims {in_dim}x{out_dim}")
    if np.max(np.abs(mat - mat.conj().T)) > TAU_HERM:
        raise NotCPTP("Choi matrix not Hermitian")
    evals, evecs = np.linalg.eigh(mat)
    if evals.min() < -TAU_PSD:
        raise NotCPTP(f"Choi matrix not PSD (min eigenvalue {evals.min()})")
    kraus = []
    for lam, vec in zip(evals, evecs.T):
        if lam <= TAU_PSD:
            continue
        # vec components indexed (n, beta): K[beta, n] = sqrt(lam) * vec[n, beta]
        kraus.append(math.sqrt(lam) * vec.reshape(in_dim, out_dim).T)
    if not kraus:
        raise NotCPTP("Choi matrix is zero")
    try:
        return QuantumChannel(tuple(kraus))
    except NotCPTP as exc:
        raise NotCPTP(f"Choi matrix is not trace preserving: {exc}") from exc


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel((np.eye(dim, dtype=complex),))


def unitary_channel(u: np.ndarray) -> QuantumChannel:
    return QuantumChannel((np.asarray(u, dtype=complex),))


def hadamard_channel() -> QuantumChannel:
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    return unitary_channel(h)


def phase_unitary(phases: list[float]) -> QuantumChannel:
    return unitary_channel(np.diag([cmath.exp(1j * p) for p in phases]))


def dephasing_channel(dim: int) -> QuantumChannel:
    """Total dephasing as a channel: Kraus set {|i><i|}."""
    return QuantumChannel(tuple(basis_state(i, dim) for i in range(dim)))


def permutation_channel(perm: list[int]) -> QuantumChannel:
    dim = len(perm)
    u = np.zeros((dim, dim), dtype=complex)
    for src, dst in enumerate(perm):
        u[dst, src] = 1.0
    return unitary_channel(u)


def is_unital(channel: QuantumChannel, tol: float = TAU_HERM) -> bool:
    """Lambda(1) = 1, i.e. sum K K^dag is the identity."""
    if channel.in_dim != channel.out_dim:
        return False
    total = sum(k @ k.conj().T for k in channel.kraus)
    return bool(np.max(np.abs(total - np.eye(channel.out_dim))) <= tol)


def is_mio(channel: QuantumChannel, tol: float = TAU_HERM) -> bool:
    """Maximally incoherent: cannot create coherence (Phi Delta = Delta Phi Delta).

    The defining identity is linear, so checking it on matrix units is exact:
    it reduces to every Phi(|n><n|) being diagonal.
    """
    rep = channel.index_rep
    for n in range(channel.in_dim):
        block = rep[:, :, n, n]
        if np.max(np.abs(block - np.diag(np.diag(block)))) > tol:
            return False
    return True


def is_di(channel: QuantumChannel, tol: float = TAU_HERM) -> bool:
    """Detection incoherent: cannot detect coherence (Delta Phi = Delta Phi Delta).

    Equivalent to diag(Phi(|n><m|)) = 0 for every n != m.
    """
    rep = channel.index_rep
    for n in range(channel.in_dim):
        for m in range(channel.in_dim):
            if n == m:
                continue
            if np.max(np.abs(np.diagonal(rep[:, :, n, m]))) > tol:
                return False
    return True


def prep_standardize(theta: QuantumChannel, sigma: np.ndarray) -> np.ndarray:
    """Standardized preparation: apply theta, remove the relative phase, X-twirl.

    For a qubit channel and diagonal input the result is 1/2 + c sigma_x with
    c = |[theta(sigma)]_01| >= 0: uniform populations, a single nonnegative
    real coherence, and no intrinsic phase left to interfere with the encoded
    one.
    """
    if theta.in_dim != 2 or theta.out_dim != 2:
        raise DimensionMismatch("preparation standardization is defined for qubit channels")
    sigma = np.asarray(sigma, dtype=complex)
    if np.max(np.abs(sigma - dephase(sigma))) > TAU_HERM:
        raise ValueError("input state must be incoherent (diagonal)")
    rho = apply(theta, sigma)
    z = rho[0, 1]
    phase = cmath.phase(z) if abs(z) > 0 else 0.0
    rot = np.diag([1.0, cmath.exp(1j * phase)])
    rho = rot @ rho @ rot.conj().T
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    return (rho + x @ rho @ x) / 2


def hadamard_like(lam: QuantumChannel) -> QuantumChannel:
    """Detection-side standardization: compose with the phase unitary Phi_2.

    Phi_2 = diag(1, e^{i arg Lambda_00^01}) aligns the channel's coherence
    response so that the dephased action on matrix units reads

        Delta S2[Lambda](|n><m|) = sum_k |Lambda_kk^nm| e^{i pi k (n-m)} |k><k|,

    which is verified here on all four units.  A vanishing Lambda_00^01 is not
    an error; the phase is then defined as 0.
    """
    if lam.in_dim != 2 or lam.out_dim != 2:
        raise DimensionMismatch("hadamard_like is defined for qubit channels")
    z = lam.index_rep[0, 0, 0, 1]
    phase = cmath.phase(z) if abs(z) > 0 else 0.0
    out = compose(lam, phase_unitary([0.0, phase]))
    rep = out.index_rep
    for n in range(2):
        for m in range(2):
            for k in range(2):
                want = abs(lam.index_rep[k, k, n, m]) * cmath.exp(1j * math.pi * k * (n - m))
                if abs(rep[k, k, n, m] - want) > 1e-9:
                    raise AssertionError("hadamard-like identity failed; channel is not CPTP?")
    return out


@dataclass(frozen=True)
class ChannelFamily:
    """One-parameter interpolation p * H . H^dag + (1 - p) * Delta.

    The same realization serves both roles: as a preparation it has cohering
    power p, as a detection it has NSID measure p (both checked in the tests).
    """

    kind: str  # "prep" | "detect"
    p: float

    def __post_init__(self):
        if self.kind not in ("prep", "detect"):
            raise ValueError(f"kind must be 'prep' or 'detect', got {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"need 0 <= p <= 1, got {self.p}")

    def channel(self) -> QuantumChannel:
        return mix([hadamard_channel(), dephasing_channel(2)], [self.p, 1.0 - self.p])


def _complex_to_pair(z: complex) -> list[float]:
    return [z.real, z.imag]


def channel_to_dict(obj: QuantumChannel | ChannelFamily) -> dict:
    """JSON-ready description; bit-exact for rational-valued entries."""
    if isinstance(obj, ChannelFamily):
        return {"kind": "family", "family": obj.kind, "p": obj.p}
    return {
        "kind": "kraus",
        "dims": [obj.in_dim, obj.out_dim],
        "matrices": [[[_complex_to_pair(z) for z in row] for row in k] for k in obj.kraus],
    }


def channel_from_dict(data: dict) -> QuantumChannel | ChannelFamily:
    if data["kind"] == "family":
        return ChannelFamily(kind=data["family"], p=data["p"])
    if data["kind"] == "kraus":
        d_in, d_out = data["dims"]
        kraus = []
        for mat in data["matrices"]:
            k = np.array([[complex(re, im) for re, im in row] for row in mat])
            if k.shape != (d_out, d_in):
                raise DimensionMismatch(f"matrix shape {k.shape} vs dims {data['dims']}")
            kraus.append(k)
        return QuantumChannel(tuple(kraus))
    raise ValueError(f"unknown channel kind {data['kind']!r}")


def channel_to_json(obj: QuantumChannel | ChannelFamily) -> str:
    return json.dumps(channel_to_dict(obj))


def channel_from_json(text: str) -> QuantumChannel | ChannelFamily:
    return channel_from_dict(json.loads(text))

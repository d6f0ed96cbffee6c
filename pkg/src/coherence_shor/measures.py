"""Coherence measures for channels: cohering power, NSID, and the detection
functional, plus the fixed-witness check that the detection functional is not
monotone under detection-incoherent pre-processing.

For qubit channels the detection functional has the closed form
2 |Lambda_00^01| and coincides with the NSID measure.  In small dimensions it
is evaluated exactly by sweeping sign vectors: for a fixed diagonal sign
operator S the objective is linear in the input state, so the inner optimum is
the top eigenvalue of (1 - Delta)(Lambda^dag(S)).
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .channels import (
    QuantumChannel,
    apply,
    adjoint_apply,
    basis_state,
    choi,
    dephase,
    from_choi,
    is_di,
)

D_FUNCTIONAL_MAX_OUT_DIM = 4  # 2**out_dim sign vectors; the counterexample needs <= 3


class WrongDimension(ValueError):
    """Qubit closed forms called on a non-qubit object."""


class DimensionTooLarge(ValueError):
    """Sign-vector sweep refused above the output-dimension cap."""


class WitnessInvalid(ValueError):
    """A hard-coded counterexample matrix fails its CPTP/DI invariant."""


@dataclass(frozen=True)
class MeasureValue:
    name: str
    value: float
    witness: object = None


def robustness_qubit(rho: np.ndarray) -> float:
    """Robustness of coherence of a qubit state; equals the l1 measure 2|rho_01|."""
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise WrongDimension(f"need a qubit state, got shape {rho.shape}")
    return 2.0 * float(abs(rho[0, 1]))


def cohering_power(theta: QuantumChannel) -> MeasureValue:
    """Max robustness of coherence over incoherent inputs.

    By convexity of the robustness the maximum over incoherent states is
    attained on the basis projectors, so both are evaluated and the best
    recorded as witness.
    """
    if theta.in_dim != 2 or theta.out_dim != 2:
        raise WrongDimension("cohering power closed form is for qubit channels")
    best_val, best_input = -1.0, None
    for i in range(2):
        val = robustness_qubit(apply(theta, basis_state(i, 2)))
        if val > best_val:
            best_val, best_input = val, i
    return MeasureValue("cohering_power", best_val, witness=basis_state(best_input, 2))


def nsid_qubit(lam: QuantumChannel) -> MeasureValue:
    """NSID measure of a qubit channel: 2 |Lambda_00^01|."""
    if lam.in_dim != 2 or lam.out_dim != 2:
        raise WrongDimension("NSID closed form is for qubit channels")
    return MeasureValue("nsid", 2.0 * float(abs(lam.index_rep[0, 0, 0, 1])))


def d_functional(lam: QuantumChannel) -> MeasureValue:
    """max over states of || Delta Lambda (1 - Delta) rho ||_1 by sign-vector sweep.

    Each fixed sign vector s turns the trace norm into the linear functional
    Tr[S_s Lambda((1-Delta) rho)], whose optimum over states is the top
    eigenvalue of the Hermitian operator (1 - Delta)(Lambda^dag(S_s)).
    """
    if lam.out_dim > D_FUNCTIONAL_MAX_OUT_DIM:
        raise DimensionTooLarge(f"out_dim {lam.out_dim} > cap {D_FUNCTIONAL_MAX_OUT_DIM}")
    best_val, best_witness = 0.0, None
    for signs in itertools.product((1.0, -1.0), repeat=lam.out_dim):
        s_op = np.diag(np.array(signs, dtype=complex))
        h = adjoint_apply(lam, s_op)
        h = h - dephase(h)
        evals, evecs = np.linalg.eigh((h + h.conj().T) / 2)
        if evals[-1] > best_val:
            vec = evecs[:, -1]
            best_val = float(evals[-1])
            best_witness = (signs, np.outer(vec, vec.conj()))
    return MeasureValue("d_functional", best_val, witness=best_witness)


# Counterexample data: a qubit channel with maximal detection functional, a
# detection-incoherent qutrit-to-qubit pre-processing given by its Choi
# blocks, and a maximally coherent qutrit input.  Composing increases the
# functional from 1 to 4/3, defeating monotonicity under pre-processing.

def counterexample_theta() -> QuantumChannel:
    k1 = np.array([[1j, 1], [0, 0]]) / np.sqrt(2)
    k2 = np.array([[0, 0], [1, 1j]]) / np.sqrt(2)
    return QuantumChannel((k1, k2))


def counterexample_choi_matrix() -> np.ndarray:
    x_diag = np.array([[0.5, 1j / 6], [-1j / 6, 0.5]])
    x_off = np.array([[0.0, -1j / 3], [1j / 3, 0.0]])
    j = np.zeros((6, 6), dtype=complex)
    for n in range(3):
        for m in range(3):
            j[2 * n : 2 * n + 2, 2 * m : 2 * m + 2] = x_diag if n == m else x_off
    return j


def counterexample_phi() -> QuantumChannel:
    return from_choi(counterexample_choi_matrix(), in_dim=3, out_dim=2)


def counterexample_sigma() -> np.ndarray:
    return np.full((3, 3), 1.0 / 3.0, dtype=complex)


def verify_counterexample(
    theta: QuantumChannel | None = None,
    phi: QuantumChannel | None = None,
    sigma: np.ndarray | None = None,
) -> dict:
    """Reproduce the monotonicity violation from the hard-coded witness.

    Returns a JSON-ready report with the functional of the bare channel, the
    witness value after pre-processing, and the structural checks on the
    pre-processing channel.  Raises WitnessInvalid if any hard-coded matrix
    fails its invariant, which would signal a transcription error.  The
    optional arguments exist so tests can inject corrupted data.
    """
    try:
        theta = theta if theta is not None else counterexample_theta()
        phi = phi if phi is not None else counterexample_phi()
    except (ValueError, AssertionError) as exc:
        raise WitnessInvalid(f"counterexample data fails CPTP check: {exc}") from exc
    sigma = sigma if sigma is not None else counterexample_sigma()

    phi_is_cptp = True  # construction would have raised otherwise
    phi_is_di = is_di(phi)
    if not phi_is_di:
        raise WitnessInvalid("pre-processing channel is not detection incoherent")
    choi_eigenvalues = sorted(float(v) for v in choi(phi).eigenvalues())

    d_theta = d_functional(theta).value
    coherent_part = sigma - dephase(sigma)
    composed_out = dephase(apply(theta, apply(phi, coherent_part)))
    d_composed = float(np.sum(np.abs(np.diag(composed_out))))
    sigma_coherence = float(np.sum(np.abs(sigma - dephase(sigma))))

    return {
        "d_theta": d_theta,
        "d_composed": d_composed,
        "violation": d_composed - d_theta,
        "phi_is_di": phi_is_di,
        "phi_is_cptp": phi_is_cptp,
        "choi_eigenvalues": choi_eigenvalues,
        "sigma_coherence": sigma_coherence,
    }

import numpy as np
import pytest

from coherence_shor.channels import (
    QuantumChannel,
    compose,
    dephasing_channel,
    mix,
    permutation_channel,
)


def random_channel(rng, in_dim=2, out_dim=2, n_kraus=None) -> QuantumChannel:
    """Haar-ish random CPTP map: QR-orthonormalized stacked Kraus blocks."""
    n_kraus = n_kraus or out_dim
    if out_dim * n_kraus < in_dim:
        raise ValueError("need out_dim * n_kraus >= in_dim for an isometry")
    g = rng.normal(size=(out_dim * n_kraus, in_dim)) + 1j * rng.normal(size=(out_dim * n_kraus, in_dim))
    q, _ = np.linalg.qr(g)
    return QuantumChannel(tuple(q[i * out_dim : (i + 1) * out_dim, :] for i in range(n_kraus)))


def random_density(rng, dim=2) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_permutation_channel(rng, dim=2) -> QuantumChannel:
    return permutation_channel(list(rng.permutation(dim)))


def random_di_channel(rng, dim=2) -> QuantumChannel:
    """Random detection-incoherent channel: mixture of (anything after total
    dephasing), a permutation, and total dephasing."""
    blind = compose(random_channel(rng, dim, dim), dephasing_channel(dim))
    w = rng.dirichlet(np.ones(3))
    return mix([blind, random_permutation_channel(rng, dim), dephasing_channel(dim)], list(w))


def random_mio_channel(rng, dim=2) -> QuantumChannel:
    """Random maximally incoherent channel: mixture of (total dephasing after
    anything), a permutation, and total dephasing."""
    diagonal = compose(dephasing_channel(dim), random_channel(rng, dim, dim))
    w = rng.dirichlet(np.ones(3))
    return mix([diagonal, random_permutation_channel(rng, dim), dephasing_channel(dim)], list(w))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)

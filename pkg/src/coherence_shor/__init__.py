"""Simulator and verification suite for sequential single-control-qubit order
finding with coherence-limited preparation and detection channels."""

__version__ = "0.1.0"

from .numtheory import FactorInstance, multiplicative_order, euler_totient  # noqa: F401
from .channels import QuantumChannel, ChannelFamily  # noqa: F401
from .protocol import ProtocolConfig, exact_success_probability, brute_force_oracle  # noqa: F401
from .bounds import bound_report  # noqa: F401

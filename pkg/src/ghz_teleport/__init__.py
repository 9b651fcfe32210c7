"""Probabilistic teleportation of a qubit over a non-maximally entangled GHZ channel."""

from .bases import BellOutcome, ChannelConfig, XOutcome, bell_basis, make_ghz, normalizer, x_basis
from .statevec import Ket, OrthonormalBasis, UnitaryMatrix, fidelity, make_ket, tensor

__version__ = "0.1.0"

__all__ = [
    "BellOutcome",
    "ChannelConfig",
    "Ket",
    "OrthonormalBasis",
    "UnitaryMatrix",
    "XOutcome",
    "bell_basis",
    "fidelity",
    "make_ghz",
    "make_ket",
    "normalizer",
    "tensor",
    "x_basis",
]

"""Dense state-vector engine.

Qubit 0 is the leftmost ket label and the most significant bit of the
amplitude index, so ``tensor(a, b)`` is ``np.kron(a, b)``.  Measurement
removes the measured qubits from the register.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_ATOL = 1e-12
UNITARY_ATOL = 1e-12


class DegenerateStateError(ArithmeticError):
    """All outcome probabilities vanished (or underflowed)."""


def _as_vector(amplitudes) -> np.ndarray:
    vec = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(vec)):
        raise ValueError("amplitudes must be finite")
    return vec


def _num_qubits(length: int) -> int:
    if length < 2 or length & (length - 1):
        raise ValueError(f"length {length} is not a power of two >= 2")
    return length.bit_length() - 1


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized pure state on ``num_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        vec = _as_vector(self.amplitudes)
        _num_qubits(vec.size)
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"Ket must be normalized (norm={norm!r}); use make_ket")
        vec = vec.copy()
        vec.flags.writeable = False
        object.__setattr__(self, "amplitudes", vec)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def __len__(self) -> int:
        return self.amplitudes.size

    def __repr__(self) -> str:
        return f"Ket(num_qubits={self.num_qubits}, amplitudes={np.array2string(self.amplitudes, precision=4)})"


def make_ket(amplitudes: Sequence[complex] | np.ndarray) -> Ket:
    """Build a Ket, normalizing the given amplitudes."""
    vec = _as_vector(amplitudes)
    _num_qubits(vec.size)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return Ket(vec / norm)


def basis_ket(index: int, num_qubits: int) -> Ket:
    vec = np.zeros(2**num_qubits, dtype=complex)
    vec[index] = 1.0
    return Ket(vec)


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    entries: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("unitary must be a square matrix")
        _num_qubits(mat.shape[0])
        if not np.all(np.isfinite(mat)):
            raise ValueError("unitary entries must be finite")
        dev = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
        if dev > UNITARY_ATOL:
            raise ValueError(f"matrix is not unitary (max |U^dag U - I| = {dev:.3e})")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "entries", mat)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Measurement basis on ``arity`` qubits; outcome ``k`` is ``vectors[k]``."""

    vectors: tuple[Ket, ...]

    def __post_init__(self):
        vectors = tuple(self.vectors)
        if not vectors:
            raise ValueError("basis needs at least one vector")
        arity = vectors[0].num_qubits
        if any(v.num_qubits != arity for v in vectors) or len(vectors) != 2**arity:
            raise ValueError(f"basis on {arity} qubits needs {2**arity} vectors of equal size")
        mat = np.array([v.amplitudes for v in vectors])
        dev = np.max(np.abs(mat.conj() @ mat.T - np.eye(len(vectors))))
        if dev > NORM_ATOL:
            raise ValueError(f"basis is not orthonormal (Gram deviation {dev:.3e})")
        object.__setattr__(self, "vectors", vectors)

    @property
    def arity(self) -> int:
        return self.vectors[0].num_qubits

    @property
    def matrix(self) -> np.ndarray:
        """Rows are the basis vectors."""
        return np.array([v.amplitudes for v in self.vectors])

    def __len__(self) -> int:
        return len(self.vectors)


def computational_basis(arity: int = 1) -> OrthonormalBasis:
    return OrthonormalBasis(tuple(basis_ket(k, arity) for k in range(2**arity)))


def tensor(a: Ket, b: Ket) -> Ket:
    return Ket(np.kron(a.amplitudes, b.amplitudes))


def _check_targets(targets: Sequence[int], num_qubits: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits: {targets}")
    if any(t < 0 or t >= num_qubits for t in targets):
        raise ValueError(f"targets {targets} out of range for {num_qubits} qubits")
    return targets


def _targets_first(amplitudes: np.ndarray, targets: list[int], num_qubits: int) -> np.ndarray:
    """Return amplitudes as a (2**k, rest) matrix with target qubits as rows."""
    rest = [q for q in range(num_qubits) if q not in targets]
    tensor_form = amplitudes.reshape([2] * num_qubits).transpose(targets + rest)
    return tensor_form.reshape(2 ** len(targets), -1)


def apply_unitary(state: Ket, u: UnitaryMatrix | np.ndarray, targets: Sequence[int]) -> Ket:
    if not isinstance(u, UnitaryMatrix):
        u = UnitaryMatrix(u)
    n = state.num_qubits
    targets = _check_targets(targets, n)
    if u.dim != 2 ** len(targets):
        raise ValueError(f"unitary of dim {u.dim} cannot act on {len(targets)} qubits")
    rest = [q for q in range(n) if q not in targets]
    order = targets + rest
    mat = u.entries @ _targets_first(state.amplitudes, targets, n)
    out = mat.reshape([2] * n).transpose(np.argsort(order)).reshape(-1)
    return Ket(out)


def project_outcomes(state: Ket, basis: OrthonormalBasis, targets: Sequence[int]) -> np.ndarray:
    """Unnormalized residual amplitudes for every basis outcome.

    Row ``k`` holds ``(<v_k| (x) I) |state>`` on the unmeasured qubits,
    which keep their relative order.
    """
    targets = _check_targets(targets, state.num_qubits)
    if basis.arity != len(targets):
        raise ValueError(f"basis arity {basis.arity} does not match {len(targets)} targets")
    return basis.matrix.conj() @ _targets_first(state.amplitudes, targets, state.num_qubits)


def sample_index(probabilities: np.ndarray, u: float) -> int:
    """Inverse-CDF draw; zero-probability outcomes are never returned."""
    total = probabilities.sum()
    if not total > 0.0:
        raise DegenerateStateError("all outcome probabilities are zero")
    cdf = np.cumsum(probabilities) / total
    k = int(np.searchsorted(cdf, u, side="right"))
    if k >= len(probabilities):
        k = int(np.flatnonzero(probabilities)[-1])
    return k


def measure_in_basis(
    state: Ket,
    basis: OrthonormalBasis,
    targets: Sequence[int],
    rng: np.random.Generator,
) -> tuple[int, float, Ket | None]:
    """Born-rule measurement of ``targets`` in ``basis``.

    Draws exactly one uniform from ``rng``.  Returns the outcome index, its
    probability and the renormalized post-measurement state of the
    remaining qubits (``None`` if every qubit was measured).
    """
    residuals = project_outcomes(state, basis, targets)
    probs = np.sum(np.abs(residuals) ** 2, axis=1)
    k = sample_index(probs, rng.random())
    if residuals.shape[1] == 1:
        return k, float(probs[k]), None
    return k, float(probs[k]), Ket(residuals[k] / np.sqrt(probs[k]))


def outcome_probabilities(state: Ket, basis: OrthonormalBasis, targets: Sequence[int]) -> np.ndarray:
    return np.sum(np.abs(project_outcomes(state, basis, targets)) ** 2, axis=1)


def fidelity(a: Ket, b: Ket) -> float:
    if a.num_qubits != b.num_qubits:
        raise ValueError("fidelity needs states on the same number of qubits")
    # dividing by the stored norms cancels their float-level drift
    overlap = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    norms = np.vdot(a.amplitudes, a.amplitudes).real * np.vdot(b.amplitudes, b.amplitudes).real
    return float(min(1.0, overlap / norms))


def random_ket(num_qubits: int, rng: np.random.Generator) -> Ket:
    vec = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return make_ket(vec)


def random_unitary(dim: int, rng: np.random.Generator) -> UnitaryMatrix:
    """Haar-distributed unitary via QR with phase fix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return UnitaryMatrix(q * (d / np.abs(d)))

"""Probabilistic teleportation over a GHZ channel.

Register order for the joint state is (A1, A2, intermediates..., B): the
unknown qubit, Alice's channel qubit, one qubit per intermediate party and
the receiver's qubit.  Party ids in transcripts are 1 for Alice, 2..L-1 for
the intermediates and L for the receiver.

Every trial consumes a fixed number of uniforms from its generator: one per
measurement (Bell, each X, ancilla), preceded by two when the input is
Haar-sampled.  The vectorized ``run_trials`` path relies on this to follow
``run_teleportation`` trial for trial.
"""
from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import bases
from .bases import BellOutcome, ChannelConfig, XOutcome
from .statevec import (
    DegenerateStateError,
    Ket,
    UnitaryMatrix,
    apply_unitary,
    computational_basis,
    fidelity,
    make_ket,
    measure_in_basis,
    tensor,
)

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class ConditionalCoefficients:
    """Receiver's corrected residual is proportional to alpha*c|0> + beta*d|1>."""

    c: complex
    d: complex

    @property
    def recoverable(self) -> bool:
        return min(abs(self.c), abs(self.d)) > 0.0


@dataclass(frozen=True)
class ClassicalMessage:
    sender: int
    outcome: BellOutcome | XOutcome
    parameter: complex

    def to_dict(self) -> dict:
        kind = "bell" if isinstance(self.outcome, BellOutcome) else "x"
        return {
            "sender": self.sender,
            "kind": kind,
            "outcome": self.outcome.label,
            "parameter": [self.parameter.real, self.parameter.imag],
        }


@dataclass(frozen=True)
class TrialRecord:
    """One protocol run.  ``fidelity`` is 0.0 and ``final`` is None on failure."""

    bell_outcome: BellOutcome
    x_outcomes: tuple[XOutcome, ...]
    pauli_applied: str
    coefficients: ConditionalCoefficients
    ancilla_outcome: int
    success: bool
    fidelity: float
    final: Ket | None
    transcript: tuple[ClassicalMessage, ...]

    @property
    def branch_label(self) -> str:
        return branch_label(self.bell_outcome, self.x_outcomes)


def branch_label(bell: BellOutcome, xs: Sequence[XOutcome]) -> str:
    return bell.label + "," + "".join(x.label for x in xs)


def all_branches(L: int) -> list[tuple[BellOutcome, tuple[XOutcome, ...]]]:
    """Branches in index order: Bell outcome major, first intermediate next."""
    k = L - 2
    out = []
    for bell in BellOutcome:
        for bits in range(2**k):
            xs = tuple(XOutcome((bits >> (k - 1 - i)) & 1) for i in range(k))
            out.append((bell, xs))
    return out


def prepare_joint(state: Ket, cfg: ChannelConfig) -> Ket:
    if state.num_qubits != 1:
        raise ValueError("input must be a single qubit")
    return tensor(state, bases.make_ghz(cfg.n, cfg.L))


_MINUS = object()  # sign marker kept apart from the complex factors


# After the Bell measurement the remaining channel qubits hold
# p|0...0> + q|1...1>.  Entry: (alpha sits on the |0...0> term,
# factors of p, factors of q).
def _bell_factors(bell: BellOutcome, n: complex, m: complex) -> tuple[bool, list, list]:
    mc = m.conjugate()
    if bell is BellOutcome.PHI_PLUS:
        return True, [], [mc, n]
    if bell is BellOutcome.PHI_MINUS:
        return True, [m], [_MINUS, n]
    if bell is BellOutcome.PSI_PLUS:
        return False, [mc], [n]
    return False, [_MINUS], [m, n]


def _collect(factors: list) -> tuple[complex, int]:
    value, sign = 1.0 + 0j, 1
    for f in factors:
        if f is _MINUS:
            sign = -sign
        else:
            value *= f
    return value, sign


def branch_coefficients(
    bell: BellOutcome, xs: Sequence[XOutcome], cfg: ChannelConfig
) -> tuple[str, ConditionalCoefficients]:
    """Pauli correction and residual coefficients for any party count.

    An X outcome ``+`` multiplies the |0...0> and |1...1> terms by (1, b*),
    an outcome ``-`` by (b, -1).  The relative sign of the two surviving
    terms selects Z, or Y when the Bell outcome put alpha on |1>.
    """
    xs = tuple(XOutcome(x) for x in xs)
    if len(xs) != cfg.L - 2:
        raise ValueError(f"expected {cfg.L - 2} X outcomes, got {len(xs)}")
    alpha_on_zero, p_factors, q_factors = _bell_factors(BellOutcome(bell), cfg.n, cfg.m)
    for x, b in zip(xs, cfg.b_list):
        if x is XOutcome.PLUS:
            q_factors.append(b.conjugate())
        else:
            p_factors.append(b)
            q_factors.append(_MINUS)
    p, p_sign = _collect(p_factors)
    q, q_sign = _collect(q_factors)
    flipped = p_sign * q_sign < 0
    if alpha_on_zero:
        return ("Z" if flipped else "I"), ConditionalCoefficients(p, q)
    return ("Y" if flipped else "X"), ConditionalCoefficients(q, p)


def _conj(z: complex) -> complex:
    return complex(z).conjugate()


# Three-party (pauli, c, d) read directly off the residual-state identities.
THREE_PARTY_TABLE: dict[tuple[BellOutcome, XOutcome], Callable[[complex, complex, complex], tuple[str, complex, complex]]] = {
    (BellOutcome.PHI_PLUS, XOutcome.PLUS): lambda n, m, b: ("I", 1.0, _conj(m) * n * _conj(b)),
    (BellOutcome.PHI_PLUS, XOutcome.MINUS): lambda n, m, b: ("Z", b, _conj(m) * n),
    (BellOutcome.PHI_MINUS, XOutcome.PLUS): lambda n, m, b: ("Z", m, n * _conj(b)),
    (BellOutcome.PHI_MINUS, XOutcome.MINUS): lambda n, m, b: ("I", m * b, n),
    (BellOutcome.PSI_PLUS, XOutcome.PLUS): lambda n, m, b: ("X", n * _conj(b), _conj(m)),
    (BellOutcome.PSI_PLUS, XOutcome.MINUS): lambda n, m, b: ("Y", n, _conj(m) * b),
    (BellOutcome.PSI_MINUS, XOutcome.PLUS): lambda n, m, b: ("Y", m * n * _conj(b), 1.0),
    (BellOutcome.PSI_MINUS, XOutcome.MINUS): lambda n, m, b: ("X", m * n, b),
}


def three_party_coefficients(
    bell: BellOutcome, xs: Sequence[XOutcome], cfg: ChannelConfig
) -> tuple[str, ConditionalCoefficients]:
    if cfg.L != 3 or len(xs) != 1:
        raise ValueError("the tabulated corrections cover three parties only")
    pauli, c, d = THREE_PARTY_TABLE[BellOutcome(bell), XOutcome(xs[0])](cfg.n, cfg.m, cfg.b_list[0])
    return pauli, ConditionalCoefficients(complex(c), complex(d))


def _phase(z: complex) -> float:
    return 0.0 if z == 0 else math.atan2(z.imag, z.real)


def phase_alignment(coeff: ConditionalCoefficients) -> np.ndarray:
    return np.diag([np.exp(-1j * _phase(coeff.c)), np.exp(-1j * _phase(coeff.d))])


def phase_align(state: Ket, coeff: ConditionalCoefficients) -> tuple[Ket, float, float]:
    """Strip the known phases of c and d; arg(0) is taken as 0."""
    return apply_unitary(state, phase_alignment(coeff), [0]), abs(coeff.c), abs(coeff.d)


def conversion_unitary(abs_c: float, abs_d: float) -> UnitaryMatrix:
    """Two-qubit (B, ancilla) rotation shrinking the larger amplitude.

    Basis order |00>, |01>, |10>, |11> of (B, D).  With |c| <= |d| the
    |1>_B block is rotated by r = |c|/|d|; otherwise the |0>_B block by
    |d|/|c|.  Outcome |0>_D leaves B proportional to the unknown state.
    """
    if abs_c < 0 or abs_d < 0:
        raise ValueError("magnitudes must be non-negative")
    if abs_c == 0 and abs_d == 0:
        raise ValueError("c and d cannot both vanish")
    u = np.eye(4, dtype=complex)
    if abs_c <= abs_d:
        r = abs_c / abs_d
        block = slice(2, 4)
    else:
        r = abs_d / abs_c
        block = slice(0, 2)
    s = math.sqrt(max(0.0, 1.0 - r * r))
    u[block, block] = [[r, s], [-s, r]]
    return UnitaryMatrix(u)


def bob_recover(
    state: Ket, coeff: ConditionalCoefficients, rng: np.random.Generator
) -> tuple[bool, Ket | None, float]:
    """Ancilla-assisted conversion of a phase-aligned residual.

    Returns (success, recovered state, probability of the success outcome).
    Draws one uniform even when the branch is unrecoverable.
    """
    if not coeff.recoverable:
        rng.random()
        return False, None, 0.0
    joint = tensor(state, Ket(np.array([1.0, 0.0], dtype=complex)))
    joint = apply_unitary(joint, conversion_unitary(abs(coeff.c), abs(coeff.d)), [0, 1])
    outcome, prob, final = measure_in_basis(joint, computational_basis(1), [1], rng)
    p0 = prob if outcome == 0 else 1.0 - prob
    if outcome != 0:
        return False, None, p0
    return True, final, p0


def _run(state: Ket, cfg: ChannelConfig, rng: np.random.Generator, lookup) -> TrialRecord:
    joint = prepare_joint(state, cfg)
    k, _, residual = measure_in_basis(joint, bases.bell_basis(cfg.m), [0, 1], rng)
    bell = BellOutcome(k)
    transcript = [ClassicalMessage(1, bell, cfg.m)]
    xs = []
    for party, b in enumerate(cfg.b_list, start=2):
        k, _, residual = measure_in_basis(residual, bases.x_basis(b), [0], rng)
        xs.append(XOutcome(k))
        transcript.append(ClassicalMessage(party, xs[-1], b))
    pauli, coeff = lookup(bell, xs, cfg)
    residual = apply_unitary(residual, PAULI[pauli], [0])
    aligned, _, _ = phase_align(residual, coeff)
    success, final, _ = bob_recover(aligned, coeff, rng)
    return TrialRecord(
        bell_outcome=bell,
        x_outcomes=tuple(xs),
        pauli_applied=pauli,
        coefficients=coeff,
        ancilla_outcome=0 if success else 1,
        success=success,
        fidelity=fidelity(final, state) if success else 0.0,
        final=final,
        transcript=tuple(transcript),
    )


def run_teleportation(state: Ket, cfg: ChannelConfig, rng: np.random.Generator) -> TrialRecord:
    """One full protocol run with state-vector measurements."""
    return _run(state, cfg, rng, branch_coefficients)


def run_three_party(state: Ket, cfg: ChannelConfig, rng: np.random.Generator) -> TrialRecord:
    """Three-party run driven by the tabulated corrections."""
    return _run(state, cfg, rng, three_party_coefficients)


def haar_amplitudes(u1, u2):
    """Map uniforms to (alpha, beta) with cos(theta) and phi uniform."""
    cos_theta = 2.0 * np.asarray(u1) - 1.0
    phi = 2.0 * np.pi * np.asarray(u2)
    alpha = np.sqrt((1.0 + cos_theta) / 2.0) + 0j
    beta = np.exp(1j * phi) * np.sqrt((1.0 - cos_theta) / 2.0)
    return alpha, beta


def haar_input(rng: np.random.Generator) -> Ket:
    u1 = rng.random()
    u2 = rng.random()
    alpha, beta = haar_amplitudes(u1, u2)
    return make_ket([alpha, beta])


# ---------------------------------------------------------------------------
# Vectorized ensemble path


@dataclass(frozen=True)
class _BranchPlan:
    correction: np.ndarray  # (B, 2, 2): phase alignment after the Pauli
    conversion: np.ndarray  # (B, 4, 4); identity where unrecoverable
    recoverable: np.ndarray  # (B,) bool


def _plan(cfg: ChannelConfig) -> _BranchPlan:
    corrections, conversions, ok = [], [], []
    for bell, xs in all_branches(cfg.L):
        pauli, coeff = branch_coefficients(bell, xs, cfg)
        corrections.append(phase_alignment(coeff) @ PAULI[pauli])
        ok.append(coeff.recoverable)
        if coeff.recoverable:
            conversions.append(conversion_unitary(abs(coeff.c), abs(coeff.d)).entries)
        else:
            conversions.append(np.eye(4, dtype=complex))
    return _BranchPlan(np.array(corrections), np.array(conversions), np.array(ok))


def _sample_rows(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    total = probs.sum(axis=1)
    if np.any(~(total > 0.0)):
        raise DegenerateStateError("all outcome probabilities are zero")
    cdf = np.cumsum(probs, axis=1) / total[:, None]
    k = np.sum(cdf <= u[:, None], axis=1)
    overflow = k >= probs.shape[1]
    if np.any(overflow):
        last_nonzero = probs.shape[1] - 1 - np.argmax(probs[:, ::-1] > 0, axis=1)
        k = np.where(overflow, last_nonzero, k)
    return k


def _measure_leading(psi: np.ndarray, basis_matrix: np.ndarray, u: np.ndarray):
    """Measure the leading ``log2(len(basis))`` qubits of each row."""
    t = psi.shape[0]
    dim = basis_matrix.shape[0]
    amps = np.einsum("kj,tjr->tkr", basis_matrix.conj(), psi.reshape(t, dim, -1))
    probs = np.sum(np.abs(amps) ** 2, axis=2)
    k = _sample_rows(probs, u)
    rows = np.arange(t)
    chosen = amps[rows, k] / np.sqrt(probs[rows, k])[:, None]
    return k, chosen


@dataclass(frozen=True)
class BatchResult:
    bell: np.ndarray  # (T,) int
    xs: np.ndarray  # (T, L-2) int
    branch: np.ndarray  # (T,) branch index, see all_branches
    success: np.ndarray  # (T,) bool
    fidelity: np.ndarray  # (T,) 0.0 on failure


def simulate_batch(cfg: ChannelConfig, inputs: np.ndarray, uniforms: np.ndarray) -> BatchResult:
    """Run many trials at once.

    ``inputs`` is (T, 2) normalized amplitudes; ``uniforms`` is (T, L) with
    columns (Bell, X_2..X_{L-1}, ancilla).
    """
    inputs = np.asarray(inputs, dtype=complex)
    uniforms = np.asarray(uniforms, dtype=float)
    t = inputs.shape[0]
    if uniforms.shape != (t, cfg.L):
        raise ValueError(f"uniforms must have shape ({t}, {cfg.L})")
    plan = _plan(cfg)
    ghz = bases.make_ghz(cfg.n, cfg.L).amplitudes
    psi = np.einsum("ti,j->tij", inputs, ghz).reshape(t, -1)

    bell, psi = _measure_leading(psi, bases.bell_basis(cfg.m).matrix, uniforms[:, 0])
    branch = bell.copy()
    xs = np.zeros((t, cfg.L - 2), dtype=int)
    for i, b in enumerate(cfg.b_list):
        xs[:, i], psi = _measure_leading(psi, bases.x_basis(b).matrix, uniforms[:, 1 + i])
        branch = 2 * branch + xs[:, i]

    bob = np.einsum("tij,tj->ti", plan.correction[branch], psi)
    with_ancilla = np.zeros((t, 4), dtype=complex)
    with_ancilla[:, 0] = bob[:, 0]
    with_ancilla[:, 2] = bob[:, 1]
    out = np.einsum("tij,tj->ti", plan.conversion[branch], with_ancilla)
    d0 = out[:, [0, 2]]
    d1 = out[:, [1, 3]]
    probs = np.stack([np.sum(np.abs(d0) ** 2, axis=1), np.sum(np.abs(d1) ** 2, axis=1)], axis=1)
    ancilla = _sample_rows(probs, uniforms[:, -1])
    success = plan.recoverable[branch] & (ancilla == 0)

    fid = np.zeros(t)
    if np.any(success):
        final = d0[success] / np.linalg.norm(d0[success], axis=1)[:, None]
        overlap = np.abs(np.sum(inputs[success].conj() * final, axis=1)) ** 2
        fid[success] = np.minimum(overlap, 1.0)
    return BatchResult(bell=bell, xs=xs, branch=branch, success=success, fidelity=fid)


@dataclass(frozen=True)
class EnsembleReport:
    """Aggregated Monte Carlo statistics of ``run_trials``."""

    cfg: ChannelConfig
    trials: int
    successes: int
    mean_success_fidelity: float | None
    min_success_fidelity: float | None
    branch_counts: dict[str, int]
    branch_successes: dict[str, int]
    seed: int | None = None
    records: tuple[dict, ...] = field(default=())

    @property
    def empirical_p(self) -> float:
        return self.successes / self.trials

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "successes": self.successes,
            "empirical_p": self.empirical_p,
            "mean_success_fidelity": self.mean_success_fidelity,
            "min_success_fidelity": self.min_success_fidelity,
            "branches": [
                {"branch": label, "count": self.branch_counts[label], "successes": self.branch_successes[label]}
                for label in self.branch_counts
            ],
            "records": list(self.records),
        }


def _batch_records(cfg: ChannelConfig, res: BatchResult, inputs: np.ndarray, offset: int) -> list[dict]:
    branches = all_branches(cfg.L)
    paulis = [branch_coefficients(bell, xs, cfg)[0] for bell, xs in branches]
    out = []
    for i in range(len(res.branch)):
        bell, xs = branches[res.branch[i]]
        transcript = [ClassicalMessage(1, bell, cfg.m)]
        transcript += [ClassicalMessage(p, x, b) for p, (x, b) in enumerate(zip(xs, cfg.b_list), start=2)]
        out.append(
            {
                "trial": offset + i,
                "branch": branch_label(bell, xs),
                "input": [[z.real, z.imag] for z in map(complex, inputs[i])],
                "pauli": paulis[res.branch[i]],
                "ancilla_outcome": 0 if res.success[i] else 1,
                "success": bool(res.success[i]),
                "fidelity": float(res.fidelity[i]),
                "transcript": [msg.to_dict() for msg in transcript],
            }
        )
    return out


def run_trials(
    cfg: ChannelConfig,
    trials: int,
    input_policy: str | Ket = "haar",
    seed: int | None = 0,
    *,
    chunk_size: int = 8192,
    keep_records: bool = False,
) -> EnsembleReport:
    """Monte Carlo ensemble; deterministic given ``seed``.

    Uniforms are drawn chunk by chunk from a single generator in trial
    order, so the stream matches a loop over ``haar_input`` and
    ``run_teleportation`` on the same generator.
    """
    if int(trials) != trials or trials < 1:
        raise ValueError("trials must be a positive integer")
    rng = np.random.default_rng(seed)
    haar = isinstance(input_policy, str)
    if haar and input_policy != "haar":
        raise ValueError(f"unknown input policy {input_policy!r}")
    if not haar and input_policy.num_qubits != 1:
        raise ValueError("fixed input must be a single qubit")
    width = cfg.L + (2 if haar else 0)

    labels = [branch_label(bell, xs) for bell, xs in all_branches(cfg.L)]
    counts = np.zeros(len(labels), dtype=np.int64)
    wins = np.zeros(len(labels), dtype=np.int64)
    successes = 0
    fid_sum, fid_min = 0.0, math.inf
    records = []
    done = 0
    while done < trials:
        size = min(chunk_size, trials - done)
        u = rng.random((size, width))
        if haar:
            alpha, beta = haar_amplitudes(u[:, 0], u[:, 1])
            inputs = np.stack([alpha, beta], axis=1)
            u = u[:, 2:]
        else:
            inputs = np.broadcast_to(input_policy.amplitudes, (size, 2))
        res = simulate_batch(cfg, inputs, u)
        counts += np.bincount(res.branch, minlength=len(labels))
        wins += np.bincount(res.branch[res.success], minlength=len(labels))
        successes += int(res.success.sum())
        if np.any(res.success):
            fid_sum += float(res.fidelity[res.success].sum())
            fid_min = min(fid_min, float(res.fidelity[res.success].min()))
        if keep_records:
            records.extend(_batch_records(cfg, res, inputs, done))
        done += size

    return EnsembleReport(
        cfg=cfg,
        trials=int(trials),
        successes=successes,
        mean_success_fidelity=fid_sum / successes if successes else None,
        min_success_fidelity=fid_min if successes else None,
        branch_counts=dict(zip(labels, counts.tolist())),
        branch_successes=dict(zip(labels, wins.tolist())),
        seed=seed,
        records=tuple(records),
    )

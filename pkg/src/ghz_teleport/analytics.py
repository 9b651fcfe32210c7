"""Closed-form success probability, region analysis and brute-force oracles.

Weights are the squared normalizers xi = 1/(1+|n|^2), zeta = 1/(1+|m|^2)
and eta = 1/(1+|b|^2).  Region analysis works in the canonical domain
0 < xi <= 1/2, 0 < zeta <= eta <= 1/2 reached by the complement and swap
symmetries of the weight form.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import bases, protocol
from .bases import BellOutcome, ChannelConfig, XOutcome
from .protocol import ConditionalCoefficients, all_branches, three_party_coefficients
from .statevec import Ket, OrthonormalBasis, basis_ket, project_outcomes, tensor

TIE_RTOL = 1e-12
MAX_ORACLE_PARTIES = 8


@dataclass(frozen=True)
class SquaredWeights:
    xi: float
    zeta: float
    eta: float

    def __post_init__(self):
        for name in ("xi", "zeta", "eta"):
            value = float(getattr(self, name))
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name}={value!r} outside [0, 1]")
            object.__setattr__(self, name, value)

    def astuple(self) -> tuple[float, float, float]:
        return (self.xi, self.zeta, self.eta)

    @property
    def interior(self) -> bool:
        return all(0.0 < v < 1.0 for v in self.astuple())

    def moduli(self) -> tuple[float, float, float]:
        """(|n|, |m|, |b|) reproducing these weights; inf at weight 0."""
        return tuple(math.sqrt((1.0 - v) / v) if v > 0 else math.inf for v in self.astuple())


def squared_normalizer(x: complex) -> float:
    """1/(1+|x|^2), computed without squaring a square root."""
    return 1.0 / (1.0 + abs(complex(x)) ** 2)


def weights_from_params(n: complex, m: complex, b: complex) -> SquaredWeights:
    return SquaredWeights(squared_normalizer(n), squared_normalizer(m), squared_normalizer(b))


def success_probability(n: complex, m: complex, b: complex) -> float:
    """Three-party success probability from the channel and basis moduli."""
    N2, M2, a2 = (squared_normalizer(x) for x in (n, m, b))
    n2, m2, b2 = abs(n) ** 2, abs(m) ** 2, abs(b) ** 2
    terms = (
        min(1.0, m2 * n2 * b2)
        + min(b2, m2 * n2)
        + min(m2, n2 * b2)
        + min(n2, m2 * b2)
    )
    return 2.0 * N2 * M2 * a2 * terms


def _p_weights(xi, zeta, eta):
    """Weight-form probability; works elementwise on arrays."""
    xc, zc, ec = 1.0 - xi, 1.0 - zeta, 1.0 - eta
    return 2.0 * (
        np.minimum(xi * zeta * eta, xc * zc * ec)
        + np.minimum(xi * zeta * ec, xc * zc * eta)
        + np.minimum(xi * zc * eta, xc * zeta * ec)
        + np.minimum(xc * zeta * eta, xi * zc * ec)
    )


def success_probability_weights(w: SquaredWeights) -> float:
    return float(_p_weights(w.xi, w.zeta, w.eta))


def canonicalize(w: SquaredWeights) -> SquaredWeights:
    xi, zeta, eta = (1.0 - v if v > 0.5 else v for v in w.astuple())
    if zeta > eta:
        zeta, eta = eta, zeta
    return SquaredWeights(xi, zeta, eta)


def is_canonical(w: SquaredWeights) -> bool:
    return 0.0 < w.xi <= 0.5 and 0.0 < w.zeta <= w.eta <= 0.5


class RegionLabel(enum.Enum):
    E = "E"
    F = "F"
    G = "G"


@dataclass(frozen=True)
class Region:
    """Classification result.

    ``ties`` lists the other regions whose closed conditions also hold at the
    point; ``tight`` flags which of the three defining inequalities are
    equalities (to relative ``TIE_RTOL``).
    """

    label: RegionLabel
    ties: frozenset[RegionLabel]
    tight: tuple[bool, bool, bool]

    @property
    def on_boundary(self) -> bool:
        return bool(self.ties)

    def admits(self, label: RegionLabel) -> bool:
        return label is self.label or label in self.ties


def _inequality_sides(w: SquaredWeights) -> list[tuple[float, float]]:
    xi, zeta, eta = w.astuple()
    xc, zc, ec = 1.0 - xi, 1.0 - zeta, 1.0 - eta
    return [
        (xi * zeta * ec, xc * zc * eta),
        (xi * zc * eta, xc * zeta * ec),
        (xc * zeta * eta, xi * zc * ec),
    ]


def _compare(lhs: float, rhs: float) -> int:
    """-1 for lhs < rhs, 0 when equal within tolerance, +1 for lhs > rhs."""
    if abs(lhs - rhs) <= TIE_RTOL * max(abs(lhs), abs(rhs)):
        return 0
    return -1 if lhs < rhs else 1


# Sign each region requires of (lhs - rhs) for the three inequalities.
_REGION_SIGNS = {
    RegionLabel.E: (-1, -1, -1),
    RegionLabel.F: (-1, -1, +1),
    RegionLabel.G: (-1, +1, -1),
}


def classify_region(w: SquaredWeights) -> Region:
    """Locate a canonical point in E, F or G; first match in that order wins."""
    if not is_canonical(w):
        raise ValueError(f"{w} is not in the canonical domain")
    signs = [_compare(lhs, rhs) for lhs, rhs in _inequality_sides(w)]
    matches = [
        label
        for label, wanted in _REGION_SIGNS.items()
        if all(s == 0 or s == want for s, want in zip(signs, wanted))
    ]
    if not matches:
        raise ArithmeticError(f"no region matches {w} (inequality signs {signs})")
    return Region(matches[0], frozenset(matches[1:]), tuple(s == 0 for s in signs))


def regional_formula(region: Region | RegionLabel, w: SquaredWeights) -> float:
    label = region.label if isinstance(region, Region) else RegionLabel(region)
    if not classify_region(w).admits(label):
        raise ValueError(f"{w} does not lie in region {label.value}")
    xi, zeta, eta = w.astuple()
    if label is RegionLabel.E:
        return 2.0 * (xi * (eta + zeta) + (1.0 - 2.0 * xi) * zeta * eta)
    if label is RegionLabel.F:
        return 2.0 * xi
    return 2.0 * zeta


def max_success_probability(xi: float) -> float:
    """Best success probability over the bases at fixed channel weight."""
    if not 0.0 < xi < 1.0:
        raise ValueError(f"xi={xi!r} must lie in (0, 1)")
    return 2.0 * min(xi, 1.0 - xi)


@dataclass(frozen=True)
class GridMaximum:
    p_star: float
    argmax: tuple[float, float]
    region: Region


def grid_axis(resolution: int) -> np.ndarray:
    """k/resolution for k = 1..resolution."""
    return np.arange(1, resolution + 1) / resolution


def grid_search_max(xi: float, resolution: int = 200) -> GridMaximum:
    """Exhaustive maximum over a (zeta, eta) grid at fixed xi.

    Ties go to the lexicographically smallest (zeta, eta).
    """
    if resolution < 10:
        raise ValueError("resolution must be at least 10")
    if not 0.0 < xi < 1.0:
        raise ValueError(f"xi={xi!r} must lie in (0, 1)")
    axis = grid_axis(resolution)
    zeta, eta = np.meshgrid(axis, axis, indexing="ij")
    values = _p_weights(xi, zeta, eta)
    flat = int(np.argmax(values))
    i, j = np.unravel_index(flat, values.shape)
    point = (float(axis[i]), float(axis[j]))
    region = classify_region(canonicalize(SquaredWeights(xi, *point)))
    return GridMaximum(float(values[i, j]), point, region)


@dataclass(frozen=True)
class BranchRecord:
    bell: BellOutcome
    x: XOutcome
    joint_probability: float
    coeff: ConditionalCoefficients
    conversion_probability: float

    @property
    def conversion_times_joint(self) -> float:
        return self.joint_probability * self.conversion_probability


def branch_profile(
    n: complex,
    m: complex,
    b: complex,
    alpha: complex = 1 / math.sqrt(2),
    beta: complex = 1 / math.sqrt(2),
) -> list[BranchRecord]:
    """Closed-form joint and conversion probabilities of the eight branches.

    Joint probabilities depend on the input (alpha, beta); their products
    with the conversion probabilities do not.
    """
    norm = math.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
    alpha, beta = alpha / norm, beta / norm
    cfg = ChannelConfig.three_party(n, m, b)
    scale = squared_normalizer(n) * squared_normalizer(m) * squared_normalizer(b)
    records = []
    for bell, (x,) in all_branches(3):
        _, coeff = three_party_coefficients(bell, (x,), cfg)
        weight = abs(alpha * coeff.c) ** 2 + abs(beta * coeff.d) ** 2
        joint = scale * weight
        if weight > 0:
            conversion = min(abs(coeff.c) ** 2, abs(coeff.d) ** 2) / weight
        else:
            conversion = 0.0
        records.append(BranchRecord(bell, x, joint, coeff, conversion))
    return records


def measurement_basis(cfg: ChannelConfig) -> OrthonormalBasis:
    """Product of the Bell basis and every intermediate X basis, branch ordered."""
    vectors = [v.amplitudes for v in bases.bell_basis(cfg.m).vectors]
    for b in cfg.b_list:
        xv = [v.amplitudes for v in bases.x_basis(b).vectors]
        vectors = [np.kron(u, w) for u in vectors for w in xv]
    return OrthonormalBasis(tuple(Ket(v) for v in vectors))


def branch_residuals(cfg: ChannelConfig, state: Ket) -> np.ndarray:
    """Unnormalized receiver amplitudes for every branch, by direct projection."""
    joint = tensor(state, bases.make_ghz(cfg.n, cfg.L))
    return project_outcomes(joint, measurement_basis(cfg), range(cfg.L))


def lparty_success_oracle(cfg: ChannelConfig) -> float:
    """Success probability for any party count by enumerating branches.

    The receiver's residual is linear in the input, alpha*r0 + beta*r1, with
    r0 and r1 orthogonal.  Each branch then contributes
    min(|r0|^2, |r1|^2), independent of the input.
    """
    if cfg.L > MAX_ORACLE_PARTIES:
        raise ValueError(f"oracle limited to L <= {MAX_ORACLE_PARTIES}")
    r0 = branch_residuals(cfg, basis_ket(0, 1))
    r1 = branch_residuals(cfg, basis_ket(1, 1))
    overlap = np.abs(np.sum(r0.conj() * r1, axis=1))
    if np.any(overlap > 1e-12):
        raise ArithmeticError("branch residuals are not orthogonal")
    w0 = np.sum(np.abs(r0) ** 2, axis=1)
    w1 = np.sum(np.abs(r1) ** 2, axis=1)
    return float(np.sum(np.minimum(w0, w1)))


def analytic_success(cfg: ChannelConfig) -> float:
    if cfg.L == 3:
        return success_probability(cfg.n, cfg.m, cfg.b_list[0])
    return lparty_success_oracle(cfg)


def branch_table(cfg: ChannelConfig) -> list[dict]:
    """Per-branch correction, coefficients and input-independent success mass.

    The mass of a branch is N^2 M^2 prod(a_i^2) min(|c|^2, |d|^2).
    """
    scale = squared_normalizer(cfg.n) * squared_normalizer(cfg.m)
    for b in cfg.b_list:
        scale *= squared_normalizer(b)
    rows = []
    for bell, xs in all_branches(cfg.L):
        pauli, coeff = protocol.branch_coefficients(bell, xs, cfg)
        rows.append(
            {
                "branch": protocol.branch_label(bell, xs),
                "pauli": pauli,
                "c": coeff.c,
                "d": coeff.d,
                "success_mass": scale * min(abs(coeff.c) ** 2, abs(coeff.d) ** 2),
            }
        )
    return rows


def lparty_success_closed_form(cfg: ChannelConfig) -> float:
    return float(sum(row["success_mass"] for row in branch_table(cfg)))

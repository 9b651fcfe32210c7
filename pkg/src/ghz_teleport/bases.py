"""Parameterized bases and channel states used by the protocol."""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .statevec import Ket, OrthonormalBasis


class BellOutcome(enum.IntEnum):
    PHI_PLUS = 0
    PHI_MINUS = 1
    PSI_PLUS = 2
    PSI_MINUS = 3

    @property
    def label(self) -> str:
        return ("phi+", "phi-", "psi+", "psi-")[self]


class XOutcome(enum.IntEnum):
    PLUS = 0
    MINUS = 1

    @property
    def label(self) -> str:
        return "+-"[self]


def normalizer(x: complex) -> float:
    """1/sqrt(1+|x|^2): the N, M and a prefactors."""
    x = complex(x)
    if not cmath.isfinite(x):
        raise ValueError("parameter must be finite")
    return 1.0 / math.sqrt(1.0 + abs(x) ** 2)


@dataclass(frozen=True, eq=False)
class BellBasis(OrthonormalBasis):
    """Generalized Bell basis, ordered (phi+, phi-, psi+, psi-)."""

    m: complex = 1.0

    @property
    def states(self) -> tuple[Ket, ...]:
        return self.vectors


@dataclass(frozen=True, eq=False)
class XBasis(OrthonormalBasis):
    """Generalized X basis, ordered (+, -)."""

    b: complex = 1.0

    @property
    def states(self) -> tuple[Ket, ...]:
        return self.vectors


def bell_basis(m: complex) -> BellBasis:
    m = complex(m)
    M = normalizer(m)
    mc = m.conjugate()
    # amplitude order |00>, |01>, |10>, |11>
    rows = [
        [1, 0, 0, m],
        [mc, 0, 0, -1],
        [0, 1, m, 0],
        [0, mc, -1, 0],
    ]
    return BellBasis(tuple(Ket(M * np.array(r, dtype=complex)) for r in rows), m=m)


def x_basis(b: complex) -> XBasis:
    b = complex(b)
    a = normalizer(b)
    rows = [[1, b], [b.conjugate(), -1]]
    return XBasis(tuple(Ket(a * np.array(r, dtype=complex)) for r in rows), b=b)


def make_ghz(n: complex, L: int) -> Ket:
    """N(|0...0> + n|1...1>) on L qubits."""
    if int(L) != L or L < 2:
        raise ValueError(f"GHZ channel needs L >= 2 parties, got {L!r}")
    n = complex(n)
    N = normalizer(n)
    vec = np.zeros(2**L, dtype=complex)
    vec[0] = N
    vec[-1] = n * N
    return Ket(vec)


@dataclass(frozen=True)
class ChannelConfig:
    """Protocol parameters.

    ``b_list`` holds one X-basis parameter per intermediate party
    (parties 2..L-1), so its length is L-2.
    """

    n: complex
    m: complex
    b_list: tuple[complex, ...] = field(default=())
    L: int = 3

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"L must be an integer >= 2, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "n", complex(self.n))
        object.__setattr__(self, "m", complex(self.m))
        b_list = tuple(complex(b) for b in self.b_list)
        if len(b_list) != self.L - 2:
            raise ValueError(f"b_list needs L-2 = {self.L - 2} entries, got {len(b_list)}")
        object.__setattr__(self, "b_list", b_list)
        for value in (self.n, self.m, *b_list):
            if not cmath.isfinite(value):
                raise ValueError("channel parameters must be finite")

    @classmethod
    def three_party(cls, n: complex, m: complex, b: complex) -> ChannelConfig:
        return cls(n=n, m=m, b_list=(b,), L=3)

    @classmethod
    def uniform(cls, n: complex, m: complex, b: complex, L: int) -> ChannelConfig:
        """All intermediates share one X-basis parameter."""
        return cls(n=n, m=m, b_list=(complex(b),) * (L - 2), L=L)

    @property
    def b(self) -> complex:
        if self.L != 3:
            raise AttributeError("a single b is only defined for three parties")
        return self.b_list[0]

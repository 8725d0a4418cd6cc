"""Rate splitting by the max construction.

Alice's input ``X ~ P_X`` is written as ``X = max(U, V)`` for independent
``U ~ P_U`` and ``V ~ P_V`` under the declared alphabet order, with

    F_U(u) = theta * F_X(u) + 1 - theta
    F_V(v) = F_X(v) / F_U(v)        (0 where F_X(v) = 0)

``theta = 0`` makes ``U`` a point mass on the smallest symbol (so ``V``
carries all of ``X``); ``theta = 1`` does the same for ``V``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

__all__ = [
    "FiniteDist",
    "SplitTriple",
    "recombine",
    "split_control_state",
    "split_distribution",
]

PROB_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteDist:
    """Probability vector over an ordered alphabet.

    The alphabet order is the one given; it is never re-sorted.  Symbols of
    probability zero stay in the alphabet.
    """

    alphabet: tuple
    probs: np.ndarray

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        probs = np.array(self.probs, dtype=float).ravel()
        if len(alphabet) != len(probs):
            raise ValueError(f"{len(alphabet)} symbols but {len(probs)} probabilities")
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet symbols must be distinct")
        if not len(alphabet):
            raise ValueError("alphabet must be nonempty")
        if np.any(probs < -PROB_TOL):
            raise ValueError(f"negative probability in {probs}")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {probs.sum():.15g}, not 1")
        probs = np.clip(probs, 0.0, None)
        probs.setflags(write=False)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def point_mass(cls, alphabet: Sequence[Hashable], symbol) -> "FiniteDist":
        alphabet = tuple(alphabet)
        p = np.zeros(len(alphabet))
        p[alphabet.index(symbol)] = 1.0
        return cls(alphabet, p)

    @classmethod
    def uniform(cls, alphabet: Sequence[Hashable]) -> "FiniteDist":
        alphabet = tuple(alphabet)
        return cls(alphabet, np.full(len(alphabet), 1.0 / len(alphabet)))

    def __len__(self):
        return len(self.alphabet)

    def __getitem__(self, symbol) -> float:
        return float(self.probs[self.index(symbol)])

    def index(self, symbol) -> int:
        try:
            return self.alphabet.index(symbol)
        except ValueError:
            raise KeyError(f"unknown symbol {symbol!r}") from None

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def power(self, n: int) -> "FiniteDist":
        """Distribution of ``n`` iid draws, on tuples in lexicographic order."""
        alphabet = tuple(itertools.product(self.alphabet, repeat=n))
        probs = np.ones(1)
        for _ in range(n):
            probs = np.kron(probs, self.probs)
        return FiniteDist(alphabet, probs)

    def __repr__(self):
        items = ", ".join(f"{a!r}: {p:.6g}" for a, p in zip(self.alphabet, self.probs))
        return f"FiniteDist({{{items}}})"


def _from_cdf(alphabet, cdf) -> FiniteDist:
    p = np.diff(np.concatenate([[0.0], cdf]))
    p[np.abs(p) <= PROB_TOL] = 0.0
    if np.any(p < 0):
        raise FloatingPointError(f"CDF is not monotone: {cdf}")
    return FiniteDist(alphabet, p / p.sum())


def recombine(u, v, alphabet: Sequence[Hashable]):
    """The order-maximum of two symbols."""
    alphabet = tuple(alphabet)
    try:
        return alphabet[max(alphabet.index(u), alphabet.index(v))]
    except ValueError:
        raise KeyError(f"symbol not in alphabet: {u!r} or {v!r}") from None


@dataclass(frozen=True)
class SplitTriple:
    theta: float
    p_u: FiniteDist
    p_v: FiniteDist

    @property
    def alphabet(self) -> tuple:
        return self.p_u.alphabet

    def combine(self, u, v):
        return recombine(u, v, self.alphabet)

    def pushforward(self) -> FiniteDist:
        """Distribution of ``max(U, V)``, by enumerating all symbol pairs."""
        out = np.zeros(len(self.alphabet))
        for i, pu in enumerate(self.p_u.probs):
            for j, pv in enumerate(self.p_v.probs):
                out[max(i, j)] += pu * pv
        return FiniteDist(self.alphabet, out)


def split_distribution(p_x: FiniteDist, theta: float) -> SplitTriple:
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if theta in (0.0, 1.0):
        # endpoints exactly: one part is a point mass, the other is P_X itself
        point = FiniteDist.point_mass(p_x.alphabet, p_x.alphabet[0])
        u, v = (point, p_x) if theta == 0.0 else (p_x, point)
        return SplitTriple(float(theta), u, v)
    f_x = p_x.cdf()
    f_x[-1] = 1.0
    f_u = theta * f_x + (1.0 - theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        f_v = np.where(f_x > 0, f_x / f_u, 0.0)
    f_v[-1] = 1.0
    return SplitTriple(float(theta), _from_cdf(p_x.alphabet, f_u), _from_cdf(p_x.alphabet, f_v))


def split_control_state(cs, theta: float):
    """Replace the ``X`` label of a control state with independent ``U, V`` labels.

    The new labels are ``(U, V, Y)`` and the quantum part for ``(u, v, y)`` is
    the original one for ``(max(u, v), y)``.
    """
    from .channel import ControlState

    names = [name for name, _ in cs.labels]
    if names != ["X", "Y"]:
        raise ValueError(f"expected labels (X, Y), got {names}")
    p_x, p_y = cs.labels[0][1], cs.labels[1][1]
    st = split_distribution(p_x, theta)
    table = {}
    for u in p_x.alphabet:
        for v in p_x.alphabet:
            x = st.combine(u, v)
            for y in p_y.alphabet:
                table[(u, v, y)] = cs.table[(x, y)]
    return ControlState((("U", st.p_u), ("V", st.p_v), ("Y", p_y)), table,
                        cs.quantum, split=st)

"""Monte-Carlo checks of covering and an end-to-end private code simulation.

Random numbers come from numpy's PCG64.  Trial ``t`` of an experiment with
base seed ``s`` uses ``Generator(PCG64(SeedSequence(s, spawn_key=(t,))))``;
the codebook of sender number ``i`` in :func:`end_to_end_run` uses
``spawn_key=(i,)``.  Results are therefore identical across runs, thread
counts and trial orders.

Covering experiments draw, for every sender, the multinomial vector of
symbol counts inside one block rather than the block itself.  The block
average depends on the block only through these counts, so this is exact
in distribution and keeps block sizes of ``2**20`` and more cheap.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .channel import ControlState, CqMacChannel, build_control_state
from .qla import DensityMatrix
from .regions import (ToleranceConfig, decode_region_3, private_region_theta, project_to_2d,
                      secrecy_thresholds)
from .split import FiniteDist, split_control_state

__all__ = [
    "DECODER_LABEL",
    "MAX_PGM_MESSAGES",
    "Codebook",
    "CoveringReport",
    "SenderBook",
    "covering_bound",
    "covering_deviation",
    "covering_experiment",
    "end_to_end_run",
    "make_rng",
    "merge_codebooks",
    "pgm_decode_error",
    "pgm_error",
    "sample_codebook",
]

DECODER_LABEL = "pretty good measurement (stand-in decoder)"
MAX_PGM_MESSAGES = 256
PGM_SUPPORT_TOL = 1e-12


def make_rng(seed: int, stream: int | None = None) -> np.random.Generator:
    key = () if stream is None else (int(stream),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


# -- codebooks --------------------------------------------------------------------------

@dataclass(frozen=True)
class SenderBook:
    dist: FiniteDist
    symbols: tuple
    num_blocks: int
    block_size: int

    def block(self, m: int) -> tuple:
        if not 0 <= m < self.num_blocks:
            raise IndexError(f"block {m} out of range 0..{self.num_blocks - 1}")
        return self.symbols[m * self.block_size:(m + 1) * self.block_size]

    def block_counts(self, m: int) -> np.ndarray:
        """Symbol multiplicities of block ``m`` over ``dist.alphabet``."""
        c = Counter(self.block(m))
        return np.array([c.get(a, 0) for a in self.dist.alphabet], dtype=float)


@dataclass(frozen=True)
class Codebook:
    """Block-partitioned codebooks, one per sender, keyed by label name."""

    senders: Mapping[str, SenderBook]
    seed: int

    def __getitem__(self, name) -> SenderBook:
        return self.senders[name]


def sample_codebook(dist: FiniteDist, num_blocks: int, block_size: int, seed: int,
                    name: str = "X", stream: int | None = None) -> Codebook:
    """Draw ``num_blocks * block_size`` iid symbols from ``dist``."""
    if num_blocks < 1 or block_size < 1:
        raise ValueError("num_blocks and block_size must be >= 1")
    rng = make_rng(seed, stream)
    idx = rng.choice(len(dist), size=num_blocks * block_size, p=dist.probs)
    syms = tuple(dist.alphabet[i] for i in idx)
    return Codebook({name: SenderBook(dist, syms, int(num_blocks), int(block_size))}, int(seed))


def merge_codebooks(*books: Codebook) -> Codebook:
    senders = {}
    for b in books:
        for k, v in b.senders.items():
            if k in senders:
                raise ValueError(f"sender {k!r} appears twice")
            senders[k] = v
    return Codebook(senders, books[0].seed)


# -- covering ---------------------------------------------------------------------------

def _weighted_average(states: Mapping[tuple, DensityMatrix], alphabets: Sequence[tuple],
                      weights: Sequence[np.ndarray]) -> np.ndarray:
    """``sum_key prod_i w_i[key_i] * states[key]`` over the product alphabet."""
    out = None
    for idx in itertools.product(*(np.nonzero(w)[0] for w in weights)):
        coef = math.prod(w[i] for w, i in zip(weights, idx))
        key = tuple(a[i] for a, i in zip(alphabets, idx))
        try:
            term = coef * states[key].data
        except KeyError:
            raise KeyError(f"no state for symbols {key}") from None
        out = term if out is None else out + term
    return out


def _norm1(m: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(m))))


def covering_deviation(e_states: Mapping[tuple, DensityMatrix], blocks: Sequence[Sequence],
                       reference: DensityMatrix) -> float:
    """``|| mean over the block product of e_states - reference ||_1``.

    ``blocks`` gives one symbol sequence per key position of ``e_states``;
    every combination of one symbol from each block is averaged uniformly.
    """
    if any(len(b) == 0 for b in blocks):
        raise ValueError("blocks must be nonempty")
    alphabets, weights = [], []
    for b in blocks:
        c = Counter(b)
        alpha = tuple(c)
        alphabets.append(alpha)
        weights.append(np.array([c[a] / len(b) for a in alpha]))
    avg = _weighted_average(e_states, alphabets, weights)
    if all(np.array_equal(st.data, reference.data) for st in e_states.values()):
        return 0.0
    return _norm1(avg - reference.data)


def covering_bound(num_senders: int, delta: float) -> float:
    """Expected-deviation guarantee for 1, 2 or 3 successively covered senders."""
    if num_senders == 1:
        return delta
    if num_senders == 2:
        return 20 * delta ** 0.125
    if num_senders == 3:
        return 40 * delta ** 0.125
    raise ValueError("covering bounds exist for 1, 2 or 3 senders")


@dataclass(frozen=True)
class CoveringReport:
    params: Mapping
    mean_deviation: float
    stderr: float | None
    theoretical_bound: float
    passed: bool
    deviations: tuple = field(default=(), repr=False)
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return {"params": dict(self.params), "mean_deviation": self.mean_deviation,
                "stderr": self.stderr, "theoretical_bound": self.theoretical_bound,
                "pass": self.passed, "warnings": list(self.warnings)}


def covering_experiment(cs: ControlState, block_sizes: Mapping[str, int], tol: ToleranceConfig,
                        trials: int = 200, seed: int = 0,
                        thresholds: Mapping[str, float] | None = None) -> CoveringReport:
    """Average eavesdropper deviation over random block draws.

    Parameters
    ----------
    cs : ControlState
        Unsplit ``(X, Y)`` or split ``(U, V, Y)`` state with an ``E`` register.
    block_sizes : mapping
        Label name to block size for every covered sender; uncovered labels
        are averaged with their exact distribution.
    thresholds : mapping, optional
        Label name to required ``log2`` block size, recorded in the report.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    names = cs.label_names
    unknown = set(block_sizes) - set(names)
    if unknown:
        raise ValueError(f"unknown senders {sorted(unknown)}; labels are {names}")
    if any(int(k) < 1 for k in block_sizes.values()):
        raise ValueError("block sizes must be >= 1")
    e_table = cs.quantum_table("E")
    keys = list(cs.keys())
    dists = [d for _, d in cs.labels]
    # sum_k (w_k - p_k)(rho_k - rho_0) equals avg - rho^E because both weight
    # vectors sum to 1; it is exactly zero when all outputs coincide
    base = e_table[keys[0]].data
    stack = np.array([e_table[k].data - base for k in keys])
    p = np.array([cs.prob(k) for k in keys])

    devs = []
    for t in range(trials):
        rng = make_rng(seed, t)
        weights = []
        for name, d in zip(names, dists):
            if name in block_sizes:
                k = int(block_sizes[name])
                weights.append(rng.multinomial(k, d.probs) / k)
            else:
                weights.append(np.asarray(d.probs))
        w = np.array([math.prod(weights[i][d.index(s)] for i, (d, s) in enumerate(zip(dists, key)))
                      for key in keys])
        devs.append(_norm1(np.tensordot(w - p, stack, axes=1)))

    mean = math.fsum(devs) / trials
    stderr = None
    warnings = []
    if trials > 1:
        var = math.fsum((d - mean) ** 2 for d in devs) / (trials - 1)
        stderr = math.sqrt(var / trials)
        margin = mean + 2 * stderr
    else:
        warnings.append("single trial: no standard error, pass judged on the sample alone")
        margin = mean
    bound = covering_bound(len(block_sizes), tol.delta)
    params = {"block_sizes": {k: int(v) for k, v in block_sizes.items()},
              "delta": tol.delta, "eps_prime": tol.eps_prime, "trials": trials, "seed": seed}
    if thresholds is not None:
        params["log2_thresholds"] = dict(thresholds)
        params["meets_thresholds"] = all(math.log2(block_sizes[k]) >= thresholds[k] - 1e-12
                                         for k in block_sizes)
    return CoveringReport(params, mean, stderr, bound, bool(margin <= bound), tuple(devs),
                          tuple(warnings))


# -- decoding ---------------------------------------------------------------------------

def pgm_error(states: Sequence[np.ndarray]) -> float:
    """Average error of the pretty-good measurement for equiprobable ``states``."""
    states = [np.asarray(s.data if isinstance(s, DensityMatrix) else s) for s in states]
    total = sum(states)
    w, v = np.linalg.eigh(total)
    if w[-1] <= 0:
        raise FloatingPointError("PGM normaliser is zero")
    keep = w > PGM_SUPPORT_TOL * w[-1]
    inv_sqrt = (v[:, keep] / np.sqrt(w[keep])) @ v[:, keep].conj().T
    succ = [np.real(np.trace(inv_sqrt @ s @ inv_sqrt @ s)) for s in states]
    err = 1.0 - math.fsum(succ) / len(states)
    return float(min(1.0, max(0.0, err)))


def _message_states(book: Codebook, table: Mapping[tuple, DensityMatrix], label_order: Sequence[str],
                    groups: Sequence[Sequence[str]]) -> list[np.ndarray]:
    """Block-average outputs for every message tuple (one message per group)."""
    for g in groups:
        if len({book[n].num_blocks for n in g}) != 1:
            raise ValueError(f"senders {g} share a message and need equal block counts")
    counts = [book[g[0]].num_blocks for g in groups]
    alphabets = [book[n].dist.alphabet for n in label_order]
    out = []
    for msg in itertools.product(*(range(c) for c in counts)):
        block_of = {n: m for g, m in zip(groups, msg) for n in g}
        weights = [book[n].block_counts(block_of[n]) / book[n].block_size for n in label_order]
        out.append(_weighted_average(table, alphabets, weights))
    return out


def pgm_decode_error(codebook: Codebook, c_states: Mapping[tuple, DensityMatrix],
                     label_order: Sequence[str] = ("X", "Y"),
                     groups: Sequence[Sequence[str]] | None = None,
                     max_messages: int = MAX_PGM_MESSAGES) -> float:
    """PGM error over all message tuples of a block code.

    ``label_order`` gives the key order of ``c_states``; ``groups`` says
    which senders share a message index (default: one message per sender).
    The output for a message tuple is the uniform average over each
    sender's block.
    """
    groups = [[n] for n in label_order] if groups is None else [list(g) for g in groups]
    n_msgs = math.prod(codebook[g[0]].num_blocks for g in groups)
    if n_msgs > max_messages:
        raise ValueError(f"{n_msgs} message tuples exceed the limit {max_messages}")
    return pgm_error(_message_states(codebook, c_states, label_order, groups))


# -- end to end -------------------------------------------------------------------------

def end_to_end_run(ch: CqMacChannel, p_x: FiniteDist, p_y: FiniteDist, tol: ToleranceConfig,
                   theta: float, messages: tuple[int, int] = (2, 2), seed: int = 0,
                   block_sizes: Mapping[str, int] | None = None,
                   max_block_size: int = 64) -> dict:
    """Simulate the split, block-randomised private code once.

    Alice's message ``m`` picks block ``m`` of both her ``U`` and ``V``
    codebooks, and she sends ``max(u, v)`` for uniformly random in-block
    codewords; Bob's message picks a block of his ``Y`` codebook.  Block
    sizes default to the smallest powers of two meeting the secrecy
    thresholds, capped at ``max_block_size``.

    Returns a JSON-ready dict.
    """
    m_a, m_b = (int(m) for m in messages)
    if m_a < 1 or m_b < 1:
        raise ValueError("message counts must be >= 1")
    cs = build_control_state(ch, p_x, p_y)
    split = split_control_state(cs, theta)
    s = project_to_2d(decode_region_3(split, tol.eps))
    thr = secrecy_thresholds(split, tol)
    priv = private_region_theta(s, thr, tol)

    warnings = []
    wanted = thr.block_sizes()
    if block_sizes is None:
        sizes = {k: min(v, max_block_size) for k, v in wanted.items()}
        if any(wanted[k] > sizes[k] for k in sizes):
            warnings.append(f"block sizes capped at {max_block_size}; thresholds ask for {wanted}")
    else:
        sizes = {k: int(block_sizes[k]) for k in ("U", "V", "Y")}
    rates = (math.log2(m_a), math.log2(m_b))
    feasible = priv.contains(rates)
    if not feasible:
        warnings.append("message rates lie outside the private region for this theta")

    st = split.split
    book = merge_codebooks(
        sample_codebook(st.p_u, m_a, sizes["U"], seed, "U", stream=0),
        sample_codebook(st.p_v, m_a, sizes["V"], seed, "V", stream=1),
        sample_codebook(p_y, m_b, sizes["Y"], seed, "Y", stream=2),
    )
    order = split.label_names
    groups = [["U", "V"], ["Y"]]
    c_states = split.quantum_table("C")
    decode_err = pgm_decode_error(book, c_states, order, groups)
    ref = split.marginal(["E"]).data
    devs = [_norm1(e - ref) for e in _message_states(book, split.quantum_table("E"), order, groups)]

    return {
        "theta": float(theta),
        "messages": [m_a, m_b],
        "rates": list(rates),
        "block_sizes": sizes,
        "threshold_block_sizes": wanted,
        "thresholds": thr.to_dict(),
        "rates_in_private_region": bool(feasible),
        "decoder": DECODER_LABEL,
        "decode_error": decode_err,
        "secrecy_max_deviation": max(devs),
        "secrecy_mean_deviation": math.fsum(devs) / len(devs),
        "targets": {
            "decode_49_sqrt_eps": 49 * math.sqrt(tol.eps),
            "decode_eps_1_8": tol.eps ** 0.125,
            "secrecy_40_delta_1_8": 40 * tol.delta ** 0.125,
        },
        "seed": seed,
        "warnings": warnings,
    }

"""Classical-quantum multiple access channels and their control states.

A channel maps an input pair ``(x, y)`` to a state on ``C (x) E`` (receiver
and eavesdropper).  Channel files are JSON documents::

    {
      "x_alphabet": ["0", "1"], "y_alphabet": ["0", "1"],
      "p_x": [0.5, 0.5], "p_y": [0.5, 0.5],
      "dim_c": 2, "dim_e": 2,
      "outputs": [{"x": "0", "y": "0", "matrix": [[[re, im], ...], ...]}, ...]
    }

``matrix`` is row-major; each entry is an ``[re, im]`` pair.  A flat list of
``D*D`` pairs is accepted too.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np

from .qla import DEFAULT_TOL, DensityMatrix, InvariantError, partial_trace, permute, tensor
from .split import FiniteDist

__all__ = [
    "MAX_CE_DIM",
    "ChannelFile",
    "ChannelParseError",
    "ChannelValidationError",
    "ControlState",
    "CqMacChannel",
    "KrausChannelSpec",
    "build_control_state",
    "channel_to_json",
    "load_channel",
    "parse_channel",
    "realize_kraus",
    "validate_channel",
]

MAX_CE_DIM = 16


class ChannelParseError(ValueError):
    """The channel document is not well-formed JSON or lacks required fields."""


class ChannelValidationError(ValueError):
    """One or more channel outputs violate a density-matrix invariant.

    ``issues`` is a list of dicts with keys ``x``, ``y``, ``invariant`` and
    ``message``.
    """

    def __init__(self, issues: list[dict]):
        self.issues = issues
        lines = [f"({i['x']!r}, {i['y']!r}): {i['invariant']}: {i['message']}" for i in issues]
        super().__init__("invalid channel:\n  " + "\n  ".join(lines))


@dataclass(frozen=True, eq=False)
class CqMacChannel:
    x_alphabet: tuple
    y_alphabet: tuple
    dim_c: int
    dim_e: int
    outputs: Mapping[tuple, DensityMatrix]

    def __getitem__(self, xy) -> DensityMatrix:
        return self.outputs[tuple(xy)]

    def receiver_states(self) -> dict:
        return {k: partial_trace(v, [0]) for k, v in self.outputs.items()}

    def eavesdropper_states(self) -> dict:
        return {k: partial_trace(v, [1]) for k, v in self.outputs.items()}

    def tensor_power(self, n: int) -> "CqMacChannel":
        """``n`` parallel uses, as one channel on tuple alphabets with ``C^n (x) E^n``."""
        xs = tuple(itertools.product(self.x_alphabet, repeat=n))
        ys = tuple(itertools.product(self.y_alphabet, repeat=n))
        # C1 E1 C2 E2 ... -> C1 C2 ... E1 E2 ...
        order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
        dc, de = self.dim_c ** n, self.dim_e ** n
        outputs = {}
        for xv in xs:
            for yv in ys:
                st = tensor(*(self.outputs[(a, b)] for a, b in zip(xv, yv)))
                st = permute(st, order)
                outputs[(xv, yv)] = DensityMatrix(st.data, (dc, de))
        return CqMacChannel(xs, ys, dc, de, outputs)


@dataclass(frozen=True)
class ChannelFile:
    channel: CqMacChannel
    p_x: FiniteDist
    p_y: FiniteDist


def _parse_matrix(raw, dim: int) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape == (dim, dim, 2):
        pass
    elif arr.shape == (dim * dim, 2):
        arr = arr.reshape(dim, dim, 2)
    else:
        raise ChannelParseError(
            f"matrix must be {dim}x{dim} [re, im] pairs, got array of shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


_REQUIRED = ("x_alphabet", "y_alphabet", "dim_c", "dim_e", "outputs")


def validate_channel(doc: Mapping, tol: float = DEFAULT_TOL,
                     max_ce_dim: int = MAX_CE_DIM) -> CqMacChannel:
    """Build a channel from a parsed document, checking every invariant.

    Structural problems (missing fields, bad shapes) raise
    :class:`ChannelParseError`; every output that fails a density-matrix
    invariant, and every missing ``(x, y)`` entry, is collected into a single
    :class:`ChannelValidationError`.
    """
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise ChannelParseError(f"missing field(s): {', '.join(missing)}")
    xs, ys = tuple(doc["x_alphabet"]), tuple(doc["y_alphabet"])
    if not xs or not ys:
        raise ChannelParseError("alphabets must be nonempty")
    if len(set(xs)) != len(xs) or len(set(ys)) != len(ys):
        raise ChannelParseError("alphabet symbols must be distinct")
    try:
        dc, de = int(doc["dim_c"]), int(doc["dim_e"])
    except (TypeError, ValueError) as exc:
        raise ChannelParseError(f"bad dimensions: {exc}") from None
    if dc < 1 or de < 1:
        raise ChannelParseError("dim_c and dim_e must be >= 1")
    dim = dc * de
    if dim > max_ce_dim:
        raise ChannelValidationError([{
            "x": None, "y": None, "invariant": "dimension",
            "message": f"dim C * dim E = {dim} exceeds the cap {max_ce_dim}"}])

    issues = []
    outputs = {}
    for entry in doc["outputs"]:
        try:
            x, y, raw = entry["x"], entry["y"], entry["matrix"]
        except (KeyError, TypeError):
            raise ChannelParseError(f"output entry needs x, y and matrix: {entry!r}") from None
        if x not in xs or y not in ys:
            issues.append({"x": x, "y": y, "invariant": "alphabet",
                           "message": "input pair not in the declared alphabets"})
            continue
        try:
            mat = _parse_matrix(raw, dim)
        except ChannelParseError as exc:
            issues.append({"x": x, "y": y, "invariant": "dimension", "message": str(exc)})
            outputs[(x, y)] = None
            continue
        if (x, y) in outputs:
            issues.append({"x": x, "y": y, "invariant": "duplicate",
                           "message": "more than one output for this input pair"})
            continue
        try:
            outputs[(x, y)] = DensityMatrix(mat, (dc, de), tol=tol)
        except InvariantError as exc:
            issues.append({"x": x, "y": y, "invariant": exc.kind, "message": str(exc)})
            outputs[(x, y)] = None
    for x in xs:
        for y in ys:
            if (x, y) not in outputs:
                issues.append({"x": x, "y": y, "invariant": "missing",
                               "message": "no output given for this input pair"})
    if issues:
        raise ChannelValidationError(issues)
    return CqMacChannel(xs, ys, dc, de, outputs)


def parse_channel(doc: Mapping, **kw) -> ChannelFile:
    """Channel plus its input distributions (``p_x``/``p_y`` default to uniform)."""
    ch = validate_channel(doc, **kw)
    try:
        p_x = FiniteDist(ch.x_alphabet, doc["p_x"]) if "p_x" in doc else FiniteDist.uniform(ch.x_alphabet)
        p_y = FiniteDist(ch.y_alphabet, doc["p_y"]) if "p_y" in doc else FiniteDist.uniform(ch.y_alphabet)
    except ValueError as exc:
        raise ChannelValidationError([{"x": None, "y": None, "invariant": "distribution",
                                       "message": str(exc)}]) from None
    return ChannelFile(ch, p_x, p_y)


def load_channel(path, **kw) -> ChannelFile:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChannelParseError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ChannelParseError(f"{path}: top level must be a JSON object")
    return parse_channel(doc, **kw)


def channel_to_json(ch: CqMacChannel, p_x: FiniteDist | None = None,
                    p_y: FiniteDist | None = None) -> dict:
    doc = {
        "x_alphabet": list(ch.x_alphabet),
        "y_alphabet": list(ch.y_alphabet),
        "dim_c": ch.dim_c,
        "dim_e": ch.dim_e,
    }
    if p_x is not None:
        doc["p_x"] = [float(p) for p in p_x.probs]
    if p_y is not None:
        doc["p_y"] = [float(p) for p in p_y.probs]
    doc["outputs"] = [
        {"x": x, "y": y,
         "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in ch[(x, y)].data]}
        for x in ch.x_alphabet for y in ch.y_alphabet]
    return doc


@dataclass(frozen=True, eq=False)
class ControlState:
    """Classical labels with independent distributions, each tuple tagged by a quantum state.

    ``labels`` is an ordered tuple of ``(name, FiniteDist)``; ``table`` maps
    a label tuple (in that order) to a state on the ``quantum`` registers,
    given as ``(name, dim)`` pairs.  Register names must be unique.
    """

    labels: tuple
    table: Mapping[tuple, DensityMatrix]
    quantum: tuple = (("C", 2), ("E", 2))
    split: object = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple((n, d) for n, d in self.labels))
        object.__setattr__(self, "quantum", tuple((n, int(d)) for n, d in self.quantum))
        names = self.registers
        if len(set(names)) != len(names):
            raise ValueError(f"register names must be unique: {names}")
        qdims = tuple(d for _, d in self.quantum)
        for key in itertools.product(*(d.alphabet for _, d in self.labels)):
            if key not in self.table:
                raise KeyError(f"control state has no quantum part for labels {key}")
            if self.table[key].dims != qdims and self.table[key].dim != int(np.prod(qdims)):
                raise ValueError(f"state for {key} does not live on {qdims}")

    @property
    def registers(self) -> list[str]:
        return [n for n, _ in self.labels] + [n for n, _ in self.quantum]

    @property
    def label_names(self) -> list[str]:
        return [n for n, _ in self.labels]

    def dist(self, name: str) -> FiniteDist:
        return dict(self.labels)[name]

    def keys(self):
        return itertools.product(*(d.alphabet for _, d in self.labels))

    def prob(self, key) -> float:
        p = 1.0
        for sym, (_, d) in zip(key, self.labels):
            p *= d[sym]
        return p

    def _quantum_marginal(self, key, keep: list[int]) -> DensityMatrix:
        st = self.table[key]
        qdims = tuple(d for _, d in self.quantum)
        if st.dims != qdims:
            st = st.with_dims(qdims)
        return partial_trace(st, keep)

    def marginal(self, names: Sequence[str]) -> DensityMatrix:
        """Reduced state on the named registers, in the order given.

        Label registers are embedded as diagonal classical registers.
        """
        names = list(names)
        all_names = self.registers
        unknown = [n for n in names if n not in all_names]
        if unknown or not names or len(set(names)) != len(names):
            raise ValueError(f"bad register selection {names}; registers are {all_names}")
        label_idx = [i for i, n in enumerate(self.label_names) if n in names]
        qnames = [n for n, _ in self.quantum]
        q_idx = [i for i, n in enumerate(qnames) if n in names]

        acc: dict[tuple, np.ndarray] = {}
        for key in self.keys():
            p = self.prob(key)
            if p == 0.0:
                continue
            sub = tuple(key[i] for i in label_idx)
            part = self._quantum_marginal(key, q_idx).data if q_idx else np.ones((1, 1))
            acc[sub] = acc.get(sub, 0.0) + p * part

        ldims = [len(self.labels[i][1]) for i in label_idx]
        qdims = [self.quantum[i][1] for i in q_idx]
        qd = int(np.prod(qdims)) if qdims else 1
        ld = int(np.prod(ldims)) if ldims else 1
        out = np.zeros((ld * qd, ld * qd), dtype=complex)
        for sub, part in acc.items():
            flat = 0
            for i, sym in zip(label_idx, sub):
                flat = flat * len(self.labels[i][1]) + self.labels[i][1].index(sym)
            out[flat * qd:(flat + 1) * qd, flat * qd:(flat + 1) * qd] += part
        canon = [self.label_names[i] for i in label_idx] + [qnames[i] for i in q_idx]
        st = DensityMatrix(out, ldims + qdims)
        if canon != names:
            st = permute(st, [canon.index(n) for n in names])
        return st

    def embed(self) -> DensityMatrix:
        return self.marginal(self.registers)

    def quantum_table(self, name: str) -> dict:
        """``label tuple -> reduced state`` on one quantum register."""
        qnames = [n for n, _ in self.quantum]
        i = qnames.index(name)
        return {key: self._quantum_marginal(key, [i]) for key in self.keys()}


def build_control_state(ch: CqMacChannel, p_x: FiniteDist, p_y: FiniteDist) -> ControlState:
    if tuple(p_x.alphabet) != ch.x_alphabet or tuple(p_y.alphabet) != ch.y_alphabet:
        raise ValueError("input distributions do not match the channel alphabets")
    return ControlState((("X", p_x), ("Y", p_y)), dict(ch.outputs),
                        (("C", ch.dim_c), ("E", ch.dim_e)))


@dataclass(frozen=True, eq=False)
class KrausChannelSpec:
    """A quantum channel ``X' Y' -> C E`` plus classical encodings of each input.

    ``kraus`` operators map ``dim_x * dim_y`` to ``dim_c * dim_e``;
    ``enc_x``/``enc_y`` map symbols to density matrices on ``X'``/``Y'``.
    """

    kraus: Sequence[np.ndarray]
    enc_x: Mapping[Hashable, DensityMatrix]
    enc_y: Mapping[Hashable, DensityMatrix]
    dim_c: int
    dim_e: int
    tol: float = 1e-8

    def __post_init__(self):
        ks = [np.asarray(k, dtype=complex) for k in self.kraus]
        if not ks:
            raise ValueError("need at least one Kraus operator")
        din = ks[0].shape[1]
        dout = self.dim_c * self.dim_e
        for k in ks:
            if k.shape != (dout, din):
                raise ValueError(f"Kraus operator shape {k.shape}, expected {(dout, din)}")
        comp = sum(k.conj().T @ k for k in ks)
        err = np.max(np.abs(comp - np.eye(din)))
        if err > self.tol:
            raise ValueError(f"Kraus operators are not trace preserving (deviation {err:.2e})")
        object.__setattr__(self, "kraus", tuple(ks))


def realize_kraus(spec: KrausChannelSpec, x_alphabet: Sequence[Hashable],
                  y_alphabet: Sequence[Hashable]) -> CqMacChannel:
    outputs = {}
    for x in x_alphabet:
        for y in y_alphabet:
            inp = np.kron(spec.enc_x[x].data, spec.enc_y[y].data)
            out = sum(k @ inp @ k.conj().T for k in spec.kraus)
            outputs[(x, y)] = DensityMatrix(out, (spec.dim_c, spec.dim_e))
    return CqMacChannel(tuple(x_alphabet), tuple(y_alphabet), spec.dim_c, spec.dim_e, outputs)

"""Dense linear algebra for multi-register quantum states.

States are immutable :class:`DensityMatrix` values carrying their register
layout.  Every distance here uses the *unhalved* trace norm
``||a - b||_1``; :func:`trace_distance_half` is the metric-normalized
variant.  All logarithms are base 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

__all__ = [
    "DEFAULT_TOL",
    "MAX_DIM",
    "DensityMatrix",
    "DimensionLimitError",
    "InvariantError",
    "basis_state",
    "classical_state",
    "fidelity",
    "maximally_mixed",
    "partial_trace",
    "permute",
    "psd_sqrt",
    "pure_state",
    "purified_distance",
    "random_density_matrix",
    "tensor",
    "trace_distance",
    "trace_distance_half",
    "von_neumann_entropy",
]

DEFAULT_TOL = 1e-9
MAX_DIM = 4096


class InvariantError(ValueError):
    """A matrix failed one of the density-matrix invariants.

    ``kind`` is one of ``"hermitian"``, ``"psd"``, ``"trace"`` or ``"shape"``.
    """

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class DimensionLimitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix on ``prod(dims)``.

    Parameters
    ----------
    data : array_like
        Square complex matrix.
    dims : sequence of int, optional
        Register dimensions, in tensor order.  Defaults to a single register.
    tol : float
        Absolute tolerance used for the invariant checks.
    max_dim : int
        Largest total dimension accepted.
    """

    data: np.ndarray
    dims: tuple[int, ...] = None  # type: ignore[assignment]
    tol: float = DEFAULT_TOL
    max_dim: int = field(default=MAX_DIM, repr=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvariantError("shape", f"expected a square matrix, got shape {arr.shape}")
        dims = (arr.shape[0],) if self.dims is None else tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise InvariantError("shape", f"register dimensions must be >= 1, got {dims}")
        if int(np.prod(dims)) != arr.shape[0]:
            raise InvariantError(
                "shape", f"dims {dims} do not match matrix of size {arr.shape[0]}")
        if arr.shape[0] > self.max_dim:
            raise DimensionLimitError(
                f"dimension {arr.shape[0]} exceeds the configured maximum {self.max_dim}")
        herm_err = np.max(np.abs(arr - arr.conj().T)) if arr.size else 0.0
        if herm_err > self.tol:
            raise InvariantError("hermitian", f"not Hermitian (max deviation {herm_err:.3e})")
        arr = 0.5 * (arr + arr.conj().T)
        tr = np.trace(arr).real
        if abs(tr - 1.0) > self.tol:
            raise InvariantError("trace", f"trace is {tr:.12g}, expected 1")
        lam_min = np.linalg.eigvalsh(arr)[0]
        if lam_min < -self.tol:
            raise InvariantError("psd", f"smallest eigenvalue {lam_min:.3e} is negative")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def num_registers(self) -> int:
        return len(self.dims)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.data)

    def with_dims(self, dims: Sequence[int]) -> "DensityMatrix":
        return DensityMatrix(self.data, dims, tol=self.tol, max_dim=self.max_dim)

    def __repr__(self):
        return f"DensityMatrix(dims={self.dims})"


def _as_array(x) -> np.ndarray:
    return x.data if isinstance(x, DensityMatrix) else np.asarray(x, dtype=complex)


def tensor(*states: DensityMatrix, max_dim: int = MAX_DIM) -> DensityMatrix:
    """Kronecker product; register lists are concatenated."""
    if not states:
        raise ValueError("tensor() needs at least one state")
    dims: tuple[int, ...] = ()
    for s in states:
        dims += s.dims
    total = int(np.prod(dims))
    if total > max_dim:
        raise DimensionLimitError(f"tensor product dimension {total} exceeds {max_dim}")
    out = states[0].data
    for s in states[1:]:
        out = np.kron(out, s.data)
    tol = max(s.tol for s in states)
    return DensityMatrix(out, dims, tol=tol, max_dim=max_dim)


def _reduce(arr: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    n = len(dims)
    t = arr.reshape(tuple(dims) * 2)
    # einsum labels: row index i, column index n+i; traced registers share a label
    row = list(range(n))
    col = [i if i not in keep else n + i for i in range(n)]
    out = [i for i in keep] + [n + i for i in keep]
    d = int(np.prod([dims[i] for i in keep]))
    return np.einsum(t, row + col, out).reshape(d, d)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every register not in ``keep``.

    The kept registers appear in increasing index order; use :func:`permute`
    to reorder them.
    """
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one register")
    if keep[0] < 0 or keep[-1] >= rho.num_registers:
        raise ValueError(f"register indices {keep} out of range for dims {rho.dims}")
    if len(keep) == rho.num_registers:
        return rho
    arr = _reduce(rho.data, rho.dims, keep)
    return DensityMatrix(arr, [rho.dims[i] for i in keep], tol=rho.tol, max_dim=rho.max_dim)


def permute(rho: DensityMatrix, order: Sequence[int]) -> DensityMatrix:
    """Reorder registers so that new register ``k`` is old register ``order[k]``."""
    order = [int(o) for o in order]
    n = rho.num_registers
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of {n} registers")
    if order == list(range(n)):
        return rho
    t = rho.data.reshape(rho.dims * 2)
    t = t.transpose(order + [n + o for o in order])
    dims = [rho.dims[o] for o in order]
    return DensityMatrix(t.reshape(rho.dim, rho.dim), dims, tol=rho.tol, max_dim=rho.max_dim)


def _check_same(a: DensityMatrix, b: DensityMatrix):
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Unhalved trace norm ``||a - b||_1`` (ranges over [0, 2])."""
    _check_same(a, b)
    return float(np.sum(np.abs(np.linalg.eigvalsh(a.data - b.data))))


def trace_distance_half(a: DensityMatrix, b: DensityMatrix) -> float:
    """``||a - b||_1 / 2``, the normalized trace distance in [0, 1]."""
    return 0.5 * trace_distance(a, b)


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix, clipping tiny negative eigenvalues."""
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def _fidelity(a: np.ndarray, b: np.ndarray) -> float:
    sa = psd_sqrt(a)
    # ||sqrt(a) sqrt(b)||_1 via singular values; more stable than sqrt(sa b sa)
    sb = psd_sqrt(b)
    return float(np.sum(scipy.linalg.svdvals(sa @ sb)))


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """Root fidelity ``Tr sqrt(sqrt(a) b sqrt(a))``, clamped to [0, 1]."""
    _check_same(a, b)
    return min(1.0, max(0.0, _fidelity(a.data, b.data)))


def purified_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    f = fidelity(a, b)
    return float(np.sqrt(max(0.0, 1.0 - f * f)))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in bits, with ``0 log 0 = 0``."""
    w = rho.eigvalsh()
    w = w[w > 0]
    return float(max(0.0, -np.sum(w * np.log2(w))))


# -- constructors ------------------------------------------------------------

def pure_state(vec, dims: Sequence[int] | None = None) -> DensityMatrix:
    v = np.asarray(vec, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()), dims)


def basis_state(index: int, dim: int) -> DensityMatrix:
    m = np.zeros((dim, dim), dtype=complex)
    m[index, index] = 1.0
    return DensityMatrix(m)


def classical_state(probs) -> DensityMatrix:
    """Diagonal state with the given probability vector."""
    return DensityMatrix(np.diag(np.asarray(probs, dtype=float)))


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim) / dim)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None,
                          real: bool = False) -> DensityMatrix:
    """Random state from the induced (Hilbert-Schmidt for full rank) measure."""
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k))
    if not real:
        g = g + 1j * rng.normal(size=(dim, k))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)

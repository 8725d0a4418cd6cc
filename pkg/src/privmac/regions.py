"""Rate regions: simultaneous decoding, secrecy thresholds and private regions.

Regions are polytopes ``{R >= 0 : a . R <= b}`` stored as halfspace lists;
vertices come from intersecting every pair (or triple) of bounding planes
and keeping the feasible points.  All rates are in bits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .channel import ControlState, CqMacChannel, build_control_state
from .oneshot import Bipartition, i_hypo, i_max_smooth
from .qla import von_neumann_entropy
from .split import FiniteDist, split_control_state

__all__ = [
    "DECODE_TERMS",
    "AsymptoticRegion",
    "RateRegion2D",
    "RateRegion3D",
    "SecrecyThresholds",
    "ThetaRegion",
    "ToleranceConfig",
    "asymptotic_region",
    "decode_region_3",
    "default_theta_grid",
    "ih_term",
    "imax_term",
    "private_region_theta",
    "private_region_theta_full",
    "private_region_union",
    "project_to_2d",
    "secrecy_thresholds",
    "union_contains",
]

VERTEX_TOL = 1e-9

# (left registers, right registers) of each decoding term, keyed "left:right"
DECODE_TERMS = {
    "U:CVY": ("U", "CVY"),
    "Y:CUV": ("Y", "CUV"),
    "V:CUY": ("V", "CUY"),
    "UV:CY": ("UV", "CY"),
    "UY:CV": ("UY", "CV"),
    "YV:CU": ("YV", "CU"),
    "UYV:C": ("UYV", "C"),
}

SECRECY_TERMS = {
    "U:E": ("U", "E"),
    "Y:EU": ("Y", "EU"),
    "V:EYU": ("V", "EYU"),
}


@dataclass(frozen=True)
class ToleranceConfig:
    """Smoothing parameters.

    ``eps`` smooths the decoding terms, ``delta`` is the secrecy target and
    the max-information terms use ``delta - eps_prime``.  ``c0`` stands in
    for unspecified additive constants in the block-size thresholds.
    """

    eps: float = 0.05
    delta: float = 0.1
    eps_prime: float = 0.05
    gamma: float = 0.01
    c0: float = 0.0

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0 < self.eps_prime < self.delta < 1:
            raise ValueError(
                f"need 0 < eps_prime < delta < 1, got eps_prime={self.eps_prime}, delta={self.delta}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def delta_prime(self) -> float:
        return self.delta - self.eps_prime

    @property
    def threshold_constant(self) -> float:
        """``log(3/eps'^3) - log(delta)/4``, the additive part of every block-size threshold."""
        return math.log2(3 / self.eps_prime ** 3) - 0.25 * math.log2(self.delta)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "delta": self.delta, "eps_prime": self.eps_prime,
                "gamma": self.gamma, "c0": self.c0}


def _feasible(a: np.ndarray, b: np.ndarray, x: np.ndarray, tol: float) -> bool:
    return bool(np.all(a @ x <= b + tol * np.maximum(1.0, np.abs(b))))


def _enumerate_vertices(a: np.ndarray, b: np.ndarray, tol: float = VERTEX_TOL) -> np.ndarray:
    n = a.shape[1]
    pts = []
    for rows in itertools.combinations(range(len(a)), n):
        m = a[list(rows)]
        if abs(np.linalg.det(m)) < 1e-12:
            continue
        x = np.linalg.solve(m, b[list(rows)])
        if _feasible(a, b, x, tol):
            pts.append(x)
    if not pts:
        return np.zeros((0, n))
    # merge duplicates created by three or more planes through one point
    out: list[np.ndarray] = []
    for p in pts:
        if not any(np.max(np.abs(p - q)) <= 1e-9 * max(1.0, np.max(np.abs(q))) for q in out):
            out.append(p)
    return np.array(out)


@dataclass(frozen=True, eq=False)
class RateRegion2D:
    """``{(R1, R2) >= 0 : a1 R1 + a2 R2 <= b for every halfspace}``.

    ``guard`` encodes constraints that do not involve the rates (they come
    from eliminated variables); the region is empty when ``guard < 0``.
    ``labels`` names each halfspace for reports.
    """

    halfspaces: tuple
    labels: tuple = ()
    guard: float = 0.0

    def __post_init__(self):
        hs = tuple(tuple(float(c) for c in h) for h in self.halfspaces)
        if any(len(h) != 3 for h in hs):
            raise ValueError("2-D halfspaces are (a1, a2, b) triples")
        object.__setattr__(self, "halfspaces", hs)
        object.__setattr__(self, "labels", tuple(self.labels) or tuple(f"h{i}" for i in range(len(hs))))

    def _system(self):
        a = np.array([h[:2] for h in self.halfspaces] + [[-1.0, 0.0], [0.0, -1.0]])
        b = np.array([h[2] for h in self.halfspaces] + [0.0, 0.0])
        return a, b

    @property
    def vertices(self) -> np.ndarray:
        """Vertices in counter-clockwise order (empty array for an empty region)."""
        if self.guard < 0:
            return np.zeros((0, 2))
        a, b = self._system()
        v = _enumerate_vertices(a, b)
        if len(v) > 2:
            c = v.mean(axis=0)
            v = v[np.argsort(np.arctan2(v[:, 1] - c[1], v[:, 0] - c[0]))]
        elif len(v) == 2:
            v = v[np.lexsort((v[:, 1], v[:, 0]))]
        return v + 0.0

    def is_empty(self) -> bool:
        return len(self.vertices) == 0

    def contains(self, point, tol: float = VERTEX_TOL) -> bool:
        if self.guard < -tol:
            return False
        a, b = self._system()
        return bool(np.all(a @ np.asarray(point, dtype=float) <= b + tol))

    def shifted(self, d1: float, d2: float) -> "RateRegion2D":
        """The region of ``(R1 - d1, R2 - d2)`` for ``(R1, R2)`` in ``self``, cut to the quadrant."""
        hs = [(a1, a2, b - a1 * d1 - a2 * d2) for a1, a2, b in self.halfspaces]
        return RateRegion2D(hs, self.labels, self.guard)

    def to_dict(self) -> dict:
        return {
            "halfspaces": [{"label": l, "a1": a1, "a2": a2, "b": b}
                           for l, (a1, a2, b) in zip(self.labels, self.halfspaces)],
            "guard": self.guard,
            "vertices": self.vertices.tolist(),
        }


@dataclass(frozen=True, eq=False)
class RateRegion3D:
    """Region over ``(R10, R2, R11)`` with nonnegativity implied.

    ``terms`` holds the raw hypothesis-testing informations and ``offset``
    the additive ``log2(eps) - 1`` applied to each right side.
    """

    halfspaces: tuple
    labels: tuple = ()
    terms: Mapping[str, float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        hs = tuple(tuple(float(c) for c in h) for h in self.halfspaces)
        if any(len(h) != 4 for h in hs):
            raise ValueError("3-D halfspaces are (a10, a2, a11, b) quadruples")
        object.__setattr__(self, "halfspaces", hs)
        object.__setattr__(self, "labels", tuple(self.labels) or tuple(f"h{i}" for i in range(len(hs))))

    def _system(self):
        a = np.array([h[:3] for h in self.halfspaces] + (-np.eye(3)).tolist())
        b = np.array([h[3] for h in self.halfspaces] + [0.0] * 3)
        return a, b

    @property
    def vertices(self) -> np.ndarray:
        a, b = self._system()
        return _enumerate_vertices(a, b)

    def contains(self, point, tol: float = VERTEX_TOL) -> bool:
        a, b = self._system()
        return bool(np.all(a @ np.asarray(point, dtype=float) <= b + tol))


def ih_term(cs: ControlState, left: str, right: str, eps: float) -> float:
    """``I_H^eps(left : right)`` on the marginal of ``cs``; registers are one-letter names."""
    st = cs.marginal(list(left) + list(right))
    return i_hypo(st, Bipartition(range(len(left)), range(len(left), len(left) + len(right))), eps)


def imax_term(cs: ControlState, left: str, right: str, eps: float, **kw) -> float:
    """``I_max^eps(left : right)`` on the marginal of ``cs``."""
    st = cs.marginal(list(left) + list(right))
    return i_max_smooth(st, Bipartition(range(len(left)), range(len(left), len(left) + len(right))),
                        eps, **kw)


def decode_region_3(split_cs: ControlState, eps: float) -> RateRegion3D:
    """Simultaneous-decoding region for the three virtual senders ``U, Y, V``."""
    if sorted(split_cs.label_names) != ["U", "V", "Y"]:
        raise ValueError(f"expected a split state with labels U, V, Y, got {split_cs.label_names}")
    terms = {k: ih_term(split_cs, l, r, eps) for k, (l, r) in DECODE_TERMS.items()}
    off = math.log2(eps) - 1
    rows = [
        ((1, 0, 0), "U:CVY"), ((0, 1, 0), "Y:CUV"), ((0, 0, 1), "V:CUY"),
        ((1, 0, 1), "UV:CY"), ((1, 1, 0), "UY:CV"), ((0, 1, 1), "YV:CU"),
        ((1, 1, 1), "UYV:C"),
    ]
    hs = [(*a, terms[k] + off) for a, k in rows]
    return RateRegion3D(hs, [k for _, k in rows], terms, off)


def project_to_2d(r3: RateRegion3D) -> RateRegion2D:
    """Eliminate ``R10`` with ``R1 = R10 + R11``.

    Gives nine halfspaces in ``(R1, R2)``.  The elimination also needs
    ``I(U:CVY)`` and ``I(V:CUY)`` bounds to be nonnegative; that condition is
    carried in ``guard``.
    """
    t, o = r3.terms, r3.offset
    a, b2, c = t["U:CVY"] + o, t["Y:CUV"] + o, t["V:CUY"] + o
    d, e, f, g = t["UV:CY"] + o, t["UY:CV"] + o, t["YV:CU"] + o, t["UYV:C"] + o
    hs = [
        (1, 0, d),
        (1, 0, c + a),
        (0, 1, b2),
        (0, 1, f),
        (0, 1, e),
        (1, 1, c + e),
        (1, 1, f + a),
        (1, 2, e + f),
        (1, 1, g),
    ]
    labels = ["UV:CY", "V:CUY+U:CVY", "Y:CUV", "YV:CU", "UY:CV",
              "V:CUY+UY:CV", "YV:CU+U:CVY", "UY:CV+YV:CU", "UYV:C"]
    return RateRegion2D(hs, labels, guard=min(a, c))


@dataclass(frozen=True)
class SecrecyThresholds:
    """Block-size exponents (bits) for the three virtual senders."""

    log_k1: float
    log_k2: float
    log_k3: float
    terms: Mapping[str, float] = field(default_factory=dict)

    @property
    def alice(self) -> float:
        return self.log_k1 + self.log_k3

    @property
    def bob(self) -> float:
        return self.log_k2

    def block_sizes(self) -> dict:
        """Smallest integer sizes meeting each threshold."""
        return {"U": 2 ** math.ceil(self.log_k1), "Y": 2 ** math.ceil(self.log_k2),
                "V": 2 ** math.ceil(self.log_k3)}

    def to_dict(self) -> dict:
        return {"log_k1": self.log_k1, "log_k2": self.log_k2, "log_k3": self.log_k3,
                "alice": self.alice, "bob": self.bob, "imax_terms": dict(self.terms)}


def secrecy_thresholds(split_cs: ControlState, tol: ToleranceConfig, **kw) -> SecrecyThresholds:
    """Successive-cancellation covering thresholds ``U``, then ``Y`` given ``U``, then ``V``."""
    dp = tol.delta_prime
    terms = {k: imax_term(split_cs, l, r, dp, **kw) for k, (l, r) in SECRECY_TERMS.items()}
    const = tol.threshold_constant
    k1 = max(0.0, terms["U:E"] + const)
    k2 = max(0.0, terms["Y:EU"] + const + tol.c0)
    k3 = max(0.0, terms["V:EYU"] + const + tol.c0)
    return SecrecyThresholds(k1, k2, k3, terms)


def private_region_theta(s: RateRegion2D, t: SecrecyThresholds,
                         tol: ToleranceConfig | None = None) -> RateRegion2D:
    """Rates ``(R_A, R_B) = (R1 - alice, R2 - bob)`` for ``(R1, R2)`` in ``s``, within the quadrant."""
    return s.shifted(t.alice, t.bob)


@dataclass(frozen=True, eq=False)
class ThetaRegion:
    theta: float
    decode3: RateRegion3D
    decode: RateRegion2D
    thresholds: SecrecyThresholds
    private: RateRegion2D

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "ih_terms": dict(self.decode3.terms),
            "ih_offset": self.decode3.offset,
            "thresholds": self.thresholds.to_dict(),
            "decode_region": self.decode.to_dict(),
            "private_region": self.private.to_dict(),
        }


def default_theta_grid(n: int = 33) -> list[float]:
    if n < 1:
        raise ValueError("theta grid needs at least one point")
    if n == 1:
        return [0.0]
    return [i / (n - 1) for i in range(n)]


def private_region_theta_full(cs: ControlState, theta: float, tol: ToleranceConfig,
                              **kw) -> ThetaRegion:
    split = split_control_state(cs, theta)
    r3 = decode_region_3(split, tol.eps)
    s = project_to_2d(r3)
    t = secrecy_thresholds(split, tol, **kw)
    return ThetaRegion(float(theta), r3, s, t, private_region_theta(s, t, tol))


def private_region_union(ch: CqMacChannel, p_x: FiniteDist, p_y: FiniteDist,
                         tol: ToleranceConfig, theta_grid: Sequence[float] | None = None,
                         workers: int = 1, **kw) -> list[ThetaRegion]:
    """Per-theta private regions, in grid order; the union is their set union.

    Parameters
    ----------
    workers : int
        Thread count for evaluating grid points concurrently.  Results do
        not depend on it.
    """
    grid = default_theta_grid() if theta_grid is None else [float(t) for t in theta_grid]
    if any(not 0.0 <= t <= 1.0 for t in grid):
        raise ValueError("theta grid must lie in [0, 1]")
    cs = build_control_state(ch, p_x, p_y)
    if workers <= 1:
        return [private_region_theta_full(cs, t, tol, **kw) for t in grid]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: private_region_theta_full(cs, t, tol, **kw), grid))


def union_contains(regions: Sequence[ThetaRegion], point, tol: float = VERTEX_TOL) -> bool:
    return any(r.private.contains(point, tol) for r in regions)


# -- asymptotic -------------------------------------------------------------------------

def _entropy(cs: ControlState, regs: str) -> float:
    return von_neumann_entropy(cs.marginal(list(regs)))


def _mutual(cs: ControlState, left: str, right: str) -> float:
    return _entropy(cs, left) + _entropy(cs, right) - _entropy(cs, left + right)


@dataclass(frozen=True, eq=False)
class AsymptoticRegion:
    decode: RateRegion2D
    secrecy: RateRegion2D
    difference: RateRegion2D
    terms: Mapping[str, float]

    def to_dict(self) -> dict:
        return {"terms": dict(self.terms), "decode": self.decode.to_dict(),
                "secrecy": self.secrecy.to_dict(), "difference": self.difference.to_dict()}


def asymptotic_region(cs: ControlState) -> AsymptoticRegion:
    """Many-use private region from von Neumann informations of the control state.

    ``secrecy`` is the set of key rates above the eavesdropper's
    informations, written with negated coefficients.  Strict inequalities
    are reported as their closures.
    """
    if cs.label_names != ["X", "Y"]:
        raise ValueError(f"expected labels X, Y, got {cs.label_names}")
    t = {
        "X:YC": _mutual(cs, "X", "YC"),
        "Y:XC": _mutual(cs, "Y", "XC"),
        "XY:C": _mutual(cs, "XY", "C"),
        "X:E": _mutual(cs, "X", "E"),
        "Y:E": _mutual(cs, "Y", "E"),
        "XY:E": _mutual(cs, "XY", "E"),
    }
    decode = RateRegion2D([(1, 0, t["X:YC"]), (0, 1, t["Y:XC"]), (1, 1, t["XY:C"])],
                          ["X:YC", "Y:XC", "XY:C"])
    secrecy = RateRegion2D([(-1, 0, -t["X:E"]), (0, -1, -t["Y:E"]), (-1, -1, -t["XY:E"])],
                           ["X:E", "Y:E", "XY:E"])
    diff = RateRegion2D([(1, 0, t["X:YC"] - t["X:E"]), (0, 1, t["Y:XC"] - t["Y:E"]),
                         (1, 1, t["XY:C"] - t["XY:E"])],
                        ["X:YC-X:E", "Y:XC-Y:E", "XY:C-XY:E"])
    return AsymptoticRegion(decode, secrecy, diff, t)

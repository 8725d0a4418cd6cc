"""One-shot entropic quantities.

``d_hypo``/``i_hypo`` are the epsilon-smooth hypothesis-testing relative
entropy and mutual information, ``d_max``/``d_max_smooth``/``i_max_smooth``
the (smooth) max relative entropy and max mutual information.  Mutual
informations always compare against the product of marginals
``rho^A (x) rho^B``.

An infinite value is returned as :data:`INF` (IEEE infinity); no function
here encodes infinity as a large finite float.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import cvxpy as cp
import scipy.sparse.csgraph

from .qla import DensityMatrix, partial_trace, permute, purified_distance, tensor, trace_distance

__all__ = [
    "INF",
    "Bipartition",
    "ChainRuleReport",
    "SmoothingResult",
    "SolverStatus",
    "chain_rule_check",
    "d_hypo",
    "d_max",
    "d_max_smooth",
    "i_hypo",
    "i_max_smooth",
    "reduce_to_split",
]

INF = math.inf

PENCIL_TOL = 1e-8
SUPPORT_TOL = 1e-12


class SolverStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max-iterations"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SmoothingResult:
    """Value of a one-shot quantity together with the object that certifies it.

    For ``d_hypo`` the witness is the optimal test ``0 <= Pi <= I``; for the
    smoothed max quantities it is the optimizing normalized state ``rho'``.
    ``achieved_distance`` is the distance of that state from the input
    (0 for tests).
    """

    value: float
    witness: np.ndarray
    achieved_distance: float
    status: SolverStatus = SolverStatus.CONVERGED

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class Bipartition:
    left: frozenset
    right: frozenset

    def __init__(self, left: Iterable[int], right: Iterable[int]):
        object.__setattr__(self, "left", frozenset(int(i) for i in left))
        object.__setattr__(self, "right", frozenset(int(i) for i in right))
        if not self.left or not self.right:
            raise ValueError("both sides of a bipartition must be nonempty")
        if self.left & self.right:
            raise ValueError(f"sides overlap: {sorted(self.left & self.right)}")

    def check(self, num_registers: int):
        if self.left | self.right != frozenset(range(num_registers)):
            raise ValueError(
                f"bipartition {sorted(self.left)}|{sorted(self.right)} does not cover "
                f"all {num_registers} registers")


def _check_pair(rho: DensityMatrix, sigma: DensityMatrix):
    if rho.dims != sigma.dims:
        raise ValueError(f"dimension mismatch: {rho.dims} vs {sigma.dims}")


def _check_eps(eps: float):
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


# -- hypothesis testing ---------------------------------------------------------

def _np_masses(r, s, t, tol):
    w, v = np.linalg.eigh(r - t * s)
    pos = w > tol
    zero = np.abs(w) <= tol
    rv = np.einsum("ij,ik,kj->j", v.conj(), r, v).real
    return v, pos, zero, rv


def _mixed_test(r, s, lo, hi, target, tol):
    v_lo, pos_lo, zero_lo, rv_lo = _np_masses(r, s, lo, tol)
    v_hi, pos_hi, _, rv_hi = _np_masses(r, s, hi, tol)
    keep = pos_lo | zero_lo
    a_lo, a_hi = rv_lo[keep].sum(), rv_hi[pos_hi].sum()
    if not a_hi - 1e-9 <= target <= a_lo + 1e-9:
        raise FloatingPointError("hypothesis-testing threshold search failed")
    lam = 1.0 if a_lo <= a_hi else min(1.0, max(0.0, (target - a_hi) / (a_lo - a_hi)))
    p_lo = v_lo[:, keep] @ v_lo[:, keep].conj().T
    p_hi = v_hi[:, pos_hi] @ v_hi[:, pos_hi].conj().T
    return lam * p_lo + (1 - lam) * p_hi


def d_hypo(rho: DensityMatrix, sigma: DensityMatrix, eps: float,
           pencil_tol: float = PENCIL_TOL, max_iter: int = 400) -> SmoothingResult:
    """Smooth hypothesis-testing relative entropy.

    ``-log2 min Tr[Pi sigma]`` over tests ``0 <= Pi <= I`` with
    ``Tr[Pi rho] >= 1 - eps``, found by a threshold search on the pencil
    ``rho - t sigma``: the test is the projector onto its positive part plus a
    fractional weight on its (numerically) null part, tuned so that the
    acceptance constraint holds with equality.
    """
    _check_pair(rho, sigma)
    _check_eps(eps)
    r, s = rho.data, sigma.data
    target = 1.0 - eps

    ws, vs = np.linalg.eigh(s)
    ker = vs[:, ws <= SUPPORT_TOL]
    if ker.shape[1]:
        ker_mass = float(np.real(np.trace(ker.conj().T @ r @ ker)))
        if ker_mass >= target:
            pi = ker @ ker.conj().T
            return SmoothingResult(INF, pi, 0.0)

    def classify(t):
        v, pos, zero, rv = _np_masses(r, s, t, pencil_tol)
        return v, pos, zero, rv[pos].sum(), rv[zero].sum()

    lo, hi = 0.0, 1.0
    while True:
        _, _, _, a_pos, a_zero = classify(hi)
        if a_pos + a_zero < target or a_pos <= target <= a_pos + a_zero:
            break
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise FloatingPointError("threshold search diverged")

    status = SolverStatus.CONVERGED
    for _ in range(max_iter):
        t = 0.5 * (lo + hi)
        v, pos, zero, a_pos, a_zero = classify(t)
        if a_pos <= target <= a_pos + a_zero:
            break
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            # bracket collapsed without an exact hit (the positive part rotates
            # continuously when rho and sigma do not commute): mix the two ends
            pi = _mixed_test(r, s, lo, hi, target, pencil_tol)
            cost = float(np.real(np.trace(pi @ s)))
            return SmoothingResult(INF if cost <= 0.0 else -math.log2(cost), pi, 0.0, status)
        if a_pos > target:
            lo = t
        else:
            hi = t
    else:
        status = SolverStatus.MAX_ITERATIONS

    c = 0.0 if a_zero <= 0 else min(1.0, max(0.0, (target - a_pos) / a_zero))
    weights = pos.astype(float) + c * zero
    pi = (v * weights) @ v.conj().T
    cost = float(np.real(np.trace(pi @ s)))
    value = INF if cost <= 0.0 else -math.log2(cost)
    return SmoothingResult(value, pi, 0.0, status)


def reduce_to_split(rho: DensityMatrix, left: Sequence[int], right: Sequence[int]):
    """Marginal on ``left + right`` with the left registers first.

    Returns the reordered state and the matching :class:`Bipartition`.
    """
    left, right = list(left), list(right)
    keep = sorted(left + right)
    red = partial_trace(rho, keep)
    pos = {r: i for i, r in enumerate(keep)}
    red = permute(red, [pos[i] for i in left + right])
    k = len(left)
    return red, Bipartition(range(k), range(k, k + len(right)))


def _product_of_marginals(rho: DensityMatrix, split: Bipartition):
    split.check(rho.num_registers)
    left, right = sorted(split.left), sorted(split.right)
    ordered = permute(rho, left + right) if left + right != list(range(rho.num_registers)) else rho
    k = len(left)
    ra = partial_trace(ordered, range(k))
    rb = partial_trace(ordered, range(k, ordered.num_registers))
    return ordered, tensor(ra, rb, max_dim=rho.max_dim)


def i_hypo(rho: DensityMatrix, split: Bipartition, eps: float, **kw) -> float:
    """``D_H^eps(rho^{AB} || rho^A (x) rho^B)`` with A = ``split.left``."""
    joint, prod = _product_of_marginals(rho, split)
    return d_hypo(joint, prod, eps, **kw).value


# -- max relative entropy -----------------------------------------------------------

def d_max(rho: DensityMatrix, sigma: DensityMatrix, tol: float | None = None) -> float:
    """``log2 min {m : rho <= m sigma}``, or :data:`INF` if supp(rho) is not in supp(sigma)."""
    _check_pair(rho, sigma)
    tol = sigma.tol if tol is None else tol
    return _d_max(rho.data, sigma.data, tol)


def _d_max(r: np.ndarray, s: np.ndarray, tol: float) -> float:
    w, v = np.linalg.eigh(s)
    sup = w > tol
    ker = v[:, ~sup]
    if ker.shape[1] and np.real(np.trace(ker.conj().T @ r @ ker)) > tol:
        return INF
    vs = v[:, sup] / np.sqrt(w[sup])
    m = vs.conj().T @ r @ vs
    lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[-1]
    if lam <= 0:
        return -INF
    # unit-trace arguments force lam >= 1; snap rounding noise to exactly 0
    if abs(lam - 1.0) <= 1e-12 and abs(np.trace(r).real - np.trace(s).real) <= tol:
        return 0.0
    return math.log2(lam)


def _blocks(*mats: np.ndarray, tol: float = SUPPORT_TOL) -> list[np.ndarray]:
    """Index sets of the common block-diagonal structure of the given matrices."""
    pattern = np.zeros(mats[0].shape, dtype=bool)
    for m in mats:
        pattern |= np.abs(m) > tol
    n, labels = scipy.sparse.csgraph.connected_components(pattern, directed=False)
    return [np.flatnonzero(labels == k) for k in range(n)]


def _embed(re, im):
    return cp.bmat([[re, -im], [im, re]])


def _embed_np(h: np.ndarray) -> np.ndarray:
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


@dataclass
class _Block:
    basis: np.ndarray   # columns: support of sigma restricted to this block
    rho: np.ndarray     # compressed rho (possibly subnormalized)
    sigma_eigs: np.ndarray


def _smooth_blocks(r: np.ndarray, s: np.ndarray, tol: float) -> tuple[list[_Block], float]:
    blocks = []
    lost = 0.0
    for idx in _blocks(r, s):
        rb, sb = r[np.ix_(idx, idx)], s[np.ix_(idx, idx)]
        w, v = np.linalg.eigh(sb)
        sup = w > tol
        if not sup.any():
            lost += float(np.trace(rb).real)
            continue
        basis = np.zeros((r.shape[0], int(sup.sum())), dtype=complex)
        basis[idx, :] = v[:, sup]
        comp = v[:, sup].conj().T @ rb @ v[:, sup]
        blocks.append(_Block(basis, 0.5 * (comp + comp.conj().T), w[sup]))
    return blocks, lost


def _solve_smoothing_sdp(blocks: list[_Block], radius: float, metric: str,
                         solver: str | None):
    """Minimize m over block-diagonal rho' with rho' <= m sigma in the eps-ball.

    Each block is expressed in its sigma-eigenbasis, where sigma is diagonal.
    Returns the per-block rho' matrices (in those bases) and a status.
    """
    is_real = all(np.allclose(b.rho.imag, 0.0, atol=1e-14) for b in blocks)
    m = cp.Variable(nonneg=True)
    cons = []
    trace_terms, fid_terms, dist_terms = [], [], []
    outs = []
    for b in blocks:
        d = b.rho.shape[0]
        if is_real:
            rp = cp.Variable((d, d), symmetric=True)
            rho_b, sig_b, tr = b.rho.real, np.diag(b.sigma_eigs), cp.trace(rp)
            outs.append((rp, None))
        else:
            rpr, rpi = cp.Variable((d, d), symmetric=True), cp.Variable((d, d))
            cons.append(rpi == -rpi.T)
            rp = _embed(rpr, rpi)
            rho_b, sig_b, tr = _embed_np(b.rho), _embed_np(np.diag(b.sigma_eigs)), cp.trace(rpr)
            outs.append((rpr, rpi))
        n = rho_b.shape[0]
        cons.append(m * sig_b - rp >> 0)
        if metric == "purified":
            if is_real:
                x = cp.Variable((d, d))
                fid_terms.append(cp.trace(x))
            else:
                xr, xi = cp.Variable((d, d)), cp.Variable((d, d))
                x = _embed(xr, xi)
                fid_terms.append(cp.trace(xr))
            cons.append(cp.bmat([[rp, x], [x.T, rho_b]]) >> 0)
        else:
            pp = cp.Variable((n, n), PSD=True)
            qq = cp.Variable((n, n), PSD=True)
            cons.append(rp - rho_b == pp - qq)
            # the real embedding doubles every trace
            dist_terms.append((cp.trace(pp) + cp.trace(qq)) * (1.0 if is_real else 0.5))
        trace_terms.append(tr)
    cons.append(cp.sum(cp.hstack(trace_terms)) == 1)
    if metric == "purified":
        cons.append(cp.sum(cp.hstack(fid_terms)) >= math.sqrt(max(0.0, 1.0 - radius ** 2)))
    else:
        cons.append(cp.sum(cp.hstack(dist_terms)) <= radius)
    prob = cp.Problem(cp.Minimize(m), cons)

    status = "solver_error"
    for name in ([solver] if solver else ["CLARABEL", "CVXOPT", "SCS"]):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                kwargs = {"eps": 1e-9, "max_iters": 50000} if name == "SCS" else {}
                prob.solve(solver=name, **kwargs)
            status = prob.status
        except cp.error.SolverError:
            status = "solver_error"
            continue
        if status in ("optimal", "optimal_inaccurate", "infeasible"):
            break
    if status == "infeasible":
        return None, SolverStatus.INFEASIBLE
    if status not in ("optimal", "optimal_inaccurate"):
        return None, SolverStatus.MAX_ITERATIONS
    mats = []
    for re_part, im_part in outs:
        mats.append(re_part.value + (0 if im_part is None else 1j * im_part.value))
    st = SolverStatus.CONVERGED if status == "optimal" else SolverStatus.MAX_ITERATIONS
    return mats, st


def _clean_state(m: np.ndarray) -> np.ndarray:
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    m = (v * w) @ v.conj().T
    return m / np.trace(m).real


def d_max_smooth(rho: DensityMatrix, sigma: DensityMatrix, eps: float,
                 metric: str = "purified", solver: str | None = None) -> SmoothingResult:
    """Smooth max relative entropy ``min D_max(rho' || sigma)`` over the eps-ball.

    The ball holds normalized states with purified distance (default) or
    unhalved trace distance (``metric="trace"``) at most ``eps`` from ``rho``.
    The minimization is a single semidefinite program, jointly convex in
    ``(rho', m)`` with ``rho' <= m sigma``; it is split into the common
    block-diagonal components of ``rho`` and ``sigma``, which is exact because
    pinching onto those blocks maps feasible points to feasible points.

    The reported value is recomputed from the returned witness, so it is a
    verified upper bound even when the solver is inaccurate.  ``eps >= 1``
    (purified) or ``eps >= 2`` (trace) covers every state, giving 0 with
    witness ``sigma``.
    """
    _check_pair(rho, sigma)
    if metric not in ("purified", "trace"):
        raise ValueError(f"unknown smoothing metric {metric!r}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")

    def distance(a):
        st = DensityMatrix(a, rho.dims, tol=1e-6, max_dim=rho.max_dim)
        if metric == "purified":
            return purified_distance(st, rho)
        return trace_distance(st, rho)

    full = 1.0 if metric == "purified" else 2.0
    if eps >= full:
        return SmoothingResult(0.0, sigma.data.copy(), distance(sigma.data))
    base = _d_max(rho.data, sigma.data, sigma.tol)
    if base <= 1e-12:
        # smoothing over normalized states cannot go below 0
        return SmoothingResult(0.0, rho.data.copy(), 0.0)

    if metric == "purified":
        blocks, _ = _smooth_blocks(rho.data, sigma.data, sigma.tol)
    else:
        # sigma-kernel directions stay in the basis; the whitened variable pins them to 0
        blocks = []
        for idx in _blocks(rho.data, sigma.data):
            w, v = np.linalg.eigh(sigma.data[np.ix_(idx, idx)])
            basis = np.zeros((rho.dim, len(idx)), dtype=complex)
            basis[idx, :] = v
            comp = basis.conj().T @ rho.data @ basis
            blocks.append(_Block(basis, 0.5 * (comp + comp.conj().T),
                                 np.where(w > sigma.tol, w, 0.0)))
    if not blocks:
        return SmoothingResult(INF, rho.data.copy(), 0.0, SolverStatus.INFEASIBLE)

    # interior-point solutions can sit ~1e-8 outside the fidelity constraint;
    # re-solve on a slightly smaller ball until the verified witness is inside
    radius = eps
    best = None
    for _ in range(4):
        mats, status = _solve_smoothing_sdp(blocks, radius, metric, solver)
        if mats is None:
            break
        witness = _clean_state(sum(b.basis @ mb @ b.basis.conj().T
                                   for b, mb in zip(blocks, mats)))
        achieved = distance(witness)
        if achieved <= eps + 1e-9:
            best = (_d_max(witness, sigma.data, sigma.tol), witness, achieved, status)
            break
        radius -= 2 * (achieved - eps) + 1e-9
        if radius <= 0:
            break
    if best is None:
        if mats is None and status is SolverStatus.INFEASIBLE:
            return SmoothingResult(INF, rho.data.copy(), 0.0, status)
        # the input itself is always inside the ball
        return SmoothingResult(base, rho.data.copy(), 0.0, SolverStatus.MAX_ITERATIONS)
    value, witness, achieved, status = best
    if value > base:
        return SmoothingResult(base, rho.data.copy(), 0.0, status)
    return SmoothingResult(value, witness, achieved, status)


def i_max_smooth(rho: DensityMatrix, split: Bipartition, eps: float, **kw) -> float:
    """``D_max^eps(rho^{AB} || rho^A (x) rho^B)`` with A = ``split.left``.

    ``eps == 0`` gives the unsmoothed max mutual information.
    """
    joint, prod = _product_of_marginals(rho, split)
    if eps == 0:
        return d_max(joint, prod)
    return d_max_smooth(joint, prod, eps, **kw).value


@dataclass(frozen=True)
class ChainRuleReport:
    lhs: float
    i_r_a: float
    i_ra_b: float
    constant: float
    rhs: float
    slack: float


def chain_rule_check(phi: DensityMatrix, groups: Sequence[Sequence[int]], eps: float,
                     gamma: float, **kw) -> ChainRuleReport:
    """Evaluate both sides of the smooth max-information chain rule.

    ``groups`` lists the register indices of R, A and B.  The left side is
    ``I_max^{12 eps}(R:AB)``; the right side is
    ``I_max^{eps-gamma}(R:A) + I_max^{eps-gamma}(RA:B) + 2 log(1/eps) + log(3/gamma^2)``.
    """
    if len(groups) != 3:
        raise ValueError("groups must list the registers of R, A and B")
    r, a, b = (list(g) for g in groups)
    if sorted(r + a + b) != list(range(phi.num_registers)):
        raise ValueError("R, A, B must partition the registers")
    if not 0 < gamma < eps:
        raise ValueError("gamma must lie in (0, eps)")
    st, sp = reduce_to_split(phi, r, a + b)
    lhs = i_max_smooth(st, sp, 12 * eps, **kw)
    st, sp = reduce_to_split(phi, r, a)
    i_r_a = i_max_smooth(st, sp, eps - gamma, **kw)
    st, sp = reduce_to_split(phi, r + a, b)
    i_ra_b = i_max_smooth(st, sp, eps - gamma, **kw)
    const = 2 * math.log2(1 / eps) + math.log2(3 / gamma ** 2)
    rhs = i_r_a + i_ra_b + const
    return ChainRuleReport(lhs, i_r_a, i_ra_b, const, rhs, rhs - lhs)

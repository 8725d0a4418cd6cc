"""Independent reference computations used by the tests.

None of these call into the library's entropic code paths.
"""

import math

import cvxpy as cp
import numpy as np
from scipy.optimize import linprog


def knapsack_dh(p, q, eps):
    """Commuting ``D_H^eps`` by the greedy fractional knapsack.

    Minimise ``sum q_i t_i`` subject to ``sum p_i t_i >= 1 - eps``, ``0 <= t <= 1``:
    take outcomes in decreasing order of ``p_i / q_i`` (free ones first).
    """
    p, q = np.asarray(p, float), np.asarray(q, float)
    need = 1.0 - eps
    free = q <= 0
    got = p[free].sum()
    if got >= need:
        return math.inf
    idx = np.nonzero(~free)[0]
    order = idx[np.argsort(-p[idx] / q[idx], kind="stable")]
    cost = 0.0
    for i in order:
        if p[i] <= 0:
            break
        take = min(1.0, (need - got) / p[i])
        cost += take * q[i]
        got += take * p[i]
        if take < 1.0:
            break
    return -math.log2(cost)


def linprog_dh(p, q, eps):
    """The same LP through HiGHS (solver tolerance ~1e-9, used as a loose check)."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    res = linprog(q, A_ub=[-p], b_ub=[-(1 - eps)], bounds=[(0, 1)] * len(p), method="highs")
    assert res.status == 0
    return math.inf if res.fun <= 0 else -math.log2(res.fun)


def sdp_dh(rho, sigma, eps):
    """General ``D_H^eps`` as the primal SDP over tests, solved by Clarabel."""
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    d = rho.shape[0]
    p = cp.Variable((d, d), hermitian=True)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(p @ sigma))),
                      [p >> 0, np.eye(d) - p >> 0, cp.real(cp.trace(p @ rho)) >= 1 - eps])
    prob.solve(solver="CLARABEL")
    return -math.log2(prob.value)


# -- qubit smooth max relative entropy by direct search ---------------------------------

def bloch_vector(m):
    return np.array([2 * m[1, 0].real, 2 * m[1, 0].imag, (m[0, 0] - m[1, 1]).real])


def _qubit_fid2(pts, r):
    # squared fidelity of qubit states: Tr(ab) + 2 sqrt(det a det b)
    tr = 0.5 * (1 + pts @ r)
    da = (1 - np.sum(pts ** 2, axis=1)) / 4
    db = (1 - r @ r) / 4
    return tr + 2 * np.sqrt(np.clip(da * db, 0, None))


def _qubit_dmax(pts, s):
    # largest root of det(rho' - l sigma) = 0 for Bloch vectors p, s
    a = 1 - s @ s
    b = -2 + 2 * (pts @ s)
    c = 1 - np.sum(pts ** 2, axis=1)
    return (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a)


def _ball(rng, centre, radius, n):
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return centre + d * (radius * rng.random(n) ** (1 / 3))[:, None]


def brute_dmax_smooth_qubit(rho, sigma, eps, seed=0, n0=400_000, rounds=8, n=60_000):
    """Min of ``D_max(rho' || sigma)`` over qubit ``rho'`` within purified distance ``eps``.

    Uniform sampling of a Bloch-ball neighbourhood, then rounds of local
    resampling around the incumbent with a shrinking radius.  Every sample
    is feasible, so the result is an upper bound that tightens with effort.
    """
    rng = np.random.default_rng(seed)
    r, s = bloch_vector(np.asarray(rho)), bloch_vector(np.asarray(sigma))
    floor = 1 - eps ** 2

    def best_of(pts):
        pts = pts[np.linalg.norm(pts, axis=1) <= 1]
        pts = pts[_qubit_fid2(pts, r) >= floor]
        if not len(pts):
            return None, math.inf
        vals = _qubit_dmax(pts, s)
        i = int(np.argmin(vals))
        return pts[i], vals[i]

    best, val = best_of(np.vstack([_ball(rng, r, 2 * eps, n0), r[None]]))
    radius = eps
    for _ in range(rounds):
        p, v = best_of(_ball(rng, best, radius, n))
        if v < val:
            best, val = p, v
        radius *= 0.4
    return math.log2(val)


# -- classical entropies ----------------------------------------------------------------

def shannon(p):
    p = np.asarray(p, float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def h2(x):
    return shannon([x, 1 - x])

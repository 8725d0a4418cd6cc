import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from channels import all_equal, c_independent, e_independent, noiseless_c, random_channel, xor_and
from conftest import uniform_cs
from oracles import h2, knapsack_dh
from privmac.oneshot import chain_rule_check
from privmac.regions import (RateRegion2D, RateRegion3D, SecrecyThresholds, ToleranceConfig,
                             asymptotic_region, decode_region_3, default_theta_grid, ih_term,
                             imax_term, private_region_theta, private_region_union,
                             project_to_2d, secrecy_thresholds, union_contains)
from privmac.split import split_control_state

BIG_EPS = 0.9  # large enough for the log(eps) - 1 offsets to leave nonempty regions


def pentagon(cs, eps):
    o = math.log2(eps) - 1
    return RateRegion2D([(1, 0, ih_term(cs, "X", "CY", eps) + o),
                         (0, 1, ih_term(cs, "Y", "CX", eps) + o),
                         (1, 1, ih_term(cs, "XY", "C", eps) + o)])


def brute_projection_member(r3, r1, r2, steps=200, tol=1e-6):
    return any(r3.contains((t, r2, r1 - t), tol) for t in np.linspace(0, r1, steps + 1))


class TestToleranceConfig:
    @pytest.mark.parametrize("kw", [dict(eps=0.0), dict(eps=1.0), dict(delta=0.05, eps_prime=0.05),
                                    dict(eps_prime=0.0), dict(gamma=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ToleranceConfig(**kw)

    def test_derived(self):
        t = ToleranceConfig(delta=0.1, eps_prime=0.02)
        assert t.delta_prime == pytest.approx(0.08)
        assert t.threshold_constant == pytest.approx(math.log2(3 / 0.02 ** 3) + 0.25 * math.log2(10))


class TestPolytopes:
    def test_pentagon_vertices(self):
        r = RateRegion2D([(1, 0, 2), (0, 1, 1), (1, 1, 2.5)])
        assert_allclose(r.vertices, [[0, 0], [2, 0], [2, 0.5], [1.5, 1], [0, 1]])
        assert r.contains((1, 1)) and not r.contains((2, 1))

    def test_empty_and_guard(self):
        assert RateRegion2D([(1, 1, -0.1)]).is_empty()
        assert RateRegion2D([(1, 0, 1), (0, 1, 1)], guard=-1).is_empty()
        assert not RateRegion2D([(1, 0, 1), (0, 1, 1)], guard=-1).contains((0, 0))
        assert_allclose(RateRegion2D([(1, 1, 0.0)]).vertices, [[0, 0]])

    def test_vertices_satisfy_halfspaces(self, rng):
        for _ in range(20):
            hs = [(*rng.uniform(0, 2, 2), rng.uniform(0.1, 3)) for _ in range(6)]
            r = RateRegion2D(hs)
            for v in r.vertices:
                assert r.contains(v, 1e-9)

    def test_3d_vertices(self):
        r = RateRegion3D([(1, 1, 1, 1)])
        assert len(r.vertices) == 4
        assert r.contains((0.2, 0.3, 0.5)) and not r.contains((0.5, 0.5, 0.5))


class TestDecodeRegion:
    def test_all_equal_outputs(self):
        eps = 0.05
        r3 = decode_region_3(split_control_state(uniform_cs(all_equal()), 0.4), eps)
        expected = -math.log2(1 - eps) + math.log2(eps) - 1
        assert_allclose([h[3] for h in r3.halfspaces], [expected] * 7, atol=1e-9)
        s = project_to_2d(r3)
        assert s.is_empty()
        assert all(0 <= c <= 1.5 for v in s.vertices for c in v)

    @pytest.mark.parametrize("theta", [0.0, 0.3, 0.5, 1.0])
    def test_sum_rate_invariance(self, qubit_cs, theta):
        eps = 0.05
        r3 = decode_region_3(split_control_state(qubit_cs, theta), eps)
        assert_allclose(r3.terms["UYV:C"], ih_term(qubit_cs, "XY", "C", eps), atol=1e-6)
        s = project_to_2d(r3)
        assert_allclose(s.halfspaces[-1][2], ih_term(qubit_cs, "XY", "C", eps) + math.log2(eps) - 1,
                        atol=1e-6)

    def test_noiseless_sum_bound_against_oracle(self):
        eps = 0.05
        cs = uniform_cs(noiseless_c())
        r3 = decode_region_3(split_control_state(cs, 0.5), eps)
        p = np.zeros(16)
        p[[0, 5, 10, 15]] = 0.25
        assert_allclose(r3.terms["UYV:C"], knapsack_dh(p, np.full(16, 1 / 16), eps), atol=1e-9)
        assert_allclose(r3.terms["UYV:C"], 2 - math.log2(1 - eps), atol=1e-9)

    def test_requires_split_state(self, qubit_cs):
        with pytest.raises(ValueError):
            decode_region_3(qubit_cs, 0.1)


class TestProjection:
    def test_nine_halfspaces(self, qubit_cs):
        s = project_to_2d(decode_region_3(split_control_state(qubit_cs, 0.5), 0.1))
        assert len(s.halfspaces) == 9
        assert s.halfspaces[7][:2] == (1.0, 2.0)

    @pytest.mark.parametrize("theta", [0.2, 0.6])
    def test_matches_brute_force(self, rng, theta):
        cs = uniform_cs(random_channel(rng))
        r3 = decode_region_3(split_control_state(cs, theta), BIG_EPS)
        s = project_to_2d(r3)
        hi = s.vertices.max(axis=0) * 1.15
        bad = 0
        for r1, r2 in itertools.product(np.linspace(0, hi[0], 20), np.linspace(0, hi[1], 20)):
            if s.contains((r1, r2), 1e-6) != brute_projection_member(r3, r1, r2):
                bad += 1
        assert bad == 0

    def test_infeasible_split_sender_empties_region(self, qubit_cs):
        # at theta = 0 the U bound is log(1/(1-eps)) + log(eps) - 1 < 0 for small eps
        s = project_to_2d(decode_region_3(split_control_state(qubit_cs, 0.0), 0.05))
        assert s.guard < 0 and s.is_empty()

    @pytest.mark.parametrize("theta", [0.0, 1.0])
    def test_degenerate_theta_is_pentagon(self, qubit_cs, theta):
        sp = split_control_state(qubit_cs, theta)
        r3 = decode_region_3(sp, BIG_EPS)
        full = "V" if theta == 0.0 else "U"
        assert_allclose(r3.terms[f"{full}:C{'UY' if full == 'V' else 'VY'}"],
                        ih_term(qubit_cs, "X", "CY", BIG_EPS), atol=1e-6)
        assert_allclose(project_to_2d(r3).vertices, pentagon(qubit_cs, BIG_EPS).vertices, atol=1e-6)

    def test_inside_degenerate_pentagon(self, rng):
        cs = uniform_cs(random_channel(rng))
        pent = pentagon(cs, BIG_EPS)
        for theta in (0.25, 0.5, 0.75):
            for v in project_to_2d(decode_region_3(split_control_state(cs, theta), BIG_EPS)).vertices:
                assert pent.contains(v, 1e-6)


class TestSecrecyThresholds:
    def test_e_independent(self):
        tol = ToleranceConfig(c0=0.5)
        t = secrecy_thresholds(split_control_state(uniform_cs(e_independent()), 0.5), tol)
        assert all(v == 0.0 for v in t.terms.values())
        assert t.log_k1 == tol.threshold_constant
        assert t.log_k2 == t.log_k3 == tol.threshold_constant + 0.5

    def test_endpoint_terms_vanish(self, qubit_cs, tol):
        assert secrecy_thresholds(split_control_state(qubit_cs, 0.0), tol).terms["U:E"] == 0.0
        assert secrecy_thresholds(split_control_state(qubit_cs, 1.0), tol).terms["V:EYU"] == 0.0

    def test_block_sizes(self):
        t = SecrecyThresholds(3.2, 1.0, 0.0)
        assert t.block_sizes() == {"U": 16, "Y": 2, "V": 1}
        assert t.alice == pytest.approx(3.2) and t.bob == 1.0

    def test_chain_rule_on_split_state(self, qubit_cs, tol):
        sp = split_control_state(qubit_cs, 0.5)
        phi = sp.marginal(["E", "U", "Y"])
        rep = chain_rule_check(phi, ([0], [1], [2]), tol.delta_prime, tol.gamma)
        assert rep.slack >= -1e-2


class TestPrivateRegion:
    def test_shift_consistency(self, rng):
        cs = uniform_cs(random_channel(rng))
        s = project_to_2d(decode_region_3(split_control_state(cs, 0.5), BIG_EPS))
        t = SecrecyThresholds(0.2, 0.3, 0.1)
        p = private_region_theta(s, t)
        assert not p.is_empty()
        shifted = [v - (t.alice, t.bob) for v in s.vertices]
        for v in p.vertices:
            assert s.contains(v + (t.alice, t.bob), 1e-9)
            # vertices on the axes come from clamping, the rest are shifted vertices of s
            if v[0] > 1e-9 and v[1] > 1e-9:
                assert min(np.abs(w - v).max() for w in shifted) <= 1e-9

    def test_thresholds_dominate(self, qubit_file, tol):
        f = qubit_file
        regions = private_region_union(f.channel, f.p_x, f.p_y, tol, [0.0, 0.5, 1.0])
        assert all(r.private.is_empty() for r in regions)

    def test_e_independent_noiseless(self):
        cs = uniform_cs(noiseless_c())
        tol = ToleranceConfig(eps=BIG_EPS)
        s = project_to_2d(decode_region_3(split_control_state(cs, 0.5), BIG_EPS))
        t = secrecy_thresholds(split_control_state(cs, 0.5), tol)
        assert t.terms == {"U:E": 0.0, "Y:EU": 0.0, "V:EYU": 0.0}
        p = private_region_theta(s, t, tol)
        const = tol.threshold_constant
        assert_allclose(np.array(p.halfspaces)[:, 2],
                        [b - a1 * 2 * const - a2 * const for a1, a2, b in s.halfspaces])


@pytest.fixture(scope="module")
def symmetric(qubit_file):
    return qubit_file.channel, qubit_file.p_x, qubit_file.p_y


class TestUnion:
    def test_corner_regions(self, symmetric):
        # theta = 0 and 1 swap the roles of U and V; both project to the same pentagon
        tol = ToleranceConfig(eps=BIG_EPS)
        r0, r1 = private_region_union(*symmetric, tol, [0.0, 1.0])
        assert_allclose(r0.decode.vertices, r1.decode.vertices, atol=1e-6)
        assert r0.thresholds.terms["U:E"] == 0.0 and r1.thresholds.terms["V:EYU"] == 0.0

    def test_refinement_is_monotone(self, symmetric):
        tol = ToleranceConfig(eps=BIG_EPS, delta=0.99, eps_prime=0.98)
        coarse = private_region_union(*symmetric, tol, default_theta_grid(2))
        fine = private_region_union(*symmetric, tol, default_theta_grid(5), workers=2)
        for p in itertools.product(np.linspace(0, 3, 13), repeat=2):
            if union_contains(coarse, p):
                assert union_contains(fine, p)

    def test_tiny_delta_empties_union(self, symmetric):
        tol = ToleranceConfig(eps=BIG_EPS, delta=1e-4, eps_prime=5e-5)
        assert all(r.private.is_empty() for r in private_region_union(*symmetric, tol, [0, 0.5, 1]))

    def test_grid_validation(self, symmetric):
        with pytest.raises(ValueError):
            private_region_union(*symmetric, ToleranceConfig(), [1.5])
        assert default_theta_grid(33)[1] == pytest.approx(1 / 32)


class TestAsymptotic:
    def test_xor_and_against_shannon(self):
        a = asymptotic_region(uniform_cs(xor_and()))
        leak = h2(0.25) - 0.5
        expected = {"X:YC": 1.0, "Y:XC": 1.0, "XY:C": 1.0,
                    "X:E": leak, "Y:E": leak, "XY:E": h2(0.25)}
        for k, v in expected.items():
            assert_allclose(a.terms[k], v, atol=1e-9)
        assert_allclose([h[2] for h in a.difference.halfspaces],
                        [1 - leak, 1 - leak, 1 - h2(0.25)], atol=1e-9)

    def test_e_independent_is_mac_pentagon(self):
        a = asymptotic_region(uniform_cs(e_independent()))
        assert_allclose([a.terms[k] for k in ("X:E", "Y:E", "XY:E")], 0.0, atol=1e-12)
        assert_allclose(a.difference.vertices, a.decode.vertices, atol=1e-12)

    def test_c_independent_is_empty(self):
        a = asymptotic_region(uniform_cs(c_independent()))
        assert_allclose([a.terms[k] for k in ("X:YC", "Y:XC", "XY:C")], 0.0, atol=1e-12)
        assert a.difference.is_empty()

    def test_secrecy_region_is_inverted(self, qubit_cs):
        a = asymptotic_region(qubit_cs)
        assert a.secrecy.contains((5, 5)) and not a.secrecy.contains((0, 0))

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from channels import e_independent, noiseless_c
from conftest import uniform_cs
from privmac import example_channel
from privmac.channel import build_control_state
from privmac.mc import (DECODER_LABEL, Codebook, SenderBook, covering_bound, covering_deviation,
                        covering_experiment, end_to_end_run, make_rng, merge_codebooks,
                        pgm_decode_error, pgm_error, sample_codebook)
from privmac.qla import basis_state, maximally_mixed, pure_state, random_density_matrix
from privmac.regions import ToleranceConfig
from privmac.split import FiniteDist


@pytest.fixture(scope="module")
def leaky_cs():
    f = example_channel("leaky_mac")
    return build_control_state(f.channel, f.p_x, f.p_y)


class TestRng:
    def test_streams(self):
        a = make_rng(7, 0).random(5)
        assert_allclose(make_rng(7, 0).random(5), a)
        assert not np.allclose(make_rng(7, 1).random(5), a)
        assert not np.allclose(make_rng(8, 0).random(5), a)


class TestCodebook:
    def test_point_mass(self):
        book = sample_codebook(FiniteDist.point_mass(("a", "b"), "b"), 3, 4, seed=1)
        assert set(book["X"].symbols) == {"b"}
        assert_allclose(book["X"].block_counts(2), [0, 4])

    def test_reproducible(self):
        d = FiniteDist((0, 1, 2), (0.2, 0.3, 0.5))
        a = sample_codebook(d, 4, 8, seed=3, stream=2)["X"].symbols
        assert sample_codebook(d, 4, 8, seed=3, stream=2)["X"].symbols == a
        assert sample_codebook(d, 4, 8, seed=3, stream=1)["X"].symbols != a

    def test_frequencies(self):
        p = np.array([0.1, 0.2, 0.3, 0.4])
        n = 100_000
        syms = sample_codebook(FiniteDist((0, 1, 2, 3), p), 1, n, seed=11)["X"].symbols
        freq = np.bincount(syms, minlength=4) / n
        assert np.all(np.abs(freq - p) <= 3 * np.sqrt(p * (1 - p) / n))

    def test_blocks(self):
        book = sample_codebook(FiniteDist.uniform((0, 1)), 3, 2, seed=0)["X"]
        assert book.block(1) == book.symbols[2:4]
        with pytest.raises(IndexError):
            book.block(3)
        with pytest.raises(ValueError):
            sample_codebook(FiniteDist.uniform((0, 1)), 0, 2, seed=0)

    def test_merge(self):
        d = FiniteDist.uniform((0, 1))
        a, b = sample_codebook(d, 1, 1, 0, "U"), sample_codebook(d, 1, 1, 0, "V")
        assert set(merge_codebooks(a, b).senders) == {"U", "V"}
        with pytest.raises(ValueError):
            merge_codebooks(a, a)


class TestCoveringDeviation:
    def test_identical_outputs(self):
        rho = maximally_mixed(2)
        assert covering_deviation({(0,): rho, (1,): rho}, [[0, 0, 1]], rho) == 0.0

    def test_orthogonal_pair(self):
        states = {(0,): basis_state(0, 2), (1,): basis_state(1, 2)}
        ref = maximally_mixed(2)
        assert_allclose(covering_deviation(states, [[0]], ref), 1.0, atol=1e-12)
        assert_allclose(covering_deviation(states, [[0, 1]], ref), 0.0, atol=1e-12)
        assert_allclose(covering_deviation(states, [[0, 0, 0, 1]], ref), 0.5, atol=1e-12)

    def test_two_senders_match_direct_average(self, rng):
        states = {(x, y): random_density_matrix(2, rng) for x in (0, 1) for y in (0, 1, 2)}
        bx, by = [0, 1, 1], [2, 0]
        avg = sum(states[(x, y)].data for x in bx for y in by) / 6
        ref = maximally_mixed(2)
        expected = np.abs(np.linalg.eigvalsh(avg - ref.data)).sum()
        assert_allclose(covering_deviation(states, [bx, by], ref), expected, atol=1e-12)

    def test_empty_block(self):
        with pytest.raises(ValueError):
            covering_deviation({(0,): maximally_mixed(2)}, [[]], maximally_mixed(2))

    @pytest.mark.parametrize("n, expected", [(1, 0.1), (2, 20 * 0.1 ** 0.125),
                                             (3, 40 * 0.1 ** 0.125)])
    def test_bounds(self, n, expected):
        assert_allclose(covering_bound(n, 0.1), expected)
        with pytest.raises(ValueError):
            covering_bound(4, 0.1)


class TestCoveringExperiment:
    def test_e_independent_is_exact(self, tol):
        rep = covering_experiment(uniform_cs(e_independent()), {"X": 2, "Y": 2}, tol, trials=20)
        assert rep.mean_deviation == 0.0 and rep.passed

    def test_one_sender_leaky(self, leaky_cs):
        tol = ToleranceConfig(delta=0.01, eps_prime=0.005)
        rep = covering_experiment(leaky_cs, {"X": 512}, tol, trials=200, seed=0)
        assert rep.theoretical_bound == 0.01
        assert rep.mean_deviation + 2 * rep.stderr <= 0.01
        assert rep.passed

    def test_deviation_shrinks_with_block_size(self, leaky_cs, tol):
        means = [covering_experiment(leaky_cs, {"X": k}, tol, trials=100, seed=5).mean_deviation
                 for k in (4, 16, 64, 256)]
        assert all(b < a for a, b in zip(means, means[1:]))
        # multinomial fluctuations scale like K^(-1/2)
        assert_allclose(means[0] / means[-1], 8.0, rtol=0.3)

    def test_single_trial(self, leaky_cs, tol):
        rep = covering_experiment(leaky_cs, {"X": 8}, tol, trials=1)
        assert rep.stderr is None and rep.warnings
        assert rep.to_dict()["stderr"] is None

    def test_thresholds_recorded(self, leaky_cs, tol):
        rep = covering_experiment(leaky_cs, {"X": 8, "Y": 8}, tol, trials=2,
                                  thresholds={"X": 3.0, "Y": 3.5})
        assert rep.params["meets_thresholds"] is False
        assert rep.to_dict()["pass"] == rep.passed

    def test_bad_arguments(self, leaky_cs, tol):
        with pytest.raises(ValueError):
            covering_experiment(leaky_cs, {"Z": 2}, tol)
        with pytest.raises(ValueError):
            covering_experiment(leaky_cs, {"X": 0}, tol)
        with pytest.raises(ValueError):
            covering_experiment(leaky_cs, {"X": 2}, tol, trials=0)


class TestPgm:
    def test_orthogonal(self):
        assert pgm_error([basis_state(i, 3) for i in range(3)]) == 0.0

    @pytest.mark.parametrize("n", [2, 4])
    def test_identical(self, n):
        assert_allclose(pgm_error([maximally_mixed(2)] * n), 1 - 1 / n, atol=1e-12)

    @pytest.mark.parametrize("angle", [0.3, 0.9, 1.4])
    def test_two_pure_states_helstrom(self, angle):
        # for two equiprobable pure states the PGM is the optimal measurement
        a = pure_state([1, 0])
        b = pure_state([math.cos(angle), math.sin(angle)])
        helstrom = 0.5 * (1 - math.sqrt(1 - math.cos(angle) ** 2))
        assert_allclose(pgm_error([a, b]), helstrom, atol=1e-12)

    def test_noiseless_code(self):
        cs = uniform_cs(noiseless_c())
        d = FiniteDist.uniform((0, 1))
        book = Codebook({"X": SenderBook(d, (0, 1), 2, 1), "Y": SenderBook(d, (1, 0), 2, 1)}, 0)
        assert pgm_decode_error(book, cs.quantum_table("C")) == 0.0

    def test_message_limit(self, qubit_cs):
        d = FiniteDist.uniform((0, 1))
        book = merge_codebooks(sample_codebook(d, 20, 1, 0, "X"), sample_codebook(d, 20, 1, 0, "Y"))
        with pytest.raises(ValueError):
            pgm_decode_error(book, qubit_cs.quantum_table("C"))


@pytest.fixture(scope="module")
def report(qubit_file, tol):
    return end_to_end_run(qubit_file.channel, qubit_file.p_x, qubit_file.p_y, tol, 0.5,
                          (2, 2), seed=3, max_block_size=16)


class TestEndToEnd:
    def test_fields(self, report, tol):
        assert report["decoder"] == DECODER_LABEL
        assert 0 <= report["decode_error"] <= 1
        assert report["secrecy_mean_deviation"] <= report["secrecy_max_deviation"] <= 2
        assert all(v <= 16 for v in report["block_sizes"].values())
        assert any("capped" in w for w in report["warnings"])
        assert not report["rates_in_private_region"]
        assert_allclose(report["targets"]["secrecy_40_delta_1_8"], 40 * tol.delta ** 0.125)

    def test_deterministic(self, report, qubit_file, tol):
        again = end_to_end_run(qubit_file.channel, qubit_file.p_x, qubit_file.p_y, tol, 0.5,
                               (2, 2), seed=3, max_block_size=16)
        assert again == report

    def test_single_message_is_error_free(self, qubit_file, tol):
        rep = end_to_end_run(qubit_file.channel, qubit_file.p_x, qubit_file.p_y, tol, 0.5, (1, 1),
                             block_sizes={"U": 2, "V": 2, "Y": 2})
        assert rep["decode_error"] == pytest.approx(0.0, abs=1e-12)
        assert rep["block_sizes"] == {"U": 2, "V": 2, "Y": 2}

    def test_e_blind_channel_has_no_leak(self, tol):
        ch = e_independent()
        rep = end_to_end_run(ch, FiniteDist.uniform(ch.x_alphabet), FiniteDist.uniform(ch.y_alphabet),
                             tol, 0.3, (2, 2), seed=0, max_block_size=4)
        assert rep["secrecy_max_deviation"] == pytest.approx(0.0, abs=1e-12)

    def test_bad_messages(self, qubit_file, tol):
        with pytest.raises(ValueError):
            end_to_end_run(qubit_file.channel, qubit_file.p_x, qubit_file.p_y, tol, 0.5, (0, 2))

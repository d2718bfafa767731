import json

import numpy as np
import pytest

from wmsync import markov
from wmsync.exceptions import (
    DegenerateRowError,
    InvalidMatrixError,
    MatrixNotFoundError,
    NumericError,
)
from wmsync.markov import TransitionMatrix

from conftest import power_iteration, random_stochastic


class TestStationary:
    def test_identical_rows(self):
        a = np.tile([0.9, 0.05, 0.05], (3, 1))
        np.testing.assert_allclose(markov.stationary_distribution(a), [0.9, 0.05, 0.05],
                                   atol=1e-15)

    def test_doubly_stochastic(self):
        a = np.array([[0.2, 0.3, 0.5], [0.5, 0.2, 0.3], [0.3, 0.5, 0.2]])
        np.testing.assert_allclose(markov.stationary_distribution(a), [1 / 3] * 3, atol=1e-15)

    def test_matches_power_iteration(self, rng):
        for _ in range(50):
            a = random_stochastic(rng, 4)
            np.testing.assert_allclose(markov.stationary_distribution(a),
                                       power_iteration(a), atol=1e-10)

    def test_rejects_non_stochastic(self):
        with pytest.raises(InvalidMatrixError):
            markov.stationary_distribution([[0.5, 0.4], [0.5, 0.5]])
        with pytest.raises(InvalidMatrixError):
            markov.stationary_distribution([[1.2, -0.2], [0.5, 0.5]])

    def test_reducible_chain_has_no_unique_law(self):
        with pytest.raises(NumericError):
            markov.stationary_distribution(np.eye(3))


class TestIidParams:
    def test_absorbing_transmission(self):
        p = markov.derive_iid_params(TransitionMatrix.four(np.tile([1.0, 0, 0, 0], (4, 1))))
        assert (p.p_t, p.p_s, p.p_d, p.p_i) == (1.0, 0.0, 0.0, 0.0)
        assert p.p_hat_t == 1.0

    def test_identical_rows(self):
        p = markov.derive_iid_params(TransitionMatrix.four(np.tile([0.94, 0.02, 0.02, 0.02], (4, 1))))
        np.testing.assert_allclose([p.p_t, p.p_s, p.p_d, p.p_i], [0.94, 0.02, 0.02, 0.02],
                                   atol=1e-15)

    def test_band1_matches_linear_oracle(self, rng):
        a4 = markov.generate_matrix(markov.BANDS[1], rng)
        p = markov.derive_iid_params(a4, max_insertions=1)
        rho = power_iteration(a4.entries)
        np.testing.assert_allclose([p.p_t, p.p_s, p.p_d, p.p_i], rho, atol=1e-10)
        assert p.p_hat_t == 1.0 - p.p_d
        assert abs(p.p_t + p.p_s + p.p_d + p.p_i - 1) < 1e-12
        assert p.p_f == pytest.approx(0.3125 * (1 - p.p_s) + 0.6875 * p.p_s)


class TestReduction:
    def test_zero_s_column_unchanged(self, rng):
        rows = random_stochastic(rng, 4)
        rows[:, 1] = 0
        rows /= rows.sum(axis=1, keepdims=True)
        a3 = markov.reduce_to_three_state(TransitionMatrix.four(rows))
        np.testing.assert_allclose(a3.entries, rows[np.ix_([0, 2, 3], [0, 2, 3])], atol=1e-15)

    def test_renormalises_row(self):
        rows = np.tile([0.25, 0.25, 0.25, 0.25], (4, 1))
        rows[0] = [0.9, 0.1, 0.0, 0.0]
        a3 = markov.reduce_to_three_state(TransitionMatrix.four(rows))
        np.testing.assert_allclose(a3.row("T"), [1.0, 0.0, 0.0])

    def test_elementwise_oracle(self, rng):
        a4 = TransitionMatrix.four(random_stochastic(rng, 4))
        a3 = markov.reduce_to_three_state(a4)
        for x in "TDI":
            for y in "TDI":
                assert a3[x, y] == pytest.approx(a4[x, y] / (1 - a4[x, "S"]), rel=1e-14)

    def test_degenerate_row(self):
        rows = np.tile([0.7, 0.1, 0.1, 0.1], (4, 1))
        rows[2] = [0, 1, 0, 0]
        with pytest.raises(DegenerateRowError):
            markov.reduce_to_three_state(TransitionMatrix.four(rows))


class TestEntropy:
    @pytest.mark.parametrize("row, expected", [
        ((1 / 3, 1 / 3, 1 / 3), np.log2(3)),
        ((1, 0, 0), 0.0),
        ((0.9, 0.05, 0.05), 0.568996),
    ])
    def test_state_entropy(self, row, expected):
        assert markov.state_entropy(row) == pytest.approx(expected, abs=1e-6)

    def test_state_entropy_rejects_negative(self):
        with pytest.raises(InvalidMatrixError):
            markov.state_entropy([1.1, -0.1, 0])

    def test_average_entropy_uniform_and_deterministic(self):
        assert markov.average_entropy(TransitionMatrix.three(np.full((3, 3), 1 / 3))) == \
            pytest.approx(np.log2(3), abs=1e-12)
        assert markov.average_entropy(TransitionMatrix.three(np.tile([1.0, 0, 0], (3, 1)))) == 0.0

    def test_average_entropy_composes_oracles(self, rng):
        a = random_stochastic(rng, 3)
        rho = power_iteration(a)
        h = [-(r * np.log2(r)).sum() for r in a]
        assert markov.average_entropy(TransitionMatrix.three(a)) == pytest.approx(rho @ h, abs=1e-10)


class TestGeneration:
    def test_zero_width_band_is_deterministic(self, rng):
        eps = 0.01
        band = markov.EntropyBand(9, (eps, eps), (eps, eps))
        a4 = markov.generate_matrix(band, rng)
        np.testing.assert_allclose(a4.entries[:, 1:], eps)
        np.testing.assert_allclose(a4.entries[:, 0], 1 - 3 * eps)

    def test_rows_use_their_ranges(self, rng):
        band = markov.BANDS[2]
        for _ in range(50):
            a = markov.generate_matrix(band, rng).entries
            assert np.all((a[0, 1:] >= 0.001) & (a[0, 1:] <= 0.05))
            assert np.all((a[1:, 1:] >= 0.01) & (a[1:, 1:] <= 0.05))
            np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-15)

    def test_band1_median_entropy(self, rng):
        hs = [markov.average_entropy(markov.reduce_to_three_state(
            markov.generate_matrix(markov.BANDS[1], rng))) for _ in range(100)]
        assert 0.01 <= np.median(hs) <= 0.1

    @pytest.mark.parametrize("target", [0.01, 0.074])
    def test_rejection_sampling_hits_target(self, rng, target):
        a4, a3, h = markov.generate_matrix_for_entropy(target, 0.001, rng=rng)
        assert abs(h - target) <= 0.001
        assert h == pytest.approx(markov.average_entropy(markov.reduce_to_three_state(a4)))
        assert a3 == markov.reduce_to_three_state(a4)

    def test_rejection_sampling_failure_keeps_best(self, rng):
        with pytest.raises(MatrixNotFoundError) as info:
            markov.generate_matrix_for_entropy(0.1, 1e-12, markov.BANDS[1], rng, max_attempts=1)
        a4, a3, h = info.value.best
        assert a4.states == markov.STATES4 and h > 0

    def test_band_lookup(self):
        assert markov.band_for_entropy(0.02).band_id == 1
        assert markov.band_for_entropy(0.1).band_id == 2
        assert markov.band_for_entropy(0.25).band_id == 3
        assert markov.band_for_entropy(0.3).band_id == 3
        with pytest.raises(ValueError):
            markov.band_for_entropy(0.5)


class TestCapInsertion:
    def test_renormalise(self):
        rows = np.array([[0.9, 0.05, 0.05], [0.5, 0.3, 0.2], [0.5, 0.3, 0.2]])
        np.testing.assert_allclose(markov.cap_insertion_row(TransitionMatrix.three(rows)),
                                   [0.625, 0.375, 0.0])

    def test_already_zero(self):
        rows = np.array([[0.9, 0.05, 0.05], [0.5, 0.3, 0.2], [0.9, 0.1, 0.0]])
        np.testing.assert_allclose(markov.cap_insertion_row(TransitionMatrix.three(rows)),
                                   [0.9, 0.1, 0.0])

    def test_formula(self, rng):
        a3 = TransitionMatrix.three(random_stochastic(rng, 3))
        row = markov.cap_insertion_row(a3)
        assert row[0] == pytest.approx(a3["I", "T"] / (1 - a3["I", "I"]))
        assert row[1] == pytest.approx(a3["I", "D"] / (1 - a3["I", "I"]))
        assert row[2] == 0

    def test_degenerate(self):
        rows = np.array([[0.9, 0.05, 0.05], [0.5, 0.3, 0.2], [0, 0, 1.0]])
        with pytest.raises(DegenerateRowError):
            markov.cap_insertion_row(TransitionMatrix.three(rows))


def test_matrix_json_round_trip(rng):
    a4 = markov.generate_matrix(markov.BANDS[3], rng)
    data = json.loads(a4.to_json())
    assert data["states"] == ["T", "S", "D", "I"]
    back = TransitionMatrix.from_json(a4.to_json())
    np.testing.assert_array_equal(back.entries, a4.entries)
    a3 = markov.reduce_to_three_state(a4)
    assert TransitionMatrix.from_dict(a3.to_dict()).states == ("T", "D", "I")


def test_matrix_rejects_bad_labels():
    with pytest.raises(InvalidMatrixError):
        TransitionMatrix(("A", "B"), [[1, 0], [0, 1]])

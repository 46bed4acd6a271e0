"""Tests for PAM constellations, Gray labeling, and noise calibration."""

import numpy as np
import pytest

from atomris.modem import (
    constellation_csv,
    demodulate_hard,
    hamming_table,
    make_pam,
    modulate,
    noise_sigma,
    slice_to_indices,
)


class TestMakePam:
    def test_binary_levels(self):
        c = make_pam(2)
        assert np.allclose(c.points, [-1.0, 1.0])

    def test_four_level_values(self):
        c = make_pam(4)
        assert np.allclose(c.points, np.array([-3, -1, 1, 3]) / np.sqrt(5))

    @pytest.mark.parametrize("order", [2, 4, 8, 16])
    def test_unit_energy_and_zero_mean(self, order):
        c = make_pam(order)
        assert abs(np.mean(c.points**2) - 1.0) < 1e-12
        assert abs(np.mean(c.points)) < 1e-12

    @pytest.mark.parametrize("order", [2, 4, 8, 16])
    def test_gray_property(self, order):
        """Adjacent levels differ in exactly one label bit."""
        c = make_pam(order)
        for a, b in zip(c.labels, c.labels[1:]):
            assert sum(x != y for x, y in zip(a, b)) == 1

    @pytest.mark.parametrize("order", [3, 5, 32, 0, -4])
    def test_unsupported_order(self, order):
        with pytest.raises(ValueError):
            make_pam(order)


class TestModulate:
    def test_empty(self):
        assert modulate("", make_pam(4)).size == 0

    def test_binary_convention(self):
        """Label 0 maps to -1, label 1 to +1."""
        assert np.allclose(modulate("01", make_pam(2)), [-1.0, 1.0])

    @pytest.mark.parametrize("order", [2, 4, 8, 16])
    def test_round_trip_all_labels(self, order):
        """modulate then hard-demodulate is the identity on clean symbols."""
        c = make_pam(order)
        bits = "".join(c.labels)
        assert demodulate_hard(modulate(bits, c), c) == bits

    def test_ragged_length_rejected(self):
        with pytest.raises(ValueError, match="divisible"):
            modulate("010", make_pam(4))


class TestDemodulate:
    def test_exact_points(self):
        c = make_pam(8)
        assert demodulate_hard(c.points, c) == "".join(c.labels)

    def test_midpoint_tie_smaller_amplitude(self):
        """Exact midpoints resolve toward the smaller-amplitude level."""
        c = make_pam(4)
        # between -3 and -1 (scaled): smaller amplitude is -1
        assert demodulate_hard(np.array([-2.0 / np.sqrt(5)]), c) == c.labels[1]
        # between +1 and +3: smaller amplitude is +1
        assert demodulate_hard(np.array([2.0 / np.sqrt(5)]), c) == c.labels[2]
        # zero midpoint: amplitudes tie, negative level by convention
        assert demodulate_hard(np.array([0.0]), c) == c.labels[1]

    @pytest.mark.parametrize("order", [4, 8, 16])
    def test_perturbation_within_half_distance(self, order):
        """Perturbing any point by under half the minimum distance never
        changes its label (exhaustive sweep)."""
        c = make_pam(order)
        for delta in (-0.49, -0.2, 0.0, 0.2, 0.49):
            values = c.points + delta * c.min_distance
            assert demodulate_hard(values, c) == "".join(c.labels)

    def test_nearest_neighbor_rule(self):
        """Output always minimizes |value - point| (random sweep)."""
        c = make_pam(16)
        values = np.random.default_rng(0).uniform(-2, 2, 500)
        idx = slice_to_indices(values, c)
        brute = np.argmin(np.abs(values[:, None] - c.points[None, :]), axis=1)
        assert np.array_equal(idx, brute)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            demodulate_hard(np.array([np.nan]), make_pam(4))


class TestNoiseSigma:
    def test_four_pam_zero_db(self):
        assert noise_sigma(0.0, 4).sigma2 == pytest.approx(0.5, abs=1e-15)

    def test_binary_ten_db(self):
        assert noise_sigma(10.0, 2).sigma2 == pytest.approx(0.1, abs=1e-15)

    def test_monotone_decreasing(self):
        grid = np.linspace(-30, 50, 100)
        sig = [noise_sigma(db, 8).sigma2 for db in grid]
        assert all(a > b for a, b in zip(sig, sig[1:]))
        assert sig[-1] < 1e-5


class TestConstellationCsv:
    def test_table_contents(self):
        c = make_pam(4)
        lines = constellation_csv(c).splitlines()
        assert lines[0] == "index,bits,amplitude"
        assert len(lines) == 5
        idx, bits, amp = lines[1].split(",")
        assert (idx, bits) == ("0", c.labels[0])
        assert float(amp) == c.points[0]


class TestHammingTable:
    def test_matches_label_xor(self):
        c = make_pam(16)
        table = hamming_table(c)
        for i, a in enumerate(c.labels):
            for j, b in enumerate(c.labels):
                assert table[i, j] == sum(x != y for x, y in zip(a, b))
        assert np.array_equal(table, table.T)
        assert np.all(np.diag(table) == 0)

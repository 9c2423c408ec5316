import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sirkit.errors import DomainError, RangeError
from sirkit.filter_design import frequency_response
from sirkit.network import (
    BandSpec,
    FrequencyGrid,
    TwoPortSweep,
    magnitude_db,
    max_unitarity_error,
    passband_metrics,
)


def flat_sweep(grid, s21_db, s11_db=-40.0):
    n = len(grid)
    s21 = np.full(n, 10 ** (s21_db / 20), dtype=complex)
    s11 = np.full(n, 10 ** (s11_db / 20), dtype=complex)
    return TwoPortSweep(grid, s11, s21, s21, s11)


class TestFrequencyGrid:
    def test_from_step_includes_stop(self):
        g = FrequencyGrid.from_step(2.8e9, 3.8e9, 1e6)
        assert len(g) == 1001
        assert g.start == 2.8e9
        assert g.stop == pytest.approx(3.8e9)

    def test_rejects_non_increasing(self):
        with pytest.raises(ValueError):
            FrequencyGrid([1e9, 1e9])
        with pytest.raises(ValueError):
            FrequencyGrid([2e9, 1e9])

    def test_rejects_nonpositive_and_empty(self):
        with pytest.raises(ValueError):
            FrequencyGrid([0.0, 1e9])
        with pytest.raises(ValueError):
            FrequencyGrid([])

    def test_points_are_readonly(self):
        g = FrequencyGrid([1e9, 2e9])
        with pytest.raises(ValueError):
            g.points[0] = 5.0


def test_sweep_length_mismatch():
    g = FrequencyGrid([1e9, 2e9])
    with pytest.raises(ValueError):
        TwoPortSweep(g, [0, 0], [0], [0, 0], [0, 0])


def test_reversed_swaps_ports():
    g = FrequencyGrid([1e9])
    sw = TwoPortSweep(g, [0.1], [0.2], [0.3], [0.4])
    r = sw.reversed()
    assert (r.s11[0], r.s21[0], r.s12[0], r.s22[0]) == (0.4, 0.3, 0.2, 0.1)


def test_magnitude_db_values():
    assert magnitude_db(0.5) == pytest.approx(-6.0206, abs=1e-4)
    assert magnitude_db(1j) == 0.0
    assert magnitude_db(0.0) == -math.inf
    out = magnitude_db(np.array([1.0, 0.1]))
    np.testing.assert_allclose(out, [0.0, -20.0])


def test_flat_passband_metrics():
    grid = FrequencyGrid.from_step(1e9, 2e9, 1e6)
    m = passband_metrics(flat_sweep(grid, -0.5), BandSpec(1.4e9, 1.6e9, 1.2e9, 1.8e9))
    assert m.il_best_db == pytest.approx(-0.5)
    assert m.il_worst_db == pytest.approx(-0.5)
    assert m.rl_worst_db == pytest.approx(-40.0)
    assert m.rejection_floor_db == pytest.approx(-0.5)
    # never crosses -3 dB below its best value
    assert m.rolloff_lower_hz is None and m.rolloff_upper_hz is None


def test_brick_wall_has_zero_rolloff():
    grid = FrequencyGrid.from_step(1e9, 2e9, 1e6)
    f = grid.points
    s21 = np.where((f >= 1.4e9) & (f <= 1.6e9), 1.0, 0.0).astype(complex)
    s11 = np.sqrt(1 - np.abs(s21) ** 2).astype(complex)
    m = passband_metrics(TwoPortSweep(grid, s11, s21, s21, s11), BandSpec.around(1.4e9, 1.6e9, 0.1e9))
    assert m.rolloff_lower_hz == 0.0
    assert m.rolloff_upper_hz == 0.0
    assert m.rejection_floor_db == -math.inf
    assert m.il_best_db == 0.0


def test_linear_skirt_rolloff():
    # |S21| in dB falls 1 dB per MHz outside [1.4, 1.6] GHz
    grid = FrequencyGrid.from_step(1e9, 2e9, 1e6)
    f = grid.points
    dist = np.maximum(0, np.maximum(1.4e9 - f, f - 1.6e9)) / 1e6
    s21 = 10 ** (-dist / 20)
    sw = TwoPortSweep(grid, np.zeros_like(s21), s21, s21, np.zeros_like(s21))
    m = passband_metrics(sw, BandSpec.around(1.4e9, 1.6e9, 0.2e9), rejection_threshold_db=-60)
    assert m.rolloff_lower_hz == pytest.approx(57e6)
    assert m.rolloff_upper_hz == pytest.approx(57e6)
    assert m.rolloff_lower_from_edge_hz == pytest.approx(60e6)
    assert m.rejection_floor_db == pytest.approx(-200.0)


def test_threshold_must_be_below_3db():
    grid = FrequencyGrid.from_step(1e9, 2e9, 1e7)
    with pytest.raises(DomainError):
        passband_metrics(flat_sweep(grid, 0.0), BandSpec.around(1.4e9, 1.6e9, 1e8), -2.0)


def test_band_outside_grid():
    grid = FrequencyGrid.from_step(1e9, 2e9, 1e7)
    with pytest.raises(RangeError):
        passband_metrics(flat_sweep(grid, 0.0), BandSpec.around(1.9e9, 2.1e9, 1e8))


def test_band_edge_between_grid_points_is_honoured():
    grid = FrequencyGrid.from_step(1e9, 2e9, 1e8)
    f = grid.points
    s21 = 10 ** (-(f - 1e9) / 1e9 / 20)  # -1 dB per GHz
    sw = TwoPortSweep(grid, np.zeros_like(s21), s21, s21, np.zeros_like(s21))
    m = passband_metrics(sw, BandSpec(1.25e9, 1.55e9, 1.05e9, 1.9e9))
    assert m.il_best_db == pytest.approx(-0.25)
    assert m.il_worst_db == pytest.approx(-0.55)


def test_unitarity_of_lossless_engine(three_pole):
    grid = FrequencyGrid.from_step(2.8e9, 3.8e9, 1e6)
    assert max_unitarity_error(frequency_response(three_pole, grid)) <= 1e-10


@given(st.floats(min_value=-10, max_value=0), st.floats(min_value=-60, max_value=-1))
def test_metrics_of_flat_response_match_level(il_db, rl_db):
    grid = FrequencyGrid.from_step(1e9, 2e9, 1e7)
    m = passband_metrics(flat_sweep(grid, il_db, rl_db), BandSpec.around(1.4e9, 1.6e9, 1e8))
    assert m.il_worst_db == pytest.approx(il_db, abs=1e-9)
    assert m.rl_worst_db == pytest.approx(rl_db, abs=1e-9)
    assert m.il_best_db >= m.il_worst_db

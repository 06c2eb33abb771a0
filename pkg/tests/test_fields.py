"""Field models, noisy measurements, and grid files."""

import numpy as np
import pytest

from diffkern.fields import (
    GaussComponent,
    GridField,
    MultiGaussField,
    TimeVaryingField,
    breathing_field,
    load_grid,
    measure,
    save_grid,
    synthetic_altitude_field,
    two_bump_field,
)


class TestMultiGauss:
    def test_value_at_peak(self):
        field = two_bump_field()
        # at the sharp peak the broad bump contributes exp(-0.4 / 0.18)
        value = field.evaluate(np.array([0.5, 0.7]))
        assert value == pytest.approx(2.108368023221896, abs=1e-12)
        assert value == pytest.approx(2.108, abs=1e-3)

    def test_peak_dominates_far_from_other_bump(self):
        field = MultiGaussField(
            components=(
                GaussComponent(center=np.array([0.2, 0.2]), amplitude=3.0, bandwidth=0.05),
                GaussComponent(center=np.array([0.9, 0.9]), amplitude=1.0, bandwidth=0.05),
            )
        )
        assert field.evaluate(np.array([0.2, 0.2])) == pytest.approx(3.0, abs=1e-10)

    def test_vectorized_matches_scalar(self):
        field = two_bump_field()
        rng = np.random.default_rng(0)
        pts = rng.random((20, 2))
        vec = field.evaluate(pts)
        for p, v in zip(pts, vec):
            assert field.evaluate(p) == v

    def test_deterministic(self):
        field = two_bump_field()
        x = np.array([0.4, 0.4])
        assert field.evaluate(x, 3) == field.evaluate(x, 9000)


class TestTimeVarying:
    def test_phase_zero_matches_static_formula(self):
        field = breathing_field()
        x = np.array([0.5, 0.5])
        static = MultiGaussField(
            components=(
                GaussComponent(center=np.array([0.6, 0.5]), amplitude=0.8, bandwidth=0.3),
                GaussComponent(center=np.array([0.25, 0.3]), amplitude=1.0, bandwidth=0.1),
            )
        )
        assert field.evaluate(x, 0) == pytest.approx(static.evaluate(x), rel=1e-14)

    def test_exact_periodicity(self):
        field = breathing_field()
        rng = np.random.default_rng(1)
        for k in (0, 17, 250, 999, 1234):
            x = rng.random(2)
            assert field.evaluate(x, k) == field.evaluate(x, k + 1000)

    def test_bandwidths_actually_move(self):
        field = breathing_field()
        x = np.array([0.6, 0.8])
        assert field.evaluate(x, 250) != field.evaluate(x, 0)

    def test_quarter_period_closed_form(self):
        # at k=250 the modulation peaks: the first variance halves and the
        # second grows by half
        field = breathing_field()
        x = np.array([0.45, 0.4])
        d1 = np.sum((x - np.array([0.6, 0.5])) ** 2)
        d2 = np.sum((x - np.array([0.25, 0.3])) ** 2)
        expected = 0.8 * np.exp(-d1 / (2.0 * 0.5 * 0.3**2)) + np.exp(
            -d2 / (2.0 * 1.5 * 0.1**2)
        )
        assert field.evaluate(x, 250) == pytest.approx(expected, rel=1e-12)


class TestGridField:
    def test_constant_grid(self):
        field = GridField(values=np.full((2, 2), 3.7), bounds=(0, 1, 0, 1))
        rng = np.random.default_rng(2)
        for _ in range(20):
            assert field.evaluate(rng.random(2)) == pytest.approx(3.7, rel=1e-15)

    def test_bilinear_ramp(self):
        field = GridField(values=np.array([[0.0, 1.0], [0.0, 1.0]]), bounds=(0, 1, 0, 1))
        for x2 in (0.0, 0.3, 1.0):
            assert field.evaluate(np.array([0.5, x2])) == pytest.approx(0.5, abs=1e-15)
        assert field.evaluate(np.array([0.25, 0.9])) == pytest.approx(0.25, abs=1e-15)

    def test_reproduces_grid_values_exactly(self):
        rng = np.random.default_rng(3)
        values = rng.standard_normal((5, 7))
        field = GridField(values=values, bounds=(0, 1, 0, 1))
        rows, cols = values.shape
        for i in range(rows):
            for j in range(cols):
                x = np.array([j / (cols - 1), 1.0 - i / (rows - 1)])
                assert field.evaluate(x) == pytest.approx(values[i, j], rel=1e-12)

    def test_clamps_outside_unit_square(self):
        field = GridField(values=np.array([[0.0, 1.0], [2.0, 3.0]]), bounds=(0, 1, 0, 1))
        assert field.evaluate(np.array([-5.0, -5.0])) == field.evaluate(np.array([0.0, 0.0]))
        assert field.evaluate(np.array([9.0, 9.0])) == field.evaluate(np.array([1.0, 1.0]))

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            GridField(values=np.ones((1, 5)), bounds=(0, 1, 0, 1))


class TestGridIO:
    def test_round_trip_exact(self, tmp_path):
        field = synthetic_altitude_field(rows=31, cols=31, seed=11)
        path = tmp_path / "grid.txt"
        save_grid(field, path)
        loaded = load_grid(path)
        np.testing.assert_array_equal(loaded.values, field.values)
        assert loaded.bounds == field.bounds

    def test_constant_grid_file(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("2 2 0 1 0 1\n4.5 4.5\n4.5 4.5\n")
        field = load_grid(path)
        assert field.evaluate(np.array([0.77, 0.13])) == pytest.approx(4.5, rel=1e-15)

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2 0 1\n1 2\n3 4\n")
        with pytest.raises(ValueError):
            load_grid(path)

    def test_non_rectangular(self, tmp_path):
        path = tmp_path / "ragged.txt"
        path.write_text("2 2 0 1 0 1\n1 2\n3\n")
        with pytest.raises(ValueError):
            load_grid(path)

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "alpha.txt"
        path.write_text("2 2 0 1 0 1\n1 2\n3 x\n")
        with pytest.raises(ValueError):
            load_grid(path)

    def test_missing_rows(self, tmp_path):
        path = tmp_path / "short.txt"
        path.write_text("3 2 0 1 0 1\n1 2\n3 4\n")
        with pytest.raises(ValueError):
            load_grid(path)


class TestMeasure:
    def test_noiseless_is_exact(self):
        field = two_bump_field()
        rng = np.random.default_rng(4)
        x = np.array([0.3, 0.6])
        assert measure(field, x, 0, 0.0, rng) == field.evaluate(x)

    def test_noise_variance_matches(self):
        # Monte-Carlo moment check over 1e5 draws
        field = two_bump_field()
        rng = np.random.default_rng(5)
        x = np.tile(np.array([0.5, 0.5]), (100_000, 1))
        draws = measure(field, x, 0, 0.3, rng)
        residual = draws - field.evaluate(np.array([0.5, 0.5]))
        assert abs(np.var(residual) - 0.3) < 0.03 * 0.3
        assert abs(np.mean(residual)) < 0.01

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            measure(two_bump_field(), np.zeros(2), 0, -0.1, np.random.default_rng(0))


class TestSyntheticAltitude:
    def test_shape_and_determinism(self):
        a = synthetic_altitude_field(seed=3)
        b = synthetic_altitude_field(seed=3)
        assert a.values.shape == (31, 31)
        np.testing.assert_array_equal(a.values, b.values)

    def test_has_relief(self):
        field = synthetic_altitude_field(seed=3)
        assert field.values.std() > 0.1

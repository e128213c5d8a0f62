"""Grid, path and segment behavior, with hand-computed interpolation oracles."""

import numpy as np
import pytest

from gstoch.errors import ConfigurationError, InputError
from gstoch.grids import (BatchSegmentView, Path, Segment, TimeGrid,
                          integral_functional, segment_eval, trapezoid_weights)


def make_path(tau, horizon, n, fn):
    grid = TimeGrid(tau, horizon, n)
    return Path(grid, [fn(t) for t in grid.nodes])


class TestTimeGrid:
    def test_node_layout(self):
        grid = TimeGrid(0.1, 1.0, 110)
        assert grid.h == pytest.approx(0.01)
        assert grid.n_hist == 10
        assert grid.n_fwd == 100
        assert grid.nodes[0] == pytest.approx(-0.1)
        # time 0 must be an exact node, not just close
        assert grid.nodes[grid.n_hist] == 0.0
        assert grid.nodes[-1] == pytest.approx(1.0)

    def test_fwd_nodes(self):
        grid = TimeGrid(0.5, 0.5, 4)
        np.testing.assert_allclose(grid.fwd_nodes, [0.0, 0.25, 0.5])

    def test_zero_delay(self):
        grid = TimeGrid(0.0, 2.0, 8)
        assert grid.n_hist == 0
        assert grid.nodes[0] == 0.0

    def test_misaligned_delay_rejected(self):
        # tau/(T+tau) = 1/11 is not representable with n = 16 steps
        with pytest.raises(ConfigurationError):
            TimeGrid(0.1, 1.0, 16)

    def test_bad_sizes_rejected(self):
        with pytest.raises(ConfigurationError):
            TimeGrid(0.1, -1.0, 10)
        with pytest.raises(ConfigurationError):
            TimeGrid(-0.1, 1.0, 10)
        with pytest.raises(ConfigurationError):
            TimeGrid(0.1, 1.0, 0)

    def test_index_of(self):
        grid = TimeGrid(0.1, 1.0, 110)
        assert grid.index_of(0.0) == 10
        assert grid.index_of(-0.1) == 0
        assert grid.index_of(1.0) == 110
        with pytest.raises(InputError):
            grid.index_of(0.005)
        with pytest.raises(InputError):
            grid.index_of(1.01)


class TestPath:
    def test_shape_and_immutability(self):
        grid = TimeGrid(0.0, 1.0, 4)
        p = Path(grid, [0, 1, 2, 3, 4])
        with pytest.raises(InputError):
            Path(grid, [0, 1, 2])
        with pytest.raises((ValueError, RuntimeError)):
            p.values[0] = 5.0

    def test_nonfinite_rejected(self):
        grid = TimeGrid(0.0, 1.0, 2)
        with pytest.raises(InputError):
            Path(grid, [0.0, np.nan, 1.0])
        with pytest.raises(InputError):
            Path(grid, [0.0, np.inf, 1.0])

    def test_value_at(self):
        p = make_path(0.1, 1.0, 110, lambda t: 3 * t)
        assert p.value_at(0.5) == pytest.approx(1.5)
        assert p.value_at(-0.1) == pytest.approx(-0.3)


class TestSegment:
    def test_interpolation_between_nodes(self):
        # Oracle: with values 1, 2 on consecutive nodes (h = 0.5), the point
        # halfway back from the right node reads 1.5.
        grid = TimeGrid(0.5, 0.5, 2)
        p = Path(grid, [1.0, 2.0, 2.0])
        seg = Segment(p, 1)
        assert seg.eval(-0.25) == pytest.approx(1.5)
        assert seg.eval(0.0) == pytest.approx(2.0)
        assert seg.eval(-0.5) == pytest.approx(1.0)
        assert segment_eval(seg, -0.25) == pytest.approx(1.5)

    def test_linear_path_reproduced(self):
        p = make_path(0.1, 1.0, 110, lambda t: 2.0 * t + 1.0)
        seg = p.segment(0.5)
        for lam in (-0.1, -0.073, -0.05, -0.013, 0.0):
            assert seg.eval(lam) == pytest.approx(2.0 * (0.5 + lam) + 1.0)

    def test_offset_outside_window_rejected(self):
        p = make_path(0.1, 1.0, 110, lambda t: t)
        seg = p.segment(0.5)
        with pytest.raises(InputError):
            seg.eval(0.01)
        with pytest.raises(InputError):
            seg.eval(-0.11)

    def test_anchor_before_zero_rejected(self):
        p = make_path(0.1, 1.0, 110, lambda t: t)
        with pytest.raises(InputError):
            Segment(p, 9)
        with pytest.raises(InputError):
            p.segment(-0.01)

    def test_prehistory_padding(self):
        # Anchor at t = 0 with a window reaching before the first node is
        # impossible by construction, but a zero-delay grid clamps cleanly.
        grid = TimeGrid(0.0, 1.0, 4)
        p = Path(grid, [5.0, 1.0, 2.0, 3.0, 4.0])
        seg = p.segment(0.0)
        assert seg.eval(0.0) == 5.0

    def test_window_integral_linear_oracle(self):
        # For X(t) = t the trapezoid rule is exact:
        # integral over [0.4, 0.5] of t dt = (0.25 - 0.16) / 2 = 0.045.
        p = make_path(0.1, 1.0, 110, lambda t: t)
        assert p.segment(0.5).window_integral() == pytest.approx(0.045)
        assert integral_functional(p.segment(0.5)) == pytest.approx(0.045)

    def test_window_integral_constant_oracle(self):
        p = make_path(0.2, 0.8, 10, lambda t: 3.0)
        assert p.segment(0.0).window_integral() == pytest.approx(0.6)

    def test_zero_delay_window_integral(self):
        p = make_path(0.0, 1.0, 4, lambda t: 1.0)
        assert p.segment(0.5).window_integral() == 0.0


class TestBatchView:
    def test_matches_scalar_segment(self):
        grid = TimeGrid(0.1, 1.0, 110)
        rng = np.random.default_rng(5)
        vals = rng.normal(size=(3, grid.n + 1))
        w = trapezoid_weights(grid)
        anchor = grid.index_of(0.7)
        view = BatchSegmentView(grid, vals, anchor, w)
        for b in range(3):
            seg = Path(grid, vals[b]).segment(0.7)
            assert view.value_at_zero()[b] == pytest.approx(seg.value_at_zero())
            assert view.window_integral()[b] == pytest.approx(seg.window_integral())


def test_trapezoid_weights_sum():
    grid = TimeGrid(0.1, 1.0, 110)
    w = trapezoid_weights(grid)
    assert w.sum() == pytest.approx(0.1)
    assert w[0] == pytest.approx(grid.h / 2)
    assert w[5] == pytest.approx(grid.h)

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monocox.breslow import breslow_lambda
from monocox.core import RIGHT, StepFunction, SurvivalSample
from monocox.minorant import CumSumDiagram, block_slopes, gcm, gcm_of_function, lcm, lcm_of_function


def _chord_min(x, y):
    # hull value at each abscissa: minimum over every chord that brackets it
    out = []
    for q in x:
        best = np.inf
        for i, k in itertools.product(range(len(x)), repeat=2):
            if x[i] <= q <= x[k]:
                v = y[i] if x[k] == x[i] else y[i] + (y[k] - y[i]) * (q - x[i]) / (x[k] - x[i])
                best = min(best, v)
        out.append(best)
    return np.array(out)


def _maxmin(x, y):
    m = len(x) - 1
    return np.array(
        [
            max(min((y[t] - y[s - 1]) / (x[t] - x[s - 1]) for t in range(i, m + 1)) for s in range(1, i + 1))
            for i in range(1, m + 1)
        ]
    )


def _random_diagram(rng, m):
    x = np.concatenate([[0.0], np.cumsum(rng.uniform(0.01, 1.0, m))])
    y = np.concatenate([[0.0], np.cumsum(rng.normal(0.3, 1.0, m))])
    return CumSumDiagram(x, y)


class TestDiagram:
    def test_rejects_tied_abscissae(self):
        with pytest.raises(ValueError):
            CumSumDiagram([0, 1, 1], [0, 1, 2])

    def test_needs_a_point(self):
        with pytest.raises(ValueError):
            CumSumDiagram([], [])

    def test_from_points_adds_origin(self):
        d = CumSumDiagram.from_points([(2, 3)])
        np.testing.assert_array_equal(d.x, [0, 2])


class TestGcm:
    def test_collinear(self):
        h = gcm(CumSumDiagram([0, 1, 2], [0, 1, 2]))
        np.testing.assert_array_equal(h.vertex_index, [0, 1, 2])
        np.testing.assert_allclose(h.left_slopes, [1, 1])

    def test_hand_example(self):
        h = gcm(CumSumDiagram([0, 1, 2, 3], [0, 2, 2, 6]))
        np.testing.assert_array_equal(h.vertices, [[0, 0], [2, 2], [3, 6]])
        np.testing.assert_allclose(h.left_slopes, [1, 1, 4])

    def test_two_points(self):
        np.testing.assert_allclose(gcm(CumSumDiagram([0, 2], [0, 3])).left_slopes, [1.5])

    def test_single_point(self):
        assert gcm(CumSumDiagram([0], [0])).left_slopes.size == 0

    def test_oracles_on_random_diagrams(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            d = _random_diagram(rng, int(rng.integers(1, 12)))
            h = gcm(d)
            np.testing.assert_allclose(h.values_at_points(), _chord_min(d.x, d.y), atol=1e-10)
            np.testing.assert_allclose(h.left_slopes, _maxmin(d.x, d.y), atol=1e-10)

    def test_maxmin_duality_m60(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            d = _random_diagram(rng, 60)
            np.testing.assert_allclose(gcm(d).left_slopes, _maxmin(d.x, d.y), atol=1e-10)

    def test_block_slopes_from_increments(self):
        rng = np.random.default_rng(5)
        dx, dy = rng.uniform(0.01, 1, 30), rng.uniform(0, 1, 30)
        d = CumSumDiagram(np.concatenate([[0], np.cumsum(dx)]), np.concatenate([[0], np.cumsum(dy)]))
        h = gcm(d)
        np.testing.assert_allclose(block_slopes(h, dx, dy), h.left_slopes, rtol=1e-12)
        # a short block far from the origin keeps full relative accuracy
        far = CumSumDiagram([0, 1e6, 1e6 + 1e-6], [0, 1e6, 1e6 + 1e-3])
        np.testing.assert_allclose(block_slopes(gcm(far), [1e6, 1e-6], [1e6, 1e-3]), [1, 1000], rtol=1e-14)

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        d = _random_diagram(rng, 40)
        h = gcm(d)
        again = gcm(CumSumDiagram(*h.vertices.T))
        np.testing.assert_array_equal(again.vertices, h.vertices)

    @settings(max_examples=80, deadline=None)
    @given(
        st.lists(st.tuples(st.floats(0.01, 5), st.floats(-5, 5)), min_size=1, max_size=30),
        st.floats(-10, 10),
        st.floats(-10, 10),
        st.floats(0.1, 10),
    )
    def test_invariances(self, steps, dx, dy, c):
        x = np.concatenate([[0.0], np.cumsum([a for a, _ in steps])])
        y = np.concatenate([[0.0], np.cumsum([b for _, b in steps])])
        base = gcm(CumSumDiagram(x, y))
        assert np.all(np.diff(base.left_slopes) >= -1e-9)
        assert np.all(base.values_at_points() <= y + 1e-9)
        moved = gcm(CumSumDiagram(x + dx, y + dy))
        np.testing.assert_allclose(moved.left_slopes, base.left_slopes, rtol=1e-6, atol=1e-6)
        scaled = gcm(CumSumDiagram(c * x, y))
        np.testing.assert_allclose(scaled.left_slopes, base.left_slopes / c, rtol=1e-6, atol=1e-6)


class TestLcm:
    def test_concave_input_unchanged(self):
        h = lcm(CumSumDiagram([0, 1, 2], [0, 2, 3]))
        np.testing.assert_array_equal(h.vertex_index, [0, 1, 2])
        np.testing.assert_allclose(h.left_slopes, [2, 1])

    def test_hand_example(self):
        h = lcm(CumSumDiagram([0, 1, 2], [0, 0, 2]))
        np.testing.assert_array_equal(h.vertices, [[0, 0], [2, 2]])
        np.testing.assert_allclose(h.left_slopes, [1, 1])

    def test_reflection(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            d = _random_diagram(rng, 25)
            up = lcm(d)
            down = gcm(CumSumDiagram(d.x, -d.y))
            np.testing.assert_allclose(up.left_slopes, -down.left_slopes, atol=1e-12)
            assert np.all(np.diff(up.left_slopes) <= 1e-12)
            assert np.all(up.values_at_points() >= d.y - 1e-12)


class TestFunctionHull:
    def test_single_jump_lies_below(self):
        # one jump of size h at x1 on [0, x2]: the minorant stays at 0 up to x1
        f = StepFunction([1.0], [2.0], RIGHT, 0.0)
        fh = gcm_of_function(f, (0.0, 3.0))
        assert fh.slope(0.5) == 0.0 and fh.slope(1.0) == 0.0
        assert fh.slope(2.0) == pytest.approx(1.0)
        assert fh.minorant(3.0) == pytest.approx(2.0)

    def test_convex_in_jumps_touches_lower_corners(self):
        x = np.arange(1.0, 6.0)
        f = StepFunction(x, np.cumsum(np.arange(1.0, 6.0)), RIGHT, 0.0)
        fh = gcm_of_function(f, (0.0, 6.0))
        # every left corner (x_k, f(x_k-)) is a vertex
        np.testing.assert_allclose(fh.minorant(x), f.left_limit(x), atol=1e-12)
        np.testing.assert_allclose(fh.slope(x + 0.5), np.arange(1.0, 6.0), atol=1e-12)

    def test_lcm_uses_upper_corners(self):
        f = StepFunction([1.0], [2.0], RIGHT, 0.0)
        fh = lcm_of_function(f, (0.0, 1.0))
        assert fh.slope(0.5) == pytest.approx(2.0)
        assert fh.slope.side == "left"

    def test_empty_domain(self):
        f = StepFunction([1.0], [2.0])
        with pytest.raises(ValueError):
            gcm_of_function(f, (1.0, 1.0))

    def test_minorant_below_function(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            n = 30
            s = SurvivalSample(rng.exponential(size=n), (rng.random(n) < 0.7).astype(int))
            if s.n_events == 0:
                continue
            lam = breslow_lambda(s)
            end = float(s.time.max())
            fh = gcm_of_function(lam, (0.0, end))
            grid = np.unique(np.concatenate([lam.breakpoints, np.linspace(0, end, 500)]))
            grid = grid[grid <= end]
            assert np.all(fh.minorant(grid) <= np.minimum(lam(grid), lam.left_limit(grid)) + 1e-12)
            top = lcm_of_function(lam, (0.0, end))
            assert np.all(top.minorant(grid) >= lam(grid) - 1e-12)

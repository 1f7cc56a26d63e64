import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monocox.core import LEFT, RIGHT, UNDEFINED, StepFunction, SurvivalSample, evaluate, load_csv, sort_view, write_csv
from monocox.exceptions import DomainError, ParseError


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestSurvivalSample:
    def test_shapes_and_counts(self):
        s = SurvivalSample([1.0, 2.0, 3.0], [1, 0, 1], [[0.1], [0.2], [0.3]])
        assert (s.n, s.p, s.n_events, s.n_ties) == (3, 1, 2, 0)

    def test_no_covariates(self):
        s = SurvivalSample([1.0, 2.0], [1, 1])
        assert s.p == 0
        assert s.z.shape == (2, 0)

    def test_read_only(self):
        s = SurvivalSample([1.0, 2.0], [1, 0])
        with pytest.raises(ValueError):
            s.time[0] = 5.0

    @pytest.mark.parametrize(
        "time,status",
        [([-1.0, 2.0], [1, 1]), ([np.nan, 1.0], [1, 0]), ([1.0, 2.0], [1, 2]), ([1.0], [1, 0])],
    )
    def test_invalid(self, time, status):
        with pytest.raises(ValueError):
            SurvivalSample(time, status)

    def test_ties_counted(self):
        s = SurvivalSample([1.0, 2.0, 3.0, 1.0], [1, 1, 0, 0])
        assert s.n_ties == 1


class TestSortView:
    def test_plain(self):
        s = SurvivalSample([3.0, 1.0, 2.0], [1, 1, 1])
        np.testing.assert_array_equal(sort_view(s), [1, 2, 0])

    def test_events_before_censored(self):
        s = SurvivalSample([1.0, 1.0], [0, 1])
        np.testing.assert_array_equal(sort_view(s), [1, 0])

    def test_empty(self):
        assert sort_view(SurvivalSample([], [])).size == 0

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 1)), min_size=1, max_size=30))
    def test_permutation_and_order(self, rows):
        t = [float(a) for a, _ in rows]
        d = [b for _, b in rows]
        s = SurvivalSample(t, d)
        perm = sort_view(s)
        assert sorted(perm.tolist()) == list(range(len(rows)))
        key = [(s.time[i], -s.status[i], i) for i in perm]
        assert key == sorted(key)


class TestStepFunction:
    def test_right_continuous(self):
        f = StepFunction([1, 2], [5, 7], RIGHT, left_extension=0.0)
        assert f(1) == 5 and f(2) == 7 and f(1.5) == 5 and f(0.5) == 0

    def test_left_continuous(self):
        f = StepFunction([1, 2], [5, 7], LEFT, left_extension=0.0)
        assert f(1) == 0
        assert f(1.5) == 5
        # value v_i starts after b_i, so 2 still belongs to the first interval
        assert f(2) == 5
        assert f(2.5) == 7

    def test_undefined_extension(self):
        f = StepFunction([1, 2], [5], RIGHT, 0.0, UNDEFINED)
        assert f(1.99) == 5
        with pytest.raises(DomainError):
            f(2.0)
        g = StepFunction([1, 2], [5], LEFT, 0.0, UNDEFINED)
        assert g(2.0) == 5
        with pytest.raises(DomainError):
            g(2.0 + 1e-12)

    def test_vectorized_matches_scalar(self):
        f = StepFunction([0.5, 1.0, 3.0], [1.0, 2.0, 4.0], RIGHT)
        x = np.array([0.0, 0.5, 0.7, 1.0, 2.0, 3.0, 9.0])
        np.testing.assert_array_equal(f(x), [f(v) for v in x])
        assert evaluate(f, 2.0) == f(2.0)

    def test_limits(self):
        f = StepFunction([1, 2], [5, 7], RIGHT)
        assert f.left_limit(1.0) == 0 and f.right_limit(1.0) == 5
        assert f.left_limit(2.0) == 5

    def test_monotone_flag_checked(self):
        StepFunction([1, 2], [1, 2], monotone="nondecreasing")
        with pytest.raises(ValueError):
            StepFunction([1, 2], [2, 1], monotone="nondecreasing")
        with pytest.raises(ValueError):
            StepFunction([1, 2], [1, 2], left_extension=3.0, monotone="nonincreasing")

    def test_bad_construction(self):
        with pytest.raises(ValueError):
            StepFunction([2, 1], [1, 2])
        with pytest.raises(ValueError):
            StepFunction([1, 2], [1])

    def test_json_round_trip(self):
        f = StepFunction([0.0, 1.5, 2.0], [3.0, 2.0], LEFT, 3.0, UNDEFINED)
        d = json.loads(f.to_json())
        assert set(d) == {"breakpoints", "values", "side", "left_extension", "right_extension"}
        g = StepFunction.from_json(f.to_json())
        np.testing.assert_array_equal(g.breakpoints, f.breakpoints)
        assert g.side == LEFT and g.right_extension == UNDEFINED and g(1.0) == f(1.0)

    def test_intervals(self):
        f = StepFunction([1.0, 2.0], [5.0], RIGHT, 0.0, UNDEFINED)
        assert f.intervals() == [(0.0, 1.0, 0.0), (1.0, 2.0, 5.0)]
        assert f.intervals(extend_last=True)[-1] == (2.0, math.inf, 5.0)
        assert f.with_last_extension()(10.0) == 5.0

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=15, unique=True),
        st.sampled_from([RIGHT, LEFT]),
    )
    def test_monotone_evaluation(self, bps, side):
        b = np.sort(np.array(bps))
        v = np.cumsum(np.arange(1, b.size + 1, dtype=float))
        f = StepFunction(b, v, side, 0.0, monotone="nondecreasing")
        x = np.linspace(-1, 11, 97)
        assert np.all(np.diff(f(x)) >= 0)


class TestCsv:
    def test_readback(self, tmp_path):
        p = _write(tmp_path, "time,status,z1\n1,1,0.1\n2,0,0.2\n3,1,0.3\n")
        s = load_csv(p)
        assert (s.n, s.p, s.n_ties) == (3, 1, 0)
        np.testing.assert_array_equal(s.time, [1, 2, 3])
        np.testing.assert_array_equal(s.status, [1, 0, 1])
        np.testing.assert_allclose(s.z[:, 0], [0.1, 0.2, 0.3])

    def test_negative_time_names_row(self, tmp_path):
        p = _write(tmp_path, "time,status\n1,1\n-1,0\n")
        with pytest.raises(ParseError, match="negative time, row 2") as info:
            load_csv(p)
        assert info.value.row == 2 and info.value.column == "time"

    def test_ties_reported(self, tmp_path):
        p = _write(tmp_path, "time,status\n1.0,1\n2,0\n3,1\n1.0,0\n")
        assert load_csv(p).n_ties == 1

    @pytest.mark.parametrize(
        "text,column",
        [
            ("time,z1\n1,0\n", "status"),
            ("time,status\n1,x\n", "status"),
            ("time,status\n1,2\n", "status"),
            ("time,status,z1\n1,1,abc\n", "z1"),
        ],
    )
    def test_parse_errors(self, tmp_path, text, column):
        with pytest.raises(ParseError) as info:
            load_csv(_write(tmp_path, text))
        assert info.value.column == column

    def test_schema_mapping(self, tmp_path):
        p = _write(tmp_path, "t,event,age\n1,1,50\n2,0,60\n")
        s = load_csv(p, {"time": "t", "status": "event", "z": ["age"]})
        np.testing.assert_array_equal(s.z[:, 0], [50, 60])

    def test_z_columns_ordered_numerically(self, tmp_path):
        p = _write(tmp_path, "time,status,z10,z2\n1,1,10,2\n")
        np.testing.assert_array_equal(load_csv(p).z, [[2, 10]])

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        s = SurvivalSample(rng.exponential(size=25), rng.integers(0, 2, 25), rng.normal(size=(25, 2)))
        write_csv(s, tmp_path / "out.csv")
        r = load_csv(tmp_path / "out.csv")
        np.testing.assert_array_equal(r.time, s.time)
        np.testing.assert_array_equal(r.status, s.status)
        np.testing.assert_array_equal(r.z, s.z)

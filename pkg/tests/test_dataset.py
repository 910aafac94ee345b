import io

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from bsake import dataset, errors
from bsake.dataset import (
    LagSpec,
    TimeSeriesTable,
    build_design_matrix,
    build_predictor_row,
    format_month,
    load_series,
    load_wide_series,
    merge_tables,
    parse_month,
    select_columns,
    shift_table,
    split_in_out,
    truncate_before,
    write_series,
)


def make_table(values, columns=("y",), roles=None, start="2015-01"):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] == 1 and len(columns) == 1:
        values = values.T
    if roles is None:
        roles = {columns[0]: "target", **{c: "sii" for c in columns[1:]}}
    first = parse_month(start)
    months = tuple(range(first, first + values.shape[0]))
    return TimeSeriesTable(months, tuple(columns), values, roles)


class TestMonthArithmetic:
    def test_round_trip(self):
        for label in ["2015-01", "2015-12", "2016-02", "0001-01", "9999-12"]:
            assert format_month(parse_month(label)) == label

    def test_consecutive_across_year_boundary(self):
        assert parse_month("2016-01") - parse_month("2015-12") == 1

    def test_rejects_malformed(self):
        for bad in ["2015-13", "2015-00", "2015-1", "15-01", "2015/01", "201501"]:
            with pytest.raises(errors.MalformedDate):
                parse_month(bad)


class TestTableInvariants:
    def test_gap_detected(self):
        months = (parse_month("2015-01"), parse_month("2015-03"))
        with pytest.raises(errors.GapInIndex):
            TimeSeriesTable(months, ("y",), np.zeros((2, 1)), {"y": "target"})

    def test_duplicate_detected(self):
        m = parse_month("2015-01")
        with pytest.raises(errors.DuplicateMonth):
            TimeSeriesTable((m, m), ("y",), np.zeros((2, 1)), {"y": "target"})

    def test_backwards_detected(self):
        m = parse_month("2015-02")
        with pytest.raises(errors.NonMonotonicIndex):
            TimeSeriesTable((m, m - 1), ("y",), np.zeros((2, 1)), {"y": "target"})

    def test_two_targets_rejected(self):
        with pytest.raises(errors.MultipleTargetColumns):
            make_table(
                np.ones((3, 2)), columns=("a", "b"),
                roles={"a": "target", "b": "target"},
            )

    def test_values_frozen(self):
        t = make_table([1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            t.values[0, 0] = 9.0

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            make_table([1.0, np.nan, 3.0])


class TestCsvLoad:
    def test_minimal_load(self):
        raw = b"month,arrivals\n2015-01,100.0\n2015-02,110.5\n"
        t = load_series(io.BytesIO(raw), {"arrivals": "target"})
        assert t.month_labels == ("2015-01", "2015-02")
        assert_allclose(t.column("arrivals"), [100.0, 110.5])
        assert t.target_name() == "arrivals"

    def test_gap_raises(self):
        raw = b"month,y\n2015-01,1\n2015-03,2\n"
        with pytest.raises(errors.GapInIndex):
            load_series(io.BytesIO(raw), {"y": "target"})

    def test_duplicate_raises(self):
        raw = b"month,y\n2015-01,1\n2015-01,2\n"
        with pytest.raises(errors.DuplicateMonth):
            load_series(io.BytesIO(raw), {"y": "target"})

    def test_bad_month_raises(self):
        raw = b"month,y\n2015-1,1\n"
        with pytest.raises(errors.MalformedDate):
            load_series(io.BytesIO(raw), {"y": "target"})

    def test_non_numeric_raises(self):
        raw = b"month,y\n2015-01,abc\n"
        with pytest.raises(errors.NonNumericCell):
            load_series(io.BytesIO(raw), {"y": "target"})

    def test_no_target_in_schema_raises(self):
        raw = b"month,y\n2015-01,1\n"
        with pytest.raises(errors.NoTargetColumn):
            load_series(io.BytesIO(raw), {"y": "sii"})

    def test_wide_load_has_no_target(self):
        raw = b"month,k1,k2\n2015-01,1,2\n2015-02,3,4\n"
        t = load_wide_series(io.BytesIO(raw), "sii")
        assert t.columns == ("k1", "k2")
        with pytest.raises(errors.NoTargetColumn):
            t.target_name()

    def test_round_trip_bitwise(self):
        rng = np.random.default_rng(7)
        values = rng.normal(size=(24, 3)) * 1e3
        t = make_table(values, columns=("y", "a", "b"))
        buf = io.BytesIO()
        write_series(t, buf)
        buf.seek(0)
        back = load_series(buf, {"y": "target", "a": "sii", "b": "sii"})
        assert back.months == t.months
        assert back.columns == t.columns
        assert_array_equal(back.values, t.values)


class TestSplitAndShift:
    def test_split_positions(self):
        t = make_table(np.arange(6.0), start="2015-01")
        head, tail = split_in_out(t, "2015-04")
        assert head.month_labels == ("2015-01", "2015-02", "2015-03")
        assert tail.month_labels == ("2015-04", "2015-05", "2015-06")
        assert_allclose(head.column("y"), [0, 1, 2])
        assert_allclose(tail.column("y"), [3, 4, 5])

    def test_split_outside_range_raises(self):
        t = make_table(np.arange(6.0), start="2015-01")
        with pytest.raises(errors.SplitOutOfRange):
            split_in_out(t, "2015-01")
        with pytest.raises(errors.SplitOutOfRange):
            split_in_out(t, "2015-07")

    def test_truncate_before(self):
        t = make_table(np.arange(6.0), start="2015-01")
        head = truncate_before(t, parse_month("2015-03"))
        assert head.month_labels == ("2015-01", "2015-02", "2015-03")

    def test_shift_relabels_only(self):
        t = make_table(np.arange(4.0), start="2015-01")
        s = shift_table(t, 1)
        assert s.month_labels == ("2015-02", "2015-03", "2015-04", "2015-05")
        assert_array_equal(s.values, t.values)

    def test_shift_then_merge_lags_values(self):
        base = make_table(np.arange(6.0), start="2015-01")
        exog = make_table(
            np.arange(10.0, 16.0), columns=("e",),
            roles={"e": "economic"}, start="2015-01",
        )
        merged = merge_tables([base, shift_table(exog, 1)])
        assert merged.month_labels[0] == "2015-02"
        # at month 2015-02 the economic column carries the 2015-01 reading
        assert merged.column("e")[0] == 10.0


class TestMerge:
    def test_intersection_of_ranges(self):
        a = make_table(np.arange(6.0), start="2015-01")
        b = make_table(
            np.arange(20.0, 26.0), columns=("e",),
            roles={"e": "economic"}, start="2015-03",
        )
        merged = merge_tables([a, b])
        assert merged.month_labels == ("2015-03", "2015-04", "2015-05", "2015-06")
        assert_allclose(merged.column("y"), [2, 3, 4, 5])
        assert_allclose(merged.column("e"), [20, 21, 22, 23])

    def test_disjoint_ranges_raise(self):
        a = make_table(np.arange(3.0), start="2015-01")
        b = make_table(
            np.arange(3.0), columns=("e",), roles={"e": "sii"}, start="2016-01",
        )
        with pytest.raises(errors.SeriesTooShort):
            merge_tables([a, b])

    def test_select_columns_keeps_order_and_roles(self):
        t = make_table(
            np.arange(12.0).reshape(4, 3), columns=("y", "a", "b"),
        )
        s = select_columns(t, ["b", "y"])
        assert s.columns == ("b", "y")
        assert s.roles["y"] == "target"
        assert_allclose(s.column("b"), t.column("b"))


class TestDesignMatrix:
    def test_univariate_counts(self):
        # 10 months, one target lag, one step ahead: 9 supervised rows,
        # width 2 (intercept + lag)
        t = make_table(np.arange(1.0, 11.0))
        s = build_design_matrix(t, LagSpec(target_lags=1, horizon=1))
        assert s.predictors.shape == (9, 2)
        assert_allclose(s.predictors[:, 0], 1.0)
        assert_allclose(s.predictors[:, 1], np.arange(1.0, 10.0))
        assert_allclose(s.targets, np.arange(2.0, 11.0))
        assert s.origin_months[0] == "2015-01"
        assert s.origin_months[-1] == "2015-09"
        assert_allclose(s.latest_predictor_row, [1.0, 10.0])

    def test_multivariate_counts(self):
        # 10 months, q=2 target lags, one exogenous column with 3 lags,
        # h=1: deepest lag 3, so 10-1-3+1 = 7 rows of width 1+2+3 = 6
        rng = np.random.default_rng(3)
        vals = rng.normal(size=(10, 2))
        t = make_table(vals, columns=("y", "e"))
        spec = LagSpec(target_lags=2, exogenous_lags={"e": 3}, horizon=1)
        s = build_design_matrix(t, spec)
        assert s.predictors.shape == (7, 6)
        y, e = vals[:, 0], vals[:, 1]
        # first origin is the third month (index 2)
        assert_allclose(s.predictors[0], [1.0, y[2], y[1], e[2], e[1], e[0]])
        assert_allclose(s.targets[0], y[3])
        assert s.origin_months[0] == "2015-03"

    def test_alignment_random_table(self):
        rng = np.random.default_rng(11)
        vals = rng.normal(size=(30, 3))
        t = make_table(vals, columns=("y", "a", "b"))
        spec = LagSpec(target_lags=3, exogenous_lags={"a": 2, "b": 4}, horizon=2)
        s = build_design_matrix(t, spec)
        y = vals[:, 0]
        depth = 4
        for i in range(s.n_rows):
            origin = depth - 1 + i
            assert s.origin_months[i] == t.month_labels[origin]
            assert s.targets[i] == y[origin + 2]
            row = build_predictor_row(t, spec, origin)
            assert_array_equal(s.predictors[i], row)

    def test_exogenous_block_order_follows_table(self):
        vals = np.arange(12.0).reshape(4, 3)
        t = make_table(vals, columns=("y", "a", "b"))
        spec = LagSpec(target_lags=1, exogenous_lags={"b": 1, "a": 1}, horizon=1)
        s = build_design_matrix(t, spec)
        # table order is y, a, b so the a-lag precedes the b-lag
        assert_allclose(s.predictors[0], [1.0, vals[0, 0], vals[0, 1], vals[0, 2]])

    def test_unknown_exogenous_raises(self):
        t = make_table(np.arange(10.0))
        with pytest.raises(errors.UnknownExogenousColumn):
            build_design_matrix(
                t, LagSpec(target_lags=1, exogenous_lags={"ghost": 1})
            )

    def test_too_short_raises(self):
        t = make_table(np.arange(4.0))
        with pytest.raises(errors.SeriesTooShort):
            build_design_matrix(t, LagSpec(target_lags=3, horizon=2))

    def test_horizon_pushes_rows_down(self):
        t = make_table(np.arange(1.0, 11.0))
        s1 = build_design_matrix(t, LagSpec(target_lags=1, horizon=1))
        s3 = build_design_matrix(t, LagSpec(target_lags=1, horizon=3))
        assert s3.n_rows == s1.n_rows - 2
        assert_allclose(s3.targets[0], 4.0)
        assert_allclose(s3.predictors[0], [1.0, 1.0])

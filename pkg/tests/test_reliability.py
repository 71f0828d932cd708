import io

import pytest
from hypothesis import given, strategies as st

from minlane.errors import ConfigurationError
from minlane.reliability import (
    ReliabilityParams,
    buffer_reliability,
    min_reliability,
    min_reliability_uniform,
    parallel_reliability,
    reliability_sweep,
    series_reliability,
    write_reliability_csv,
)

probability = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_series_perfect_chain():
    assert series_reliability([1.0, 1.0, 1.0]) == 1.0


def test_series_ten_at_09():
    # Ten single-lane stages at 0.9 land near 0.349.
    assert series_reliability([0.9] * 10) == pytest.approx(0.9**10, abs=1e-15)
    assert round(series_reliability([0.9] * 10), 5) == 0.34868


def test_series_dead_element_kills_path():
    assert series_reliability([0.5, 0.0]) == 0.0


def test_series_empty_is_one():
    assert series_reliability([]) == 1.0


def test_parallel_pair():
    assert parallel_reliability([0.9, 0.9]) == pytest.approx(0.99, abs=1e-15)


def test_parallel_perfect_branch_dominates():
    for x in (0.0, 0.3, 1.0):
        assert parallel_reliability([1.0, x]) == 1.0


def test_parallel_single_branch_is_itself():
    assert parallel_reliability([0.5]) == 0.5


def test_parallel_empty_is_zero():
    assert parallel_reliability([]) == 0.0


def test_buffer_reliability_four_lanes():
    assert buffer_reliability([0.9] * 4) == pytest.approx(1 - 0.1**4, abs=1e-15)


def test_buffer_reliability_degenerate_single_lane():
    assert buffer_reliability([0.7]) == pytest.approx(0.7)


def test_buffer_reliability_perfect_lane():
    assert buffer_reliability([0.9, 1.0]) == 1.0


@given(lanes=st.lists(probability, min_size=1, max_size=8))
def test_buffer_equals_parallel(lanes):
    assert buffer_reliability(lanes) == parallel_reliability(lanes)


def test_min_reliability_all_perfect():
    params = ReliabilityParams(stages=4, n_lanes=3, per_lane_r=tuple(((1.0,) * 3,) * 4))
    assert min_reliability(params) == 1.0


def test_min_reliability_dead_stage():
    rows = [(0.9, 0.9), (0.0, 0.0), (0.9, 0.9)]
    params = ReliabilityParams(stages=3, n_lanes=2, per_lane_r=tuple(rows))
    assert min_reliability(params) == 0.0


@given(
    r=probability,
    n_lanes=st.integers(min_value=1, max_value=6),
    stages=st.integers(min_value=1, max_value=10),
)
def test_general_form_matches_uniform(r, n_lanes, stages):
    params = ReliabilityParams(
        stages=stages, n_lanes=n_lanes, per_lane_r=tuple(((r,) * n_lanes,) * stages)
    )
    assert min_reliability(params) == pytest.approx(
        min_reliability_uniform(r, n_lanes, stages), abs=1e-12
    )


def test_uniform_single_lane_radix10():
    assert min_reliability_uniform(0.9, 1, 10) == pytest.approx(0.9**10, abs=1e-15)
    assert round(min_reliability_uniform(0.9, 1, 10), 5) == 0.34868


def test_uniform_double_lane_radix10():
    assert min_reliability_uniform(0.9, 2, 10) == pytest.approx(0.99**10, abs=1e-15)
    assert round(min_reliability_uniform(0.9, 2, 10), 5) == 0.90438


def test_uniform_perfect_lanes():
    for lanes in (1, 2, 8):
        for stages in (1, 5, 10):
            assert min_reliability_uniform(1.0, lanes, stages) == 1.0


def test_many_lanes_converges_to_one():
    # The worst corner (r=0.3, 10 stages) sits at 10 * 0.7**64 ~ 1.2e-9.
    for r in (0.3, 0.5, 0.9):
        for stages in (3, 10):
            deviation = 1.0 - min_reliability_uniform(r, 64, stages)
            assert deviation <= stages * (1.0 - r) ** 64 + 1e-15
            assert deviation < 2e-9


@given(
    r1=probability,
    r2=probability,
    n_lanes=st.integers(min_value=1, max_value=8),
    stages=st.integers(min_value=1, max_value=10),
)
def test_uniform_monotone_in_lane_reliability(r1, r2, n_lanes, stages):
    lo, hi = sorted((r1, r2))
    assert min_reliability_uniform(lo, n_lanes, stages) <= min_reliability_uniform(
        hi, n_lanes, stages
    ) + 1e-12


@given(
    r=probability,
    n_lanes=st.integers(min_value=1, max_value=8),
    stages=st.integers(min_value=1, max_value=10),
)
def test_uniform_monotone_in_lanes_and_stages(r, n_lanes, stages):
    base = min_reliability_uniform(r, n_lanes, stages)
    assert min_reliability_uniform(r, n_lanes + 1, stages) >= base - 1e-12
    assert min_reliability_uniform(r, n_lanes, stages + 1) <= base + 1e-12


def test_sweep_single_point():
    rows = reliability_sweep([0.95], [2], [4])
    assert rows == [
        {
            "radix": 4,
            "n_lanes": 2,
            "r_flit": 0.95,
            "R_MIN": min_reliability_uniform(0.95, 2, 4),
        }
    ]


def test_sweep_double_lane_dominates_single():
    grid = [i / 20 for i in range(20)]  # r < 1 throughout
    rows = reliability_sweep(grid, [1, 2], list(range(3, 11)))
    by_key = {(r["radix"], r["n_lanes"], r["r_flit"]): r["R_MIN"] for r in rows}
    for radix in range(3, 11):
        for r in grid:
            if 0.0 < r < 1.0:
                assert by_key[(radix, 2, r)] > by_key[(radix, 1, r)]


def test_sweep_reliability_decreases_with_radix():
    grid = [0.3, 0.6, 0.9, 0.99]
    rows = reliability_sweep(grid, [2], list(range(3, 11)))
    by_key = {(r["radix"], r["r_flit"]): r["R_MIN"] for r in rows}
    for r in grid:
        values = [by_key[(radix, r)] for radix in range(3, 11)]
        assert values == sorted(values, reverse=True)


def test_sweep_rejects_empty_grid():
    with pytest.raises(ConfigurationError):
        reliability_sweep([], [1], [3])


def test_csv_export_format():
    rows = reliability_sweep([0.9], [1, 2], [3])
    out = io.StringIO()
    write_reliability_csv(rows, out)
    lines = out.getvalue().strip().splitlines()
    assert lines[0] == "radix,n_lanes,r_flit,R_MIN"
    assert lines[1] == "3,1,0.900000,0.729000"
    assert len(lines) == 3
    for line in lines[1:]:
        r_field = line.split(",")[3]
        assert len(r_field.split(".")[1]) == 6


def test_params_validation():
    with pytest.raises(ConfigurationError):
        ReliabilityParams(stages=0, n_lanes=1, r_flit=0.9)
    with pytest.raises(ConfigurationError):
        ReliabilityParams(stages=2, n_lanes=1, r_flit=1.5)
    with pytest.raises(ConfigurationError):
        ReliabilityParams(stages=2, n_lanes=1)
    with pytest.raises(ConfigurationError):
        ReliabilityParams(stages=2, n_lanes=2, r_flit=0.9, per_lane_r=(((0.9, 0.9),) * 2))
    with pytest.raises(ConfigurationError):
        ReliabilityParams(stages=2, n_lanes=2, per_lane_r=((0.9,), (0.9,)))

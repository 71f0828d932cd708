import io

import pytest
from hypothesis import given, strategies as st

from minlane.costmodel import (
    SINGLE_LANE_KINDS,
    CostConfig,
    FabricKind,
    complexity,
    cost_sweep,
    cost_units,
    write_cost_csv,
)
from minlane.errors import ConfigurationError


def test_proposed_complexity_examples():
    assert complexity(FabricKind.PROPOSED, 1024, 8) == 40960
    assert complexity(FabricKind.PROPOSED, 2, 1) == 1
    assert complexity(FabricKind.PROPOSED, 8, 1) == 12


def test_egn_complexity_n256():
    assert complexity(FabricKind.EGN, 256) == 6912  # 1536 + 3*256*7


def test_table_values_hand_computed():
    # radix 6, N = 64
    assert complexity(FabricKind.EGN, 64) == 6 * 64 + 3 * 64 * 5
    assert complexity(FabricKind.ASEN, 64) == 6 * 64 + 4.5 * 64 * 4
    assert complexity(FabricKind.PARS, 64) == 6 * 64 + 3 * 64 * 5
    assert complexity(FabricKind.TWO_LAYERED, 64) == 32 * 5 + 2 * 64
    assert complexity(FabricKind.THREE_LAYERED, 64) == 32 * 5 + 3 * 64


def test_complexity_rejects_non_power_of_two():
    for bad in (0, 1, 3, 100):
        with pytest.raises(ConfigurationError):
            complexity(FabricKind.PROPOSED, bad)


def test_egn_equals_pars_everywhere():
    for radix in range(1, 12):
        n = 1 << radix
        assert complexity(FabricKind.EGN, n) == complexity(FabricKind.PARS, n)


def test_cost_units_proposed_example():
    assert cost_units(FabricKind.PROPOSED, 8, 2, CostConfig(4)) == 96  # (4*3)*4*2


def test_cost_units_radix10_eight_lanes_unit_price():
    assert cost_units(FabricKind.PROPOSED, 1024, 8, CostConfig(1)) == 40960


def test_cost_doubles_with_lanes():
    for kind in (FabricKind.PROPOSED,):
        for n in (8, 64, 1024):
            for lanes in (1, 2, 5):
                assert cost_units(kind, n, 2 * lanes) == 2 * cost_units(kind, n, lanes)


def test_cost_per_complexity_is_unit_price_single_lane():
    cfg = CostConfig(se_cost_units=4)
    for n in (8, 64, 256):
        assert cost_units(FabricKind.PROPOSED, n, 1, cfg) == 4 * complexity(
            FabricKind.PROPOSED, n, 1
        )


def test_layered_kinds_cheaper_than_proposed_two_lane():
    for radix in range(6, 11):
        n = 1 << radix
        two_lane = cost_units(FabricKind.PROPOSED, n, 2, CostConfig(1))
        assert cost_units(FabricKind.TWO_LAYERED, n, 1, CostConfig(1)) < two_lane
        assert cost_units(FabricKind.THREE_LAYERED, n, 1, CostConfig(1)) < two_lane


def test_proposed_ten_lane_tops_rivals():
    for radix in range(6, 11):
        n = 1 << radix
        ten_lane = cost_units(FabricKind.PROPOSED, n, 10, CostConfig(1))
        for kind in (FabricKind.PARS, FabricKind.EGN, FabricKind.ASEN):
            assert ten_lane > cost_units(kind, n, 1, CostConfig(1))


def test_small_radix_cost_spread_is_modest():
    # Below radix 6 the single-lane families stay within an order of magnitude.
    for radix in range(3, 6):
        n = 1 << radix
        costs = [cost_units(k, n, 1, CostConfig(1)) for k in FabricKind]
        ratio = max(costs) / min(costs)
        assert ratio < 10.0


def test_cost_spread_grows_with_radix():
    def spread(radix):
        n = 1 << radix
        costs = [cost_units(k, n, 1, CostConfig(1)) for k in FabricKind]
        return max(costs) - min(costs)

    spreads = [spread(r) for r in range(3, 11)]
    assert spreads == sorted(spreads)


@given(radix=st.integers(min_value=1, max_value=14), lanes=st.integers(min_value=1, max_value=16))
def test_monotone_in_ports_and_linear_in_lanes(radix, lanes):
    n = 1 << radix
    for kind in FabricKind:
        if radix < 14:
            assert complexity(kind, 2 * n, lanes) > complexity(kind, n, lanes)
    prop = complexity(FabricKind.PROPOSED, n, lanes)
    assert complexity(FabricKind.PROPOSED, n, 2 * lanes) == pytest.approx(2 * prop)
    for kind in SINGLE_LANE_KINDS:
        assert complexity(kind, n, lanes) == complexity(kind, n, 1)


def test_cost_sweep_rows_and_export():
    rows = cost_sweep([3, 4], [1, 2], [FabricKind.PROPOSED, FabricKind.EGN], CostConfig(1))
    # Proposed appears per lane count, EGN once per radix.
    assert len(rows) == 2 * (2 + 1)
    out = io.StringIO()
    write_cost_csv(rows, out)
    lines = out.getvalue().strip().splitlines()
    assert lines[0] == "kind,radix,n_lanes,complexity,cost_units"
    assert len(lines) == len(rows) + 1


def test_cost_sweep_rejects_empty_axes():
    with pytest.raises(ConfigurationError):
        cost_sweep([], [1], None)
    with pytest.raises(ConfigurationError):
        cost_sweep([3], [], None)


def test_cost_config_validation():
    with pytest.raises(ConfigurationError):
        CostConfig(se_cost_units=0)

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loglap.discrete_log import (
    DEFAULT_S_GRID,
    build_kernel_table,
    cached_kernel_table,
    fractional_difference_quotient,
    fractional_power_spectral,
    log_laplacian_pointwise,
    log_laplacian_spectral,
    required_max_lag,
    small_s_limit_check,
    w0_tail_bound,
)
from loglap.lattice_heat import LatticeFunction
from loglap.special_functions import EULER_GAMMA

mpmath.mp.dps = 30


@pytest.fixture(scope="module")
def table():
    return build_kernel_table(30)


def _closed(n):
    return -1.0 / abs(n) if n else 0.0


@pytest.mark.parametrize("k", [1, 2, 5])
def test_kernels_against_mpmath(table, k):
    def p(t):
        return mpmath.exp(-2 * t) * mpmath.besseli(k, 2 * t) / t

    w0 = float(mpmath.quad(p, [0, 1]))
    w_inf = float(mpmath.quad(p, [1, 10, 100, mpmath.inf]))
    assert table.w0[k] == pytest.approx(w0, abs=1e-12)
    assert table.w_inf[k] == pytest.approx(w_inf, abs=1e-11)


def test_table_invariants(table):
    for k in range(1, table.max_lag + 1):
        assert table.w0[k] == table.w0[-k]
        assert table.w_inf[k] == table.w_inf[-k]
        assert 0 < table.w0[k] <= 1.0 / (k * math.factorial(k))
        assert table.w0[k] <= 2.0 / (k * math.sqrt(1.0 + k))
        assert table.w_inf[k] < table.w_inf[k - 1]
    assert table.gamma == EULER_GAMMA
    assert table.w_inf[table.max_lag] > 0


def test_w0_one_within_bound(table):
    assert 0 < table.w0[1] <= 2.0 / math.sqrt(2.0)


def test_delta_identity_at_origin(table):
    # log(-Delta) delta_0 vanishes at 0: 2 sum W0(k) - Winf(0) - gamma = 0
    total = 2.0 * math.fsum(table.w0[k] for k in range(1, table.max_lag + 1)) - table.w_inf[0] - EULER_GAMMA
    assert total == pytest.approx(0.0, abs=1e-10)


def test_table_csv(table):
    lines = table.to_csv().splitlines()
    assert lines[0] == "lag,w0,w_inf"
    assert len(lines) == table.max_lag + 2
    assert lines[1].split(",")[1] == "nan"


def test_build_kernel_table_validation():
    with pytest.raises(ValueError):
        build_kernel_table(0)
    with pytest.raises(ValueError):
        build_kernel_table(2.5)


def test_w0_tail_bound_decreases():
    vals = [w0_tail_bound(r) for r in range(1, 15)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("n", range(-10, 11))
def test_pointwise_closed_form(table, n):
    f = LatticeFunction.delta(0)
    est = log_laplacian_pointwise(f, n, table, full_output=True)
    assert est.value == pytest.approx(_closed(n), abs=1e-10)
    assert est.error < 1e-8


@pytest.mark.parametrize("n", [0, 1, 4, -7])
def test_spectral_closed_form(n):
    assert log_laplacian_spectral(LatticeFunction.delta(0), n) == pytest.approx(_closed(n), abs=1e-10)


def test_pointwise_needs_large_enough_table():
    small = build_kernel_table(2)
    with pytest.raises(ValueError, match="needs"):
        log_laplacian_pointwise(LatticeFunction.delta(0), 5, small)


def test_required_max_lag_is_sufficient():
    f = LatticeFunction(-2, (1.0, 0.0, 3.0))
    sites = range(-6, 7)
    lag = required_max_lag(f, sites)
    table = build_kernel_table(lag)
    for n in sites:
        log_laplacian_pointwise(f, n, table)
    short = build_kernel_table(lag - 1)
    failures = 0
    for n in sites:
        try:
            log_laplacian_pointwise(f, n, short)
        except ValueError:
            failures += 1
    assert failures > 0


@settings(max_examples=25, deadline=None)
@given(
    offset=st.integers(-4, 4),
    values=st.lists(st.floats(min_value=-2, max_value=2, allow_nan=False), min_size=1, max_size=4),
    n=st.integers(-6, 6),
)
def test_pointwise_matches_spectral(offset, values, n):
    f = LatticeFunction(offset, tuple(values))
    table = cached_kernel_table(30)
    assert log_laplacian_pointwise(f, n, table) == pytest.approx(log_laplacian_spectral(f, n), abs=1e-9)


def test_translation_and_reflection_covariance(table):
    f = LatticeFunction(0, (1.0, -0.5, 0.25))
    for n in range(-4, 5):
        base = log_laplacian_pointwise(f, n, table)
        assert log_laplacian_pointwise(f.shift(3), n + 3, table) == pytest.approx(base, abs=1e-13)
        assert log_laplacian_pointwise(f.reflect(), -n, table) == pytest.approx(base, abs=1e-13)


def test_fractional_power_at_one_is_minus_laplacian():
    f = LatticeFunction(-1, (0.5, 2.0, -1.0))
    for n in range(-3, 4):
        lap = -(f(n + 1) - 2 * f(n) + f(n - 1))
        assert fractional_power_spectral(f, 1.0, n) == pytest.approx(lap, abs=1e-10)


def test_fractional_quotient_consistent_with_power():
    f = LatticeFunction.delta(0)
    s = 0.3
    for n in range(3):
        q = fractional_difference_quotient(f, s, n)
        assert q == pytest.approx((fractional_power_spectral(f, s, n) - f(n)) / s, abs=1e-9)


@pytest.mark.parametrize("s", [0.0, -0.1, 1.5])
def test_fractional_rejects_bad_s(s):
    with pytest.raises(ValueError):
        fractional_power_spectral(LatticeFunction.delta(0), s, 0)
    with pytest.raises(ValueError):
        fractional_difference_quotient(LatticeFunction.delta(0), s, 0)


@pytest.mark.parametrize("n", [0, 1, 3])
def test_small_s_limit(n):
    rep = small_s_limit_check(LatticeFunction.delta(0), n)
    assert rep.converged
    assert rep.extrapolated_limit == pytest.approx(_closed(n), abs=1e-6)
    assert rep.samples_used == len(DEFAULT_S_GRID)


def test_small_s_quotient_decays_at_first_order():
    f = LatticeFunction.delta(0)
    grid = np.array([0.2, 0.1, 0.05, 0.025])
    errs = np.array(
        [max(abs(fractional_difference_quotient(f, s, n) - _closed(n)) for n in range(-5, 6)) for s in grid]
    )
    slope = np.polyfit(np.log(grid), np.log(errs), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.2)
    # successive orders approach 1 from below as s shrinks
    pairwise = np.log(errs[:-1] / errs[1:]) / np.log(2.0)
    assert np.all(np.diff(pairwise) > 0)
    assert abs(pairwise[-1] - 1.0) < 0.1


@pytest.mark.parametrize("grid", [(0.2, 0.1), (0.6, 0.3, 0.1), (0.1, 0.2, 0.05)])
def test_small_s_limit_grid_validation(grid):
    with pytest.raises(ValueError):
        small_s_limit_check(LatticeFunction.delta(0), 0, grid)

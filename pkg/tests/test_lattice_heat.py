import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loglap.lattice_heat import (
    HeatKernelSample,
    LatticeFunction,
    heat_apply,
    heat_kernel,
    heat_kernel_large_time_bound,
    heat_kernel_small_time_bound,
    heat_tail_bound,
    heat_window,
)

mpmath.mp.dps = 40

lattice_functions = st.builds(
    LatticeFunction,
    st.integers(min_value=-6, max_value=6),
    st.lists(st.floats(min_value=-3, max_value=3, allow_nan=False), min_size=1, max_size=5).map(tuple),
)


@pytest.mark.parametrize("t", [1e-4, 0.05, 0.5, 1.0, 7.5, 100.0])
@pytest.mark.parametrize("m", [0, 1, -3, 12])
def test_heat_kernel_against_mpmath(t, m):
    ref = float(mpmath.exp(-2 * t) * mpmath.besseli(abs(m), 2 * t))
    assert heat_kernel(t, m) == pytest.approx(ref, rel=1e-13, abs=1e-300)


def test_heat_kernel_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        heat_kernel(0.0, 1)


def test_heat_kernel_sample():
    s = HeatKernelSample.at(0.5, -2)
    assert s.value == heat_kernel(0.5, 2)


@pytest.mark.parametrize("t", [0.01, 0.3, 2.0, 25.0])
def test_heat_kernel_mass_and_tail_bound(t):
    radius = 10
    while heat_tail_bound(t, radius) > 1e-14:
        radius += 5
    inner = math.fsum(heat_kernel(t, m) for m in range(-radius, radius + 1))
    assert abs(inner - 1.0) <= heat_tail_bound(t, radius) + 1e-15


@pytest.mark.parametrize("t, radius", [(0.5, 2), (2.0, 5), (3.0, 8)])
def test_heat_tail_bound_dominates_true_tail(t, radius):
    tail = 2 * mpmath.nsum(lambda k: mpmath.exp(-2 * t) * mpmath.besseli(k, 2 * t), [radius + 1, mpmath.inf])
    assert float(tail) <= heat_tail_bound(t, radius)


def test_heat_tail_bound_infinite_when_uncertified():
    assert heat_tail_bound(10.0, 3) == math.inf


def test_small_and_large_time_bounds():
    u = np.linspace(1e-3, 1.0, 50)
    for k in range(0, 31):
        assert np.all(heat_kernel(u, k) <= heat_kernel_small_time_bound(u, k))
    big = np.geomspace(1.0, 1e5, 40)
    for k in range(0, 31):
        assert np.all(heat_kernel(big, k) <= heat_kernel_large_time_bound(big, k, 2.0))


@settings(max_examples=30, deadline=None)
@given(s=st.floats(min_value=0.05, max_value=3.0), t=st.floats(min_value=0.05, max_value=3.0), n=st.integers(-4, 4))
def test_semigroup_property(s, t, n):
    radius = 60
    lhs = math.fsum(heat_kernel(s, n - m) * heat_kernel(t, m) for m in range(-radius, radius + 1))
    assert lhs == pytest.approx(heat_kernel(s + t, n), abs=1e-15)


def test_heat_kernel_solves_heat_equation():
    # d/dt p_t(m) = p_t(m+1) - 2 p_t(m) + p_t(m-1)
    t, h = 0.7, 1e-5
    for m in range(4):
        dt = (heat_kernel(t + h, m) - heat_kernel(t - h, m)) / (2 * h)
        lap = heat_kernel(t, m + 1) - 2 * heat_kernel(t, m) + heat_kernel(t, m - 1)
        assert dt == pytest.approx(lap, abs=1e-9)


def test_heat_apply_auto_window_keeps_mass():
    f = LatticeFunction(-1, (1.0, 2.0, -0.5))
    g = heat_apply(f, 1.5)
    assert math.fsum(g.values) == pytest.approx(math.fsum(f.values), abs=1e-11)
    lo, hi = heat_window(f, 1.5, 1e-11)
    assert g.offset == lo and g.offset + len(g.values) - 1 == hi


def test_heat_apply_array_times_matches_scalar():
    f = LatticeFunction.delta(2)
    times = np.array([0.1, 1.0])
    rows = heat_apply(f, times, window=(-3, 3))
    for i, t in enumerate(times):
        assert np.allclose(rows[i], [heat_kernel(t, n - 2) for n in range(-3, 4)], atol=1e-17)
    with pytest.raises(ValueError):
        heat_apply(f, times)
    with pytest.raises(ValueError):
        heat_apply(f, 1.0, window=(3, -3))


def test_heat_window_of_zero_function():
    assert heat_window(LatticeFunction.zero(), 1.0, 1e-10) == (0, 0)


@settings(max_examples=40, deadline=None)
@given(f=lattice_functions, g=lattice_functions, k=st.integers(-5, 5))
def test_lattice_function_algebra(f, g, k):
    h = f + g
    for n in range(-15, 16):
        assert h(n) == pytest.approx(f(n) + g(n))
        assert f.shift(k)(n) == f(n - k)
        assert f.reflect()(n) == f(-n)
        assert (2.0 * f)(n) == 2.0 * f(n)
    assert LatticeFunction.from_csv(f.to_csv()) == f


def test_lattice_function_equality_ignores_padding():
    assert LatticeFunction(0, (1.0,)) == LatticeFunction(-1, (0.0, 1.0, 0.0))
    assert hash(LatticeFunction(0, (1.0,))) == hash(LatticeFunction(-1, (0.0, 1.0, 0.0)))


def test_lattice_function_validation():
    with pytest.raises(ValueError):
        LatticeFunction(0, (math.inf,))
    with pytest.raises(ValueError):
        LatticeFunction(0.5, (1.0,))
    with pytest.raises(ValueError):
        LatticeFunction.from_csv("index,value\n1,2,3\n")

import math

import mpmath
import numpy as np
import pytest

from loglap.discrete_extension import (
    DEFAULT_T_GRID,
    ExtensionTrace,
    boundary_limits,
    extension_constant,
    extension_dt,
    extension_trace,
    extension_u,
    log_via_extension,
    pde_residual,
    subordinate,
)
from loglap.discrete_log import log_laplacian_spectral
from loglap.lattice_heat import LatticeFunction
from loglap.quadrature import DEFAULT_SPEC
from loglap.special_functions import EULER_GAMMA

mpmath.mp.dps = 25


def _mp_u(n, t):
    # (1/pi) int_0^pi 2 K0(2 t sin(theta/2)) cos(n theta) dtheta
    def integrand(theta):
        return 2 * mpmath.besselk(0, 2 * t * mpmath.sin(theta / 2)) * mpmath.cos(n * theta)

    return float(mpmath.quad(integrand, [0, mpmath.pi / 8, mpmath.pi]) / mpmath.pi)


@pytest.mark.parametrize("n, t", [(0, 0.1), (0, 1.0), (2, 0.5), (1, 3.0)])
def test_extension_u_against_mpmath(n, t):
    f = LatticeFunction.delta(0)
    ref = _mp_u(n, t)
    assert extension_u(f, n, t) == pytest.approx(ref, abs=1e-10)
    assert extension_u(f, n, t, method="multiplier") == pytest.approx(ref, abs=1e-10)


def test_extension_routes_agree_on_general_data():
    f = LatticeFunction(-1, (0.5, 1.0, -2.0))
    for n in (-2, 0, 3):
        for t in (1e-5, 0.03, 0.7, 5.0):
            a = extension_u(f, n, t)
            b = extension_u(f, n, t, method="multiplier")
            assert a == pytest.approx(b, abs=1e-9)


def test_extension_dt_matches_finite_difference():
    f = LatticeFunction.delta(0)
    t, h = 0.4, 1e-5
    fd = (extension_u(f, 1, t + h) - extension_u(f, 1, t - h)) / (2 * h)
    assert extension_dt(f, 1, t) == pytest.approx(fd, abs=1e-7)


def test_extension_input_validation():
    f = LatticeFunction.delta(0)
    with pytest.raises(ValueError):
        extension_u(f, 0, 0.0)
    with pytest.raises(ValueError):
        extension_u(f, 0, 1.0, method="fourier")


@pytest.mark.parametrize("n", [0, 1, 3])
@pytest.mark.parametrize("t", [0.05, 0.25, 1.0, 4.0])
def test_pde_residual_small(n, t):
    est = pde_residual(LatticeFunction.delta(0), n, t, full_output=True)
    assert abs(est.value) <= 1e-6
    assert est.error < 1e-6


def test_extension_is_linear():
    f = LatticeFunction(0, (1.0, 2.0))
    g = LatticeFunction(-2, (-1.0,))
    for t in (0.1, 1.0):
        lhs = extension_u(f + 3.0 * g, 1, t)
        rhs = extension_u(f, 1, t) + 3.0 * extension_u(g, 1, t)
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_extension_constant_closed_form():
    const = extension_constant()
    ref = -mpmath.euler + mpmath.e1(0.25) - mpmath.quad(lambda v: (1 - mpmath.exp(-v)) / v, [0, 0.25])
    assert const.value == pytest.approx(float(ref), abs=1e-14)
    assert const.value == pytest.approx(2 * math.log(2) - 2 * EULER_GAMMA, abs=1e-12)


@pytest.mark.parametrize("n", [0, 2])
def test_boundary_limits(n):
    f = LatticeFunction(0, (1.0, 0.0, 0.5))
    flux, ratio = boundary_limits(f, n)
    for rep in (flux, ratio):
        assert rep.extrapolated_limit == pytest.approx(-2.0 * f(n), abs=1e-5)
        assert rep.converged
        assert rep.contraction >= 1.5
        assert rep.observed_order == 2.0


@pytest.mark.parametrize("n", [0, 1, 2, 5, -3])
def test_log_via_extension_matches_spectral(n):
    f = LatticeFunction(-1, (0.25, 1.0, -0.5))
    est, rep = log_via_extension(f, n, full_output=True)
    assert est.value == pytest.approx(log_laplacian_spectral(f, n), abs=1e-7)
    assert rep.converged


def test_extension_trace_csv():
    trace = extension_trace(LatticeFunction.delta(0), 1, DEFAULT_T_GRID[:4])
    lines = trace.to_csv().splitlines()
    assert lines[0] == "t,u,t_du,residual"
    assert len(lines) == 5
    assert all(abs(r) < 1e-6 for r in trace.residuals)


def test_extension_trace_validation():
    with pytest.raises(ValueError):
        ExtensionTrace(0, (0.1, 0.2), (1.0, 1.0), (0.0, 0.0), (0.0, 0.0))
    with pytest.raises(ValueError):
        ExtensionTrace(0, (0.2, 0.1), (1.0,), (0.0, 0.0), (0.0, 0.0))


@pytest.mark.parametrize("grid", [(0.5, 0.25, 0.125), (0.5, 0.25, 0.125, 1.5), (0.1, 0.2, 0.05, 0.01)])
def test_limit_grid_validation(grid):
    with pytest.raises(ValueError):
        boundary_limits(LatticeFunction.delta(0), 0, grid)
    with pytest.raises(ValueError):
        log_via_extension(LatticeFunction.delta(0), 0, grid)


@pytest.mark.parametrize("t", [5e-5, 0.6, 2.0])
def test_subordinate_exponential_trace(t):
    # int_0^inf e^{-u} e^{-t^2/4u} / u du = 2 K0(t), on both sides of the small-t switch
    est = subordinate(lambda u: np.exp(-u), 1.0, t, "u", DEFAULT_SPEC, 2.0)
    assert est.value == pytest.approx(2.0 * float(mpmath.besselk(0, t)), abs=1e-9)

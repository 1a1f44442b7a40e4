import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loglap.errors import QuadratureError
from loglap.quadrature import (
    DEFAULT_SPEC,
    ConvergenceReport,
    QuadratureSpec,
    TailBound,
    integrate_finite,
    integrate_semi_infinite,
    kronrod_rule,
    periodic_log_quadrature,
    richardson_limit,
)


# nonnegative half of the QUADPACK qk21 rule, outermost node first
_QK21_NODES = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
]
_QK21_WEIGHTS = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525808345,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
]


def test_kronrod_rule_matches_quadpack_tables():
    nodes, kw, _ = kronrod_rule(10)
    assert np.allclose(nodes[::-1][:11], _QK21_NODES, rtol=0, atol=2e-15)
    assert np.allclose(kw[::-1][:11], _QK21_WEIGHTS, rtol=0, atol=2e-15)


def test_kronrod_rule_degree_of_exactness():
    nodes, kw, gw = kronrod_rule(10)[:3]
    assert nodes.size == 21
    # a 21-point Kronrod rule is exact through degree 31
    for deg in range(0, 32, 2):
        assert math.fsum(kw * nodes**deg) == pytest.approx(2.0 / (deg + 1), abs=1e-14)
    for deg in range(0, 20, 2):
        assert math.fsum(gw * nodes[1::2] ** deg) == pytest.approx(2.0 / (deg + 1), abs=1e-14)


@pytest.mark.parametrize(
    "func, a, b, exact, kw",
    [
        (np.sin, 0.0, math.pi, 2.0, {}),
        (lambda x: np.log(x), 0.0, 1.0, -1.0, {"singular": "left"}),
        (lambda x: 1.0 / np.sqrt(x), 0.0, 4.0, 4.0, {"singular": "left"}),
        (lambda x: np.abs(x - 0.3), 0.0, 1.0, 0.3**2 / 2 + 0.7**2 / 2, {"points": [0.3]}),
        (lambda x: np.exp(-1e4 * (x - 0.5) ** 2), 0.0, 1.0, math.sqrt(math.pi / 1e4), {"points": [0.5]}),
    ],
)
def test_integrate_finite_known_values(func, a, b, exact, kw):
    est = integrate_finite(func, a, b, **kw)
    assert est.value == pytest.approx(exact, abs=1e-10)
    assert abs(est.value - exact) <= max(est.error, 1e-14) * 10


def test_integrate_finite_reports_failure_with_best_estimate():
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=8)
    with pytest.raises(QuadratureError) as info:
        integrate_finite(lambda x: np.sin(1.0 / x), 1e-6, 1.0, spec)
    assert math.isfinite(info.value.value)


@pytest.mark.parametrize(
    "func, tail, lower, exact",
    [
        (lambda x: np.exp(-x), TailBound.exponential(1.0), 0.0, 1.0),
        (lambda x: np.exp(-(x**2)), TailBound.gaussian(1.0), 0.0, math.sqrt(math.pi) / 2),
        (lambda x: x**-1.5, TailBound.power(1.5), 1.0, 2.0),
        (lambda x: 1.0 / (1.0 + x * x), TailBound.power(2.0), 0.0, math.pi / 2),
        (lambda x: np.exp(-x) / np.sqrt(x), TailBound.exponential(1.0), 0.0, math.sqrt(math.pi)),
    ],
)
def test_integrate_semi_infinite_known_values(func, tail, lower, exact):
    singular = "left" if lower == 0.0 and exact == math.sqrt(math.pi) else None
    est = integrate_semi_infinite(func, tail=tail, lower=lower, singular=singular)
    assert est.value == pytest.approx(exact, abs=1e-10)


def test_integrate_semi_infinite_requires_tail():
    with pytest.raises(ValueError):
        integrate_semi_infinite(np.exp, tail=None)


@pytest.mark.parametrize(
    "kwargs",
    [{"abs_tol": 0.0}, {"rel_tol": 1.0}, {"split_point": -1.0}, {"max_subdivisions": 4}, {"tail_cutoff_factor": 0.0}],
)
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        QuadratureSpec(**kwargs)


def test_spec_scaled():
    spec = DEFAULT_SPEC.scaled(10.0)
    assert spec.abs_tol == pytest.approx(10 * DEFAULT_SPEC.abs_tol)
    assert spec.split_point == DEFAULT_SPEC.split_point


def test_tail_bound_validation():
    with pytest.raises(ValueError):
        TailBound.power(1.0)
    with pytest.raises(ValueError):
        TailBound("cubic", 1.0)


def test_periodic_log_quadrature_recovers_log_symbol_coefficients():
    def symbol(theta):
        return np.log(4.0 * np.sin(0.5 * theta) ** 2)

    assert periodic_log_quadrature(symbol, 0) == pytest.approx(0.0, abs=1e-12)
    for n in range(1, 8):
        assert periodic_log_quadrature(symbol, n) == pytest.approx(-1.0 / n, abs=1e-11)


def test_periodic_log_quadrature_rejects_weak_grading():
    with pytest.raises(ValueError):
        periodic_log_quadrature(np.cos, 1, power=2)


# ---------------------------------------------------------------------------
# Richardson extrapolation
# ---------------------------------------------------------------------------


def _grid(n, start=0.5):
    return [start * 0.5**k for k in range(n)]


def test_richardson_exact_on_power_model_with_known_order():
    samples = [(t, 3.0 + t * t) for t in _grid(3)]
    rep = richardson_limit(samples, order=2.0)
    assert rep.extrapolated_limit == pytest.approx(3.0, abs=1e-14)


def test_richardson_fits_unknown_order():
    samples = [(t, -1.0 + 0.7 * t**1.5 + 0.2 * t**3) for t in _grid(9)]
    rep = richardson_limit(samples)
    assert rep.extrapolated_limit == pytest.approx(-1.0, abs=1e-10)
    assert rep.observed_order == pytest.approx(1.5, abs=1e-3)
    assert rep.converged


def test_richardson_power_plus_log():
    samples = [(t, 1.0 + t * math.log(t)) for t in _grid(3)]
    rep = richardson_limit(samples, "power_plus_log", order=1.0)
    assert rep.extrapolated_limit == pytest.approx(1.0, abs=1e-13)


def test_richardson_log_divergent_reports_log_coefficient():
    samples = [(t, -2.0 * math.log(t) + 0.3 + t * t * (0.5 * math.log(t) - 1.0)) for t in _grid(10)]
    rep = richardson_limit(samples, "log_divergent", order=2.0)
    assert rep.extrapolated_limit == pytest.approx(-2.0, abs=1e-10)
    assert rep.converged


def test_richardson_flags_oscillation():
    samples = [(t, 1.0 + (-1) ** k * 0.1) for k, t in enumerate(_grid(8))]
    rep = richardson_limit(samples, order=1.0)
    assert not rep.converged
    assert "non-monotone" in rep.message


@pytest.mark.parametrize(
    "samples, kwargs",
    [
        ([(0.5, 1.0), (0.25, 1.0)], {}),
        ([(0.5, 1.0), (0.5, 1.0), (0.25, 1.0)], {}),
        ([(0.5, 1.0), (-0.25, 1.0), (0.1, 1.0)], {}),
        ([(0.5, 1.0), (0.25, float("nan")), (0.1, 1.0)], {}),
        ([(0.5, 1.0), (0.25, 1.0), (0.1, 1.0)], {"model": "spline"}),
    ],
)
def test_richardson_rejects_bad_samples(samples, kwargs):
    with pytest.raises(ValueError):
        richardson_limit(samples, **kwargs)


def test_convergence_report_invariants():
    with pytest.raises(ValueError):
        ConvergenceReport(1.0, 1.0, 0.0, 2)
    with pytest.raises(ValueError):
        ConvergenceReport(1.0, 1.0, -1.0, 5)


@settings(max_examples=40, deadline=None)
@given(
    limit=st.floats(min_value=-10, max_value=10),
    c1=st.floats(min_value=-5, max_value=5),
    c2=st.floats(min_value=-5, max_value=5),
)
def test_richardson_exact_for_two_term_even_series(limit, c1, c2):
    samples = [(t, limit + c1 * t**2 + c2 * t**4) for t in _grid(6)]
    rep = richardson_limit(samples, order=2.0)
    assert rep.extrapolated_limit == pytest.approx(limit, abs=1e-11 * (1 + abs(c1) + abs(c2)))

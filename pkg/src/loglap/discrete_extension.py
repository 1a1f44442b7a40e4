"""Extension of lattice data to the half-cylinder ``Z x (0, inf)``.

The extension is the subordinated heat flow

    u_f(n, t) = int_0^inf p_u(f)(n) e^{-t^2/(4u)} du / u,

which solves ``u_tt + u_t / t + Delta_d u = 0``.  Its boundary behaviour as
``t -> 0+`` recovers ``f`` and ``log(-Delta_d) f``.

Two evaluation methods are available for ``u_f``.  The subordination method
integrates the formula above, with the time integral cut into geometric
panels around the boundary layer ``u ~ t^2``; below ``t = 1e-4`` it switches
to the variable ``v = t^2 / (4u)``.  The multiplier method uses the closed
form ``int_0^inf e^{-a u - b/u} du / u = 2 K_0(2 sqrt(ab))`` and integrates
``2 K_0(2 t |sin(theta/2)|)`` against the Fourier series of ``f``.
"""

import csv
import functools
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import k0

from .lattice_heat import LatticeFunction, heat_kernel
from .quadrature import (
    DEFAULT_SPEC,
    Estimate,
    TailBound,
    integrate_finite,
    integrate_semi_infinite,
    periodic_log_quadrature,
    richardson_limit,
)
from .special_functions import EULER_GAMMA, exp_integral_e1

__all__ = [
    "DEFAULT_T_GRID",
    "SMALL_T_SWITCH",
    "ExtensionTrace",
    "boundary_limits",
    "extension_constant",
    "extension_dt",
    "extension_dtt",
    "extension_trace",
    "extension_u",
    "log_via_extension",
    "pde_residual",
    "subordinate",
]

DEFAULT_T_GRID = tuple(2.0**-k for k in range(2, 13))
SMALL_T_SWITCH = 1e-4

# e^{-t^2/4u} < e^{-100} below this fraction of t^2
_LAYER_CUTOFF = 1.0 / 400.0


@dataclass(frozen=True)
class ExtensionTrace:
    """Samples of the extension along a vertical line ``{site} x t_grid``."""

    site: int
    t_grid: tuple
    u_values: tuple
    t_du_values: tuple
    residuals: tuple

    def __post_init__(self):
        sizes = {len(self.t_grid), len(self.u_values), len(self.t_du_values), len(self.residuals)}
        if len(sizes) != 1:
            raise ValueError("trace arrays must have equal length")
        if any(b >= a for a, b in zip(self.t_grid, self.t_grid[1:])):
            raise ValueError("t_grid must be strictly decreasing")

    def to_csv(self):
        """Rows ``t,u,t_du,residual``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "u", "t_du", "residual"])
        for row in zip(self.t_grid, self.u_values, self.t_du_values, self.residuals):
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def _heat_trace(f, n):
    entries = [(int(n) - m, value) for m, value in f.items()]

    def trace(u):
        out = np.zeros_like(u)
        for lag, value in entries:
            out = out + value * heat_kernel(u, lag)
        return out

    return trace


def _mass(f):
    return math.fsum(abs(v) for _, v in f.items())


def _geometric_points(lo, hi, ratio=4.0):
    pts = []
    x = lo
    while x < hi:
        pts.append(x)
        x *= ratio
    return pts


# weights in the time variable u, with their decay exponents in u
def _weight_u(kind, t):
    if kind == "u":
        return lambda u: np.exp(-t * t / (4.0 * u)) / u, 1.0
    if kind == "dt":
        return lambda u: -(t / (2.0 * u * u)) * np.exp(-t * t / (4.0 * u)), 2.0
    return lambda u: (t * t / (4.0 * u**3) - 1.0 / (2.0 * u * u)) * np.exp(-t * t / (4.0 * u)), 2.0


# weights after v = t^2 / (4u), including the Jacobian
def _weight_v(kind, t):
    if kind == "u":
        return lambda v: np.exp(-v) / v
    if kind == "dt":
        return lambda v: -(2.0 / t) * np.exp(-v)
    return lambda v: (4.0 * v - 2.0) / (t * t) * np.exp(-v)


def subordinate(trace, bound, t, kind, spec, trace_decay):
    """Integrate a heat trace against the extension kernel or its t-derivatives.

    Parameters
    ----------
    trace : callable
        Vectorized ``u -> (e^{-uL} f)(x)``.
    bound : float
        Upper bound on ``|trace|``.
    t : float
        Positive height.
    kind : {"u", "dt", "dtt"}
        Kernel ``e^{-t^2/4u}/u`` or its first or second derivative in ``t``.
    spec : QuadratureSpec
    trace_decay : float
        Exponent ``p`` with ``|trace(u)| = O(u^{-p})`` as ``u -> inf``.

    Returns
    -------
    Estimate
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if bound == 0.0:
        return Estimate(0.0, 0.0)
    if t < SMALL_T_SWITCH:
        weight = _weight_v(kind, t)

        def integrand(v):
            return trace(t * t / (4.0 * v)) * weight(v)

        points = _geometric_points(1e-2 * t * t, spec.split_point)
        return integrate_semi_infinite(
            integrand,
            spec,
            tail=TailBound.exponential(0.5, 8.0 * bound / (t * t)),
            points=points,
            singular="left" if kind == "u" else None,
        )
    weight, decay = _weight_u(kind, t)
    lower = _LAYER_CUTOFF * t * t
    points = _geometric_points(lower, max(spec.split_point, 4.0 * t * t))
    est = integrate_semi_infinite(
        lambda u: trace(u) * weight(u), spec, tail=TailBound.power(decay + trace_decay), lower=lower, points=points
    )
    # neglected layer (0, lower): bounded by bound * int_100^inf |kernel in v| dv
    if kind == "u":
        skipped = bound * float(exp_integral_e1(100.0))
    else:
        skipped = bound * 4.0 * 101.0 * math.exp(-100.0) / (t * t if kind == "dtt" else t)
    return Estimate(est.value, est.error + skipped)


def _subordinate(f, n, t, kind, spec):
    return subordinate(_heat_trace(f, n), _mass(f), t, kind, spec, 0.5)


@functools.lru_cache(maxsize=4096)
def _k0_coefficient(t, lag, spec):
    def symbol(theta):
        return 2.0 * k0(2.0 * t * np.sin(0.5 * theta))

    return periodic_log_quadrature(symbol, abs(lag), spec, full_output=True)


def extension_u(f, n, t, spec=None, method="subordination", *, full_output=False):
    """Value ``u_f(n, t)`` of the extension.

    Parameters
    ----------
    f : LatticeFunction
    n : int
    t : float
        Positive height.
    spec : QuadratureSpec, optional
    method : {"subordination", "multiplier"}
    full_output : bool
        Return an :class:`Estimate`.
    """
    spec = DEFAULT_SPEC if spec is None else spec
    t = float(t)
    if not t > 0:
        raise ValueError("t must be positive")
    if method == "subordination":
        est = _subordinate(f, n, t, "u", spec)
    elif method == "multiplier":
        terms, errors = [], []
        for m, value in f.items():
            c = _k0_coefficient(t, int(n) - m, spec)
            terms.append(value * c.value)
            errors.append(abs(value) * c.error)
        est = Estimate(math.fsum(terms), math.fsum(errors))
    else:
        raise ValueError(f"unknown method {method!r}")
    return est if full_output else est.value


def extension_dt(f, n, t, spec=None, *, full_output=False):
    """``d/dt u_f(n, t)`` by differentiating the subordination kernel."""
    est = _subordinate(f, n, float(t), "dt", DEFAULT_SPEC if spec is None else spec)
    return est if full_output else est.value


def extension_dtt(f, n, t, spec=None, *, full_output=False):
    """``d^2/dt^2 u_f(n, t)`` by differentiating the subordination kernel."""
    est = _subordinate(f, n, float(t), "dtt", DEFAULT_SPEC if spec is None else spec)
    return est if full_output else est.value


def pde_residual(f, n, t, spec=None, *, full_output=False):
    """``u_tt + u_t / t + u(n+1) - 2 u(n) + u(n-1)`` at ``(n, t)``."""
    spec = DEFAULT_SPEC if spec is None else spec
    n = int(n)
    t = float(t)
    parts = [
        extension_dtt(f, n, t, spec, full_output=True),
        extension_dt(f, n, t, spec, full_output=True),
        extension_u(f, n + 1, t, spec, full_output=True),
        extension_u(f, n, t, spec, full_output=True),
        extension_u(f, n - 1, t, spec, full_output=True),
    ]
    coeffs = [1.0, 1.0 / t, 1.0, -2.0, 1.0]
    value = math.fsum(c * p.value for c, p in zip(coeffs, parts))
    error = math.fsum(abs(c) * p.error for c, p in zip(coeffs, parts))
    out = Estimate(value, error)
    return out if full_output else out.value


def _check_grid(t_grid, minimum):
    grid = [float(t) for t in t_grid]
    if len(grid) < minimum:
        raise ValueError(f"t_grid needs at least {minimum} points")
    if any(not 0.0 < t < 1.0 for t in grid):
        raise ValueError("t_grid values must lie in (0, 1)")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("t_grid must be strictly decreasing")
    return grid


def extension_trace(f, n, t_grid=DEFAULT_T_GRID, spec=None):
    """Tabulate ``u``, ``t u_t`` and the PDE residual along ``t_grid``."""
    spec = DEFAULT_SPEC if spec is None else spec
    grid = [float(t) for t in t_grid]
    u_vals = [extension_u(f, n, t, spec) for t in grid]
    flux = [t * extension_dt(f, n, t, spec) for t in grid]
    res = [pde_residual(f, n, t, spec) for t in grid]
    return ExtensionTrace(int(n), tuple(grid), tuple(u_vals), tuple(flux), tuple(res))


def boundary_limits(f, n, t_grid=DEFAULT_T_GRID, spec=None):
    """Extrapolate ``t u_t`` and ``u / log t`` to ``t -> 0+``.

    Both limits equal ``-2 f(n)``.  The kernel ``2 K_0(2 t sin(theta/2))``
    expands in ``t^{2k}`` and ``t^{2k} log t``, so the corrections carry the
    known exponent 2.  The flux is fitted with ``L + t^2 (c1 log t + c2) + ...``.
    The log ratio converges only like ``1 / log t``, so ``u`` itself is fitted
    as ``L log t + B + t^2 (c1 log t + c2) + ...`` and ``L`` is reported.

    Returns
    -------
    flux_limit, log_ratio_limit : ConvergenceReport
    """
    spec = DEFAULT_SPEC if spec is None else spec
    grid = _check_grid(t_grid, 4)
    flux, values = [], []
    noise_flux = noise_u = 0.0
    for t in grid:
        u = extension_u(f, n, t, spec, full_output=True)
        du = extension_dt(f, n, t, spec, full_output=True)
        flux.append((t, t * du.value))
        noise_flux = max(noise_flux, t * du.error)
        values.append((t, u.value))
        noise_u = max(noise_u, u.error)
    flux_report = richardson_limit(flux, "power_plus_log", order=2.0, noise=max(noise_flux, 1e-15))
    ratio_report = richardson_limit(values, "log_divergent", order=2.0, noise=max(noise_u, 1e-15))
    return flux_report, ratio_report


@functools.lru_cache(maxsize=None)
def extension_constant(spec=DEFAULT_SPEC):
    """Renormalization constant ``-gamma + E1(1/4) - int_0^{1/4} (1 - e^{-v})/v dv``.

    Returns
    -------
    Estimate
    """
    head = integrate_finite(lambda v: -np.expm1(-v) / v, 0.0, 0.25, spec)
    value = math.fsum([-EULER_GAMMA, float(exp_integral_e1(0.25)), -head.value])
    return Estimate(value, head.error + 1e-15)


def log_via_extension(f, n, t_grid=DEFAULT_T_GRID, spec=None, *, full_output=False):
    """``log(-Delta_d) f`` at ``n`` from the boundary behaviour of ``u_f``.

    Evaluates ``-lim (u_f(n, t) + 2 f(n) log t) + f(n) K`` with the limit
    taken by Richardson extrapolation on ``t_grid`` (corrections in
    ``t^{2k}`` and ``t^{2k} log t``).

    Returns
    -------
    float
        Or ``(Estimate, ConvergenceReport)`` when ``full_output`` is set.
    """
    spec = DEFAULT_SPEC if spec is None else spec
    grid = _check_grid(t_grid, 4)
    fn = f(n)
    samples, noise = [], 0.0
    for t in grid:
        u = extension_u(f, n, t, spec, full_output=True)
        samples.append((t, u.value + 2.0 * fn * math.log(t)))
        noise = max(noise, u.error)
    report = richardson_limit(samples, "power_plus_log", order=2.0, noise=max(noise, 1e-15))
    const = extension_constant(spec)
    value = -report.extrapolated_limit + fn * const.value
    if full_output:
        return Estimate(value, report.error_estimate + abs(fn) * const.error), report
    return value

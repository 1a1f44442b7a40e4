"""Logarithm of the discrete Laplacian on the integers.

Two independent evaluation routes are provided.  The pointwise route sums the
kernels ``W0(k) = int_0^1 p_t(k)/t dt`` and ``Winf(k) = int_1^inf p_t(k)/t dt``
against the data.  The spectral route integrates the Fourier symbol
``log(4 sin^2(theta/2))`` against the Fourier series of the data.
"""

import csv
import functools
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import QuadratureError
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
from .special_functions import EULER_GAMMA

__all__ = [
    "DEFAULT_S_GRID",
    "LogKernelTable",
    "build_kernel_table",
    "fractional_difference_quotient",
    "fractional_power_spectral",
    "log_laplacian_pointwise",
    "log_laplacian_spectral",
    "required_max_lag",
    "small_s_limit_check",
    "w0_tail_bound",
]

DEFAULT_S_GRID = tuple(0.2 / 2**k for k in range(8))


@dataclass(frozen=True)
class LogKernelTable:
    """Precomputed kernels ``W0`` and ``Winf`` for lags ``|k| <= max_lag``.

    Attributes
    ----------
    max_lag : int
    w0 : dict
        ``W0(k)`` for ``0 < |k| <= max_lag``.
    w_inf : dict
        ``Winf(k)`` for ``|k| <= max_lag``.
    gamma : float
        The renormalization constant (Euler's constant).
    w0_error, w_inf_error : dict
        Quadrature error estimates keyed like the kernels.
    spec : QuadratureSpec
        Tolerances used to build the table.
    """

    max_lag: int
    w0: dict
    w_inf: dict
    gamma: float
    w0_error: dict = field(default_factory=dict, repr=False)
    w_inf_error: dict = field(default_factory=dict, repr=False)
    spec: object = field(default=DEFAULT_SPEC, repr=False)

    def to_csv(self):
        """Rows ``lag,w0,w_inf`` for ``lag = 0..max_lag``; ``w0(0)`` is ``nan``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["lag", "w0", "w_inf"])
        for k in range(self.max_lag + 1):
            writer.writerow([k, repr(self.w0.get(k, math.nan)), repr(self.w_inf[k])])
        return buf.getvalue()


def w0_tail_bound(radius):
    """Bound on ``sum_{|k| > radius} W0(k)``.

    Uses ``p_t(k) <= t^|k| / |k|!`` on ``(0, 1]``, hence
    ``W0(k) <= 1 / (|k| |k|!)``, and a geometric majorant for the sum.
    """
    k = radius + 1
    first = 1.0 / (k * math.factorial(k))
    return 2.0 * first / (1.0 - 1.0 / (k + 1))


def _truncation_radius(target):
    radius = 1
    while w0_tail_bound(radius) > target:
        radius += 1
    return radius


def required_max_lag(f, sites, spec=None):
    """Smallest ``max_lag`` that lets :func:`log_laplacian_pointwise` evaluate ``f`` at every site."""
    spec = DEFAULT_SPEC if spec is None else spec
    lag = 1
    for n in sites:
        n = int(n)
        lag = max([lag] + [abs(n - m) for m, _ in f.items()])
        fn = f(n)
        if fn != 0.0:
            lag = max(lag, _truncation_radius(0.1 * spec.abs_tol / abs(fn)))
    return lag


def _w0(k, spec):
    return integrate_finite(lambda t: heat_kernel(t, k) / t, 0.0, 1.0, spec)


def _w_inf(k, spec):
    # p_t(k)/t decays like t^{-3/2}; large lags peak near t ~ k^2
    points = [k * k / 4.0] if k > 2 else []
    return integrate_semi_infinite(
        lambda t: heat_kernel(t, k) / t, spec, tail=TailBound.power(1.5), lower=1.0, points=points
    )


def build_kernel_table(max_lag, spec=None):
    """Compute ``W0`` and ``Winf`` for every lag up to ``max_lag``.

    Raises
    ------
    QuadratureError
        With the offending lag named in the message.
    """
    spec = DEFAULT_SPEC if spec is None else spec
    if int(max_lag) != max_lag or max_lag < 1:
        raise ValueError("max_lag must be a positive integer")
    max_lag = int(max_lag)
    w0, w_inf, w0_err, w_inf_err = {}, {}, {}, {}
    for k in range(max_lag + 1):
        try:
            if k:
                est = _w0(k, spec)
                for lag in (k, -k):
                    w0[lag], w0_err[lag] = est
            est = _w_inf(k, spec)
        except QuadratureError as exc:
            raise QuadratureError(f"kernel at lag {k}: {exc}", exc.value, exc.error) from exc
        for lag in {k, -k}:
            w_inf[lag], w_inf_err[lag] = est
    return LogKernelTable(max_lag, w0, w_inf, EULER_GAMMA, w0_err, w_inf_err, spec)


@functools.lru_cache(maxsize=8)
def cached_kernel_table(max_lag, spec=DEFAULT_SPEC):
    """Memoized :func:`build_kernel_table`; tables are immutable."""
    return build_kernel_table(max_lag, spec)


def log_laplacian_pointwise(f, n, table, *, full_output=False):
    """Evaluate the kernel representation of ``log(-Delta_d) f`` at ``n``.

    ``sum_{m != n} W0(n-m) (f(n) - f(m)) - sum_m Winf(n-m) f(m) - gamma f(n)``.

    The first sum is split as ``f(n) * sum_{k != 0} W0(k)`` minus a finite sum
    over the support; the infinite part is cut at the smallest radius whose
    certified tail is below a tenth of the table tolerance.

    Parameters
    ----------
    f : LatticeFunction
    n : int
    table : LogKernelTable
    full_output : bool
        Return an :class:`Estimate` with the propagated error.

    Raises
    ------
    ValueError
        If the table does not reach every required lag.
    """
    n = int(n)
    entries = f.items()
    fn = f(n)
    needed = max((abs(n - m) for m, _ in entries), default=0)
    radius = 0
    if fn != 0.0:
        radius = _truncation_radius(0.1 * table.spec.abs_tol / abs(fn))
    if max(needed, radius) > table.max_lag:
        raise ValueError(
            f"kernel table covers lags up to {table.max_lag}, evaluation at n={n} needs {max(needed, radius)}"
        )
    terms, errors = [], []
    if fn != 0.0:
        for k in range(1, radius + 1):
            terms.append(2.0 * fn * table.w0[k])
            errors.append(2.0 * abs(fn) * table.w0_error[k])
        errors.append(abs(fn) * w0_tail_bound(radius))
        terms.append(-table.gamma * fn)
    for m, value in entries:
        lag = n - m
        if lag:
            terms.append(-table.w0[lag] * value)
            errors.append(table.w0_error[lag] * abs(value))
        terms.append(-table.w_inf[lag] * value)
        errors.append(table.w_inf_error[lag] * abs(value))
    value = math.fsum(terms)
    if full_output:
        return Estimate(value, math.fsum(errors))
    return value


# ---------------------------------------------------------------------------
# Spectral route
# ---------------------------------------------------------------------------


def _log_symbol(theta):
    return np.log(4.0 * np.sin(0.5 * theta) ** 2)


@functools.lru_cache(maxsize=4096)
def _symbol_coefficient(kind, s, lag, spec):
    if kind == "log":
        symbol = _log_symbol
    elif kind == "power":

        def symbol(theta):
            return np.exp(s * _log_symbol(theta))

    elif kind == "quotient":

        def symbol(theta):
            return np.expm1(s * _log_symbol(theta)) / s

    else:  # pragma: no cover - internal
        raise ValueError(kind)
    return periodic_log_quadrature(symbol, abs(lag), spec, full_output=True)


def _apply_multiplier(f, n, kind, s, spec, full_output):
    spec = DEFAULT_SPEC if spec is None else spec
    terms, errors = [], []
    for m, value in f.items():
        est = _symbol_coefficient(kind, s, int(n) - m, spec)
        terms.append(value * est.value)
        errors.append(abs(value) * est.error)
    out = Estimate(math.fsum(terms), math.fsum(errors))
    return out if full_output else out.value


def log_laplacian_spectral(f, n, spec=None, *, full_output=False):
    """Fourier-multiplier evaluation of ``log(-Delta_d) f`` at ``n``.

    Computes ``(1/2pi) int log(4 sin^2(theta/2)) fhat(theta) e^{i n theta}``
    lag by lag: each lag contributes ``f(m)`` times the Fourier coefficient
    of the symbol at ``n - m``.
    """
    return _apply_multiplier(f, n, "log", 0.0, spec, full_output)


def fractional_power_spectral(f, s, n, spec=None, *, full_output=False):
    """``((-Delta_d)^s f)(n)`` through the symbol ``(4 sin^2(theta/2))^s``."""
    if not 0.0 < s <= 1.0:
        raise ValueError("s must lie in (0, 1]")
    return _apply_multiplier(f, n, "power", float(s), spec, full_output)


def fractional_difference_quotient(f, s, n, spec=None, *, full_output=False):
    """``(((-Delta_d)^s f - f) / s)(n)`` evaluated without cancellation.

    The multiplier ``(lambda^s - 1) / s`` is formed with ``expm1`` so that small
    ``s`` does not lose digits.
    """
    if not 0.0 < s <= 1.0:
        raise ValueError("s must lie in (0, 1]")
    return _apply_multiplier(f, n, "quotient", float(s), spec, full_output)


def small_s_limit_check(f, n, s_grid=DEFAULT_S_GRID, spec=None, *, window=None):
    """Extrapolate ``((-Delta_d)^s f - f)(n) / s`` to ``s -> 0+``.

    The quotient is an entire function of ``s``, so the error model is a
    power series in ``s`` with unit exponent.

    Parameters
    ----------
    f : LatticeFunction
    n : int
    s_grid : sequence of float
        Decreasing values in ``(0, 1/2]``, at least three.
    spec : QuadratureSpec, optional
    window : int, optional
        Extrapolation window passed to :func:`richardson_limit`.

    Returns
    -------
    ConvergenceReport
    """
    grid = [float(s) for s in s_grid]
    if len(grid) < 3:
        raise ValueError("small_s_limit_check needs at least 3 values of s")
    if any(not 0.0 < s <= 0.5 for s in grid):
        raise ValueError("s values must lie in (0, 1/2]")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("s_grid must be strictly decreasing")
    samples, noise = [], 0.0
    for s in grid:
        est = fractional_difference_quotient(f, s, n, spec, full_output=True)
        samples.append((s, est.value))
        noise = max(noise, est.error)
    return richardson_limit(samples, "power", order=1.0, window=window, noise=max(noise, 1e-15))

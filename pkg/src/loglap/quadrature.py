"""Adaptive quadrature, graded periodic quadrature and limit extraction.

The integrator is a globally adaptive Gauss-Kronrod scheme (10-point Gauss
embedded in a 21-point Kronrod rule).  Panels are processed in batches: every
sweep bisects the smallest set of worst panels whose removal would bring the
remaining error below half the tolerance, and all new panels are evaluated in
one vectorized call.  Integrands therefore receive 1-D arrays and must return
arrays of the same shape.

Panel sums are formed with :func:`math.fsum` in left-endpoint order, so results
do not depend on the refinement history beyond the final panel set.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import QuadratureError

__all__ = [
    "ConvergenceReport",
    "DEFAULT_SPEC",
    "Estimate",
    "QuadratureSpec",
    "TailBound",
    "integrate_finite",
    "integrate_semi_infinite",
    "kronrod_rule",
    "periodic_log_quadrature",
    "richardson_limit",
]

_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# Gauss-Kronrod rule
# ---------------------------------------------------------------------------


def _kronrod_recurrence(n, a0, b0):
    """Jacobi matrix entries of the (2n+1)-point Kronrod extension (Laurie)."""
    a = np.zeros(2 * n + 1)
    b = np.zeros(2 * n + 1)
    k = np.arange(0, 3 * n // 2 + 1)
    a[k] = a0[k]
    k = np.arange(0, -(-3 * n // 2) + 1)
    b[k] = b0[k]
    s = np.zeros(n // 2 + 2)
    t = np.zeros(n // 2 + 2)
    t[1] = b[n + 1]
    for m in range(n - 1):
        k = np.arange((m + 1) // 2, -1, -1)
        l = m - k
        s[k + 1] = np.cumsum((a[k + n + 1] - a[l]) * t[k + 1] + b[k + n + 1] * s[k] - b[l] * s[k + 1])
        s, t = t, s
    j = np.arange(n // 2, -1, -1)
    s[j + 1] = s[j]
    for m in range(n - 1, 2 * n - 2):
        k = np.arange(m + 1 - n, (m - 1) // 2 + 1)
        l = m - k
        j = n - 1 - l
        s[j + 1] = np.cumsum(-(a[k + n + 1] - a[l]) * t[j + 1] - b[k + n + 1] * s[j + 1] + b[l] * s[j + 2])
        j = j[-1]
        k = (m + 1) // 2
        if m % 2 == 0:
            a[k + n + 1] = a[k] + (s[j + 1] - b[k + n + 1] * s[j + 2]) / t[j + 2]
        else:
            b[k + n + 1] = s[j + 1] / s[j + 2]
        s, t = t, s
    a[2 * n] = a[n - 1] - b[2 * n] * s[1] / t[1]
    return a, b


def kronrod_rule(n=10):
    """Nodes and weights of the Gauss-Legendre / Kronrod pair on ``[-1, 1]``.

    Parameters
    ----------
    n : int
        Number of Gauss points; the Kronrod rule has ``2n + 1`` points.

    Returns
    -------
    xk, wk : ndarray
        Sorted Kronrod nodes and weights.
    wg : ndarray
        Gauss weights; the Gauss nodes are ``xk[1::2]``.
    """
    size = 2 * n + 2
    a0 = np.zeros(size)
    b0 = np.array([2.0] + [k * k / (4.0 * k * k - 1.0) for k in range(1, size)])
    a, b = _kronrod_recurrence(n, a0, b0)
    jac = np.diag(a) + np.diag(np.sqrt(b[1:]), 1) + np.diag(np.sqrt(b[1:]), -1)
    nodes, vecs = np.linalg.eigh(jac)
    weights = b[0] * vecs[0, :] ** 2
    # restore the exact symmetry lost to rounding
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    _, wg = np.polynomial.legendre.leggauss(n)
    return nodes, weights, wg


_XK, _WK, _WG = kronrod_rule(10)


# ---------------------------------------------------------------------------
# Specifications and result containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and tuning knobs shared by all integrators.

    Parameters
    ----------
    abs_tol, rel_tol : float
        Requested absolute and relative accuracy, both in ``(0, 1)``.
    split_point : float
        Where semi-infinite integrals are split into a finite head and a tail.
    max_subdivisions : int
        Upper bound on the number of panels, at least 8.
    tail_cutoff_factor : float
        Truncated tails must be bounded by ``tail_cutoff_factor * abs_tol``.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    split_point: float = 1.0
    max_subdivisions: int = 4000
    tail_cutoff_factor: float = 0.1

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
        if not self.split_point > 0.0:
            raise ValueError("split_point must be positive")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 8:
            raise ValueError("max_subdivisions must be an integer >= 8")
        if not self.tail_cutoff_factor > 0.0:
            raise ValueError("tail_cutoff_factor must be positive")

    def scaled(self, factor):
        """Copy with both tolerances multiplied by ``factor``."""
        return QuadratureSpec(
            abs_tol=self.abs_tol * factor,
            rel_tol=min(self.rel_tol * factor, 0.5),
            split_point=self.split_point,
            max_subdivisions=self.max_subdivisions,
            tail_cutoff_factor=self.tail_cutoff_factor,
        )


DEFAULT_SPEC = QuadratureSpec()


class Estimate(NamedTuple):
    """A computed value with its absolute error estimate."""

    value: float
    error: float


@dataclass(frozen=True)
class TailBound:
    """Decay descriptor for the integrand beyond the split point.

    ``kind`` is one of

    * ``"exponential"``: ``|f(x)| <= scale * exp(-rate * x)``,
    * ``"gaussian"``: ``|f(x)| <= scale * exp(-rate * x**2)``,
    * ``"power"``: ``|f(x)| <= scale * x**(-rate)`` with ``rate > 1``.
    """

    kind: str
    rate: float
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exponential", "gaussian", "power"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if self.kind == "power" and not self.rate > 1.0:
            raise ValueError("power tails need an exponent > 1 to be integrable")
        if not self.rate > 0.0 or not self.scale > 0.0:
            raise ValueError("tail rate and scale must be positive")

    @classmethod
    def exponential(cls, rate, scale=1.0):
        return cls("exponential", float(rate), float(scale))

    @classmethod
    def gaussian(cls, rate, scale=1.0):
        return cls("gaussian", float(rate), float(scale))

    @classmethod
    def power(cls, exponent, scale=1.0):
        return cls("power", float(exponent), float(scale))


# ---------------------------------------------------------------------------
# Adaptive core
# ---------------------------------------------------------------------------


def _evaluate_panels(func, lo, hi):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = center[:, None] + half[:, None] * _XK[None, :]
    with np.errstate(over="ignore", under="ignore"):
        fx = np.asarray(func(nodes.ravel()), dtype=float)
    if fx.shape != (nodes.size,):
        raise ValueError("integrand must map a 1-D array to an array of the same shape")
    fx = fx.reshape(nodes.shape)
    if not np.all(np.isfinite(fx)):
        bad = nodes[~np.isfinite(fx)][0]
        raise QuadratureError(f"integrand returned a non-finite value at x={bad!r}")
    resk = half * (fx @ _WK)
    resg = half * (fx[:, 1::2] @ _WG)
    resabs = np.abs(half) * (np.abs(fx) @ _WK)
    mean = (fx @ _WK) * 0.5
    resasc = np.abs(half) * (np.abs(fx - mean[:, None]) @ _WK)
    err = np.abs(resk - resg)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc > 0) & (err > 0), scaled, err)
    err = np.maximum(err, 50.0 * _EPS * resabs)
    return resk, err


def _adaptive(func, breaks, spec, abs_tol=None):
    abs_tol = spec.abs_tol if abs_tol is None else abs_tol
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1], breaks[1:]
    val, err = _evaluate_panels(func, lo, hi)
    while True:
        order = np.argsort(lo, kind="stable")
        total = math.fsum(val[order])
        errsum = math.fsum(err[order])
        tol = max(abs_tol, spec.rel_tol * abs(total))
        if errsum <= tol:
            return Estimate(total, errsum)
        rank = np.argsort(-err, kind="stable")
        remaining = errsum - np.cumsum(err[rank])
        count = int(np.argmax(remaining <= 0.5 * tol)) + 1
        count = min(count, spec.max_subdivisions - lo.size)
        if count <= 0:
            raise QuadratureError(
                f"max_subdivisions={spec.max_subdivisions} exhausted with error "
                f"{errsum:.3e} above tolerance {tol:.3e}",
                total,
                errsum,
            )
        chosen = rank[:count]
        width = hi[chosen] - lo[chosen]
        scale = np.maximum(np.abs(lo[chosen]), np.abs(hi[chosen]))
        splittable = width > 64.0 * _EPS * scale
        if not splittable.any():
            raise QuadratureError(
                f"roundoff limits refinement; error {errsum:.3e} above tolerance {tol:.3e}",
                total,
                errsum,
            )
        chosen = chosen[splittable]
        mid = 0.5 * (lo[chosen] + hi[chosen])
        new_lo = np.concatenate([lo[chosen], mid])
        new_hi = np.concatenate([mid, hi[chosen]])
        new_val, new_err = _evaluate_panels(func, new_lo, new_hi)
        keep = np.ones(lo.size, dtype=bool)
        keep[chosen] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], new_val])
        err = np.concatenate([err[keep], new_err])


def _sorted_points(points, a, b):
    pts = sorted({float(p) for p in points if a < p < b})
    return [a] + pts + [b]


def integrate_finite(integrand, a, b, spec=None, *, points=(), singular=None, abs_tol=None):
    """Integrate a vectorized function over ``[a, b]``.

    Parameters
    ----------
    integrand : callable
        Maps a 1-D array of abscissae to an array of values.
    a, b : float
        Finite limits with ``a < b``.
    spec : QuadratureSpec, optional
    points : sequence of float, optional
        Interior breakpoints (kinks, peaks, boundary layers).
    singular : {None, "left", "right", "both"}
        Declares integrable endpoint singularities.  A polynomial change of
        variables that vanishes at the flagged endpoint is applied so the
        rule never sees the singular point at full strength.
    abs_tol : float, optional
        Overrides ``spec.abs_tol``.

    Returns
    -------
    Estimate
        ``(value, error)``.

    Raises
    ------
    QuadratureError
        If the panel budget is exhausted or the integrand is not finite.
    """
    spec = DEFAULT_SPEC if spec is None else spec
    a = float(a)
    b = float(b)
    if not a < b:
        raise ValueError(f"integrate_finite needs a < b, got a={a}, b={b}")
    length = b - a
    if singular is None:
        return _adaptive(integrand, _sorted_points(points, a, b), spec, abs_tol)
    if singular == "left":

        def mapped(s):
            return integrand(a + length * s * s) * (2.0 * length * s)

        inner = [math.sqrt((p - a) / length) for p in points if a < p < b]
    elif singular == "right":

        def mapped(s):
            return integrand(b - length * s * s) * (2.0 * length * s)

        inner = [math.sqrt((b - p) / length) for p in points if a < p < b]
    elif singular == "both":

        def mapped(s):
            return integrand(a + length * s * s * (3.0 - 2.0 * s)) * (6.0 * length * s * (1.0 - s))

        inner = [
            brentq(lambda s, p=p: a + length * s * s * (3.0 - 2.0 * s) - p, 0.0, 1.0, xtol=1e-15)
            for p in points
            if a < p < b
        ]
    else:
        raise ValueError(f"singular must be None, 'left', 'right' or 'both', got {singular!r}")
    return _adaptive(mapped, _sorted_points(inner, 0.0, 1.0), spec, abs_tol)


def _truncation_point(tail, split, target):
    if tail.kind == "exponential":
        excess = math.log(tail.scale / (tail.rate * target)) / tail.rate
        return split + max(excess, 0.0)
    x = max(split, 1.0)
    for _ in range(60):
        arg = tail.scale / (2.0 * tail.rate * x * target)
        x_new = math.sqrt(max(math.log(arg), 0.0) / tail.rate) if arg > 1.0 else split
        x_new = max(x_new, split)
        if abs(x_new - x) <= 1e-12 * x:
            break
        x = x_new
    return x_new


def integrate_semi_infinite(integrand, spec=None, *, tail, lower=0.0, points=(), singular=None):
    """Integrate a vectorized function over ``[lower, inf)``.

    The range is split at ``spec.split_point`` (shifted past ``lower`` when
    needed).  The head is handled by :func:`integrate_finite`; the tail is
    either truncated where the decay bound certifies the neglected mass is
    below ``tail_cutoff_factor * abs_tol`` (exponential and Gaussian decay) or
    mapped onto ``(0, 1]`` by ``x = split * s**(-1/(p-1))`` (power decay
    ``x**-p``), which leaves a bounded integrand.

    Parameters
    ----------
    integrand : callable
        Vectorized integrand.
    spec : QuadratureSpec, optional
    tail : TailBound
        Required decay descriptor.
    lower : float
        Finite lower limit.
    points : sequence of float
        Breakpoints anywhere in ``(lower, inf)``.
    singular : {None, "left"}
        Integrable singularity at ``lower``.

    Returns
    -------
    Estimate
    """
    spec = DEFAULT_SPEC if spec is None else spec
    if not isinstance(tail, TailBound):
        raise ValueError("integrate_semi_infinite requires a TailBound tail descriptor")
    if singular not in (None, "left"):
        raise ValueError("only a singularity at the finite endpoint can be declared")
    lower = float(lower)
    split = spec.split_point if spec.split_point > lower else lower + spec.split_point
    half_tol = 0.5 * spec.abs_tol
    head = integrate_finite(
        integrand, lower, split, spec, points=[p for p in points if p < split], singular=singular, abs_tol=half_tol
    )
    far = [p for p in points if p > split]
    if tail.kind == "power":
        k = 1.0 / (tail.rate - 1.0)

        def mapped(s):
            with np.errstate(over="ignore", divide="ignore"):
                x = split * s ** (-k)
                jac = k * split * s ** (-k - 1.0)
            ok = np.isfinite(x) & np.isfinite(jac)
            out = np.zeros_like(s)
            if ok.any():
                out[ok] = integrand(x[ok]) * jac[ok]
            return out

        inner = [(split / p) ** (1.0 / k) for p in far]
        body = _adaptive(mapped, _sorted_points(inner, 0.0, 1.0), spec, half_tol)
        return Estimate(head.value + body.value, head.error + body.error)
    target = spec.tail_cutoff_factor * spec.abs_tol
    stop = _truncation_point(tail, split, target)
    if stop <= split:
        return Estimate(head.value, head.error + target)
    body = integrate_finite(integrand, split, stop, spec, points=far, abs_tol=half_tol)
    return Estimate(head.value + body.value, head.error + body.error + target)


# ---------------------------------------------------------------------------
# Fourier coefficients of even symbols with a logarithmic singularity at 0
# ---------------------------------------------------------------------------


def periodic_log_quadrature(symbol, n, spec=None, *, power=4, full_output=False):
    """Fourier coefficient ``(1/2pi) int_{-pi}^{pi} symbol(theta) e^{i n theta}``.

    The symbol must be even, so the coefficient equals
    ``(1/pi) int_0^pi symbol(theta) cos(n theta) dtheta``.  The graded map
    ``theta = pi * s**power`` damps a logarithmic singularity at the origin.

    Parameters
    ----------
    symbol : callable
        Vectorized even function on ``(0, pi]``.
    n : int
        Frequency.
    spec : QuadratureSpec, optional
    power : int
        Grading exponent, at least 3.
    full_output : bool
        Return an :class:`Estimate` instead of a float.
    """
    if power < 3:
        raise ValueError("grading power must be at least 3")
    n = int(n)

    def graded(s):
        theta = np.pi * s**power
        return power * s ** (power - 1) * symbol(theta) * np.cos(n * theta)

    est = integrate_finite(graded, 0.0, 1.0, spec)
    return est if full_output else est.value


# ---------------------------------------------------------------------------
# Richardson extrapolation with a fitted rate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of a limit extraction.

    Attributes
    ----------
    extrapolated_limit : float
    observed_order : float
        Fitted exponent of the leading correction.
    error_estimate : float
        Difference between the two finest extrapolants, inflated by the
        observed contraction, plus propagated sample noise.
    samples_used : int
    contraction : float
        Smallest ratio between successive extrapolant differences that lie
        above the noise floor (``inf`` when none do).
    converged : bool
        False when the samples look non-monotone or the extrapolants fail to
        contract by the required factor.
    message : str
    extrapolants : tuple of float
        Limit estimates from each sliding window, coarse to fine.
    """

    extrapolated_limit: float
    observed_order: float
    error_estimate: float
    samples_used: int
    contraction: float = math.inf
    converged: bool = True
    message: str = ""
    extrapolants: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.samples_used < 3:
            raise ValueError("a convergence report needs at least 3 samples")
        if not math.isfinite(self.error_estimate) or self.error_estimate < 0:
            raise ValueError("error_estimate must be finite and nonnegative")


_MODELS = ("power", "power_plus_log", "log_divergent")


def _leading(t, model):
    """Columns whose coefficients are not corrections; the first is the target."""
    if model == "log_divergent":
        return [np.log(t), np.ones_like(t)]
    return [np.ones_like(t)]


def _basis(t, alpha, q, model):
    cols = []
    j = 1
    while len(cols) < q:
        p = t ** (j * alpha)
        if model == "power":
            cols.append(p)
        else:
            cols.append(p * np.log(t))
            if len(cols) < q:
                cols.append(p)
        j += 1
    return cols


def _design(t, alpha, q, model):
    mat = np.column_stack(_leading(t, model) + _basis(t, alpha, q, model))
    scale = np.max(np.abs(mat), axis=0)
    scale[scale == 0] = 1.0
    return mat / scale, scale


def _misfit(t, v, alpha, q, model, width, noise):
    """Sum over windows of the relative least-squares residual."""
    total = 0.0
    for s in range(t.size - width + 1):
        tw, vw = t[s : s + width], v[s : s + width]
        mat, _ = _design(tw, alpha, q, model)
        coef, *_ = np.linalg.lstsq(mat, vw, rcond=None)
        resid = vw - mat @ coef
        spread = float(np.sum((vw - vw.mean()) ** 2))
        total += float(resid @ resid) / (spread + width * noise * noise + 1e-300)
    return total


def _signed_gap(t, v, alpha, q, model):
    """Determinant that vanishes when one window is fitted exactly."""
    mat, _ = _design(t, alpha, q, model)
    return float(np.linalg.det(np.column_stack([mat, v / (np.max(np.abs(v)) or 1.0)])))


def _fit_order(t, v, q, model, width, noise, guess):
    grid = np.linspace(0.1, 8.0, 396)
    step = grid[1] - grid[0]
    vals = np.array([_misfit(t, v, a, q, model, width, noise) for a in grid])
    minima = []
    for i in range(grid.size):
        left = vals[i - 1] if i > 0 else np.inf
        right = vals[i + 1] if i + 1 < grid.size else np.inf
        if vals[i] <= left and vals[i] <= right:
            lo = grid[max(i - 1, 0)]
            hi = grid[min(i + 1, grid.size - 1)]
            res = minimize_scalar(
                lambda a: _misfit(t, v, a, q, model, width, noise),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-12},
            )
            minima.append((float(res.x), float(res.fun)))
    best = min(m[1] for m in minima)
    # several exponents can explain the data equally well (a model with
    # exponent a contains one with 2a); prefer the one the raw decay suggests
    level = 100.0 * best + 1e-20
    good = [m for m in minima if m[1] <= level]
    alpha = min(good, key=lambda m: abs(m[0] - guess))[0]
    if t.size == width == len(_leading(t, model)) + q + 1:
        # a single exactly determined window: the minimum is a root of a
        # signed quantity, which brentq locates far more sharply
        tw, vw = t[-width:], v[-width:]
        lo, hi = max(alpha - step, 0.05), alpha + step
        g_lo, g_hi = _signed_gap(tw, vw, lo, q, model), _signed_gap(tw, vw, hi, q, model)
        if g_lo * g_hi < 0:
            alpha = brentq(lambda a: _signed_gap(tw, vw, a, q, model), lo, hi, xtol=1e-15)
    return alpha


def _window_fit(t, v, alpha, q, model):
    mat, scale = _design(t, alpha, q, model)
    pinv = np.linalg.pinv(mat)
    coef = pinv @ v
    weights = pinv[0] / scale[0]
    limit = float(weights @ v)
    resid = v - mat @ coef
    return limit, float(np.sum(np.abs(weights))), float(np.max(np.abs(resid)))


def richardson_limit(samples, model="power", *, order=None, window=None, noise=None, min_contraction=1.5):
    """Extrapolate ``v(t)`` to ``t -> 0+``.

    Parameters
    ----------
    samples : sequence of (t, v)
        At least three samples with distinct positive ``t``.
    model : {"power", "power_plus_log", "log_divergent"}
        Error model.  ``"power"`` is ``v = L + c1 t^a + c2 t^{2a} + ...``;
        ``"power_plus_log"`` is ``v = L + t^a (c1 log t + c2) + ...``;
        ``"log_divergent"`` is ``v = L log t + B + t^a (c1 log t + c2) + ...``
        and reports the coefficient ``L = lim v / log t``.
    order : float, optional
        Known exponent ``a``; fitted from the data when omitted.
    window : int, optional
        Samples per extrapolation window.
    noise : float, optional
        Absolute noise level of the samples.  Differences below the
        propagated noise floor are ignored in the contraction test.
    min_contraction : float
        Required ratio between successive extrapolant differences.

    Returns
    -------
    ConvergenceReport
    """
    if model not in _MODELS:
        raise ValueError(f"unknown model {model!r}")
    pairs = sorted(((float(t), float(v)) for t, v in samples), key=lambda p: -p[0])
    if len(pairs) < 3:
        raise ValueError("richardson_limit needs at least 3 samples")
    t = np.array([p[0] for p in pairs])
    v = np.array([p[1] for p in pairs])
    if np.any(t <= 0) or np.any(np.diff(t) >= 0):
        raise ValueError("sample abscissae must be positive and distinct")
    if not np.all(np.isfinite(v)):
        raise ValueError("sample values must be finite")
    n = t.size
    lead = len(_leading(t[:1], model))
    if noise is None:
        noise = 64.0 * _EPS * max(1.0, float(np.max(np.abs(v))))
    if order is not None:
        width = min(n, window or 5)
        q = width - lead
    else:
        q = 4 if model != "power" else 3
        width = min(window or q + lead + 2, n)
        q = max(min(q, width - lead - 2), 1)
    if q < 1 or width < lead + q:
        raise ValueError("window too small for the requested model")

    # the quantity whose increments reveal the rate: v itself, or its slope
    # against log t when v diverges logarithmically
    if model == "log_divergent":
        probe = np.diff(v) / np.diff(np.log(t))
        probe_t = t[1:]
    else:
        probe, probe_t = v, t
    diffs = np.diff(probe)
    problems = []
    tail_diffs = diffs[-(width - lead):]
    signs = np.sign(tail_diffs[np.abs(tail_diffs) > 2.0 * noise])
    if signs.size and np.any(signs != signs[0]):
        problems.append("non-monotone samples")

    if order is None:
        big = np.nonzero(np.abs(diffs) > 2.0 * noise)[0]
        guess = 1.0
        if big.size >= 2 and big[-1] == big[-2] + 1 and big[-1] + 2 <= probe_t.size:
            i = big[-2]
            ratio = abs(diffs[i]) / abs(diffs[i + 1])
            span = math.log((probe_t[i] - probe_t[i + 1]) / (probe_t[i + 1] - probe_t[i + 2]))
            if ratio > 0 and span > 0:
                guess = math.log(ratio) / span
        guess = min(max(guess, 0.1), 8.0)
        if np.max(np.abs(diffs)) > 2.0 * noise:
            alpha = _fit_order(t, v, q, model, width, noise, guess)
        else:
            alpha = guess
    else:
        alpha = float(order)

    limits, gains, resids = [], [], []
    for s in range(n - width + 1):
        lim, gain, res = _window_fit(t[s : s + width], v[s : s + width], alpha, q, model)
        limits.append(lim)
        gains.append(gain)
        resids.append(res)
    floor = 2.0 * noise * max(gains)
    steps = np.abs(np.diff(limits))
    ratios = []
    for e0, e1 in zip(steps[:-1], steps[1:]):
        if e0 > floor and e1 > floor:
            ratios.append(e0 / e1)
    contraction = min(ratios) if ratios else math.inf
    if contraction < min_contraction:
        problems.append(f"extrapolants contract by only {contraction:.3g}")

    if steps.size:
        last = float(steps[-1])
        inflate = 1.0 / (contraction - 1.0) if 1.0 < contraction < 2.0 else 1.0
        error = last * inflate + floor + resids[-1]
    else:
        error = floor + resids[-1]
    return ConvergenceReport(
        extrapolated_limit=limits[-1],
        observed_order=alpha,
        error_estimate=float(error),
        samples_used=n,
        contraction=float(contraction),
        converged=not problems,
        message="; ".join(problems) if problems else "ok",
        extrapolants=tuple(limits),
    )

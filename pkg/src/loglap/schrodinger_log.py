"""Logarithm of Schrodinger operators ``-Delta + V`` on ``R^d`` with explicit heat kernels.

Two potentials are supported: a constant mass ``V = m^2`` and the harmonic
oscillator ``V = |x|^2``.  Both are radial, so every quantity below depends on
the evaluation point only through ``|x|``.

For a potential ``V`` write ``M(t, x) = int T_t^V(x, y) dy`` for the mass of
the heat kernel and ``F(t, x)`` for the fraction of that mass inside the unit
ball ``B(x, 1)``.  The corrector is

    K(x) = 2 log rho + int_0^{rho^2} (M - 1)/t dt - int_0^{rho^2} M (1 - F)/t dt
           + int_{rho^2}^inf M F / t dt + gamma,

and the operator acts pointwise as

    log(L_V) f(x) = -int_{B(x,1)} (f(y) - f(x)) k(x, y) dy
                    - int_{B(x,1)^c} f(y) k(x, y) dy - f(x) K(x),

with ``k(x, y) = int_0^inf T_t^V(x, y) dt / t``.  Data are Gaussian profiles
``A exp(-a |y|^2)``, whose heat evolutions and Fourier transforms are explicit.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .discrete_extension import DEFAULT_T_GRID, subordinate
from .errors import QuadratureError
from .quadrature import (
    DEFAULT_SPEC,
    Estimate,
    TailBound,
    integrate_finite,
    integrate_semi_infinite,
    richardson_limit,
)
from .special_functions import EULER_GAMMA, half_integer_bessel_k, regularized_gamma_p, regularized_gamma_q

__all__ = [
    "DEFAULT_S_GRID",
    "CorrectorValues",
    "PotentialModel",
    "RadialProfile",
    "alpha_beta",
    "ball_mass",
    "corrector_K",
    "corrector_h",
    "corrector_table_csv",
    "correctors",
    "critical_radius",
    "double_integral",
    "extension_dt_cont",
    "extension_u_cont",
    "half_exponent_beta_partial_sums",
    "heat_kernel_V",
    "kernel_mass",
    "log_LV_pointwise",
    "operator_table_csv",
    "semigroup_log_oracle",
    "semigroup_on_profile",
    "small_s_limit_cont",
    "spectral_oracle_constant",
    "theorem11_limits",
    "unit_ball_volume",
]

DEFAULT_S_GRID = tuple(0.2 / 2**k for k in range(8))


# ---------------------------------------------------------------------------
# Models and data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialModel:
    """A potential ``V >= 0`` on ``R^d`` with a closed-form heat kernel.

    Parameters
    ----------
    kind : {"free", "constant_mass", "harmonic"}
    dimension : int
        ``d >= 3``.
    mass : float
        ``m > 0`` for ``constant_mass``; ignored otherwise.
    """

    kind: str
    dimension: int = 3
    mass: float = 0.0

    def __post_init__(self):
        if self.kind not in ("free", "constant_mass", "harmonic"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if int(self.dimension) != self.dimension or self.dimension < 3:
            raise ValueError("dimension must be an integer >= 3")
        object.__setattr__(self, "dimension", int(self.dimension))
        if self.kind == "constant_mass":
            if not (self.mass > 0 and math.isfinite(self.mass)):
                raise ValueError("constant_mass needs a finite mass m > 0")
            object.__setattr__(self, "mass", float(self.mass))
        else:
            object.__setattr__(self, "mass", 0.0)

    @classmethod
    def free(cls, dimension=3):
        return cls("free", dimension)

    @classmethod
    def constant_mass(cls, m, dimension=3):
        return cls("constant_mass", dimension, m)

    @classmethod
    def harmonic(cls, dimension=3):
        return cls("harmonic", dimension)

    def potential(self, x):
        """``V(x)``."""
        if self.kind == "harmonic":
            return float(np.sum(np.square(_as_point(x, self.dimension))))
        return self.mass**2

    def label(self):
        """Short descriptor such as ``constant:m=1.0``."""
        if self.kind == "constant_mass":
            return f"constant:m={self.mass!r}"
        return self.kind


@dataclass(frozen=True)
class RadialProfile:
    """Gaussian datum ``f(y) = amplitude * exp(-rate |y|^2)``.

    Gaussians are Lipschitz and integrable, which covers the regularity that
    the pointwise formulas need.
    """

    amplitude: float
    rate: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError("rate must be a finite positive number")
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "rate", float(self.rate))

    @classmethod
    def gaussian(cls, amplitude=1.0, rate=1.0):
        return cls(amplitude, rate)

    @classmethod
    def zero(cls):
        return cls(0.0, 1.0)

    @property
    def is_gaussian(self):
        return True

    @property
    def decay_exponent(self):
        """Polynomial decay order; Gaussians decay faster than any power."""
        return math.inf

    def lipschitz_constant(self):
        """``sup |F'(r)| = A sqrt(2a) e^{-1/2}``."""
        return abs(self.amplitude) * math.sqrt(2.0 * self.rate) * math.exp(-0.5)

    def radial(self, r):
        """``F(r)`` with ``f(y) = F(|y|)``."""
        r = np.asarray(r, dtype=float)
        return self.amplitude * np.exp(-self.rate * r * r)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return self.radial(np.sqrt(np.sum(y * y, axis=-1)))

    def fourier_radial(self, k, dimension=3):
        """``fhat(xi) = int f(y) e^{-i xi y} dy`` at ``|xi| = k``."""
        a = self.rate
        k = np.asarray(k, dtype=float)
        return self.amplitude * (math.pi / a) ** (0.5 * dimension) * np.exp(-k * k / (4.0 * a))

    def spherical_mean_defect(self, s, r):
        """Mean of ``f`` over the sphere ``|y - x| = r`` minus ``f(x)``, ``|x| = s``, ``d = 3``.

        The mean is ``A e^{-a(s^2 + r^2)} sinh(z)/z`` with ``z = 2 a r s``.
        """
        a = self.rate
        r = np.asarray(r, dtype=float)
        z = 2.0 * a * r * s
        return self.amplitude * math.exp(-a * s * s) * np.expm1(-a * r * r + _log_shc(z))


def _log_shc(z):
    """``log(sinh(z) / z)`` for ``z >= 0`` without overflow or cancellation."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 1e-2
    zs = z[small] ** 2
    out[small] = zs / 6.0 - zs * zs / 180.0 + zs**3 / 2835.0
    zb = z[~small]
    out[~small] = zb - np.log(2.0 * zb) + np.log(-np.expm1(-2.0 * zb))
    return out


def _as_point(x, d):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.size == 1:
        arr = np.concatenate([arr, np.zeros(d - 1)])
    if arr.shape != (d,):
        raise ValueError(f"point must have {d} coordinates")
    return arr


def _norm(x, d):
    return float(np.linalg.norm(_as_point(x, d)))


def unit_ball_volume(d):
    """Volume ``omega_d`` of the unit ball in ``R^d``."""
    return math.pi ** (0.5 * d) / math.gamma(0.5 * d + 1.0)


def _sphere_area(d):
    return 2.0 * math.pi ** (0.5 * d) / math.gamma(0.5 * d)


def _log_cosh(x):
    x = np.abs(np.asarray(x, dtype=float))
    small = x < 1.0
    out = np.empty_like(x)
    # cosh(x) - 1 = 2 sinh(x/2)^2 keeps relative accuracy near zero
    out[small] = np.log1p(2.0 * np.sinh(0.5 * x[small]) ** 2)
    xb = x[~small]
    out[~small] = xb + np.log1p(np.exp(-2.0 * xb)) - math.log(2.0)
    return out


def _one_minus_sech(x):
    """``1 - 1/cosh(x)`` without cancellation or overflow."""
    x = np.abs(np.asarray(x, dtype=float))
    small = x < 1.0
    out = np.empty_like(x)
    out[small] = 2.0 * np.sinh(0.5 * x[small]) ** 2 / np.cosh(x[small])
    out[~small] = -np.expm1(-_log_cosh(x[~small]))
    return out


def _log_sinh(x):
    x = np.asarray(x, dtype=float)
    return x + np.log(-np.expm1(-2.0 * x)) - math.log(2.0)


def _require_potential(model, *kinds):
    if model.kind not in kinds:
        raise ValueError(f"operation not available for the {model.kind} model")


# ---------------------------------------------------------------------------
# Heat kernels
# ---------------------------------------------------------------------------


def heat_kernel_V(x, y, t, model):
    """Heat kernel ``T_t^V(x, y)``.

    Free and constant-mass kernels are Gaussians; the harmonic kernel is
    Mehler's formula written as
    ``(2 pi sinh 2t)^{-d/2} exp(-|x-y|^2 / (2 sinh 2t) - tanh(t) (|x|^2+|y|^2) / 2)``.

    Parameters
    ----------
    x, y : array_like
        Points of shape ``(..., d)``; they broadcast against each other.
    t : float
        Positive time.
    model : PotentialModel
    """
    t = float(t)
    if not t > 0:
        raise ValueError("heat_kernel_V requires t > 0")
    d = model.dimension
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != d or y.shape[-1] != d:
        raise ValueError(f"points must have {d} coordinates")
    dist2 = np.sum((x - y) ** 2, axis=-1)
    if model.kind == "harmonic":
        log_s = float(_log_sinh(2.0 * t))
        norms = np.sum(x * x, axis=-1) + np.sum(y * y, axis=-1)
        expo = -0.5 * dist2 * math.exp(-log_s) - 0.5 * math.tanh(t) * norms
        return np.exp(-0.5 * d * (math.log(2.0 * math.pi) + log_s) + expo)
    out = (4.0 * math.pi * t) ** (-0.5 * d) * np.exp(-dist2 / (4.0 * t))
    return out * math.exp(-model.mass**2 * t)


def kernel_mass(t, x, model):
    """Total mass ``M(t, x) = int T_t^V(x, y) dy`` (vectorized in ``t``)."""
    t = np.asarray(t, dtype=float)
    d = model.dimension
    if model.kind == "harmonic":
        s = _norm(x, d)
        return np.exp(-0.5 * d * _log_cosh(2.0 * t) - 0.5 * s * s * np.tanh(2.0 * t))
    return np.exp(-(model.mass**2) * t)


def _mass_defect(t, s, model):
    """``M(t, x) - 1`` without cancellation."""
    d = model.dimension
    if model.kind == "harmonic":
        return np.expm1(-0.5 * d * _log_cosh(2.0 * t) - 0.5 * s * s * np.tanh(2.0 * t))
    return np.expm1(-(model.mass**2) * t)


def _harmonic_shape(t, s):
    """Mean offset ``|x - mu|`` and standard deviation of the harmonic kernel in ``y``."""
    offset = s * _one_minus_sech(2.0 * t)
    sigma = np.sqrt(np.tanh(2.0 * t))
    return offset, sigma


def ball_fraction(t, x, model):
    """Fraction of the kernel mass inside ``B(x, 1)`` and its complement.

    Returns
    -------
    inside, outside : ndarray
        ``F`` and ``1 - F``, each computed directly so that neither loses
        digits when small.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = model.dimension
    if model.kind != "harmonic":
        half = 0.5 * d
        x_arg = 1.0 / (4.0 * t)
        return regularized_gamma_p(half, x_arg), regularized_gamma_q(half, x_arg)
    s = _norm(x, d)
    offset, sigma = _harmonic_shape(t, s)
    big_a = 1.0 / sigma
    eps = offset / sigma
    if s == 0.0:
        arg = 0.5 * big_a * big_a
        return regularized_gamma_p(0.5 * d, arg), regularized_gamma_q(0.5 * d, arg)
    if d == 3:
        # P(|Z + eps e| <= A) for a standard normal Z in R^3
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(eps > 0, -np.expm1(-2.0 * big_a * eps) / eps, 2.0 * big_a)
        lobe = np.exp(-0.5 * (big_a - eps) ** 2) * ratio / math.sqrt(2.0 * math.pi)
        low = special.ndtr(big_a - eps)
        high = special.ndtr(big_a + eps)
        inside = low + high - 1.0 - lobe
        outside = special.ndtr(eps - big_a) + special.ndtr(-big_a - eps) + lobe
        return inside, outside
    inside = stats.ncx2.cdf(big_a**2, d, eps**2)
    outside = stats.ncx2.sf(big_a**2, d, eps**2)
    return inside, outside


def ball_mass(t, x, model):
    """``int_{B(x,1)} T_t^V(x, y) dy`` and the mass outside the ball."""
    mass = kernel_mass(t, x, model)
    inside, outside = ball_fraction(t, x, model)
    return mass * inside, mass * outside


def semigroup_on_profile(f, x, t, model):
    """``(T_t^V f)(x)`` for a Gaussian profile, vectorized in ``t``."""
    return f.amplitude * np.exp(_log_semigroup_ratio(f, _norm(x, model.dimension), t, model))


def _log_semigroup_ratio(f, s, t, model):
    # log((T_t^V f)(x) / A)
    t = np.asarray(t, dtype=float)
    a, d = f.rate, model.dimension
    if model.kind == "harmonic":
        sigma2 = np.tanh(2.0 * t)
        mu2 = s * s * np.exp(-2.0 * _log_cosh(2.0 * t))
        spread = 1.0 + 2.0 * a * sigma2
        return (
            -0.5 * d * _log_cosh(2.0 * t)
            - 0.5 * s * s * sigma2
            - 0.5 * d * np.log(spread)
            - a * mu2 / spread
        )
    spread = 1.0 + 4.0 * a * t
    return -(model.mass**2) * t - 0.5 * d * np.log(spread) - a * s * s / spread


def _semigroup_defect(f, s, t, model):
    """``(T_t^V f)(x) - f(x) M(t, x)`` without cancellation at small ``t``."""
    t = np.asarray(t, dtype=float)
    a, d = f.rate, model.dimension
    if model.kind == "harmonic":
        sigma2 = np.tanh(2.0 * t)
        # 1 - 1/(cosh^2 (1 + 2 a sigma^2)) written through small quantities
        c2 = np.exp(-2.0 * _log_cosh(2.0 * t))
        spread = 1.0 + 2.0 * a * sigma2
        gain = a * s * s * (1.0 - c2 / spread)
        inner = np.expm1(-0.5 * d * np.log1p(2.0 * a * sigma2) + gain)
        return f.amplitude * math.exp(-a * s * s) * kernel_mass(t, s, model) * inner
    spread = 4.0 * a * t
    inner = np.expm1(-0.5 * d * np.log1p(spread) + a * s * s * spread / (1.0 + spread))
    return f.amplitude * math.exp(-a * s * s) * kernel_mass(t, s, model) * inner


# ---------------------------------------------------------------------------
# Critical radius and constants
# ---------------------------------------------------------------------------


def critical_radius(x, model):
    """``rho(x) = sup{r > 0 : r^{2-d} int_{B(x,r)} V <= 1}``.

    Constant mass gives ``(m^2 omega_d)^{-1/2}``.  For ``V = |y|^2`` the
    ball integral is ``omega_d r^d (|x|^2 + d r^2 / (d + 2))``, a quadratic in
    ``r^2`` solved in its cancellation-free form.
    """
    _require_potential(model, "constant_mass", "harmonic")
    d = model.dimension
    omega = unit_ball_volume(d)
    if model.kind == "constant_mass":
        return 1.0 / math.sqrt(model.mass**2 * omega)
    s2 = _norm(x, d) ** 2
    quad = d * omega / (d + 2.0)
    r2 = 2.0 / (omega * s2 + math.sqrt((omega * s2) ** 2 + 4.0 * quad))
    return math.sqrt(r2)


def alpha_beta(d, spec=None, *, full_output=False):
    """The constants ``alpha_d`` and ``beta_d``.

    ``alpha_d = 2 int_0^1 (1+t)^{-d/2} t^{d/2-1} dt`` and
    ``beta_d = 2 int_1^inf ((r^2+1)^{-d/2} - r^{-d}) r^{d-1} dr``.

    Returns
    -------
    (alpha, beta) : floats, or Estimates when ``full_output`` is set.
    """
    spec = DEFAULT_SPEC if spec is None else spec
    if int(d) != d or d < 3:
        raise ValueError("d must be an integer >= 3")
    half = 0.5 * d
    alpha = integrate_finite(lambda t: (1.0 + t) ** -half * t ** (half - 1.0), 0.0, 1.0, spec, singular="left")
    # ((r^2+1)^{-d/2} - r^{-d}) r^{d-1} = expm1(-(d/2) log1p(r^-2)) / r ~ -(d/2) r^-3
    beta = integrate_semi_infinite(
        lambda r: np.expm1(-half * np.log1p(r**-2.0)) / r, spec, tail=TailBound.power(3.0), lower=1.0
    )
    alpha = Estimate(2.0 * alpha.value, 2.0 * alpha.error)
    beta = Estimate(2.0 * beta.value, 2.0 * beta.error)
    if full_output:
        return alpha, beta
    return alpha.value, beta.value


def half_exponent_beta_partial_sums(d, panels=10, spec=None):
    """Partial integrals of ``2 ((r^2+1)^{-1/2} - r^{-d}) r^{d-1}`` over ``[1, 2^k]``.

    With the exponent ``-1/2`` the integrand grows like ``r^{d-2}``, so the
    partial sums diverge; the returned list makes that visible.

    Returns
    -------
    list of (radius, partial_sum)
    """
    spec = DEFAULT_SPEC if spec is None else spec

    def integrand(r):
        return 2.0 * ((r * r + 1.0) ** -0.5 - r ** (-float(d))) * r ** (d - 1.0)

    out, total = [], []
    for k in range(int(panels)):
        lo, hi = 2.0**k, 2.0 ** (k + 1)
        total.append(integrate_finite(integrand, lo, hi, spec).value)
        out.append((hi, math.fsum(total)))
    return out


# ---------------------------------------------------------------------------
# Correctors
# ---------------------------------------------------------------------------


def _term(name, compute):
    try:
        return compute()
    except QuadratureError as exc:
        raise QuadratureError(f"{name}: {exc}", exc.value, exc.error) from exc


def _late_tail(model, rho2, split):
    # M(t) F(t) / t <= M(t) / rho^2 beyond the split
    if model.kind == "harmonic":
        d = model.dimension
        return TailBound.exponential(d, 2.0 ** (0.5 * d) / rho2)
    return TailBound.exponential(model.mass**2, 1.0 / rho2)


def corrector_K(x, model, spec=None, *, full_output=False):
    """The corrector ``K(x)`` of the pointwise formula.

    Every spatial integral reduces to the kernel mass ``M`` and the ball
    fraction ``F``; the four time integrals are then one-dimensional.

    Returns
    -------
    float
        Or ``(Estimate, terms)`` with ``terms`` a dict of per-term Estimates.

    Raises
    ------
    QuadratureError
        Naming the term that failed.
    """
    _require_potential(model, "constant_mass", "harmonic")
    spec = DEFAULT_SPEC if spec is None else spec
    d = model.dimension
    s = _norm(x, d)
    rho = critical_radius(x, model)
    rho2 = rho * rho

    def early(t):
        return _mass_defect(t, s, model) / t

    def outer(t):
        return -kernel_mass(t, s, model) * ball_fraction(t, s, model)[1] / t

    def late(t):
        return kernel_mass(t, s, model) * ball_fraction(t, s, model)[0] / t

    terms = {
        "log_rho": Estimate(2.0 * math.log(rho), 0.0),
        "mass_defect": _term("mass_defect", lambda: integrate_finite(early, 0.0, rho2, spec)),
        "outside_ball": _term("outside_ball", lambda: integrate_finite(outer, 0.0, rho2, spec)),
        "late_inside_ball": _term(
            "late_inside_ball",
            lambda: integrate_semi_infinite(late, spec, tail=_late_tail(model, rho2, spec.split_point), lower=rho2),
        ),
        "gamma": Estimate(EULER_GAMMA, 0.0),
    }
    est = Estimate(math.fsum(e.value for e in terms.values()), math.fsum(e.error for e in terms.values()))
    if full_output:
        return est, terms
    return est.value


def double_integral(x, model, spec=None, *, full_output=False):
    """``int_{B(x,1)} int_0^inf (T_u^V(x,y) - T_u(x-y)) / u du dy``.

    The free ball mass is ``P(d/2, 1/(4u))``, so the integrand is
    ``(M F - P) / u = ((M - 1) F + (Q - (1 - F))) / u`` with ``Q = 1 - P``.
    """
    _require_potential(model, "constant_mass", "harmonic")
    spec = DEFAULT_SPEC if spec is None else spec
    d = model.dimension
    s = _norm(x, d)
    half = 0.5 * d

    def integrand(u):
        inside, outside = ball_fraction(u, s, model)
        free_out = regularized_gamma_q(half, 1.0 / (4.0 * u))
        if model.kind == "constant_mass":
            shape = 0.0
        else:
            shape = free_out - outside
        return (_mass_defect(u, s, model) * inside + shape) / u

    est = _term(
        "double_integral", lambda: integrate_semi_infinite(integrand, spec, tail=TailBound.power(half + 1.0))
    )
    return est if full_output else est.value


def corrector_h(x, model, spec=None, *, full_output=False):
    """The boundary corrector ``h(x) = K(x) - D(x) - alpha_d / 2 - beta_d``.

    ``D`` is :func:`double_integral`.  The constant ``alpha_d`` enters with
    weight one half; with full weight the extension formula is off by
    ``alpha_d / 2`` (see the README).
    """
    k_est = corrector_K(x, model, spec, full_output=True)[0]
    d_est = double_integral(x, model, spec, full_output=True)
    alpha, beta = alpha_beta(model.dimension, spec, full_output=True)
    value = math.fsum([k_est.value, -d_est.value, -0.5 * alpha.value, -beta.value])
    error = math.fsum([k_est.error, d_est.error, 0.5 * alpha.error, beta.error])
    est = Estimate(value, error)
    return est if full_output else est.value


@dataclass(frozen=True)
class CorrectorValues:
    """Correctors at one point.

    Attributes
    ----------
    point : tuple of float
    rho : float
    K_of_x, h_of_x : float
    alpha_d, beta_d : float
    double_integral : float
    errors : dict
        Quadrature error estimates keyed by the field names above.
    """

    point: tuple
    rho: float
    K_of_x: float
    h_of_x: float
    alpha_d: float
    beta_d: float
    double_integral: float
    errors: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")

    @property
    def x_norm(self):
        return float(np.linalg.norm(self.point))


def correctors(x, model, spec=None):
    """Evaluate every corrector at ``x`` and collect them."""
    spec = DEFAULT_SPEC if spec is None else spec
    point = tuple(float(c) for c in _as_point(x, model.dimension))
    k_est = corrector_K(point, model, spec, full_output=True)[0]
    d_est = double_integral(point, model, spec, full_output=True)
    alpha, beta = alpha_beta(model.dimension, spec, full_output=True)
    h_value = math.fsum([k_est.value, -d_est.value, -0.5 * alpha.value, -beta.value])
    h_error = math.fsum([k_est.error, d_est.error, 0.5 * alpha.error, beta.error])
    return CorrectorValues(
        point=point,
        rho=critical_radius(point, model),
        K_of_x=k_est.value,
        h_of_x=h_value,
        alpha_d=alpha.value,
        beta_d=beta.value,
        double_integral=d_est.value,
        errors={
            "K_of_x": k_est.error,
            "h_of_x": h_error,
            "alpha_d": alpha.error,
            "beta_d": beta.error,
            "double_integral": d_est.error,
        },
    )


# ---------------------------------------------------------------------------
# The operator
# ---------------------------------------------------------------------------


def _constant_mass_kernel(r, m, d):
    """``int_0^inf e^{-m^2 t} (4 pi t)^{-d/2} e^{-r^2/4t} dt / t``, odd ``d``.

    Equals ``2 (4 pi)^{-d/2} (2m/r)^{d/2} K_{d/2}(m r)``.
    """
    r = np.asarray(r, dtype=float)
    return 2.0 * (4.0 * math.pi) ** (-0.5 * d) * (2.0 * m / r) ** (0.5 * d) * half_integer_bessel_k(d, m * r)


def _pointwise_polar(f, s, model, spec):
    m = model.mass
    area = _sphere_area(3)

    def near(r):
        return area * f.spherical_mean_defect(s, r) * _constant_mass_kernel(r, m, 3) * r * r

    def far(r):
        return area * (f.spherical_mean_defect(s, r) + f.radial(s)) * _constant_mass_kernel(r, m, 3) * r * r

    inner = _term("inside_ball", lambda: integrate_finite(near, 0.0, 1.0, spec, singular="left"))
    # far integrand decays like a Gaussian; the power map integrates it without truncation
    outer = _term("outside_ball", lambda: integrate_semi_infinite(far, spec, tail=TailBound.power(2.0), lower=1.0))
    return Estimate(-inner.value - outer.value, inner.error + outer.error)


def _pointwise_time(f, s, model, spec):
    # Fubini: int_B (f(y)-f(x)) T dy + int_{B^c} f T dy = T_t f(x) - f(x) M F
    fx = float(f.radial(s))

    def integrand(t):
        outside = ball_fraction(t, s, model)[1]
        return (_semigroup_defect(f, s, t, model) + fx * kernel_mass(t, s, model) * outside) / t

    if model.kind == "harmonic":
        tail = TailBound.exponential(model.dimension, 2.0 * abs(f.amplitude) * 2.0 ** (0.5 * model.dimension))
    else:
        tail = TailBound.exponential(model.mass**2, 2.0 * abs(f.amplitude) / spec.split_point)
    est = _term("time_integral", lambda: integrate_semi_infinite(integrand, spec, tail=tail))
    return Estimate(-est.value, est.error)


def log_LV_pointwise(f, x, model, spec=None, *, method=None, full_output=False):
    """Pointwise value of ``log(-Delta + V) f`` at ``x``.

    Parameters
    ----------
    f : RadialProfile
    x : array_like
        Point in ``R^d`` (a scalar is read as ``(x, 0, ..., 0)``).
    model : PotentialModel
        ``constant_mass`` or ``harmonic``.
    spec : QuadratureSpec, optional
    method : {"polar", "time"}, optional
        ``"polar"`` integrates in polar coordinates around ``x`` with the
        closed-form kernel ``k(|x-y|)`` (constant mass, ``d = 3``).
        ``"time"`` exchanges the order of integration, which reduces the
        spatial integrals to ``T_t^V f(x)`` and the ball mass.  The default
        is ``"polar"`` when available.
    full_output : bool
        Return an :class:`Estimate`.
    """
    _require_potential(model, "constant_mass", "harmonic")
    spec = DEFAULT_SPEC if spec is None else spec
    d = model.dimension
    s = _norm(x, d)
    if method is None:
        method = "polar" if model.kind == "constant_mass" and d == 3 else "time"
    if f.amplitude == 0.0:
        out = Estimate(0.0, 0.0)
        return out if full_output else out.value
    if method == "polar":
        if model.kind != "constant_mass" or d != 3:
            raise ValueError("the polar route needs a constant mass in dimension 3")
        body = _pointwise_polar(f, s, model, spec)
    elif method == "time":
        body = _pointwise_time(f, s, model, spec)
    else:
        raise ValueError(f"unknown method {method!r}")
    k_est = corrector_K(x, model, spec, full_output=True)[0]
    fx = float(f.radial(s))
    out = Estimate(body.value - fx * k_est.value, body.error + abs(fx) * k_est.error)
    return out if full_output else out.value


def semigroup_log_oracle(f, x, model, spec=None, *, full_output=False):
    """``log(L_V) f(x) = int_0^inf (e^{-t} f(x) - T_t^V f(x)) dt / t``.

    An independent check for both potentials, resting on
    ``log(lambda) = int_0^inf (e^{-t} - e^{-lambda t}) dt / t``.
    """
    _require_potential(model, "constant_mass", "harmonic")
    spec = DEFAULT_SPEC if spec is None else spec
    s = _norm(x, model.dimension)
    fx = float(f.radial(s))

    def integrand(t):
        # e^{-t} f - T f = f (e^{-t} - M) - (T f - f M)
        shift = fx * (np.exp(-t) - kernel_mass(t, s, model))
        return (shift - _semigroup_defect(f, s, t, model)) / t

    rate = min(1.0, model.dimension if model.kind == "harmonic" else model.mass**2)
    bound = 2.0 * abs(f.amplitude) * 2.0 ** (0.5 * model.dimension)
    est = integrate_semi_infinite(integrand, spec, tail=TailBound.exponential(rate, bound))
    return est if full_output else est.value


def _radial_fourier(f, s, multiplier, spec, tail_rate=2.0):
    """``(2 pi)^{-3} int multiplier(|xi|) fhat(xi) e^{i xi x} dxi`` in ``d = 3``."""

    def integrand(k):
        return 4.0 * math.pi * multiplier(k) * f.fourier_radial(k, 3) * np.sinc(k * s / math.pi) * k * k

    est = integrate_semi_infinite(integrand, spec, tail=TailBound.power(tail_rate))
    scale = (2.0 * math.pi) ** -3
    return Estimate(scale * est.value, scale * est.error)


def spectral_oracle_constant(f, x, m, d=3, spec=None, *, full_output=False):
    """``(2 pi)^{-d} int log(|xi|^2 + m^2) fhat(xi) e^{i xi x} dxi`` for Gaussian ``f``, ``d = 3``."""
    if d != 3:
        raise ValueError("the spectral oracle is implemented for d = 3")
    if not isinstance(f, RadialProfile) or not f.is_gaussian:
        raise ValueError("the spectral oracle needs a Gaussian profile")
    if not m > 0:
        raise ValueError("m must be positive")
    spec = DEFAULT_SPEC if spec is None else spec
    s = _norm(x, 3)
    est = _radial_fourier(f, s, lambda k: np.log(k * k + m * m), spec)
    return est if full_output else est.value


def small_s_limit_cont(f, x, m, s_grid=DEFAULT_S_GRID, spec=None, *, window=None):
    """Extrapolate ``(((-Delta + m^2)^s f - f) / s)(x)`` to ``s -> 0+`` in ``d = 3``.

    The symbol ``expm1(s log(|xi|^2 + m^2)) / s`` is entire in ``s``, so the
    error model is a power series in ``s`` with unit exponent.

    Returns
    -------
    ConvergenceReport
    """
    grid = [float(v) for v in s_grid]
    if len(grid) < 3:
        raise ValueError("small_s_limit_cont needs at least 3 values of s")
    if any(not 0.0 < v <= 0.5 for v in grid):
        raise ValueError("s values must lie in (0, 1/2]")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("s_grid must be strictly decreasing")
    if not m > 0:
        raise ValueError("m must be positive")
    spec = DEFAULT_SPEC if spec is None else spec
    sx = _norm(x, 3)
    samples, noise = [], 0.0
    for sv in grid:
        est = _radial_fourier(f, sx, lambda k, sv=sv: np.expm1(sv * np.log(k * k + m * m)) / sv, spec)
        samples.append((sv, est.value))
        noise = max(noise, est.error)
    return richardson_limit(samples, "power", order=1.0, window=window, noise=max(noise, 1e-15))


# ---------------------------------------------------------------------------
# Extension
# ---------------------------------------------------------------------------


def extension_u_cont(f, x, t, model, spec=None, method="subordination", *, full_output=False):
    """``u_f(x, t) = (1/2) int_0^inf T_u^V f(x) e^{-t^2/4u} du / u``.

    Parameters
    ----------
    method : {"subordination", "multiplier"}
        The multiplier form ``(2 pi)^{-3} int K_0(t sqrt(|xi|^2 + m^2)) fhat``
        is available for free and constant-mass models in ``d = 3``.
    """
    spec = DEFAULT_SPEC if spec is None else spec
    t = float(t)
    if not t > 0:
        raise ValueError("t must be positive")
    s = _norm(x, model.dimension)
    if method == "subordination":
        trace = lambda u: semigroup_on_profile(f, s, u, model)  # noqa: E731
        est = subordinate(trace, abs(f.amplitude), t, "u", spec, 0.5 * model.dimension)
        est = Estimate(0.5 * est.value, 0.5 * est.error)
    elif method == "multiplier":
        if model.kind == "harmonic" or model.dimension != 3:
            raise ValueError("the multiplier form needs a free or constant-mass model in d = 3")
        if f.amplitude == 0.0:
            est = Estimate(0.0, 0.0)
        else:
            m2 = model.mass**2
            est = _radial_fourier(f, s, lambda k: special.k0(t * np.sqrt(k * k + m2)), spec)
    else:
        raise ValueError(f"unknown method {method!r}")
    return est if full_output else est.value


def extension_dt_cont(f, x, t, model, spec=None, *, full_output=False):
    """``d/dt u_f(x, t)`` by differentiating the subordination kernel."""
    spec = DEFAULT_SPEC if spec is None else spec
    s = _norm(x, model.dimension)
    trace = lambda u: semigroup_on_profile(f, s, u, model)  # noqa: E731
    est = subordinate(trace, abs(f.amplitude), float(t), "dt", spec, 0.5 * model.dimension)
    est = Estimate(0.5 * est.value, 0.5 * est.error)
    return est if full_output else est.value


def theorem11_limits(f, x, model, t_grid=DEFAULT_T_GRID, spec=None):
    """Boundary behaviour of the extension as ``t -> 0+``.

    Returns
    -------
    flux : ConvergenceReport
        Limit of ``t u_t``, which equals ``-f(x)``.
    log_ratio : ConvergenceReport
        Limit of ``u / log t``, which equals ``-f(x)``; obtained by fitting
        ``u = L log t + B + t^2 (c1 log t + c2) + ...``.
    log_value : Estimate
        ``-2 lim (u + f(x) log t) - f(x) h(x)``, the operator at ``x``.

    Notes
    -----
    For analytic data the semigroup term ``T_u^V f(x)`` is smooth in ``u``,
    and subordinating it against ``e^{-t^2/4u}/u`` produces corrections in
    ``t^{2k}`` and ``t^{2k} log t``; all fits use the exponent 2.
    """
    _require_potential(model, "constant_mass", "harmonic")
    spec = DEFAULT_SPEC if spec is None else spec
    grid = [float(t) for t in t_grid]
    if len(grid) < 4:
        raise ValueError("t_grid needs at least 4 points")
    if any(not 0.0 < t < 1.0 for t in grid) or any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("t_grid must be strictly decreasing inside (0, 1)")
    fx = float(f.radial(_norm(x, model.dimension)))
    flux, values, shifted = [], [], []
    noise_flux = noise_u = 0.0
    for t in grid:
        u = extension_u_cont(f, x, t, model, spec, full_output=True)
        du = extension_dt_cont(f, x, t, model, spec, full_output=True)
        flux.append((t, t * du.value))
        values.append((t, u.value))
        shifted.append((t, u.value + fx * math.log(t)))
        noise_flux = max(noise_flux, t * du.error)
        noise_u = max(noise_u, u.error)
    flux_report = richardson_limit(flux, "power_plus_log", order=2.0, noise=max(noise_flux, 1e-15))
    ratio_report = richardson_limit(values, "log_divergent", order=2.0, noise=max(noise_u, 1e-15))
    shifted_report = richardson_limit(shifted, "power_plus_log", order=2.0, noise=max(noise_u, 1e-15))
    h_est = corrector_h(x, model, spec, full_output=True)
    value = -2.0 * shifted_report.extrapolated_limit - fx * h_est.value
    error = 2.0 * shifted_report.error_estimate + abs(fx) * h_est.error
    return flux_report, ratio_report, Estimate(value, error)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def corrector_table_csv(values):
    """CSV with columns ``x_norm,rho,K,h``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x_norm", "rho", "K", "h"])
    for v in values:
        writer.writerow([repr(v.x_norm), repr(v.rho), repr(v.K_of_x), repr(v.h_of_x)])
    return buf.getvalue()


def operator_table_csv(rows):
    """CSV with columns ``x_norm,log_pointwise,log_extension,log_spectral``.

    Parameters
    ----------
    rows : iterable of 4-tuples of float
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x_norm", "log_pointwise", "log_extension", "log_spectral"])
    for row in rows:
        writer.writerow([repr(float(c)) for c in row])
    return buf.getvalue()

"""Special functions behind the heat kernels and renormalization constants.

All routines work in double precision.  The scaled Bessel function is the
workhorse of the lattice heat kernel, so it is vectorized over the argument;
the remaining functions accept scalars or arrays.

Notes
-----
``bessel_i_scaled`` uses three regimes:

* ascending power series with compensated summation for
  ``x <= 2 * max(10, order)``,
* the Hankel asymptotic expansion once ``x >= order**2`` as well,
* Miller's backward recurrence in between, normalized with the
  generating-function identity ``I_0 + 2 * sum_k I_k = e^x``.
"""

import math

import numpy as np

__all__ = [
    "EULER_GAMMA",
    "bessel_i_scaled",
    "euler_gamma",
    "exp_integral_e1",
    "half_integer_bessel_k",
    "regularized_gamma_p",
    "regularized_gamma_q",
]

EULER_GAMMA = 0.5772156649015329

_EPS = np.finfo(float).eps
_RESCALE = 1e250


def euler_gamma():
    """Return the Euler-Mascheroni constant."""
    return EULER_GAMMA


# ---------------------------------------------------------------------------
# Modified Bessel function of the first kind, exponentially scaled
# ---------------------------------------------------------------------------


def _neumaier(total, comp, term):
    new = total + term
    big = np.abs(total) >= np.abs(term)
    comp = comp + np.where(big, (total - new) + term, (term - new) + total)
    return new, comp


def _i_scaled_series(n, x):
    """Power series for e^{-x} I_n(x); all terms are positive."""
    q = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    comp = np.zeros_like(x)
    shift = np.zeros_like(x)  # log of the factor removed by rescaling
    k = 0
    while True:
        term = term * q / ((k + 1.0) * (k + n + 1.0))
        total, comp = _neumaier(total, comp, term)
        big = total > _RESCALE
        if big.any():
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            term, total, comp = term * scale, total * scale, comp * scale
            shift = shift + np.where(big, math.log(_RESCALE), 0.0)
        k += 1
        if np.all(term <= 1e-17 * total) or k > 100000:
            break
    # (x/2)^n / n! as a running product keeps the rounding error near n*eps;
    # the log form covers what the product cannot represent
    if n == 0:
        pref = np.exp(-x)
    else:
        damp = np.exp(-x / n) if x.max() > 650.0 else None
        pref = np.exp(-x) if damp is None else np.ones_like(x)
        for j in range(1, n + 1):
            pref = pref * (0.5 * x / j)
            if damp is not None:
                pref = pref * damp
    bad = ~(pref > 1e-290) | (shift > 0)
    if bad.any():
        xb = x[bad]
        log_pref = -xb + n * np.log(0.5 * xb) - math.lgamma(n + 1.0)
        pref[bad] = 1.0
        total[bad] = np.exp(np.log(total[bad] + comp[bad]) + shift[bad] + log_pref)
        comp[bad] = 0.0
    return pref * (total + comp)


def _i_scaled_hankel(n, x):
    """Large-argument expansion (2 pi x)^{-1/2} sum (-1)^k a_k(n) / x^k."""
    mu = 4.0 * n * n
    term = np.ones_like(x)
    total = np.ones_like(x)
    comp = np.zeros_like(x)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 200):
        new_term = -term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        # stop each element once terms are negligible or start to grow
        grow = np.abs(new_term) > np.abs(term)
        active &= ~grow
        step = np.where(active, new_term, 0.0)
        total, comp = _neumaier(total, comp, step)
        active &= np.abs(new_term) > 1e-17 * np.abs(total)
        term = new_term
        if not active.any():
            break
    return (total + comp) / np.sqrt(2.0 * np.pi * x)


def _i_scaled_miller(n, x):
    """Backward recurrence b_{k-1} = b_{k+1} + (2k/x) b_k from a deep start."""
    start = n + int(10.0 * math.sqrt(float(x.max()))) + 40
    b_next = np.zeros_like(x)
    b_cur = np.full_like(x, 1e-30)
    b_n = np.zeros_like(x)
    total = np.zeros_like(x)  # accumulates 2 * sum_{k>=1} b_k
    for k in range(start, 0, -1):
        if k == n:
            b_n = b_cur.copy()
        total = total + 2.0 * b_cur
        b_prev = b_next + (2.0 * k / x) * b_cur
        b_next, b_cur = b_cur, b_prev
        big = b_cur > _RESCALE
        if big.any():
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            b_cur *= scale
            b_next *= scale
            b_n *= scale
            total *= scale
    if n == 0:
        b_n = b_cur
    return b_n / (total + b_cur)


def bessel_i_scaled(order, x):
    """Exponentially scaled modified Bessel function ``e^{-x} I_order(x)``.

    Parameters
    ----------
    order : int
        Nonnegative integer order.
    x : float or array_like
        Nonnegative argument(s).

    Returns
    -------
    float or ndarray
        Values in ``[0, 1]``, with the shape of ``x``.

    Raises
    ------
    ValueError
        If ``order`` is negative or not integral, or any ``x < 0``.
    """
    if int(order) != order or order < 0:
        raise ValueError(f"order must be a nonnegative integer, got {order!r}")
    n = int(order)
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("bessel_i_scaled requires x >= 0")
    out = np.empty_like(arr)

    zero = arr == 0.0
    out[zero] = 1.0 if n == 0 else 0.0
    switch = 2.0 * max(10, n)
    series = (~zero) & (arr <= switch)
    hankel = (arr > switch) & (arr >= n * n)
    miller = (arr > switch) & ~hankel
    if series.any():
        out[series] = _i_scaled_series(n, arr[series])
    if hankel.any():
        out[hankel] = _i_scaled_hankel(n, arr[hankel])
    if miller.any():
        out[miller] = _i_scaled_miller(n, arr[miller])
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Modified Bessel function of the second kind at half-integer order
# ---------------------------------------------------------------------------


def half_integer_bessel_k(two_nu, z):
    """``K_nu(z)`` for half-integer ``nu = two_nu / 2`` in elementary form.

    Uses ``K_{1/2}(z) = sqrt(pi / 2z) e^{-z}`` and the upward recurrence
    ``K_{nu+1} = K_{nu-1} + (2 nu / z) K_nu``, which is stable for K.

    Parameters
    ----------
    two_nu : int
        Odd positive integer, twice the order.
    z : float or array_like
        Positive argument(s).
    """
    if two_nu % 2 != 1 or two_nu < 1:
        raise ValueError("two_nu must be an odd positive integer")
    z = np.asarray(z, dtype=float)
    k_prev = np.sqrt(np.pi / (2.0 * z)) * np.exp(-z)  # K_{-1/2} = K_{1/2}
    k_cur = k_prev.copy()
    nu = 0.5
    while 2 * nu < two_nu:
        k_prev, k_cur = k_cur, k_prev + (2.0 * nu / z) * k_cur
        nu += 1.0
    return k_cur


# ---------------------------------------------------------------------------
# Exponential integral
# ---------------------------------------------------------------------------


def _e1_series(x):
    terms = [-EULER_GAMMA, -math.log(x)]
    term = 1.0
    for k in range(1, 200):
        term *= -x / k
        terms.append(-term / k)
        if abs(term) < 1e-18:
            break
    return math.fsum(terms)


def _e1_continued_fraction(x):
    # modified Lentz evaluation of e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    else:
        raise ArithmeticError(f"E1 continued fraction did not converge at x={x}")
    return h * math.exp(-x)


def exp_integral_e1(x):
    """Exponential integral ``E_1(x) = int_x^inf e^{-v} / v dv`` for ``x > 0``.

    Parameters
    ----------
    x : float or array_like
        Positive argument(s).

    Returns
    -------
    float or ndarray
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("exp_integral_e1 requires x > 0")
    flat = [(_e1_series(v) if v <= 1.0 else _e1_continued_fraction(v)) for v in arr.ravel()]
    if arr.ndim == 0:
        return flat[0]
    return np.array(flat).reshape(arr.shape)


# ---------------------------------------------------------------------------
# Regularized incomplete gamma functions
# ---------------------------------------------------------------------------


def _gamma_pq(a, x):
    a, x = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    if np.any(~(a > 0)):
        raise ValueError("regularized gamma requires a > 0")
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("regularized gamma requires x >= 0")
    a = np.atleast_1d(a).astype(float)
    x = np.atleast_1d(x).astype(float)
    p = np.zeros_like(x)
    q = np.ones_like(x)
    lgam = np.vectorize(math.lgamma, otypes=[float])(a)

    use_series = (x > 0) & (x < a + 1.0)
    if use_series.any():
        aa, xx = a[use_series], x[use_series]
        ap = aa.copy()
        term = 1.0 / aa
        total = term.copy()
        for _ in range(2000):
            ap = ap + 1.0
            term = term * xx / ap
            total = total + term
            if np.all(np.abs(term) < np.abs(total) * 1e-17):
                break
        val = total * np.exp(-xx + aa * np.log(xx) - lgam[use_series])
        p[use_series] = val
        q[use_series] = 1.0 - val

    use_cf = x >= a + 1.0
    if use_cf.any():
        aa, xx = a[use_cf], x[use_cf]
        tiny = 1e-300
        b = xx + 1.0 - aa
        c = np.full_like(xx, 1.0 / tiny)
        d = 1.0 / b
        h = d.copy()
        for i in range(1, 2000):
            an = -i * (i - aa)
            b = b + 2.0
            d = an * d + b
            d = np.where(np.abs(d) < tiny, tiny, d)
            c = b + an / c
            c = np.where(np.abs(c) < tiny, tiny, c)
            d = 1.0 / d
            delta = d * c
            h = h * delta
            if np.all(np.abs(delta - 1.0) < 1e-16):
                break
        val = np.exp(-xx + aa * np.log(xx) - lgam[use_cf]) * h
        q[use_cf] = val
        p[use_cf] = 1.0 - val
    return p, q


def regularized_gamma_p(a, x):
    """Lower regularized incomplete gamma ``P(a, x) = gamma(a, x) / Gamma(a)``.

    Parameters
    ----------
    a : float or array_like
        Shape, ``a > 0``.
    x : float or array_like
        Argument, ``x >= 0``.

    Returns
    -------
    float or ndarray
        Values in ``[0, 1]``.
    """
    p, _ = _gamma_pq(a, x)
    return float(p[0]) if np.ndim(a) == 0 and np.ndim(x) == 0 else p


def regularized_gamma_q(a, x):
    """Upper regularized incomplete gamma ``Q(a, x) = 1 - P(a, x)``.

    Computed directly in the regime where ``Q`` is small, so no cancellation
    occurs there.
    """
    _, q = _gamma_pq(a, x)
    return float(q[0]) if np.ndim(a) == 0 and np.ndim(x) == 0 else q

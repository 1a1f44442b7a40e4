"""Heat semigroup of the simple random walk on the integers."""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .quadrature import DEFAULT_SPEC
from .special_functions import bessel_i_scaled

__all__ = [
    "HeatKernelSample",
    "LatticeFunction",
    "heat_apply",
    "heat_kernel",
    "heat_kernel_small_time_bound",
    "heat_kernel_large_time_bound",
    "heat_tail_bound",
    "heat_window",
]


@dataclass(frozen=True, eq=False)
class LatticeFunction:
    """Finitely supported sequence ``f: Z -> R``.

    Parameters
    ----------
    offset : int
        Index of ``values[0]``.
    values : sequence of float
        Stored window; entries outside it are zero.

    Notes
    -----
    Equality ignores zero padding, so ``LatticeFunction(0, [1])`` equals
    ``LatticeFunction(-1, [0, 1, 0])``.
    """

    offset: int
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in np.ravel(np.asarray(self.values, dtype=float)))
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("lattice function values must be finite")
        if int(self.offset) != self.offset:
            raise ValueError("offset must be an integer")
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "values", vals)

    # construction helpers ------------------------------------------------

    @classmethod
    def delta(cls, site=0, weight=1.0):
        """``weight`` times the indicator of ``site``."""
        return cls(site, (weight,))

    @classmethod
    def from_mapping(cls, entries):
        """Build from ``{index: value}``."""
        if not entries:
            return cls(0, ())
        lo, hi = min(entries), max(entries)
        return cls(lo, tuple(float(entries.get(k, 0.0)) for k in range(lo, hi + 1)))

    @classmethod
    def zero(cls):
        return cls(0, ())

    # views ------------------------------------------------------------------

    def support(self):
        """Indices with nonzero value, ascending."""
        return [self.offset + i for i, v in enumerate(self.values) if v != 0.0]

    def items(self):
        """``(index, value)`` pairs over the nonzero entries."""
        return [(self.offset + i, v) for i, v in enumerate(self.values) if v != 0.0]

    def __call__(self, n):
        i = int(n) - self.offset
        if 0 <= i < len(self.values):
            return self.values[i]
        return 0.0

    def __eq__(self, other):
        if not isinstance(other, LatticeFunction):
            return NotImplemented
        return dict(self.items()) == dict(other.items())

    def __hash__(self):
        return hash(tuple(self.items()))

    def __add__(self, other):
        out = dict(self.items())
        for k, v in other.items():
            out[k] = out.get(k, 0.0) + v
        return LatticeFunction.from_mapping(out)

    def __mul__(self, scalar):
        return LatticeFunction(self.offset, tuple(scalar * v for v in self.values))

    __rmul__ = __mul__

    def shift(self, k):
        """Translate so that ``g(n) = f(n - k)``."""
        return LatticeFunction(self.offset + int(k), self.values)

    def reflect(self):
        """``g(n) = f(-n)``."""
        return LatticeFunction(-(self.offset + len(self.values) - 1), self.values[::-1])

    # serialization ------------------------------------------------------------

    def to_csv(self):
        """One ``index,value`` line per stored entry, with a header row."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "value"])
        for i, v in enumerate(self.values):
            writer.writerow([self.offset + i, repr(v)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        if rows and rows[0] and rows[0][0].strip() == "index":
            rows = rows[1:]
        entries = {}
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"line {lineno}: expected 'index,value'")
            entries[int(row[0])] = float(row[1])
        return cls.from_mapping(entries)


@dataclass(frozen=True)
class HeatKernelSample:
    """One evaluation ``p_time(lag)``."""

    time: float
    lag: int
    value: float

    @classmethod
    def at(cls, time, lag):
        return cls(float(time), int(lag), float(heat_kernel(time, lag)))


def heat_kernel(t, m):
    """Lattice heat kernel ``p_t(m) = e^{-2t} I_|m|(2t)``.

    Parameters
    ----------
    t : float or array_like
        Positive time(s).
    m : int
        Lag.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("heat_kernel requires t > 0")
    return bessel_i_scaled(abs(int(m)), 2.0 * arr)


def heat_kernel_small_time_bound(t, m):
    """Upper bound ``2 t^|m| / sqrt(1 + |m|)`` valid for ``0 < t <= 1``."""
    k = abs(int(m))
    return 2.0 * np.asarray(t, dtype=float) ** k / math.sqrt(1.0 + k)


def heat_kernel_large_time_bound(t, m, constant=1.0):
    """Bound ``C t^{-1/4} / sqrt(1 + |m|)`` for ``t >= 1``."""
    k = abs(int(m))
    return constant * np.asarray(t, dtype=float) ** -0.25 / math.sqrt(1.0 + k)


def _kernel_by_lag(t, lags):
    return {k: heat_kernel(t, k) for k in sorted(set(abs(int(j)) for j in lags))}


def heat_tail_bound(t, radius):
    """Bound on ``sum_{|k| > radius} p_t(k)``.

    From ``I_k(x) <= (x/2)^k I_0(x) / k!`` one gets ``p_t(k) <= t^|k| / |k|!``,
    and the tail of that series is dominated by a geometric sum once
    ``radius + 2 > t``.
    """
    k = int(radius) + 1
    if k + 1 <= t:
        return math.inf
    first = math.exp(k * math.log(t) - math.lgamma(k + 1.0)) if t > 0 else 0.0
    return 2.0 * first / (1.0 - t / (k + 1.0))


def heat_window(f, t, target):
    """Smallest window around the support of ``f`` whose neglected mass is below ``target``."""
    support = f.support()
    if not support:
        return (0, 0)
    mass = math.fsum(abs(v) for _, v in f.items())
    radius = 0
    while heat_tail_bound(t, radius) * mass > target:
        radius += 1
    return (support[0] - radius, support[-1] + radius)


def heat_apply(f, t, window=None, spec=None):
    """Convolve ``f`` with ``p_t`` and restrict to an integer window.

    The sum is exact because ``f`` has finite support.

    Parameters
    ----------
    f : LatticeFunction
    t : float or ndarray
        Time.  An array yields one output row per time, which is how the
        subordination integrals evaluate many quadrature nodes at once.
    window : (int, int), optional
        Inclusive index range ``(lo, hi)`` of the output.  When omitted (scalar
        ``t`` only) the window grows until the mass left outside is below
        ``spec.abs_tol / 10``.
    spec : QuadratureSpec, optional
        Supplies the tolerance for the automatic window.

    Returns
    -------
    LatticeFunction or ndarray
        A lattice function for scalar ``t``; otherwise an array of shape
        ``(len(t), hi - lo + 1)``.
    """
    if window is None:
        if np.ndim(t) != 0:
            raise ValueError("an explicit window is required for an array of times")
        if not t > 0:
            raise ValueError("heat_apply requires t > 0")
        spec = DEFAULT_SPEC if spec is None else spec
        window = heat_window(f, float(t), 0.1 * spec.abs_tol)
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ValueError("window must satisfy lo <= hi")
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(~(times > 0)):
        raise ValueError("heat_apply requires t > 0")
    sites = np.arange(lo, hi + 1)
    out = np.zeros((times.size, sites.size))
    entries = f.items()
    lags = {n - m for n in sites for m, _ in entries}
    kern = _kernel_by_lag(times, lags)
    for col, n in enumerate(sites):
        # sum in a fixed order for reproducibility
        for m, value in entries:
            out[:, col] += value * kern[abs(n - m)]
    if np.ndim(t) == 0:
        return LatticeFunction(lo, tuple(out[0]))
    return out

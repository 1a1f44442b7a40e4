"""Study configuration, execution and report emission.

A study is described by a flat ``key = value`` file and/or command-line
flags (flags win).  Running a study produces a :class:`Report` whose CSV form
is a plain table and whose JSON form attaches an error estimate and a
provenance string to every number.
"""

import csv
import dataclasses
import io
import json
import math
import os
from dataclasses import dataclass, field

from .acceptance import CRITERIA, run_criteria
from .discrete_extension import boundary_limits, extension_dt, extension_u, log_via_extension, pde_residual
from .discrete_log import (
    cached_kernel_table,
    log_laplacian_pointwise,
    log_laplacian_spectral,
    required_max_lag,
    small_s_limit_check,
)
from .errors import ConfigError, ConvergenceError, LoglapError, QuadratureError
from .lattice_heat import LatticeFunction
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .schrodinger_log import (
    PotentialModel,
    RadialProfile,
    correctors,
    log_LV_pointwise,
    semigroup_log_oracle,
    small_s_limit_cont,
    spectral_oracle_constant,
    theorem11_limits,
)

__all__ = [
    "COMMANDS",
    "EXIT_CONFIG",
    "EXIT_NUMERICAL",
    "EXIT_OK",
    "Quantity",
    "Report",
    "StudyConfig",
    "build_config",
    "describe_error",
    "emit_report",
    "load_config_file",
    "parse_grid",
    "parse_lattice_input",
    "parse_points",
    "parse_potential",
    "parse_profile",
    "parse_sites",
    "run_study",
    "worker_count",
    "write_outputs",
]

COMMANDS = (
    "discrete-apply",
    "discrete-extension",
    "discrete-kernels",
    "schrodinger-apply",
    "schrodinger-correctors",
    "verify",
)

EXIT_OK = 0
EXIT_NUMERICAL = 2
EXIT_CONFIG = 3

_SPEC_KEYS = ("abs_tol", "rel_tol", "split_point", "max_subdivisions", "tail_cutoff_factor")

# keys accepted by each command besides the shared ones
_COMMAND_KEYS = {
    "discrete-apply": ("input", "sites", "s_grid"),
    "discrete-extension": ("input", "site", "t_grid", "summary"),
    "discrete-kernels": ("max_lag",),
    "schrodinger-apply": ("input", "potential", "dim", "x", "t_grid", "s_grid", "method"),
    "schrodinger-correctors": ("potential", "dim", "x"),
    "verify": ("only",),
}
_SHARED_KEYS = ("output", "format") + _SPEC_KEYS

_DEFAULTS = {
    "input": "delta:0",
    "sites": "-5..5",
    "site": "0",
    "t_grid": "geo:0.25,11",
    "max_lag": "10",
    "potential": "constant:m=1",
    "dim": "3",
    "x": "0",
    "format": "csv",
}


# ---------------------------------------------------------------------------
# Descriptor parsers
# ---------------------------------------------------------------------------


def _float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _int(text):
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"{text!r} is not an integer") from None


def parse_grid(text):
    """Parse ``geo:t0,n`` (``t0 / 2^k`` for ``k < n``) or ``list:v1;v2;...``.

    Returns
    -------
    tuple of float
        Strictly monotone and nonempty.
    """
    kind, sep, body = text.partition(":")
    if not sep:
        raise ValueError(f"grid {text!r} must start with 'geo:' or 'list:'")
    if kind == "geo":
        parts = body.split(",")
        if len(parts) != 2:
            raise ValueError("geo grid needs 'geo:t0,n'")
        start, count = _float(parts[0]), _int(parts[1])
        if start <= 0 or count < 1:
            raise ValueError("geo grid needs t0 > 0 and n >= 1")
        grid = tuple(start * 0.5**k for k in range(count))
    elif kind == "list":
        grid = tuple(_float(v) for v in body.split(";") if v.strip())
        if not grid:
            raise ValueError("list grid is empty")
    else:
        raise ValueError(f"unknown grid kind {kind!r}")
    steps = [b - a for a, b in zip(grid, grid[1:])]
    if not (all(s > 0 for s in steps) or all(s < 0 for s in steps)):
        raise ValueError("grid must be strictly monotone")
    return grid


def parse_sites(text):
    """Parse ``a..b`` (inclusive) or a comma-separated list of integers."""
    if ".." in text:
        lo, hi = (_int(p) for p in text.split("..", 1))
        if hi < lo:
            raise ValueError("site range must satisfy a <= b")
        return tuple(range(lo, hi + 1))
    sites = tuple(_int(p) for p in text.split(",") if p.strip())
    if not sites:
        raise ValueError("no sites given")
    return sites


def parse_lattice_input(text):
    """Parse ``delta:SITE``, ``coeffs:OFFSET:v1,v2,...`` or ``csv:PATH``.

    A CSV input holds ``site,value`` rows; a non-numeric first row is taken
    as a header.
    """
    kind, _, body = text.partition(":")
    if kind == "delta":
        return LatticeFunction.delta(_int(body))
    if kind == "coeffs":
        offset, sep, values = body.partition(":")
        if not sep:
            raise ValueError("coeffs input needs 'coeffs:OFFSET:v1,v2,...'")
        return LatticeFunction(_int(offset), tuple(_float(v) for v in values.split(",")))
    if kind == "csv":
        entries = {}
        with open(body, newline="") as handle:
            for i, row in enumerate(csv.reader(handle)):
                if not row:
                    continue
                if len(row) != 2:
                    raise ValueError(f"{body} row {i + 1}: expected 'site,value'")
                try:
                    site, value = _int(row[0].strip()), _float(row[1])
                except ValueError:
                    if i == 0:
                        continue
                    raise
                entries[site] = entries.get(site, 0.0) + value
        return LatticeFunction.from_mapping(entries)
    raise ValueError(f"unknown lattice input {text!r}")


def parse_profile(text):
    """Parse ``gaussian:A,a`` (``A exp(-a |y|^2)``) or ``zero``."""
    if text == "zero":
        return RadialProfile.zero()
    kind, _, body = text.partition(":")
    if kind != "gaussian":
        raise ValueError(f"unknown profile {text!r}; use 'gaussian:A,a'")
    parts = [p for p in body.split(",") if p.strip()]
    if not 1 <= len(parts) <= 2:
        raise ValueError("gaussian input needs 'gaussian:A' or 'gaussian:A,a'")
    return RadialProfile.gaussian(*(_float(p) for p in parts))


def parse_potential(text, dimension):
    """Parse ``constant:m=VALUE`` (or ``constant:VALUE``) or ``harmonic``."""
    kind, _, body = text.partition(":")
    if kind == "harmonic" and not body:
        return PotentialModel.harmonic(dimension)
    if kind == "constant":
        value = body.split("=", 1)[1] if body.startswith("m=") else body
        return PotentialModel.constant_mass(_float(value), dimension)
    raise ValueError(f"unknown potential {text!r}; use 'constant:m=VALUE' or 'harmonic'")


def parse_points(text, dimension):
    """Parse ``;``-separated points; a bare number ``r`` means ``(r, 0, ..., 0)``."""
    points = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        coords = [_float(c) for c in chunk.split(",")]
        if len(coords) == 1:
            coords = coords + [0.0] * (dimension - 1)
        if len(coords) != dimension:
            raise ValueError(f"point {chunk!r} has {len(coords)} coordinates, expected {dimension}")
        points.append(tuple(coords))
    if not points:
        raise ValueError("no points given")
    return tuple(points)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StudyConfig:
    """A validated study.

    Attributes
    ----------
    command : str
        One of :data:`COMMANDS`.
    setting : {"discrete", "schrodinger", "acceptance"}
    datum : LatticeFunction or RadialProfile or None
    potential : PotentialModel or None
    sites : tuple of int
    points : tuple of tuple of float
    t_grid, s_grid : tuple of float
        Decreasing; ``s_grid`` may be empty.
    max_lag : int
    method : str or None
    only : tuple of int or None
    spec : QuadratureSpec
    output, summary : str or None
    format : {"csv", "json"}
    raw : dict
        The key/value strings the config was built from.
    """

    command: str
    setting: str
    datum: object = None
    potential: object = None
    sites: tuple = ()
    points: tuple = ()
    t_grid: tuple = ()
    s_grid: tuple = ()
    max_lag: int = 10
    method: object = None
    only: object = None
    spec: QuadratureSpec = DEFAULT_SPEC
    output: object = None
    summary: object = None
    format: str = "csv"
    raw: dict = field(default_factory=dict, compare=False)


def _normalize_key(key):
    return key.strip().lower().replace("-", "_")


def load_config_file(path):
    """Read a flat ``key = value`` file.

    Blank lines and lines starting with ``#`` are ignored.

    Returns
    -------
    dict
        ``key -> (value, origin)`` where ``origin`` names the file and line.

    Raises
    ------
    ConfigError
        On a malformed or repeated key, naming the line.
    """
    try:
        with open(path) as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    entries = {}
    for number, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        key, sep, value = text.partition("=")
        origin = f"{path}:{number}"
        if not sep or not key.strip():
            raise ConfigError(f"{origin}: expected 'key = value', got {line!r}")
        key = _normalize_key(key)
        if key in entries:
            raise ConfigError(f"{origin}: key '{key}' repeats {entries[key][1]}")
        entries[key] = (value.strip(), origin)
    return entries


def build_config(command, file_entries=None, flags=None):
    """Merge file entries and flags (flags win) into a :class:`StudyConfig`.

    Parameters
    ----------
    command : str
    file_entries : dict, optional
        As returned by :func:`load_config_file`.
    flags : dict, optional
        ``key -> value`` from the command line; ``None`` values are skipped.

    Raises
    ------
    ConfigError
        Naming the offending key and where it came from.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    allowed = set(_COMMAND_KEYS[command]) | set(_SHARED_KEYS)
    merged = {}
    for key, (value, origin) in (file_entries or {}).items():
        merged[_normalize_key(key)] = (value, origin)
    for key, value in (flags or {}).items():
        if value is not None:
            merged[_normalize_key(key)] = (str(value), "command line")
    for key, (_, origin) in merged.items():
        if key not in allowed:
            raise ConfigError(f"{origin}: key '{key}' is not used by {command}")

    def get(key):
        if key in merged:
            return merged[key]
        return _DEFAULTS.get(key), "default"

    def parse(key, parser, *args):
        value, origin = get(key)
        if value is None:
            return None
        try:
            return parser(value, *args)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"{origin}: key '{key}': {exc}") from exc

    spec_values = {}
    for key in _SPEC_KEYS:
        if key in merged:
            caster = _int if key == "max_subdivisions" else _float
            spec_values[key] = parse(key, caster)
    try:
        spec = dataclasses.replace(DEFAULT_SPEC, **spec_values)
    except ValueError as exc:
        key = next(iter(spec_values)) if len(spec_values) == 1 else "/".join(spec_values)
        origin = merged[key][1] if key in merged else "command line"
        raise ConfigError(f"{origin}: key '{key}': {exc}") from exc

    fmt = parse("format", str)
    if fmt not in ("csv", "json"):
        raise ConfigError(f"{get('format')[1]}: key 'format': expected 'csv' or 'json', got {fmt!r}")
    common = {"spec": spec, "format": fmt, "output": get("output")[0], "raw": {k: v for k, (v, _) in merged.items()}}

    def decreasing(key, allow_empty=False, upper=1.0):
        if allow_empty and key not in merged:
            return ()
        grid = parse(key, parse_grid)
        grid = tuple(sorted(grid, reverse=True))
        if not all(0.0 < t < upper for t in grid):
            raise ConfigError(f"{get(key)[1]}: key '{key}': values must lie in (0, {upper!r})")
        return grid

    if command == "verify":
        only = parse("only", parse_sites) if "only" in merged else None
        unknown = sorted(set(only or ()) - set(CRITERIA))
        if unknown:
            raise ConfigError(f"{get('only')[1]}: key 'only': unknown criteria {unknown}")
        return StudyConfig(command, "acceptance", only=only, **common)
    if command == "discrete-kernels":
        lag = parse("max_lag", _int)
        if lag < 1:
            raise ConfigError(f"{get('max_lag')[1]}: key 'max_lag': must be at least 1")
        return StudyConfig(command, "discrete", max_lag=lag, **common)
    if command == "discrete-apply":
        s_grid = decreasing("s_grid", allow_empty=True, upper=0.5 + 1e-15)
        if s_grid and len(s_grid) < 3:
            raise ConfigError(f"{get('s_grid')[1]}: key 's_grid': needs at least 3 values")
        return StudyConfig(
            command,
            "discrete",
            datum=parse("input", parse_lattice_input),
            sites=parse("sites", parse_sites),
            s_grid=s_grid,
            **common,
        )
    if command == "discrete-extension":
        t_grid = decreasing("t_grid")
        if len(t_grid) < 4:
            raise ConfigError(f"{get('t_grid')[1]}: key 't_grid': needs at least 4 values")
        return StudyConfig(
            command,
            "discrete",
            datum=parse("input", parse_lattice_input),
            sites=(parse("site", _int),),
            t_grid=t_grid,
            summary=get("summary")[0],
            **common,
        )

    dim = parse("dim", _int)
    if dim < 3:
        raise ConfigError(f"{get('dim')[1]}: key 'dim': must be at least 3")
    potential = parse("potential", parse_potential, dim)
    points = parse("x", parse_points, dim)
    if command == "schrodinger-correctors":
        return StudyConfig(command, "schrodinger", potential=potential, points=points, **common)
    if "input" not in merged:
        merged["input"] = ("gaussian:1,1", "default")
    t_grid = decreasing("t_grid")
    if len(t_grid) < 4:
        raise ConfigError(f"{get('t_grid')[1]}: key 't_grid': needs at least 4 values")
    s_grid = decreasing("s_grid", allow_empty=True, upper=0.5 + 1e-15)
    if s_grid and (potential.kind != "constant_mass" or dim != 3):
        raise ConfigError(f"{get('s_grid')[1]}: key 's_grid': the small-s study needs a constant mass in dimension 3")
    if s_grid and len(s_grid) < 3:
        raise ConfigError(f"{get('s_grid')[1]}: key 's_grid': needs at least 3 values")
    method = get("method")[0]
    if method not in (None, "polar", "time"):
        raise ConfigError(f"{get('method')[1]}: key 'method': expected 'polar' or 'time'")
    if method == "polar" and (potential.kind != "constant_mass" or dim != 3):
        raise ConfigError(f"{get('method')[1]}: key 'method': 'polar' needs a constant mass in dimension 3")
    return StudyConfig(
        command,
        "schrodinger",
        datum=parse("input", parse_profile),
        potential=potential,
        points=points,
        t_grid=t_grid,
        s_grid=s_grid,
        method=method,
        **common,
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quantity:
    """A reported number with its error estimate and provenance."""

    value: float
    error: float
    provenance: str

    def to_json(self):
        return {"value": float(self.value), "error": float(self.error), "provenance": self.provenance}


@dataclass
class Report:
    """Result of a study.

    Attributes
    ----------
    command : str
    columns : list of str
        CSV header.
    rows : list of list
        Cells are identifiers (int, str) or :class:`Quantity`.
    summary : dict
        Named quantities and diagnostics for the JSON form.
    failures : list of dict
        Machine-readable records of numerical failures.
    config : dict
    """

    command: str
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def exit_status(self):
        return EXIT_NUMERICAL if self.failures else EXIT_OK


def _cell_csv(cell):
    if isinstance(cell, Quantity):
        return repr(float(cell.value))
    if isinstance(cell, float):
        return repr(cell)
    return str(cell)


def _cell_json(cell):
    if isinstance(cell, Quantity):
        return cell.to_json()
    if hasattr(cell, "item"):
        return cell.item()
    return cell


def _summary_json(value):
    if isinstance(value, Quantity):
        return value.to_json()
    if isinstance(value, dict):
        return {str(k): _summary_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_summary_json(v) for v in value]
    if hasattr(value, "item"):
        return value.item()
    return value


def emit_report(report, fmt="csv", path=None):
    """Render ``report`` as CSV or JSON and optionally write it to ``path``.

    The CSV form is the table only.  The JSON form holds the table with an
    error estimate and provenance for every number, the summary and any
    failure records.  Floats are written with ``repr`` so a JSON round trip
    is bit-exact; non-finite values use ``Infinity``/``NaN``.

    Returns
    -------
    str
        The rendered text.
    """
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([_cell_csv(c) for c in row])
        text = buf.getvalue()
    elif fmt == "json":
        payload = {
            "command": report.command,
            "config": report.config,
            "columns": list(report.columns),
            "rows": [dict(zip(report.columns, (_cell_json(c) for c in row))) for row in report.rows],
            "summary": _summary_json(report.summary),
            "failures": report.failures,
            "status": report.exit_status,
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w") as handle:
            handle.write(text)
    return text


def _convergence_summary(rep, provenance):
    return {
        "limit": Quantity(rep.extrapolated_limit, rep.error_estimate, provenance),
        "observed_order": rep.observed_order,
        "contraction": rep.contraction,
        "samples_used": rep.samples_used,
        "converged": rep.converged,
        "message": rep.message,
    }


def _failure(kind, where, message, value=math.nan, error=math.inf):
    return {"type": kind, "where": where, "message": message, "value": value, "error": error}


def _check(report, where, rep):
    if not rep.converged:
        report.failures.append(
            _failure("non_convergence", where, rep.message or "extrapolants did not contract", rep.extrapolated_limit, rep.error_estimate)
        )


def _map(executor, func, items):
    items = list(items)
    if executor is None:
        return [func(item) for item in items]
    return list(executor.map(func, items))


_PROV_POINTWISE_D = "kernel sum with W0 on (0,1], Winf on [1,inf) and Euler's constant"
_PROV_SPECTRAL_D = "Fourier multiplier log(4 sin^2(theta/2))"
_PROV_SMALL_S = "Richardson limit of ((-Delta)^s f - f)/s as s -> 0+"
_PROV_EXT_D = "-lim (u + 2 f log t) + f K with K = -gamma + E1(1/4) - int_0^{1/4} (1-e^{-v})/v dv"
_PROV_FLUX = "lim t u_t as t -> 0+"
_PROV_RATIO = "lim u / log t as t -> 0+"


def _discrete_apply(config, executor):
    f = config.datum
    table = cached_kernel_table(required_max_lag(f, config.sites, config.spec), config.spec)
    columns = ["n", "log_pointwise", "log_spectral"]
    if config.s_grid:
        columns.append("log_small_s")

    def row(n):
        point = log_laplacian_pointwise(f, n, table, full_output=True)
        spectral = log_laplacian_spectral(f, n, config.spec, full_output=True)
        cells = [n, Quantity(*point, _PROV_POINTWISE_D), Quantity(*spectral, _PROV_SPECTRAL_D)]
        rep = small_s_limit_check(f, n, config.s_grid, config.spec) if config.s_grid else None
        if rep is not None:
            cells.append(Quantity(rep.extrapolated_limit, rep.error_estimate, _PROV_SMALL_S))
        return cells, rep

    report = Report(config.command, columns, config=config.raw)
    for (cells, rep), n in zip(_map(executor, row, config.sites), config.sites):
        report.rows.append(cells)
        if rep is not None:
            _check(report, f"n={n} small_s", rep)
    report.summary["max_lag"] = table.max_lag
    return report


def _discrete_extension(config, executor):
    f = config.datum
    n = config.sites[0]
    grid = config.t_grid
    flux, ratio = boundary_limits(f, n, grid, config.spec)
    value, rep = log_via_extension(f, n, grid, config.spec, full_output=True)
    report = Report(config.command, ["t", "u", "t_du", "residual"], config=config.raw)

    def row(t):
        u = extension_u(f, n, t, config.spec, full_output=True)
        du = extension_dt(f, n, t, config.spec, full_output=True)
        res = pde_residual(f, n, t, config.spec, full_output=True)
        return [
            Quantity(t, 0.0, "grid"),
            Quantity(*u, "subordination of the heat kernel against e^{-t^2/4u}/u"),
            Quantity(t * du.value, t * du.error, "t times the t-derivative of the subordination"),
            Quantity(*res, "u_tt + u_t/t + discrete Laplacian of u"),
        ]

    report.rows.extend(_map(executor, row, grid))
    report.summary = {
        "site": n,
        "f_at_site": f(n),
        "flux_limit": _convergence_summary(flux, _PROV_FLUX),
        "log_ratio_limit": _convergence_summary(ratio, _PROV_RATIO),
        "log_value": Quantity(value.value, value.error, _PROV_EXT_D),
        "log_value_fit": _convergence_summary(rep, "power_plus_log fit of u + 2 f log t"),
    }
    _check(report, "flux limit", flux)
    _check(report, "log ratio limit", ratio)
    _check(report, "extension limit", rep)
    return report


def _discrete_kernels(config, executor):
    table = cached_kernel_table(config.max_lag, config.spec)
    report = Report(config.command, ["lag", "w0", "w_inf"], config=config.raw)
    for k in range(config.max_lag + 1):
        w0 = Quantity(table.w0[k], table.w0_error[k], "int_0^1 p_t(k)/t dt") if k else Quantity(math.nan, 0.0, "undefined at lag 0")
        report.rows.append([k, w0, Quantity(table.w_inf[k], table.w_inf_error[k], "int_1^inf p_t(k)/t dt")])
    report.summary["gamma"] = table.gamma
    return report


def _schrodinger_apply(config, executor):
    f, model = config.datum, config.potential
    spectral_available = model.kind == "constant_mass" and model.dimension == 3
    columns = ["x_norm", "log_pointwise", "log_extension", "log_spectral"]
    if config.s_grid:
        columns.append("log_small_s")

    def row(x):
        pointwise = log_LV_pointwise(f, x, model, config.spec, method=config.method, full_output=True)
        flux, ratio, ext = theorem11_limits(f, x, model, config.t_grid, config.spec)
        if spectral_available:
            oracle = Quantity(*spectral_oracle_constant(f, x, model.mass, 3, config.spec, full_output=True), "Fourier multiplier log(|xi|^2 + m^2)")
        else:
            oracle = Quantity(*semigroup_log_oracle(f, x, model, config.spec, full_output=True), "int_0^inf (e^{-t} f - T_t f)/t dt")
        small = small_s_limit_cont(f, x, model.mass, config.s_grid, config.spec) if config.s_grid else None
        return pointwise, flux, ratio, ext, oracle, small

    report = Report(config.command, columns, config=config.raw)
    method = config.method or ("polar" if spectral_available else "time")
    per_point = []
    for x, (pointwise, flux, ratio, ext, oracle, small) in zip(config.points, _map(executor, row, config.points)):
        norm = math.sqrt(math.fsum(c * c for c in x))
        cells = [
            Quantity(norm, 0.0, "|x|"),
            Quantity(*pointwise, f"pointwise formula with corrector K(x), {method} route"),
            Quantity(*ext, "-2 lim (u + f log t) - f h(x)"),
            oracle,
        ]
        if small is not None:
            cells.append(Quantity(small.extrapolated_limit, small.error_estimate, _PROV_SMALL_S))
            _check(report, f"x={x} small_s", small)
        report.rows.append(cells)
        values = [pointwise.value, ext.value, oracle.value]
        per_point.append(
            {
                "x": list(x),
                "flux_limit": _convergence_summary(flux, _PROV_FLUX),
                "log_ratio_limit": _convergence_summary(ratio, _PROV_RATIO),
                "max_pairwise_gap": max(abs(a - b) for a in values for b in values),
            }
        )
        _check(report, f"x={x} flux limit", flux)
        _check(report, f"x={x} log ratio limit", ratio)
    report.summary = {"potential": model.label(), "dimension": model.dimension, "points": per_point}
    return report


def _schrodinger_correctors(config, executor):
    model = config.potential
    report = Report(config.command, ["x_norm", "rho", "K", "h"], config=config.raw)
    values = _map(executor, lambda p: correctors(p, model, config.spec), config.points)
    points = []
    for x, cv in zip(config.points, values):
        report.rows.append(
            [
                Quantity(cv.x_norm, 0.0, "|x|"),
                Quantity(cv.rho, 0.0, "critical radius"),
                Quantity(cv.K_of_x, cv.errors["K_of_x"], "corrector K(x)"),
                Quantity(cv.h_of_x, cv.errors["h_of_x"], "h(x) = K(x) - D(x) - alpha_d/2 - beta_d"),
            ]
        )
        points.append({"x": list(x), "double_integral": Quantity(cv.double_integral, cv.errors["double_integral"], "D(x)")})
    first = values[0]
    report.summary = {
        "potential": model.label(),
        "alpha_d": Quantity(first.alpha_d, first.errors["alpha_d"], "alpha_d"),
        "beta_d": Quantity(first.beta_d, first.errors["beta_d"], "beta_d"),
        "points": points,
    }
    return report


def _verify(config, executor):
    results = run_criteria(config.only, executor)
    report = Report(config.command, ["criterion", "name", "measured", "tolerance", "passed"], config=config.raw)
    for r in results:
        report.rows.append([r.number, r.name, Quantity(r.measured, 0.0, f"acceptance check: {r.name}"), r.tolerance, "pass" if r.passed else "fail"])
        if not r.passed:
            report.failures.append(_failure("criterion_failed", f"criterion {r.number}", r.name, r.measured, r.tolerance))
    report.summary = {
        str(r.number): {"name": r.name, "seconds": r.seconds, "time_limit": r.time_limit, "details": r.details} for r in results
    }
    return report


_RUNNERS = {
    "discrete-apply": _discrete_apply,
    "discrete-extension": _discrete_extension,
    "discrete-kernels": _discrete_kernels,
    "schrodinger-apply": _schrodinger_apply,
    "schrodinger-correctors": _schrodinger_correctors,
    "verify": _verify,
}


def run_study(config, executor=None):
    """Run ``config`` and return ``(report, exit_status)``.

    Numerical failures (quadrature that cannot reach its tolerance, limits
    that do not contract, failed acceptance criteria) give status 2 with a
    machine-readable record in ``report.failures``; a quadrature failure
    yields a report with no rows.
    """
    try:
        report = _RUNNERS[config.command](config, executor)
    except (QuadratureError, ConvergenceError) as exc:
        report = Report(config.command, [], config=config.raw)
        kind = "quadrature" if isinstance(exc, QuadratureError) else "non_convergence"
        report.failures.append(
            _failure(kind, config.command, str(exc), getattr(exc, "value", math.nan), getattr(exc, "error", math.inf))
        )
    return report, report.exit_status


def write_outputs(report, config):
    """Write the main output (stdout text is returned) and the optional summary file."""
    text = emit_report(report, config.format, config.output)
    if config.summary is not None:
        emit_report(report, "json", config.summary)
    return text


def describe_error(exc):
    """JSON line describing ``exc`` for stderr."""
    kind = "config" if isinstance(exc, ConfigError) else type(exc).__name__
    record = {"type": kind, "message": str(exc)}
    if isinstance(exc, LoglapError) and hasattr(exc, "value"):
        record.update(value=exc.value, error=exc.error)
    return json.dumps({"error": record})


def worker_count():
    """Worker cap from ``LOGLAP_THREADS`` (default 1; invalid values raise ConfigError)."""
    text = os.environ.get("LOGLAP_THREADS")
    if text is None or not text.strip():
        return 1
    try:
        count = int(text)
    except ValueError:
        raise ConfigError(f"environment: key 'LOGLAP_THREADS': {text!r} is not an integer") from None
    if count < 1:
        raise ConfigError("environment: key 'LOGLAP_THREADS': must be at least 1")
    return count

"""Command-line front end.

Exit status: 0 on success, 2 on a numerical failure (quadrature that misses
its tolerance, a limit that does not contract, a failed acceptance
criterion), 3 on a configuration error.  Error records go to stderr as JSON
lines.
"""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigError
from .reporting import (
    EXIT_CONFIG,
    build_config,
    describe_error,
    load_config_file,
    run_study,
    worker_count,
    write_outputs,
)

__all__ = ["build_parser", "main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


_SHARED = [
    ("--config", "flat key = value file; flags override its entries"),
    ("--output", "write the report here instead of stdout"),
    ("--format", "csv or json"),
    ("--abs-tol", "absolute quadrature tolerance"),
    ("--rel-tol", "relative quadrature tolerance"),
    ("--split-point", "split between finite head and tail of semi-infinite integrals"),
    ("--max-subdivisions", "panel budget of the adaptive quadrature"),
    ("--tail-cutoff-factor", "truncated tails must stay below this multiple of abs-tol"),
]

_COMMANDS = {
    "discrete-apply": (
        "log of the discrete Laplacian at lattice sites",
        [
            ("--input", "delta:SITE | coeffs:OFFSET:v1,v2,... | csv:PATH"),
            ("--sites", "a..b or n1,n2,..."),
            ("--s-grid", "optional small-s study grid, geo:s0,n or list:s1;s2;..."),
        ],
    ),
    "discrete-extension": (
        "extension trace t,u,t_du,residual and boundary limits at one site",
        [
            ("--input", "delta:SITE | coeffs:OFFSET:v1,v2,... | csv:PATH"),
            ("--site", "lattice site"),
            ("--t-grid", "geo:t0,n or list:t1;t2;..."),
            ("--summary", "also write the JSON summary to this path"),
        ],
    ),
    "discrete-kernels": ("kernel table lag,w0,w_inf", [("--max-lag", "largest lag")]),
    "schrodinger-apply": (
        "log(-Delta + V) of a Gaussian by three routes",
        [
            ("--input", "gaussian:A,a"),
            ("--potential", "constant:m=VALUE | harmonic"),
            ("--dim", "dimension d >= 3"),
            ("--x", "points separated by ';', each a norm or comma-separated coordinates"),
            ("--t-grid", "geo:t0,n or list:t1;t2;..."),
            ("--s-grid", "optional small-s study grid (constant mass, d = 3)"),
            ("--method", "polar or time route for the pointwise formula"),
        ],
    ),
    "schrodinger-correctors": (
        "correctors x_norm,rho,K,h",
        [
            ("--potential", "constant:m=VALUE | harmonic"),
            ("--dim", "dimension d >= 3"),
            ("--x", "points separated by ';', each a norm or comma-separated coordinates"),
        ],
    ),
    "verify": ("run the acceptance criteria", [("--only", "criterion numbers, e.g. 1,4,9 or 1..11")]),
}


def build_parser():
    """The argument parser; usage errors raise :class:`ConfigError`."""
    parser = _Parser(prog="loglap", description="Logarithmic Laplacians on Z and Schrodinger operators on R^d.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (help_text, options) in _COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text, description=help_text)
        for flag, flag_help in options + _SHARED:
            cmd.add_argument(flag, help=flag_help)
    return parser


def _attach_values(argv):
    # every long option takes one value; binding it with "=" lets values such
    # as "-5..5" or "-1.5,0,0" through
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and tok != "--help" and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None):
    """Entry point; returns the exit status."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_attach_values(argv))
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        entries = load_config_file(args.config) if args.config else None
        config = build_config(args.command, entries, flags)
        workers = worker_count()
    except ConfigError as exc:
        print(describe_error(exc), file=sys.stderr)
        return EXIT_CONFIG
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            report, status = run_study(config, pool)
    else:
        report, status = run_study(config)
    try:
        text = write_outputs(report, config)
    except OSError as exc:
        print(json.dumps({"error": {"type": "io", "message": str(exc)}}), file=sys.stderr)
        return EXIT_CONFIG
    if config.output is None:
        sys.stdout.write(text)
    for record in report.failures:
        print(json.dumps({"error": record}), file=sys.stderr)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

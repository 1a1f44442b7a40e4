"""Acceptance criteria, one test each, with a pass/fail line per criterion.

The lines are printed as each test runs (visible with ``-s``) and repeated
in the terminal summary.
"""

import math
import subprocess
import sys

import pytest

from loglap.acceptance import CRITERIA, run_criteria

from .conftest import ACCEPTANCE_LINES


def _report(result):
    verdict = "PASS" if result.passed else "FAIL"
    limit = f"{result.time_limit:g}s" if math.isfinite(result.time_limit) else "none"
    line = (
        f"criterion {result.number} ({result.name}): {verdict} "
        f"measured={result.measured!r} tolerance={result.tolerance!r} "
        f"time={result.seconds:.2f}s limit={limit}"
    )
    print(line)
    ACCEPTANCE_LINES.append(line)
    return line


@pytest.mark.parametrize("number", [k for k in sorted(CRITERIA) if k != 12])
def test_criterion(number):
    (result,) = run_criteria([number])
    line = _report(result)
    assert result.passed, f"{line}; details={result.details}"


def test_criterion_12_verify_is_deterministic():
    (result,) = run_criteria([12])
    line = _report(result)
    assert result.passed, f"{line}; details={result.details}"


def test_verify_command_output_is_byte_identical():
    argv = [sys.executable, "-m", "loglap", "verify", "--only", "1,7,9"]
    first = subprocess.run(argv, capture_output=True, check=False)
    second = subprocess.run(argv, capture_output=True, check=False)
    assert first.returncode == 0, first.stderr.decode()
    assert first.stdout == second.stdout

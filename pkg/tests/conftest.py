import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ancientflow.geometry import ClosedCurve  # noqa: E402

_ACCEPTANCE = {}


def circle(m, radius=1.0, centre=(0.0, 0.0), turns=1, phase=0.0):
    theta = phase + 2.0 * np.pi * turns * np.arange(m) / m
    return ClosedCurve(np.column_stack([centre[0] + radius * np.cos(theta), centre[1] + radius * np.sin(theta)]))


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        state = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{state}  {name}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

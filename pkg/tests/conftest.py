from __future__ import annotations

import socket

import pytest
from hypothesis import settings

from trialkit.demo import build_demo_workspace

settings.register_profile("suite", deadline=None, max_examples=100)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def demo_ws(tmp_path_factory):
    """Generated workspace: scripts/, assets/, schedules/."""
    return build_demo_workspace(tmp_path_factory.mktemp("demo"))


@pytest.fixture()
def free_port():
    def pick() -> int:
        with socket.socket() as sock:
            sock.bind(("127.0.0.1", 0))
            return sock.getsockname()[1]

    return pick


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        verdict = "PASS" if report.passed else "FAIL"
        print(f"\n[ACCEPTANCE] {name}: {verdict}")

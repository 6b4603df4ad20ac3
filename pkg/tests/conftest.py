import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# criterion id -> (description, passed)
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture(scope="session", autouse=True)
def _compiled_kernels():
    from otbench import bench
    bench.warm_up()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        desc, ok = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'}  criterion {key}: {desc}")

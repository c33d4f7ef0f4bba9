import numpy as np
import pytest

from pidbounds.dataset import FactorSpec, build_dataset
from pidbounds.prob import DiagGaussian
from pidbounds.synth import SyntheticSpec, synthesize


def scalar_dataset(means_by_value, std):
    """One factor, one continuous slot; ``means_by_value[v]`` lists record means."""
    spec = FactorSpec.from_cardinalities([len(means_by_value)])
    records = [([v], DiagGaussian([m], [std])) for v, ms in enumerate(means_by_value) for m in ms]
    return build_dataset(spec, records)


@pytest.fixture(scope="session")
def ideal_2x2():
    return synthesize(SyntheticSpec((2, 2), 2, sigma=0.05))


@pytest.fixture(scope="session")
def ideal_3x5():
    return synthesize(SyntheticSpec((5, 5, 5), 3, sigma=0.05))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance reporting ------------------------------------------------------

_CRITERIA = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    failed = report.failed
    if report.when == "call" or failed:
        prev = _CRITERIA.get(marker, (True, ""))
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[marker] = (prev[0] and not failed, detail or prev[1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), (ok, detail) in sorted(_CRITERIA.items()):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))

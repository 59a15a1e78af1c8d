import numpy as np
import pytest

_ACCEPTANCE = []


@pytest.fixture
def record_criterion():
    """Record one acceptance outcome as ``(id, passed, detail)``."""

    def _record(cid, passed, detail):
        _ACCEPTANCE.append((cid, bool(passed), detail))
        print(f"[criterion {cid}] {'PASS' if passed else 'FAIL'}: {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {cid:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def gaussian_moment(p):
    """``E[x**p]`` for ``x ~ N(0, 1)``: 0 for odd p, ``(p - 1)!!`` for even p."""
    if p % 2:
        return 0.0
    return float(np.prod(np.arange(p - 1, 0, -2))) if p else 1.0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

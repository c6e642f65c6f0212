import numpy as np
import pytest

from blendsim import HeatKernel, make_grid


class ScriptedRNG:
    """Stand-in generator that hands out pre-chosen uniforms in draw order."""

    def __init__(self, values):
        self._values = np.asarray(values, dtype=float).ravel()
        self._pos = 0

    def random(self, size=None):
        shape = () if size is None else size
        count = int(np.prod(shape)) if shape != () else 1
        out = self._values[self._pos:self._pos + count]
        if out.size != count:
            raise RuntimeError("scripted RNG exhausted")
        self._pos += count
        return out.reshape(shape) if shape != () else float(out[0])


@pytest.fixture
def grid():
    return make_grid()


@pytest.fixture
def kernel():
    return HeatKernel(0.5)


_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Print and remember one PASS/FAIL line for an acceptance criterion."""

    def report(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        print(line)
        _VERDICTS.append(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)

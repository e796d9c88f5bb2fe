import contextlib
import time

import pytest

_CRITERIA: dict[int, tuple[str, str, float, str]] = {}


@pytest.fixture
def criterion():
    """Context manager that times one acceptance criterion and records PASS/FAIL."""

    @contextlib.contextmanager
    def run(number: int, title: str, limit_s: float | None = None):
        detail: dict[str, str] = {}
        start = time.perf_counter()
        try:
            yield detail
            elapsed = time.perf_counter() - start
            if limit_s is not None:
                assert elapsed < limit_s, f"runtime {elapsed:.2f} s exceeds {limit_s} s"
        except BaseException as exc:
            elapsed = time.perf_counter() - start
            _CRITERIA[number] = ("FAIL", title, elapsed, str(exc).splitlines()[0] if str(exc) else type(exc).__name__)
            raise
        _CRITERIA[number] = ("PASS", title, elapsed, detail.get("info", ""))

    return run


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, elapsed, info = _CRITERIA[number]
        line = f"[{status}] {number}. {title} ({elapsed:.2f} s)"
        terminalreporter.write_line(line + (f": {info}" if info else ""))

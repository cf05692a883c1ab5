import pytest

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(id, ok, detail)``."""

    def record(cid: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((cid, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, ok, detail in sorted(_ACCEPTANCE, key=lambda r: int(r[0])):
        terminalreporter.write_line(f"criterion {cid:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

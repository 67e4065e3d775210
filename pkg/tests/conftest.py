import pytest

from taucalc.symbols import PolySymbol

_LINES_KEY = pytest.StashKey[list]()


@pytest.fixture
def record_criterion(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_LINES_KEY, [])

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def osc():
    """Harmonic-oscillator symbol 1 + x^2 + xi^2 in d = 1."""
    return 1 + PolySymbol.x(1) ** 2 + PolySymbol.xi(1) ** 2


@pytest.fixture
def twisted():
    """Weyl symbol (xi - y/2)^2 + (eta - x/2)^2 of the twisted Laplacian."""
    from fractions import Fraction

    x, y = PolySymbol.x(2, 0), PolySymbol.x(2, 1)
    xi, eta = PolySymbol.xi(2, 0), PolySymbol.xi(2, 1)
    h = Fraction(1, 2)
    return (xi - y.scale(h)) ** 2 + (eta - x.scale(h)) ** 2

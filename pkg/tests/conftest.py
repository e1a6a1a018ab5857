import numpy as np

from qarseg.core import TimeSeries
from qarseg.ga import GaConfig, decode, random_chromosome

_criterion_lines = []


def record_criterion(num: int, passed: bool, detail: str) -> str:
    """Register an acceptance-criterion verdict for the terminal summary."""
    line = f"CRITERION {num:2d}: {'PASS' if passed else 'FAIL'} - {detail}"
    _criterion_lines.append((num, line))
    return line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_criterion_lines):
            terminalreporter.write_line(line)


def random_series(n, rng, ar=0.5):
    y = rng.standard_normal(n)
    for t in range(1, n):
        y[t] += ar * y[t - 1]
    return TimeSeries(y)


def random_segmentation(n, rng, max_order=6):
    """A random valid segmentation, via the constrained chromosome generator."""
    cfg = GaConfig(islands=1, subpopulation=2, migrants=1, max_order=max_order,
                   break_prob=3.0 / n)
    return decode(random_chromosome(n, cfg, rng))

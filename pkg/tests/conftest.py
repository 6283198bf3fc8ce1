import random
from fractions import Fraction

import pytest

from mcfsadic.core import SimplexPoint
from mcfsadic.mcf import CassaigneSelmer, dbonacci
from mcfsadic.sadic import DirectiveSequence


def rand_point(seed: int, d: int = 3) -> SimplexPoint:
    """Rational point with 256-bit denominators, uniform on the simplex (sorted spacings)."""
    rng = random.Random(seed)
    q = 2 ** 256
    cuts = sorted(rng.randrange(1, q) for _ in range(d - 1))
    edges = [0, *cuts, q]
    return SimplexPoint([Fraction(b - a, q) for a, b in zip(edges, edges[1:])])


@pytest.fixture(scope="session")
def cs():
    return CassaigneSelmer()


@pytest.fixture(scope="session")
def tau_seq(cs):
    return DirectiveSequence.periodic([cs.GAMMA[1], cs.GAMMA[2]], name="tau")


@pytest.fixture(scope="session")
def trib_seq():
    return DirectiveSequence.periodic([dbonacci(3)], name="tribonacci")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
        npass = sum(line.startswith("PASS") for line in mod.RESULTS)
        terminalreporter.write_line(f"{npass}/{len(mod.RESULTS)} criteria pass")

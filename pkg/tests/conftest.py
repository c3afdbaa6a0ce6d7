import pytest

from manetq.config import ScenarioConfig
from manetq.topology import LinkSet


def link_set(n, edges, radius=1.0):
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    return LinkSet(adj, radius)


def write_placement(path, coords):
    path.write_text("".join(f"{i} {x} {y}\n" for i, (x, y) in enumerate(coords)))
    return str(path)


STATIC = dict(mobility__speed_min=0.0, mobility__speed_max=0.0)


@pytest.fixture
def static_cfg():
    """Small static scenario with plenty of battery."""
    return ScenarioConfig(nodes=12, sim_time=20.0, seed=2).with_values(
        energy__initial=1e6, **STATIC)


# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {detail}")

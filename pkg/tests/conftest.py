import math

import pytest

from barebones.phys import PhysicalConfig, build_comm_graph


def line_network(n, spacing, config=None, name_space=None):
    """Nodes 1..n on the x axis, ``spacing`` apart."""
    config = config or PhysicalConfig()
    return build_comm_graph([(i + 1, i * spacing, 0.0) for i in range(n)],
                            name_space or max(n, 2), config)


def star_network(leaves, radius_factor=0.9, config=None, name_space=None):
    """Centre 1 at the origin, leaves 2.. evenly on a circle."""
    config = config or PhysicalConfig()
    r = radius_factor * config.comm_radius
    pts = [(1, 0.0, 0.0)]
    for i in range(leaves):
        a = 2 * math.pi * i / max(1, leaves)
        pts.append((i + 2, r * math.cos(a), r * math.sin(a)))
    return build_comm_graph(pts, name_space or 4 * (leaves + 1), config)


@pytest.fixture
def cfg():
    return PhysicalConfig()


def pytest_terminal_summary(terminalreporter):
    import _acceptance

    if not _acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, 11):
        terminalreporter.write_line(_acceptance.line(k))

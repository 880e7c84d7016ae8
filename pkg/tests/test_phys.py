import math
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barebones.phys import (ConfigError, PhysicalConfig, PlacementError, box_of,
                            build_comm_graph, max_range, read_placements, receives, sinr,
                            write_placements)

from conftest import line_network


def params(**kw):
    """Unvalidated parameter record: lets the closed forms be evaluated at alpha = 2."""
    base = dict(alpha=4.0, noise=1.0, beta=1.0, power=1.0, eps_s=0.3, eps_c=0.3)
    return SimpleNamespace(**{**base, **kw})


def test_max_range_unit_parameters():
    assert max_range(PhysicalConfig()) == pytest.approx(1.0, rel=1e-12)


def test_max_range_power_16():
    assert max_range(PhysicalConfig(power=16)) == pytest.approx(2.0, rel=1e-12)


def test_max_range_noise_beta_two_alpha_two():
    assert max_range(params(noise=2, beta=2, alpha=2)) == pytest.approx(0.5, rel=1e-12)


@pytest.mark.parametrize("bad", [dict(alpha=2), dict(noise=0), dict(beta=0.5), dict(power=0),
                                 dict(eps_s=0.2, eps_c=0.3), dict(eps_s=1.0, eps_c=1.0)])
def test_config_validation_rejects(bad):
    with pytest.raises(ConfigError):
        PhysicalConfig(**bad)


def test_strong_connectivity_needs_override():
    PhysicalConfig(eps_s=0.2, eps_c=0.3, allow_strong_connectivity=True)


def undirected(net):
    return {tuple(sorted(e)) for e in net.comm_edges}


def two_nodes(d, config=None):
    return build_comm_graph([(1, 0.0, 0.0), (2, d, 0.0)], 2, config or PhysicalConfig())


def test_sinr_single_transmitter_alpha_two():
    net = two_nodes(0.5)
    assert sinr(1, 2, {1}, net, params(alpha=2)) == pytest.approx(4.0, rel=1e-12)


def test_sinr_at_max_range_equals_beta():
    cfg = PhysicalConfig(power=16)
    net = two_nodes(2.0, cfg)
    assert sinr(1, 2, {1}, net) == pytest.approx(cfg.beta, rel=1e-12)


def test_sinr_two_equidistant_transmitters_below_threshold():
    cfg = PhysicalConfig()
    d = 0.5
    net = build_comm_graph([(1, -d, 0.0), (2, d, 0.0), (3, 0.0, 0.0)], 3, cfg)
    value = sinr(1, 3, {1, 2}, net)
    assert value == pytest.approx(d ** -4 / (1 + d ** -4), rel=1e-12)
    assert value < cfg.beta
    assert not receives(1, 3, {1, 2}, net)


def test_receives_at_reception_radius():
    cfg = PhysicalConfig(eps_s=0.5, eps_c=0.5)
    net = two_nodes(0.5, cfg)  # exactly (1 - eps) r, exact in binary
    assert receives(1, 2, {1}, net)


def test_receives_distance_gate_at_full_range():
    cfg = PhysicalConfig(power=16, eps_s=0.1, eps_c=0.1)
    net = two_nodes(2.0, cfg)
    assert sinr(1, 2, {1}, net) == pytest.approx(1.0, rel=1e-12)
    assert not receives(1, 2, {1}, net)


def test_half_duplex():
    net = two_nodes(0.5)
    assert not receives(1, 2, {1, 2}, net)


def test_sinr_preconditions():
    net = two_nodes(0.5)
    with pytest.raises(ValueError):
        sinr(1, 2, {2}, net)
    with pytest.raises(ValueError):
        sinr(1, 2, {1, 2}, net)


def test_edge_at_comm_radius_boundary():
    cfg = PhysicalConfig(eps_s=0.5, eps_c=0.5)
    assert undirected(two_nodes(0.5, cfg)) == {(1, 2)}
    assert two_nodes(0.5 + 1e-6, cfg).comm_edges == set()


def test_five_nodes_spaced_at_comm_radius_form_a_path():
    cfg = PhysicalConfig(eps_s=0.5, eps_c=0.5)
    net = line_network(5, 0.5, cfg)
    assert undirected(net) == {(1, 2), (2, 3), (3, 4), (4, 5)}
    assert net.max_degree == 2


def test_duplicate_names_and_coincident_positions_rejected():
    cfg = PhysicalConfig()
    with pytest.raises(PlacementError):
        build_comm_graph([(1, 0, 0), (1, 1, 0)], 4, cfg)
    with pytest.raises(PlacementError):
        build_comm_graph([(1, 0, 0), (2, 0, 0)], 4, cfg)
    with pytest.raises(PlacementError):
        build_comm_graph([(5, 0, 0)], 4, cfg)


@pytest.mark.parametrize("p,expected", [((0, 0), (0, 0)), ((1, 0), (1, 0)),
                                        ((-0.5, 2.3), (-1, 2))])
def test_box_of(p, expected):
    assert box_of(p, 1.0) == expected


def test_placement_file_round_trip(tmp_path):
    net = line_network(4, 0.3)
    path = tmp_path / "net.txt"
    write_placements(net, path)
    assert read_placements(path) == net.placements()
    path.write_text("# comment\n1 0 0\n\n2 0.5 0\n")
    assert read_placements(path) == [(1, 0.0, 0.0), (2, 0.5, 0.0)]
    path.write_text("1 0\n")
    with pytest.raises(PlacementError):
        read_placements(path)


coords = st.floats(min_value=0, max_value=3, allow_nan=False, allow_infinity=False)


@st.composite
def placements(draw):
    n = draw(st.integers(min_value=2, max_value=9))
    pts = draw(st.lists(st.tuples(coords, coords), min_size=n, max_size=n,
                        unique_by=lambda p: (round(p[0], 4), round(p[1], 4))))
    return [(i + 1, x, y) for i, (x, y) in enumerate(pts)]


@settings(max_examples=60, deadline=None)
@given(placements())
def test_graph_symmetry_boxes_and_degree(rows):
    cfg = PhysicalConfig()
    net = build_comm_graph(rows, len(rows), cfg)
    for u in net.names:
        for v in net.neighbors(u):
            assert u in net.neighbors(v)
            assert net.distance(u, v) <= cfg.comm_radius
    assert net.max_degree == max(len(net.neighbors(u)) for u in net.names)
    boxes = net.boxes()
    for u in net.names:
        for v in net.names:
            if u < v and boxes[u] == boxes[v]:
                assert v in net.neighbors(u)


@settings(max_examples=60, deadline=None)
@given(placements(), st.data())
def test_at_most_one_delivery_per_receiver(rows, data):
    cfg = PhysicalConfig()
    net = build_comm_graph(rows, len(rows), cfg)
    tx = set(data.draw(st.lists(st.sampled_from(net.names), min_size=1, unique=True)))
    for v in net.names:
        if v in tx:
            continue
        got = [u for u in tx if receives(u, v, tx, net)]
        assert len(got) <= 1
        for u in got:
            assert sinr(u, v, tx, net) >= cfg.beta
            assert net.distance(u, v) <= cfg.reception_radius


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 100.0), st.floats(1.0, 2.0))
def test_max_range_monotone(power, factor):
    base = PhysicalConfig(power=power)
    assert max_range(PhysicalConfig(power=power * factor)) >= max_range(base)
    assert max_range(PhysicalConfig(power=power, noise=factor)) <= max_range(base)
    assert max_range(PhysicalConfig(power=power, beta=factor)) <= max_range(base)

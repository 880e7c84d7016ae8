import json
import math

import networkx as nx
import pytest

from barebones.engine import Simulation
from barebones.harness import oracle_backbone, oracle_is_mis
from barebones.phys import PhysicalConfig, build_comm_graph
from barebones.protocols.backbone import backbone, connect_bb, run_inter_h, run_intra_h
from barebones.protocols.dfs import esun, lun, wireless_dfs
from barebones.protocols.emulated import emulated_dfs_backbone
from barebones.protocols.mis import LEADER, SLAVE, mis_swd
from barebones.protocols.params import DEFAULT_PARAMS, ProtocolParams, family_key

from conftest import line_network, star_network


def single():
    return build_comm_graph([(1, 0.0, 0.0)], 4, PhysicalConfig())


def triangle():
    return build_comm_graph([(1, 0, 0), (2, 0.3, 0), (3, 0.15, 0.2)], 8, PhysicalConfig())


# -- estimating and learning the unexplored neighbourhood ------------------------------

def test_esun_without_neighbours_is_zero():
    assert esun(single(), 1)[0] == 0


def test_esun_pair_bracket():
    net = line_network(2, 0.5, name_space=64)
    hits = sum(1 <= esun(net, 1, seed=s)[0] <= 16 for s in range(100))
    assert hits >= 90


def test_lun_examples():
    assert lun(single(), 1, 4)[0] == []
    assert lun(star_network(1), 1, 1)[0] == [2]
    net = star_network(8)
    learned, sim = lun(net, 1, 8)
    assert sorted(learned) == list(range(2, 10))
    assert sim.round <= 16 * 8 * math.ceil(math.log2(net.name_space))


# -- single-source broadcast -----------------------------------------------------------

def test_dfs_single_node():
    trace, result = wireless_dfs(single(), 1)
    assert result.success and result.token_passes == 0 and result.status[1] == "black"


def test_dfs_two_nodes():
    trace, result = wireless_dfs(line_network(2, 0.5), 1)
    assert result.success and result.parent[2] == 1
    assert set(result.status.values()) == {"black"} and trace.violations == 0


@pytest.mark.parametrize("seed", range(3))
def test_dfs_grid_builds_spanning_tree(seed):
    from barebones.harness import Scenario, generate
    sc = Scenario.from_dict({"schema": 1, "name": "g", "protocol": "wireless_dfs",
                             "generator": {"kind": "uniform_square", "n": 20}})
    net = generate(sc, seed)
    source = min(net.names)
    trace, r = wireless_dfs(net, source, seed=seed)
    assert r.success
    g = nx.DiGraph([(u, p) for u, p in r.parent.items() if p is not None])
    assert nx.is_arborescence(g.reverse()) and len(g) == net.n
    assert all(p in net.neighbors(u) for u, p in r.parent.items() if p is not None)
    assert r.token_passes == net.n - 1


# -- election --------------------------------------------------------------------------

def test_mis_single_node():
    _, r = mis_swd(single())
    assert r.leaders == {1}


def test_mis_edge():
    # name space 4n as everywhere else; N = 2 leaves only 8 sub-phases
    net = line_network(2, 0.5, name_space=8)
    ok = 0
    for s in range(100):
        _, r = mis_swd(net, seed=s)
        ok += len(r.leaders) == 1 and set(r.status.values()) == {LEADER, SLAVE}
    assert ok >= 99


def test_mis_triangle():
    for s in range(10):
        _, r = mis_swd(triangle(), seed=s)
        assert len(r.leaders) == 1 and oracle_is_mis(triangle(), r.leaders)
        assert all(r.masters[u] in r.leaders for u in r.status if u not in r.leaders)


# -- connectors and schedules ----------------------------------------------------------

def test_connect_star_single_leader():
    net = star_network(6)
    _, bb = connect_bb(net, {1}, {u: 1 for u in range(2, 8)})
    assert bb.connectors == set() and bb.success
    assert all(bb.masters[u] == 1 for u in range(2, 8))
    rep = oracle_backbone(net, bb)
    assert rep.valid and rep.size == 1


def test_connect_path5():
    net = line_network(5, 0.6)
    _, bb = connect_bb(net, {1, 3, 5}, {2: 1, 4: 3})
    assert bb.connectors == {2, 4} and bb.backbone == {1, 2, 3, 4, 5}
    rep = oracle_backbone(net, bb)
    assert rep.connected and rep.dominating


def test_connect_distance_three_pair():
    net = line_network(4, 0.6)
    _, bb = connect_bb(net, {1, 4}, {2: 1, 3: 4})
    assert bb.connectors == {2, 3}
    assert {(r.frm, r.to, r.via, r.through) for r in bb.records} >= {(1, 4, 2, 3), (1, 4, 3, 2)}


def test_backbone_export():
    net = line_network(5, 0.6)
    _, bb = connect_bb(net, {1, 3, 5}, {2: 1, 4: 3})
    obj = json.loads(bb.dumps())
    assert set(obj) >= {"leaders", "connectors", "masters", "a1", "a2", "schedules"}
    assert {c["via"] for c in obj["connectors"]} == {2, 4}
    assert obj["schedules"]["inter"] == family_key("ssf", 5, 5, None, DEFAULT_PARAMS)


def test_inter_h_examples():
    one = star_network(0)
    _, bb = connect_bb(one, {1}, {})
    rep = run_inter_h(Simulation(one, one.names), bb)
    assert rep.complete and rep.rounds == bb.a1
    pair = line_network(2, 0.5)
    _, bb = connect_bb(pair, {1, 2}, {})
    rep = run_inter_h(Simulation(pair, pair.names), bb)
    assert rep.pairs == 2 and rep.complete
    path = line_network(5, 0.6)
    _, bb = connect_bb(path, {1, 3, 5}, {2: 1, 4: 3})
    rep = run_inter_h(Simulation(path, path.names), bb)
    assert rep.pairs == 8 and rep.complete


def test_intra_h_examples():
    one = star_network(0)
    _, bb = connect_bb(one, {1}, {})
    assert bb.sigma == {} and run_intra_h(Simulation(one, one.names), bb).complete
    pair = line_network(2, 0.5)
    _, bb = connect_bb(pair, {1}, {2: 1})
    assert bb.sigma == {2: 0}
    assert run_intra_h(Simulation(pair, pair.names), bb).complete


def test_intra_h_star_of_ten():
    net = star_network(10)
    ok = 0
    for s in range(100):
        _, bb = connect_bb(net, {1}, {u: 1 for u in range(2, 12)}, seed=s)
        rep = run_intra_h(Simulation(net, net.names, seed=s), bb)
        ok += len(set(bb.sigma.values())) == 10 and rep.complete and rep.rounds == bb.a2
    assert ok >= 99


def test_backbone_on_grid():
    from barebones.harness import Scenario, generate
    sc = Scenario.from_dict({"schema": 1, "name": "g", "protocol": "backbone",
                             "generator": {"kind": "grid", "k": 4}})
    net = generate(sc, 0)
    _, mis, bb = backbone(net, seed=1)
    assert oracle_is_mis(net, mis.leaders) and mis.invariants_ok
    rep = oracle_backbone(net, bb)
    assert rep.valid and bb.success
    assert rep.size <= 5 * 6  # minimum CDS of the 4x4 grid graph has 6 nodes


# -- partly coordinated start ----------------------------------------------------------

@pytest.mark.parametrize("start", [[1], [1, 20]])
def test_emulated_on_path(start):
    net = line_network(20, 0.6, name_space=80)
    for s in range(3):
        trace, r = emulated_dfs_backbone(net, start, seed=s)
        assert r.success and r.dfs.monotone and r.dfs.broadcast
        assert r.dfs.source == max(start)
        assert oracle_backbone(net, r.backbone).valid and trace.violations == 0


def test_emulated_all_start():
    net = line_network(6, 0.6)
    trace, r = emulated_dfs_backbone(net, net.names, seed=0)
    assert r.success and r.dfs.max_sources_per_box <= 25


def test_params_from_dict():
    assert ProtocolParams.from_dict({"d": 8}).d == 8
    with pytest.raises(ValueError):
        ProtocolParams.from_dict({"nope": 1})

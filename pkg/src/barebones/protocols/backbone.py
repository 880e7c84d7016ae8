"""Connector selection and backbone communication schedules.

Given an MIS ("leaders"), :class:`ConnectBB` runs on a synchronized network:

Stage 1
  part 1  leaders send their names along the light ssf; every other node
          keeps the first 25 distinct leader names it hears;
  part 2  every non-leader picks t_v in [0, tv_factor * Delta).  In group t_v
          it sends, in block j of 25, its j-th leader (heavy ssf per block);
          listeners learn two-hop leaders together with the relaying node and
          the slot where they heard it.  A second pass with 49 blocks per
          group forwards one-hop and two-hop leaders, so each leader learns
          every leader within three hops along with one or two connectors;
  part 3  leaders announce each chosen configuration (121 light-ssf
          executions); first connectors relay to second connectors (121 more);
  part 4  backbone nodes send their names once (backbone ssf, which must
          outnumber the internal backbone degree) to learn backbone neighbours.

Stage 2
  Inter_H: backbone nodes send along the backbone ssf (a control run also lets
           nodes without a master adopt the smallest backbone name heard);
  Intra_H: non-backbone nodes register with their master in a random heavy-ssf
           block in [0, intra_factor * Delta * log N); each master then
           acknowledges its sorted slaves one light-ssf execution each, which
           fixes every slave's position sigma; slave v then owns rounds
           [sigma_v * z, sigma_v * z + z) of the a2 = Delta * z round schedule.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..engine import Message, Simulation, family_mask
from .params import DEFAULT_PARAMS, ProtocolParams, family_key, pow2_ceil


@dataclass(frozen=True)
class ConnectorRecord:
    """``via`` connects leader ``frm`` to leader ``to`` (with ``through`` if two hops)."""

    via: int
    frm: int
    to: int
    through: int | None = None

    def to_json(self) -> dict:
        return {"via": self.via, "from": self.frm, "to": self.to, "through": self.through}


@dataclass
class BackboneResult:
    leaders: set[int]
    connectors: set[int]
    records: list[ConnectorRecord]
    masters: dict[int, int]
    backbone_neighbors: dict[int, set[int]]
    sigma: dict[int, int]
    slaves: dict[int, list[int]]
    a1: int
    a2: int
    z: int
    inter_key: str
    intra_key: str
    rounds: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def backbone(self) -> set[int]:
        return self.leaders | self.connectors

    @property
    def success(self) -> bool:
        return not self.failures

    def pairs_served(self) -> dict[int, int]:
        pairs: dict[int, set] = defaultdict(set)
        for r in self.records:
            pairs[r.via].add(frozenset((r.frm, r.to)))
        return {u: len(p) for u, p in pairs.items()}

    def summary(self) -> dict:
        return {
            "leaders": len(self.leaders),
            "connectors": len(self.connectors),
            "a1": self.a1,
            "a2": self.a2,
            "rounds": self.rounds,
            "failures": list(self.failures),
        }

    def to_json(self) -> dict:
        return {
            "leaders": sorted(self.leaders),
            "connectors": [r.to_json() for r in sorted(
                self.records, key=lambda r: (r.via, r.frm, r.to, r.through or 0))],
            "masters": {str(k): v for k, v in sorted(self.masters.items())},
            "sigma": {str(k): v for k, v in sorted(self.sigma.items())},
            "a1": self.a1,
            "a2": self.a2,
            "schedules": {"inter": self.inter_key, "intra": self.intra_key},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _execute(sim: Simulation, fam, senders: list[int], messages: list[Message]):
    """One ssf execution by ``senders``; returns [(slot, receiver, sender position)]."""
    if not senders:
        sim.advance(fam.length)
        return []
    res = sim.run_block(senders, family_mask(fam, senders), messages)
    return list(zip(res.slots.tolist(), sim.names_of(res.receivers).tolist(),
                    res.senders.tolist()))


def _grouped(sim: Simulation, fam, blocks_per_group: int, groups: int,
             plan: dict[int, list], make_msg) -> list:
    """Blocks of heavy-ssf executions; ``plan[v]`` lists v's payload per block j.

    Node v is active in group ``plan_group[v]``; payload j goes out in block j.
    Returns [(absolute round, receiver, sender, payload)].
    """
    x = fam.length
    base = sim.round
    by_block: dict[tuple[int, int], list[int]] = defaultdict(list)
    for v, (group, payloads) in plan.items():
        for j in range(min(len(payloads), blocks_per_group)):
            by_block[(group, j)].append(v)
    out = []
    for (group, j) in sorted(by_block):
        start = base + (group * blocks_per_group + j) * x
        sim.advance(start - sim.round)
        senders = sorted(by_block[(group, j)])
        payloads = [plan[v][1][j] for v in senders]
        for slot, r, pos in _execute(sim, fam, senders,
                                     [make_msg(v, p) for v, p in zip(senders, payloads)]):
            out.append((start + slot, r, senders[pos], payloads[pos]))
    sim.advance(base + groups * blocks_per_group * x - sim.round)
    return out


def _repeated(sim: Simulation, fam, times: int, items: dict[int, list], make_msg) -> list:
    """``times`` back-to-back executions; execution j sends ``items[v][j]``.

    Returns [(receiver, sender, item)].
    """
    out = []
    base = sim.round
    for j in range(times):
        senders = sorted(v for v, lst in items.items() if j < len(lst))
        if not senders:
            break
        sim.advance(base + j * fam.length - sim.round)
        for _, r, pos in _execute(sim, fam, senders,
                                  [make_msg(v, items[v][j]) for v in senders]):
            out.append((r, senders[pos], items[senders[pos]][j]))
    sim.advance(base + times * fam.length - sim.round)
    return out


class ConnectBB:
    def __init__(self, leaders, masters=None, params: ProtocolParams = DEFAULT_PARAMS):
        self.leaders = set(leaders)
        self.masters = dict(masters or {})
        self.params = params

    def execute(self, sim: Simulation) -> BackboneResult:
        net = sim.network
        p = self.params
        N = net.name_space
        L = p.log_n(N)
        delta = max(1, net.max_degree)
        light = p.light(N)
        heavy = p.heavy(N)
        z = light.length
        leaders = self.leaders
        others = [u for u in net.names if u not in leaders]

        # -- part 1: first leaders -------------------------------------------
        first: dict[int, list[int]] = defaultdict(list)
        lead = sorted(leaders)
        for _, r, pos in _execute(sim, light, lead, [Message(u, "leader") for u in lead]):
            u = lead[pos]
            lst = first[r]
            if r not in leaders and u not in lst and len(lst) < p.first_leaders:
                lst.append(u)

        # -- part 2: two-hop and three-hop leaders ----------------------------
        groups = pow2_ceil(p.tv_factor * delta)
        bits = groups.bit_length() - 1
        t_v = {v: sim.draw_bits(v, bits) for v in others}
        plan1 = {v: (t_v[v], list(first[v])) for v in others if first[v]}
        heard1 = _grouped(sim, heavy, p.first_leaders, groups, plan1,
                          lambda v, u: Message(v, "leader1", (u,)))
        # two_hop[w][u] = (relay g, round f) for the first time w heard u via g
        two_hop: dict[int, dict[int, tuple[int, int]]] = defaultdict(dict)
        for f, w, g, u in heard1:
            if u != w and u not in two_hop[w]:
                two_hop[w][u] = (g, f)
        plan2 = {}
        for v in others:
            known = [(u, None, None) for u in first[v]]
            known += [(u, g, f) for u, (g, f) in sorted(two_hop[v].items())
                      if u not in first[v] and u != v]
            if known:
                plan2[v] = (t_v[v], known[:p.two_hop_leaders])

        def msg2(v, item):
            u, g, f = item
            return Message(v, "leader2", (u,) if g is None else (u, g),
                           () if f is None else (f,))

        heard2 = _grouped(sim, heavy, p.two_hop_leaders, groups, plan2, msg2)
        # configurations per leader w and target leader u
        configs: dict[int, dict[int, set[tuple]]] = defaultdict(lambda: defaultdict(set))
        for w in leaders:
            for u, (g, f) in two_hop[w].items():
                if u in leaders and u != w:
                    configs[w][u].add(((g,), (f,)))
        for f, w, v, (u, g, f1) in heard2:
            if w not in leaders or u == w or u not in leaders:
                continue
            if g is None:
                configs[w][u].add(((v,), (f,)))
            elif g != w:
                configs[w][u].add(((v, g), (f, f1)))
        chosen: dict[int, list] = {}
        for w in sorted(leaders):
            items = []
            for u in sorted(configs[w]):
                opts = sorted(configs[w][u], key=lambda c: (len(c[0]), c[0]))
                items.append((u, *opts[0]))
            chosen[w] = items[:p.three_hop_leaders]

        # -- part 3: inform connectors ----------------------------------------
        records: set[ConnectorRecord] = set()
        relay: dict[int, list] = defaultdict(list)

        def msg3(w, item):
            u, conn, fs = item
            return Message(w, "connector", (u, *conn), fs)

        for r, w, (u, conn, fs) in _repeated(sim, light, p.three_hop_leaders, chosen, msg3):
            if conn[0] != r:
                continue
            if len(conn) == 1:
                records.add(ConnectorRecord(r, u, w))
            else:
                records.add(ConnectorRecord(r, u, w, conn[1]))
                item = (conn[1], u, w, fs[1])
                if item not in relay[r]:
                    relay[r].append(item)
        relay_items = {g: lst[:p.three_hop_leaders] for g, lst in relay.items()}

        def msg_relay(g1, item):
            g2, u, w, f2 = item
            return Message(g1, "relay", (g2, u, w), (f2,))

        for r, g1, (g2, u, w, _) in _repeated(sim, light, p.three_hop_leaders,
                                             relay_items, msg_relay):
            if g2 == r:
                records.add(ConnectorRecord(r, u, w, g1))
        connectors = {rec.via for rec in records} - leaders
        backbone = leaders | connectors

        # -- part 4: backbone neighbourhoods ------------------------------------
        bb = sorted(backbone)
        bb_nb: dict[int, set[int]] = {u: set() for u in bb}
        bbfam = p.backbone_ssf(N)
        for _, r, pos in _execute(sim, bbfam, bb, [Message(u, "backbone") for u in bb]):
            if r in backbone:
                bb_nb[r].add(bb[pos])

        # -- stage 2: Inter_H control run and masters -----------------------------
        masters = {v: m for v, m in self.masters.items() if v not in backbone and m in backbone}
        heard_bb: dict[int, int] = {}
        for _, r, pos in _execute(sim, bbfam, bb, [Message(u, "inter") for u in bb]):
            if r not in backbone:
                heard_bb[r] = min(heard_bb.get(r, bb[pos]), bb[pos])
            else:
                bb_nb[r].add(bb[pos])
        for v in net.names:
            if v not in backbone and v not in masters and v in heard_bb:
                masters[v] = heard_bb[v]
                sim.event(v, "master", heard_bb[v])

        # -- stage 2: Intra_H registration and positions ----------------------------
        slots = pow2_ceil(p.intra_factor * delta * L)
        sbits = slots.bit_length() - 1
        plan_reg = {v: (sim.draw_bits(v, sbits), [masters[v]])
                    for v in sorted(masters)}
        registered: dict[int, set[int]] = defaultdict(set)
        for _, r, v, m in _grouped(sim, heavy, 1, slots, plan_reg,
                                   lambda v, m: Message(v, "register", (m,))):
            if r == m:
                registered[r].add(v)
        slaves = {m: sorted(vs) for m, vs in registered.items()}
        sigma: dict[int, int] = {}
        for r, m, v in _repeated(sim, light, delta, slaves,
                                 lambda m, v: Message(m, "position", (v,))):
            if r == v and masters.get(v) == m:
                sigma[v] = slaves[m].index(v)

        failures = []
        missing = sorted(v for v in net.names if v not in backbone and v not in sigma)
        if missing:
            failures.append(f"unscheduled non-backbone nodes {missing[:5]}")
        unreached = _unreached_pairs(net, leaders, records)
        if unreached:
            failures.append(f"leader pairs within 3 hops not joined {unreached[:3]}")
        over = {u: k for u, k in _pairs_served(records).items() if k > p.three_hop_leaders}
        if over:
            failures.append(f"connectors serving too many pairs {sorted(over)[:5]}")
        return BackboneResult(
            leaders=set(leaders),
            connectors=connectors,
            records=sorted(records, key=lambda r: (r.via, r.frm, r.to, r.through or 0)),
            masters=masters,
            backbone_neighbors=bb_nb,
            sigma=sigma,
            slaves=slaves,
            a1=2 * bbfam.length,
            a2=delta * z,
            z=z,
            inter_key=family_key("ssf", N, max(1, min(p.x_backbone, N)), None, p),
            intra_key=family_key("ssf", N, max(1, min(p.x_light, N)), None, p),
            rounds=sim.round,
            failures=failures,
        )


def _pairs_served(records) -> dict[int, int]:
    pairs: dict[int, set] = defaultdict(set)
    for r in records:
        pairs[r.via].add(frozenset((r.frm, r.to)))
    return {u: len(s) for u, s in pairs.items()}


def _unreached_pairs(net, leaders, records) -> list[tuple[int, int]]:
    """Leader pairs within three hops not joined through their recorded connectors."""
    via: dict[frozenset, set[int]] = defaultdict(set)
    for r in records:
        via[frozenset((r.frm, r.to))].add(r.via)
    out = []
    for u in sorted(leaders):
        # leaders within three hops of u
        seen = {u}
        frontier = {u}
        for _ in range(3):
            frontier = {y for x in frontier for y in net.neighbors(x)} - seen
            seen |= frontier
        for w in sorted(seen & leaders):
            if w <= u:
                continue
            allowed = via[frozenset((u, w))] | {u, w}
            # BFS from u to w inside allowed nodes
            reach = {u}
            stack = [u]
            while stack:
                x = stack.pop()
                for y in net.neighbors(x):
                    if y in allowed and y not in reach:
                        reach.add(y)
                        stack.append(y)
            if w not in reach:
                out.append((u, w))
    return out


def connect_bb(network, leaders, masters=None, seed: int = 0,
               params: ProtocolParams = DEFAULT_PARAMS, record: str = "summary",
               round_limit: int = 10**9):
    """Synchronized-start connector selection for a given MIS; returns (trace, result)."""
    sim = Simulation(network, network.names, seed=seed, round_limit=round_limit, record=record)
    result = ConnectBB(leaders, masters, params).execute(sim)
    trace = sim.finish(success=result.success, **result.summary())
    return trace, result


class Backbone:
    """Election followed by connector selection (synchronized start)."""

    def __init__(self, params: ProtocolParams = DEFAULT_PARAMS):
        self.params = params

    def execute(self, sim: Simulation):
        from .mis import MisSWD

        mis = MisSWD(self.params).execute(sim)
        bb = ConnectBB(mis.leaders, mis.masters, self.params).execute(sim)
        if not mis.success:
            bb.failures.insert(0, f"election left {mis.workers_left} workers")
        return mis, bb


def backbone(network, seed: int = 0, params: ProtocolParams = DEFAULT_PARAMS,
             record: str = "summary", round_limit: int = 10**9):
    """Run election then connector selection; returns (trace, mis result, backbone result)."""
    sim = Simulation(network, network.names, seed=seed, round_limit=round_limit, record=record)
    mis, bb = Backbone(params).execute(sim)
    trace = sim.finish(success=bb.success and mis.success, **bb.summary())
    return trace, mis, bb


# -- using the schedules ------------------------------------------------------------

@dataclass
class InterReport:
    pairs: int
    exchanged: int
    slaves: int
    slaves_reached: int
    rounds: int

    @property
    def complete(self) -> bool:
        return self.exchanged == self.pairs and self.slaves_reached == self.slaves


def run_inter_h(sim: Simulation, result: BackboneResult, params: ProtocolParams = DEFAULT_PARAMS,
                messages: dict[int, object] | None = None) -> InterReport:
    """One Inter_H multi-round of a1 rounds on a running simulation.

    First half: backbone nodes exchange along the backbone ssf.  Second
    half: every backbone node repeats to its slaves what it received.
    """
    net = sim.network
    fam = params.backbone_ssf(net.name_space)
    bb = sorted(result.backbone)
    start = sim.round
    got: dict[int, set[int]] = defaultdict(set)
    for _, r, pos in _execute(sim, fam, bb,
                              [Message(u, "inter", rumor=bool(messages and u in messages))
                               for u in bb]):
        got[r].add(bb[pos])
    pairs = [(u, v) for u in bb for v in net.neighbors(u) if v in result.backbone]
    exchanged = sum(1 for u, v in pairs if u in got[v])
    reached: set[int] = set()
    for _, r, pos in _execute(sim, fam, bb, [Message(u, "inter-relay") for u in bb]):
        if result.masters.get(r) == bb[pos]:
            reached.add(r)
    sim.advance(start + result.a1 - sim.round)
    return InterReport(len(pairs), exchanged, len(result.masters), len(reached),
                       sim.round - start)


@dataclass
class IntraReport:
    slaves: int
    delivered: int
    rounds: int

    @property
    def complete(self) -> bool:
        return self.delivered == self.slaves


def run_intra_h(sim: Simulation, result: BackboneResult,
                params: ProtocolParams = DEFAULT_PARAMS) -> IntraReport:
    """Every scheduled slave sends to its master within a2 rounds."""
    net = sim.network
    light = params.light(net.name_space)
    z = light.length
    slaves = sorted(result.sigma)
    start = sim.round
    delivered = 0
    if slaves:
        mask = np.zeros((result.a2, len(slaves)), dtype=bool)
        for j, v in enumerate(slaves):
            s = result.sigma[v]
            mask[s * z:(s + 1) * z, j] = light.matrix[v]
        res = sim.run_block(slaves, mask, [Message(v, "intra", (result.masters[v],))
                                           for v in slaves])
        ok = set()
        for r, j in zip(sim.names_of(res.receivers).tolist(), res.senders.tolist()):
            if result.masters[slaves[j]] == r:
                ok.add(slaves[j])
        delivered = len(ok)
    sim.advance(start + result.a2 - sim.round)
    non_backbone = sum(1 for u in net.names if u not in result.backbone)
    return IntraReport(non_backbone, delivered, sim.round - start)

"""Maximal independent set election from a synchronized start.

Phases i = 0..K with 2^K the smallest power of two >= Delta; each phase has
``c_phases * log N`` sub-phases of two stages:

1. every worker becomes a candidate with probability 2^i / 2^(K+1); candidates
   send their names along the heavy ssf; a candidate that hears another
   candidate reverts to worker, otherwise it becomes a leader;
2. the new leaders send their names along the heavy ssf; a worker that hears
   any of them becomes a slave of the smallest name heard.

Leader and slave are terminal.  A worker left after the last phase means the
run failed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..engine import Message, Simulation, family_mask
from .params import DEFAULT_PARAMS, ProtocolParams, log2_int

WORKER, CANDIDATE, LEADER, SLAVE = "worker", "candidate", "leader", "slave"
# a node has at most this many leader neighbours while leaders are independent
MAX_LEADER_NEIGHBOURS = 25


@dataclass
class PhaseSnapshot:
    phase: int
    max_workers_per_box: int
    worker_bound: int
    leader_neighbours_are_slaves: bool
    max_leader_neighbours: int
    candidates: int

    @property
    def ok(self) -> bool:
        return (self.max_workers_per_box <= self.worker_bound
                and self.leader_neighbours_are_slaves
                and self.max_leader_neighbours <= MAX_LEADER_NEIGHBOURS
                and self.candidates == 0)

    def to_json(self) -> dict:
        return {**self.__dict__, "ok": self.ok}


@dataclass
class MisResult:
    leaders: set[int]
    masters: dict[int, int]
    status: dict[int, str]
    snapshots: list[PhaseSnapshot] = field(default_factory=list)
    rounds: int = 0

    @property
    def workers_left(self) -> int:
        return sum(1 for s in self.status.values() if s == WORKER)

    @property
    def invariants_ok(self) -> bool:
        return all(s.ok for s in self.snapshots)

    @property
    def success(self) -> bool:
        return self.workers_left == 0

    def summary(self) -> dict:
        return {
            "leaders": sorted(self.leaders),
            "workers_left": self.workers_left,
            "invariants_ok": self.invariants_ok,
            "rounds": self.rounds,
        }


def _snapshot(network, status: dict[int, str], phase: int, bound: int) -> PhaseSnapshot:
    boxes = network.boxes()
    workers = Counter(boxes[u] for u, s in status.items() if s == WORKER)
    slaves_ok = True
    max_leaders = 0
    for u, s in status.items():
        lead = sum(1 for v in network.neighbors(u) if status.get(v) == LEADER)
        max_leaders = max(max_leaders, lead)
        if lead and s not in (SLAVE, LEADER):
            slaves_ok = False
    return PhaseSnapshot(
        phase=phase,
        max_workers_per_box=max(workers.values(), default=0),
        worker_bound=bound,
        leader_neighbours_are_slaves=slaves_ok,
        max_leader_neighbours=max_leaders,
        candidates=sum(1 for s in status.values() if s == CANDIDATE),
    )


class MisSWD:
    """Runs on the awake ``participants`` (all nodes by default)."""

    def __init__(self, params: ProtocolParams = DEFAULT_PARAMS, participants=None):
        self.params = params
        self.participants = participants

    def execute(self, sim: Simulation) -> MisResult:
        net = sim.network
        params = self.params
        N = net.name_space
        L = params.log_n(N)
        K = log2_int(max(1, net.max_degree))
        fam = params.heavy(N)
        nodes = sorted(self.participants if self.participants is not None else net.names)
        status = {u: WORKER for u in nodes}
        masters: dict[int, int] = {}
        snapshots = []
        delta_p = 2 ** K
        start = sim.round
        for i in range(K + 1):
            # a box is a clique, so it can hold Delta + 1 workers before phase 0
            bound = net.max_degree + 1 if i == 0 else delta_p // 2 ** i
            snapshots.append(_snapshot(net, status, i, bound))
            for _ in range(params.c_phases * L):
                workers = [u for u in nodes if status[u] == WORKER]
                if not workers:
                    break
                cands = [u for u in workers
                         if sim.draw_coins(u, 1, K - i + params.candidate_shift)[0]]
                for u in cands:
                    status[u] = CANDIDATE
                demoted = set()
                if cands:
                    res = sim.run_block(cands, family_mask(fam, cands),
                                        [Message(u, "candidate") for u in cands])
                    heard = set(sim.names_of(res.receivers).tolist())
                    demoted = {u for u in cands if u in heard}
                else:
                    sim.advance(fam.length)
                new_leaders = []
                for u in cands:
                    if u in demoted:
                        status[u] = WORKER
                    else:
                        status[u] = LEADER
                        new_leaders.append(u)
                        sim.event(u, "leader")
                if new_leaders:
                    res = sim.run_block(new_leaders, family_mask(fam, new_leaders),
                                        [Message(u, "leader") for u in new_leaders])
                    heard: dict[int, int] = {}
                    for r, j in zip(sim.names_of(res.receivers).tolist(), res.senders.tolist()):
                        m = new_leaders[j]
                        if r in heard:
                            heard[r] = min(heard[r], m)
                        else:
                            heard[r] = m
                    for r, m in sorted(heard.items()):
                        if status.get(r) == WORKER:
                            status[r] = SLAVE
                            masters[r] = m
                            sim.event(r, "slave", m)
                else:
                    sim.advance(fam.length)
        # sub-phases after the last worker is gone are silent
        sim.advance(start + mis_rounds(net, params) - sim.round)
        snapshots.append(_snapshot(net, status, K + 1, 0))
        leaders = {u for u, s in status.items() if s == LEADER}
        return MisResult(leaders, masters, status, snapshots, sim.round)


def mis_rounds(network, params: ProtocolParams = DEFAULT_PARAMS) -> int:
    """Fixed schedule length of the election on ``network``."""
    K = log2_int(max(1, network.max_degree))
    L = params.log_n(network.name_space)
    return (K + 1) * params.c_phases * L * 2 * params.heavy(network.name_space).length


def mis_swd(network, seed: int = 0, params: ProtocolParams = DEFAULT_PARAMS,
            record: str = "summary", round_limit: int = 10**9):
    """Synchronized-start election on all nodes; returns (trace, result)."""
    sim = Simulation(network, network.names, seed=seed, round_limit=round_limit, record=record)
    result = MisSWD(params).execute(sim)
    trace = sim.finish(success=result.success, **result.summary())
    return trace, result


__all__ = ["MisSWD", "MisResult", "PhaseSnapshot", "mis_swd", "mis_rounds",
           "WORKER", "CANDIDATE", "LEADER", "SLAVE"]

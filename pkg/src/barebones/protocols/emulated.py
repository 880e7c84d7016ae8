"""Backbone construction from a partly coordinated start.

1. The initially awake set S elects an MIS among itself (nodes outside S
   ignore what they hear).
2. Every elected node starts a depth-first broadcast with its own name as the
   source; all executions are interleaved by stretching each round over the
   light ssf, and a node always follows the highest source name it has heard
   (see :mod:`.dfs`, ``emulate=True``).  The execution of the highest name
   wakes every node.
3. Once that execution has returned to its source, all nodes run the
   synchronized backbone construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..engine import Simulation
from .backbone import Backbone, BackboneResult
from .dfs import DfsDriver, DfsResult
from .mis import MisResult, MisSWD
from .params import DEFAULT_PARAMS, ProtocolParams


@dataclass
class EmulatedResult:
    start_set: list[int]
    sources: MisResult
    dfs: DfsResult
    mis: MisResult | None
    backbone: BackboneResult | None
    rounds: int
    dfs_rounds: int

    @property
    def failures(self) -> list[str]:
        out = []
        if not self.dfs.broadcast:
            out.append(f"{len(self.dfs.awake)} of {len(self.dfs.status)} nodes woken")
        if not self.dfs.monotone:
            out.append("a node adopted a lower source name")
        if self.backbone is not None:
            out.extend(self.backbone.failures)
        elif self.dfs.broadcast:
            out.append("backbone not built")
        return out

    @property
    def success(self) -> bool:
        return not self.failures

    def summary(self) -> dict:
        return {
            "start_set": len(self.start_set),
            "sources": sorted(self.sources.leaders),
            "winner": self.dfs.source,
            "dfs_rounds": self.dfs_rounds,
            "switches": self.dfs.switches,
            "max_sources_per_box": self.dfs.max_sources_per_box,
            "rounds": self.rounds,
            "failures": self.failures,
        }


class EmulatedDfsBackbone:
    def __init__(self, start_set, params: ProtocolParams = DEFAULT_PARAMS):
        self.start_set = sorted(start_set)
        self.params = params

    def execute(self, sim: Simulation) -> EmulatedResult:
        p = self.params
        sources = MisSWD(p, participants=self.start_set).execute(sim)
        t0 = sim.round
        driver = DfsDriver(sim, p, emulate=True)
        for u in sorted(sources.leaders):
            driver.start_source(u)
        driver.run()
        dfs = driver.result()
        dfs_rounds = sim.round - t0
        mis = bb = None
        if dfs.broadcast:
            mis, bb = Backbone(p).execute(sim)
        return EmulatedResult(self.start_set, sources, dfs, mis, bb, sim.round, dfs_rounds)


def emulated_dfs_backbone(network, start_set, seed: int = 0,
                          params: ProtocolParams = DEFAULT_PARAMS, record: str = "summary",
                          round_limit: int = 10**9):
    """Returns (trace, result)."""
    sim = Simulation(network, start_set, seed=seed, round_limit=round_limit, record=record)
    result = EmulatedDfsBackbone(start_set, params).execute(sim)
    trace = sim.finish(success=result.success, **result.summary())
    return trace, result

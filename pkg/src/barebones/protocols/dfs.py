"""Token-passing depth-first broadcast from an uncoordinated start.

Each node runs a small state machine driven by what it decodes.  A node
holding the token for the first time

1. announces an estimation window in which its unexplored neighbours transmit
   with probability 2^-i during sub-stage i; the count of clean receptions
   per sub-stage yields an upper bound on their number;
2. runs learning stages: neighbours transmit their names along a selector,
   and the holder announces, one per round, the names it decoded;
3. passes the token to each learned neighbour in increasing name order, then
   returns it to the node it came from.

The driver below advances all nodes round by round.  Rounds in which only
"bulk" messages (estimation pings, selector labels) are sent cannot change
anyone's plans, so such stretches are resolved as one engine block.

With ``emulate=True`` every round is stretched over the light ssf and nodes
derive their per-round feedback from the messages of all senders they heard,
keeping only the execution with the highest source name; this is the
multi-source mode used for backbone construction from a partial start.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..engine import Message, Simulation
from .params import DEFAULT_PARAMS, ProtocolParams

UNEXPLORED, VIEWED, GREY, BLACK = "unexplored", "viewed", "grey", "black"


class DfsNode:
    """Per-node state for the execution of the node's current source name."""

    def __init__(self, name: int):
        self.name = name
        self.source: int | None = None
        self.reset()

    def reset(self) -> None:
        self.status = UNEXPLORED
        self.parent: int | None = None
        self.viewer: int | None = None
        self.coordinator: int | None = None
        self.children: list[int] = []
        self.next_child = 0
        self.estimate: int | None = None
        # holder bookkeeping
        self.phase: str | None = None
        self.window: tuple[int, int] | None = None
        self.counts: list[int] = []
        self.heard: set[int] = set()
        self.learned: list[int] = []
        self.stages: list[int] = []
        self.stage = 0
        self.plans: set[int] = set()
        self.timers: set[int] = set()


@dataclass
class DfsResult:
    source: int | None
    parent: dict[int, int | None]
    status: dict[int, str]
    estimates: dict[int, int]
    awake: set[int]
    rounds: int
    original_rounds: int
    token_passes: int
    finished: bool
    broadcast: bool
    tree_ok: bool
    switches: int = 0
    max_sources_per_box: int = 0
    monotone: bool = True
    stopped: str | None = None
    learned: list[int] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.finished and self.broadcast and self.tree_ok

    def summary(self) -> dict:
        return {
            "source": self.source,
            "rounds": self.rounds,
            "original_rounds": self.original_rounds,
            "token_passes": self.token_passes,
            "finished": self.finished,
            "broadcast": self.broadcast,
            "tree_ok": self.tree_ok,
            "switches": self.switches,
            "max_sources_per_box": self.max_sources_per_box,
        }


class DfsDriver:
    """Advances every node's state machine; see the module docstring."""

    def __init__(self, sim: Simulation, params: ProtocolParams = DEFAULT_PARAMS, *,
                 emulate: bool = False, stop_after: str | None = None,
                 window_cap: int = 1 << 22):
        self.sim = sim
        self.net = sim.network
        self.params = params
        self.N = self.net.name_space
        self.L = params.log_n(self.N)
        self.dL = params.d * self.L
        self.emulate = emulate
        self.family = params.light(self.N) if emulate else None
        self.z = self.family.length if emulate else 1
        self.stop_after = stop_after
        self.window_cap = window_cap
        self.nodes = {u: DfsNode(u) for u in self.net.names}
        # control transmissions: round -> {node: message}
        self.plans: dict[int, dict[int, Message]] = defaultdict(dict)
        self.timers: dict[int, dict[int, str]] = defaultdict(dict)
        self.ctrl_heap: list[int] = []
        # bulk transmissions: node -> (increasing rounds, shared message)
        self.streams: dict[int, tuple[np.ndarray, Message]] = {}
        self.t = 0
        self.offset = sim.round
        self.finished = False
        self.stopped: str | None = None
        self.root: int | None = None
        self.token_passes = 0
        self.switches = 0
        self.monotone = True
        self.boxes = self.net.boxes()
        self.box_sources: dict[tuple, Counter] = defaultdict(Counter)
        self.max_sources_per_box = 0
        self._index = self.net.index

    # -- scheduling ---------------------------------------------------------
    def plan(self, node: DfsNode, t: int, msg: Message) -> None:
        if t < self.t:
            raise AssertionError("planning in the past")
        self.plans[t][node.name] = msg
        node.plans.add(t)
        heapq.heappush(self.ctrl_heap, t)

    def plan_stream(self, node: DfsNode, rounds: np.ndarray, msg: Message) -> None:
        """Bulk transmissions; a new stream replaces the node's previous one."""
        rounds = np.asarray(rounds, dtype=np.int64)
        if len(rounds) and rounds[0] < self.t:
            raise AssertionError("planning in the past")
        if len(rounds):
            self.streams[node.name] = (rounds, msg)
        else:
            self.streams.pop(node.name, None)

    def timer(self, node: DfsNode, t: int, tag: str) -> None:
        self.timers[t][node.name] = tag
        node.timers.add(t)
        heapq.heappush(self.ctrl_heap, t)

    def cancel(self, node: DfsNode) -> None:
        for t in node.plans:
            self.plans.get(t, {}).pop(node.name, None)
        for t in node.timers:
            self.timers.get(t, {}).pop(node.name, None)
        node.plans.clear()
        node.timers.clear()
        self.streams.pop(node.name, None)

    def _msg(self, node: DfsNode, kind: str, names=(), counters=()) -> Message:
        clock = self.sim.local_clock(node.name)
        return Message(node.name, kind, names, (*counters, clock), source=node.source)

    def _next_ctrl(self) -> int | None:
        while self.ctrl_heap:
            t = self.ctrl_heap[0]
            if t >= self.t and (self.plans.get(t) or self.timers.get(t)):
                return t
            heapq.heappop(self.ctrl_heap)
            if not self.plans.get(t):
                self.plans.pop(t, None)
            if not self.timers.get(t):
                self.timers.pop(t, None)
        return None

    def _next_stream(self) -> int | None:
        best = None
        for u in list(self.streams):
            rounds, msg = self.streams[u]
            if rounds[-1] < self.t:
                del self.streams[u]
                continue
            if rounds[0] < self.t:
                rounds = rounds[np.searchsorted(rounds, self.t):]
                self.streams[u] = (rounds, msg)
            if best is None or rounds[0] < best:
                best = int(rounds[0])
        return best

    # -- main loop ----------------------------------------------------------
    def start_source(self, u: int) -> None:
        node = self.nodes[u]
        node.source = u
        self._count_source(u, None, u)
        node.status = GREY
        self.root = u if self.root is None else self.root
        self.sim.event(u, "grey")
        self._begin_holder(node, self.t - 1)

    def run(self) -> None:
        while not self.finished and self.stopped is None:
            tc = self._next_ctrl()
            tb = self._next_stream()
            if tc is None and tb is None:
                break
            if tb is not None and (tc is None or tb < tc):
                k = max(1, len(self.streams))
                span = max(1, self.window_cap // (self.z * k))
                hi = tb + span if tc is None else min(tc, tb + span)
                self._window(tb, hi, control=False)
            else:
                self._window(tc, tc + 1, control=True)
                self._fire_timers(tc)
        self._goto(self.t)

    def _goto(self, t: int) -> None:
        """Advance the engine clock to the start of original round t."""
        target = self.offset + t * self.z
        if target > self.sim.round:
            self.sim.advance(target - self.sim.round)

    def _fire_timers(self, t: int) -> None:
        due = self.timers.pop(t, {})
        for u, tag in sorted(due.items()):
            node = self.nodes[u]
            node.timers.discard(t)
            self._on_timer(node, t, tag)

    def _window(self, lo: int, hi: int, control: bool) -> None:
        """Resolve original rounds [lo, hi); only round lo may hold control plans."""
        ctrl = self.plans.pop(lo, {}) if control else {}
        for u in ctrl:
            self.nodes[u].plans.discard(lo)
        r_parts, u_parts = [], []
        msgs: dict[int, Message] = {}
        for u, (rounds, msg) in self.streams.items():
            a, b = np.searchsorted(rounds, [lo, hi])
            if b > a:
                r_parts.append(rounds[a:b])
                u_parts.append(np.full(b - a, u, dtype=np.int64))
                msgs[u] = msg
        for u in ctrl:
            r_parts.append(np.array([lo], dtype=np.int64))
            u_parts.append(np.array([u], dtype=np.int64))
        self._goto(lo)
        if not r_parts:
            self.t = lo + 1
            return
        all_r = np.concatenate(r_parts)
        all_u = np.concatenate(u_parts)
        rounds, row = np.unique(all_r, return_inverse=True)
        senders, col = np.unique(all_u, return_inverse=True)
        senders = [int(u) for u in senders]
        orig = np.zeros((len(rounds), len(senders)), dtype=bool)
        orig[row, col] = True
        src = np.array([(ctrl.get(u) or msgs[u]).source for u in senders], dtype=np.int64)
        bulk = np.array([u not in ctrl for u in senders], dtype=bool)
        sent = list(ctrl.values()) + list(msgs.values())
        if self.emulate:
            fam = self.family.matrix[senders].T                  # z x k
            sim_rounds = (self.offset + rounds[:, None] * self.z
                          + np.arange(self.z)[None, :]).reshape(-1)
            compact = self.sim.record != "full"
            if not compact:
                mask = (orig[:, None, :] & fam[None, :, :]).reshape(-1, len(senders))
            if compact:
                res = self.sim.resolve_product(senders, orig, fam)
                pos, recv, send = res.groups, res.receivers, res.senders
            else:
                res = self.sim.resolve_rows(senders, mask)
                pos, recv, send = res.slots // self.z, res.receivers, res.senders
            keep = self._relevant(recv, send, src, bulk)
            heard = self._heard(pos[keep], recv[keep], send[keep], senders)
            cut = len(rounds) if control else self._emulated_cut(heard, senders, src, orig)
            rows = cut * self.z
            if compact:
                self.sim.commit_compact(senders, sim_rounds[:rows], res.take(res.groups < cut),
                                        sent)
            else:
                inside = res.slots < rows
                res = type(res)(res.slots[inside], res.receivers[inside], res.senders[inside])
                self.sim.commit_rows(senders, mask[:rows], sim_rounds[:rows], res, sent)
            heard = {key: v for key, v in heard.items() if key[0] < cut}
            self._emulated_feedback(rounds[:cut], heard, senders, ctrl, msgs, orig)
            self.t = int(rounds[cut - 1]) + 1
        else:
            res = self.sim.run_rows(senders, orig, self.offset + rounds, sent)
            keep = self._relevant(res.receivers, res.senders, src, bulk)
            names = self.sim.names_of(res.receivers[keep])
            for s, r, j in zip(res.slots[keep], names, res.senders[keep]):
                u = senders[j]
                t = int(rounds[s])
                msg = ctrl[u] if (t == lo and u in ctrl) else msgs[u]
                self._direct_feedback(int(r), t, msg)
            self.t = int(rounds[-1]) + 1
        self._goto(self.t)

    def _relevant(self, recv, send, src, bulk) -> np.ndarray:
        """Deliveries that can affect the receiver (as of the window start).

        Bulk messages only matter to holders of the same source in a listening
        phase, to nodes without a source, and (under emulation) to nodes whose
        source is lower.  Control messages always matter.  A receiver's source
        only grows within a window, so this filter is conservative.
        """
        if len(recv) == 0:
            return np.zeros(0, dtype=bool)
        n = self.net.n
        rsrc = np.full(n, -1, dtype=np.int64)
        holder = np.zeros(n, dtype=bool)
        for u, node in self.nodes.items():
            i = self._index[u]
            if node.source is not None:
                rsrc[i] = node.source
            if node.phase in ("esun", "lun"):
                holder[i] = True
        ms = src[send]
        rs = rsrc[recv]
        keep = (rs < 0) | (ms > rs) | (holder[recv] & (ms == rs))
        if not self.emulate:
            keep |= ~bulk[send]
        else:
            keep |= ms >= rs
        return keep

    # -- feedback -----------------------------------------------------------
    def _direct_feedback(self, r: int, t: int, msg: Message) -> None:
        node = self.nodes[r]
        if node.source is None:
            node.source = msg.source
            self._count_source(r, None, msg.source)
        self._on_message(node, t, msg)

    def _heard(self, pos, recv, send, senders):
        """(round position, receiver name) -> distinct sender names."""
        heard: dict[tuple[int, int], set[int]] = defaultdict(set)
        if len(pos):
            k = len(senders)
            n = self.net.n
            key = np.unique((pos * n + recv) * k + send)
            j = key % k
            rest = key // k
            names = self.sim.names_of(rest % n)
            for p, r, jj in zip((rest // n).tolist(), names.tolist(), j.tolist()):
                heard[(p, r)].add(senders[jj])
        return heard

    def _emulated_cut(self, heard, senders, src, orig) -> int:
        """How many leading rounds of a bulk window stay valid.

        A node that adopts a higher source abandons its plans; if it still had
        transmissions later in the window, the window ends after that round.
        """
        n_rounds = orig.shape[0]
        if not heard:
            return n_rounds
        col = {u: j for j, u in enumerate(senders)}
        current: dict[int, int | None] = {}
        for (p, r) in sorted(heard):
            cur = current.get(r, self.nodes[r].source)
            hi = max(int(src[col[s]]) for s in heard[(p, r)])
            if cur is None or hi > cur:
                current[r] = hi
                j = col.get(r)
                if j is not None and orig[p + 1:, j].any():
                    return p + 1
        return n_rounds

    def _emulated_feedback(self, rounds, heard, senders, ctrl, msgs, orig) -> None:
        col = {u: j for j, u in enumerate(senders)}
        lo = int(rounds[0])
        touched = set()
        for (p, r) in sorted(heard):
            t = int(rounds[p])
            node = self.nodes[r]
            group_all = [ctrl[s] if (t == lo and s in ctrl) else msgs[s]
                         for s in sorted(heard[(p, r)])]
            hi = max(m.source for m in group_all)
            if node.source is None or hi > node.source:
                self._switch(node, hi, t)
                touched.add(r)
                group = [m for m in group_all if m.source == hi]
                if len(group) >= 2:
                    continue
            else:
                group = [m for m in group_all if m.source == node.source]
                if len(group) != 1:
                    continue
            j = col.get(r)
            if j is not None and orig[p, j]:
                continue
            self._on_message(node, t, group[0])
        if touched:
            self._check_boxes(touched)

    def _switch(self, node: DfsNode, source: int, t: int) -> None:
        old = node.source
        if old is not None and source < old:
            self.monotone = False
        self.cancel(node)
        node.reset()
        node.source = source
        self._count_source(node.name, old, source)
        if old is not None:
            self.switches += 1
        self.sim.event(node.name, "source", source)

    def _count_source(self, u: int, old: int | None, new: int | None) -> None:
        box = self.boxes[u]
        c = self.box_sources[box]
        if old is not None:
            c[old] -= 1
            if c[old] <= 0:
                del c[old]
        if new is not None:
            c[new] += 1
        self.max_sources_per_box = max(self.max_sources_per_box, len(c))

    def _check_boxes(self, touched) -> None:
        for u in touched:
            self.max_sources_per_box = max(self.max_sources_per_box,
                                           len(self.box_sources[self.boxes[u]]))

    # -- node behaviour -----------------------------------------------------
    def _on_message(self, node: DfsNode, t: int, msg: Message) -> None:
        kind = msg.kind
        s = msg.src
        if kind == "ping":
            if node.phase == "esun" and node.window[0] <= t <= node.window[1]:
                node.counts[(t - node.window[0]) // self.dL] += 1
        elif kind == "label":
            if node.phase == "lun" and node.window[0] <= t <= node.window[1]:
                node.heard.add(s)
        elif kind == "esun":
            if node.status == UNEXPLORED:
                node.coordinator = s
                self._plan_pings(node, t + 1)
        elif kind == "lun":
            if node.status == UNEXPLORED:
                node.coordinator = s
                x, y = msg.counters[1], msg.counters[2]
                fam = self.params.selector(self.N, x, y)
                slots = np.flatnonzero(fam.matrix[node.name])
                self.plan_stream(node, t + 1 + slots, self._msg(node, "label"))
        elif kind == "view":
            if msg.names and msg.names[0] == node.name and node.status == UNEXPLORED:
                node.status = VIEWED
                node.viewer = s
                self.cancel(node)
                self.sim.event(node.name, "viewed", s)
        elif kind == "token":
            if msg.names[0] == node.name and node.status in (UNEXPLORED, VIEWED):
                self.cancel(node)
                node.status = GREY
                node.parent = s
                self.sim.event(node.name, "grey", s)
                self._begin_holder(node, t)
        elif kind == "return":
            if msg.names[0] == node.name and node.status == GREY and node.phase == "wait":
                self._next_child(node, t)

    def _plan_pings(self, node: DfsNode, start: int) -> None:
        """Sub-stage i: transmit in each of its d*L rounds with probability 2^-i."""
        parts = []
        for i in range(1, self.L + 1):
            coins = self.sim.draw_coins(node.name, self.dL, i)
            parts.append(start + (i - 1) * self.dL + np.flatnonzero(coins))
        self.plan_stream(node, np.concatenate(parts), self._msg(node, "ping"))

    def _begin_holder(self, node: DfsNode, t: int) -> None:
        """``node`` got the token in round t and acts from round t + 1."""
        self.plan(node, t + 1, self._msg(node, "esun"))
        start = t + 2
        end = start + self.L * self.dL - 1
        node.phase = "esun"
        node.window = (start, end)
        node.counts = [0] * self.L
        self.timer(node, end, "esun_done")

    def begin_learning(self, u: int, x: int) -> None:
        """Start only the learning stages at ``u`` with bound ``x``."""
        node = self.nodes[u]
        node.source = u
        node.status = GREY
        self.root = u
        self._start_lun(node, self.t - 1, x)

    def _on_timer(self, node: DfsNode, t: int, tag: str) -> None:
        if tag == "esun_done":
            threshold = self.dL / 8 * (1 - self.params.esun_slack)
            k = 0
            for i, c in enumerate(node.counts, start=1):
                if c >= threshold:
                    k = i
            x = 2 ** k if k else 0
            node.estimate = x
            self.sim.event(node.name, "estimate", x)
            if self.stop_after == "esun" and node.name == self.root:
                self.stopped = "esun"
                return
            if x == 0:
                node.children = []
                self._finish_learning(node, t)
            else:
                self._start_lun(node, t, x)
        elif tag == "lun_done":
            new = sorted(node.heard - set(node.learned))
            node.learned.extend(new)
            node.phase = "announce"
            for q, v in enumerate(new):
                self.plan(node, t + 1 + q, self._msg(node, "view", (v,), (len(new) - q - 1,)))
            self.timer(node, t + len(new), "announce_done") if new else self._next_stage(node, t)
        elif tag == "announce_done":
            self._next_stage(node, t)

    def _start_lun(self, node: DfsNode, t: int, x: int) -> None:
        c = self.params.lun_fraction
        stages = [min(x, self.N)]
        while stages[-1] > 1:
            stages.append(max(1, math.ceil((1 - c) * stages[-1])))
        node.stages = stages
        node.stage = -1
        node.learned = []
        self._next_stage(node, t)

    def _next_stage(self, node: DfsNode, t: int) -> None:
        node.stage += 1
        if node.stage >= len(node.stages):
            node.children = sorted(node.learned)
            if self.stop_after == "lun" and node.name == self.root:
                self.stopped = "lun"
                return
            self._finish_learning(node, t)
            return
        x = node.stages[node.stage]
        y = max(1, min(x, math.ceil(self.params.lun_fraction * x)))
        fam = self.params.selector(self.N, x, y)
        self.plan(node, t + 1, self._msg(node, "lun", (), (node.stage, x, y)))
        node.phase = "lun"
        node.heard = set()
        node.window = (t + 2, t + 1 + fam.length)
        self.timer(node, t + 1 + fam.length, "lun_done")

    def _finish_learning(self, node: DfsNode, t: int) -> None:
        node.next_child = 0
        self._next_child(node, t)

    def _next_child(self, node: DfsNode, t: int) -> None:
        if node.next_child < len(node.children):
            child = node.children[node.next_child]
            node.next_child += 1
            node.phase = "wait"
            self.token_passes += 1
            self.plan(node, t + 1, self._msg(node, "token", (child,)))
            return
        node.status = BLACK
        node.phase = None
        self.sim.event(node.name, "black")
        if node.parent is not None:
            self.plan(node, t + 1, self._msg(node, "return", (node.parent,)))
        elif not self.emulate and node.name == self.root:
            self.finished = True

    # -- results ------------------------------------------------------------
    def result(self) -> DfsResult:
        nodes = self.nodes
        if self.emulate:
            top = max((n.source for n in nodes.values() if n.source is not None), default=None)
            root = top
            finished = top is not None and nodes[top].status == BLACK and nodes[top].source == top
        else:
            root = self.root
            finished = self.finished
        parent = {u: n.parent for u, n in nodes.items()}
        status = {u: n.status for u, n in nodes.items()}
        awake = self.sim.awake
        tree_ok = (finished and all(s == BLACK for s in status.values())
                   and _is_tree(parent, root, self.net))
        if self.emulate:
            tree_ok = tree_ok and all(n.source == root for n in nodes.values())
        learned = nodes[self.root].learned if self.root is not None else []
        return DfsResult(
            source=root,
            parent=parent,
            status=status,
            estimates={u: n.estimate for u, n in nodes.items() if n.estimate is not None},
            awake=awake,
            rounds=self.sim.round,
            original_rounds=self.t,
            token_passes=self.token_passes,
            finished=finished,
            broadcast=len(awake) == self.net.n,
            tree_ok=tree_ok,
            switches=self.switches,
            max_sources_per_box=self.max_sources_per_box,
            monotone=self.monotone,
            stopped=self.stopped,
            learned=list(learned),
        )


def _is_tree(parent: dict[int, int | None], root, network) -> bool:
    """Parent pointers form a spanning tree of comm-graph edges rooted at ``root``."""
    if root is None or parent.get(root) is not None:
        return False
    for u, p in parent.items():
        if u == root:
            continue
        if p is None or p not in network.neighbors(u):
            return False
    for u in parent:
        seen = set()
        while u != root:
            if u in seen:
                return False
            seen.add(u)
            u = parent[u]
    return True


class WirelessDFS:
    """Single-source broadcast: ``execute`` expects only the source awake."""

    def __init__(self, source: int, params: ProtocolParams = DEFAULT_PARAMS):
        self.source = source
        self.params = params

    def execute(self, sim: Simulation) -> DfsResult:
        driver = DfsDriver(sim, self.params)
        driver.start_source(self.source)
        driver.run()
        return driver.result()


def wireless_dfs(network, source: int, seed: int = 0, params: ProtocolParams = DEFAULT_PARAMS,
                 round_limit: int = 10**9, record: str = "summary"):
    """Run the broadcast from ``source``; returns (trace, result)."""
    sim = Simulation(network, [source], seed=seed, round_limit=round_limit, record=record)
    result = WirelessDFS(source, params).execute(sim)
    trace = sim.finish(success=result.success, **result.summary())
    return trace, result


def esun(network, initiator: int, seed: int = 0, params: ProtocolParams = DEFAULT_PARAMS,
         record: str = "summary") -> tuple[int, Simulation]:
    """Estimate the initiator's unexplored neighbourhood from an uncoordinated start."""
    sim = Simulation(network, [initiator], seed=seed, record=record)
    driver = DfsDriver(sim, params, stop_after="esun")
    driver.start_source(initiator)
    driver.run()
    return driver.nodes[initiator].estimate, sim


def lun(network, initiator: int, x: int, seed: int = 0,
        params: ProtocolParams = DEFAULT_PARAMS, record: str = "summary") -> tuple[list[int], Simulation]:
    """Learn the initiator's unexplored neighbours given an upper bound ``x``."""
    sim = Simulation(network, [initiator], seed=seed, record=record)
    driver = DfsDriver(sim, params, stop_after="lun")
    driver.begin_learning(initiator, x)
    driver.run()
    return driver.nodes[initiator].learned, sim

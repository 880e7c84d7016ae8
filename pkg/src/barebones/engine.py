"""Synchronous round engine.

Every round each awake node either transmits one message or listens.  A
listener decodes the strongest transmitter when the weak-sensitivity rule
holds; the first message a sleeping node decodes wakes it for the next round.

Two entry points resolve rounds:

* :meth:`Simulation.step` takes one round's transmitters and their messages;
* :meth:`Simulation.run_block` takes a fixed set of senders and a slot mask
  (e.g. a selection family) and resolves all slots in one vectorised pass.

Both produce the same deliveries; the block form is what keeps desk-scale
experiments with schedules of 10^5 to 10^7 rounds tractable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .phys import Network, PhysicalConfig

DEFAULT_ROUND_LIMIT = 10**9
B_MSG = 24
TAG_BITS = 4
# cap on slots x senders x receivers materialised per vectorised chunk
_CHUNK_ELEMS = 1 << 21


class ProtocolError(RuntimeError):
    """A node did something the model forbids (e.g. transmitting while asleep)."""


class RoundLimitExceeded(RuntimeError):
    pass


class Message:
    """A protocol message: one optional rumor plus named control fields.

    ``names`` hold node names (each costs ceil(log2 N) bits); ``counters`` hold
    round numbers or slot indices (each costs ceil(log2 round_limit) bits).
    """

    __slots__ = ("src", "kind", "names", "counters", "rumor", "source")

    def __init__(self, src: int, kind: str, names: Sequence[int | None] = (),
                 counters: Sequence[int] = (), rumor: bool = False,
                 source: int | None = None):
        self.src = src
        self.kind = kind
        self.names = tuple(names)
        self.counters = tuple(counters)
        self.rumor = rumor
        self.source = source

    def control_bits(self, name_space: int, round_limit: int) -> int:
        name_bits = max(1, math.ceil(math.log2(name_space + 1)))
        counter_bits = max(1, math.ceil(math.log2(round_limit + 1)))
        n_names = 1 + len(self.names) + (self.source is not None)
        return TAG_BITS + n_names * name_bits + len(self.counters) * counter_bits

    def to_json(self) -> list:
        return [self.src, self.kind, list(self.names), list(self.counters),
                self.rumor, self.source]

    def __repr__(self) -> str:
        return (f"Message({self.src}, {self.kind!r}, names={self.names}, "
                f"counters={self.counters}, source={self.source})")


class BitStream:
    """Counter-based per-node random bits: Philox keyed by (seed, name).

    Bits come out in a fixed order regardless of how draws are batched, so
    ``draw(3); draw(5)`` yields the same bits as one ``draw_array(1, 8)``.
    """

    _REFILL_WORDS = 64

    def __init__(self, seed: int, name: int):
        self._gen = np.random.Philox(key=[seed & (2**64 - 1), name])
        self._buf = np.zeros(0, dtype=np.uint8)
        self._pos = 0
        self.used = 0

    def _take(self, k: int) -> np.ndarray:
        need = self._pos + k - len(self._buf)
        if need > 0:
            words = max(self._REFILL_WORDS, -(-need // 64))
            raw = self._gen.random_raw(words).astype("<u8").view(np.uint8)
            self._buf = np.concatenate([self._buf[self._pos:], np.unpackbits(raw)])
            self._pos = 0
        out = self._buf[self._pos:self._pos + k]
        self._pos += k
        self.used += k
        return out

    def draw(self, k: int) -> int:
        if k <= 0:
            return 0
        value = 0
        for b in self._take(k):
            value = (value << 1) | int(b)
        return value

    def draw_array(self, count: int, k: int) -> np.ndarray:
        """``count`` consecutive k-bit draws as an int64 array."""
        if k <= 0 or count <= 0:
            return np.zeros(max(count, 0), dtype=np.int64)
        bits = self._take(count * k).reshape(count, k).astype(np.int64)
        weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
        return bits @ weights


@dataclass
class RoundRecord:
    round: int
    tx: tuple[int, ...]
    rx: tuple[tuple[int, int], ...]
    wake: tuple[int, ...] = ()
    events: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"round": self.round, "tx": list(self.tx), "rx": [list(p) for p in self.rx],
                "wake": list(self.wake), "events": [list(e) for e in self.events]}


@dataclass
class Trace:
    """Round records (rounds with no transmitter and no event are omitted)."""

    records: list[RoundRecord] = field(default_factory=list)
    rounds: int = 0
    complete: bool = True
    success: bool | None = None
    bits_used: dict[int, int] = field(default_factory=dict)
    max_control_bits: int = 0
    violations: int = 0
    deliveries: int = 0
    info: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "summary": True,
            "rounds": self.rounds,
            "complete": self.complete,
            "success": self.success,
            "bits_used": {str(k): v for k, v in sorted(self.bits_used.items())},
            "max_control_bits": self.max_control_bits,
            "violations": self.violations,
            "deliveries": self.deliveries,
            "info": self.info,
        }

    def dumps(self) -> str:
        lines = [json.dumps(r.to_json(), sort_keys=True) for r in self.records]
        lines.append(json.dumps(self.summary(), sort_keys=True))
        return "\n".join(lines) + "\n"

    def write(self, fh: IO[str]) -> None:
        fh.write(self.dumps())


def load_trace(lines: Iterable[str]) -> tuple[list[dict], dict]:
    records, summary = [], None
    for line in lines:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        if obj.get("summary"):
            summary = obj
        else:
            for key in ("round", "tx", "rx"):
                if key not in obj:
                    raise ValueError(f"trace record missing {key!r}")
            records.append(obj)
    if summary is None:
        raise ValueError("trace has no summary record")
    return records, summary


@dataclass(frozen=True)
class CompactResult:
    """Distinct (group, receiver, sender) deliveries of a block.

    ``first`` is the earliest mask row in which the delivery happened;
    ``row_deliveries`` counts deliveries per mask row.
    """

    groups: np.ndarray
    receivers: np.ndarray
    senders: np.ndarray
    first: np.ndarray
    row_deliveries: np.ndarray

    def __len__(self) -> int:
        return len(self.groups)

    def take(self, keep: np.ndarray) -> "CompactResult":
        return CompactResult(self.groups[keep], self.receivers[keep], self.senders[keep],
                             self.first[keep], self.row_deliveries)


@dataclass(frozen=True)
class BlockResult:
    """Deliveries of a block: parallel arrays, sorted by (slot, receiver)."""

    slots: np.ndarray
    receivers: np.ndarray
    senders: np.ndarray  # positions into the block's sender list

    def __len__(self) -> int:
        return len(self.slots)


class Simulation:
    """One deterministic run over a fixed network.

    ``record`` controls the trace: ``"full"`` keeps a record for every
    non-silent round, ``"summary"`` keeps only counters.
    """

    def __init__(self, network: Network, awake: Iterable[int], seed: int = 0,
                 round_limit: int = DEFAULT_ROUND_LIMIT, record: str = "full",
                 b_msg: int = B_MSG):
        self.network = network
        self.config: PhysicalConfig = network.config
        self.seed = int(seed)
        self.round_limit = int(round_limit)
        self.record = record
        self.b_msg = b_msg
        self.round = 0
        self.awake_since: dict[int, int] = {u: 0 for u in awake}
        if not self.awake_since:
            raise ValueError("start set must be nonempty")
        for u in self.awake_since:
            if u not in network.index:
                raise ValueError(f"unknown node {u}")
        self.clock_skew: dict[int, int] = {u: 0 for u in self.awake_since}
        self.streams: dict[int, BitStream] = {}
        self.trace = Trace()
        self._events: list = []
        n = network.n
        self._awake = np.zeros(n, dtype=bool)
        for u in self.awake_since:
            self._awake[network.index[u]] = True
        self._names = np.array(network.names, dtype=np.int64)
        within = network.dist <= self.config.reception_radius
        np.fill_diagonal(within, False)
        self._within = within
        self._reach = [np.flatnonzero(within[i]) for i in range(n)]
        self._name_bits = max(1, math.ceil(math.log2(network.name_space + 1)))

    # -- node state ---------------------------------------------------------
    def is_awake(self, u: int) -> bool:
        return u in self.awake_since and self.awake_since[u] <= self.round

    @property
    def awake(self) -> set[int]:
        return {u for u, t in self.awake_since.items() if t <= self.round}

    def local_clock(self, u: int) -> int:
        return self.round + self.clock_skew[u]

    def stream(self, u: int) -> BitStream:
        s = self.streams.get(u)
        if s is None:
            s = self.streams[u] = BitStream(self.seed, u)
        return s

    def draw_bits(self, u: int, k: int) -> int:
        if not self.is_awake(u):
            raise ProtocolError(f"asleep node {u} drew random bits")
        return self.stream(u).draw(k)

    def draw_bits_array(self, u: int, count: int, k: int) -> np.ndarray:
        if not self.is_awake(u):
            raise ProtocolError(f"asleep node {u} drew random bits")
        return self.stream(u).draw_array(count, k)

    def draw_coins(self, u: int, count: int, k: int) -> np.ndarray:
        """``count`` independent events of probability 2^-k.

        Each event reads bits only until its first 1 (at most k bits), so it
        costs fewer than two bits on average.  Bits are consumed level by
        level: one bit for every event, then one more for each survivor, ...
        """
        if not self.is_awake(u):
            raise ProtocolError(f"asleep node {u} drew random bits")
        alive = np.ones(count, dtype=bool)
        if k <= 0 or count <= 0:
            return alive
        stream = self.stream(u)
        for _ in range(k):
            idx = np.flatnonzero(alive)
            if len(idx) == 0:
                break
            alive[idx] = stream.draw_array(len(idx), 1) == 0
        return alive

    def bits_used(self) -> dict[int, int]:
        return {u: s.used for u, s in self.streams.items()}

    def event(self, node: int, label: str, *values) -> None:
        if self.record == "full":
            self._events.append([node, label, *values])

    # -- time ---------------------------------------------------------------
    def _check_limit(self, rounds: int) -> None:
        if self.round + rounds > self.round_limit:
            self.round = self.round_limit
            raise RoundLimitExceeded(f"round limit {self.round_limit} exceeded")

    def advance(self, rounds: int) -> None:
        """Let ``rounds`` silent rounds pass."""
        if rounds <= 0:
            return
        self._check_limit(rounds)
        if self._events:
            self._flush_events(self.round)
        self.round += rounds

    def _flush_events(self, rnd: int) -> None:
        self.trace.records.append(RoundRecord(rnd, (), (), (), self._events))
        self._events = []

    def _check_message(self, msg: Message) -> None:
        bits = msg.control_bits(self.network.name_space, self.round_limit)
        if bits > self.trace.max_control_bits:
            self.trace.max_control_bits = bits

    def _check_senders(self, idx: np.ndarray) -> None:
        asleep = idx[~self._awake[idx]]
        if len(asleep):
            raise ProtocolError(f"asleep node {int(self._names[asleep[0]])} transmitted")

    # -- resolution ---------------------------------------------------------
    def _resolve(self, tx: np.ndarray, mask: np.ndarray) -> BlockResult:
        """Deliveries for ``mask[s, j]`` = sender ``tx[j]`` transmits in slot s.

        Identical slot patterns are resolved once and expanded afterwards.
        Sets ``self._row_violations`` (per mask row) as a side result.
        """
        empty = np.zeros(0, dtype=np.int64)
        k = len(tx)
        self._row_violations = np.zeros(mask.shape[0], dtype=np.int64)
        if k == 0 or mask.shape[0] == 0:
            return BlockResult(empty, empty, empty)
        active = np.flatnonzero(mask.any(axis=1))
        if len(active) == 0:
            return BlockResult(empty, empty, empty)
        rows = mask[active]
        _, first, inverse = np.unique(np.packbits(rows, axis=1), axis=0,
                                      return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        du, dr, dj, viol = self._resolve_patterns(tx, rows[first])
        self._row_violations[active] = viol[inverse]
        if len(du) == 0:
            return BlockResult(empty, empty, empty)
        cnt = np.bincount(inverse, minlength=len(first))
        order = np.argsort(inverse, kind="stable")
        starts = np.cumsum(cnt) - cnt
        rep = cnt[du]
        offs = np.arange(rep.sum()) - np.repeat(np.cumsum(rep) - rep, rep)
        slots = active[order[np.repeat(starts[du], rep) + offs]]
        recv = np.repeat(dr, rep)
        send = np.repeat(dj, rep)
        srt = np.lexsort((recv, slots))
        return BlockResult(slots[srt], recv[srt], send[srt])

    def _resolve_patterns(self, tx: np.ndarray, patterns: np.ndarray):
        """(pattern, receiver index, sender position) for each decodable pair."""
        cfg = self.config
        k = len(tx)
        cand = np.unique(np.concatenate([self._reach[j] for j in tx]))
        empty = np.zeros(0, dtype=np.int64)
        viol = np.zeros(len(patterns), dtype=np.int64)
        if len(cand) == 0:
            return empty, empty, empty, viol
        gain = self.network.gain[np.ix_(tx, cand)]          # k x m
        within = self._within[np.ix_(tx, cand)]             # k x m
        m = len(cand)
        # column c is itself sender j: it cannot listen in slots where it sends
        self_pos = np.full(m, -1)
        where = np.searchsorted(cand, tx)
        hit = (where < m) & (cand[np.minimum(where, m - 1)] == tx)
        self_pos[where[hit]] = np.flatnonzero(hit)
        sp = self_pos >= 0
        step = max(1, _CHUNK_ELEMS // max(1, k * m))
        out_u, out_r, out_j = [], [], []
        for lo in range(0, len(patterns), step):
            M = patterns[lo:lo + step]
            power = M[:, :, None] * gain[None, :, :]             # s x k x m
            total = power.sum(axis=1)                            # s x m
            decodable = M[:, :, None] & (
                power >= cfg.beta * (cfg.noise + (total[:, None, :] - power)))
            counts = decodable.sum(axis=1)
            viol[lo:lo + len(M)] = (counts > 1).sum(axis=1)
            listening = np.ones((len(M), m), dtype=bool)
            listening[:, sp] = ~M[:, self_pos[sp]]
            ok = decodable & within[None, :, :] & listening[:, None, :]
            u_i, j_i, c_i = np.nonzero(ok)
            if len(u_i):
                out_u.append(u_i + lo)
                out_j.append(j_i)
                out_r.append(cand[c_i])
        if not out_u:
            return empty, empty, empty, viol
        return np.concatenate(out_u), np.concatenate(out_r), np.concatenate(out_j), viol

    def _apply(self, base: int, offsets: np.ndarray, tx: np.ndarray, mask: np.ndarray,
               res: BlockResult) -> None:
        """Wake receivers, update the trace, advance the clock.

        Row ``s`` of ``mask`` happened in round ``base + offsets[s]``.
        """
        self.trace.deliveries += len(res)
        self.trace.violations += int(self._row_violations[:mask.shape[0]].sum())
        newly: dict[int, int] = {}
        if len(res):
            asleep = ~self._awake[res.receivers]
            for s, r, j in zip(res.slots[asleep], res.receivers[asleep], res.senders[asleep]):
                r = int(r)
                if r not in newly:
                    newly[r] = int(s)
                    name = int(self._names[r])
                    sender = int(self._names[tx[j]])
                    self.awake_since[name] = base + int(offsets[s]) + 1
                    self.clock_skew[name] = self.clock_skew.get(sender, 0)
            for r in newly:
                self._awake[r] = True
        if self.record == "full":
            names = self._names
            by_slot: dict[int, list] = {}
            for s, r, j in zip(res.slots, res.receivers, res.senders):
                by_slot.setdefault(int(s), []).append((int(names[r]), int(names[tx[j]])))
            woke: dict[int, list] = {}
            for r, s in newly.items():
                woke.setdefault(s, []).append(int(names[r]))
            busy = np.flatnonzero(mask.any(axis=1))
            if self._events and (len(busy) == 0 or offsets[busy[0]] != 0):
                self._flush_events(base)
            for s in busy:
                s = int(s)
                rec = RoundRecord(
                    base + int(offsets[s]),
                    tuple(sorted(int(names[tx[j]]) for j in np.flatnonzero(mask[s]))),
                    tuple(by_slot.get(s, ())),
                    tuple(sorted(woke.get(s, ()))),
                )
                if offsets[s] == 0 and self._events:
                    rec.events, self._events = self._events, []
                self.trace.records.append(rec)
        if len(offsets):
            self.round = base + int(offsets[-1]) + 1

    def step(self, actions: Mapping[int, Message]) -> RoundRecord:
        """Resolve one round; ``actions`` maps each transmitter to its message."""
        self._check_limit(1)
        base = self.round
        index = self.network.index
        order = sorted(actions)
        tx = np.array([index[u] for u in order], dtype=np.int64)
        self._check_senders(tx)
        messages = [actions[u] for u in order]
        for msg in messages:
            self._check_message(msg)
        mask = np.ones((1, len(tx)), dtype=bool)
        res = self._resolve(tx, mask)
        self._apply(base, np.zeros(1, dtype=np.int64), tx, mask, res)
        names = self._names
        return RoundRecord(base, tuple(order),
                           tuple((int(names[r]), int(names[tx[j]]))
                                 for r, j in zip(res.receivers, res.senders)))

    def deliveries(self, actions: Mapping[int, Message]) -> dict[int, Message]:
        """Run one round and return receiver -> decoded message."""
        rec = self.step(actions)
        return {r: actions[s] for r, s in rec.rx}

    def run_block(self, senders: Sequence[int], mask: np.ndarray,
                  messages: Sequence[Message] | None = None) -> BlockResult:
        """Resolve ``mask.shape[0]`` consecutive rounds in one pass.

        ``mask[s, j]`` is true when ``senders[j]`` transmits in slot ``s``.
        Receivers and senders in the result are node indices and sender
        positions; use :meth:`names_of` to translate receivers.  Wake-ups take
        effect after the block, so senders must be awake when it starts.
        """
        mask = np.asarray(mask, dtype=bool)
        return self.run_rows(senders, mask, self.round + np.arange(mask.shape[0]), messages)

    def run_rows(self, senders: Sequence[int], mask: np.ndarray, rounds: np.ndarray,
                 messages: Sequence[Message] | None = None) -> BlockResult:
        """Like :meth:`run_block` for rows at the given increasing absolute rounds.

        Rounds between listed rows are silent.  The clock ends just after the
        last listed round.
        """
        mask = np.asarray(mask, dtype=bool)
        rounds = np.asarray(rounds, dtype=np.int64)
        if len(rounds) != mask.shape[0]:
            raise ValueError("one round per mask row")
        if len(rounds) == 0:
            empty = np.zeros(0, dtype=np.int64)
            return BlockResult(empty, empty, empty)
        if rounds[0] < self.round or np.any(np.diff(rounds) <= 0):
            raise ValueError("rounds must be increasing and not in the past")
        self._check_limit(int(rounds[-1]) + 1 - self.round)
        base = self.round
        index = self.network.index
        tx = np.array([index[u] for u in senders], dtype=np.int64)
        if len(tx):
            self._check_senders(tx[mask.any(axis=0)])
        if messages is not None:
            for msg in messages:
                self._check_message(msg)
        res = self._resolve(tx, mask)
        self._apply(base, rounds - base, tx, mask, res)
        return res

    def resolve_compact(self, senders: Sequence[int], mask: np.ndarray,
                        groups: np.ndarray) -> CompactResult:
        """Like :meth:`resolve_rows` but collapsed per row group.

        ``groups[s]`` (nondecreasing) labels mask row s.  Only available with
        summary traces, since per-round records are not materialised.
        """
        mask = np.asarray(mask, dtype=bool)
        groups = np.asarray(groups, dtype=np.int64)
        index = self.network.index
        tx = np.array([index[u] for u in senders], dtype=np.int64)
        empty = np.zeros(0, dtype=np.int64)
        row_deliv = np.zeros(mask.shape[0], dtype=np.int64)
        self._row_violations = np.zeros(mask.shape[0], dtype=np.int64)
        self._pending = (tx, self._row_violations)
        if len(tx):
            self._check_senders(tx[mask.any(axis=0)])
        active = np.flatnonzero(mask.any(axis=1)) if len(tx) else empty
        if len(active) == 0:
            return CompactResult(empty, empty, empty, empty, row_deliv)
        rows = mask[active]
        _, first, inverse = np.unique(np.packbits(rows, axis=1), axis=0,
                                      return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        return self._compact(tx, rows[first], inverse, active, groups, row_deliv)

    def resolve_product(self, senders: Sequence[int], orig: np.ndarray,
                        fam: np.ndarray) -> CompactResult:
        """Compact resolution of ``mask[a * z + s] = orig[a] & fam[s]``.

        Groups are the rows of ``orig``; this is the shape of a round stretched
        over a selection family.  Summary traces only.
        """
        orig = np.asarray(orig, dtype=bool)
        fam = np.asarray(fam, dtype=bool)
        k = len(senders)
        w, z = orig.shape[0], fam.shape[0]
        if k > 64:
            mask = (orig[:, None, :] & fam[None, :, :]).reshape(-1, k)
            return self.resolve_compact(senders, mask, np.repeat(np.arange(w), z))
        index = self.network.index
        tx = np.array([index[u] for u in senders], dtype=np.int64)
        empty = np.zeros(0, dtype=np.int64)
        row_deliv = np.zeros(w * z, dtype=np.int64)
        self._row_violations = np.zeros(w * z, dtype=np.int64)
        self._pending = (tx, self._row_violations)
        if k == 0:
            return CompactResult(empty, empty, empty, empty, row_deliv)
        self._check_senders(tx[orig.any(axis=0) & fam.any(axis=0)])
        weights = np.left_shift(np.uint64(1), np.arange(k, dtype=np.uint64))
        oc = (orig.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)
        fc = (fam.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)
        codes = (oc[:, None] & fc[None, :]).reshape(-1)
        active = np.flatnonzero(codes)
        if len(active) == 0:
            return CompactResult(empty, empty, empty, empty, row_deliv)
        uniq, inverse = np.unique(codes[active], return_inverse=True)
        patterns = ((uniq[:, None] >> np.arange(k, dtype=np.uint64)) & np.uint64(1)).astype(bool)
        groups = active // z
        return self._compact(tx, patterns, inverse.reshape(-1), active, groups, row_deliv,
                             full_groups=True)

    def _compact(self, tx, patterns, inverse, active, groups, row_deliv, full_groups=False):
        """Shared tail of the compact resolvers.

        ``groups`` is per mask row, or per active row when ``full_groups``.
        """
        empty = np.zeros(0, dtype=np.int64)
        du, dr, dj, viol = self._resolve_patterns(tx, patterns)
        self._row_violations[active] = viol[inverse]
        n_pat = len(patterns)
        per_pattern = np.bincount(du, minlength=n_pat) if len(du) else np.zeros(n_pat, np.int64)
        row_deliv[active] = per_pattern[inverse]
        if len(du) == 0:
            return CompactResult(empty, empty, empty, empty, row_deliv)
        # distinct (group, pattern) pairs with the first row where they occur
        key = (groups if full_groups else groups[active]) * n_pat + inverse
        pair_key, pair_first = np.unique(key, return_index=True)
        pair_group = pair_key // n_pat
        pair_pat = pair_key % n_pat
        pair_row = active[pair_first]
        # join pairs with the deliveries of their pattern
        order = np.argsort(du, kind="stable")
        du_s, dr_s, dj_s = du[order], dr[order], dj[order]
        starts = np.searchsorted(du_s, np.arange(n_pat))
        counts = per_pattern
        rep = counts[pair_pat]
        sel = rep > 0
        pair_group, pair_pat, pair_row, rep = pair_group[sel], pair_pat[sel], pair_row[sel], rep[sel]
        offs = np.arange(rep.sum()) - np.repeat(np.cumsum(rep) - rep, rep)
        idx = np.repeat(starts[pair_pat], rep) + offs
        g = np.repeat(pair_group, rep)
        f = np.repeat(pair_row, rep)
        r = dr_s[idx]
        j = dj_s[idx]
        # keep the earliest row per distinct (group, receiver, sender)
        n, k = self.network.n, len(tx)
        trip = (g * n + r) * k + j
        srt = np.lexsort((f, trip))
        trip, f = trip[srt], f[srt]
        keep = np.ones(len(trip), dtype=bool)
        keep[1:] = trip[1:] != trip[:-1]
        trip, f = trip[keep], f[keep]
        j = trip % k
        rest = trip // k
        return CompactResult(rest // n, rest % n, j, f, row_deliv)

    def commit_compact(self, senders: Sequence[int], rounds: np.ndarray, res: CompactResult,
                       messages: Sequence[Message] | None = None) -> None:
        """Apply the first ``len(rounds)`` rows of the last :meth:`resolve_compact`."""
        if self.record == "full":
            raise ValueError("compact resolution needs a summary trace")
        rounds = np.asarray(rounds, dtype=np.int64)
        if len(rounds) == 0:
            return
        if rounds[0] < self.round or np.any(np.diff(rounds) <= 0):
            raise ValueError("rounds must be increasing and not in the past")
        self._check_limit(int(rounds[-1]) + 1 - self.round)
        if messages is not None:
            for msg in messages:
                self._check_message(msg)
        tx, viol = self._pending
        rows = len(rounds)
        self.trace.deliveries += int(res.row_deliveries[:rows].sum())
        self.trace.violations += int(viol[:rows].sum())
        if len(res):
            asleep = ~self._awake[res.receivers]
            if asleep.any():
                order = np.argsort(res.first[asleep], kind="stable")
                recv = res.receivers[asleep][order]
                first = res.first[asleep][order]
                send = res.senders[asleep][order]
                for r, s, j in zip(recv.tolist(), first.tolist(), send.tolist()):
                    if self._awake[r]:
                        continue
                    self._awake[r] = True
                    name = int(self._names[r])
                    sender = int(self._names[tx[j]])
                    self.awake_since[name] = int(rounds[s]) + 1
                    self.clock_skew[name] = self.clock_skew.get(sender, 0)
        if self._events:
            self._flush_events(self.round)
        self.round = int(rounds[-1]) + 1

    def resolve_rows(self, senders: Sequence[int], mask: np.ndarray) -> BlockResult:
        """Deliveries of a block without applying them (no state changes).

        Follow with :meth:`commit_rows` on a prefix of the rows.
        """
        mask = np.asarray(mask, dtype=bool)
        index = self.network.index
        tx = np.array([index[u] for u in senders], dtype=np.int64)
        if len(tx):
            self._check_senders(tx[mask.any(axis=0)])
        res = self._resolve(tx, mask)
        self._pending = (tx, self._row_violations)
        return res

    def commit_rows(self, senders: Sequence[int], mask: np.ndarray, rounds: np.ndarray,
                    res: BlockResult, messages: Sequence[Message] | None = None) -> None:
        """Apply the first ``len(rounds)`` rows of the last :meth:`resolve_rows`.

        ``res`` must contain only deliveries in those rows.
        """
        mask = np.asarray(mask, dtype=bool)
        rounds = np.asarray(rounds, dtype=np.int64)
        if len(rounds) != mask.shape[0]:
            raise ValueError("one round per mask row")
        if len(rounds) == 0:
            return
        if rounds[0] < self.round or np.any(np.diff(rounds) <= 0):
            raise ValueError("rounds must be increasing and not in the past")
        self._check_limit(int(rounds[-1]) + 1 - self.round)
        if messages is not None:
            for msg in messages:
                self._check_message(msg)
        tx, self._row_violations = self._pending
        base = self.round
        self._apply(base, rounds - base, tx, mask, res)

    def names_of(self, idx) -> np.ndarray:
        return self._names[idx]

    def finish(self, success: bool | None = None, complete: bool = True, **info) -> Trace:
        if self._events:
            self._flush_events(self.round)
        t = self.trace
        t.rounds = self.round
        t.complete = complete
        t.success = success
        t.bits_used = self.bits_used()
        t.info.update(info)
        return t

    def control_budget(self) -> int:
        return self.b_msg * self._name_bits


def family_mask(family, senders: Sequence[int]) -> np.ndarray:
    """Slot x sender transmit mask for senders executing ``family``."""
    if len(senders) == 0:
        return np.zeros((family.length, 0), dtype=bool)
    return family.matrix[np.asarray(senders, dtype=np.int64)].T


def start_set(network: Network, start_mode) -> set[int]:
    """``start_mode`` is ``("uncoordinated", src)``, ``("partly", S)`` or ``"synchronized"``."""
    if start_mode == "synchronized" or start_mode == ("synchronized",):
        return set(network.names)
    kind, arg = start_mode
    if kind == "uncoordinated":
        return {int(arg)}
    if kind == "partly":
        s = {int(u) for u in arg}
        if not s:
            raise ValueError("partly-coordinated start needs a nonempty set")
        return s
    raise ValueError(f"unknown start mode {start_mode!r}")


def run(protocol, network: Network, start_mode, seed: int = 0,
        round_limit: int = DEFAULT_ROUND_LIMIT, record: str = "full") -> Trace:
    """Execute ``protocol`` (an object with ``execute(sim)``) and return its trace.

    Exceeding ``round_limit`` marks the trace incomplete instead of raising.
    """
    if round_limit <= 0:
        raise ValueError("round_limit must be positive")
    sim = Simulation(network, start_set(network, start_mode), seed=seed,
                     round_limit=round_limit, record=record)
    try:
        result = protocol.execute(sim)
    except RoundLimitExceeded:
        return sim.finish(success=False, complete=False)
    success = getattr(result, "success", None)
    trace = sim.finish(success=success, complete=True)
    trace.info["result"] = result.summary() if hasattr(result, "summary") else None
    return trace

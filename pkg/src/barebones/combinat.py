"""Strongly-selective families and selectors used as transmission schedules.

A family is a sequence of name subsets; a node executing the family
transmits in slot ``i`` exactly when its name belongs to ``sets[i]``.
Families are built at random and verified exhaustively where that is cheap.
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass, field
from itertools import combinations, islice
from pathlib import Path
from typing import Sequence

import numpy as np

C_SSF = 8
C_SEL = 8
# exhaustive verifiers refuse beyond this many candidate subsets
VERIFY_CAP = 200_000
SPOT_CHECKS = 10_000
MAX_RESEEDS = 32
# union-bound target for unverified families: 2**-20
UNION_BOUND_LOG2 = -20.0


class FamilyError(RuntimeError):
    pass


class GuardError(FamilyError):
    """Raised when exhaustive verification would be too expensive."""


def ceil_log2(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


@dataclass(frozen=True, eq=False)
class SelectionFamily:
    name_space: int
    sets: tuple[frozenset[int], ...]
    kind: str = "ssf"
    params: tuple[int, ...] = ()
    # slot-by-name membership matrix, row ``name`` (row 0 unused)
    matrix: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        for s in self.sets:
            for v in s:
                if not 1 <= v <= self.name_space:
                    raise FamilyError(f"name {v} outside [1, {self.name_space}]")
        if self.matrix is None:
            m = np.zeros((self.name_space + 1, len(self.sets)), dtype=bool)
            for i, s in enumerate(self.sets):
                m[list(s), i] = True
            object.__setattr__(self, "matrix", m)

    @property
    def length(self) -> int:
        return len(self.sets)

    def __len__(self) -> int:
        return len(self.sets)

    def scheduled(self, node: int, slot: int) -> bool:
        if not 0 <= slot < self.length:
            raise IndexError(f"slot {slot} outside [0, {self.length})")
        return node in self.sets[slot]

    def slots_of(self, node: int) -> np.ndarray:
        return np.flatnonzero(self.matrix[node])

    def to_json(self) -> dict:
        return {
            "name_space": self.name_space,
            "kind": self.kind,
            "params": list(self.params),
            "sets": [sorted(s) for s in self.sets],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SelectionFamily":
        try:
            return cls(
                name_space=int(obj["name_space"]),
                sets=tuple(frozenset(int(v) for v in s) for s in obj["sets"]),
                kind=str(obj.get("kind", "ssf")),
                params=tuple(int(p) for p in obj.get("params", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FamilyError(f"malformed family: {exc}") from None


def scheduled(family: SelectionFamily, node: int, slot: int) -> bool:
    return family.scheduled(node, slot)


def _random_sets(name_space: int, x: int, length: int, seed: int) -> tuple[frozenset[int], ...]:
    rng = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), 0x55F]))
    member = rng.random((length, name_space)) < 1.0 / x
    return tuple(frozenset((np.flatnonzero(row) + 1).tolist()) for row in member)


def _log2_comb(n: int, k: int) -> float:
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)


def ssf_union_bound_log2(name_space: int, x: int, length: int) -> float:
    """log2 of the union bound on P[random family is not an (N, x)-ssf].

    A pair (Z, z) with |Z| = x fails when no set isolates z; smaller Z are
    isolated with at least this probability, so |Z| = x dominates.
    """
    x = min(x, name_space)
    p = (1.0 / x) * (1.0 - 1.0 / x) ** (x - 1) if x > 1 else 1.0
    if p >= 1.0:
        return -math.inf
    pairs = _log2_comb(name_space, x) + math.log2(x)
    return pairs + length * math.log2(1.0 - p)


def selector_union_bound_log2(name_space: int, x: int, y: int, length: int) -> float:
    """Union bound for (N, x, y)-selectors: some x-set has x - y + 1 unselected members."""
    x = min(x, name_space)
    k = x - y + 1
    p = (1.0 / x) * (1.0 - 1.0 / x) ** (x - 1) if x > 1 else 1.0
    if p >= 1.0:
        return -math.inf
    # P[k fixed members all unselected] <= P[no set isolates any of them];
    # a set isolates one of the k with probability k * p
    miss = max(1.0 - k * p, 1e-300)
    return _log2_comb(name_space, x) + _log2_comb(x, k) + length * math.log2(miss)


def _guard(name_space: int, x: int) -> None:
    x = min(x, name_space)
    if math.comb(name_space, x) > VERIFY_CAP:
        raise GuardError(f"C({name_space}, {x}) exceeds the verification cap {VERIFY_CAP}")


def _isolated_members(family: SelectionFamily, subsets: np.ndarray) -> np.ndarray:
    """For each row of ``subsets`` (K x k names), which members some set isolates."""
    sub = family.matrix[subsets]                      # K x k x length
    lone = sub.sum(axis=1) == 1                       # K x length
    return (sub & lone[:, None, :]).any(axis=2)       # K x k


def _subset_chunks(name_space: int, k: int, chunk: int = 4096):
    it = combinations(range(1, name_space + 1), k)
    while True:
        block = list(islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(len(block), k)


def verify_ssf(family: SelectionFamily, x: int) -> bool:
    """Exhaustive check that every z in every Z, |Z| <= x, is isolated by some set."""
    N = family.name_space
    x = min(x, N)
    _guard(N, x)
    # a set isolating z within Z also isolates it within any subset of Z,
    # so checking |Z| == x suffices
    for block in _subset_chunks(N, x):
        if not _isolated_members(family, block).all():
            return False
    return True


def verify_selector(family: SelectionFamily, x: int, y: int) -> bool:
    """Exhaustive check: every x-subset has at least y members isolated by some set."""
    N = family.name_space
    if not 1 <= y <= x <= N:
        raise ValueError("need 1 <= y <= x <= name_space")
    _guard(N, x)
    for block in _subset_chunks(N, x):
        if (_isolated_members(family, block).sum(axis=1) < y).any():
            return False
    return True


def spot_check_ssf(family: SelectionFamily, x: int, samples: int, seed: int) -> bool:
    rng = np.random.default_rng(seed)
    N = family.name_space
    x = min(x, N)
    matrix = family.matrix
    for _ in range(samples):
        Z = rng.choice(np.arange(1, N + 1), size=x, replace=False)
        z = Z[0]
        others = matrix[Z[1:]].any(axis=0) if x > 1 else np.zeros(family.length, bool)
        if not np.any(matrix[z] & ~others):
            return False
    return True


def spot_check_selector(family: SelectionFamily, x: int, y: int, samples: int, seed: int) -> bool:
    rng = np.random.default_rng(seed)
    N = family.name_space
    matrix = family.matrix
    for _ in range(samples):
        A = rng.choice(np.arange(1, N + 1), size=x, replace=False)
        sub = matrix[A]
        lone = sub.sum(axis=0) == 1
        selected = int(np.count_nonzero((sub & lone).any(axis=1)))
        if selected < y:
            return False
    return True


def _fits_cap(name_space: int, x: int) -> bool:
    return math.comb(name_space, min(x, name_space)) <= VERIFY_CAP


def build_ssf(name_space: int, x: int, seed: int = 0, c: float = C_SSF) -> SelectionFamily:
    """Random (N, x)-ssf of length about ``c * x**2 * log2 N``.

    Desk-sized parameters are verified exhaustively and re-seeded on failure;
    larger ones must pass the union bound and a random spot check.
    """
    if not 1 <= x <= name_space:
        raise ValueError("need 1 <= x <= name_space")
    if x == 1:
        return SelectionFamily(name_space, (frozenset(range(1, name_space + 1)),), "ssf", (x,))
    length = max(1, math.ceil(c * x * x * ceil_log2(name_space)))
    exhaustive = _fits_cap(name_space, x)
    if not exhaustive and ssf_union_bound_log2(name_space, x, length) > UNION_BOUND_LOG2:
        raise FamilyError(f"c={c} too small for an unverified (N={name_space}, x={x})-ssf")
    for attempt in range(MAX_RESEEDS):
        sets = _random_sets(name_space, x, length, _mix(seed, attempt, name_space, x))
        fam = SelectionFamily(name_space, sets, "ssf", (x,))
        ok = verify_ssf(fam, x) if exhaustive else spot_check_ssf(fam, x, SPOT_CHECKS, seed)
        if ok:
            return fam
    raise FamilyError(f"no valid (N={name_space}, x={x})-ssf after {MAX_RESEEDS} seeds")


def build_selector(name_space: int, x: int, y: int, seed: int = 0,
                   c: float = C_SEL) -> SelectionFamily:
    """Random (N, x, y)-selector of length about ``c * x * log2 N``."""
    if not 1 <= y <= x <= name_space:
        raise ValueError("need 1 <= y <= x <= name_space")
    if x == 1:
        return SelectionFamily(name_space, (frozenset(range(1, name_space + 1)),),
                               "selector", (x, y))
    if x == y == name_space:
        sets = tuple(frozenset([v]) for v in range(1, name_space + 1))
        return SelectionFamily(name_space, sets, "selector", (x, y))
    length = max(1, math.ceil(c * x * ceil_log2(name_space)))
    exhaustive = _fits_cap(name_space, x)
    for attempt in range(MAX_RESEEDS):
        sets = _random_sets(name_space, x, length, _mix(seed, attempt, name_space, x, y))
        fam = SelectionFamily(name_space, sets, "selector", (x, y))
        if exhaustive:
            ok = verify_selector(fam, x, y)
        else:
            ok = spot_check_selector(fam, x, y, SPOT_CHECKS // 10, seed)
        if ok:
            return fam
    raise FamilyError(f"no valid (N={name_space}, x={x}, y={y})-selector after {MAX_RESEEDS} seeds")


def _mix(*parts: int) -> int:
    h = 0xCBF29CE484222325
    for p in parts:
        h ^= int(p) & (2**64 - 1)
        h = (h * 0x100000001B3) & (2**64 - 1)
    return h


class FamilyCache:
    """Process-wide memo of built families, optionally persisted as JSON.

    Lookups are safe under concurrent use: one lock per key, so two threads
    asking for the same family build it once.
    """

    def __init__(self, directory: str | os.PathLike | None = None):
        self._families: dict[tuple, SelectionFamily] = {}
        self._locks: dict[tuple, threading.Lock] = {}
        self._guard = threading.Lock()
        self.directory = Path(directory) if directory else None

    def _lock_for(self, key: tuple) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(key, threading.Lock())

    def _path(self, key: tuple) -> Path | None:
        if self.directory is None:
            return None
        return self.directory / ("family-" + "-".join(str(k) for k in key) + ".json")

    def get(self, kind: str, name_space: int, x: int, y: int | None = None,
            seed: int = 0, c: float | None = None) -> SelectionFamily:
        c = c if c is not None else (C_SSF if kind == "ssf" else C_SEL)
        key = (kind, name_space, x, y if y is not None else 0, seed, c)
        fam = self._families.get(key)
        if fam is not None:
            return fam
        with self._lock_for(key):
            fam = self._families.get(key)
            if fam is not None:
                return fam
            path = self._path(key)
            if path is not None and path.exists():
                fam = SelectionFamily.from_json(json.loads(path.read_text()))
            elif kind == "ssf":
                fam = build_ssf(name_space, x, seed, c)
            elif kind == "selector":
                fam = build_selector(name_space, x, y if y is not None else x, seed, c)
            else:
                raise ValueError(f"unknown family kind {kind!r}")
            if path is not None and not path.exists():
                path.parent.mkdir(parents=True, exist_ok=True)
                # write-then-rename so concurrent processes never see a torn file
                tmp = path.with_name(f"{path.name}.{os.getpid()}.tmp")
                tmp.write_text(json.dumps(fam.to_json()))
                os.replace(tmp, path)
            self._families[key] = fam
            return fam

    @staticmethod
    def key_string(kind: str, name_space: int, x: int, y: int | None, seed: int, c: float) -> str:
        return f"{kind}:{name_space}:{x}:{y if y is not None else 0}:{seed}:{c}"


_default_cache: FamilyCache | None = None


def default_cache() -> FamilyCache:
    global _default_cache
    if _default_cache is None:
        _default_cache = FamilyCache(os.environ.get("BAREBONES_CACHE_DIR") or None)
    return _default_cache


def family_from_sets(name_space: int, sets: Sequence[Sequence[int]], kind: str = "ssf",
                     params: Sequence[int] = ()) -> SelectionFamily:
    return SelectionFamily(name_space, tuple(frozenset(s) for s in sets), kind, tuple(params))

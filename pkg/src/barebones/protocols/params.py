from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

from ..combinat import C_SEL, C_SSF, SelectionFamily, ceil_log2, default_cache


def pow2_ceil(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


@dataclass(frozen=True)
class ProtocolParams:
    """Every hidden constant of the protocols, with desk-scale defaults."""

    # neighbourhood-size estimation: rounds per sub-stage = d * log N
    d: int = 16
    esun_slack: float = 0.5
    # fraction of the remaining neighbours each learning stage must select
    lun_fraction: float = 0.99
    # MIS sub-phases per phase = c_phases * log N
    c_phases: int = 8
    # candidate probability in phase i is 2^i / 2^(K + candidate_shift); a
    # shift of 0 makes the last phase certain, where neighbours only demote
    # each other
    candidate_shift: int = 1
    # ssf parameter where O(1) nodes per box are active
    x_light: int = 4
    # ssf parameter for schedules run by all backbone nodes at once; must
    # exceed the internal backbone degree
    x_backbone: int = 16
    # ssf parameter where O(log N) nodes per box are active: min(log^3 N, cap),
    # at least 2 so that two neighbours can be told apart
    x_heavy_cap: int = 4
    # random slot ranges: tv_factor * Delta and intra_factor * Delta * log N
    tv_factor: int = 8
    intra_factor: int = 8
    # packing constants for first leaders, 2-hop leaders and 3-hop leaders
    first_leaders: int = 25
    two_hop_leaders: int = 49
    three_hop_leaders: int = 121
    c_ssf: float = C_SSF
    c_sel: float = C_SEL
    family_seed: int = 0
    # resource budgets: C_bits * log^3 N random bits, B_msg * log N control bits
    c_bits: float = 16.0
    b_msg: int = 24
    # internal backbone degree bound checked by the backbone oracle
    degree_bound: int = 48
    # at most this many distinct source names per box under emulation
    sources_per_box: int = 25

    def log_n(self, name_space: int) -> int:
        return ceil_log2(name_space)

    def x_heavy(self, name_space: int) -> int:
        return max(1, min(max(2, self.log_n(name_space) ** 3), self.x_heavy_cap, name_space))

    def light(self, name_space: int) -> SelectionFamily:
        x = max(1, min(self.x_light, name_space))
        return default_cache().get("ssf", name_space, x, None, self.family_seed, self.c_ssf)

    def backbone_ssf(self, name_space: int) -> SelectionFamily:
        x = max(1, min(self.x_backbone, name_space))
        return default_cache().get("ssf", name_space, x, None, self.family_seed, self.c_ssf)

    def heavy(self, name_space: int) -> SelectionFamily:
        return default_cache().get("ssf", name_space, self.x_heavy(name_space), None,
                                   self.family_seed, self.c_ssf)

    def selector(self, name_space: int, x: int, y: int) -> SelectionFamily:
        return default_cache().get("selector", name_space, x, y, self.family_seed, self.c_sel)

    def bits_budget(self, name_space: int) -> float:
        return self.c_bits * self.log_n(name_space) ** 3

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "ProtocolParams":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown protocol constants: {sorted(unknown)}")
        return cls(**obj)


DEFAULT_PARAMS = ProtocolParams()


def family_key(kind: str, name_space: int, x: int, y: int | None, params: ProtocolParams) -> str:
    c = params.c_ssf if kind == "ssf" else params.c_sel
    y_part = y if y is not None else 0
    return f"{kind}:{name_space}:{x}:{y_part}:{params.family_seed}:{c}"


def log2_int(n: int) -> int:
    return int(math.log2(pow2_ceil(n)))

"""SINR arithmetic, the weak-sensitivity reception rule and network geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np


class ConfigError(ValueError):
    pass


class PlacementError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalConfig:
    alpha: float = 4.0
    noise: float = 1.0
    beta: float = 1.0
    power: float = 1.0
    eps_s: float = 0.3
    eps_c: float = 0.3
    # strong connectivity (eps_c > eps_s) is outside the supported model
    allow_strong_connectivity: bool = False

    def __post_init__(self):
        validate_config(self)

    @property
    def range(self) -> float:
        return max_range(self)

    @property
    def reception_radius(self) -> float:
        return (1.0 - self.eps_s) * max_range(self)

    @property
    def comm_radius(self) -> float:
        return (1.0 - self.eps_c) * max_range(self)

    @property
    def box_side(self) -> float:
        # same-box nodes are within the diagonal, i.e. adjacent in the comm graph
        return self.comm_radius / math.sqrt(2.0)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "noise": self.noise,
            "beta": self.beta,
            "power": self.power,
            "eps_s": self.eps_s,
            "eps_c": self.eps_c,
        }


def validate_config(config: PhysicalConfig) -> None:
    for name in ("alpha", "noise", "beta", "power", "eps_s", "eps_c"):
        if not math.isfinite(getattr(config, name)):
            raise ConfigError(f"{name} must be finite")
    if not config.alpha > 2:
        raise ConfigError(f"alpha must be > 2, got {config.alpha}")
    if not config.noise > 0:
        raise ConfigError(f"noise must be > 0, got {config.noise}")
    if not config.beta >= 1:
        raise ConfigError(f"beta must be >= 1, got {config.beta}")
    if not config.power > 0:
        raise ConfigError(f"power must be > 0, got {config.power}")
    if not 0 <= config.eps_s <= config.eps_c < 1:
        raise ConfigError("need 0 <= eps_s <= eps_c < 1")
    if config.eps_c != config.eps_s and not config.allow_strong_connectivity:
        raise ConfigError("weak connectivity requires eps_c == eps_s")


def max_range(config: PhysicalConfig) -> float:
    """Largest distance at which a lone transmitter reaches SINR == beta."""
    return (config.power / (config.noise * config.beta)) ** (1.0 / config.alpha)


def box_of(p, box_side: float) -> tuple[int, int]:
    """Grid cell of a point; left and bottom edges belong to the cell."""
    if not box_side > 0:
        raise ValueError("box_side must be positive")
    x, y = p
    return (math.floor(x / box_side), math.floor(y / box_side))


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable placement plus the derived communication graph.

    Nodes are addressed by name in the public API; ``index`` maps a name to
    its row in ``positions`` and the precomputed matrices.
    """

    names: tuple[int, ...]
    positions: np.ndarray
    name_space: int
    config: PhysicalConfig
    adjacency: Mapping[int, frozenset[int]]
    dist: np.ndarray = field(repr=False)
    gain: np.ndarray = field(repr=False)
    index: Mapping[int, int] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def comm_edges(self) -> set[tuple[int, int]]:
        return {(u, v) for u, nb in self.adjacency.items() for v in nb}

    @property
    def max_degree(self) -> int:
        return max((len(nb) for nb in self.adjacency.values()), default=0)

    @property
    def box_side(self) -> float:
        return self.config.box_side

    def position(self, name: int) -> tuple[float, float]:
        x, y = self.positions[self.index[name]]
        return (float(x), float(y))

    def distance(self, u: int, v: int) -> float:
        return float(self.dist[self.index[u], self.index[v]])

    def neighbors(self, name: int) -> frozenset[int]:
        return self.adjacency[name]

    def boxes(self) -> dict[int, tuple[int, int]]:
        side = self.box_side
        return {u: box_of(self.position(u), side) for u in self.names}

    def placements(self) -> list[tuple[int, float, float]]:
        return [(u, *self.position(u)) for u in self.names]


def build_comm_graph(placements: Iterable[tuple[int, float, float]], name_space: int,
                     config: PhysicalConfig) -> Network:
    rows = sorted((int(u), float(x), float(y)) for u, x, y in placements)
    names = tuple(u for u, _, _ in rows)
    if len(set(names)) != len(names):
        raise PlacementError("duplicate node name")
    if names and (names[0] < 1 or names[-1] > name_space):
        raise PlacementError(f"names must lie in [1, {name_space}]")
    if len(names) > name_space:
        raise PlacementError("more nodes than names")
    pos = np.array([(x, y) for _, x, y in rows], dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(pos)):
        raise PlacementError("coordinates must be finite")
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    n = len(names)
    off_diag = ~np.eye(n, dtype=bool)
    if n and np.any(dist[off_diag] == 0):
        raise PlacementError("coincident node positions")
    with np.errstate(divide="ignore"):
        gain = config.power * dist ** (-config.alpha)
    np.fill_diagonal(gain, 0.0)
    radius = config.comm_radius
    adj_matrix = (dist <= radius) & off_diag
    adjacency = {
        names[i]: frozenset(names[j] for j in np.flatnonzero(adj_matrix[i]))
        for i in range(n)
    }
    return Network(
        names=names,
        positions=pos,
        name_space=int(name_space),
        config=config,
        adjacency=adjacency,
        dist=dist,
        gain=gain,
        index={u: i for i, u in enumerate(names)},
    )


def sinr(sender: int, receiver: int, transmitters, network: Network,
         config: PhysicalConfig | None = None) -> float:
    config = config or network.config
    transmitters = set(transmitters)
    if sender not in transmitters:
        raise ValueError("sender must be transmitting")
    if receiver in transmitters:
        raise ValueError("receiver must be listening")
    d = network.distance(sender, receiver)
    if d == 0:
        raise PlacementError("sender and receiver coincide")
    signal = config.power * d ** (-config.alpha)
    interference = sum(
        config.power * network.distance(w, receiver) ** (-config.alpha)
        for w in transmitters if w != sender
    )
    return signal / (config.noise + interference)


def receives(sender: int, receiver: int, transmitters, network: Network,
             config: PhysicalConfig | None = None) -> bool:
    config = config or network.config
    if receiver in transmitters:
        return False
    if network.distance(sender, receiver) > config.reception_radius:
        return False
    return sinr(sender, receiver, transmitters, network, config) >= config.beta


def read_placements(path: str | Path) -> list[tuple[int, float, float]]:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise PlacementError(f"{path}:{lineno}: expected '<name> <x> <y>'")
        try:
            out.append((int(parts[0]), float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise PlacementError(f"{path}:{lineno}: {exc}") from None
    return out


def write_placements(network: Network, path: str | Path) -> None:
    lines = [f"# name_space {network.name_space}"]
    lines += [f"{u} {x!r} {y!r}" for u, x, y in network.placements()]
    Path(path).write_text("\n".join(lines) + "\n")

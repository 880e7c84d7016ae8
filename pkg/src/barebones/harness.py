"""Network generators, brute-force oracles, invariant checkers and metrics.

Scenario files are JSON objects with a versioned ``schema`` field; unknown
fields are rejected.  Generator lengths are given in units of the
communication radius (1 - eps_c) r, so one scenario works for any physical
configuration.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import networkx as nx
import numpy as np

from . import phys
from .engine import RoundLimitExceeded, Simulation, Trace
from .phys import Network, PhysicalConfig, build_comm_graph
from .protocols.params import DEFAULT_PARAMS, ProtocolParams

SCHEMA_VERSION = 1
RETRY_CAP = 20
# placements closer than this fraction of r are rejected
MIN_SEPARATION = 1e-6
PROTOCOLS = ("wireless_dfs", "esun", "lun", "mis_swd", "backbone", "emulated")
MIN_CDS_CAP = 12


class ScenarioError(ValueError):
    """Malformed scenario or unsatisfiable generator."""


# -- scenarios ------------------------------------------------------------------------

_GENERATOR_FIELDS = {
    "uniform_square": {"n": None, "side": None, "mean_degree": 6.0, "names": "random"},
    "path": {"n": None, "spacing": 0.9, "names": "sequential"},
    "grid": {"k": None, "spacing": 0.9, "names": "sequential"},
    "star": {"n": None, "radius": 0.9, "names": "sequential"},
    "file": {"path": None},
}

_PROTOCOL_OPTIONS = {
    "wireless_dfs": {"source": "min"},
    "esun": {"initiator": "min"},
    "lun": {"initiator": "min", "x": None},
    "mis_swd": {},
    "backbone": {"schedules": False},
    "emulated": {"start_set": "all"},
}


@dataclass(frozen=True)
class Scenario:
    name: str
    generator: dict
    protocol: str
    physical: PhysicalConfig = field(default_factory=PhysicalConfig)
    name_space: int | None = None
    name_factor: int = 4
    seeds: tuple[int, ...] = (0,)
    round_limit: int = 10**9
    options: dict = field(default_factory=dict)
    constants: ProtocolParams = DEFAULT_PARAMS
    record: str = "summary"
    retry_cap: int = RETRY_CAP

    @classmethod
    def from_dict(cls, obj: dict, base_dir: str | Path | None = None) -> "Scenario":
        if not isinstance(obj, dict):
            raise ScenarioError("scenario must be a JSON object")
        known = {f.name for f in fields(cls)} | {"schema"}
        unknown = set(obj) - known
        if unknown:
            raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
        if obj.get("schema") != SCHEMA_VERSION:
            raise ScenarioError(f"schema must be {SCHEMA_VERSION}, got {obj.get('schema')!r}")
        for key in ("name", "generator", "protocol"):
            if key not in obj:
                raise ScenarioError(f"missing scenario field {key!r}")
        gen = _check_generator(obj["generator"], base_dir)
        protocol = obj["protocol"]
        if protocol not in PROTOCOLS:
            raise ScenarioError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")
        options = dict(obj.get("options", {}))
        bad = set(options) - set(_PROTOCOL_OPTIONS[protocol])
        if bad:
            raise ScenarioError(f"unknown options for {protocol}: {sorted(bad)}")
        options = {**_PROTOCOL_OPTIONS[protocol], **options}
        try:
            physical = PhysicalConfig(**obj.get("physical", {}))
            constants = ProtocolParams.from_dict(obj.get("constants", {}))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(str(exc)) from None
        seeds = obj.get("seeds", [0])
        if isinstance(seeds, int):
            seeds = list(range(seeds))
        if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
            raise ScenarioError("seeds must be an integer count or a list of integers")
        record = obj.get("record", "summary")
        if record not in ("full", "summary"):
            raise ScenarioError("record must be 'full' or 'summary'")
        round_limit = obj.get("round_limit", 10**9)
        if not isinstance(round_limit, int) or round_limit <= 0:
            raise ScenarioError("round_limit must be a positive integer")
        return cls(
            name=str(obj["name"]),
            generator=gen,
            protocol=protocol,
            physical=physical,
            name_space=obj.get("name_space"),
            name_factor=int(obj.get("name_factor", 4)),
            seeds=tuple(seeds),
            round_limit=round_limit,
            options=options,
            constants=constants,
            record=record,
            retry_cap=int(obj.get("retry_cap", RETRY_CAP)),
        )

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "generator": dict(self.generator),
            "protocol": self.protocol,
            "physical": {k: v for k, v in asdict(self.physical).items()},
            "name_space": self.name_space,
            "name_factor": self.name_factor,
            "seeds": list(self.seeds),
            "round_limit": self.round_limit,
            "options": dict(self.options),
            "constants": self.constants.to_dict(),
            "record": self.record,
            "retry_cap": self.retry_cap,
        }

    def replace(self, **changes) -> "Scenario":
        return Scenario(**{**{f.name: getattr(self, f.name) for f in fields(self)}, **changes})


def _check_generator(gen, base_dir) -> dict:
    if not isinstance(gen, dict) or "kind" not in gen:
        raise ScenarioError("generator must be an object with a 'kind'")
    kind = gen["kind"]
    if kind not in _GENERATOR_FIELDS:
        raise ScenarioError(f"unknown generator kind {kind!r}")
    spec = _GENERATOR_FIELDS[kind]
    unknown = set(gen) - set(spec) - {"kind"}
    if unknown:
        raise ScenarioError(f"unknown fields for generator {kind}: {sorted(unknown)}")
    out = {"kind": kind, **spec, **{k: v for k, v in gen.items() if k != "kind"}}
    if kind == "file":
        if out["path"] is None:
            raise ScenarioError("file generator needs a path")
        p = Path(out["path"])
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        out["path"] = str(p)
    else:
        size = "k" if kind == "grid" else "n"
        if not isinstance(out[size], int) or out[size] < 1:
            raise ScenarioError(f"generator {kind} needs a positive integer {size!r}")
        if out.get("names") not in ("sequential", "random"):
            raise ScenarioError("names must be 'sequential' or 'random'")
    return out


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from None
    return Scenario.from_dict(obj, base_dir=path.parent)


# -- generators -----------------------------------------------------------------------

def _rng(scenario: Scenario, seed: int, attempt: int) -> np.random.Generator:
    tag = zlib.crc32(json.dumps(scenario.generator, sort_keys=True).encode())
    return np.random.default_rng([int(seed), attempt, tag])


def _coordinates(gen: dict, rc: float, rng) -> np.ndarray:
    kind = gen["kind"]
    if kind == "uniform_square":
        n = gen["n"]
        side = gen["side"]
        if side is None:
            # mean degree of a Poisson disk graph, ignoring border effects
            side = math.sqrt(math.pi * n / gen["mean_degree"])
        return rng.random((n, 2)) * side * rc
    if kind == "path":
        return np.array([(i * gen["spacing"] * rc, 0.0) for i in range(gen["n"])])
    if kind == "grid":
        s = gen["spacing"] * rc
        return np.array([(i * s, j * s) for i in range(gen["k"]) for j in range(gen["k"])])
    if kind == "star":
        leaves = gen["n"] - 1
        pts = [(0.0, 0.0)]
        for i in range(leaves):
            a = 2 * math.pi * i / leaves
            pts.append((gen["radius"] * rc * math.cos(a), gen["radius"] * rc * math.sin(a)))
        return np.array(pts)
    raise ScenarioError(f"unknown generator kind {kind!r}")


def _min_separation(pos: np.ndarray) -> float:
    if len(pos) < 2:
        return math.inf
    diff = pos[:, None, :] - pos[None, :, :]
    d = np.sqrt((diff ** 2).sum(axis=-1))
    np.fill_diagonal(d, math.inf)
    return float(d.min())


def name_space_of(scenario: Scenario, n: int) -> int:
    return int(scenario.name_space) if scenario.name_space is not None else scenario.name_factor * n


def generate(scenario: Scenario, seed: int) -> Network:
    """Connected network for ``(scenario, seed)``; deterministic."""
    cfg = scenario.physical
    gen = scenario.generator
    if gen["kind"] == "file":
        net = read_network(gen["path"], cfg, scenario.name_space)
        if graph_stats(net).components > 1:
            raise ScenarioError(f"{gen['path']}: network is not connected")
        return net
    for attempt in range(scenario.retry_cap):
        rng = _rng(scenario, seed, attempt)
        pos = _coordinates(gen, cfg.comm_radius, rng)
        n = len(pos)
        N = name_space_of(scenario, n)
        if N < n:
            raise ScenarioError(f"name space {N} smaller than {n} nodes")
        if _min_separation(pos) < MIN_SEPARATION * cfg.range:
            continue
        if gen["names"] == "random":
            names = sorted(rng.choice(N, size=n, replace=False) + 1)
            names = rng.permutation(names).tolist()
        else:
            names = list(range(1, n + 1))
        net = build_comm_graph(
            [(int(u), float(x), float(y)) for u, (x, y) in zip(names, pos)], N, cfg)
        if graph_stats(net).components == 1:
            return net
        if gen["kind"] != "uniform_square":
            break
    raise ScenarioError(
        f"no connected placement for scenario {scenario.name!r} seed {seed} "
        f"after {scenario.retry_cap} attempts")


def write_network(network: Network, path: str | Path) -> None:
    """Placement file with the physical configuration in a header comment."""
    lines = [f"# name_space {network.name_space}",
             "# physical " + json.dumps(asdict(network.config), sort_keys=True)]
    lines += [f"{u} {x!r} {y!r}" for u, x, y in network.placements()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_network(path: str | Path, config: PhysicalConfig | None = None,
                 name_space: int | None = None) -> Network:
    """Inverse of :func:`write_network`; explicit arguments override the header."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ScenarioError(f"network file not found: {path}") from None
    header_ns = header_cfg = None
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("# name_space"):
            header_ns = int(line.split()[2])
        elif line.startswith("# physical"):
            header_cfg = PhysicalConfig(**json.loads(line[len("# physical"):]))
    rows = phys.read_placements(path)
    cfg = config or header_cfg or PhysicalConfig()
    N = name_space or header_ns or max((u for u, _, _ in rows), default=1)
    return build_comm_graph(rows, N, cfg)


# -- oracles --------------------------------------------------------------------------

def comm_graph(network: Network) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(network.names)
    g.add_edges_from(network.comm_edges)
    return g


@dataclass(frozen=True)
class GraphStats:
    delta: int
    diameter: int | None
    components: int


def graph_stats(network: Network) -> GraphStats:
    """Maximum degree, diameter (None when disconnected) and component count."""
    g = comm_graph(network)
    comps = nx.number_connected_components(g) if network.n else 0
    diameter = nx.diameter(g) if comps == 1 else None
    return GraphStats(network.max_degree, diameter, comps)


def oracle_is_mis(network: Network, members) -> bool:
    s = set(members)
    if not s <= set(network.names):
        return False
    if any(network.neighbors(u) & s for u in s):
        return False
    return all(u in s or network.neighbors(u) & s for u in network.names)


def is_cds(network: Network, members) -> bool:
    s = set(members)
    if not s:
        return False
    if any(u not in s and not network.neighbors(u) & s for u in network.names):
        return False
    return nx.is_connected(comm_graph(network).subgraph(s))


def min_cds_size(network: Network) -> int:
    """Exhaustive minimum connected dominating set size (n <= 12)."""
    if network.n > MIN_CDS_CAP:
        raise ValueError(f"exhaustive search capped at n <= {MIN_CDS_CAP}")
    for k in range(1, network.n + 1):
        for sub in itertools.combinations(network.names, k):
            if is_cds(network, sub):
                return k
    raise ValueError("graph has no connected dominating set (disconnected)")


@dataclass
class BackboneReport:
    dominating: bool
    connected: bool
    degree_ok: bool
    masters_valid: bool
    size: int
    max_degree: int
    diameter: int | None
    graph_diameter: int | None
    min_cds: int | None = None

    @property
    def valid(self) -> bool:
        return self.dominating and self.connected and self.degree_ok and self.masters_valid

    @property
    def size_ratio(self) -> float | None:
        return self.size / self.min_cds if self.min_cds else None

    @property
    def diameter_ratio(self) -> float | None:
        if self.diameter is None or not self.graph_diameter:
            return None
        return self.diameter / self.graph_diameter

    def to_json(self) -> dict:
        return {**asdict(self), "valid": self.valid, "size_ratio": self.size_ratio,
                "diameter_ratio": self.diameter_ratio}


def oracle_backbone(network: Network, result, degree_bound: int = DEFAULT_PARAMS.degree_bound
                    ) -> BackboneReport:
    """Check a backbone result: any object with ``backbone`` (or ``leaders``
    and ``connectors``) and ``masters`` attributes."""
    if hasattr(result, "backbone"):
        h = set(result.backbone)
    else:
        h = set(result.leaders) | set(result.connectors)
    masters = dict(result.masters)
    g = comm_graph(network)
    dominating = bool(h) and all(u in h or network.neighbors(u) & h for u in network.names)
    connected = bool(h) and nx.is_connected(g.subgraph(h))
    max_deg = max((len(network.neighbors(u) & h) for u in h), default=0)
    masters_valid = all(
        u in masters and masters[u] in h and masters[u] in network.neighbors(u)
        for u in network.names if u not in h)
    stats = graph_stats(network)
    return BackboneReport(
        dominating=dominating,
        connected=connected,
        degree_ok=max_deg <= degree_bound,
        masters_valid=masters_valid,
        size=len(h),
        max_degree=max_deg,
        diameter=nx.diameter(g.subgraph(h)) if connected else None,
        graph_diameter=stats.diameter,
        min_cds=min_cds_size(network) if network.n <= MIN_CDS_CAP and stats.components == 1
        else None,
    )


# -- scaling fits ---------------------------------------------------------------------

def _log2(x: int) -> float:
    return math.log2(max(2, x))


MODELS = {
    "n_log2N": lambda n, N, d: n * _log2(N) ** 2,
    "delta": lambda n, N, d: max(1, d),
    "delta_log7N": lambda n, N, d: max(1, d) * _log2(N) ** 7,
}


@dataclass
class FitReport:
    model: str
    c: float
    per_size: dict[int, float]
    max_residual_ratio: float
    flagged: bool
    spread: float

    @property
    def stable(self) -> bool:
        """Per-size constants agree within a factor 2."""
        return self.spread <= 2.0


def scaling_fit(rows, model: str = "n_log2N", size_key: str = "n") -> FitReport:
    """Least-squares C in ``rounds ~ C f(n, N, Delta)``.

    The residual ratio of a row is max(obs/pred, pred/obs); the fit is
    flagged when any ratio exceeds 2.  ``spread`` is the ratio of the largest
    to the smallest per-size mean constant.
    """
    f = MODELS[model]
    rows = [r for r in rows if r.complete]
    sizes = sorted({getattr(r, size_key) for r in rows})
    if len(sizes) < 3:
        raise ValueError(f"scaling fit needs at least 3 distinct sizes, got {len(sizes)}")
    x = np.array([f(r.n, r.name_space, r.delta) for r in rows], dtype=float)
    y = np.array([r.rounds for r in rows], dtype=float)
    c = float((x @ y) / (x @ x))
    pred = c * x
    with np.errstate(divide="ignore"):
        ratio = np.maximum(y / pred, pred / np.maximum(y, 1e-300))
    per_size = {}
    for s in sizes:
        sel = np.array([getattr(r, size_key) == s for r in rows])
        per_size[s] = float(np.mean(y[sel] / x[sel]))
    spread = max(per_size.values()) / min(per_size.values())
    worst = float(ratio.max())
    return FitReport(model, c, per_size, worst, worst > 2.0, spread)


# -- metrics --------------------------------------------------------------------------

@dataclass
class MetricsRow:
    scenario: str
    protocol: str
    seed: int
    n: int
    name_space: int
    delta: int
    diameter: int
    rounds: int
    complete: bool
    success: bool
    max_random_bits: int
    max_control_bits: int
    violations: int
    backbone_size: int | None = None
    backbone_degree: int | None = None
    backbone_diameter: int | None = None

    def to_csv(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            out[k] = "" if v is None else (int(v) if isinstance(v, bool) else v)
        return out


METRICS_HEADER = [f.name for f in fields(MetricsRow)]


def write_metrics(rows, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=METRICS_HEADER, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r.to_csv())


def read_metrics(path: str | Path) -> list[MetricsRow]:
    types = {"scenario": str, "protocol": str, "complete": bool, "success": bool}
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRICS_HEADER:
            raise ValueError(f"{path}: unexpected metrics header {reader.fieldnames}")
        for rec in reader:
            vals = {}
            for k, v in rec.items():
                t = types.get(k, int)
                if v == "":
                    vals[k] = None
                elif t is bool:
                    vals[k] = v == "1"
                else:
                    vals[k] = t(v)
            out.append(MetricsRow(**vals))
    return out


# -- running scenarios ----------------------------------------------------------------

@dataclass
class RunOutcome:
    row: MetricsRow
    trace: Trace
    network: Network
    result: object = None
    report: BackboneReport | None = None
    detail: dict = field(default_factory=dict)


def _pick(network: Network, choice, rng) -> int:
    if choice == "min":
        return min(network.names)
    if choice == "max":
        return max(network.names)
    if choice == "random":
        return int(rng.choice(network.names))
    if isinstance(choice, int) and choice in network.index:
        return choice
    raise ScenarioError(f"node choice {choice!r} not in network")


def _start_set(network: Network, spec, rng) -> list[int]:
    names = sorted(network.names)
    if spec == "all":
        return names
    if spec == "half":
        spec = max(1, network.n // 2)
    if isinstance(spec, int):
        if not 1 <= spec <= network.n:
            raise ScenarioError(f"start set size {spec} out of range")
        return sorted(int(u) for u in rng.choice(names, size=spec, replace=False))
    if isinstance(spec, list) and spec and all(u in network.index for u in spec):
        return sorted(spec)
    raise ScenarioError(f"bad start_set {spec!r}")


def run_scenario(scenario: Scenario, seed: int, record: str | None = None) -> RunOutcome:
    """Generate the network for ``seed``, run the protocol, check it with the oracles."""
    from .protocols.backbone import Backbone, run_inter_h, run_intra_h
    from .protocols.dfs import DfsDriver, WirelessDFS
    from .protocols.emulated import EmulatedDfsBackbone
    from .protocols.mis import MisSWD

    net = generate(scenario, seed)
    params = scenario.constants
    opts = scenario.options
    # choices of the start nodes use a stream disjoint from the nodes' bits
    rng = np.random.default_rng([int(seed), 0x5EED])
    proto = scenario.protocol
    detail: dict = {}
    report = None

    if proto == "wireless_dfs":
        awake = [_pick(net, opts["source"], rng)]
    elif proto in ("esun", "lun"):
        awake = [_pick(net, opts["initiator"], rng)]
    elif proto == "emulated":
        awake = _start_set(net, opts["start_set"], rng)
    else:
        awake = list(net.names)
    sim = Simulation(net, awake, seed=seed, round_limit=scenario.round_limit,
                     record=record or scenario.record, b_msg=params.b_msg)
    result = None
    ok = False
    complete = True
    try:
        if proto == "wireless_dfs":
            result = WirelessDFS(awake[0], params).execute(sim)
            ok = result.success
            detail = result.summary()
        elif proto in ("esun", "lun"):
            u = awake[0]
            driver = DfsDriver(sim, params, stop_after=proto)
            degree = len(net.neighbors(u))
            if proto == "esun":
                driver.start_source(u)
                driver.run()
                x = driver.nodes[u].estimate
                ok = degree <= x <= 16 * degree if degree else x == 0
                detail = {"initiator": u, "degree": degree, "estimate": x}
            else:
                x = opts["x"] or max(1, 16 * degree)
                driver.begin_learning(u, x)
                driver.run()
                learned = sorted(driver.nodes[u].learned)
                ok = learned == sorted(net.neighbors(u))
                detail = {"initiator": u, "degree": degree, "x": x, "learned": learned}
        elif proto == "mis_swd":
            result = MisSWD(params).execute(sim)
            ok = result.success and oracle_is_mis(net, result.leaders) and result.invariants_ok
            detail = result.summary()
        elif proto == "backbone":
            mis, bb = Backbone(params).execute(sim)
            result = bb
            report = oracle_backbone(net, bb, params.degree_bound)
            ok = mis.success and oracle_is_mis(net, mis.leaders) and bb.success and report.valid
            detail = {**bb.summary(), "mis_invariants_ok": mis.invariants_ok}
            if opts["schedules"] and ok:
                inter = run_inter_h(sim, bb, params)
                intra = run_intra_h(sim, bb, params)
                detail["inter_complete"] = inter.complete
                detail["intra_complete"] = intra.complete
                ok = ok and inter.complete and intra.complete
        elif proto == "emulated":
            result = EmulatedDfsBackbone(awake, params).execute(sim)
            if result.backbone is not None:
                report = oracle_backbone(net, result.backbone, params.degree_bound)
            ok = result.success and report is not None and report.valid
            detail = result.summary()
    except RoundLimitExceeded:
        complete = False
        ok = False
    trace = sim.finish(success=ok, complete=complete, protocol=proto, **_jsonable(detail))
    stats = graph_stats(net)
    row = MetricsRow(
        scenario=scenario.name,
        protocol=proto,
        seed=int(seed),
        n=net.n,
        name_space=net.name_space,
        delta=stats.delta,
        diameter=stats.diameter if stats.diameter is not None else -1,
        rounds=trace.rounds,
        complete=complete,
        success=bool(ok),
        max_random_bits=max(trace.bits_used.values(), default=0),
        max_control_bits=trace.max_control_bits,
        violations=trace.violations,
        backbone_size=report.size if report else None,
        backbone_degree=report.max_degree if report else None,
        backbone_diameter=report.diameter if report else None,
    )
    return RunOutcome(row, trace, net, result, report, detail)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [_jsonable(v) for v in obj]
        return sorted(items) if isinstance(obj, (set, frozenset)) else items
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


# -- trace replay ---------------------------------------------------------------------

@dataclass
class ReplayReport:
    rounds_checked: int
    mismatches: list[tuple[int, str]]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def replay_trace(records: list[dict], network: Network) -> ReplayReport:
    """Recompute every recorded round's deliveries with :func:`phys.receives`."""
    mismatches = []
    names = set(network.names)
    for rec in records:
        rnd = rec["round"]
        tx = [int(u) for u in rec["tx"]]
        unknown = [u for u in tx if u not in names]
        if unknown:
            mismatches.append((rnd, f"unknown transmitter(s) {unknown}"))
            continue
        tx_set = set(tx)
        expected = set()
        for v in network.names:
            if v in tx_set:
                continue
            for u in tx:
                if phys.receives(u, v, tx_set, network):
                    expected.add((v, u))
        got = {(int(v), int(u)) for v, u in rec["rx"]}
        if got != expected:
            extra = sorted(got - expected)
            missing = sorted(expected - got)
            mismatches.append((rnd, f"unexpected (receiver, sender) {extra}, missing {missing}"))
    return ReplayReport(len(records), mismatches)


__all__ = [
    "Scenario", "ScenarioError", "load_scenario", "generate", "name_space_of",
    "write_network", "read_network", "comm_graph", "GraphStats", "graph_stats",
    "oracle_is_mis", "is_cds", "min_cds_size", "BackboneReport", "oracle_backbone",
    "MODELS", "FitReport", "scaling_fit", "MetricsRow", "METRICS_HEADER", "write_metrics",
    "read_metrics", "RunOutcome", "run_scenario", "ReplayReport", "replay_trace",
]

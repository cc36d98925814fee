"""Core value types for the edge placement problem.

Every quantity is kept integral so that feasibility checks and the exact
solver never touch floating point: CPU in mCPU, bandwidth in Mbps, storage
in GB, profit in abstract units, and latency in tenths of a millisecond
(a 1.5 ms link stores latency 15).  Helpers that talk to humans or to
files convert to/from plain milliseconds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

SCENARIO_FORMAT_VERSION = 1
SOLUTION_FORMAT_VERSION = 1

# Node kinds
BS = "bs"
SWITCH = "switch"
OEN = "oen"
EEN = "een"
NODE_KINDS = (BS, SWITCH, OEN, EEN)

# Demand dispositions
REJECTED = "rejected"
OFFLOADED = "offloaded"
PLACED = "placed"

DemandKey = tuple[int, int, int]  # (bs node, EA type, index)


class ScenarioError(ValueError):
    """Raised for malformed scenarios, topologies, or serialized files."""


def ms_to_tenths(value_ms: float) -> int:
    """Convert a millisecond value to integer tenths, rejecting finer grains."""
    tenths = round(value_ms * 10)
    if abs(value_ms * 10 - tenths) > 1e-6:
        raise ScenarioError(f"latency {value_ms} ms is not a multiple of 0.1 ms")
    return int(tenths)


def tenths_to_ms(tenths: int) -> float:
    return tenths / 10


@dataclass(frozen=True)
class Link:
    """Directed link with bandwidth in Mbps and latency in tenths of ms."""

    id: int
    src: int
    dst: int
    bandwidth: int
    latency: int

    @property
    def latency_ms(self) -> float:
        return tenths_to_ms(self.latency)


@dataclass(frozen=True)
class Topology:
    """Directed graph of base stations, switches, OENs, and one EEN."""

    nodes: dict[int, str]  # node id -> kind
    links: dict[int, Link]

    def nodes_of_kind(self, kind: str) -> list[int]:
        return sorted(n for n, k in self.nodes.items() if k == kind)

    @property
    def een_node(self) -> int:
        eens = self.nodes_of_kind(EEN)
        if len(eens) != 1:
            raise ScenarioError(f"topology has {len(eens)} EEN nodes, expected exactly 1")
        return eens[0]

    def out_links(self, node: int) -> list[Link]:
        return sorted(
            (l for l in self.links.values() if l.src == node), key=lambda l: l.id
        )


@dataclass(frozen=True)
class Oen:
    """Operator edge node: CPU/storage capacity and switch-on cost."""

    node: int
    cpu_capacity: int  # mCPU
    storage_capacity: int  # GB
    on_cost: int  # profit units


@dataclass(frozen=True)
class EaType:
    """Edge application type with idle CPU draw and storage footprint."""

    id: int
    idle_cpu: int  # mCPU
    storage_req: int  # GB


@dataclass(frozen=True)
class Demand:
    """One PDU-session request, uniquely keyed by (bs, ea, index)."""

    bs: int
    ea: int
    index: int
    cpu_req: int  # mCPU
    bw_req: int  # Mbps
    delay_budget: int  # tenths of ms
    utility: int  # profit units
    offload_cost: int  # profit units

    @property
    def key(self) -> DemandKey:
        return (self.bs, self.ea, self.index)

    @property
    def delay_budget_ms(self) -> float:
        return tenths_to_ms(self.delay_budget)


@dataclass(frozen=True)
class UpfScalePolicy:
    """CPU and processing-bandwidth footprint of a UPF cluster per replica count.

    Both maps must be defined for every replica count 1..max_replicas and be
    strictly increasing.  Scale 0 means no cluster (zero CPU, zero bandwidth).
    """

    max_replicas: int
    cpu_per_replicas: dict[int, int]
    bw_per_replicas: dict[int, int]

    def cpu_for(self, scale: int) -> int:
        return 0 if scale == 0 else self.cpu_per_replicas[scale]

    def bw_for(self, scale: int) -> int:
        return 0 if scale == 0 else self.bw_per_replicas[scale]

    def min_scale_for_bw(self, bw: int) -> Optional[int]:
        """Smallest replica count whose bandwidth covers ``bw`` (None if none does)."""
        if bw <= 0:
            return 0
        for r in range(1, self.max_replicas + 1):
            if self.bw_per_replicas[r] >= bw:
                return r
        return None

    def validate(self) -> list[str]:
        errors = []
        if self.max_replicas < 1:
            errors.append("max_replicas must be >= 1")
            return errors
        prev_cpu = prev_bw = 0
        for r in range(1, self.max_replicas + 1):
            if r not in self.cpu_per_replicas or r not in self.bw_per_replicas:
                errors.append(f"scale policy undefined for r={r}")
                continue
            if self.cpu_per_replicas[r] <= prev_cpu:
                errors.append(f"cpu_per_replicas not strictly increasing at r={r}")
            if self.bw_per_replicas[r] <= prev_bw:
                errors.append(f"bw_per_replicas not strictly increasing at r={r}")
            prev_cpu = self.cpu_per_replicas[r]
            prev_bw = self.bw_per_replicas[r]
        return errors


def default_upf_policy(max_replicas: int = 8) -> UpfScalePolicy:
    """Linear scaling default: each replica adds 2000 mCPU and 1000 Mbps."""
    return UpfScalePolicy(
        max_replicas=max_replicas,
        cpu_per_replicas={r: 2000 * r for r in range(1, max_replicas + 1)},
        bw_per_replicas={r: 1000 * r for r in range(1, max_replicas + 1)},
    )


@dataclass(frozen=True)
class Scenario:
    """A full problem instance: topology, OEN fleet, EA catalog, demands."""

    topology: Topology
    oens: tuple[Oen, ...]
    ea_catalog: tuple[EaType, ...]
    upf_policy: UpfScalePolicy
    demands: tuple[Demand, ...]
    path_cutoff: int = 6

    def oen_by_node(self, node: int) -> Oen:
        for o in self.oens:
            if o.node == node:
                return o
        raise KeyError(node)

    def ea_by_id(self, ea_id: int) -> EaType:
        for ea in self.ea_catalog:
            if ea.id == ea_id:
                return ea
        raise KeyError(ea_id)

    def demand_by_key(self, key: DemandKey) -> Demand:
        for d in self.demands:
            if d.key == key:
                return d
        raise KeyError(key)


@dataclass(frozen=True)
class Disposition:
    """Final treatment of a demand: rejected, offloaded, or placed on an OEN."""

    kind: str  # REJECTED | OFFLOADED | PLACED
    oen: Optional[int] = None  # placement OEN, set iff kind == PLACED


@dataclass
class Solution:
    """Full assignment: OEN power state, cluster scales, EA deployments, and
    the per-demand disposition, anchoring OEN, and chosen path id.

    Link usage is derived from the routed path's link incidence and is not
    stored.  Structural coherence (rejected demands carry no anchor/route,
    others exactly one of each) is checked by the verifier, not enforced
    here, so that invalid candidate solutions remain representable.
    """

    oen_on: dict[int, bool]
    upf_scale: dict[int, int]
    ea_deployed: set[tuple[int, int]]  # (ea id, oen node)
    disposition: dict[DemandKey, Disposition]
    anchor: dict[DemandKey, Optional[int]]
    route: dict[DemandKey, Optional[int]]

    @staticmethod
    def empty(scenario: Scenario) -> "Solution":
        """All demands rejected, all OENs off."""
        return Solution(
            oen_on={o.node: False for o in scenario.oens},
            upf_scale={o.node: 0 for o in scenario.oens},
            ea_deployed=set(),
            disposition={d.key: Disposition(REJECTED) for d in scenario.demands},
            anchor={d.key: None for d in scenario.demands},
            route={d.key: None for d in scenario.demands},
        )


# ---------------------------------------------------------------------------
# Validation

def validate_topology(topology: Topology) -> list[str]:
    """Structural checks; an empty list means the topology is well formed."""
    errors = []
    for node, kind in topology.nodes.items():
        if kind not in NODE_KINDS:
            errors.append(f"node {node}: unknown kind {kind!r}")
    eens = [n for n, k in topology.nodes.items() if k == EEN]
    if len(eens) == 0:
        errors.append("no EEN node: exactly one is required")
    elif len(eens) > 1:
        errors.append(f"multiple EEN nodes: {sorted(eens)}")
    for link in topology.links.values():
        if link.src not in topology.nodes:
            errors.append(f"link {link.id}: unknown src node {link.src}")
        if link.dst not in topology.nodes:
            errors.append(f"link {link.id}: unknown dst node {link.dst}")
        if link.src == link.dst:
            errors.append(f"link {link.id}: src equals dst ({link.src})")
        if link.bandwidth <= 0:
            errors.append(f"link {link.id}: non-positive bandwidth {link.bandwidth}")
        if link.latency <= 0:
            errors.append(f"link {link.id}: non-positive latency {link.latency}")
    return errors


def validate_scenario(scenario: Scenario) -> list[str]:
    """Topology checks plus cross-references and invariants of all members."""
    errors = validate_topology(scenario.topology)
    oen_nodes = set(scenario.topology.nodes_of_kind(OEN))
    bs_nodes = set(scenario.topology.nodes_of_kind(BS))
    seen_oens: set[int] = set()
    for oen in scenario.oens:
        if oen.node not in oen_nodes:
            errors.append(f"OEN record {oen.node}: node missing or not of OEN kind")
        if oen.node in seen_oens:
            errors.append(f"duplicate OEN record for node {oen.node}")
        seen_oens.add(oen.node)
        if oen.cpu_capacity <= 0 or oen.storage_capacity <= 0 or oen.on_cost <= 0:
            errors.append(f"OEN {oen.node}: capacities and on_cost must be > 0")
    for node in oen_nodes - seen_oens:
        errors.append(f"OEN node {node} has no parameter record")
    ea_ids = set()
    for ea in scenario.ea_catalog:
        if ea.id in ea_ids:
            errors.append(f"duplicate EA type {ea.id}")
        ea_ids.add(ea.id)
        if ea.idle_cpu < 0 or ea.storage_req < 0:
            errors.append(f"EA {ea.id}: idle_cpu and storage_req must be >= 0")
    errors.extend(scenario.upf_policy.validate())
    seen_keys: set[DemandKey] = set()
    for d in scenario.demands:
        if d.key in seen_keys:
            errors.append(f"duplicate demand key {d.key}")
        seen_keys.add(d.key)
        if d.bs not in bs_nodes:
            errors.append(f"demand {d.key}: source {d.bs} is not a BS node")
        if d.ea not in ea_ids:
            errors.append(f"demand {d.key}: EA type {d.ea} not in catalog")
        if d.cpu_req <= 0 or d.bw_req <= 0 or d.delay_budget <= 0:
            errors.append(f"demand {d.key}: cpu, bandwidth, delay budget must be > 0")
        if d.utility < 0 or d.offload_cost < 0:
            errors.append(f"demand {d.key}: utility and offload cost must be >= 0")
    if scenario.path_cutoff < 1:
        errors.append("path_cutoff must be >= 1")
    return errors


# ---------------------------------------------------------------------------
# Serialization (versioned JSON, deterministic byte output)

def _dump_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "format_version": SCENARIO_FORMAT_VERSION,
        "topology": {
            "nodes": [
                {"id": n, "kind": k} for n, k in sorted(scenario.topology.nodes.items())
            ],
            "links": [
                {
                    "id": l.id,
                    "src": l.src,
                    "dst": l.dst,
                    "bandwidth_mbps": l.bandwidth,
                    "latency_ms": l.latency_ms,
                }
                for l in sorted(scenario.topology.links.values(), key=lambda l: l.id)
            ],
        },
        "oens": [
            {
                "node": o.node,
                "cpu_capacity_mcpu": o.cpu_capacity,
                "storage_capacity_gb": o.storage_capacity,
                "on_cost": o.on_cost,
            }
            for o in sorted(scenario.oens, key=lambda o: o.node)
        ],
        "ea_types": [
            {"id": e.id, "idle_cpu_mcpu": e.idle_cpu, "storage_gb": e.storage_req}
            for e in sorted(scenario.ea_catalog, key=lambda e: e.id)
        ],
        "upf_policy": {
            "max_replicas": scenario.upf_policy.max_replicas,
            "cpu_per_replicas": {
                str(r): v for r, v in sorted(scenario.upf_policy.cpu_per_replicas.items())
            },
            "bw_per_replicas": {
                str(r): v for r, v in sorted(scenario.upf_policy.bw_per_replicas.items())
            },
        },
        "demands": [
            {
                "bs": d.bs,
                "ea": d.ea,
                "index": d.index,
                "cpu_mcpu": d.cpu_req,
                "bw_mbps": d.bw_req,
                "delay_budget_ms": d.delay_budget_ms,
                "utility": d.utility,
                "offload_cost": d.offload_cost,
            }
            for d in scenario.demands
        ],
        "path_cutoff": scenario.path_cutoff,
    }


def scenario_from_dict(data: dict) -> Scenario:
    version = data.get("format_version")
    if version != SCENARIO_FORMAT_VERSION:
        raise ScenarioError(f"unsupported scenario format_version {version!r}")
    try:
        topo = Topology(
            nodes={int(n["id"]): n["kind"] for n in data["topology"]["nodes"]},
            links={
                int(l["id"]): Link(
                    id=int(l["id"]),
                    src=int(l["src"]),
                    dst=int(l["dst"]),
                    bandwidth=int(l["bandwidth_mbps"]),
                    latency=ms_to_tenths(l["latency_ms"]),
                )
                for l in data["topology"]["links"]
            },
        )
        oens = tuple(
            Oen(
                node=int(o["node"]),
                cpu_capacity=int(o["cpu_capacity_mcpu"]),
                storage_capacity=int(o["storage_capacity_gb"]),
                on_cost=int(o["on_cost"]),
            )
            for o in data["oens"]
        )
        eas = tuple(
            EaType(
                id=int(e["id"]),
                idle_cpu=int(e["idle_cpu_mcpu"]),
                storage_req=int(e["storage_gb"]),
            )
            for e in data["ea_types"]
        )
        pol = data["upf_policy"]
        policy = UpfScalePolicy(
            max_replicas=int(pol["max_replicas"]),
            cpu_per_replicas={int(r): int(v) for r, v in pol["cpu_per_replicas"].items()},
            bw_per_replicas={int(r): int(v) for r, v in pol["bw_per_replicas"].items()},
        )
        demands = tuple(
            Demand(
                bs=int(d["bs"]),
                ea=int(d["ea"]),
                index=int(d["index"]),
                cpu_req=int(d["cpu_mcpu"]),
                bw_req=int(d["bw_mbps"]),
                delay_budget=ms_to_tenths(d["delay_budget_ms"]),
                utility=int(d["utility"]),
                offload_cost=int(d["offload_cost"]),
            )
            for d in data["demands"]
        )
        return Scenario(
            topology=topo,
            oens=oens,
            ea_catalog=eas,
            upf_policy=policy,
            demands=demands,
            path_cutoff=int(data["path_cutoff"]),
        )
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from exc


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(_dump_json(scenario_to_dict(scenario)))


def load_scenario(path: Union[str, Path]) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def solution_to_dict(solution: Solution) -> dict:
    demands = []
    for key in sorted(solution.disposition):
        disp = solution.disposition[key]
        demands.append(
            {
                "bs": key[0],
                "ea": key[1],
                "index": key[2],
                "disposition": disp.kind,
                "oen": disp.oen,
                "anchor": solution.anchor.get(key),
                "path": solution.route.get(key),
            }
        )
    return {
        "format_version": SOLUTION_FORMAT_VERSION,
        "oen_on": {str(e): bool(v) for e, v in sorted(solution.oen_on.items())},
        "upf_scale": {str(e): int(v) for e, v in sorted(solution.upf_scale.items())},
        "ea_deployed": sorted([list(pair) for pair in solution.ea_deployed]),
        "demands": demands,
    }


def solution_from_dict(data: dict) -> Solution:
    version = data.get("format_version")
    if version != SOLUTION_FORMAT_VERSION:
        raise ScenarioError(f"unsupported solution format_version {version!r}")
    disposition = {}
    anchor = {}
    route = {}
    for rec in data["demands"]:
        key = (int(rec["bs"]), int(rec["ea"]), int(rec["index"]))
        oen = rec.get("oen")
        disposition[key] = Disposition(
            kind=rec["disposition"], oen=None if oen is None else int(oen)
        )
        anc = rec.get("anchor")
        anchor[key] = None if anc is None else int(anc)
        pth = rec.get("path")
        route[key] = None if pth is None else int(pth)
    return Solution(
        oen_on={int(e): bool(v) for e, v in data["oen_on"].items()},
        upf_scale={int(e): int(v) for e, v in data["upf_scale"].items()},
        ea_deployed={(int(i), int(e)) for i, e in data["ea_deployed"]},
        disposition=disposition,
        anchor=anchor,
        route=route,
    )


def save_solution(solution: Solution, path: Union[str, Path]) -> None:
    Path(path).write_text(solution_bytes(solution).decode())


def solution_bytes(solution: Solution) -> bytes:
    return _dump_json(solution_to_dict(solution)).encode()


def load_solution(path: Union[str, Path]) -> Solution:
    return solution_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Notation glossary
#
# Symbols of the optimization model and the field that houses each one.
# Checked by a documentation test so the mapping cannot rot.
MODEL_NOTATION: dict[str, tuple[str, str]] = {
    "j (BS index)": ("Demand", "bs"),
    "i (EA type index)": ("EaType", "id"),
    "l (demand index)": ("Demand", "index"),
    "e (OEN index)": ("Oen", "node"),
    "e* (the EEN)": ("Topology", "een_node"),
    "k (forwarding node)": ("Topology", "nodes"),
    "v (link index)": ("Link", "id"),
    "n (path index)": ("pathing.Path", "id"),
    "r (UPF replica count)": ("UpfScalePolicy", "max_replicas"),
    "U_jil (utility)": ("Demand", "utility"),
    "C_jil (offload cost)": ("Demand", "offload_cost"),
    "C_e (switch-on cost)": ("Oen", "on_cost"),
    "P_e (OEN CPU capacity)": ("Oen", "cpu_capacity"),
    "p_i (EA idle CPU)": ("EaType", "idle_cpu"),
    "p_jil (demand CPU)": ("Demand", "cpu_req"),
    "p_r (UPF CPU at scale r)": ("UpfScalePolicy", "cpu_per_replicas"),
    "S_e (OEN storage)": ("Oen", "storage_capacity"),
    "s_i (EA storage)": ("EaType", "storage_req"),
    "B_v (link bandwidth)": ("Link", "bandwidth"),
    "B_r (UPF bandwidth at scale r)": ("UpfScalePolicy", "bw_per_replicas"),
    "b_jil (demand bandwidth)": ("Demand", "bw_req"),
    "t_jil (delay budget)": ("Demand", "delay_budget"),
    "t_v (link latency)": ("Link", "latency"),
    "z_e (OEN on/off)": ("Solution", "oen_on"),
    "w_re (cluster scale choice)": ("Solution", "upf_scale"),
    "x_ie (EA deployed)": ("Solution", "ea_deployed"),
    "d_jile / T_jil / F_jil (disposition)": ("Solution", "disposition"),
    "w_jile (anchoring OEN)": ("Solution", "anchor"),
    "theta_jil_n (chosen path)": ("Solution", "route"),
    "delta_jil_nv (link usage)": ("pathing.Path", "links"),
}

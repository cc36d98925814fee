"""Evaluation-input generation: preset topologies and randomized demand sets.

The three preset topologies follow a documented wiring so every number in
this repository is reproducible: switches form a ring with 10 Gbps / 1 ms
transport links, BSs attach round-robin (one switch each), OENs attach to
evenly spaced distinct switches, and each OEN has a 10 Gbps / 1.5 ms link
to the single EEN.  All connections are bidirectional (two directed links).

Demand generation draws i.i.d. from the parameter table using one PCG64
substream per attribute (SeedSequence(seed, spawn_key=(attr,))), so adding
an attribute later never perturbs existing draws.  Generation stops at the
first demand whose inclusion lifts total CPU demand to at least
load_pct% of the aggregate OEN capacity; that demand is included.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import (
    BS,
    EEN,
    OEN,
    SWITCH,
    Demand,
    EaType,
    Link,
    Oen,
    Scenario,
    ScenarioError,
    Topology,
    default_upf_policy,
)

# (BS count, switch count, OEN count) per preset
PRESET_SHAPES = {
    "small": (4, 6, 2),
    "medium": (8, 8, 4),
    "large": (12, 10, 6),
}

OEN_CPU_CAPACITY = 32000  # mCPU
OEN_STORAGE_CAPACITY = 250  # GB
OEN_ON_COST = 200  # profit units
LINK_BANDWIDTH = 10000  # Mbps (10 Gbps)
TRANSPORT_LATENCY = 10  # tenths of ms (1 ms)
EEN_LINK_LATENCY = 15  # tenths of ms (1.5 ms)

LOAD_LEVELS = (30, 60, 100, 150, 200, 300)

DEFAULT_EA_IDLE_CPU = 500  # mCPU
DEFAULT_EA_STORAGE = 10  # GB


@dataclass(frozen=True)
class DemandParamTable:
    """Choice sets for demand attribute draws (delay budgets in ms)."""

    ea_types: tuple[int, ...] = (1, 2, 3, 4, 5)
    cpu_choices: tuple[int, ...] = (750, 1000, 1250, 1500)
    bw_choices: tuple[int, ...] = (30, 40, 50, 60)
    delay_choices_ms: tuple[int, ...] = (3, 4, 5)
    cost_choices: tuple[int, ...] = (40, 50, 60, 70)
    utility_range: tuple[int, int] = (44, 91)  # inclusive integer uniform

    def validate(self) -> list[str]:
        errors = []
        for name in ("ea_types", "cpu_choices", "bw_choices", "delay_choices_ms", "cost_choices"):
            if not getattr(self, name):
                errors.append(f"{name} must be non-empty")
        lo, hi = self.utility_range
        if lo > hi:
            errors.append("utility_range must satisfy lo <= hi")
        return errors


DEFAULT_TABLE = DemandParamTable()


def default_ea_catalog(table: DemandParamTable = DEFAULT_TABLE) -> tuple[EaType, ...]:
    return tuple(
        EaType(id=i, idle_cpu=DEFAULT_EA_IDLE_CPU, storage_req=DEFAULT_EA_STORAGE)
        for i in table.ea_types
    )


def make_preset_topology(size: str) -> tuple[Topology, tuple[Oen, ...]]:
    """Build one of the three preset topologies (small, medium, large).

    Node ids: BSs first, then switches, then OENs, EEN last.
    """
    if size not in PRESET_SHAPES:
        raise ScenarioError(f"unknown topology preset {size!r}")
    n_bs, n_sw, n_oen = PRESET_SHAPES[size]
    nodes: dict[int, str] = {}
    for j in range(n_bs):
        nodes[j] = BS
    sw0 = n_bs
    for k in range(n_sw):
        nodes[sw0 + k] = SWITCH
    oen0 = n_bs + n_sw
    for m in range(n_oen):
        nodes[oen0 + m] = OEN
    een = n_bs + n_sw + n_oen
    nodes[een] = EEN

    links: dict[int, Link] = {}

    def connect(a: int, b: int, latency: int) -> None:
        for src, dst in ((a, b), (b, a)):
            lid = len(links)
            links[lid] = Link(
                id=lid, src=src, dst=dst, bandwidth=LINK_BANDWIDTH, latency=latency
            )

    # Switch ring
    for k in range(n_sw):
        connect(sw0 + k, sw0 + (k + 1) % n_sw, TRANSPORT_LATENCY)
    # BSs round-robin over switches
    for j in range(n_bs):
        connect(j, sw0 + (j % n_sw), TRANSPORT_LATENCY)
    # OENs on evenly spaced distinct switches
    for m in range(n_oen):
        connect(oen0 + m, sw0 + (m * n_sw) // n_oen, TRANSPORT_LATENCY)
    # OEN uplinks to the EEN
    for m in range(n_oen):
        connect(oen0 + m, een, EEN_LINK_LATENCY)

    topology = Topology(nodes=nodes, links=links)
    oens = tuple(
        Oen(
            node=oen0 + m,
            cpu_capacity=OEN_CPU_CAPACITY,
            storage_capacity=OEN_STORAGE_CAPACITY,
            on_cost=OEN_ON_COST,
        )
        for m in range(n_oen)
    )
    return topology, oens


# One PCG64 substream per attribute; order is part of the file contract.
_ATTR_STREAMS = ("bs", "ea", "cpu", "bw", "delay", "cost", "utility")


def _streams(seed: int) -> dict[str, np.random.Generator]:
    return {
        name: np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))
        for k, name in enumerate(_ATTR_STREAMS)
    }


def generate_demands(
    topology: Topology,
    oens: tuple[Oen, ...],
    load_pct: int,
    seed: int,
    table: DemandParamTable = DEFAULT_TABLE,
) -> tuple[Demand, ...]:
    """Draw demands until total CPU demand reaches load_pct% of aggregate
    OEN CPU capacity (the crossing demand is included)."""
    errors = table.validate()
    if errors:
        raise ScenarioError("; ".join(errors))
    if load_pct <= 0:
        raise ScenarioError("load_pct must be positive")
    bs_nodes = topology.nodes_of_kind(BS)
    if not bs_nodes:
        raise ScenarioError("topology has no BS nodes")
    total_capacity = sum(o.cpu_capacity for o in oens)
    if total_capacity <= 0:
        raise ScenarioError("aggregate OEN capacity must be positive")

    rng = _streams(seed)
    lo, hi = table.utility_range
    demands: list[Demand] = []
    index_counter: dict[tuple[int, int], int] = {}
    total_cpu = 0
    # Stop once 100 * total_cpu >= load_pct * total_capacity (integer exact).
    while 100 * total_cpu < load_pct * total_capacity:
        bs = bs_nodes[int(rng["bs"].integers(len(bs_nodes)))]
        ea = table.ea_types[int(rng["ea"].integers(len(table.ea_types)))]
        cpu = table.cpu_choices[int(rng["cpu"].integers(len(table.cpu_choices)))]
        bw = table.bw_choices[int(rng["bw"].integers(len(table.bw_choices)))]
        delay_ms = table.delay_choices_ms[int(rng["delay"].integers(len(table.delay_choices_ms)))]
        cost = table.cost_choices[int(rng["cost"].integers(len(table.cost_choices)))]
        utility = int(rng["utility"].integers(lo, hi + 1))
        idx = index_counter.get((bs, ea), 0) + 1
        index_counter[(bs, ea)] = idx
        demands.append(
            Demand(
                bs=bs,
                ea=ea,
                index=idx,
                cpu_req=cpu,
                bw_req=bw,
                delay_budget=delay_ms * 10,
                utility=utility,
                offload_cost=cost,
            )
        )
        total_cpu += cpu
    return tuple(demands)


def build_scenario(
    size: str,
    load_pct: int,
    seed: int,
    cutoff: int = 6,
    table: DemandParamTable = DEFAULT_TABLE,
    ea_catalog: tuple[EaType, ...] | None = None,
    upf_policy=None,
) -> Scenario:
    """Assemble a complete scenario from a preset topology and a seeded
    demand draw."""
    topology, oens = make_preset_topology(size)
    if ea_catalog is None:
        ea_catalog = default_ea_catalog(table)
    if upf_policy is None:
        upf_policy = default_upf_policy()
    demands = generate_demands(topology, oens, load_pct, seed, table)
    return Scenario(
        topology=topology,
        oens=oens,
        ea_catalog=ea_catalog,
        upf_policy=upf_policy,
        demands=demands,
        path_cutoff=cutoff,
    )

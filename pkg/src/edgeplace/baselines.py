"""Benchmark algorithms: Greedy and Top-K.

Both rank demands by raw utility, pre-initialize OENs and UPF clusters
once from aggregate demand requirements, and place first-fit (first viable
OEN in id order).  Top-K additionally attempts OEN placement only for the
largest utility-ordered prefix whose cumulative CPU requirement fits the
aggregate capacity of the switched-on OENs; demands beyond that prefix are
offered to the EEN directly.  Neither runs a reallocation pass.

The pre-initialization formulas are this package's documented
reconstruction: the number of OENs switched on is ceil(total demand CPU /
mean OEN capacity) capped at the fleet size (smallest ids first), and each
gets the smallest cluster scale covering an equal share of the total
demand bandwidth.  OENs that end a run without a single anchored demand
are emitted switched off so the output stays feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .domain import (
    OFFLOADED,
    PLACED,
    REJECTED,
    Demand,
    Disposition,
    Scenario,
    Solution,
)
from .pathing import PathSet
from .placement_common import (
    LinkLedger,
    first_feasible_een_path,
    first_feasible_path,
)


@dataclass(frozen=True)
class PreInitPlan:
    """OENs switched on and their fixed cluster scales, decided before any
    demand is processed."""

    on_oens: tuple[int, ...]
    scale: dict[int, int]


def preinit(scenario: Scenario) -> PreInitPlan:
    """Size the OEN fleet and UPF clusters from aggregate demand CPU and
    bandwidth."""
    if not scenario.demands:
        return PreInitPlan(on_oens=(), scale={})
    oens = sorted(scenario.oens, key=lambda o: o.node)
    total_cpu = sum(d.cpu_req for d in scenario.demands)
    mean_capacity = sum(o.cpu_capacity for o in oens) // len(oens)
    m = min(len(oens), max(1, math.ceil(total_cpu / mean_capacity)))
    total_bw = sum(d.bw_req for d in scenario.demands)
    policy = scenario.upf_policy
    bw_unit = policy.bw_per_replicas[1]
    scale = min(policy.max_replicas, max(1, math.ceil(math.ceil(total_bw / m) / bw_unit)))
    chosen = tuple(o.node for o in oens[:m])
    return PreInitPlan(on_oens=chosen, scale={e: scale for e in chosen})


class _FirstFit:
    """Shared first-fit engine under a fixed pre-initialization plan."""

    def __init__(self, scenario: Scenario, pathset: PathSet, plan: PreInitPlan):
        self.scenario = scenario
        self.pathset = pathset
        self.plan = plan
        self.een = scenario.topology.een_node
        self.policy = scenario.upf_policy
        self.ea_idle = {ea.id: ea.idle_cpu for ea in scenario.ea_catalog}
        self.ea_storage = {ea.id: ea.storage_req for ea in scenario.ea_catalog}
        self.links = LinkLedger(scenario.topology)
        self.cpu_left: dict[int, int] = {}
        self.storage_left: dict[int, int] = {}
        self.bw_left: dict[int, int] = {}
        self.deployed: dict[int, set[int]] = {}
        self.anchor_count: dict[int, int] = {}
        for oen in sorted(scenario.oens, key=lambda o: o.node):
            e = oen.node
            if e in plan.scale:
                self.cpu_left[e] = oen.cpu_capacity - self.policy.cpu_for(plan.scale[e])
                self.bw_left[e] = self.policy.bw_for(plan.scale[e])
            else:
                self.cpu_left[e] = oen.cpu_capacity
                self.bw_left[e] = 0
            self.storage_left[e] = oen.storage_capacity
            self.deployed[e] = set()
            self.anchor_count[e] = 0
        self.solution = Solution.empty(scenario)

    def try_place(self, demand: Demand) -> bool:
        for e in self.plan.on_oens:
            if self.bw_left[e] < demand.bw_req:
                continue
            ea_new = demand.ea not in self.deployed[e]
            need_cpu = demand.cpu_req + (self.ea_idle[demand.ea] if ea_new else 0)
            if self.cpu_left[e] < need_cpu:
                continue
            if ea_new and self.storage_left[e] < self.ea_storage[demand.ea]:
                continue
            path = first_feasible_path(self.pathset, demand, e, self.links)
            if path is None:
                continue
            self.cpu_left[e] -= need_cpu
            if ea_new:
                self.storage_left[e] -= self.ea_storage[demand.ea]
                self.deployed[e].add(demand.ea)
            self.bw_left[e] -= demand.bw_req
            self.anchor_count[e] += 1
            self.links.reserve(path, demand.bw_req)
            self.solution.disposition[demand.key] = Disposition(PLACED, oen=e)
            self.solution.anchor[demand.key] = e
            self.solution.route[demand.key] = path.id
            return True
        return False

    def try_offload(self, demand: Demand) -> bool:
        for e in self.plan.on_oens:
            if self.bw_left[e] < demand.bw_req:
                continue
            path = first_feasible_een_path(self.pathset, demand, self.een, e, self.links)
            if path is None:
                continue
            self.bw_left[e] -= demand.bw_req
            self.anchor_count[e] += 1
            self.links.reserve(path, demand.bw_req)
            self.solution.disposition[demand.key] = Disposition(OFFLOADED)
            self.solution.anchor[demand.key] = e
            self.solution.route[demand.key] = path.id
            return True
        return False

    def finish(self) -> Solution:
        # An OEN that anchored nothing is emitted off, with no cluster;
        # keeping an idle cluster would violate the anchoring-coverage
        # constraint and only burn switch-on cost.
        for e in self.plan.on_oens:
            if self.anchor_count[e] > 0:
                self.solution.oen_on[e] = True
                self.solution.upf_scale[e] = self.plan.scale[e]
        for e, eas in self.deployed.items():
            for i in eas:
                self.solution.ea_deployed.add((i, e))
        return self.solution


def _utility_sorted(scenario: Scenario) -> list[Demand]:
    return sorted(scenario.demands, key=lambda d: (-d.utility, d.key))


def run_greedy(
    scenario: Scenario, pathset: PathSet, plan: Optional[PreInitPlan] = None
) -> Solution:
    """Utility-ranked first-fit: place on the first viable ON OEN, else
    offload through the first OEN with a feasible EEN route and UPF
    headroom, else reject."""
    if plan is None:
        plan = preinit(scenario)
    engine = _FirstFit(scenario, pathset, plan)
    for demand in _utility_sorted(scenario):
        if engine.try_place(demand):
            continue
        if engine.try_offload(demand):
            continue
    return engine.finish()


def topk_prefix_size(scenario: Scenario, plan: Optional[PreInitPlan] = None) -> int:
    """K: length of the largest utility-ordered prefix whose cumulative CPU
    requirement fits the aggregate capacity of the plan's ON OENs."""
    if plan is None:
        plan = preinit(scenario)
    capacity = sum(
        scenario.oen_by_node(e).cpu_capacity for e in plan.on_oens
    )
    total = 0
    k = 0
    for demand in _utility_sorted(scenario):
        if total + demand.cpu_req > capacity:
            break
        total += demand.cpu_req
        k += 1
    return k


def run_topk(
    scenario: Scenario,
    pathset: PathSet,
    plan: Optional[PreInitPlan] = None,
    k: Optional[int] = None,
) -> Solution:
    """First-fit over the top-K demands only; demands beyond the prefix are
    attempted as EEN offloads, else rejected."""
    if plan is None:
        plan = preinit(scenario)
    if k is None:
        k = topk_prefix_size(scenario, plan)
    engine = _FirstFit(scenario, pathset, plan)
    for pos, demand in enumerate(_utility_sorted(scenario)):
        if pos < k:
            if engine.try_place(demand):
                continue
            if engine.try_offload(demand):
                continue
        else:
            engine.try_offload(demand)
    return engine.finish()

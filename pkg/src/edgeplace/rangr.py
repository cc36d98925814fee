"""RanGr: ranked-greedy demand anchoring and placement with a reallocation
pass that switches off unprofitable OENs.

The run proceeds in three stages:

1. Demands are ranked by the tuple (utility/CPU, -(utility - offload cost)),
   computed on batch-max-normalized values, and processed in descending
   rank order.  Ranks are exact rationals so that scaling all utilities
   and costs by a common factor provably never reorders the batch.
2. ``anchor_and_place`` runs twice over each demand list: an anchoring
   phase that commits UPF bandwidth, upscale CPU, and a route while only
   tentatively reserving placement CPU, and a placement phase that
   re-validates each tentative placement against the CPU that is actually
   left (later anchors may have upscaled clusters in the meantime),
   falling back to an EEN offload through the anchor, else rejecting.
3. One reallocation round: every OEN whose attributed profit does not
   exceed its switch-on cost is emptied and excluded, and its demands are
   re-tried together with the previously rejected ones.

All tie-breaks (equal ranks, equal OEN scores, path choice) go to the
smallest entity id, so a run is a pure function of the scenario.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .domain import (
    OFFLOADED,
    PLACED,
    REJECTED,
    Demand,
    DemandKey,
    Disposition,
    Oen,
    Scenario,
    Solution,
    UpfScalePolicy,
)
from .pathing import Path, PathSet
from .placement_common import (
    LinkLedger,
    first_feasible_een_path,
    first_feasible_path,
)

NEG_INF = float("-inf")


@dataclass(frozen=True)
class Norms:
    """Batch maxima used as normalization denominators (clamped to >= 1
    where an attribute may legitimately be all-zero)."""

    u_max: int
    c_max: int
    cpu_max: int


@dataclass(frozen=True)
class RankedDemand:
    demand: Demand
    rank: tuple[Fraction, Fraction]


def normalize_batch(demands) -> Norms:
    if not demands:
        raise ValueError("cannot normalize an empty demand batch")
    return Norms(
        u_max=max(1, max(d.utility for d in demands)),
        c_max=max(1, max(d.offload_cost for d in demands)),
        cpu_max=max(d.cpu_req for d in demands),
    )


def rank_demand(demand: Demand, norms: Norms) -> tuple[Fraction, Fraction]:
    """Rank tuple (higher is better, compared lexicographically): the
    normalized utility-per-CPU ratio first, then the negated normalized
    profit margin, so equal-ratio demands with less to gain from an EEN
    offload come first."""
    ratio = Fraction(demand.utility * norms.cpu_max, norms.u_max * demand.cpu_req)
    margin = Fraction(demand.utility, norms.u_max) - Fraction(
        demand.offload_cost, norms.c_max
    )
    return (ratio, -margin)


def rank_batch(demands) -> list[RankedDemand]:
    """Rank and sort a batch, best first; ties broken by demand key."""
    norms = normalize_batch(demands)
    ranked = [RankedDemand(d, rank_demand(d, norms)) for d in demands]
    ranked.sort(key=lambda r: (-r.rank[0], -r.rank[1], r.demand.key))
    return ranked


@dataclass
class OenState:
    """Mutable per-OEN bookkeeping during a run.

    ``cpu_available`` reflects committed allocations only (UPF cluster,
    deployed EAs, placed demands); the tentative_* fields additionally
    account for placements recorded during the anchoring phase but not yet
    committed.
    """

    oen: Oen
    policy: UpfScalePolicy
    ea_idle: dict[int, int]
    ea_storage: dict[int, int]
    upf_scale: int = 0
    cpu_available: int = 0
    storage_available: int = 0
    anchored_bw: int = 0
    deployed_eas: set[int] = field(default_factory=set)
    anchored_keys: list[DemandKey] = field(default_factory=list)
    attributed_profit: int = 0
    excluded: bool = False
    tentative: list = field(default_factory=list)  # (demand, oen path)
    tentative_cpu: int = 0
    tentative_storage: int = 0
    tentative_eas: set[int] = field(default_factory=set)

    @property
    def on(self) -> bool:
        return bool(self.anchored_keys)

    def reset_tentative(self) -> None:
        self.tentative = []
        self.tentative_cpu = 0
        self.tentative_storage = 0
        self.tentative_eas = set(self.deployed_eas)

    def upscale_cpu_for(self, bw: int) -> Optional[int]:
        """CPU delta to cover anchored_bw + bw, or None if no scale can."""
        needed = self.policy.min_scale_for_bw(self.anchored_bw + bw)
        if needed is None:
            return None
        new_scale = max(self.upf_scale, needed)
        return self.policy.cpu_for(new_scale) - self.policy.cpu_for(self.upf_scale)


def rank_oen(state: OenState, demand: Demand) -> tuple:
    """(R_A, R_P): CPU left after anchoring the demand, and after anchoring
    plus placing it assuming earlier anchored demands are placed too.

    Negative values are returned as-is; they tell the caller the OEN cannot
    take the demand.  If no cluster scale can carry the added bandwidth at
    all, both components are -inf.
    """
    upscale_cpu = state.upscale_cpu_for(demand.bw_req)
    if upscale_cpu is None:
        return (NEG_INF, NEG_INF)
    r_a = state.cpu_available - upscale_cpu
    ea_cpu = 0 if demand.ea in state.tentative_eas else state.ea_idle[demand.ea]
    r_p = (
        state.cpu_available
        - state.tentative_cpu
        - upscale_cpu
        - ea_cpu
        - demand.cpu_req
    )
    return (r_a, r_p)


@dataclass
class RunTrace:
    """Optional instrumentation filled by run_rangr for tests and debugging."""

    check_profit: dict[int, int] = field(default_factory=dict)
    check_on: set[int] = field(default_factory=set)
    switched_off: set[int] = field(default_factory=set)
    first_pass_objective: Optional[int] = None
    retried: int = 0


class _Run:
    """One RanGr execution over a scenario."""

    def __init__(self, scenario: Scenario, pathset: PathSet, reject_negative: bool):
        self.scenario = scenario
        self.pathset = pathset
        self.policy = scenario.upf_policy
        self.reject_negative = reject_negative
        self.een = scenario.topology.een_node
        self.ea_idle = {ea.id: ea.idle_cpu for ea in scenario.ea_catalog}
        self.ea_storage = {ea.id: ea.storage_req for ea in scenario.ea_catalog}
        self.links = LinkLedger(scenario.topology)
        # Static latency reachability: smallest path latency per
        # (BS, destination) group.  The delay constraint identifies the OEN
        # subset a demand can be placed on at all; ranking runs over that
        # subset.
        self.min_latency = {
            key: min(p.total_latency for p in group)
            for key, group in pathset.groups.items()
        }
        self.states: dict[int, OenState] = {}
        for oen in sorted(scenario.oens, key=lambda o: o.node):
            self.states[oen.node] = OenState(
                oen=oen,
                policy=self.policy,
                ea_idle=self.ea_idle,
                ea_storage=self.ea_storage,
                cpu_available=oen.cpu_capacity,
                storage_available=oen.storage_capacity,
            )
        self.disposition: dict[DemandKey, Disposition] = {}
        self.anchor: dict[DemandKey, Optional[int]] = {}
        self.route: dict[DemandKey, Optional[int]] = {}

    # -- scale bookkeeping -------------------------------------------------

    def _grow_cluster(self, state: OenState, bw: int) -> None:
        needed = self.policy.min_scale_for_bw(state.anchored_bw + bw)
        new_scale = max(state.upf_scale, needed)
        state.cpu_available -= (
            self.policy.cpu_for(new_scale) - self.policy.cpu_for(state.upf_scale)
        )
        state.upf_scale = new_scale
        state.anchored_bw += bw

    def _shrink_cluster(self, state: OenState, bw: int) -> None:
        """Release anchored bandwidth and downscale to the smallest scale
        that still covers what remains."""
        state.anchored_bw -= bw
        new_scale = self.policy.min_scale_for_bw(state.anchored_bw)
        state.cpu_available += (
            self.policy.cpu_for(state.upf_scale) - self.policy.cpu_for(new_scale)
        )
        state.upf_scale = new_scale

    # -- feasibility probes --------------------------------------------------

    def _can_place(self, state: OenState, demand: Demand) -> Optional[Path]:
        """Full-placement probe for the anchoring phase: CPU (tentative view,
        upscale and EA included), storage, UPF bandwidth, and a feasible
        route.  Returns the route to reserve, or None."""
        if state.excluded:
            return None
        r_a, r_p = rank_oen(state, demand)
        if r_p == NEG_INF or r_p < 0:
            return None
        if demand.ea not in state.tentative_eas:
            need_storage = self.ea_storage[demand.ea]
            if state.storage_available - state.tentative_storage < need_storage:
                return None
        return first_feasible_path(self.pathset, demand, state.oen.node, self.links)

    def _can_anchor(self, state: OenState, demand: Demand) -> Optional[Path]:
        """Anchoring-only probe: upscale CPU against committed availability
        plus an EEN route through this OEN."""
        if state.excluded:
            return None
        upscale = state.upscale_cpu_for(demand.bw_req)
        if upscale is None or upscale > state.cpu_available:
            return None
        return first_feasible_een_path(
            self.pathset, demand, self.een, state.oen.node, self.links
        )

    # -- anchoring and placement -------------------------------------------

    def anchor_and_place(self, ordered: list[Demand]) -> None:
        """Two sequential phases over a rank-sorted demand list."""
        active = [s for s in self.states.values() if not s.excluded]
        for state in active:
            state.reset_tentative()

        anchored: list[tuple[Demand, OenState, Path]] = []
        for demand in ordered:
            if not active:
                self._reject(demand)
                continue
            scores = {s.oen.node: rank_oen(s, demand) for s in active}
            reachable = [
                s
                for s in active
                if self.min_latency.get((demand.bs, s.oen.node), None) is not None
                and self.min_latency[(demand.bs, s.oen.node)] <= demand.delay_budget
            ]
            path = None
            top = None
            if reachable:
                by_rp = sorted(
                    reachable, key=lambda s: (-scores[s.oen.node][1], s.oen.node)
                )
                top = by_rp[0]
                path = self._can_place(top, demand)
            if path is not None:
                # Anchor here and record the placement for phase two.
                self._grow_cluster(top, demand.bw_req)
                self.links.reserve(path, demand.bw_req)
                top.anchored_keys.append(demand.key)
                self.anchor[demand.key] = top.oen.node
                self.route[demand.key] = path.id
                if demand.ea not in top.tentative_eas:
                    top.tentative_cpu += self.ea_idle[demand.ea]
                    top.tentative_storage += self.ea_storage[demand.ea]
                    top.tentative_eas.add(demand.ea)
                top.tentative_cpu += demand.cpu_req
                top.tentative.append((demand, path))
                anchored.append((demand, top, path))
                continue
            # Placement not possible anywhere it was probed: anchor for an
            # EEN offload on the OEN with the most CPU left after anchoring.
            by_ra = sorted(active, key=lambda s: (-scores[s.oen.node][0], s.oen.node))
            done = False
            for state in by_ra:
                een_path = self._can_anchor(state, demand)
                if een_path is not None:
                    self._grow_cluster(state, demand.bw_req)
                    self.links.reserve(een_path, demand.bw_req)
                    state.anchored_keys.append(demand.key)
                    self.anchor[demand.key] = state.oen.node
                    self.route[demand.key] = een_path.id
                    self.disposition[demand.key] = Disposition(OFFLOADED)
                    state.attributed_profit += demand.utility - demand.offload_cost
                    done = True
                    break
            if not done:
                self._reject(demand)

        # Placement phase: re-validate each saved scheme against what is
        # actually left; clusters grown for later anchors may have eaten
        # the CPU this placement assumed.
        for demand, state, oen_path in anchored:
            ea_new = demand.ea not in state.deployed_eas
            need_cpu = demand.cpu_req + (self.ea_idle[demand.ea] if ea_new else 0)
            need_storage = self.ea_storage[demand.ea] if ea_new else 0
            if state.cpu_available >= need_cpu and state.storage_available >= need_storage:
                state.cpu_available -= need_cpu
                state.storage_available -= need_storage
                state.deployed_eas.add(demand.ea)
                self.disposition[demand.key] = Disposition(PLACED, oen=state.oen.node)
                state.attributed_profit += demand.utility
                continue
            # The demand stays anchored here; try serving it from the EEN.
            self.links.release(oen_path, demand.bw_req)
            een_path = None
            margin_ok = (
                not self.reject_negative
                or demand.utility - demand.offload_cost >= 0
            )
            if margin_ok:
                een_path = first_feasible_een_path(
                    self.pathset, demand, self.een, state.oen.node, self.links
                )
            if een_path is not None:
                self.links.reserve(een_path, demand.bw_req)
                self.route[demand.key] = een_path.id
                self.disposition[demand.key] = Disposition(OFFLOADED)
                state.attributed_profit += demand.utility - demand.offload_cost
            else:
                self._shrink_cluster(state, demand.bw_req)
                state.anchored_keys.remove(demand.key)
                self._reject(demand)

    def _reject(self, demand: Demand) -> None:
        self.disposition[demand.key] = Disposition(REJECTED)
        self.anchor[demand.key] = None
        self.route[demand.key] = None

    # -- reallocation ---------------------------------------------------

    def undo_oen(self, state: OenState) -> list[DemandKey]:
        """Empty an unprofitable OEN and exclude it from further rounds."""
        undone = list(state.anchored_keys)
        for key in undone:
            path = self.pathset.by_id[self.route[key]]
            demand = self.scenario.demand_by_key(key)
            self.links.release(path, demand.bw_req)
            self.disposition.pop(key, None)
            self.anchor[key] = None
            self.route[key] = None
        oen = state.oen
        state.upf_scale = 0
        state.cpu_available = oen.cpu_capacity
        state.storage_available = oen.storage_capacity
        state.anchored_bw = 0
        state.deployed_eas = set()
        state.anchored_keys = []
        state.attributed_profit = 0
        state.excluded = True
        return undone

    def to_solution(self) -> Solution:
        return Solution(
            oen_on={e: s.on for e, s in self.states.items()},
            upf_scale={e: s.upf_scale for e, s in self.states.items()},
            ea_deployed={
                (i, e) for e, s in self.states.items() for i in s.deployed_eas
            },
            disposition=dict(self.disposition),
            anchor=dict(self.anchor),
            route=dict(self.route),
        )


def run_rangr(
    scenario: Scenario,
    pathset: PathSet,
    reject_negative_margin_offload: bool = False,
    trace: Optional[RunTrace] = None,
) -> Solution:
    """Execute RanGr and return the final assignment.

    ``reject_negative_margin_offload`` makes the placement phase reject,
    instead of offloading, demands whose utility does not cover the EEN
    rental cost; off by default.
    """
    run = _Run(scenario, pathset, reject_negative_margin_offload)
    if not scenario.demands:
        return run.to_solution()

    ranked = rank_batch(scenario.demands)
    ranks = {rd.demand.key: rd.rank for rd in ranked}
    run.anchor_and_place([rd.demand for rd in ranked])

    if trace is not None:
        from .verifier import objective  # local import avoids a cycle

        trace.first_pass_objective = objective(scenario, run.to_solution())

    # Reallocation: retry rejects plus everything held by OENs whose
    # attributed profit does not beat their switch-on cost.
    retry_keys = [
        d.key for d in scenario.demands if run.disposition[d.key].kind == REJECTED
    ]
    for e in sorted(run.states):
        state = run.states[e]
        if trace is not None and state.on:
            trace.check_on.add(e)
            trace.check_profit[e] = state.attributed_profit
        if state.on and state.attributed_profit <= state.oen.on_cost:
            retry_keys.extend(run.undo_oen(state))
            if trace is not None:
                trace.switched_off.add(e)
    if retry_keys:
        retry = [scenario.demand_by_key(k) for k in retry_keys]
        retry.sort(key=lambda d: (-ranks[d.key][0], -ranks[d.key][1], d.key))
        if trace is not None:
            trace.retried = len(retry)
        run.anchor_and_place(retry)

    return run.to_solution()

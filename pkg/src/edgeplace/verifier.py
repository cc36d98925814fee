"""Independent feasibility checker and objective evaluator.

Every solver and heuristic in this package is tested against this module.
Constraint identifiers C2..C18 follow the numbering of the canonical
optimization model documented in the README; S1..S4 are structural checks
on the solution encoding itself:

  S1  every referenced entity (OEN, EA type, demand, path) exists
  S2  the solution covers exactly the scenario's demand set
  S3  a routed path starts at the demand's BS and ends at its placement
      OEN (placed) or at the EEN (offloaded)
  S4  cluster scales lie in 0..max_replicas

Three formulation details are normative here and mirrored by the ILP
builder: the routing-count constraint is enforced in its prose form
(exactly one path iff not rejected, plus S3 destination consistency),
per-link usage is derived from the chosen path's incidence rather than
being free (C15 holds by construction), and the anchoring-consistency
constraint C11 is checked through the path's last-hop OEN.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .domain import (
    OFFLOADED,
    PLACED,
    REJECTED,
    Demand,
    Scenario,
    Solution,
)
from .pathing import PathSet


@dataclass(frozen=True)
class Violation:
    constraint: str  # C2..C18 or S1..S4
    entities: tuple  # offending entity ids
    measured: object
    allowed: object

    def __str__(self) -> str:
        ents = ", ".join(str(e) for e in self.entities)
        return f"{self.constraint}[{ents}]: measured {self.measured}, allowed {self.allowed}"


@dataclass
class ViolationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def add(self, constraint: str, entities: tuple, measured, allowed) -> None:
        self.violations.append(Violation(constraint, entities, measured, allowed))

    def constraints_hit(self) -> set[str]:
        return {v.constraint for v in self.violations}

    def __str__(self) -> str:
        if self.feasible:
            return "feasible: no violations\n"
        lines = [f"{len(self.violations)} violation(s):"]
        lines.extend(f"  {v}" for v in self.violations)
        return "\n".join(lines) + "\n"


def check_solution(
    scenario: Scenario, pathset: PathSet, solution: Solution
) -> ViolationReport:
    """Evaluate every model constraint plus the structural S-checks.

    Pure function: dangling references become S1 entries, never exceptions.
    """
    report = ViolationReport()
    policy = scenario.upf_policy
    oen_nodes = [o.node for o in scenario.oens]
    oen_set = set(oen_nodes)
    ea_ids = {ea.id for ea in scenario.ea_catalog}
    een = scenario.topology.een_node
    demand_keys = {d.key for d in scenario.demands}

    # S2: coverage of the scenario's demand set
    for key in sorted(demand_keys - set(solution.disposition)):
        report.add("S2", key, "missing disposition", "one disposition per demand")
    for key in sorted(set(solution.disposition) - demand_keys):
        report.add("S1", key, "disposition for unknown demand", "scenario demands only")

    # S1/S4: sanity of OEN-level maps
    for e in sorted(set(solution.oen_on) | set(solution.upf_scale)):
        if e not in oen_set:
            report.add("S1", (e,), "unknown OEN", "scenario OENs only")
    for e, scale in sorted(solution.upf_scale.items()):
        if e in oen_set and not (0 <= scale <= policy.max_replicas):
            report.add("S4", (e,), scale, f"0..{policy.max_replicas}")
    for i, e in sorted(solution.ea_deployed):
        if i not in ea_ids or e not in oen_set:
            report.add("S1", (i, e), "unknown EA type or OEN", "catalog entries only")

    def on(e: int) -> bool:
        return bool(solution.oen_on.get(e, False))

    def scale(e: int) -> int:
        s = solution.upf_scale.get(e, 0)
        return s if 0 <= s <= policy.max_replicas else 0

    # Per-demand checks and resource accumulation
    placed_cpu = {e: 0 for e in oen_nodes}
    placed_by_type: dict[tuple[int, int], int] = {}
    anchored_bw = {e: 0 for e in oen_nodes}
    anchored_count = {e: 0 for e in oen_nodes}
    link_load: dict[int, int] = {}

    for demand in sorted(scenario.demands, key=lambda d: d.key):
        key = demand.key
        disp = solution.disposition.get(key)
        if disp is None:
            continue  # already reported as S2
        anchor = solution.anchor.get(key)
        route = solution.route.get(key)
        path = pathset.by_id.get(route) if route is not None else None
        if route is not None and path is None:
            report.add("S1", key, f"unknown path {route}", "pathset ids only")
        if anchor is not None and anchor not in oen_set:
            report.add("S1", key, f"unknown anchor {anchor}", "scenario OENs only")
            anchor = None

        if disp.kind == REJECTED:
            # C10: rejected demands are not anchored; C14: not routed
            if anchor is not None:
                report.add("C10", key, f"anchored on {anchor}", "no anchor when rejected")
            if route is not None:
                report.add("C14", key, f"routed on path {route}", "no route when rejected")
            continue

        if disp.kind == PLACED:
            e = disp.oen
            if e is None or e not in oen_set:
                report.add("S1", key, f"placement OEN {e}", "scenario OENs only")
                continue
            placed_cpu[e] += demand.cpu_req
            placed_by_type[(demand.ea, e)] = placed_by_type.get((demand.ea, e), 0) + 1
            # C7: placement requires a same-type EA on the OEN
            if (demand.ea, e) not in solution.ea_deployed:
                report.add("C7", key + (e,), "no EA of type", f"EA {demand.ea} deployed on {e}")
            # C11: a placed demand is anchored on its placement OEN
            if anchor != e:
                report.add("C11", key, f"anchor {anchor}", f"placement OEN {e}")
        elif disp.kind == OFFLOADED:
            # C11: an offloaded demand is anchored on its path's last-hop OEN
            if path is not None and anchor != path.last_hop_oen:
                report.add("C11", key, f"anchor {anchor}", f"path last hop {path.last_hop_oen}")
        else:
            report.add("S1", key, f"unknown disposition {disp.kind!r}", "rejected|offloaded|placed")
            continue

        # C10: accepted demands are anchored on exactly one OEN
        if anchor is None:
            report.add("C10", key, "no anchor", "exactly one anchor when accepted")
        else:
            anchored_bw[anchor] += demand.bw_req
            anchored_count[anchor] += 1
            # C12: anchoring requires a UPF cluster on the OEN
            if scale(anchor) < 1:
                report.add("C12", key + (anchor,), "no UPF cluster", "scale >= 1 on anchor")

        # C14: accepted demands are routed through exactly one path
        if path is None:
            if route is None:
                report.add("C14", key, "no route", "exactly one path when accepted")
            continue
        # S3: route endpoints match the disposition
        if path.source != demand.bs:
            report.add("S3", key, f"path source {path.source}", f"BS {demand.bs}")
        expected_dst = disp.oen if disp.kind == PLACED else een
        if path.destination != expected_dst:
            report.add("S3", key, f"path destination {path.destination}", f"{expected_dst}")
        # C16: path latency within the delay budget
        if path.total_latency > demand.delay_budget:
            report.add("C16", key, path.total_latency, demand.delay_budget)
        # C15 holds by construction: every link of the chosen path carries
        # the demand's bandwidth.
        for lid in path.links:
            link_load[lid] = link_load.get(lid, 0) + demand.bw_req

    # Per-OEN checks
    for oen in scenario.oens:
        e = oen.node
        s = scale(e)
        # C4/C5: deployments only on OENs that are on
        deployed_here = sorted(i for i, ee in solution.ea_deployed if ee == e)
        if deployed_here and not on(e):
            report.add("C4", (e,), f"EAs {deployed_here} on OFF OEN", "OEN must be on")
        if s >= 1 and not on(e):
            report.add("C5", (e,), f"cluster scale {s} on OFF OEN", "OEN must be on")
        # C6 (single cluster per OEN) holds by construction of the scale map.
        # C8: a deployed EA serves at least one placed demand of its type
        for i in deployed_here:
            if placed_by_type.get((i, e), 0) == 0:
                report.add("C8", (i, e), "EA deployed, no demand placed", ">= 1 placed demand")
        # C13: a cluster exists only where demands are anchored
        if s >= 1 and anchored_count[e] == 0:
            report.add("C13", (e,), f"scale {s}, no anchored demand", ">= 1 anchored demand")
        # C2: CPU capacity
        ea_cpu = sum(
            scenario.ea_by_id(i).idle_cpu for i, ee in solution.ea_deployed if ee == e
        )
        cpu_used = policy.cpu_for(s) + ea_cpu + placed_cpu[e]
        if cpu_used > oen.cpu_capacity:
            report.add("C2", (e,), cpu_used, oen.cpu_capacity)
        # C3: storage capacity
        storage_used = sum(
            scenario.ea_by_id(i).storage_req for i, ee in solution.ea_deployed if ee == e
        )
        if storage_used > oen.storage_capacity:
            report.add("C3", (e,), storage_used, oen.storage_capacity)
        # C17: anchored traffic within the cluster's processing bandwidth
        if anchored_bw[e] > policy.bw_for(s):
            report.add("C17", (e,), anchored_bw[e], policy.bw_for(s))

    # C18: link bandwidth
    for lid in sorted(link_load):
        link = scenario.topology.links.get(lid)
        if link is None:
            report.add("S1", (lid,), "unknown link on route", "topology links only")
        elif link_load[lid] > link.bandwidth:
            report.add("C18", (lid,), link_load[lid], link.bandwidth)

    return report


def objective(scenario: Scenario, solution: Solution) -> int:
    """Operator profit: sum of utilities of accepted demands, minus offload
    costs of EEN-served demands, minus switch-on costs of OENs that are on.

    Computable for infeasible solutions as well; anchor choices never
    affect the value.
    """
    total = 0
    for demand in scenario.demands:
        disp = solution.disposition.get(demand.key)
        if disp is None or disp.kind == REJECTED:
            continue
        total += demand.utility
        if disp.kind == OFFLOADED:
            total -= demand.offload_cost
    for oen in scenario.oens:
        if solution.oen_on.get(oen.node, False):
            total -= oen.on_cost
    return total

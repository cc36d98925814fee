"""Exhaustive optimum for micro-instances; the correctness oracle the
branch-and-bound solver is tested against.

The enumeration walks every (disposition, anchor) vector in ascending
encoding order (reject, then offload anchors by id, then placement OENs
by id; demands in key order), prunes prefixes that already violate a
node-level resource constraint (all node constraints grow monotonically
with each added demand, so pruned prefixes have no feasible completion),
and at each surviving leaf searches the candidate path vectors in
ascending id order for one that fits every link.  The best objective wins;
on ties the first leaf found, i.e. the smallest (disposition, anchor)
encoding followed by the smallest feasible path vector, is kept.  Cluster
scales are the smallest covering the anchored bandwidth and OENs are on
exactly where demands anchor, which always contains an optimum because
replica CPU grows strictly with scale and switch-on costs are positive.

Guarded to at most 8 demands and 2 OENs; anything larger is refused.
"""

from __future__ import annotations

from typing import Optional

from ..domain import (
    OFFLOADED,
    PLACED,
    REJECTED,
    Disposition,
    Scenario,
    Solution,
)
from ..pathing import PathSet
from ..verifier import check_solution

MAX_DEMANDS = 8
MAX_OENS = 2


class OracleGuardError(ValueError):
    """Raised when an instance is too large for exhaustive enumeration."""


def enumerate_optimum(scenario: Scenario, pathset: PathSet) -> Solution:
    if len(scenario.demands) > MAX_DEMANDS or len(scenario.oens) > MAX_OENS:
        raise OracleGuardError(
            f"exhaustive oracle refuses |demands|={len(scenario.demands)} > {MAX_DEMANDS} "
            f"or |OENs|={len(scenario.oens)} > {MAX_OENS}"
        )
    policy = scenario.upf_policy
    een = scenario.topology.een_node
    ea_idle = {ea.id: ea.idle_cpu for ea in scenario.ea_catalog}
    ea_storage = {ea.id: ea.storage_req for ea in scenario.ea_catalog}
    demands = sorted(scenario.demands, key=lambda d: d.key)
    oens = sorted(scenario.oens, key=lambda o: o.node)
    oen_ids = [o.node for o in oens]
    capacity = {o.node: o.cpu_capacity for o in oens}
    storage_cap = {o.node: o.storage_capacity for o in oens}
    on_cost = {o.node: o.on_cost for o in oens}

    # Candidate paths per demand, grouped by role
    place_paths: list[dict[int, list[int]]] = []
    offload_paths: list[dict[int, list[int]]] = []
    for d in demands:
        place: dict[int, list[int]] = {}
        off: dict[int, list[int]] = {}
        for (src, dst), group in sorted(pathset.groups.items()):
            if src != d.bs:
                continue
            for p in group:
                if p.total_latency > d.delay_budget:
                    continue
                if dst == een:
                    if p.last_hop_oen is not None:
                        off.setdefault(p.last_hop_oen, []).append(p.id)
                elif dst in capacity:
                    place.setdefault(dst, []).append(p.id)
        place_paths.append({e: sorted(ids) for e, ids in place.items()})
        offload_paths.append({e: sorted(ids) for e, ids in off.items()})

    # Option list per demand in encoding order: reject, offloads, placements
    options: list[list[tuple[int, Optional[int]]]] = []
    for t in range(len(demands)):
        opts: list[tuple[int, Optional[int]]] = [(0, None)]
        opts.extend((1, e) for e in sorted(offload_paths[t]))
        opts.extend((2, e) for e in sorted(place_paths[t]))
        options.append(opts)

    n = len(demands)
    anchored_bw = {e: 0 for e in oen_ids}
    placed_cpu = {e: 0 for e in oen_ids}
    ea_count: dict[tuple[int, int], int] = {}
    assignment: list[tuple[int, Optional[int]]] = [(0, None)] * n
    best: dict = {"value": None, "assignment": None, "routes": None}

    def node_feasible() -> bool:
        for e in oen_ids:
            scale = policy.min_scale_for_bw(anchored_bw[e])
            if scale is None:
                return False
            eas_here = {i for (i, ee), c in ea_count.items() if ee == e and c > 0}
            cpu = policy.cpu_for(scale) + placed_cpu[e] + sum(ea_idle[i] for i in eas_here)
            if cpu > capacity[e]:
                return False
            if sum(ea_storage[i] for i in eas_here) > storage_cap[e]:
                return False
        return True

    def routes_for(assign) -> Optional[list[Optional[int]]]:
        """First feasible path vector in ascending id order, or None."""
        residual = {l.id: l.bandwidth for l in scenario.topology.links.values()}
        routes: list[Optional[int]] = [None] * n

        def pick(t: int) -> bool:
            if t == n:
                return True
            code, e = assign[t]
            if code == 0:
                return pick(t + 1)
            pool = place_paths[t][e] if code == 2 else offload_paths[t][e]
            bw = demands[t].bw_req
            for pid in pool:
                links = pathset.by_id[pid].links
                if all(residual[l] >= bw for l in links):
                    for l in links:
                        residual[l] -= bw
                    routes[t] = pid
                    if pick(t + 1):
                        return True
                    for l in links:
                        residual[l] += bw
                    routes[t] = None
            return False

        return routes if pick(0) else None

    def value_of(assign) -> int:
        total = 0
        used = set()
        for t, (code, e) in enumerate(assign):
            d = demands[t]
            if code == 0:
                continue
            used.add(e)
            total += d.utility - (d.offload_cost if code == 1 else 0)
        return total - sum(on_cost[e] for e in used)

    def walk(t: int) -> None:
        if t == n:
            value = value_of(assignment)
            if best["value"] is not None and value <= best["value"]:
                return
            routes = routes_for(list(assignment))
            if routes is None:
                return
            best["value"] = value
            best["assignment"] = list(assignment)
            best["routes"] = routes
            return
        d = demands[t]
        for code, e in options[t]:
            assignment[t] = (code, e)
            if code == 0:
                walk(t + 1)
                continue
            anchored_bw[e] += d.bw_req
            if code == 2:
                placed_cpu[e] += d.cpu_req
                ea_count[(d.ea, e)] = ea_count.get((d.ea, e), 0) + 1
            if node_feasible():
                walk(t + 1)
            anchored_bw[e] -= d.bw_req
            if code == 2:
                placed_cpu[e] -= d.cpu_req
                ea_count[(d.ea, e)] -= 1
        assignment[t] = (0, None)

    walk(0)

    solution = Solution.empty(scenario)
    if best["value"] is not None and best["assignment"] is not None:
        bw_total = {e: 0 for e in oen_ids}
        for t, (code, e) in enumerate(best["assignment"]):
            d = demands[t]
            if code == 0:
                continue
            bw_total[e] += d.bw_req
            solution.anchor[d.key] = e
            solution.route[d.key] = best["routes"][t]
            if code == 2:
                solution.disposition[d.key] = Disposition(PLACED, oen=e)
                solution.ea_deployed.add((d.ea, e))
            else:
                solution.disposition[d.key] = Disposition(OFFLOADED)
        for e in oen_ids:
            if bw_total[e] > 0:
                solution.oen_on[e] = True
                solution.upf_scale[e] = policy.min_scale_for_bw(bw_total[e])

    report = check_solution(scenario, pathset, solution)
    if not report.feasible:
        raise AssertionError(f"oracle produced an infeasible solution:\n{report}")
    return solution

"""Deterministic branch-and-bound exact solver.

The search runs in two layers.  The outer layer enumerates cluster-scale
profiles: one scale 0..R per OEN, where R is capped by the smallest scale
covering the total demand bandwidth (larger clusters can never be
needed).  A profile fixes which OENs are on, their switch-on costs, their
UPF CPU, and hard per-OEN anchored-bandwidth caps, so the step function
that makes cluster CPU awkward to bound disappears from the inner
problem.  The maximum over profiles is the true optimum: the optimal
solution appears under its own minimal-scale profile, and every inner
solution of any profile is feasible, hence never better.

The inner layer decides demands one at a time in descending
utility-per-CPU order (exact rationals, ties by utility then key), each
with children Place(OEN, path), Offload(anchor OEN, path), Reject,
generated in that order with ids ascending.  Its bound is the node value,
plus every undecided demand's offload margin when the profile leaves it
an anchor (floored at zero), plus a greedy LP fill of the
place-over-offload increments into the remaining CPU.  The fill respects
a laminar capacity family, so greedy is the LP optimum: a per-OEN bin
for each demand the profile leaves exactly one usable OEN (latency makes
that common), and the global pool.  Placement weights carry an amortized
share of the EA type's idle CPU; once a type is deployed somewhere its
full idle CPU is credited back to the pool, so the shares only ever
over-charge.  Every ingredient only overestimates what a completion can
gain, which is checked by a bound-admissibility test against exhaustive
completions.

Two exact reductions keep the tree small: a demand whose offload margin
is negative is never offloaded (rejecting dominates), and when total
demand bandwidth fits the thinnest link, path choice within a destination
cannot affect feasibility, so only the first (fewest-hop) candidate is
branched on and link capacities are not tracked.  An optional symmetry
rule (on by default) forbids a demand from receiving a better disposition
than an identical demand from the same BS decided just before it.

Determinism: profiles are searched in descending root-bound order (ties
by profile tuple), all child orders are fixed, and the incumbent only
ever improves strictly, so repeated runs return byte-identical solutions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
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
from .model import candidate_paths


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    BOUNDED = "bounded"
    MODEL_ERROR = "model-error"


@dataclass(frozen=True)
class SolveLimits:
    time_s: float = 300.0
    max_nodes: Optional[int] = None


@dataclass
class SolveResult:
    status: SolveStatus
    solution: Optional[Solution]
    objective: Optional[int]
    best_bound: Optional[int]
    nodes: int
    runtime_s: float
    message: str = ""

    @property
    def gap(self) -> Optional[int]:
        if self.objective is None or self.best_bound is None:
            return None
        return self.best_bound - self.objective


_PLACE, _OFFLOAD, _REJECT = 2, 1, 0
_DISP_RANK = {_PLACE: 2, _OFFLOAD: 1, _REJECT: 0}


class _Search:
    def __init__(self, scenario: Scenario, pathset: PathSet, limits: SolveLimits, symmetry: bool):
        self.scenario = scenario
        self.pathset = pathset
        self.limits = limits
        self.symmetry = symmetry
        self.policy = scenario.upf_policy
        self.ea_idle = {ea.id: ea.idle_cpu for ea in scenario.ea_catalog}
        self.ea_storage = {ea.id: ea.storage_req for ea in scenario.ea_catalog}
        self.een = scenario.topology.een_node
        self.demands = sorted(
            scenario.demands,
            key=lambda d: (-Fraction(d.utility, d.cpu_req), -d.utility, d.key),
        )
        self.n = len(self.demands)
        self.oens = {o.node: o for o in scenario.oens}
        self.oen_ids = sorted(self.oens)

        total_bw = sum(d.bw_req for d in self.demands)
        min_link_bw = min(
            (l.bandwidth for l in scenario.topology.links.values()), default=0
        )
        self.link_relaxed = bool(scenario.topology.links) and total_bw <= min_link_bw

        # Static candidate actions per demand position
        self.place_opts: list[dict[int, tuple[int, ...]]] = []
        self.offload_opts: list[dict[int, tuple[int, ...]]] = []
        for d in self.demands:
            paths = candidate_paths(pathset, d)
            place: dict[int, list[int]] = {}
            off: dict[int, list[int]] = {}
            for p in paths:
                if p.destination == self.een:
                    if p.last_hop_oen is not None:
                        off.setdefault(p.last_hop_oen, []).append(p.id)
                elif p.destination in self.oens:
                    place.setdefault(p.destination, []).append(p.id)
            trim = (lambda ids: (ids[0],)) if self.link_relaxed else tuple
            self.place_opts.append({e: trim(sorted(ids)) for e, ids in place.items()})
            # Rejecting dominates offloading at a negative margin.
            if d.utility - d.offload_cost < 0:
                self.offload_opts.append({})
            else:
                self.offload_opts.append({e: trim(sorted(ids)) for e, ids in off.items()})

        # Amortized EA idle shares for the bound
        type_count: dict[int, int] = {}
        for d in self.demands:
            type_count[d.ea] = type_count.get(d.ea, 0) + 1
        self.ea_share = {i: self.ea_idle[i] / type_count[i] for i in type_count}

        # Symmetry adjacency in branch order
        attrs = lambda d: (d.bs, d.ea, d.cpu_req, d.bw_req, d.delay_budget, d.utility, d.offload_cost)
        self.same_as_prev = [False] * self.n
        for t in range(1, self.n):
            self.same_as_prev[t] = attrs(self.demands[t]) == attrs(self.demands[t - 1])

        # Scale profiles never need to cover more than the total bandwidth.
        covering = self.policy.min_scale_for_bw(total_bw)
        self.max_scale = covering if covering is not None else self.policy.max_replicas

        # Global incumbent
        self.best_value = 0
        self.best_outcome: Optional[tuple] = None  # (profile, choices) or ("solution", Solution)
        self.nodes = 0
        self.aborted = False
        self.open_bound = 0
        self.t_start = time.perf_counter()
        self.deadline = self.t_start + limits.time_s

    # -- incumbent seeding ---------------------------------------------------

    def seed(self, solution: Solution, value: int) -> None:
        """Install a known-feasible solution as the starting incumbent."""
        if value > self.best_value:
            self.best_value = value
            self.best_outcome = ("solution", solution)

    # -- profile enumeration ---------------------------------------------

    def _static_bound(self) -> int:
        """Profile-independent optimistic value, used as the open bound for
        profiles never examined before an abort."""
        alt_total = sum(
            max(0, d.utility - d.offload_cost) if self.offload_opts[t] else 0
            for t, d in enumerate(self.demands)
        )
        cap = float(sum(o.cpu_capacity for o in self.oens.values()))
        gains = sorted(
            (
                (Fraction(d.utility, d.cpu_req), d.cpu_req, d.utility)
                for t, d in enumerate(self.demands)
                if self.place_opts[t]
            ),
            key=lambda g: -g[0],
        )
        fill = 0.0
        for _ratio, cpu, utility in gains:
            if cap <= 0:
                break
            take = min(cpu, cap)
            fill += utility * (take / cpu)
            cap -= take
        return alt_total + math.floor(fill + 1e-9)

    def run(self) -> None:
        if self.n == 0:
            return
        every = product(range(self.max_scale + 1), repeat=len(self.oen_ids))
        total = (self.max_scale + 1) ** len(self.oen_ids)
        lazy = total > 20000
        if lazy:
            ordered = every  # too many to pre-rank; enumeration order
        else:
            ranked = []
            for profile in every:
                inner = _ProfileSearch(self, dict(zip(self.oen_ids, profile)))
                if inner.feasible:
                    ranked.append((inner.root_bound(), profile, inner))
            ranked.sort(key=lambda item: (-item[0], item[1]))
            ordered = ranked
        for item in ordered:
            if self.aborted or time.perf_counter() > self.deadline:
                self.aborted = True
                self.open_bound = max(self.open_bound, self._static_bound())
                break
            if lazy:
                inner = _ProfileSearch(self, dict(zip(self.oen_ids, item)))
                if not inner.feasible:
                    continue
                bound = inner.root_bound()
            else:
                bound, _profile, inner = item
            if bound <= self.best_value:
                continue  # cannot beat the incumbent
            inner.run()

    def check_limits(self) -> bool:
        if self.nodes % 1024 == 0 and time.perf_counter() > self.deadline:
            self.aborted = True
        if self.limits.max_nodes is not None and self.nodes > self.limits.max_nodes:
            self.aborted = True
        return self.aborted

    # -- reconstruction ----------------------------------------------------

    def build_solution(self) -> Solution:
        if self.best_outcome is None:
            return Solution.empty(self.scenario)
        if self.best_outcome[0] == "solution":
            return self.best_outcome[1]
        profile, choices = self.best_outcome
        solution = Solution.empty(self.scenario)
        anchored_bw = {e: 0 for e in self.oen_ids}
        placed_types: dict[int, set[int]] = {e: set() for e in self.oen_ids}
        for t, choice in enumerate(choices):
            kind, e, pid = choice
            d = self.demands[t]
            if kind == _REJECT:
                continue
            anchored_bw[e] += d.bw_req
            solution.anchor[d.key] = e
            solution.route[d.key] = pid
            if kind == _PLACE:
                solution.disposition[d.key] = Disposition(PLACED, oen=e)
                placed_types[e].add(d.ea)
            else:
                solution.disposition[d.key] = Disposition(OFFLOADED)
        for e in self.oen_ids:
            if anchored_bw[e] > 0:
                solution.oen_on[e] = True
                solution.upf_scale[e] = self.policy.min_scale_for_bw(anchored_bw[e])
                for i in placed_types[e]:
                    solution.ea_deployed.add((i, e))
        return solution


class _ProfileSearch:
    """Inner branch-and-bound for one fixed cluster-scale profile."""

    def __init__(self, outer: _Search, scale: dict[int, int]):
        self.o = outer
        self.scale = scale
        policy = outer.policy
        self.on = [e for e in outer.oen_ids if scale[e] > 0]
        self.base_value = -sum(outer.oens[e].on_cost for e in self.on)
        self.cpu_cap = {
            e: outer.oens[e].cpu_capacity - policy.cpu_for(scale[e]) for e in self.on
        }
        self.bw_cap = {e: policy.bw_for(scale[e]) for e in self.on}
        self.feasible = all(self.cpu_cap[e] >= 0 for e in self.on)
        if not self.feasible:
            return
        self.storage_cap = {e: outer.oens[e].storage_capacity for e in self.on}

        on_set = set(self.on)
        self.place_opts = [
            {e: pids for e, pids in outer.place_opts[t].items() if e in on_set}
            for t in range(outer.n)
        ]
        self.offload_opts = [
            {e: pids for e, pids in outer.offload_opts[t].items() if e in on_set}
            for t in range(outer.n)
        ]
        # Offload margins are resource-free in the CPU bound; suffix sums
        # cover all undecided demands.
        self.alt = [
            max(0, d.utility - d.offload_cost) if self.offload_opts[t] else 0
            for t, d in enumerate(outer.demands)
        ]
        self.alt_suffix = [0] * (outer.n + 1)
        for t in range(outer.n - 1, -1, -1):
            self.alt_suffix[t] = self.alt_suffix[t + 1] + self.alt[t]
        # Knapsack segments: the increment of placing over the alternative.
        segments = []
        for t, d in enumerate(outer.demands):
            if not self.place_opts[t]:
                continue
            gain = d.utility - self.alt[t]
            if gain <= 0:
                continue
            if len(self.place_opts[t]) == 1:
                cls = next(iter(self.place_opts[t]))
                weight = float(d.cpu_req)
            else:
                cls = -1
                weight = d.cpu_req + outer.ea_share[d.ea]
            segments.append((gain / weight, t, weight, gain, cls))
        segments.sort(key=lambda s: (-s[0], s[1]))
        self.segments = segments

        # Mutable per-OEN state
        self.cpu_used = {e: 0 for e in self.on}
        self.storage_used = {e: 0 for e in self.on}
        self.anchored_bw = {e: 0 for e in self.on}
        self.ea_count: dict[tuple[int, int], int] = {}
        self.type_deployed: dict[int, int] = {}
        self.link_residual = (
            None
            if outer.link_relaxed
            else {l.id: l.bandwidth for l in outer.scenario.topology.links.values()}
        )
        self.choices: list = [None] * outer.n

    # -- bounding ----------------------------------------------------------

    def _bound(self, t: int, value: int) -> int:
        bins = {e: float(self.cpu_cap[e] - self.cpu_used[e]) for e in self.on}
        rem_all = sum(bins.values())
        for i, count in self.type_deployed.items():
            if count > 0:
                rem_all += self.o.ea_idle[i]
        gain = 0.0
        for slope, pos, weight, g, cls in self.segments:
            if rem_all <= 0:
                break
            if pos < t:
                continue
            if cls >= 0:
                take = min(weight, rem_all, bins[cls])
                if take <= 0:
                    continue
                bins[cls] -= take
            else:
                take = min(weight, rem_all)
            gain += g * (take / weight)
            rem_all -= take
        return value + self.alt_suffix[t] + math.floor(gain + 1e-9)

    def root_bound(self) -> int:
        return self._bound(0, self.base_value)

    # -- moves ------------------------------------------------------------

    def _try_place(self, t: int, e: int, pid: int) -> Optional[tuple]:
        d = self.o.demands[t]
        if self.anchored_bw[e] + d.bw_req > self.bw_cap[e]:
            return None
        ea_new = self.ea_count.get((d.ea, e), 0) == 0
        need_cpu = d.cpu_req + (self.o.ea_idle[d.ea] if ea_new else 0)
        if self.cpu_used[e] + need_cpu > self.cpu_cap[e]:
            return None
        need_storage = self.o.ea_storage[d.ea] if ea_new else 0
        if self.storage_used[e] + need_storage > self.storage_cap[e]:
            return None
        if self.link_residual is not None:
            for lid in self.o.pathset.by_id[pid].links:
                if self.link_residual[lid] < d.bw_req:
                    return None
            for lid in self.o.pathset.by_id[pid].links:
                self.link_residual[lid] -= d.bw_req
        self.anchored_bw[e] += d.bw_req
        self.cpu_used[e] += need_cpu
        self.storage_used[e] += need_storage
        self.ea_count[(d.ea, e)] = self.ea_count.get((d.ea, e), 0) + 1
        if self.ea_count[(d.ea, e)] == 1:
            self.type_deployed[d.ea] = self.type_deployed.get(d.ea, 0) + 1
        return (need_cpu, need_storage)

    def _undo_place(self, t: int, e: int, pid: int, undo: tuple) -> None:
        d = self.o.demands[t]
        need_cpu, need_storage = undo
        self.anchored_bw[e] -= d.bw_req
        self.cpu_used[e] -= need_cpu
        self.storage_used[e] -= need_storage
        self.ea_count[(d.ea, e)] -= 1
        if self.ea_count[(d.ea, e)] == 0:
            self.type_deployed[d.ea] -= 1
        if self.link_residual is not None:
            for lid in self.o.pathset.by_id[pid].links:
                self.link_residual[lid] += d.bw_req

    def _try_offload(self, t: int, e: int, pid: int) -> bool:
        d = self.o.demands[t]
        if self.anchored_bw[e] + d.bw_req > self.bw_cap[e]:
            return False
        if self.link_residual is not None:
            for lid in self.o.pathset.by_id[pid].links:
                if self.link_residual[lid] < d.bw_req:
                    return False
            for lid in self.o.pathset.by_id[pid].links:
                self.link_residual[lid] -= d.bw_req
        self.anchored_bw[e] += d.bw_req
        return True

    def _undo_offload(self, t: int, e: int, pid: int) -> None:
        d = self.o.demands[t]
        self.anchored_bw[e] -= d.bw_req
        if self.link_residual is not None:
            for lid in self.o.pathset.by_id[pid].links:
                self.link_residual[lid] += d.bw_req

    # -- search ------------------------------------------------------------

    def run(self) -> None:
        self._dfs(0, self.base_value)

    def _finish_leaf(self, value: int) -> None:
        # A leaf must anchor at least one demand on every ON OEN of the
        # profile, otherwise its true objective is higher than accounted
        # and some other profile covers it; skip such leaves.
        for e in self.on:
            if self.anchored_bw[e] == 0:
                return
        if value > self.o.best_value:
            self.o.best_value = value
            self.o.best_outcome = (self.scale, tuple(self.choices))

    def _dfs(self, t: int, value: int) -> None:
        o = self.o
        o.nodes += 1
        if o.check_limits():
            self.o.open_bound = max(self.o.open_bound, self._bound(t, value))
            return
        if t == o.n:
            self._finish_leaf(value)
            return
        bound = self._bound(t, value)
        if bound <= o.best_value:
            return
        d = o.demands[t]
        max_rank = 2
        if o.symmetry and o.same_as_prev[t]:
            max_rank = _DISP_RANK[self.choices[t - 1][0]]
        if max_rank >= 2:
            for e in sorted(self.place_opts[t]):
                for pid in self.place_opts[t][e]:
                    undo = self._try_place(t, e, pid)
                    if undo is None:
                        continue
                    self.choices[t] = (_PLACE, e, pid)
                    self._dfs(t + 1, value + d.utility)
                    self._undo_place(t, e, pid, undo)
                    if o.aborted:
                        self.o.open_bound = max(self.o.open_bound, bound)
                        return
        if max_rank >= 1:
            for e in sorted(self.offload_opts[t]):
                for pid in self.offload_opts[t][e]:
                    if not self._try_offload(t, e, pid):
                        continue
                    self.choices[t] = (_OFFLOAD, e, pid)
                    self._dfs(t + 1, value + d.utility - d.offload_cost)
                    self._undo_offload(t, e, pid)
                    if o.aborted:
                        self.o.open_bound = max(self.o.open_bound, bound)
                        return
        self.choices[t] = (_REJECT, None, None)
        self._dfs(t + 1, value)
        if o.aborted:
            self.o.open_bound = max(self.o.open_bound, bound)


def solve_exact(
    scenario: Scenario,
    pathset: PathSet,
    limits: Optional[SolveLimits] = None,
    strict: bool = False,
    symmetry: bool = True,
    warm_start: bool = True,
) -> SolveResult:
    """Solve a scenario to proven optimality within the given limits.

    Returns OPTIMAL with a verifier-clean solution when the search
    completes, or BOUNDED with the incumbent and a valid remaining bound
    when a limit is hit.  ``warm_start`` seeds the incumbent with the
    (deterministic) RanGr solution; it never changes the optimum, only the
    amount of search needed to prove it.
    """
    limits = limits or SolveLimits()
    if strict:
        missing = [d.key for d in scenario.demands if not candidate_paths(pathset, d)]
        if missing:
            return SolveResult(
                status=SolveStatus.MODEL_ERROR,
                solution=None,
                objective=None,
                best_bound=None,
                nodes=0,
                runtime_s=0.0,
                message=f"{len(missing)} demand(s) without candidate paths: {missing[:5]}",
            )
    search = _Search(scenario, pathset, limits, symmetry)
    if warm_start and scenario.demands:
        from ..rangr import run_rangr  # deferred: keeps module import light
        from ..verifier import check_solution, objective

        candidate = run_rangr(scenario, pathset)
        if check_solution(scenario, pathset, candidate).feasible:
            search.seed(candidate, objective(scenario, candidate))
    search.run()
    runtime = time.perf_counter() - search.t_start
    solution = search.build_solution()
    if search.aborted:
        return SolveResult(
            status=SolveStatus.BOUNDED,
            solution=solution,
            objective=search.best_value,
            best_bound=max(search.best_value, search.open_bound),
            nodes=search.nodes,
            runtime_s=runtime,
            message="limit reached",
        )
    return SolveResult(
        status=SolveStatus.OPTIMAL,
        solution=solution,
        objective=search.best_value,
        best_bound=search.best_value,
        nodes=search.nodes,
        runtime_s=runtime,
    )

"""Binary-program construction for the placement problem.

Every decision variable is binary and every relation linear.  Three
formulation choices mirror the verifier exactly (the two are kept
equivalent by a randomized coherence test):

* routing is constrained in prose form: one chosen path iff the demand is
  not rejected, with per-destination consistency rows tying the chosen
  path's endpoint to the placement OEN or to the EEN;
* per-link usage is the chosen path's fixed link incidence, so no separate
  link-usage variables exist;
* anchoring consistency equates the anchor indicator with placement on the
  same OEN or, for EEN-bound routes, with the path whose final hop leaves
  that OEN.

Path variables exist only for (demand, path) pairs whose source matches
and whose latency fits the delay budget; the latency constraint is
thereby structural.  A demand left with no candidate paths is forced
rejected unless strict mode asks for an error instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..domain import (
    OFFLOADED,
    PLACED,
    REJECTED,
    Demand,
    DemandKey,
    Scenario,
    Solution,
)
from ..pathing import Path, PathSet

LE = "<="
EQ = "="
GE = ">="


class ModelBuildError(ValueError):
    """Raised in strict mode when a demand has no candidate path at all."""


@dataclass(frozen=True)
class Variable:
    index: int
    name: str
    kind: str  # z | w | x | d | T | F | wa | th
    subscripts: tuple


@dataclass(frozen=True)
class Row:
    name: str
    tag: str  # constraint family, e.g. "C2"
    coeffs: dict[int, int]
    sense: str
    rhs: int

    def satisfied(self, x: Sequence[int]) -> bool:
        lhs = sum(c * x[i] for i, c in self.coeffs.items())
        if self.sense == LE:
            return lhs <= self.rhs
        if self.sense == GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass
class IlpModel:
    variables: list[Variable]
    rows: list[Row]
    objective: dict[int, int]  # maximize coeffs . x + constant
    objective_constant: int
    var_index: dict[tuple, int]
    candidates: dict[DemandKey, tuple[int, ...]]  # candidate path ids per demand
    scenario: Scenario = field(repr=False)
    pathset: PathSet = field(repr=False)

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def index_of(self, kind: str, *subscripts) -> int:
        return self.var_index[(kind, subscripts)]


def _demand_name(key: DemandKey) -> str:
    return f"j{key[0]}_i{key[1]}_l{key[2]}"


def candidate_paths(pathset: PathSet, demand: Demand) -> list[Path]:
    """Paths usable by the demand: matching source BS and latency within
    the delay budget (any destination)."""
    out = []
    for (src, _dst), group in sorted(pathset.groups.items()):
        if src != demand.bs:
            continue
        for p in group:
            if p.total_latency <= demand.delay_budget:
                out.append(p)
    out.sort(key=lambda p: p.id)
    return out


def build_model(
    scenario: Scenario, pathset: PathSet, strict: bool = False, symmetry: bool = False
) -> IlpModel:
    """Construct the binary program for a scenario over an enumerated path
    set.

    ``symmetry`` adds optional ordering rows over consecutive identical
    demands from the same BS (interchangeable assignments); off by default
    for exports.
    """
    policy = scenario.upf_policy
    oens = sorted(scenario.oens, key=lambda o: o.node)
    eas = sorted(scenario.ea_catalog, key=lambda ea: ea.id)
    demands = sorted(scenario.demands, key=lambda d: d.key)
    een = scenario.topology.een_node
    replicas = range(1, policy.max_replicas + 1)

    variables: list[Variable] = []
    var_index: dict[tuple, int] = {}

    def add_var(name: str, kind: str, *subscripts) -> int:
        idx = len(variables)
        variables.append(Variable(idx, name, kind, tuple(subscripts)))
        var_index[(kind, tuple(subscripts))] = idx
        return idx

    for o in oens:
        add_var(f"z_e{o.node}", "z", o.node)
    for o in oens:
        for r in replicas:
            add_var(f"w_r{r}_e{o.node}", "w", r, o.node)
    for ea in eas:
        for o in oens:
            add_var(f"x_i{ea.id}_e{o.node}", "x", ea.id, o.node)

    cands: dict[DemandKey, tuple[int, ...]] = {}
    no_candidates = []
    for d in demands:
        dn = _demand_name(d.key)
        for o in oens:
            add_var(f"d_{dn}_e{o.node}", "d", d.key, o.node)
        add_var(f"T_{dn}", "T", d.key)
        add_var(f"F_{dn}", "F", d.key)
        for o in oens:
            add_var(f"wa_{dn}_e{o.node}", "wa", d.key, o.node)
        paths = candidate_paths(pathset, d)
        cands[d.key] = tuple(p.id for p in paths)
        if not paths:
            no_candidates.append(d.key)
        for p in paths:
            add_var(f"th_{dn}_n{p.id}", "th", d.key, p.id)
    if strict and no_candidates:
        raise ModelBuildError(
            f"{len(no_candidates)} demand(s) have no candidate path: "
            f"{no_candidates[:5]}"
        )

    rows: list[Row] = []

    def add_row(name: str, tag: str, coeffs: dict[int, int], sense: str, rhs: int) -> None:
        if not coeffs:
            return  # vacuous (only arises for links no candidate path uses)
        rows.append(Row(name, tag, coeffs, sense, rhs))

    z = lambda e: var_index[("z", (e,))]
    w = lambda r, e: var_index[("w", (r, e))]
    x = lambda i, e: var_index[("x", (i, e))]
    dv = lambda k, e: var_index[("d", (k, e))]
    T = lambda k: var_index[("T", (k,))]
    F = lambda k: var_index[("F", (k,))]
    wa = lambda k, e: var_index[("wa", (k, e))]
    th = lambda k, n: var_index[("th", (k, n))]

    # C2: OEN CPU capacity (UPF cluster + EA idle + placed demands)
    for o in oens:
        coeffs = {w(r, o.node): policy.cpu_per_replicas[r] for r in replicas}
        for ea in eas:
            coeffs[x(ea.id, o.node)] = ea.idle_cpu
        for d in demands:
            coeffs[dv(d.key, o.node)] = d.cpu_req
        add_row(f"c2_e{o.node}", "C2", coeffs, LE, o.cpu_capacity)
    # C3: OEN storage capacity
    for o in oens:
        coeffs = {x(ea.id, o.node): ea.storage_req for ea in eas}
        add_row(f"c3_e{o.node}", "C3", coeffs, LE, o.storage_capacity)
    # C4: EAs only on OENs that are on
    for ea in eas:
        for o in oens:
            add_row(
                f"c4_i{ea.id}_e{o.node}",
                "C4",
                {x(ea.id, o.node): 1, z(o.node): -1},
                LE,
                0,
            )
    # C5: clusters only on OENs that are on; C6: at most one cluster
    for o in oens:
        coeffs = {w(r, o.node): 1 for r in replicas}
        add_row(f"c5_e{o.node}", "C5", {**coeffs, z(o.node): -1}, LE, 0)
        add_row(f"c6_e{o.node}", "C6", dict(coeffs), LE, 1)
    # C7: placement requires a same-type EA
    for d in demands:
        dn = _demand_name(d.key)
        for o in oens:
            add_row(
                f"c7_{dn}_e{o.node}",
                "C7",
                {dv(d.key, o.node): 1, x(d.ea, o.node): -1},
                LE,
                0,
            )
    # C8: an EA is deployed only where same-type demands are placed
    for ea in eas:
        for o in oens:
            coeffs = {x(ea.id, o.node): 1}
            for d in demands:
                if d.ea == ea.id:
                    coeffs[dv(d.key, o.node)] = -1
            add_row(f"c8_i{ea.id}_e{o.node}", "C8", coeffs, LE, 0)
    # C9: rejected, offloaded, or placed on exactly one OEN
    for d in demands:
        coeffs = {F(d.key): 1, T(d.key): 1}
        for o in oens:
            coeffs[dv(d.key, o.node)] = 1
        add_row(f"c9_{_demand_name(d.key)}", "C9", coeffs, EQ, 1)
    # C10: accepted demands anchored on exactly one OEN
    for d in demands:
        coeffs = {F(d.key): 1}
        for o in oens:
            coeffs[wa(d.key, o.node)] = 1
        add_row(f"c10_{_demand_name(d.key)}", "C10", coeffs, EQ, 1)
    # C11: anchored where placed, or where the EEN-bound route's last hop
    # leaves the OEN
    for d in demands:
        dn = _demand_name(d.key)
        for o in oens:
            coeffs = {wa(d.key, o.node): 1, dv(d.key, o.node): -1}
            for pid in cands[d.key]:
                p = pathset.by_id[pid]
                if p.destination == een and p.last_hop_oen == o.node:
                    coeffs[th(d.key, pid)] = -1
            add_row(f"c11_{dn}_e{o.node}", "C11", coeffs, EQ, 0)
    # C12: anchoring requires a cluster
    for d in demands:
        dn = _demand_name(d.key)
        for o in oens:
            coeffs = {wa(d.key, o.node): 1}
            for r in replicas:
                coeffs[w(r, o.node)] = -1
            add_row(f"c12_{dn}_e{o.node}", "C12", coeffs, LE, 0)
    # C13: clusters only where demands anchor
    for o in oens:
        coeffs = {w(r, o.node): 1 for r in replicas}
        for d in demands:
            coeffs[wa(d.key, o.node)] = -1
        add_row(f"c13_e{o.node}", "C13", coeffs, LE, 0)
    # C14: accepted demands routed through exactly one path (prose form),
    # with destination consistency per OEN and for the EEN
    for d in demands:
        dn = _demand_name(d.key)
        coeffs = {F(d.key): 1}
        for pid in cands[d.key]:
            coeffs[th(d.key, pid)] = 1
        add_row(f"c14_{dn}", "C14", coeffs, EQ, 1)
        for o in oens:
            coeffs = {dv(d.key, o.node): -1}
            for pid in cands[d.key]:
                if pathset.by_id[pid].destination == o.node:
                    coeffs[th(d.key, pid)] = 1
            add_row(f"c14a_{dn}_e{o.node}", "C14", coeffs, EQ, 0)
        coeffs = {T(d.key): -1}
        for pid in cands[d.key]:
            if pathset.by_id[pid].destination == een:
                coeffs[th(d.key, pid)] = 1
        add_row(f"c14b_{dn}", "C14", coeffs, EQ, 0)
    # C15 is substituted structurally (link usage = path incidence); C16 is
    # enforced by the candidate-path prefilter.
    # C17: anchored traffic within the cluster's processing bandwidth
    for o in oens:
        coeffs = {}
        for d in demands:
            coeffs[wa(d.key, o.node)] = d.bw_req
        for r in replicas:
            coeffs[w(r, o.node)] = -policy.bw_per_replicas[r]
        add_row(f"c17_e{o.node}", "C17", coeffs, LE, 0)
    # C18: per-link bandwidth over chosen paths
    for lid, link in sorted(scenario.topology.links.items()):
        coeffs = {}
        for d in demands:
            for pid in cands[d.key]:
                if lid in pathset.by_id[pid].link_set:
                    coeffs[th(d.key, pid)] = d.bw_req
        add_row(f"c18_v{lid}", "C18", coeffs, LE, link.bandwidth)
    # Optional symmetry breaking: consecutive identical demands from the
    # same BS may be assumed disposition-ordered (place > offload > reject).
    if symmetry:
        sym_attrs = lambda d: (d.bs, d.ea, d.cpu_req, d.bw_req, d.delay_budget, d.utility, d.offload_cost)
        for k in range(1, len(demands)):
            a, b = demands[k - 1], demands[k]
            if sym_attrs(a) != sym_attrs(b):
                continue
            coeffs = {T(a.key): 1, T(b.key): -1}
            for o in oens:
                coeffs[dv(a.key, o.node)] = 2
                coeffs[dv(b.key, o.node)] = -2
            add_row(f"sym_{_demand_name(b.key)}", "SYM", coeffs, GE, 0)

    # Objective: sum of U(1-F) - C T - C_e z, written as a linear part plus
    # the constant sum(U).
    objective: dict[int, int] = {}
    constant = 0
    for d in demands:
        constant += d.utility
        objective[F(d.key)] = -d.utility
        objective[T(d.key)] = -d.offload_cost
    for o in oens:
        objective[z(o.node)] = -o.on_cost

    return IlpModel(
        variables=variables,
        rows=rows,
        objective=objective,
        objective_constant=constant,
        var_index=var_index,
        candidates=cands,
        scenario=scenario,
        pathset=pathset,
    )


def evaluate_assignment(model: IlpModel, x: Sequence[int]) -> tuple[bool, int]:
    """(all rows satisfied, objective value) for a full 0/1 assignment."""
    ok = all(row.satisfied(x) for row in model.rows)
    value = model.objective_constant + sum(
        c * x[i] for i, c in model.objective.items()
    )
    return ok, value


def assignment_from_solution(model: IlpModel, solution: Solution) -> Optional[list[int]]:
    """Encode a structured solution as a 0/1 vector over the model's
    variables, or None when it is not representable (unknown entities, a
    route outside the candidate set, or a cluster scale out of range).
    Unrepresentable solutions are infeasible in the full formulation; the
    verifier flags them through its structural checks.
    """
    x = [0] * model.num_variables
    scenario = model.scenario
    policy = scenario.upf_policy
    oen_set = {o.node for o in scenario.oens}
    ea_ids = {ea.id for ea in scenario.ea_catalog}
    vi = model.var_index

    for e, flag in solution.oen_on.items():
        if e not in oen_set:
            return None
        if flag:
            x[vi[("z", (e,))]] = 1
    for e, scale in solution.upf_scale.items():
        if e not in oen_set or not 0 <= scale <= policy.max_replicas:
            return None
        if scale >= 1:
            x[vi[("w", (scale, e))]] = 1
    for i, e in solution.ea_deployed:
        if i not in ea_ids or e not in oen_set:
            return None
        x[vi[("x", (i, e))]] = 1
    for d in scenario.demands:
        key = d.key
        disp = solution.disposition.get(key)
        if disp is None:
            return None
        if disp.kind == REJECTED:
            x[vi[("F", (key,))]] = 1
        elif disp.kind == OFFLOADED:
            x[vi[("T", (key,))]] = 1
        elif disp.kind == PLACED:
            if disp.oen not in oen_set:
                return None
            x[vi[("d", (key, disp.oen))]] = 1
        else:
            return None
        anchor = solution.anchor.get(key)
        if anchor is not None:
            if anchor not in oen_set:
                return None
            x[vi[("wa", (key, anchor))]] = 1
        route = solution.route.get(key)
        if route is not None:
            if route not in model.candidates[key]:
                return None
            x[vi[("th", (key, route))]] = 1
    return x

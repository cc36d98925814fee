"""Candidate-path enumeration for the link-path routing formulation.

All simple paths from every BS to every OEN and to the EEN, up to a hop
cutoff, are enumerated once and shared by the ILP builder, the verifier,
and every placement algorithm.  Only switches may appear as intermediate
nodes; an OEN may appear mid-path solely as the penultimate node of an
EEN-bound path (the anchoring hop), and that OEN is recorded as the
path's ``last_hop_oen``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .domain import BS, EEN, OEN, SWITCH, Topology


class PathEnumerationLimit(RuntimeError):
    """Raised when enumeration exceeds the configured path budget."""


@dataclass(frozen=True)
class Path:
    id: int
    source: int
    destination: int
    links: tuple[int, ...]
    nodes: tuple[int, ...]
    hop_count: int
    total_latency: int  # tenths of ms
    last_hop_oen: Optional[int]  # set iff destination is the EEN via an OEN

    @property
    def latency_ms(self) -> float:
        return self.total_latency / 10

    @property
    def link_set(self) -> frozenset[int]:
        return frozenset(self.links)


@dataclass(frozen=True)
class PathSet:
    """Paths grouped by (source, destination), sorted by hop count within
    each group (ties by link-id sequence), with globally unique ids."""

    groups: dict[tuple[int, int], tuple[Path, ...]]
    by_id: dict[int, Path]
    cutoff: int

    def group(self, source: int, destination: int) -> tuple[Path, ...]:
        return self.groups.get((source, destination), ())

    def __len__(self) -> int:
        return len(self.by_id)


def enumerate_paths(
    topology: Topology, cutoff: int, max_paths: int = 1_000_000
) -> PathSet:
    """Enumerate every simple BS-to-OEN and BS-to-EEN path within ``cutoff``
    hops.

    Deterministic: outgoing links are expanded in link-id order and each
    group is sorted by (hop count, link-id sequence).  ``max_paths`` caps
    memory; exceeding it raises PathEnumerationLimit with advice to lower
    the cutoff.
    """
    bs_nodes = topology.nodes_of_kind(BS)
    oen_nodes = topology.nodes_of_kind(OEN)
    een_nodes = topology.nodes_of_kind(EEN)
    targets = sorted(oen_nodes + een_nodes)
    een = een_nodes[0] if len(een_nodes) == 1 else None

    adjacency: dict[int, list[tuple[int, int]]] = {n: [] for n in topology.nodes}
    for link in sorted(topology.links.values(), key=lambda l: l.id):
        adjacency[link.src].append((link.id, link.dst))
    latency = {l.id: l.latency for l in topology.links.values()}
    kind = topology.nodes

    raw: dict[tuple[int, int], list[tuple[int, ...]]] = {}
    total = 0

    def extend(
        source: int, node: int, target: int, links: list[int], visited: set[int]
    ) -> None:
        nonlocal total
        if len(links) >= cutoff:
            return
        # From an intermediate OEN only the final anchoring hop to the EEN
        # is allowed.
        if kind[node] == OEN and node != target:
            hops = [(lid, nxt) for lid, nxt in adjacency[node] if nxt == target]
        else:
            hops = adjacency[node]
        for lid, nxt in hops:
            if nxt in visited:
                continue
            if nxt == target:
                raw.setdefault((source, target), []).append(tuple(links + [lid]))
                total += 1
                if total > max_paths:
                    raise PathEnumerationLimit(
                        f"more than {max_paths} paths: lower the cutoff "
                        f"(currently {cutoff}) or raise max_paths"
                    )
                continue
            nxt_kind = kind[nxt]
            if nxt_kind == SWITCH or (nxt_kind == OEN and target == een):
                visited.add(nxt)
                links.append(lid)
                extend(source, nxt, target, links, visited)
                links.pop()
                visited.remove(nxt)

    for source in bs_nodes:
        for target in targets:
            extend(source, source, target, [], {source})

    groups: dict[tuple[int, int], tuple[Path, ...]] = {}
    by_id: dict[int, Path] = {}
    next_id = 0
    for key in sorted(raw):
        source, destination = key
        paths = []
        for link_seq in sorted(raw[key], key=lambda seq: (len(seq), seq)):
            nodes = [source]
            for lid in link_seq:
                nodes.append(topology.links[lid].dst)
            last_hop = None
            if destination == een and len(nodes) >= 2 and kind[nodes[-2]] == OEN:
                last_hop = nodes[-2]
            path = Path(
                id=next_id,
                source=source,
                destination=destination,
                links=link_seq,
                nodes=tuple(nodes),
                hop_count=len(link_seq),
                total_latency=sum(latency[lid] for lid in link_seq),
                last_hop_oen=last_hop,
            )
            paths.append(path)
            by_id[next_id] = path
            next_id += 1
        groups[key] = tuple(paths)
    return PathSet(groups=groups, by_id=by_id, cutoff=cutoff)


def path_latency(path: Path) -> int:
    """Total latency over the path's links, in tenths of ms."""
    return path.total_latency


def incidence(path: Path, link_id: int) -> int:
    """1 iff the link belongs to the path (the routing model's fixed
    path-link indicator)."""
    return 1 if link_id in path.link_set else 0


def dump_pathset(pathset: PathSet) -> str:
    """Debug dump: one line per path, `src dst hops latency link-ids`."""
    lines = []
    for key in sorted(pathset.groups):
        for p in pathset.groups[key]:
            ids = ",".join(str(l) for l in p.links)
            lines.append(f"{p.source} {p.destination} {p.hop_count} {p.latency_ms} {ids}")
    return "\n".join(lines) + ("\n" if lines else "")

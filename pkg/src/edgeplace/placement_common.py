"""Shared runtime helpers for the placement algorithms.

RanGr and both baselines select paths the same way: scan the candidate
group in stored order (fewest hops first) and take the first path that
fits the delay budget and has residual bandwidth on every link.
"""

from __future__ import annotations

from typing import Optional

from .domain import Demand, Topology
from .pathing import Path, PathSet


class LinkLedger:
    """Residual link bandwidth with reserve/release bookkeeping."""

    def __init__(self, topology: Topology):
        self.residual = {l.id: l.bandwidth for l in topology.links.values()}

    def fits(self, path: Path, bw: int) -> bool:
        return all(self.residual[lid] >= bw for lid in path.links)

    def reserve(self, path: Path, bw: int) -> None:
        for lid in path.links:
            self.residual[lid] -= bw

    def release(self, path: Path, bw: int) -> None:
        for lid in path.links:
            self.residual[lid] += bw


def first_feasible_path(
    pathset: PathSet, demand: Demand, destination: int, ledger: LinkLedger
) -> Optional[Path]:
    """First path BS -> destination within the delay budget with residual
    bandwidth, in stored (fewest hops first) order."""
    for path in pathset.group(demand.bs, destination):
        if path.total_latency <= demand.delay_budget and ledger.fits(path, demand.bw_req):
            return path
    return None


def first_feasible_een_path(
    pathset: PathSet,
    demand: Demand,
    een: int,
    anchor: int,
    ledger: LinkLedger,
) -> Optional[Path]:
    """First EEN-bound path whose anchoring (last-hop) OEN is ``anchor``."""
    for path in pathset.group(demand.bs, een):
        if (
            path.last_hop_oen == anchor
            and path.total_latency <= demand.delay_budget
            and ledger.fits(path, demand.bw_req)
        ):
            return path
    return None

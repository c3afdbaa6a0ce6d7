"""Greedy head/member/gateway clustering and the clustered discovery scope."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping, Optional

from ..topology import LinkSet

HEAD, MEMBER, GATEWAY = "HEAD", "MEMBER", "GATEWAY"


class NoBackbonePath(LookupError):
    pass


@dataclass(frozen=True)
class ClusterRole:
    role: str
    head: int
    adjacent_heads: tuple[int, ...] = ()

    @property
    def backbone(self) -> bool:
        return self.role != MEMBER


def elect_clusters(links: LinkSet, energies: Mapping[int, float]) -> dict[int, ClusterRole]:
    """Heads by descending residual energy (ties: lowest id), then gateways.

    A member hearing two or more heads becomes a gateway. Two clusters that
    touch only member-to-member get a bridge: the lowest-id boundary member
    on the first side and its lowest-id partner on the other are promoted.
    """
    nodes = sorted(energies, key=lambda n: (-energies[n], n))
    head_of: dict[int, int] = {}
    for n in nodes:
        if n in head_of:
            continue
        head_of[n] = n
        for m in sorted(links.neighbors(n)):
            if m in energies and m not in head_of:
                head_of[m] = n
    heads = {n for n, h in head_of.items() if h == n}

    adjacent: dict[int, set[int]] = {}
    for n, h in head_of.items():
        if n in heads:
            continue
        others = {m for m in links.neighbors(n) if m in heads and m != h}
        if others:
            adjacent[n] = others

    def bridged(h1: int, h2: int) -> bool:
        if links.linked(h1, h2):
            return True
        return any((head_of[g] == h1 and h2 in hs) or (head_of[g] == h2 and h1 in hs)
                   for g, hs in adjacent.items())

    touching: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for a in sorted(head_of):
        if a in heads:
            continue
        for b in sorted(links.neighbors(a)):
            if b not in head_of or b in heads or head_of[b] == head_of[a]:
                continue
            ha, hb = head_of[a], head_of[b]
            key = (min(ha, hb), max(ha, hb))
            touching.setdefault(key, []).append((a, b) if ha < hb else (b, a))
    for (h1, h2), pairs in sorted(touching.items()):
        if bridged(h1, h2):
            continue
        a, b = min(pairs)
        adjacent.setdefault(a, set()).add(h2)
        adjacent.setdefault(b, set()).add(h1)

    roles: dict[int, ClusterRole] = {}
    for n, h in sorted(head_of.items()):
        if n in heads:
            roles[n] = ClusterRole(HEAD, n)
        elif n in adjacent:
            roles[n] = ClusterRole(GATEWAY, h, tuple(sorted(adjacent[n])))
        else:
            roles[n] = ClusterRole(MEMBER, h)
    return roles


def role_violations(links: LinkSet, roles: Mapping[int, ClusterRole]) -> list[str]:
    """Invariant checker: coverage, head reachability, gateway bridging."""
    bad = []
    for n, r in roles.items():
        if r.role == HEAD:
            if r.head != n:
                bad.append(f"head {n} points to {r.head}")
            continue
        if roles.get(r.head, ClusterRole(MEMBER, -1)).role != HEAD:
            bad.append(f"node {n} points to non-head {r.head}")
        if not links.linked(n, r.head):
            bad.append(f"node {n} out of range of its head {r.head}")
        if r.role == GATEWAY:
            clusters = {r.head}
            for m in links.neighbors(n):
                if m in roles:
                    clusters.add(roles[m].head)
            if len(clusters) < 2:
                bad.append(f"gateway {n} does not bridge two clusters")
    return bad


def rreq_allowed(roles: Mapping[int, ClusterRole], transmitter: int, receiver: int) -> bool:
    """Members talk only to their own head; backbone nodes talk among themselves."""
    rt, rr = roles.get(transmitter), roles.get(receiver)
    if rt is None or rr is None:
        return False
    if rt.backbone and rr.backbone:
        return True
    return rt.head == receiver or rr.head == transmitter


def backbone_path(links: LinkSet, roles: Mapping[int, ClusterRole], source: int,
                  destination: int, alive: Optional[set[int]] = None) -> Optional[list[int]]:
    """Shortest path obeying the clustered scope: relays must be heads or gateways."""
    if source == destination:
        return [source]
    prev = {source: None}
    todo = deque([source])
    while todo:
        u = todo.popleft()
        if u != source and not roles[u].backbone:
            continue
        for v in sorted(links.neighbors(u)):
            if v in prev or (alive is not None and v not in alive) or v not in roles:
                continue
            if not rreq_allowed(roles, u, v):
                continue
            prev[v] = u
            if v == destination:
                path = [v]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1]
            todo.append(v)
    return None

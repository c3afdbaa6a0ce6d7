"""Packet formats shared by the routing protocols."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

RREQ, RREP, RERR, DATA, ACK, CERR = "RREQ", "RREP", "RERR", "DATA", "ACK", "CERR"
CONTROL = frozenset({RREQ, RREP, RERR, ACK, CERR})
KINDS = (RREQ, RREP, RERR, DATA, ACK, CERR)


@dataclass(slots=True)
class Packet:
    kind: str
    source: int
    destination: int
    request_id: int = 0
    ttl: int = 0
    route: tuple[int, ...] = ()
    traversed: tuple[int, ...] = ()
    costs: tuple[float, ...] = ()
    broken: Optional[tuple[int, int]] = None
    path: tuple[int, ...] = ()
    hop: int = 0
    bits: int = 0
    uid: int = -1
    created: float = 0.0
    scope: str = "flat"

    def copy(self, **changes) -> "Packet":
        return replace(self, **changes)

    @property
    def next_hop(self) -> int:
        return self.route[self.hop + 1]


def loop_free(route) -> bool:
    return len(set(route)) == len(route)


def splice_loops(route) -> tuple[int, ...]:
    """Cut out cycles: keep the first visit of each node, jump past repeats."""
    out: list[int] = []
    index: dict[int, int] = {}
    for n in route:
        if n in index:
            cut = index[n]
            for dropped in out[cut + 1:]:
                del index[dropped]
            del out[cut + 1:]
        else:
            index[n] = len(out)
            out.append(n)
    return tuple(out)


def format_route(route) -> str:
    return "-".join(map(str, route)) if route else "-"

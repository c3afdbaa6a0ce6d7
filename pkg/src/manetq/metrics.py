"""Per-period network metrics as a fold over trace records, plus CSV and trace I/O.

The live simulator and the trace re-reader feed the same ``MetricsFold`` with
the same typed records, so a report recomputed from a saved trace matches the
live CSV byte for byte.
"""

from __future__ import annotations

import io
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, TextIO

from .packets import CONTROL, format_route

CSV_HEADER = ("protocol,seed,period,mean_delay_s,throughput_bps,delivery_ratio,"
              "blockage_prob,ctrl_overhead_per_node,alive_nodes")
TRACE_MAGIC = "# manetq-trace v1"

# record kinds beyond the packet kinds
ORIG, DELIVER, DROP, ENQ, BLOCK, DEATH = "ORIG", "DELIVER", "DROP", "ENQ", "BLOCK", "DEATH"
FALLBACK, SUPPRESS, ROUTE = "FALLBACK", "SUPPRESS", "ROUTE"

INFO_TYPES = {"uid": int, "sent": float, "bits": int, "reason": str, "attempt": int,
              "req": int, "node": int}


class NegativeDelay(AssertionError):
    pass


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PeriodMetrics:
    period: int
    mean_delay: Optional[float]
    throughput: float
    delivery_ratio: float
    blockage_probability: float
    control_overhead_per_node: float
    alive_nodes: int
    offered: int = 0
    delivered: int = 0
    dropped: int = 0

    @property
    def in_flight(self) -> int:
        return self.offered - self.delivered - self.dropped


def _num(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class RunReport:
    protocol: str
    seed: int
    nodes: int
    periods: tuple[PeriodMetrics, ...]
    summary: PeriodMetrics
    lifetime: Optional[float]
    counts: dict = field(default_factory=dict)
    offered: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0

    def rows(self) -> list[PeriodMetrics]:
        return list(self.periods) + [self.summary]

    def csv_lines(self, header: bool = True) -> list[str]:
        out = [CSV_HEADER] if header else []
        for r in self.rows():
            delay = "" if r.mean_delay is None else _num(r.mean_delay)
            out.append(",".join((self.protocol, str(self.seed), str(r.period), delay,
                                 _num(r.throughput), _num(r.delivery_ratio),
                                 _num(r.blockage_probability),
                                 _num(r.control_overhead_per_node), str(r.alive_nodes))))
        return out

    def csv_text(self, header: bool = True) -> str:
        return "".join(line + "\n" for line in self.csv_lines(header))

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.csv_text(), encoding="utf-8", newline="\n")
        return path

    def period(self, p: int) -> PeriodMetrics:
        return self.periods[p - 1]

    @property
    def control_transmissions(self) -> int:
        return sum(self.counts.get(k, 0) for k in CONTROL)


class MetricsFold:
    """Accumulates records ``(time, kind, src, dst, info)`` into period buckets.

    Delay and throughput are credited to the period of delivery; delivery and
    drop ratios to the period in which the packet was originated.
    """

    def __init__(self, protocol: str, seed: int, nodes: int, sim_time: float, periods: int):
        if periods < 1 or not sim_time > 0:
            raise ValueError("need periods >= 1 and sim_time > 0")
        self.protocol, self.seed, self.nodes = protocol, seed, nodes
        self.sim_time, self.n_periods = sim_time, periods
        self.window = sim_time / periods
        z = [0] * periods
        self.delay_sum = [0.0] * periods
        self.delay_n = list(z)
        self.bits = list(z)
        self.offered = list(z)
        self.delivered = list(z)
        self.dropped = list(z)
        self.enq = list(z)
        self.blocked = list(z)
        self.ctrl = list(z)
        self.deaths = list(z)
        self.death_times: list[float] = []
        self.origin: dict[int, int] = {}
        self.counts: Counter = Counter()

    def period_of(self, t: float) -> int:
        p = int(t // self.window)
        return min(max(p, 0), self.n_periods - 1)

    @property
    def in_flight(self) -> int:
        return len(self.origin)

    def consume(self, t: float, kind: str, src: int, dst: int, info: dict) -> None:
        self.counts[kind] += 1
        if kind in CONTROL:
            self.ctrl[self.period_of(t)] += 1
        elif kind == ORIG:
            p = self.period_of(t)
            self.origin[info["uid"]] = p
            self.offered[p] += 1
        elif kind == DELIVER:
            delay = t - info["sent"]
            if delay < 0:
                raise NegativeDelay(f"packet {info['uid']} delivered before it was sent")
            p = self.period_of(t)
            self.delay_sum[p] += delay
            self.delay_n[p] += 1
            self.bits[p] += info["bits"]
            self.delivered[self.origin.pop(info["uid"])] += 1
        elif kind == DROP:
            self.dropped[self.origin.pop(info["uid"])] += 1
        elif kind == ENQ:
            self.enq[self.period_of(t)] += 1
        elif kind == BLOCK:
            p = self.period_of(t)
            self.enq[p] += 1
            self.blocked[p] += 1
        elif kind == DEATH:
            self.deaths[self.period_of(t)] += 1
            self.death_times.append(t)

    def finalize(self) -> RunReport:
        rows = []
        alive = self.nodes
        for p in range(self.n_periods):
            alive -= self.deaths[p]
            rows.append(PeriodMetrics(
                period=p + 1,
                mean_delay=self.delay_sum[p] / self.delay_n[p] if self.delay_n[p] else None,
                throughput=self.bits[p] / self.window,
                delivery_ratio=self.delivered[p] / self.offered[p] if self.offered[p] else 0.0,
                blockage_probability=self.blocked[p] / self.enq[p] if self.enq[p] else 0.0,
                control_overhead_per_node=self.ctrl[p] / self.nodes,
                alive_nodes=alive,
                offered=self.offered[p], delivered=self.delivered[p], dropped=self.dropped[p]))
        n_del = sum(self.delay_n)
        offered, delivered, dropped = sum(self.offered), sum(self.delivered), sum(self.dropped)
        enq = sum(self.enq)
        summary = PeriodMetrics(
            period=-1,
            mean_delay=sum(self.delay_sum) / n_del if n_del else None,
            throughput=sum(self.bits) / self.sim_time,
            delivery_ratio=delivered / offered if offered else 0.0,
            blockage_probability=sum(self.blocked) / enq if enq else 0.0,
            control_overhead_per_node=sum(self.ctrl) / self.nodes,
            alive_nodes=alive, offered=offered, delivered=delivered, dropped=dropped)
        lifetime = min(self.death_times) if self.death_times else None
        return RunReport(self.protocol, self.seed, self.nodes, tuple(rows), summary, lifetime,
                         dict(self.counts), offered, delivered, dropped, self.in_flight)


# --- trace --------------------------------------------------------------------

def format_info(info: dict) -> str:
    if not info:
        return "-"
    parts = []
    for k, v in info.items():
        parts.append(f"{k}={repr(v) if isinstance(v, float) else v}")
    return ",".join(parts)


def parse_info(text: str) -> dict:
    if text == "-":
        return {}
    out = {}
    for part in text.split(","):
        k, _, v = part.partition("=")
        out[k] = INFO_TYPES.get(k, str)(v)
    return out


class TraceWriter:
    """Tab-separated trace: ``time kind src dst route ttl info`` plus role lines."""

    def __init__(self, stream: TextIO):
        self.stream = stream

    def header(self, **fields) -> None:
        self.stream.write(TRACE_MAGIC + "\n")
        for k, v in fields.items():
            self.stream.write(f"# {k}={v}\n")

    def record(self, t: float, kind: str, src: int, dst: int, route, ttl: int, info: dict) -> None:
        self.stream.write(f"{t!r}\t{kind}\t{src}\t{dst}\t{format_route(route)}\t{ttl}\t"
                          f"{format_info(info)}\n")

    def role(self, t: float, node: int, role: str, head: int) -> None:
        self.stream.write(f"{t!r}\t{node}\t{role}\t{head}\n")


def read_trace(lines: Iterable[str]):
    """Yield ``('meta', dict)``, ``('record', tuple)`` and ``('role', tuple)`` items."""
    meta: dict[str, str] = {}
    started = False
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line:
            continue
        if line.startswith("#"):
            if line == TRACE_MAGIC:
                started = True
            elif "=" in line:
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            continue
        if not started:
            raise TraceFormatError("missing trace header")
        if meta is not None:
            yield "meta", meta
            meta = None
        parts = line.split("\t")
        try:
            if len(parts) == 7:
                t, kind, src, dst, route, ttl, info = parts
                yield "record", (float(t), kind, int(src), int(dst), route, int(ttl),
                                 parse_info(info))
            elif len(parts) == 4:
                yield "role", (float(parts[0]), int(parts[1]), parts[2], int(parts[3]))
            else:
                raise ValueError(f"expected 7 or 4 fields, got {len(parts)}")
        except (ValueError, KeyError) as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
    if meta is not None:
        yield "meta", meta


def recompute(trace) -> RunReport:
    """Rebuild the run report from a trace file path or text stream."""
    if isinstance(trace, (str, Path)):
        with open(trace, encoding="utf-8") as fh:
            return recompute(fh)
    fold = None
    for what, item in read_trace(trace):
        if what == "meta":
            try:
                fold = MetricsFold(item["protocol"], int(item["seed"]), int(item["nodes"]),
                                   float(item["sim_time"]), int(item["periods"]))
            except KeyError as exc:
                raise TraceFormatError(f"trace header lacks {exc}") from None
        elif what == "record":
            t, kind, src, dst, _route, _ttl, info = item
            fold.consume(t, kind, src, dst, info)
    if fold is None:
        raise TraceFormatError("empty trace")
    return fold.finalize()


def recompute_text(text: str) -> RunReport:
    return recompute(io.StringIO(text))


def mean(xs) -> float:
    xs = list(xs)
    return math.fsum(xs) / len(xs) if xs else math.nan

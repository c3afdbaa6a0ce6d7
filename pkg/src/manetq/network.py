"""Packet-level MANET simulation: nodes, links, traffic, energy and routing.

Link model is the ideal MAC: a transmission succeeds iff the receiver is in
range, alive and awake when it starts.  Control packets (RREQ, RREP, RERR,
ACK, CERR) take one airtime per hop and skip the forwarding queues; DATA
packets are served by each node's forwarding queue before transmission.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np

from .config import ScenarioConfig, queue_capacity, queue_shape
from .energy import DEAD, EnergyModel, NodeEnergy, charge, charge_over_idle
from .engine import TIMER, TRAFFIC_GEN, MOVE_UPDATE, POWER_STATE_CHANGE, Simulator, Streams, draw_exponential
from .metrics import (BLOCK, DEATH, DELIVER, DROP, ENQ, FALLBACK, ORIG, ROUTE, SUPPRESS,
                      MetricsFold, RunReport, TraceWriter)
from .packets import ACK, CERR, DATA, RERR, RREP, RREQ, Packet, loop_free
from .queueing.queue import QueueStats, ServiceQueue
from .routing import cluster as cl
from .routing.dsr import (BufferOverflow, Buffered, Deliver, DsrParams, DsrState, Forward, Reply,
                          Send, StartDiscovery, handle_rerr, handle_rreq, make_rerr,
                          originate_data, promiscuous_learn)
from .routing.nfpqr import SUPPRESS as NF_SUPPRESS, admit_rreq, default_w_ref, node_cost, select_route, window_wait
from .topology import (Area, MobilityParams, RandomWaypoint, bfs_path, initial_mobility,
                       is_connected, load_placement, plan_power_states, rebuild_links,
                       uniform_placement)

log = logging.getLogger(__name__)


class InvariantViolation(AssertionError):
    """The simulator reached a state its own bookkeeping forbids."""


@dataclass(frozen=True)
class Flow:
    index: int
    source: int
    destination: int
    rate: float


class Node:
    __slots__ = ("id", "dsr", "energy", "queue", "costs", "discovery", "drop_prob",
                 "faulty", "awake")

    def __init__(self, nid: int, params: DsrParams, model: EnergyModel):
        self.id = nid
        self.dsr = DsrState(nid, params)
        self.energy = NodeEnergy.fresh(model)
        self.queue: Optional[ServiceQueue] = None
        self.costs: dict[int, float] = {}
        self.discovery: dict[int, list] = {}  # dest -> [attempt, timer event]
        self.drop_prob = 0.0
        self.faulty = False
        self.awake = True

    @property
    def alive(self) -> bool:
        return self.energy.state != DEAD


def choose_flows(n: int, count: int, stream) -> list[tuple[int, int]]:
    pairs = []
    for _ in range(count):
        s, d = stream.choice(n, 2)
        pairs.append((int(s), int(d)))
    return pairs


def calibrate_rate(links, pairs, service_rate: float, load: float) -> float:
    """Per-flow rate putting the busiest transmitter of the shortest-path routes at load*mu."""
    per_node: Counter = Counter()
    for s, d in pairs:
        path = bfs_path(links, s, d)
        if path is None:
            continue
        per_node.update(path[:-1])
    busiest = max(per_node.values()) if per_node else 1
    return load * service_rate / busiest


class Network:
    def __init__(self, cfg: ScenarioConfig, trace: Optional[TextIO] = None):
        self.cfg = cfg
        self.protocol = cfg.protocol
        self.queue_aware = cfg.protocol != "dsr"
        self.clustered = cfg.protocol == "nfpqr-clustered"
        self.sim = Simulator()
        self.streams = Streams(cfg.seed)
        self.area = Area(cfg.area.width, cfg.area.height)
        e = cfg.energy
        self.model = EnergyModel(p_tx=e.p_tx, p_rx=e.p_rx, p_idle=e.p_idle, p_sleep=e.p_sleep,
                                 initial=e.initial, bit_time=1.0 / e.link_rate)
        self.data_bits = cfg.traffic.packet_bytes * 8
        self.ctrl_bits = cfg.traffic.control_bytes * 8
        self.data_air = self.model.airtime(self.data_bits)
        self.ctrl_air = self.model.airtime(self.ctrl_bits)
        self.retry_timeout = 2.0 * (self.data_air + self.ctrl_air)
        d = cfg.dsr
        self.dsr_params = DsrParams(max_ttl=d.max_ttl, cache_reply=d.cache_reply,
                                    promiscuous=d.promiscuous, retransmit_limit=d.retransmit_limit,
                                    cache_size=d.cache_size, seen_expiry=d.seen_expiry,
                                    buffer_capacity=d.buffer_capacity,
                                    buffer_timeout=d.buffer_timeout,
                                    request_timeout=d.request_timeout,
                                    max_request_timeout=d.max_request_timeout,
                                    replies=cfg.nfpqr.replies if self.queue_aware else 1)
        nf = cfg.nfpqr
        self.mu = cfg.queue.service_rate
        self.w_ref = nf.w_ref if nf.w_ref is not None else default_w_ref(self.mu)

        n = cfg.nodes
        if cfg.placement:
            positions = load_placement(cfg.placement, n, self.area)
        else:
            positions = uniform_placement(n, self.streams["placement"], self.area)
        mp = MobilityParams(cfg.mobility.speed_min, cfg.mobility.speed_max, cfg.mobility.pause)
        self.mobile = mp.speed_max > 0
        mstreams = [self.streams[f"mobility/{i}"] for i in range(n)]
        states = [initial_mobility(p, s, self.area, mp) for p, s in zip(positions, mstreams)]
        self.mobility = RandomWaypoint(states, mstreams, self.area, mp)

        self.nodes = [Node(i, self.dsr_params, self.model) for i in range(n)]
        self.active = np.ones(n, dtype=np.bool_)
        servers, discipline = queue_shape(cfg)
        capacity = queue_capacity(cfg)
        service = self.streams["service"]
        for node in self.nodes:
            node.queue = ServiceQueue(
                self.sim, lambda c, s=service: draw_exponential(s, self.mu), servers=servers,
                capacity=capacity, discipline=discipline,
                on_depart=lambda c, now, i=node.id: self._served(i, c),
                stats=QueueStats(0.0, keep_samples=False, window=nf.window))
        self._assign_behavior()
        self.links = rebuild_links((self.mobility.x, self.mobility.y), cfg.range, self.active)

        pairs = choose_flows(n, cfg.traffic.flows, self.streams["traffic"]) if n >= 2 else []
        rate = cfg.traffic.rate
        if rate is None and pairs:
            rate = calibrate_rate(self.links, pairs, self.mu, cfg.traffic.load)
        self.flows = [Flow(k, s, d, rate) for k, (s, d) in enumerate(pairs)]
        stop = cfg.traffic.stop
        self.traffic_end = cfg.sim_time if stop is None else min(stop, cfg.sim_time)
        self.endpoints = {f.source for f in self.flows} | {f.destination for f in self.flows}

        self.fold = MetricsFold(cfg.protocol, cfg.seed, n, cfg.sim_time, cfg.periods)
        self.writer = TraceWriter(trace) if trace is not None else None
        if self.writer:
            self.writer.header(protocol=cfg.protocol, seed=cfg.seed, nodes=n,
                               periods=cfg.periods, sim_time=repr(float(cfg.sim_time)))
        self.live: dict[int, Packet] = {}
        self.next_uid = 0
        self.roles: dict[int, cl.ClusterRole] = {}
        self.discovered: list[tuple[float, int, int, tuple[int, ...]]] = []
        self.rreq_forwards: dict[tuple[int, int], Counter] = {}
        self.stats: Counter = Counter()
        self.last_tick = 0.0
        self._drop_streams: dict[int, object] = {}

    # --- setup ---------------------------------------------------------------

    def _assign_behavior(self) -> None:
        b = self.cfg.behavior
        n = self.cfg.nodes
        count = int(round(b.selfish_fraction * n))
        if count <= 0:
            return
        chosen = self.streams["behavior"].choice(n, count)
        for i in sorted(int(c) for c in chosen):
            self.nodes[i].drop_prob = b.drop_probability
            self.nodes[i].faulty = b.mode == "faulty"

    @property
    def misbehaving(self) -> list[int]:
        return [nd.id for nd in self.nodes if nd.drop_prob > 0]

    def _drops(self, node: Node, data: bool) -> bool:
        """Misbehaviour draw for a packet ``node`` would forward for someone else."""
        if node.drop_prob <= 0 or not (data or node.faulty):
            return False
        if node.drop_prob >= 1.0:
            return True
        st = self._drop_streams.get(node.id)
        if st is None:
            st = self._drop_streams[node.id] = self.streams[f"behavior/{node.id}"]
        return st.random() < node.drop_prob

    # --- recording -------------------------------------------------------------

    def _emit(self, t: float, kind: str, src: int, dst: int, route=(), ttl: int = 0, **info) -> None:
        self.fold.consume(t, kind, src, dst, info)
        if self.writer:
            self.writer.record(t, kind, src, dst, route, ttl, info)

    def _drop(self, p: Packet, reason: str, where: int) -> None:
        if self.live.pop(p.uid, None) is None:
            raise InvariantViolation(f"packet {p.uid} dropped twice or never offered")
        self.stats[f"drop_{reason}"] += 1
        self._emit(self.sim.clock, DROP, where, p.destination, p.route, p.ttl, uid=p.uid, reason=reason)

    # --- energy ------------------------------------------------------------------

    def _spend(self, i: int, activity: str, duration: float, start: Optional[float] = None) -> None:
        # idle listening is settled for all awake time at each tick; activity adds its excess
        node = self.nodes[i]
        if not node.alive:
            return
        charge_over_idle(node.energy, activity, duration, self.model,
                         self.sim.clock if start is None else start)
        if not node.alive:
            self._die(i)

    def _die(self, i: int) -> None:
        node = self.nodes[i]
        now = self.sim.clock
        self.active[i] = False
        self._emit(node.energy.death_time, DEATH, i, -1)
        for c in node.queue.flush(now):
            self._drop(c.item, "death", i)
        for q in list(node.dsr.pending.values()):
            for p, _ in q:
                self._drop(p, "death", i)
        node.dsr.pending.clear()
        for _, timer in node.discovery.values():
            if timer is not None:
                timer.cancel()
        node.discovery.clear()
        self._relink()
        if self.clustered and self.roles.get(i, None) is not None and self.roles[i].role == cl.HEAD:
            self._elect()

    def _relink(self) -> None:
        self.links = rebuild_links((self.mobility.x, self.mobility.y), self.cfg.range, self.active)

    # --- periodic work -----------------------------------------------------------

    def _tick(self) -> None:
        now = self.sim.clock
        dt = now - self.last_tick
        start = self.last_tick
        for node in self.nodes:
            if not node.alive:
                continue
            charge(node.energy, "idle" if node.awake else "sleep", dt, self.model, start)
            if not node.alive:
                self._die(node.id)
        if self.mobile:
            self.mobility.step(start, dt)
            self._relink()
        self.last_tick = now
        nxt = now + self.cfg.tick
        if nxt <= self.cfg.sim_time + 1e-9:
            self.sim.at(min(nxt, self.cfg.sim_time), self._tick, kind=MOVE_UPDATE)

    def _elect(self) -> None:
        energies = {nd.id: nd.energy.residual for nd in self.nodes if nd.alive}
        self.roles = cl.elect_clusters(self.links, energies)
        bad = cl.role_violations(self.links, self.roles)
        if bad:
            raise InvariantViolation("cluster roles: " + "; ".join(bad[:3]))
        self.stats["elections"] += 1
        if self.writer:
            now = self.sim.clock
            for nid, r in sorted(self.roles.items()):
                self.writer.role(now, nid, r.role, r.head)

    def _periodic_elect(self) -> None:
        self._elect()
        nxt = self.sim.clock + self.cfg.nfpqr.reelect_interval
        if nxt < self.cfg.sim_time:
            self.sim.at(nxt, self._periodic_elect, kind=TIMER)

    def _plan_sleep(self) -> None:
        alive = [nd.id for nd in self.nodes if nd.alive]
        for i in alive:
            self.nodes[i].awake = True
        self.active[:] = [nd.alive for nd in self.nodes]
        self._relink()
        protected = set(self.endpoints)
        protected.update(nd.id for nd in self.nodes if nd.queue.occupancy or nd.dsr.pending)
        if len(alive) > 2 and is_connected(self.links, alive):
            energies = {i: self.nodes[i].energy.residual for i in alive}
            for i in plan_power_states(self.links, energies, protected):
                self.nodes[i].awake = False
                self.active[i] = False
            self._relink()
        nxt = self.sim.clock + self.cfg.power.interval
        if nxt < self.cfg.sim_time:
            self.sim.at(nxt, self._plan_sleep, kind=POWER_STATE_CHANGE)

    # --- traffic ----------------------------------------------------------------

    def _generate(self, flow: Flow, stream) -> None:
        now = self.sim.clock
        src = self.nodes[flow.source]
        if not src.alive:
            return
        p = Packet(DATA, flow.source, flow.destination, bits=self.data_bits, uid=self.next_uid,
                   created=now)
        self.next_uid += 1
        self.live[p.uid] = p
        self._emit(now, ORIG, p.source, p.destination, uid=p.uid)
        self._originate(src, p)
        nxt = now + draw_exponential(stream, flow.rate)
        if nxt < self.traffic_end:
            self.sim.at(nxt, self._generate, flow, stream, kind=TRAFFIC_GEN)

    def _choose_route(self, node: Node, dest: int):
        if not self.queue_aware:
            return node.dsr.cache.best(dest)
        cands = node.dsr.cache.candidates(dest)
        if not cands:
            return None
        known = node.costs
        if len(cands) == 1:
            return cands[0]
        # nodes never reported in a reply get the mean observed cost, not a free pass
        prior = sum(known.values()) / len(known) if known else 0.0
        costs = {n: known.get(n, prior) for r in cands for n in r[1:-1]}
        return select_route(cands, costs)

    def _originate(self, node: Node, p: Packet) -> None:
        now = self.sim.clock
        route = self._choose_route(node, p.destination)
        try:
            action = originate_data(node.dsr, p, now, route,
                                    discovering=p.destination in node.discovery,
                                    control_bits=self.ctrl_bits)
        except BufferOverflow:
            self._drop(p, "buffer", node.id)
            return
        if isinstance(action, Send):
            self._enqueue(node, p)
        elif isinstance(action, StartDiscovery):
            self._start_discovery(node, p.destination, action.rreq)
        elif isinstance(action, Deliver):
            self._deliver(p)
        elif not isinstance(action, Buffered):
            raise InvariantViolation(f"unexpected origination action {action!r}")

    def _rebuffer(self, node: Node, p: Packet) -> None:
        try:
            node.dsr.buffer(p, self.sim.clock)
        except BufferOverflow:
            self._drop(p, "buffer", node.id)
            return
        self._start_discovery(node, p.destination)

    def _enqueue(self, node: Node, p: Packet) -> None:
        now = self.sim.clock
        if node.queue.enqueue(p, now):
            self._emit(now, ENQ, node.id, p.destination, uid=p.uid)
            return
        self._emit(now, BLOCK, node.id, p.destination, uid=p.uid)
        self._drop(p, "block", node.id)
        if self.queue_aware and node.id != p.source:
            nxt = p.route[p.hop + 1]
            cerr = make_rerr(node.id, p, nxt, now, self.ctrl_bits, kind=CERR)
            self._unicast(node.id, cerr)

    def _deliver(self, p: Packet) -> None:
        if self.live.pop(p.uid, None) is None:
            raise InvariantViolation(f"packet {p.uid} delivered twice")
        self._emit(self.sim.clock, DELIVER, p.source, p.destination, p.route, p.ttl,
                   uid=p.uid, sent=p.created, bits=p.bits)

    # --- DATA forwarding --------------------------------------------------------------

    def _served(self, i: int, c) -> None:
        p: Packet = c.item
        node = self.nodes[i]
        # service covers channel access and transmission: the radio is active throughout
        self._spend(i, "tx", c.service, c.start)
        if not node.alive:
            self._drop(p, "death", i)
            return
        if i == p.source and p.hop == 0:
            route = self._choose_route(node, p.destination)
            if route is None:
                self._rebuffer(node, p)
                return
            p.route, p.ttl = tuple(route), len(route) - 1
        if not loop_free(p.route) or p.route[p.hop] != i:
            raise InvariantViolation(f"bad source route {p.route} at node {i}")
        self._transmit(i, p, 0)

    def _transmit(self, i: int, p: Packet, attempt: int) -> None:
        node = self.nodes[i]
        if not node.alive:
            self._drop(p, "death", i)
            return
        j = p.route[p.hop + 1]
        now = self.sim.clock
        if attempt:
            # the first attempt's airtime is part of the service period already charged
            self._spend(i, "tx", self.data_air)
        self._emit(now, DATA, i, j, p.route, p.ttl, uid=p.uid, attempt=attempt)
        self.stats["data_tx"] += 1
        if attempt == 0 and self.dsr_params.promiscuous:
            for k in self.links.neighbors(i):
                if k != j:
                    promiscuous_learn(self.nodes[k].dsr, p, i, now)
        nj = self.nodes[j]
        if self.links.linked(i, j) and nj.alive:
            self._spend(j, "rx", self.data_air)
            if j == p.destination or not self._drops(nj, data=True):
                self.sim.after(self.data_air, self._receive, j, p, i)
                return
            self.stats["misbehavior_drops"] += 1
        if attempt < self.dsr_params.retransmit_limit:
            self.sim.after(self.retry_timeout, self._transmit, i, p, attempt + 1)
        else:
            self._hop_failure(i, p, j)

    def _hop_failure(self, i: int, p: Packet, j: int) -> None:
        now = self.sim.clock
        self.stats["hop_failures"] += 1
        rerr = make_rerr(i, p, j, now, self.ctrl_bits)
        self.stats["rerr_generated"] += 1
        self._emit(now, "HOPFAIL", i, j, p.route, p.ttl, uid=p.uid)
        node = self.nodes[i]
        handle_rerr(node.dsr, rerr)
        self._drop(p, "link", i)
        if i == p.source:
            self._recheck(node)
        else:
            self._unicast(i, rerr)

    def _receive(self, j: int, p: Packet, i: int) -> None:
        node = self.nodes[j]
        if not node.alive:
            self._drop(p, "death", j)
            return
        now = self.sim.clock
        self._spend(j, "tx", self.ctrl_air)
        self._emit(now, ACK, j, i, (), 0, uid=p.uid)
        self._spend(i, "rx", self.ctrl_air)
        p.hop += 1
        p.ttl -= 1
        if p.route[p.hop] != j:
            raise InvariantViolation(f"packet {p.uid} at {j} off its route {p.route}")
        promiscuous_learn(node.dsr, p, i, now, self.dsr_params.promiscuous)
        if j == p.destination:
            self._deliver(p)
            return
        if p.ttl <= 0:
            raise InvariantViolation(f"packet {p.uid} ran out of ttl at relay {j}")
        self._enqueue(node, p)

    # --- control unicast (RREP / RERR / CERR) ---------------------------------------------

    def _unicast(self, i: int, pkt: Packet) -> None:
        if pkt.hop >= len(pkt.path) - 1:
            self._control_arrived(i, pkt)
            return
        if pkt.kind == RREP and not loop_free(pkt.route):
            raise InvariantViolation(f"looping route {pkt.route} in RREP")
        j = pkt.path[pkt.hop + 1]
        self._spend(i, "tx", self.ctrl_air)
        self._emit(self.sim.clock, pkt.kind, i, j, pkt.route or pkt.path, pkt.ttl,
                   req=pkt.request_id)
        nj = self.nodes[j]
        if self.links.linked(i, j) and nj.alive:
            self._spend(j, "rx", self.ctrl_air)
            self.sim.after(self.ctrl_air, self._receive_control, j, pkt.copy(hop=pkt.hop + 1), i)
        else:
            self.stats["control_lost"] += 1

    def _receive_control(self, j: int, pkt: Packet, i: int) -> None:
        node = self.nodes[j]
        if not node.alive:
            return
        final = pkt.hop >= len(pkt.path) - 1
        if not final and self._drops(node, data=False):
            self.stats["misbehavior_drops"] += 1
            return
        if pkt.kind == RREP:
            promiscuous_learn(node.dsr, pkt, i, self.sim.clock, self.dsr_params.promiscuous)
        elif pkt.kind == RERR:
            handle_rerr(node.dsr, pkt)
        self._unicast(j, pkt)

    def _control_arrived(self, s: int, pkt: Packet) -> None:
        node = self.nodes[s]
        if pkt.kind == RREP:
            self._route_found(node, pkt)
        elif pkt.kind == RERR:
            self._recheck(node)
        elif pkt.kind == CERR:
            nf = self.cfg.nfpqr
            node.costs[pkt.source] = max(node.costs.get(pkt.source, 0.0), nf.alpha)
            self.stats["cerr_received"] += 1

    def _recheck(self, node: Node) -> None:
        for dest in list(node.dsr.pending):
            if self._choose_route(node, dest) is None:
                self._start_discovery(node, dest)

    # --- route discovery -------------------------------------------------------------

    def _start_discovery(self, node: Node, dest: int, rreq: Optional[Packet] = None) -> None:
        if dest in node.discovery:
            return
        if rreq is None:
            rreq = node.dsr.new_rreq(dest, self.sim.clock, self.ctrl_bits)
        node.discovery[dest] = [0, None]
        self._launch(node, rreq)

    def discover(self, source: int, dest: int) -> None:
        """Start one route discovery now, outside the traffic model."""
        if self.clustered and not self.roles:
            self._elect()
        self._start_discovery(self.nodes[source], dest)

    def _launch(self, node: Node, rreq: Packet) -> None:
        dest = rreq.destination
        state = node.discovery[dest]
        if self.clustered:
            alive = {nd.id for nd in self.nodes if nd.alive}
            if (node.id in self.roles and dest in self.roles
                    and cl.backbone_path(self.links, self.roles, node.id, dest, alive) is not None):
                rreq.scope = "cluster"
            else:
                self._emit(self.sim.clock, FALLBACK, node.id, dest)
        self.stats["discoveries"] += 1
        self.rreq_forwards[(rreq.source, rreq.request_id)] = Counter()
        self._broadcast(node.id, rreq)
        wait = min(self.dsr_params.request_timeout * 2 ** state[0], self.dsr_params.max_request_timeout)
        state[1] = self.sim.after(wait, self._discovery_timeout, node.id, dest, kind=TIMER)

    def _discovery_timeout(self, s: int, dest: int) -> None:
        node = self.nodes[s]
        state = node.discovery.get(dest)
        if state is None or not node.alive:
            return
        for p in node.dsr.expire_pending(self.sim.clock):
            self._drop(p, "timeout", s)
        if dest not in node.dsr.pending:
            del node.discovery[dest]
            return
        if self._choose_route(node, dest) is not None:
            del node.discovery[dest]
            self._flush_pending(node, dest)
            return
        state[0] += 1
        self._launch(node, node.dsr.new_rreq(dest, self.sim.clock, self.ctrl_bits))

    def _broadcast(self, i: int, rreq: Packet) -> None:
        self._spend(i, "tx", self.ctrl_air)
        self._emit(self.sim.clock, RREQ, i, -1, rreq.traversed, rreq.ttl,
                   node=rreq.source, req=rreq.request_id)
        fwd = self.rreq_forwards.setdefault((rreq.source, rreq.request_id), Counter())
        fwd[i] += 1
        receivers = sorted(k for k in self.links.neighbors(i) if self.nodes[k].alive)
        for k in receivers:
            self._spend(k, "rx", self.ctrl_air)
        self.sim.after(self.ctrl_air, self._deliver_rreq, rreq, i, receivers)

    def _deliver_rreq(self, rreq: Packet, i: int, receivers: list[int]) -> None:
        for k in receivers:
            self._receive_rreq(k, rreq, i)

    def _node_cost(self, node: Node) -> float:
        nf = self.cfg.nfpqr
        frac = node.energy.residual / self.model.initial
        return node_cost(window_wait(node.queue.stats), frac, nf.alpha, nf.beta, self.w_ref).cost

    def _receive_rreq(self, k: int, rreq: Packet, i: int) -> None:
        node = self.nodes[k]
        if not node.alive:
            return
        now = self.sim.clock
        scoped = rreq.scope == "cluster"
        if scoped and not cl.rreq_allowed(self.roles, i, k):
            return
        promiscuous_learn(node.dsr, rreq, i, now, self.dsr_params.promiscuous)
        is_dest = k == rreq.destination
        key = (rreq.source, rreq.request_id)
        if (self.queue_aware and not is_dest and k not in rreq.traversed
                and not node.dsr.seen.seen(key, now)):
            nf = self.cfg.nfpqr
            verdict = admit_rreq(False, node.queue.occupancy_fraction(),
                                 node.energy.residual / self.model.initial, nf.theta_q, nf.theta_e)
            if verdict == NF_SUPPRESS:
                self._emit(now, SUPPRESS, k, rreq.destination, req=rreq.request_id)
                return
        own = self._node_cost(node) if self.queue_aware else 0.0
        action = handle_rreq(node.dsr, rreq, now, own,
                             allow_cache_reply=not scoped or self._backbone_cached(k, rreq.destination))
        if isinstance(action, Forward):
            if scoped and not self.roles[k].backbone:
                return
            if self._drops(node, data=False):
                self.stats["misbehavior_drops"] += 1
                return
            self._broadcast(k, action.packet)
        elif isinstance(action, Reply):
            rrep = action.rrep
            if not loop_free(rrep.route):
                raise InvariantViolation(f"looping route {rrep.route} in reply")
            self._unicast(k, rrep)

    def _backbone_cached(self, k: int, dest: int) -> bool:
        """Clustered scope: a backbone node may answer only with a backbone-relayed route."""
        roles = self.roles
        if k not in roles or not roles[k].backbone:
            return False
        cached = self.nodes[k].dsr.cache.best(dest)
        return cached is not None and all(n in roles and roles[n].backbone for n in cached[1:-1])

    def _route_found(self, node: Node, rrep: Packet) -> None:
        route = rrep.route
        if not loop_free(route) or route[0] != node.id:
            raise InvariantViolation(f"bad discovered route {route} at {node.id}")
        now = self.sim.clock
        dest = route[-1]
        node.dsr.cache.add(route, now)
        if self.queue_aware:
            for n, c in zip(route[1:-1], rrep.costs[1:-1]):
                node.costs[n] = c
        self.discovered.append((now, node.id, dest, route))
        self._emit(now, ROUTE, node.id, dest, route, len(route) - 1)
        state = node.discovery.pop(dest, None)
        if state is not None and state[1] is not None:
            state[1].cancel()
        self._flush_pending(node, dest)

    def _flush_pending(self, node: Node, dest: int) -> None:
        q = node.dsr.pending.pop(dest, None)
        if not q:
            return
        for p, _ in q:
            route = self._choose_route(node, dest)
            p.route, p.hop, p.ttl = tuple(route), 0, len(route) - 1
            self._enqueue(node, p)

    # --- run ------------------------------------------------------------------------

    def run(self) -> RunReport:
        cfg = self.cfg
        for flow in self.flows:
            stream = self.streams[f"arrivals/{flow.index}"]
            first = cfg.traffic.start + draw_exponential(stream, flow.rate)
            if first < self.traffic_end:
                self.sim.at(first, self._generate, flow, stream, kind=TRAFFIC_GEN)
        if cfg.tick < cfg.sim_time:
            self.sim.at(cfg.tick, self._tick, kind=MOVE_UPDATE)
        if self.clustered:
            self._periodic_elect()
        if cfg.power.sleep_planning:
            self._plan_sleep()
        self.sim.run_until(cfg.sim_time)
        if self.last_tick < cfg.sim_time:
            self._tick()
        return self.finish()

    def finish(self) -> RunReport:
        report = self.fold.finalize()
        if report.in_flight != len(self.live):
            raise InvariantViolation(f"ledger mismatch: fold {report.in_flight} vs live {len(self.live)}")
        if report.offered != report.delivered + report.dropped + report.in_flight:
            raise InvariantViolation("packet conservation violated")
        for key, fwd in self.rreq_forwards.items():
            if fwd and max(fwd.values()) > 1:
                raise InvariantViolation(f"discovery {key} forwarded twice by one node")
        return report

    @property
    def lifetime(self) -> Optional[float]:
        deaths = [nd.energy.death_time for nd in self.nodes if nd.energy.death_time is not None]
        return min(deaths) if deaths else None

    def max_rreq_per_discovery(self) -> int:
        return max((sum(c.values()) for c in self.rreq_forwards.values()), default=0)


def simulate(cfg: ScenarioConfig, trace: Optional[TextIO] = None) -> tuple[RunReport, Network]:
    net = Network(cfg, trace)
    return net.run(), net

"""Deterministic discrete-event core.

One event queue drives the whole run: packet deliveries, hello timers,
traffic emissions, waypoint arrivals, neighbor-expiry scans, transmit
completions, and route-discovery retry timers.  Events are totally ordered by
(time, sequence), so identical configs and seeds replay bit-for-bit.

The medium is a serialized-broadcast abstraction: each node transmits its own
queue at the configured link rate with no collisions or carrier sense.
Broadcasts reach every node inside tx_range at the completion instant;
unicasts reach the named next hop if it is still in range, otherwise they
count as forwarding failures.  Per-node interface queues hold control packets
(hello, route request, route reply) ahead of all data, and a control packet
arriving at a full queue evicts the newest data packet rather than being
lost.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
from collections import deque
from dataclasses import dataclass
from enum import Enum

from . import clustering, routing
from .clustering import HelloMessage, NodeClusterState
from .config import ScenarioConfig, generate_initial_placement
from .errors import InvariantError
from .metrics import (
    FATE_DELIVERED,
    FATE_FORWARD_FAIL,
    FATE_IN_FLIGHT,
    FATE_NO_ROUTE,
    FATE_QUEUE,
    MetricsLedger,
    RunReport,
    finalize,
)
from .mobility import WaypointLeg, next_leg, position_at
from .radio import ChannelModel, channel_gain
from .routing import RouteReplyPacket, RouteRequestPacket, RouterState
from .traffic import DataPacket, Flow, generate_flows


class EventKind(Enum):
    PACKET_DELIVERY = "packet_delivery"
    HELLO_TIMER = "hello_timer"
    TRAFFIC_EMIT = "traffic_emit"
    WAYPOINT_ARRIVAL = "waypoint_arrival"
    NEIGHBOR_EXPIRY_SCAN = "neighbor_expiry_scan"
    TRANSMIT_COMPLETE = "transmit_complete"
    ROUTE_RETRY_TIMEOUT = "route_retry_timeout"
    TRACE_SAMPLE = "trace_sample"


class QueueOutcome(Enum):
    ACCEPTED = "accepted"
    DROPPED_INCOMING = "dropped_incoming"
    DROPPED_TAIL_DATA = "dropped_tail_data"


class InterfaceQueue:
    """Drop-tail interface queue with control-packet priority.

    Control packets join in FIFO order ahead of every data packet; data
    appends at the tail.  A full queue discards an incoming data packet, while
    an incoming control packet evicts the newest queued data packet (a queue
    full of control packets discards the incoming one).  The packet being
    transmitted is held outside the slots.
    """

    __slots__ = ("slots", "capacity", "busy_until", "transmitting", "_control_count")

    def __init__(self, capacity: int):
        self.slots: list = []
        self.capacity = capacity
        self.busy_until = 0.0
        self.transmitting = None
        self._control_count = 0

    def enqueue(self, packet) -> tuple[QueueOutcome, object | None]:
        evicted = None
        if packet.control:
            if len(self.slots) >= self.capacity:
                if self._control_count >= len(self.slots):
                    self._check()
                    return (QueueOutcome.DROPPED_INCOMING, None)
                evicted = self.slots.pop()  # newest data packet
                self.slots.insert(self._control_count, packet)
                self._control_count += 1
                self._check()
                return (QueueOutcome.DROPPED_TAIL_DATA, evicted)
            self.slots.insert(self._control_count, packet)
            self._control_count += 1
            self._check()
            return (QueueOutcome.ACCEPTED, None)
        if len(self.slots) >= self.capacity:
            self._check()
            return (QueueOutcome.DROPPED_INCOMING, None)
        self.slots.append(packet)
        self._check()
        return (QueueOutcome.ACCEPTED, None)

    def pop_head(self):
        packet = self.slots.pop(0)
        if packet.control:
            self._control_count -= 1
        self._check()
        return packet

    def _check(self) -> None:
        if len(self.slots) > self.capacity:
            raise InvariantError("interface queue above capacity")
        if not (0 <= self._control_count <= len(self.slots)):
            raise InvariantError("interface queue control count out of range")
        for i, p in enumerate(self.slots):
            if p.control != (i < self._control_count):
                raise InvariantError("control-before-data ordering broken")


@dataclass(slots=True)
class Node:
    node_id: int
    leg: WaypointLeg
    cluster: NodeClusterState
    router: RouterState
    queue: InterfaceQueue
    mobility_rng: random.Random
    hello_rng: random.Random


class Simulation:
    """One simulation run: engine state, protocol state, and the ledger.

    Strictly single-threaded; parallelism belongs across independent
    replications with distinct seeds.
    """

    def __init__(
        self,
        cfg: ScenarioConfig,
        *,
        placement: list[tuple[float, float]] | None = None,
        flows: list[Flow] | None = None,
        trace: bool = False,
        sample_period: float | None = None,
    ):
        self.cfg = cfg
        self.now = 0.0
        self._heap: list = []
        self._seq = itertools.count()
        self._finished = False
        seed = cfg.rng_seed
        self.channel = ChannelModel(
            path_loss_exponent=cfg.path_loss_exponent,
            fading_enabled=cfg.fading_enabled,
        )
        self._fading_rng = random.Random(f"{seed}:fading") if cfg.fading_enabled else None
        self.ledger = MetricsLedger(formation_grace=cfg.effective_formation_grace)
        if placement is None:
            placement = generate_initial_placement(cfg, random.Random(f"{seed}:placement"))
        elif len(placement) != cfg.node_count:
            raise ValueError("placement length must equal node_count")
        self.nodes: list[Node] = []
        for i, pos in enumerate(placement):
            mobility_rng = random.Random(f"{seed}:mobility:{i}")
            node = Node(
                node_id=i,
                leg=next_leg(pos, 0.0, cfg, mobility_rng),
                cluster=NodeClusterState(
                    node_id=i,
                    protocol=cfg.protocol,
                    hello_interval=cfg.hello_interval,
                    neighbor_timeout=cfg.neighbor_timeout,
                ),
                router=RouterState(node_id=i),
                queue=InterfaceQueue(cfg.queue_capacity),
                mobility_rng=mobility_rng,
                hello_rng=random.Random(f"{seed}:hello:{i}"),
            )
            self.nodes.append(node)
        if flows is None:
            flows = generate_flows(cfg, random.Random(f"{seed}:flows"))
        self.flows: list[Flow] = flows
        self._data_packets: list[DataPacket] = []
        self.route_log: list[tuple[float, int, int, tuple[int, ...]]] = []
        self._recent: deque = deque(maxlen=5000)
        self.trace_enabled = trace
        self.event_trace: list[tuple[float, int, str, str]] = []
        self.route_event_trace: list[tuple[float, str, int, int]] = []
        self.mobility_trace: list[tuple[float, int, float, float]] = []
        self.cluster_trace: list[tuple[float, int, str, str, float]] = []
        self._sample_period = sample_period
        if trace and self._sample_period is None:
            self._sample_period = cfg.hello_interval / 2.0
        self._schedule_initial_events()

    # -- scheduling ---------------------------------------------------------

    def schedule(self, time: float, kind: EventKind, payload: tuple) -> None:
        if time < self.now - 1e-9:
            raise InvariantError(
                f"scheduling into the past: t={time} < now={self.now} ({kind})"
            )
        heapq.heappush(self._heap, (time, next(self._seq), kind, payload))

    def _schedule_initial_events(self) -> None:
        cfg = self.cfg
        for node in self.nodes:
            if math.isfinite(node.leg.pause_until):
                self.schedule(node.leg.pause_until, EventKind.WAYPOINT_ARRIVAL, (node.node_id,))
            offset = node.hello_rng.uniform(0.0, cfg.hello_interval)
            self.schedule(offset, EventKind.HELLO_TIMER, (node.node_id,))
            self.schedule(cfg.hello_interval / 2.0, EventKind.NEIGHBOR_EXPIRY_SCAN, (node.node_id,))
        stop = cfg.effective_traffic_stop
        for idx, flow in enumerate(self.flows):
            if flow.start_time < stop:
                self.schedule(flow.start_time, EventKind.TRAFFIC_EMIT, (idx, 0))
        if self._sample_period:
            self.schedule(0.0, EventKind.TRACE_SAMPLE, ())

    # -- geometry -----------------------------------------------------------

    def position_of(self, node: Node, t: float) -> tuple[float, float]:
        leg = node.leg
        if t > leg.pause_until:
            raise InvariantError(
                f"position query at t={t} beyond node {node.node_id}'s leg"
            )
        return position_at(leg, t)

    def _reception_gain(self, distance: float) -> float:
        # The neighbor table stores reception power in units of the configured
        # transmit power, so election outcomes depend on ratios alone.
        # Placements can put two nodes inside the close-in reference distance;
        # the model saturates there.
        d = max(distance, self.channel.reference_distance)
        return channel_gain(self.channel, d, self._fading_rng)

    # -- run loop -----------------------------------------------------------

    def run(self) -> RunReport:
        if self._finished:
            raise RuntimeError("a Simulation instance runs once")
        duration = self.cfg.sim_duration
        heap = self._heap
        while heap and heap[0][0] <= duration:
            time, _, kind, payload = heapq.heappop(heap)
            self.now = time
            self._recent.append((time, kind.name, payload[:1]))
            if kind is EventKind.PACKET_DELIVERY:
                self._on_packet_delivery(*payload)
            elif kind is EventKind.TRANSMIT_COMPLETE:
                self._on_transmit_complete(*payload)
            elif kind is EventKind.HELLO_TIMER:
                self._on_hello_timer(*payload)
            elif kind is EventKind.TRAFFIC_EMIT:
                self._on_traffic_emit(*payload)
            elif kind is EventKind.WAYPOINT_ARRIVAL:
                self._on_waypoint_arrival(*payload)
            elif kind is EventKind.NEIGHBOR_EXPIRY_SCAN:
                self._on_expiry_scan(*payload)
            elif kind is EventKind.ROUTE_RETRY_TIMEOUT:
                self._on_route_retry(*payload)
            else:
                self._on_trace_sample()
        self.now = duration
        self._sweep_unfinished()
        self._finished = True
        return finalize(self.ledger, self.cfg)

    def _sweep_unfinished(self) -> None:
        for pkt in self._data_packets:
            if pkt.fate is None:
                pkt.fate = FATE_IN_FLIGHT
                self.ledger.in_flight_at_horizon += 1

    # -- transmission path --------------------------------------------------

    def _enqueue_packet(self, node: Node, packet) -> None:
        outcome, evicted = node.queue.enqueue(packet)
        if outcome is QueueOutcome.DROPPED_INCOMING:
            if not packet.control:
                self._drop_data(packet, FATE_QUEUE)
            return
        if evicted is not None:
            self._drop_data(evicted, FATE_QUEUE)
        if node.queue.transmitting is None:
            self._start_transmission(node)

    def _start_transmission(self, node: Node) -> None:
        packet = node.queue.pop_head()
        node.queue.transmitting = packet
        duration = packet.size_bytes * 8.0 / self.cfg.link_rate
        node.queue.busy_until = self.now + duration
        self.schedule(node.queue.busy_until, EventKind.TRANSMIT_COMPLETE, (node.node_id,))

    def _on_transmit_complete(self, node_id: int) -> None:
        node = self.nodes[node_id]
        packet = node.queue.transmitting
        if packet is None:
            raise InvariantError(f"node {node_id} completed an idle transmission")
        node.queue.transmitting = None
        pos = self.position_of(node, self.now)
        range_sq = self.cfg.tx_range * self.cfg.tx_range
        if isinstance(packet, HelloMessage):
            self.ledger.hello_sent += 1
            for other in self.nodes:
                if other.node_id == node_id:
                    continue
                opos = self.position_of(other, self.now)
                dx = opos[0] - pos[0]
                dy = opos[1] - pos[1]
                if dx * dx + dy * dy <= range_sq:
                    self.schedule(
                        self.now,
                        EventKind.PACKET_DELIVERY,
                        (other.node_id, packet, node_id),
                    )
        else:
            next_hop = packet.next_hop
            opos = self.position_of(self.nodes[next_hop], self.now)
            dx = opos[0] - pos[0]
            dy = opos[1] - pos[1]
            reachable = dx * dx + dy * dy <= range_sq
            if isinstance(packet, RouteRequestPacket):
                self.ledger.rreq_sent += 1
                if reachable:
                    self.schedule(self.now, EventKind.PACKET_DELIVERY, (next_hop, packet, node_id))
                else:
                    self.ledger.rreq_losses += 1
            elif isinstance(packet, RouteReplyPacket):
                self.ledger.rrep_sent += 1
                if reachable:
                    self.schedule(self.now, EventKind.PACKET_DELIVERY, (next_hop, packet, node_id))
                else:
                    self.ledger.rrep_losses += 1
            else:
                if reachable:
                    self.schedule(self.now, EventKind.PACKET_DELIVERY, (next_hop, packet, node_id))
                else:
                    # Next hop drifted out of range: the packet is lost and the
                    # flow's source forgets the broken route.
                    self._drop_data(packet, FATE_FORWARD_FAIL)
                    self.nodes[packet.src].router.cache.pop(packet.dst, None)
                    if self.trace_enabled:
                        self.route_event_trace.append(
                            (self.now, "route_break", packet.flow_id, len(packet.route or ()))
                        )
        if node.queue.slots:
            self._start_transmission(node)
        if self.trace_enabled:
            self.event_trace.append(
                (self.now, node_id, "transmit_complete", type(packet).__name__)
            )

    # -- reception path -----------------------------------------------------

    def _on_packet_delivery(self, recipient_id: int, packet, sender_id: int) -> None:
        node = self.nodes[recipient_id]
        if self.trace_enabled:
            self.event_trace.append(
                (self.now, recipient_id, "receive", type(packet).__name__)
            )
        if isinstance(packet, HelloMessage):
            sender_pos = self.position_of(self.nodes[sender_id], self.now)
            own_pos = self.position_of(node, self.now)
            rx_power = self._reception_gain(math.dist(sender_pos, own_pos))
            outcome = clustering.on_hello_received(node.cluster, packet, rx_power, self.now)
            self._apply_election_outcome(node, outcome)
        elif isinstance(packet, RouteRequestPacket):
            result = routing.process_rreq(node.router, node.cluster, packet, self.now)
            if result.reply is not None:
                self._enqueue_packet(node, result.reply)
            for copy in result.forwards:
                self._enqueue_packet(node, copy)
        elif isinstance(packet, RouteReplyPacket):
            kind, obj = routing.process_rrep(node.router, node.cluster, packet, self.now)
            if kind == "forward":
                self._enqueue_packet(node, obj)
            else:
                destination = obj
                self.route_log.append(
                    (self.now, node.node_id, destination, node.router.cache[destination].hops)
                )
                if self.trace_enabled:
                    self.route_event_trace.append(
                        (self.now, "rrep_recv", destination, len(node.router.cache[destination].hops))
                    )
                self._flush_pending(node, destination)
        else:
            action, successor = routing.forward_data(node.cluster, packet)
            if action == "deliver":
                self._set_fate(packet, FATE_DELIVERED)
                self.ledger.record_delivery(self.now - packet.created_at, packet.size_bytes)
                if self.trace_enabled:
                    self.route_event_trace.append(
                        (self.now, "delivery", packet.flow_id, len(packet.route))
                    )
            else:
                packet.next_hop = successor
                self._enqueue_packet(node, packet)

    def _apply_election_outcome(self, node: Node, outcome) -> None:
        if outcome.changed:
            self.ledger.record_role_change(
                node.node_id, outcome.old_role, outcome.new_role, self.now
            )
        if outcome.send_hello:
            hello = clustering.build_hello(node.cluster, self.now)
            self._enqueue_packet(node, hello)

    # -- timers -------------------------------------------------------------

    def _on_hello_timer(self, node_id: int) -> None:
        node = self.nodes[node_id]
        hello = clustering.build_hello(node.cluster, self.now)
        self._enqueue_packet(node, hello)
        jitter = 1.0 + 0.1 * node.hello_rng.uniform(-1.0, 1.0)
        self.schedule(
            self.now + self.cfg.hello_interval * jitter, EventKind.HELLO_TIMER, (node_id,)
        )

    def _on_expiry_scan(self, node_id: int) -> None:
        node = self.nodes[node_id]
        removed, outcome = clustering.expire_neighbors(node.cluster, self.now)
        self._apply_election_outcome(node, outcome)
        self.schedule(
            self.now + self.cfg.hello_interval / 2.0,
            EventKind.NEIGHBOR_EXPIRY_SCAN,
            (node_id,),
        )

    def _on_waypoint_arrival(self, node_id: int) -> None:
        node = self.nodes[node_id]
        node.leg = next_leg(node.leg.destination, self.now, self.cfg, node.mobility_rng)
        if math.isfinite(node.leg.pause_until):
            self.schedule(node.leg.pause_until, EventKind.WAYPOINT_ARRIVAL, (node_id,))

    # -- traffic and routing glue -------------------------------------------

    def _on_traffic_emit(self, flow_idx: int, k: int) -> None:
        flow = self.flows[flow_idx]
        packet = DataPacket(
            flow_id=flow.flow_id,
            src=flow.src,
            dst=flow.dst,
            size_bytes=flow.packet_size,
            created_at=self.now,
        )
        self.ledger.data_sent += 1
        self._data_packets.append(packet)
        self._dispatch_data(self.nodes[flow.src], packet)
        next_time = flow.start_time + (k + 1) / flow.rate
        if next_time < self.cfg.effective_traffic_stop:
            self.schedule(next_time, EventKind.TRAFFIC_EMIT, (flow_idx, k + 1))

    def _dispatch_data(self, node: Node, packet: DataPacket) -> None:
        cached = node.router.cache.get(packet.dst)
        if cached is not None:
            packet.route = cached.hops
            action, successor = routing.forward_data(node.cluster, packet)
            if action == "deliver":
                raise InvariantError("flow source equals destination")
            packet.next_hop = successor
            self._enqueue_packet(node, packet)
            return
        pending = node.router.pending.setdefault(packet.dst, deque())
        pending.append(packet)
        if len(pending) > routing.PENDING_LIMIT:
            oldest = pending.popleft()
            self._drop_data(oldest, FATE_NO_ROUTE)
        if packet.dst not in node.router.discoveries:
            self._originate(node, packet.dst)

    def _originate(self, node: Node, destination: int) -> None:
        result = routing.originate_rreq(node.router, node.cluster, destination, self.now)
        if result.installed is not None:
            node.router.discoveries.pop(destination, None)
            self.route_log.append((self.now, node.node_id, destination, result.installed))
            self._flush_pending(node, destination)
            return
        discovery = node.router.discoveries.get(destination)
        if discovery is None:
            discovery = routing.Discovery(request_id=(node.node_id, node.router.request_counter), attempts=0)
            node.router.discoveries[destination] = discovery
        discovery.attempts += 1
        discovery.request_id = (node.node_id, node.router.request_counter)
        for packet in result.packets:
            self._enqueue_packet(node, packet)
        if self.trace_enabled:
            self.route_event_trace.append((self.now, "rreq_sent", destination, len(result.packets)))
        self.schedule(
            self.now + self.cfg.rreq_timeout,
            EventKind.ROUTE_RETRY_TIMEOUT,
            (node.node_id, destination, discovery.attempts),
        )

    def _on_route_retry(self, node_id: int, destination: int, attempt: int) -> None:
        node = self.nodes[node_id]
        discovery = node.router.discoveries.get(destination)
        if discovery is None or discovery.attempts != attempt:
            return  # answered or superseded in the meantime
        if destination in node.router.cache:
            node.router.discoveries.pop(destination, None)
            return
        if discovery.attempts >= 1 + self.cfg.rreq_max_retries:
            node.router.discoveries.pop(destination, None)
            pending = node.router.pending.pop(destination, None)
            for packet in pending or ():
                self._drop_data(packet, FATE_NO_ROUTE)
            return
        self._originate(node, destination)

    def _flush_pending(self, node: Node, destination: int) -> None:
        pending = node.router.pending.pop(destination, None)
        if not pending:
            return
        for packet in pending:
            self._dispatch_data(node, packet)

    # -- accounting ---------------------------------------------------------

    def _set_fate(self, packet: DataPacket, fate: str) -> None:
        if packet.fate is not None:
            raise InvariantError(
                f"data packet classified twice: {packet.fate} then {fate}"
            )
        packet.fate = fate

    def _drop_data(self, packet: DataPacket, fate: str) -> None:
        self._set_fate(packet, fate)
        self.ledger.record_drop(fate)

    # -- introspection ------------------------------------------------------

    def cluster_snapshot(self) -> list[tuple[int, str, tuple[int, ...], float]]:
        """(node, role, heads, mobility value) for every node, in id order."""
        return [
            (
                n.node_id,
                n.cluster.role.value,
                tuple(sorted(n.cluster.head_ids)),
                n.cluster.own_mobility,
            )
            for n in self.nodes
        ]

    def _on_trace_sample(self) -> None:
        for node in self.nodes:
            x, y = self.position_of(node, self.now)
            self.mobility_trace.append((self.now, node.node_id, x, y))
            self.cluster_trace.append(
                (
                    self.now,
                    node.node_id,
                    node.cluster.role.value,
                    ";".join(str(h) for h in sorted(node.cluster.head_ids)),
                    node.cluster.own_mobility,
                )
            )
        next_time = self.now + self._sample_period
        if next_time <= self.cfg.sim_duration:
            self.schedule(next_time, EventKind.TRACE_SAMPLE, ())

    def recent_events(self) -> list[tuple]:
        """Tail of the event stream, kept for post-mortem dumps."""
        return list(self._recent)

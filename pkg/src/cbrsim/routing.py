"""Source routing over the cluster structure.

Route discovery floods route requests across cluster heads only: a source
hands its request to its head, heads relay one copy per neighboring cluster
through gateway members, and whoever holds the target as a bidirectional
neighbor (or is the target) returns a reply along the reversed recorded
route.  Data packets then carry the full hop list.

There are no route-error packets: a broken source route is detected at the
failing hop, the source's cache entry is invalidated, and the next packet for
that destination starts a fresh discovery governed by the retry policy.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

from .clustering import NodeClusterState, Role
from .errors import InvariantError
from .traffic import DataPacket

RREQ_RREP_BASE_BYTES = 24
RREQ_RREP_HOP_BYTES = 4
PENDING_LIMIT = 10  # data packets buffered per destination awaiting a route

RequestId = tuple[int, int]


def control_size_bytes(route_len: int) -> int:
    return RREQ_RREP_BASE_BYTES + RREQ_RREP_HOP_BYTES * route_len


@dataclass(slots=True)
class RouteRequestPacket:
    request_id: RequestId
    origin: int
    target: int
    recorded_route: tuple[int, ...]
    next_hop: int
    size_bytes: int
    created_at: float

    control = True


@dataclass(slots=True)
class RouteReplyPacket:
    route: tuple[int, ...]
    next_hop: int
    size_bytes: int
    created_at: float

    control = True


@dataclass(frozen=True)
class CachedRoute:
    hops: tuple[int, ...]
    created_at: float


@dataclass
class Discovery:
    request_id: RequestId
    attempts: int  # originations performed so far (first try included)


@dataclass
class RouterState:
    node_id: int
    cache: dict[int, CachedRoute] = field(default_factory=dict)
    pending: dict[int, deque[DataPacket]] = field(default_factory=dict)
    seen_requests: set[RequestId] = field(default_factory=set)
    discoveries: dict[int, Discovery] = field(default_factory=dict)
    request_counter: int = 0


@dataclass(frozen=True)
class OriginateResult:
    installed: tuple[int, ...] | None
    packets: list[RouteRequestPacket]


@dataclass(frozen=True)
class RreqResult:
    reply: RouteReplyPacket | None
    forwards: list[RouteRequestPacket]


def _completed_route(
    cluster: NodeClusterState, route: tuple[int, ...], target: int
) -> tuple[int, ...] | None:
    """Full source-to-target route if this node can answer the request.

    A node answers when it is the target itself or holds the target as a
    bidirectional neighbor (for a head that covers its whole member table).
    """
    if cluster.node_id == target:
        return route
    entry = cluster.neighbors.get(target)
    if entry is not None and entry.bidirectional:
        return route + (target,)
    return None


def _neighbor_heads_of(entry) -> set[int]:
    return {
        nid
        for nid, (bidir, role) in entry.advertised_neighbors.items()
        if bidir and role is Role.CLUSTER_HEAD
    }


def _forward_targets(cluster: NodeClusterState, route: tuple[int, ...]) -> list[int]:
    """Next hops for one relay step of a route request, per the node's role.

    A head sends one copy toward every neighboring cluster: directly to an
    adjacent foreign head, through the lowest-id gateway member that hears a
    foreign head, and to border members adjacent to members of other clusters
    (three-hop head separations need a gateway pair).  A member relays to its
    bidirectional heads and across cluster borders; anyone already on the
    recorded route is skipped.
    """
    node_id = cluster.node_id
    exclude = set(route)
    if cluster.role is Role.CLUSTER_HEAD:
        members = {
            nid: e
            for nid, e in cluster.neighbors.items()
            if e.bidirectional and e.role is Role.MEMBER
        }
        cluster_ids = {node_id} | members.keys()
        direct = {
            nid
            for nid, e in cluster.neighbors.items()
            if e.bidirectional and e.role is Role.CLUSTER_HEAD and nid not in exclude
        }
        gateway_for: dict[int, int] = {}
        borders = set()
        for mid in sorted(members):
            if mid in exclude:
                continue
            entry = members[mid]
            for nid, (bidir, role) in entry.advertised_neighbors.items():
                if not bidir or nid == node_id or nid in exclude:
                    continue
                if role is Role.CLUSTER_HEAD and nid not in direct:
                    gateway_for.setdefault(nid, mid)  # lowest id: mids ascend
                elif role is Role.MEMBER and nid not in cluster_ids:
                    borders.add(mid)
        return sorted(direct | set(gateway_for.values()) | borders)
    if cluster.role is Role.MEMBER:
        out = set()
        own_heads = cluster.head_ids
        for nid, e in cluster.neighbors.items():
            if not e.bidirectional or nid in exclude:
                continue
            if e.role is Role.CLUSTER_HEAD:
                out.add(nid)
            elif e.role is Role.MEMBER and not (_neighbor_heads_of(e) & own_heads):
                out.add(nid)  # member of a foreign cluster: gateway-pair hop
        return sorted(out)
    return []  # an undecided node neither forwards nor answers for others


def _make_copies(
    rreq: RouteRequestPacket, route: tuple[int, ...], targets: list[int], now: float
) -> list[RouteRequestPacket]:
    size = control_size_bytes(len(route))
    return [
        replace(rreq, recorded_route=route, next_hop=t, size_bytes=size)
        for t in targets
    ]


def _make_reply(route: tuple[int, ...], replier: int, now: float) -> RouteReplyPacket:
    idx = route.index(replier)
    if idx == 0:
        raise InvariantError("route reply originated at the route's source")
    return RouteReplyPacket(
        route=route,
        next_hop=route[idx - 1],
        size_bytes=control_size_bytes(len(route)),
        created_at=now,
    )


def originate_rreq(
    router: RouterState, cluster: NodeClusterState, target: int, now: float
) -> OriginateResult:
    """Start (or restart) route discovery toward ``target``.

    A target that is already a bidirectional neighbor is answered from the
    table without any packets.  A head processes its own request locally and
    fans out to neighboring clusters; a member unicasts one copy to each of
    its heads.  A node with no cluster head cannot originate yet and returns
    no packets (the retry policy will try again).
    """
    node_id = cluster.node_id
    entry = cluster.neighbors.get(target)
    if entry is not None and entry.bidirectional:
        route = (node_id, target)
        router.cache[target] = CachedRoute(route, now)
        return OriginateResult(installed=route, packets=[])
    router.request_counter += 1
    request_id = (node_id, router.request_counter)
    router.seen_requests.add(request_id)
    base = RouteRequestPacket(
        request_id=request_id,
        origin=node_id,
        target=target,
        recorded_route=(node_id,),
        next_hop=node_id,
        size_bytes=control_size_bytes(1),
        created_at=now,
    )
    if cluster.role is Role.CLUSTER_HEAD:
        # The source is its own head: no unicast hop, fan out directly.
        targets = _forward_targets(cluster, (node_id,))
        return OriginateResult(None, _make_copies(base, (node_id,), targets, now))
    if cluster.role is Role.MEMBER and cluster.head_ids:
        return OriginateResult(
            None, _make_copies(base, (node_id,), sorted(cluster.head_ids), now)
        )
    return OriginateResult(None, [])


def process_rreq(
    router: RouterState, cluster: NodeClusterState, rreq: RouteRequestPacket, now: float
) -> RreqResult:
    """Handle one received route request: deduplicate, record the hop, answer
    if the target is known, otherwise relay per the node's role."""
    if rreq.request_id in router.seen_requests:
        return RreqResult(None, [])
    router.seen_requests.add(rreq.request_id)
    node_id = cluster.node_id
    if node_id in rreq.recorded_route:
        return RreqResult(None, [])
    route = rreq.recorded_route + (node_id,)
    if len(set(route)) != len(route):
        raise InvariantError(f"duplicate id in recorded route {route}")
    completed = _completed_route(cluster, route, rreq.target)
    if completed is not None:
        if len(set(completed)) != len(completed):
            raise InvariantError(f"duplicate id in completed route {completed}")
        return RreqResult(_make_reply(completed, node_id, now), [])
    targets = _forward_targets(cluster, route)
    return RreqResult(None, _make_copies(rreq, route, targets, now))


def process_rrep(
    router: RouterState, cluster: NodeClusterState, rrep: RouteReplyPacket, now: float
) -> tuple[str, object]:
    """Move a route reply one hop toward the source; install at the source.

    Returns ("installed", destination) at the source, else
    ("forward", packet) for the next reverse hop.
    """
    node_id = cluster.node_id
    try:
        idx = rrep.route.index(node_id)
    except ValueError:
        raise InvariantError(
            f"node {node_id} processed a route reply it is not on: {rrep.route}"
        ) from None
    if idx == 0:
        destination = rrep.route[-1]
        router.cache[destination] = CachedRoute(rrep.route, now)
        router.discoveries.pop(destination, None)
        return ("installed", destination)
    return ("forward", replace(rrep, next_hop=rrep.route[idx - 1]))


def forward_data(
    cluster: NodeClusterState, packet: DataPacket
) -> tuple[str, int | None]:
    """Next action for a source-routed data packet at this node.

    Returns ("deliver", None) at the destination or ("forward", successor).
    A packet at a node that is not on its route is a routing bug.
    """
    node_id = cluster.node_id
    route = packet.route
    if route is None:
        raise InvariantError(f"data packet for {packet.dst} has no route attached")
    try:
        idx = route.index(node_id)
    except ValueError:
        raise InvariantError(
            f"node {node_id} holds a data packet whose route {route} skips it"
        ) from None
    if idx == len(route) - 1:
        return ("deliver", None)
    return ("forward", route[idx + 1])

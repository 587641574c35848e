"""Per-node cluster state machine: hello protocol, neighbor tables, the
received-power mobility metric, and both cluster-head election rules.

Election variants
-----------------
* CBRP: an undecided node that holds the lowest id among its bidirectional,
  not-yet-clustered neighbors declares itself cluster head; everyone with a
  bidirectional link to a head joins it.  Maintenance is least-cluster-change:
  members never challenge a head, and only when two heads acquire a
  bidirectional link does the higher-id one step down.
* Cross-CBRP: same structure, but candidates compare an aggregate mobility
  value derived from successive hello reception powers; the strictly lowest
  value wins and exact ties fall back to lowest id.  A member with lower
  mobility than its head never triggers re-clustering.

A node's aggregate mobility is the mean of squared pairwise relative-mobility
samples, one sample per live neighbor, computed from that neighbor's two most
recent hello reception powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .config import Protocol
from .errors import InvariantError


class Role(Enum):
    UNDECIDED = "undecided"
    CLUSTER_HEAD = "head"
    MEMBER = "member"


class LinkDirection(Enum):
    """How a neighbor-table entry sees the link to that neighbor."""

    UNI_FROM_NEIGHBOR = "uni"   # we hear them; they have not yet listed us
    BIDIRECTIONAL = "bidir"


HELLO_BASE_BYTES = 20
HELLO_ENTRY_BYTES = 8
HELLO_MOBILITY_FIELD_BYTES = 4  # the metric field only Cross-CBRP hellos carry

# An undecided node holds off electing until link directions have had time to
# settle: entries appear after one hello round, but a link only reads as
# bidirectional once the second round's neighbor lists echo back.
WARMUP_ROUNDS = 2.2

# Self-election normally competes against every bidirectional neighbor, so a
# still-covered neighbor with a stronger claim blocks the election (this is
# what keeps one head departure from spawning a head per orphaned member).
# A node stuck undecided longer than this many hello rounds beyond the
# neighbor timeout stops counting member-role neighbors as competitors:
# members never challenge heads, so waiting on one deadlocks chain-shaped
# topologies where the member's own head is out of range.
PATIENCE_EXTRA_ROUNDS = 2.0


@dataclass(frozen=True)
class HelloMessage:
    """Periodic 1-hop broadcast: sender identity, role, mobility value, and a
    snapshot of the sender's neighbor table as (id, direction, role) triples."""

    sender_id: int
    sender_role: Role
    sender_mobility: float
    neighbor_list: tuple[tuple[int, bool, Role], ...]
    size_bytes: int
    created_at: float

    control = True


@dataclass(slots=True)
class NeighborEntry:
    neighbor_id: int
    link: LinkDirection
    role: Role
    advertised_mobility: float | None
    prev_rx_power: float | None
    last_rx_power: float
    rel_mobility: float | None
    expires_at: float
    # Neighbor's own table from its last hello: id -> (bidirectional, role).
    advertised_neighbors: dict[int, tuple[bool, Role]]

    @property
    def bidirectional(self) -> bool:
        return self.link is LinkDirection.BIDIRECTIONAL


@dataclass
class NodeClusterState:
    node_id: int
    protocol: Protocol
    hello_interval: float
    neighbor_timeout: float
    role: Role = Role.UNDECIDED
    own_mobility: float = 0.0
    # The value the rest of the neighborhood currently knows us by: own
    # mobility as of our last hello.  Elections compare broadcast values on
    # both sides so that contending nodes reach consistent verdicts.
    broadcast_mobility: float = 0.0
    neighbors: dict[int, NeighborEntry] = field(default_factory=dict)
    head_ids: set[int] = field(default_factory=set)
    undecided_since: float = 0.0

    @property
    def warmup_until(self) -> float:
        return WARMUP_ROUNDS * self.hello_interval

    @property
    def coverage_patience(self) -> float:
        return self.neighbor_timeout + PATIENCE_EXTRA_ROUNDS * self.hello_interval


@dataclass(frozen=True)
class ElectionOutcome:
    old_role: Role
    new_role: Role
    send_hello: bool

    @property
    def changed(self) -> bool:
        return self.old_role is not self.new_role


def relative_mobility(pr_new: float, pr_old: float) -> float:
    """Relative mobility in dB between two successive reception powers.

    Positive means the pair is approaching, negative receding.
    """
    if pr_new <= 0 or pr_old <= 0:
        raise ValueError(f"reception powers must be positive, got {pr_new}, {pr_old}")
    return 10.0 * math.log10(pr_new / pr_old)


def aggregate_mobility(samples: list[float]) -> float:
    """Variance about zero (mean of squares) of relative-mobility samples.

    An empty sample set yields 0, the value every node starts from.
    """
    if not samples:
        return 0.0
    return sum(s * s for s in samples) / len(samples)


def hello_size_bytes(entry_count: int, protocol: Protocol) -> int:
    size = HELLO_BASE_BYTES + HELLO_ENTRY_BYTES * entry_count
    if protocol is Protocol.CROSS_CBRP:
        size += HELLO_MOBILITY_FIELD_BYTES
    return size


def build_hello(state: NodeClusterState, now: float) -> HelloMessage:
    """Snapshot the node's table into a hello broadcast."""
    entries = tuple(
        (nid, e.bidirectional, e.role) for nid, e in sorted(state.neighbors.items())
    )
    state.broadcast_mobility = state.own_mobility
    return HelloMessage(
        sender_id=state.node_id,
        sender_role=state.role,
        sender_mobility=state.own_mobility,
        neighbor_list=entries,
        size_bytes=hello_size_bytes(len(entries), state.protocol),
        created_at=now,
    )


def _recompute_own_mobility(state: NodeClusterState) -> None:
    state.own_mobility = aggregate_mobility(
        [e.rel_mobility for e in state.neighbors.values() if e.rel_mobility is not None]
    )


def on_hello_received(
    state: NodeClusterState, hello: HelloMessage, rx_power: float, now: float
) -> ElectionOutcome:
    """Fold a received hello into the table, refresh the mobility metric, and
    run the election step.  Returns the resulting role transition."""
    sid = hello.sender_id
    hears_us = any(nid == state.node_id for nid, _, _ in hello.neighbor_list)
    link = LinkDirection.BIDIRECTIONAL if hears_us else LinkDirection.UNI_FROM_NEIGHBOR
    advertised = {nid: (bidir, role) for nid, bidir, role in hello.neighbor_list}
    entry = state.neighbors.get(sid)
    if entry is None:
        state.neighbors[sid] = NeighborEntry(
            neighbor_id=sid,
            link=link,
            role=hello.sender_role,
            advertised_mobility=hello.sender_mobility,
            prev_rx_power=None,
            last_rx_power=rx_power,
            rel_mobility=None,
            expires_at=now + state.neighbor_timeout,
            advertised_neighbors=advertised,
        )
    else:
        entry.link = link
        entry.role = hello.sender_role
        entry.advertised_mobility = hello.sender_mobility
        entry.prev_rx_power = entry.last_rx_power
        entry.last_rx_power = rx_power
        entry.rel_mobility = relative_mobility(rx_power, entry.prev_rx_power)
        entry.expires_at = now + state.neighbor_timeout
        entry.advertised_neighbors = advertised
    _recompute_own_mobility(state)
    old_role = state.role
    send = run_election(state, now)
    check_invariants(state)
    return ElectionOutcome(old_role, state.role, send)


def expire_neighbors(
    state: NodeClusterState, now: float
) -> tuple[list[int], ElectionOutcome]:
    """Drop entries whose timeout passed, then re-run the election step."""
    removed = [nid for nid, e in state.neighbors.items() if e.expires_at < now]
    for nid in removed:
        del state.neighbors[nid]
    if removed:
        _recompute_own_mobility(state)
    old_role = state.role
    send = run_election(state, now)
    check_invariants(state)
    return removed, ElectionOutcome(old_role, state.role, send)


def run_election(state: NodeClusterState, now: float) -> bool:
    if state.protocol is Protocol.CBRP:
        return elect_lid(state, now)
    return elect_cross(state, now)


def _bidirectional_head_ids(state: NodeClusterState) -> set[int]:
    return {
        nid
        for nid, e in state.neighbors.items()
        if e.bidirectional and e.role is Role.CLUSTER_HEAD
    }


def _become_head(state: NodeClusterState) -> None:
    state.role = Role.CLUSTER_HEAD
    state.head_ids = {state.node_id}


def _become_member(state: NodeClusterState, heads: set[int]) -> None:
    state.role = Role.MEMBER
    state.head_ids = set(heads)


def _become_undecided(state: NodeClusterState, now: float) -> None:
    state.role = Role.UNDECIDED
    state.head_ids = set()
    state.undecided_since = now


def _competitors(state: NodeClusterState, now: float):
    """Bidirectional neighbors an undecided node must beat to declare itself.

    Every neighbor counts, members included, until the node has waited out
    the coverage patience; after that, member-role neighbors no longer block.
    """
    relax = (now - state.undecided_since) > state.coverage_patience
    return [
        e
        for e in state.neighbors.values()
        if e.bidirectional and not (relax and e.role is Role.MEMBER)
    ]


def elect_lid(state: NodeClusterState, now: float) -> bool:
    """Lowest-ID election with least-cluster-change maintenance.

    Returns True when the node should broadcast an immediate hello (it just
    declared itself head, or dropped back to undecided).
    """
    send = False
    if state.role is Role.CLUSTER_HEAD:
        # Head duel: only an adjacent lower-id head unseats us.
        rivals = _bidirectional_head_ids(state)
        if rivals and min(rivals) < state.node_id:
            _become_member(state, rivals)
        return send
    if state.role is Role.MEMBER:
        heads = _bidirectional_head_ids(state)
        if heads:
            state.head_ids = heads
            return send
        _become_undecided(state, now)
        send = True
        # Fall through: a member that lost its last head re-elects now.
    if state.role is Role.UNDECIDED:
        if now < state.warmup_until:
            return send
        heads = _bidirectional_head_ids(state)
        if heads:
            _become_member(state, heads)
            return send
        if all(e.neighbor_id > state.node_id for e in _competitors(state, now)):
            _become_head(state)
            send = True
    return send


def _mobility_key(state: NodeClusterState) -> tuple[float, int]:
    return (state.broadcast_mobility, state.node_id)


def _neighbor_mobility_key(e: NeighborEntry) -> tuple[float, int]:
    # A neighbor that never broadcast a mobility value must not win elections.
    m = e.advertised_mobility if e.advertised_mobility is not None else math.inf
    return (m, e.neighbor_id)


def elect_cross(state: NodeClusterState, now: float) -> bool:
    """Aggregate-mobility election: strictly lowest value wins, ties fall back
    to lowest id.  Same least-cluster-change damping as the base variant."""
    send = False
    if state.role is Role.CLUSTER_HEAD:
        rival_entries = [
            e
            for e in state.neighbors.values()
            if e.bidirectional and e.role is Role.CLUSTER_HEAD
        ]
        if rival_entries:
            best = min(_neighbor_mobility_key(e) for e in rival_entries)
            if best < _mobility_key(state):
                _become_member(state, {e.neighbor_id for e in rival_entries})
        return send
    if state.role is Role.MEMBER:
        heads = _bidirectional_head_ids(state)
        if heads:
            state.head_ids = heads
            return send
        _become_undecided(state, now)
        send = True
    if state.role is Role.UNDECIDED:
        if now < state.warmup_until:
            return send
        heads = _bidirectional_head_ids(state)
        if heads:
            _become_member(state, heads)
            return send
        mine = _mobility_key(state)
        if all(_neighbor_mobility_key(e) > mine for e in _competitors(state, now)):
            _become_head(state)
            send = True
    return send


def gateway_set(state: NodeClusterState) -> set[int]:
    """Members of this head's cluster with a bidirectional link into another
    cluster — the candidates for inter-cluster forwarding.

    Derived on demand from the members' advertised tables; gateway is never a
    stored role.
    """
    if state.role is not Role.CLUSTER_HEAD:
        return set()
    members = {
        nid: e
        for nid, e in state.neighbors.items()
        if e.bidirectional and e.role is Role.MEMBER
    }
    cluster_ids = {state.node_id} | members.keys()
    gateways = set()
    for mid, entry in members.items():
        for nid, (bidir, role) in entry.advertised_neighbors.items():
            if bidir and nid not in cluster_ids and role is not Role.UNDECIDED:
                gateways.add(mid)
                break
    return gateways


def check_invariants(state: NodeClusterState) -> None:
    """Role/table consistency, asserted after every election step.

    Every member must hold a bidirectional link to each of its heads (the
    2-hop cluster diameter), a head lists exactly itself, and an undecided
    node lists nothing.
    """
    if state.role is Role.CLUSTER_HEAD:
        if state.head_ids != {state.node_id}:
            raise InvariantError(
                f"node {state.node_id}: head must list itself, got {state.head_ids}"
            )
    elif state.role is Role.MEMBER:
        if not state.head_ids:
            raise InvariantError(f"node {state.node_id}: member with no head")
        for hid in state.head_ids:
            e = state.neighbors.get(hid)
            if e is None or not e.bidirectional or e.role is not Role.CLUSTER_HEAD:
                raise InvariantError(
                    f"node {state.node_id}: head {hid} is not a bidirectional "
                    "cluster-head neighbor"
                )
    else:
        if state.head_ids:
            raise InvariantError(
                f"node {state.node_id}: undecided node lists heads {state.head_ids}"
            )

"""Shared fixtures and topology builders for the test suite."""

from __future__ import annotations

import math

import pytest

from cbrsim.clustering import (
    LinkDirection,
    NeighborEntry,
    NodeClusterState,
    Role,
)
from cbrsim.config import Protocol, ScenarioConfig


def make_cfg(**overrides) -> ScenarioConfig:
    """Small, fast scenario used as the unit-test default."""
    base = dict(
        node_count=10,
        area_width=400.0,
        area_height=400.0,
        max_speed=10.0,
        min_speed=0.1,
        sim_duration=60.0,
        flow_count=2,
        packet_rate=2.0,
        rng_seed=1,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def static_cfg(**overrides) -> ScenarioConfig:
    over = dict(max_speed=0.0, min_speed=0.0)
    over.update(overrides)
    return make_cfg(**over)


def chain_placement(n: int, spacing: float = 200.0) -> list[tuple[float, float]]:
    """Nodes on a line, consecutive pairs in range, non-consecutive out."""
    return [(50.0 + i * spacing, 50.0) for i in range(n)]


def make_state(
    node_id: int,
    protocol: Protocol = Protocol.CBRP,
    role: Role = Role.UNDECIDED,
    hello_interval: float = 2.0,
    neighbor_timeout: float = 6.0,
    **fields,
) -> NodeClusterState:
    state = NodeClusterState(
        node_id=node_id,
        protocol=protocol,
        hello_interval=hello_interval,
        neighbor_timeout=neighbor_timeout,
        role=role,
    )
    for name, value in fields.items():
        setattr(state, name, value)
    return state


def add_neighbor(
    state: NodeClusterState,
    neighbor_id: int,
    *,
    bidirectional: bool = True,
    role: Role = Role.UNDECIDED,
    advertised_mobility: float | None = None,
    rel_mobility: float | None = None,
    expires_at: float = 1e9,
    advertised_neighbors: dict | None = None,
) -> NeighborEntry:
    entry = NeighborEntry(
        neighbor_id=neighbor_id,
        link=LinkDirection.BIDIRECTIONAL if bidirectional else LinkDirection.UNI_FROM_NEIGHBOR,
        role=role,
        advertised_mobility=advertised_mobility,
        prev_rx_power=1.0 if rel_mobility is not None else None,
        last_rx_power=1.0,
        rel_mobility=rel_mobility,
        expires_at=expires_at,
        advertised_neighbors=advertised_neighbors or {},
    )
    state.neighbors[neighbor_id] = entry
    return entry


def bidirectional_disc_adjacency(positions, tx_range):
    """Ground-truth adjacency of the disc graph, independent of the engine."""
    n = len(positions)
    adj = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if math.dist(positions[i], positions[j]) <= tx_range:
                adj[i][j] = adj[j][i] = True
    return adj


def is_connected(adj) -> bool:
    n = len(adj)
    seen = {0}
    frontier = [0]
    while frontier:
        u = frontier.pop()
        for v in range(n):
            if adj[u][v] and v not in seen:
                seen.add(v)
                frontier.append(v)
    return len(seen) == n


@pytest.fixture
def cfg():
    return make_cfg()

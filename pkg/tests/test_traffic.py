import random

import pytest

from cbrsim.errors import ConfigError
from cbrsim.traffic import generate_flows
from conftest import make_cfg


def test_disjoint_endpoints():
    cfg = make_cfg(node_count=20, flow_count=10)
    flows = generate_flows(cfg, random.Random(0))
    endpoints = [n for f in flows for n in (f.src, f.dst)]
    assert len(endpoints) == len(set(endpoints)) == 20


def test_every_node_an_endpoint_at_half_count():
    cfg = make_cfg(node_count=10, flow_count=5)
    flows = generate_flows(cfg, random.Random(3))
    assert sorted(n for f in flows for n in (f.src, f.dst)) == list(range(10))


def test_too_many_flows_rejected():
    # 60 disjoint flows in 100 nodes would need 120 endpoints
    with pytest.raises(ConfigError, match="flow_count <= node_count / 2"):
        make_cfg(node_count=100, flow_count=60)


def test_shared_endpoints_mode_only_requires_src_dst_distinct():
    cfg = make_cfg(node_count=10, flow_count=30, allow_shared_endpoints=True)
    flows = generate_flows(cfg, random.Random(1))
    assert len(flows) == 30
    assert all(f.src != f.dst for f in flows)


def test_deterministic_per_seed():
    cfg = make_cfg(node_count=30, flow_count=12)
    a = generate_flows(cfg, random.Random("x"))
    b = generate_flows(cfg, random.Random("x"))
    assert a == b


def test_start_times_staggered_within_one_period():
    cfg = make_cfg(node_count=30, flow_count=12, packet_rate=4.0, traffic_start=7.0)
    flows = generate_flows(cfg, random.Random(5))
    for f in flows:
        assert 7.0 <= f.start_time < 7.0 + 0.25


def test_emission_count_four_per_second_over_300s():
    # 4 pkt/s over a 300 s horizon: 1200 emissions give or take the stagger.
    cfg = make_cfg(node_count=4, flow_count=1, packet_rate=4.0, sim_duration=300.0)
    flow = generate_flows(cfg, random.Random(2))[0]
    period = 1.0 / flow.rate
    emissions = 0
    k = 0
    while flow.start_time + k * period < cfg.effective_traffic_stop:
        emissions += 1
        k += 1
    assert abs(emissions - 1200) <= 1


def test_emission_grid_exactly_periodic():
    cfg = make_cfg(node_count=4, flow_count=1, packet_rate=2.5)
    flow = generate_flows(cfg, random.Random(9))[0]
    times = [flow.start_time + k / flow.rate for k in range(100)]
    for k, t in enumerate(times):
        assert t == flow.start_time + k / flow.rate


def test_offered_load_identity():
    cfg = make_cfg(node_count=30, flow_count=12, packet_rate=4.0, packet_size=512)
    flows = generate_flows(cfg, random.Random(0))
    load_bps = sum(f.rate * f.packet_size * 8 for f in flows)
    assert load_bps == 12 * 4.0 * 512 * 8

import random

import numpy as np
import pytest

from cbrsim.config import (
    Protocol,
    ScenarioConfig,
    generate_initial_placement,
    parse_config,
    serialize_config,
)
from cbrsim.errors import ConfigError


def test_defaults_match_benchmark_setup():
    cfg = ScenarioConfig()
    assert cfg.node_count == 100
    assert (cfg.area_width, cfg.area_height) == (1000.0, 1000.0)
    assert cfg.tx_range == 250.0
    assert cfg.pause_time == 0.0
    assert cfg.sim_duration == 300.0
    assert cfg.packet_size == 512
    assert cfg.queue_capacity == 50
    assert cfg.replications == 5


def test_parse_basic_file_with_defaults():
    text = "node_count=100\narea=1000x1000\nmax_speed=20\ntx_range=250"
    cfg = parse_config(text)
    assert cfg.node_count == 100
    assert cfg.area_width == 1000.0 and cfg.area_height == 1000.0
    assert cfg.max_speed == 20.0
    assert cfg.tx_range == 250.0
    # unspecified keys take defaults
    assert cfg.packet_size == 512
    assert cfg.queue_capacity == 50


def test_parse_empty_file_is_all_defaults():
    assert parse_config("") == ScenarioConfig()


def test_parse_zero_max_speed_names_constraint():
    with pytest.raises(ConfigError, match="min_speed <= max_speed"):
        parse_config("max_speed=0")


def test_parse_comments_and_blank_lines():
    cfg = parse_config("# a comment\n\nnode_count=42  # trailing\n")
    assert cfg.node_count == 42


def test_parse_syntax_error_reports_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("node_count=5\nnonsense line\n")


def test_parse_unknown_key_reports_line():
    with pytest.raises(ConfigError, match="line 1.*unknown key"):
        parse_config("definitely_not_a_key=1")


def test_parse_bad_value_reports_line():
    with pytest.raises(ConfigError, match="line 1.*bad value"):
        parse_config("node_count=many")


def test_key_aliases_accepted():
    cfg = parse_config(
        "hello_interval_BI=1.5\nneighbor_timeout_TP=4.5\npath_loss_exponent_n=3"
    )
    assert cfg.hello_interval == 1.5
    assert cfg.neighbor_timeout == 4.5
    assert cfg.path_loss_exponent == 3.0


def test_protocol_spellings():
    assert parse_config("protocol=cbrp").protocol is Protocol.CBRP
    assert parse_config("protocol=cross-cbrp").protocol is Protocol.CROSS_CBRP
    assert parse_config("protocol=CrossCBRP").protocol is Protocol.CROSS_CBRP


def test_flow_disjointness_constraint():
    with pytest.raises(ConfigError, match="flow_count <= node_count / 2"):
        parse_config("node_count=100\nflow_count=60")
    relaxed = parse_config("node_count=100\nflow_count=60\nallow_shared_endpoints=true")
    assert relaxed.effective_flow_count == 60


def test_flow_count_defaulting():
    assert ScenarioConfig().effective_flow_count == 50
    assert ScenarioConfig(node_count=24).effective_flow_count == 12
    assert ScenarioConfig().flow_count_was_defaulted
    assert not ScenarioConfig(flow_count=10).flow_count_was_defaulted


def test_path_loss_exponent_bounds():
    with pytest.raises(ConfigError, match="path_loss_exponent"):
        ScenarioConfig(path_loss_exponent=1.5)
    with pytest.raises(ConfigError, match="path_loss_exponent"):
        ScenarioConfig(path_loss_exponent=6.5)


def test_static_scenario_requires_both_speeds_zero():
    cfg = ScenarioConfig(max_speed=0.0, min_speed=0.0)
    assert cfg.is_static
    with pytest.raises(ConfigError):
        ScenarioConfig(max_speed=0.0, min_speed=0.5)


def test_derived_defaults():
    cfg = ScenarioConfig(hello_interval=2.0, neighbor_timeout=6.0)
    assert cfg.effective_formation_grace == 10.0
    assert cfg.effective_traffic_stop == cfg.sim_duration
    assert ScenarioConfig(formation_grace=25.0).effective_formation_grace == 25.0


def test_round_trip_identity():
    cfg = ScenarioConfig(
        node_count=37,
        area_width=512.5,
        area_height=321.25,
        max_speed=17.0,
        min_speed=0.3,
        protocol=Protocol.CROSS_CBRP,
        flow_count=9,
        packet_rate=3.5,
        rng_seed=99,
        allow_shared_endpoints=True,
    )
    assert parse_config(serialize_config(cfg)) == cfg


def test_round_trip_of_parsed_text():
    text = "node_count=12\narea=300x200\nprotocol=cross-cbrp\nmin_speed=0.2\nmax_speed=5"
    once = parse_config(text)
    assert parse_config(serialize_config(once)) == once


def test_placement_within_area_and_deterministic():
    cfg = ScenarioConfig(node_count=50, area_width=200.0, area_height=100.0)
    a = generate_initial_placement(cfg, random.Random("s"))
    b = generate_initial_placement(cfg, random.Random("s"))
    assert a == b
    assert len(a) == 50
    assert all(0 <= x <= 200 and 0 <= y <= 100 for x, y in a)


def test_placement_single_node():
    cfg = ScenarioConfig(node_count=2)
    pts = generate_initial_placement(cfg, random.Random(0))
    assert len(pts) == 2


def test_placement_mean_converges_to_area_center():
    # Law of large numbers over many seeded placements.
    cfg = ScenarioConfig(node_count=100)
    xs = []
    for seed in range(1000):
        pts = generate_initial_placement(cfg, random.Random(seed))
        xs.extend(p[0] for p in pts)
    assert abs(np.mean(xs) - 500.0) < 30.0

"""Compare the two election rules as nodes move faster.

Paired seeds give both protocols identical placements, trajectories, and
traffic, so differences come from the election rule alone.  Expect the
mobility-aware variant to change cluster heads less often and deliver a
little more of the offered traffic, with the gap widest at moderate speeds.

Runs a reduced sweep (two seeds, half duration); the full five-seed version
lives in the acceptance suite.
"""

from cbrsim import ExperimentPlan, Protocol, ScenarioConfig, SweepAxis, run_sweep

plan = ExperimentPlan(
    base=ScenarioConfig(
        node_count=25,
        area_width=500.0,
        area_height=500.0,
        min_speed=0.1,
        sim_duration=150.0,
        hello_interval=1.0,
        neighbor_timeout=3.0,
        formation_grace=30.0,
        flow_count=10,
        packet_rate=4.0,
    ),
    axis=SweepAxis.MAX_SPEED,
    values=(10.0, 20.0, 30.0),
    protocols=(Protocol.CBRP, Protocol.CROSS_CBRP),
    seeds=(0, 1),
)

result = run_sweep(plan, "demo_speed_sweep")

print(f"{'speed':>6} {'protocol':>12} {'head changes':>13} {'pdr':>8} {'kbit/s':>8}")
for (speed, protocol), stats in result.summary.items():
    print(
        f"{speed:>6g} {protocol:>12} {stats['ch_changes'].mean:>13.1f} "
        f"{stats['pdr'].mean:>8.4f} {stats['throughput_bps'].mean / 1000:>8.1f}"
    )
print()
print("full tables: demo_speed_sweep/report.txt")

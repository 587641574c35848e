"""Push the network into congestion by raising the per-flow packet rate.

Over a deliberately narrow 32 kbit/s link, relays saturate as the offered
rate climbs: queues fill, end-to-end delay stretches, and the delivery ratio
slides.  Cluster-head churn, by contrast, barely reacts: hellos jump ahead of
queued data, so the clustering plane rides out congestion that cripples the
data plane.
"""

from cbrsim import ExperimentPlan, Protocol, ScenarioConfig, SweepAxis, run_sweep

plan = ExperimentPlan(
    base=ScenarioConfig(
        node_count=25,
        area_width=500.0,
        area_height=500.0,
        min_speed=0.1,
        max_speed=20.0,
        sim_duration=150.0,
        hello_interval=1.0,
        neighbor_timeout=3.0,
        formation_grace=30.0,
        link_rate=32_000.0,
        flow_count=10,
    ),
    axis=SweepAxis.PACKET_RATE,
    values=(1.0, 2.0, 4.0, 8.0),
    protocols=(Protocol.CBRP, Protocol.CROSS_CBRP),
    seeds=(0, 1),
)

result = run_sweep(plan, "demo_rate_sweep")

print(f"{'rate':>6} {'protocol':>12} {'head changes':>13} {'pdr':>8} {'delay s':>9}")
for (rate, protocol), stats in result.summary.items():
    print(
        f"{rate:>6g} {protocol:>12} {stats['ch_changes'].mean:>13.1f} "
        f"{stats['pdr'].mean:>8.4f} {stats['mean_delay_s'].mean:>9.3f}"
    )
print()
print("full tables: demo_rate_sweep/report.txt")

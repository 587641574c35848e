"""Run accounting: per-event counters, the five per-run performance measures,
and aggregation across replications."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import Role
from .config import ScenarioConfig
from .errors import InvariantError

# Data-packet fates; every emitted packet ends in exactly one of these.
FATE_DELIVERED = "delivered"
FATE_QUEUE = "drop_queue"
FATE_NO_ROUTE = "drop_no_route"
FATE_FORWARD_FAIL = "drop_forward_fail"
FATE_IN_FLIGHT = "in_flight"


@dataclass
class MetricsLedger:
    """Counters and event logs accumulated by one simulation run."""

    formation_grace: float
    ch_changes: int = 0
    role_changes: list[tuple[float, int, str, str]] = field(default_factory=list)
    data_sent: int = 0
    data_delivered: int = 0
    delivered_bytes: int = 0
    hello_sent: int = 0
    rreq_sent: int = 0
    rrep_sent: int = 0
    latencies: list[float] = field(default_factory=list)
    drop_queue: int = 0
    drop_no_route: int = 0
    drop_forward_fail: int = 0
    in_flight_at_horizon: int = 0
    rreq_losses: int = 0
    rrep_losses: int = 0

    @property
    def control_packets_sent(self) -> int:
        return self.hello_sent + self.rreq_sent + self.rrep_sent

    def record_role_change(
        self, node_id: int, old_role: Role, new_role: Role, now: float
    ) -> None:
        """Log every transition; count a cluster-head change only when exactly
        one side of the transition is the head role and formation is over."""
        if old_role is new_role:
            raise ValueError("not a role change")
        self.role_changes.append((now, node_id, old_role.value, new_role.value))
        involves_head = (old_role is Role.CLUSTER_HEAD) != (new_role is Role.CLUSTER_HEAD)
        if involves_head and now > self.formation_grace:
            self.ch_changes += 1

    def record_delivery(self, latency: float, size_bytes: int) -> None:
        self.data_delivered += 1
        self.delivered_bytes += size_bytes
        self.latencies.append(latency)

    def record_drop(self, cause: str) -> None:
        if cause == FATE_QUEUE:
            self.drop_queue += 1
        elif cause == FATE_NO_ROUTE:
            self.drop_no_route += 1
        elif cause == FATE_FORWARD_FAIL:
            self.drop_forward_fail += 1
        else:
            raise ValueError(f"unknown drop cause {cause!r}")


@dataclass(frozen=True)
class RunReport:
    """One row of results; the CSV contract for a single simulation run."""

    protocol: str
    seed: int
    max_speed: float
    packet_rate: float
    ch_changes: int
    pdr: float
    throughput_bps: float
    overhead_pkts: int
    mean_delay_s: float
    throughput_pps: float
    data_sent: int
    data_delivered: int
    drop_queue: int
    drop_no_route: int
    drop_forward_fail: int
    in_flight_at_horizon: int
    hello_sent: int
    rreq_sent: int
    rrep_sent: int
    rreq_losses: int
    rrep_losses: int


CSV_COLUMNS = [
    "protocol",
    "seed",
    "max_speed",
    "packet_rate",
    "ch_changes",
    "pdr",
    "throughput_bps",
    "overhead_pkts",
    "mean_delay_s",
    "throughput_pps",
    "data_sent",
    "data_delivered",
    "drop_queue",
    "drop_no_route",
    "drop_forward_fail",
    "in_flight_at_horizon",
    "hello_sent",
    "rreq_sent",
    "rrep_sent",
    "rreq_losses",
    "rrep_losses",
]

_INT_COLUMNS = {
    "seed", "ch_changes", "overhead_pkts", "data_sent", "data_delivered",
    "drop_queue", "drop_no_route", "drop_forward_fail", "in_flight_at_horizon",
    "hello_sent", "rreq_sent", "rrep_sent", "rreq_losses", "rrep_losses",
}


def report_to_row(report: RunReport) -> list[str]:
    return [str(getattr(report, col)) for col in CSV_COLUMNS]


def report_from_row(row: list[str]) -> RunReport:
    values = {}
    for col, text in zip(CSV_COLUMNS, row):
        if col == "protocol":
            values[col] = text
        elif col in _INT_COLUMNS:
            values[col] = int(text)
        else:
            values[col] = float(text)
    return RunReport(**values)


def finalize(ledger: MetricsLedger, cfg: ScenarioConfig) -> RunReport:
    """Fold a completed run's ledger into the five headline measures.

    A run that sent no data reports PDR and mean delay as nan rather than
    failing on the division.
    """
    sent = ledger.data_sent
    total_classified = (
        ledger.data_delivered
        + ledger.drop_queue
        + ledger.drop_no_route
        + ledger.drop_forward_fail
        + ledger.in_flight_at_horizon
    )
    if total_classified != sent:
        raise InvariantError(
            f"packet conservation broken: sent {sent}, classified {total_classified}"
        )
    if len(ledger.latencies) != ledger.data_delivered:
        raise InvariantError("latency sample count does not match deliveries")
    pdr = ledger.data_delivered / sent if sent else math.nan
    mean_delay = (
        sum(ledger.latencies) / len(ledger.latencies) if ledger.latencies else math.nan
    )
    return RunReport(
        protocol=cfg.protocol.value,
        seed=cfg.rng_seed,
        max_speed=cfg.max_speed,
        packet_rate=cfg.packet_rate,
        ch_changes=ledger.ch_changes,
        pdr=pdr,
        throughput_bps=ledger.delivered_bytes * 8.0 / cfg.sim_duration,
        overhead_pkts=ledger.control_packets_sent,
        mean_delay_s=mean_delay,
        throughput_pps=ledger.data_delivered / cfg.sim_duration,
        data_sent=sent,
        data_delivered=ledger.data_delivered,
        drop_queue=ledger.drop_queue,
        drop_no_route=ledger.drop_no_route,
        drop_forward_fail=ledger.drop_forward_fail,
        in_flight_at_horizon=ledger.in_flight_at_horizon,
        hello_sent=ledger.hello_sent,
        rreq_sent=ledger.rreq_sent,
        rrep_sent=ledger.rrep_sent,
        rreq_losses=ledger.rreq_losses,
        rrep_losses=ledger.rrep_losses,
    )


SUMMARY_METRICS = ["ch_changes", "pdr", "throughput_bps", "overhead_pkts", "mean_delay_s"]

# Direction of improvement when comparing the mobility-aware variant against
# the baseline: lower is better for churn and delay, higher for the rest.
LOWER_IS_BETTER = {"ch_changes", "mean_delay_s", "overhead_pkts"}


@dataclass(frozen=True)
class MetricStats:
    mean: float
    stddev: float | None  # None marks n/a (single run)
    n: int


def aggregate(reports: list[RunReport]) -> dict[str, MetricStats]:
    """Mean and sample standard deviation per metric over replications.

    All reports must describe the same cell (protocol and sweep values equal,
    only the seed varying).
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    first = reports[0]
    for r in reports[1:]:
        if (r.protocol, r.max_speed, r.packet_rate) != (
            first.protocol,
            first.max_speed,
            first.packet_rate,
        ):
            raise ValueError(
                "heterogeneous configs: aggregation requires identical "
                "protocol and sweep values across reports"
            )
    stats = {}
    for metric in SUMMARY_METRICS:
        values = np.array([getattr(r, metric) for r in reports], dtype=float)
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1)) if len(values) > 1 else None
        stats[metric] = MetricStats(mean=mean, stddev=std, n=len(values))
    return stats


@dataclass(frozen=True)
class PairedComparison:
    metric: str
    baseline_mean: float
    variant_mean: float
    per_seed_delta: dict[int, float]  # variant - baseline, per shared seed
    improvement_pct: float  # positive when the variant is better


def paired_comparison(
    baseline: list[RunReport], variant: list[RunReport]
) -> list[PairedComparison]:
    """Seed-matched comparison of two protocol variants on shared seeds."""
    base_by_seed = {r.seed: r for r in baseline}
    var_by_seed = {r.seed: r for r in variant}
    shared = sorted(base_by_seed.keys() & var_by_seed.keys())
    if not shared:
        raise ValueError("no shared seeds between the two report sets")
    rows = []
    for metric in SUMMARY_METRICS:
        base_vals = [getattr(base_by_seed[s], metric) for s in shared]
        var_vals = [getattr(var_by_seed[s], metric) for s in shared]
        base_mean = float(np.mean(base_vals))
        var_mean = float(np.mean(var_vals))
        deltas = {s: v - b for s, b, v in zip(shared, base_vals, var_vals)}
        if base_mean == 0 or math.isnan(base_mean) or math.isnan(var_mean):
            pct = math.nan
        elif metric in LOWER_IS_BETTER:
            pct = (base_mean - var_mean) / base_mean * 100.0
        else:
            pct = (var_mean - base_mean) / base_mean * 100.0
        rows.append(
            PairedComparison(
                metric=metric,
                baseline_mean=base_mean,
                variant_mean=var_mean,
                per_seed_delta=deltas,
                improvement_pct=pct,
            )
        )
    return rows

"""Command-line entry point: single runs, speed/rate sweeps, paired protocol
comparison, and report emission.

Outputs land in the --out directory: ``runs.csv`` (one row per run),
``summary.csv`` (per-cell means and standard deviations), and ``report.txt``
(human-readable tables, including the paired protocol comparison).  All
output is deterministic: rerunning the same command reproduces the files
byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .config import (
    Protocol,
    ScenarioConfig,
    _FIELD_PARSERS,
    parse_config,
    parse_protocol,
    serialize_config,
)
from .engine import Simulation
from .errors import ConfigError, InvariantError
from .metrics import (
    CSV_COLUMNS,
    SUMMARY_METRICS,
    RunReport,
    aggregate,
    paired_comparison,
    report_from_row,
    report_to_row,
)

# Headline improvement figures from the protocols' original evaluation,
# echoed in report.txt as context only; nothing is gated on them.
REFERENCE_IMPROVEMENTS = [
    ("ch_changes vs speed", "37% fewer cluster-head changes on average"),
    ("pdr vs speed", "about 9% higher packet delivery ratio"),
    ("throughput vs speed", "about 8.5% higher throughput"),
    ("ch_changes vs rate", "about 30% fewer changes at low rate, 10% at high"),
]


class SweepAxis(Enum):
    NONE = "none"
    MAX_SPEED = "speed"
    PACKET_RATE = "rate"


@dataclass(frozen=True)
class ExperimentPlan:
    """Cross product of sweep values, protocol variants, and seeds.

    Seeds repeat across protocols so variant comparisons are paired on
    identical placements, mobility, and traffic.
    """

    base: ScenarioConfig
    axis: SweepAxis
    values: tuple[float, ...]
    protocols: tuple[Protocol, ...]
    seeds: tuple[int, ...]

    def cells(self):
        axis_values = self.values if self.axis is not SweepAxis.NONE else (None,)
        for value in axis_values:
            for protocol in self.protocols:
                for seed in self.seeds:
                    yield value, protocol, seed

    def config_for(self, value, protocol: Protocol, seed: int) -> ScenarioConfig:
        overrides = {"protocol": protocol, "rng_seed": seed}
        if self.axis is SweepAxis.MAX_SPEED:
            overrides["max_speed"] = value
        elif self.axis is SweepAxis.PACKET_RATE:
            overrides["packet_rate"] = value
        return self.base.with_overrides(**overrides)


@dataclass
class SweepResult:
    """Everything a sweep produced: raw rows, per-cell aggregates, file paths."""

    plan: ExperimentPlan
    reports: dict[tuple, RunReport]  # (axis value, protocol value, seed) -> report
    summary: dict  # (axis value, protocol value) -> {metric: MetricStats}
    out_dir: Path

    def cell_reports(self, value, protocol_value: str) -> list[RunReport]:
        return [
            r
            for (v, p, _), r in sorted(self.reports.items())
            if v == value and p == protocol_value
        ]


def run_single(cfg: ScenarioConfig, *, trace: bool = False) -> RunReport:
    """Execute one simulation to its horizon and return the report row."""
    return Simulation(cfg, trace=trace).run()


def _axis_value_of(report: RunReport, axis: SweepAxis):
    if axis is SweepAxis.PACKET_RATE:
        return report.packet_rate
    if axis is SweepAxis.MAX_SPEED:
        return report.max_speed
    return None


def run_sweep(
    plan: ExperimentPlan,
    out_dir: str | Path,
    *,
    resume: bool = False,
    trace: bool = False,
    last_sim_holder: list | None = None,
) -> SweepResult:
    """Execute a plan's run set, writing runs.csv incrementally plus the
    summary artifacts.  With ``resume``, cells already present in runs.csv
    are reused instead of re-simulated."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs_path = out / "runs.csv"
    existing: dict[tuple, RunReport] = {}
    if resume and runs_path.exists():
        for report in read_runs_csv(runs_path):
            key = (report.protocol, report.seed, report.max_speed, report.packet_rate)
            existing[key] = report
    reports: dict[tuple, RunReport] = {}
    with open(runs_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for value, protocol, seed in plan.cells():
            cfg = plan.config_for(value, protocol, seed)
            key = (cfg.protocol.value, cfg.rng_seed, cfg.max_speed, cfg.packet_rate)
            report = existing.get(key)
            if report is None:
                sim = Simulation(cfg, trace=trace)
                if last_sim_holder is not None:
                    last_sim_holder[:] = [sim]
                report = sim.run()
                if trace:
                    _write_traces(sim, out, cfg)
            reports[(value, protocol.value, seed)] = report
            writer.writerow(report_to_row(report))
            fh.flush()
    summary = summarize_runs(read_runs_csv(runs_path), plan.axis)
    result = SweepResult(plan=plan, reports=reports, summary=summary, out_dir=out)
    write_summary_csv(out / "summary.csv", summary, plan.axis)
    (out / "report.txt").write_text(format_report(result), encoding="utf-8")
    return result


def read_runs_csv(path: str | Path) -> list[RunReport]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_COLUMNS:
            raise ConfigError(f"unexpected runs.csv header in {path}")
        return [report_from_row(row) for row in reader]


def summarize_runs(reports: list[RunReport], axis: SweepAxis) -> dict:
    """Group reports into (axis value, protocol) cells and aggregate each.

    Works from parsed runs.csv rows alone, which is the reproducibility
    contract for summary.csv.
    """
    cells: dict[tuple, list[RunReport]] = {}
    for report in reports:
        key = (_axis_value_of(report, axis), report.protocol)
        cells.setdefault(key, []).append(report)
    return {
        key: aggregate(group)
        for key, group in sorted(cells.items(), key=lambda kv: (kv[0][0] is None, kv[0]))
    }


def write_summary_csv(path: Path, summary: dict, axis: SweepAxis) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["sweep_axis", "axis_value", "protocol", "n_runs"]
        for metric in SUMMARY_METRICS:
            header += [f"{metric}_mean", f"{metric}_std"]
        writer.writerow(header)
        for (value, protocol), stats in summary.items():
            n = stats[SUMMARY_METRICS[0]].n
            row = [axis.value, "" if value is None else value, protocol, n]
            for metric in SUMMARY_METRICS:
                cell = stats[metric]
                row.append(cell.mean)
                row.append("" if cell.stddev is None else cell.stddev)
            writer.writerow(row)


def format_report(result: SweepResult) -> str:
    plan = result.plan
    summary = result.summary
    lines = ["simulation sweep report", "=" * 40, ""]
    lines.append("base configuration:")
    for cfg_line in serialize_config(plan.base).strip().splitlines():
        lines.append(f"  {cfg_line}")
    if plan.base.flow_count_was_defaulted:
        lines.append(
            f"  # flow_count defaulted to {plan.base.effective_flow_count} "
            "(disjoint endpoints capped at node_count/2, at most 50)"
        )
    lines.append("")
    lines.append(f"sweep axis: {plan.axis.value}")
    lines.append(f"seeds: {', '.join(str(s) for s in plan.seeds)}")
    lines.append("")
    lines.append("per-cell means (stddev) over seeds:")
    lines.append(
        f"{'axis':>8} {'protocol':>12}" + "".join(f" {m:>24}" for m in SUMMARY_METRICS)
    )
    for (value, protocol), stats in summary.items():
        cells = []
        for metric in SUMMARY_METRICS:
            s = stats[metric]
            std = "n/a" if s.stddev is None else f"{s.stddev:.3g}"
            cells.append(f"{s.mean:.6g} ({std})".rjust(24))
        axis_text = "-" if value is None else f"{value:g}"
        lines.append(f"{axis_text:>8} {protocol:>12}" + "".join(f" {c}" for c in cells))
    lines.append("")
    protocols_present = {p for _, p in summary.keys()}
    if {Protocol.CBRP.value, Protocol.CROSS_CBRP.value} <= protocols_present:
        lines.append("paired comparison (mobility-aware variant vs baseline, shared seeds):")
        lines.append(
            f"{'axis':>8} {'metric':>16} {'baseline':>14} {'variant':>14} {'improvement':>12}"
        )
        axis_values = []
        for value, _ in summary.keys():
            if value not in axis_values:
                axis_values.append(value)
        for value in axis_values:
            base_reports = result.cell_reports(value, Protocol.CBRP.value)
            var_reports = result.cell_reports(value, Protocol.CROSS_CBRP.value)
            if not base_reports or not var_reports:
                continue
            for comparison in paired_comparison(base_reports, var_reports):
                axis_text = "-" if value is None else f"{value:g}"
                lines.append(
                    f"{axis_text:>8} {comparison.metric:>16} "
                    f"{comparison.baseline_mean:>14.6g} {comparison.variant_mean:>14.6g} "
                    f"{comparison.improvement_pct:>11.2f}%"
                )
        lines.append("")
        lines.append("reference improvements from the protocols' original evaluation")
        lines.append("(context only, not gated):")
        for name, text in REFERENCE_IMPROVEMENTS:
            lines.append(f"  {name}: {text}")
    lines.append("")
    return "\n".join(lines)


def _write_traces(sim: Simulation, out: Path, cfg: ScenarioConfig) -> None:
    tag = f"{cfg.protocol.value}_seed{cfg.rng_seed}_v{cfg.max_speed:g}_r{cfg.packet_rate:g}"
    flow_rows = [
        (f.flow_id, f.src, f.dst, f.rate, f.packet_size, f.start_time)
        for f in sim.flows
    ]
    tables = [
        (f"events_{tag}.csv", ["time", "node", "event_kind", "detail"], sim.event_trace),
        (f"mobility_{tag}.csv", ["time", "node_id", "x", "y"], sim.mobility_trace),
        (
            f"clusters_{tag}.csv",
            ["time", "node", "role", "head_id", "M_value"],
            sim.cluster_trace,
        ),
        (
            f"route_events_{tag}.csv",
            ["time", "event", "flow_id", "route_len"],
            sim.route_event_trace,
        ),
        (
            f"flows_{tag}.csv",
            ["flow_id", "src", "dst", "rate", "packet_size", "start_time"],
            flow_rows,
        ),
    ]
    for name, header, rows in tables:
        with open(out / name, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simrun",
        description="Deterministic cluster-routing simulator: single runs and sweeps.",
    )
    parser.add_argument("--config", help="scenario file (key=value lines)")
    parser.add_argument(
        "--protocol",
        choices=["cbrp", "cross-cbrp", "both"],
        help="protocol variant to run (default: from config)",
    )
    parser.add_argument(
        "--sweep",
        help="sweep axis and values, e.g. speed=10,20,30 or rate=1,2,4,8",
    )
    seed_group = parser.add_mutually_exclusive_group()
    seed_group.add_argument("--seeds", type=int, help="run seeds 0..N-1")
    seed_group.add_argument("--seed", type=int, help="run a single seed")
    parser.add_argument("--out", default="simout", help="output directory")
    parser.add_argument("--trace", action="store_true", help="export event traces")
    parser.add_argument(
        "--resume", action="store_true", help="skip runs already present in runs.csv"
    )
    # Every config key is also a long flag; CLI beats file beats defaults.
    for key in _FIELD_PARSERS:
        if key == "protocol":
            continue
        parser.add_argument(f"--{key}", type=str, default=None, help=argparse.SUPPRESS)
    parser.add_argument("--area", type=str, default=None, help="area as WxH meters")
    return parser


def plan_from_args(args) -> ExperimentPlan:
    if args.config:
        base = parse_config(Path(args.config).read_text(encoding="utf-8"))
    else:
        base = ScenarioConfig()
    overrides = {}
    for key, value_parser in _FIELD_PARSERS.items():
        if key == "protocol":
            continue
        raw = getattr(args, key, None)
        if raw is not None:
            try:
                overrides[key] = value_parser(raw)
            except ConfigError:
                raise
            except ValueError:
                raise ConfigError(f"bad value {raw!r} for --{key}") from None
    if args.area is not None:
        w_text, _, h_text = args.area.lower().partition("x")
        try:
            overrides["area_width"] = float(w_text)
            overrides["area_height"] = float(h_text)
        except ValueError:
            raise ConfigError(f"--area must look like 1000x1000, got {args.area!r}") from None
    if overrides:
        base = base.with_overrides(**overrides)
    if args.protocol == "both":
        protocols = (Protocol.CBRP, Protocol.CROSS_CBRP)
    elif args.protocol:
        protocols = (parse_protocol(args.protocol),)
    else:
        protocols = (base.protocol,)
    if args.seeds is not None:
        if args.seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        seeds = tuple(range(args.seeds))
    elif args.seed is not None:
        seeds = (args.seed,)
    else:
        seeds = (base.rng_seed,)
    axis = SweepAxis.NONE
    values: tuple[float, ...] = ()
    if args.sweep:
        name, _, value_text = args.sweep.partition("=")
        name = name.strip().lower()
        if name == "speed":
            axis = SweepAxis.MAX_SPEED
        elif name == "rate":
            axis = SweepAxis.PACKET_RATE
        else:
            raise ConfigError(f"unknown sweep axis {name!r} (expected speed or rate)")
        try:
            values = tuple(float(v) for v in value_text.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"bad sweep values {value_text!r}") from None
        if not values:
            raise ConfigError("sweep requires at least one value")
    return ExperimentPlan(base=base, axis=axis, values=values, protocols=protocols, seeds=seeds)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    sim_holder: list = []
    try:
        plan = plan_from_args(args)
        run_sweep(plan, out, resume=args.resume, trace=args.trace, last_sim_holder=sim_holder)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        dump_path = _dump_recent_events(out, sim_holder)
        print(
            f"internal invariant breach: {exc}\nevent-trace tail: {dump_path}",
            file=sys.stderr,
        )
        return 3
    return 0


def _dump_recent_events(out: Path, sim_holder: list) -> Path | str:
    if not sim_holder:
        return "<no simulation started>"
    try:
        out.mkdir(parents=True, exist_ok=True)
        dump_path = out / "invariant_trace.csv"
        with open(dump_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["time", "event_kind", "payload_head"])
            for time, kind, head in sim_holder[0].recent_events():
                writer.writerow([time, kind, head])
        return dump_path
    except OSError:
        return "<unwritable>"


if __name__ == "__main__":
    sys.exit(main())

"""Outage ledger, KPI normalization, scheme comparison, and artifact I/O.

The event log is the source of truth: every KPI in a report can be
recomputed from the ``events.csv`` rows alone (plus the scenario's UE count
and accounting window), and the engine builds its report through the same
code path.

File formats (all comma-separated with a header row):
  events.csv  : time_s,ue,kind,detail      detail is ;-separated key=value
  ledger.csv  : ue,start_s,end_s,cause
  kpi_report.csv : scheme,kpi,value
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

CAUSE_HANDOVER = "handover_interruption"
CAUSE_OTHER = "other_mobility"
CAUSES = (CAUSE_HANDOVER, CAUSE_OTHER)

TIME_FMT = "{:.6f}"
VALUE_FMT = "{:.10g}"


@dataclass(frozen=True)
class OutageInterval:
    start: float
    end: float
    cause: str


@dataclass
class OutageLedger:
    """Append-only per-UE outage intervals."""

    n_ue: int
    intervals: dict[int, list[OutageInterval]] = field(default_factory=dict)

    def add(self, ue: int, start: float, end: float, cause: str) -> OutageInterval:
        if cause not in CAUSES:
            raise ValueError(f"unknown outage cause {cause!r}")
        if end < start:
            raise ValueError(f"interval end {end} before start {start}")
        bucket = self.intervals.setdefault(ue, [])
        if bucket and start < bucket[-1].end - 1e-9:
            raise ValueError(
                f"ue {ue}: interval [{start}, {end}] overlaps previous "
                f"[{bucket[-1].start}, {bucket[-1].end}]")
        iv = OutageInterval(start, end, cause)
        bucket.append(iv)
        return iv

    def all_intervals(self):
        for ue in sorted(self.intervals):
            for iv in self.intervals[ue]:
                yield ue, iv

    def total_duration(self, cause: str | None = None,
                       clip: tuple[float, float] | None = None) -> float:
        total = 0.0
        for _, iv in self.all_intervals():
            if cause is not None and iv.cause != cause:
                continue
            start, end = iv.start, iv.end
            if clip is not None:
                start = max(start, clip[0])
                end = min(end, clip[1])
            if end > start:
                total += end - start
        return total


def outage_percent(ledger: OutageLedger, n_ue: int,
                   simulated_time_s: float) -> float:
    """100 * sum of per-UE outage durations / (n_ue * simulated time)."""
    if simulated_time_s <= 0:
        raise ValueError("simulated_time_s must be > 0")
    return 100.0 * ledger.total_duration() / (n_ue * simulated_time_s)


def normalize(count: float, n_ue: int, simulated_time_s: float) -> float:
    """Event count per UE per minute."""
    if simulated_time_s <= 0:
        raise ValueError("simulated_time_s must be > 0")
    return count / (n_ue * simulated_time_s / 60.0)


@dataclass
class Event:
    time: float
    ue: int
    kind: str
    detail: dict[str, str] = field(default_factory=dict)

    def detail_str(self) -> str:
        return ";".join(f"{k}={v}" for k, v in self.detail.items())


def format_detail_value(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return TIME_FMT.format(x)
    return str(x)


KPI_NAMES = (
    "successful_handovers_per_ue_min",
    "rach_less_handovers_per_ue_min",
    "rach_aided_handovers_per_ue_min",
    "mobility_failures_per_ue_min",
    "outage_total_pct",
    "outage_handover_pct",
    "outage_other_pct",
    "radio_msgs_per_ue_min",
    "xn_msgs_per_ue_min",
)

COUNT_NAMES = (
    "count_successful_handovers",
    "count_rach_less",
    "count_rach_aided",
    "count_mobility_failures",
    "count_hof",
    "count_rlf",
    "count_radio_msgs",
    "count_xn_msgs",
)


@dataclass
class KpiReport:
    scheme: str
    n_ue: int
    accounting_time_s: float
    values: dict[str, float]
    scenario_key: tuple = ()

    def __getitem__(self, name: str) -> float:
        return self.values[name]


def build_report(events: list[Event], scheme: str, n_ue: int,
                 warmup_s: float, t_sim_s: float,
                 scenario_key: tuple = ()) -> KpiReport:
    """Derive every KPI from the event log.

    Counting rule: an event contributes when its time stamp is at or after
    the warm-up boundary; outage intervals are clipped to the accounting
    window [warmup, t_sim].
    """
    window = t_sim_s - warmup_s
    counts = dict.fromkeys(COUNT_NAMES, 0)
    outage_ho = 0.0
    outage_other = 0.0
    for ev in events:
        if ev.kind == "handover":
            if ev.time < warmup_s:
                continue
            counts["count_successful_handovers"] += 1
            if ev.detail["mode"] == "rach_less":
                counts["count_rach_less"] += 1
            else:
                counts["count_rach_aided"] += 1
        elif ev.kind == "hof":
            if ev.time < warmup_s:
                continue
            counts["count_hof"] += 1
            counts["count_mobility_failures"] += 1
        elif ev.kind == "rlf":
            if ev.time < warmup_s:
                continue
            counts["count_rlf"] += 1
            counts["count_mobility_failures"] += 1
        elif ev.kind == "signal":
            if ev.time < warmup_s:
                continue
            if ev.detail["itf"] == "radio":
                counts["count_radio_msgs"] += 1
            else:
                counts["count_xn_msgs"] += 1
        elif ev.kind == "outage":
            start = max(float(ev.detail["start"]), warmup_s)
            end = min(float(ev.detail["end"]), t_sim_s)
            if end > start:
                if ev.detail["cause"] == CAUSE_HANDOVER:
                    outage_ho += end - start
                else:
                    outage_other += end - start

    denom_pct = 100.0 / (n_ue * window)
    ho_pct = outage_ho * denom_pct
    other_pct = outage_other * denom_pct
    values: dict[str, float] = {}
    values["rach_less_handovers_per_ue_min"] = normalize(
        counts["count_rach_less"], n_ue, window)
    values["rach_aided_handovers_per_ue_min"] = normalize(
        counts["count_rach_aided"], n_ue, window)
    # total as the sum of its parts keeps the ledger identity exact
    values["successful_handovers_per_ue_min"] = (
        values["rach_less_handovers_per_ue_min"]
        + values["rach_aided_handovers_per_ue_min"])
    values["mobility_failures_per_ue_min"] = normalize(
        counts["count_mobility_failures"], n_ue, window)
    values["outage_handover_pct"] = ho_pct
    values["outage_other_pct"] = other_pct
    values["outage_total_pct"] = ho_pct + other_pct
    values["radio_msgs_per_ue_min"] = normalize(
        counts["count_radio_msgs"], n_ue, window)
    values["xn_msgs_per_ue_min"] = normalize(
        counts["count_xn_msgs"], n_ue, window)
    for name in COUNT_NAMES:
        values[name] = float(counts[name])
    return KpiReport(scheme=scheme, n_ue=n_ue, accounting_time_s=window,
                     values=values, scenario_key=scenario_key)


def compare_schemes(report_a: KpiReport, report_b: KpiReport) -> dict[str, float]:
    """Relative deltas (A - B) / A per KPI; A is the baseline scheme."""
    if report_a.scenario_key != report_b.scenario_key:
        raise ValueError("cannot compare reports from different scenarios")
    deltas = {}
    for name in KPI_NAMES:
        a = report_a.values[name]
        b = report_b.values[name]
        deltas[name] = 0.0 if a == b else (a - b) / a
    return deltas


def mean_report(reports: list[KpiReport]) -> KpiReport:
    """Per-KPI arithmetic mean over same-scenario replications."""
    if not reports:
        raise ValueError("need at least one report")
    first = reports[0]
    for r in reports[1:]:
        if r.scenario_key != first.scenario_key or r.scheme != first.scheme:
            raise ValueError("cannot average reports from different scenarios")
    names = list(first.values)
    values = {
        n: sum(r.values[n] for r in reports) / len(reports) for n in names
    }
    return KpiReport(scheme=first.scheme, n_ue=first.n_ue,
                     accounting_time_s=first.accounting_time_s,
                     values=values, scenario_key=first.scenario_key)


# --- CSV I/O -----------------------------------------------------------------

def events_to_csv(events: list[Event]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_s", "ue", "kind", "detail"])
    for ev in events:
        w.writerow([TIME_FMT.format(ev.time), ev.ue, ev.kind, ev.detail_str()])
    return buf.getvalue()


def events_from_csv(text: str) -> list[Event]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["time_s", "ue", "kind", "detail"]:
        raise ValueError("events csv: bad or missing header")
    events = []
    for time_s, ue, kind, detail in rows[1:]:
        parsed = {}
        if detail:
            for item in detail.split(";"):
                k, v = item.split("=", 1)
                parsed[k] = v
        events.append(Event(time=float(time_s), ue=int(ue), kind=kind,
                            detail=parsed))
    return events


def ledger_to_csv(ledger: OutageLedger) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ue", "start_s", "end_s", "cause"])
    for ue, iv in ledger.all_intervals():
        w.writerow([ue, TIME_FMT.format(iv.start), TIME_FMT.format(iv.end),
                    iv.cause])
    return buf.getvalue()


def report_to_csv(reports: list[KpiReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "kpi", "value"])
    for report in reports:
        for name in KPI_NAMES + COUNT_NAMES:
            w.writerow([report.scheme, name, VALUE_FMT.format(report.values[name])])
    return buf.getvalue()


def report_from_csv(text: str) -> dict[str, dict[str, float]]:
    """Parse a report csv into {scheme: {kpi: value}}."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["scheme", "kpi", "value"]:
        raise ValueError("kpi report csv: bad or missing header")
    out: dict[str, dict[str, float]] = {}
    for scheme, kpi, value in rows[1:]:
        out.setdefault(scheme, {})[kpi] = float(value)
    return out


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text)

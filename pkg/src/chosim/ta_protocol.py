"""Early timing-advance acquisition: signaling schedule, TA validity,
interruption-time accounting, and message-overhead tallies.

The signaling sequences are data, not code: ``data/message_schedules.txt``
lists every message of the preparation, TA-acquisition, and execution
phases with its interface, send offset, transport delay, and fallibility.
A fallible radio message is lost when the serving-link RLQ is below the
out-of-sync threshold at its instant; a lost message ends the TA sequence
with no downstream transmissions, forcing a RACH-aided fallback at
execution time.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

XN_DELAY_MS = 5.0

# TA acquisition phases
TA_NONE = "none"
TA_RUNNING = "running"
TA_ACQUIRED = "acquired"
TA_FAILED_REPORT = "failed_step10"
TA_FAILED_CONFIG = "failed_step16"

PHASES = ("preparation", "ta_sequence", "exec_rach_less", "exec_rach_aided")


@dataclass
class TaState:
    """Per-prepared-target TA progress."""

    phase: str = TA_NONE
    t_acquired: float | None = None
    early_forwarding_active: bool = False
    retry_at: float | None = None

    def failed(self) -> bool:
        return self.phase in (TA_FAILED_REPORT, TA_FAILED_CONFIG)


def ta_valid(state: TaState, now: float, timer_s: float = 10.24) -> bool:
    """Acquired TA stays valid while the time-alignment timer runs."""
    if state.phase != TA_ACQUIRED or state.t_acquired is None:
        return False
    return now - state.t_acquired <= timer_s


@dataclass(frozen=True)
class MessageSpec:
    phase: str
    kind: str
    step: str           # figure step label, "-" where the figure has none
    interface: str      # radio | xn
    send_offset_ms: float
    delay_ms: float
    fallible: bool


def load_schedules(path=None) -> dict[str, list[MessageSpec]]:
    """Parse the schedule table file into per-phase message lists."""
    if path is None:
        text = (importlib.resources.files("chosim") / "data"
                / "message_schedules.txt").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    tables: dict[str, list[MessageSpec]] = {p: [] for p in PHASES}
    for lineno, line in enumerate(text.splitlines(), start=1):
        row = line.split("#", 1)[0].strip()
        if not row:
            continue
        parts = row.split()
        if len(parts) != 7:
            raise ValueError(
                f"message_schedules line {lineno}: expected 7 fields, got {row!r}")
        phase, kind, step, interface, send_ms, delay_ms, fallible = parts
        if phase not in tables:
            raise ValueError(f"message_schedules line {lineno}: bad phase {phase!r}")
        if interface not in ("radio", "xn"):
            raise ValueError(
                f"message_schedules line {lineno}: bad interface {interface!r}")
        spec = MessageSpec(
            phase=phase, kind=kind, step=step, interface=interface,
            send_offset_ms=float(send_ms), delay_ms=float(delay_ms),
            fallible=fallible not in ("0", "no", "false"),
        )
        if spec.interface == "xn" and spec.delay_ms != XN_DELAY_MS:
            raise ValueError(
                f"message_schedules line {lineno}: xn delay must be "
                f"{XN_DELAY_MS} ms")
        tables[phase].append(spec)
    return tables


def phase_counts(schedules: dict[str, list[MessageSpec]],
                 phase: str) -> tuple[int, int]:
    radio = sum(1 for m in schedules[phase] if m.interface == "radio")
    xn = sum(1 for m in schedules[phase] if m.interface == "xn")
    return radio, xn


@dataclass
class HandoverRecord:
    """Lifecycle footprint of one handover, for schedule-table tallies."""

    mode: str                 # rach_aided | rach_less
    preparations: int = 1
    ta_sequences_full: int = 0      # reached the final TA-config delivery
    ta_sequences_lost_at_report: int = 0

    def exec_phase(self) -> str:
        return "exec_rach_less" if self.mode == "rach_less" else "exec_rach_aided"


def tally_messages(record: HandoverRecord,
                   schedules: dict[str, list[MessageSpec]]) -> tuple[int, int]:
    """Expected (radio, xn) message counts for one handover's lifecycle."""
    prep_r, prep_x = phase_counts(schedules, "preparation")
    ta_r, ta_x = phase_counts(schedules, "ta_sequence")
    exec_r, exec_x = phase_counts(schedules, record.exec_phase())
    radio = (record.preparations * prep_r
             + record.ta_sequences_full * ta_r
             + record.ta_sequences_lost_at_report * 1
             + exec_r)
    xn = (record.preparations * prep_x
          + record.ta_sequences_full * ta_x
          + exec_x)
    return radio, xn


# --- interruption accounting -------------------------------------------------

@dataclass(frozen=True)
class BudgetComponent:
    index: int
    name: str
    ms: float


@dataclass(frozen=True)
class InterruptionBudget:
    """Intra-frequency handover interruption components for FR2.

    The component table reproduces the standard breakdown; the RACH-less
    totals are fixed protocol constants (partial synchronization with the
    target is assumed already established, which trims more than the bare
    PRACH components).
    """

    components: tuple[BudgetComponent, ...] = (
        BudgetComponent(1, "ue_processing", 20.0),
        BudgetComponent(2, "fine_time_tracking", 10.0),
        BudgetComponent(3, "ssb_post_processing_margin", 2.0),
        BudgetComponent(4, "first_prach_occasion_wait", 10.0),
        BudgetComponent(5, "prach_preamble_transmission", 0.125),
        BudgetComponent(6, "ul_grant_and_timing_advance", 1.25),
        BudgetComponent(7, "rrc_reconfiguration_complete", 1.0),
        BudgetComponent(8, "late_forwarding_interruption", 10.0),
    )
    rach_less_total_ms: float = 40.0

    def total_ms(self) -> float:
        return sum(c.ms for c in self.components)

    def sum_without(self, *indices: int) -> float:
        return sum(c.ms for c in self.components if c.index not in indices)

    def component(self, index: int) -> BudgetComponent:
        for c in self.components:
            if c.index == index:
                return c
        raise KeyError(index)


BUDGET = InterruptionBudget()


def interruption_time(rach_less: bool, early_forwarding: bool) -> float:
    """Handover interruption in ms for the scheme/forwarding combination."""
    if not rach_less:
        return BUDGET.total_ms()
    if early_forwarding:
        return BUDGET.rach_less_total_ms - BUDGET.component(8).ms
    return BUDGET.rach_less_total_ms

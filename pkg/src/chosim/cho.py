"""Conditional-handover trigger conditions and prepared-cell bookkeeping.

A trigger condition fires at a measurement instant when its inequality held
at every instant within the monitoring window ending there, i.e. after
ceil(window / measurement period) consecutive satisfying samples. Violating
samples reset the per-target counter.

Condition kinds:
  prep / acq : serving < target + offset   (preparation, TA acquisition)
  exec       : serving < target - offset   (execution)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .ta_protocol import TaState

KINDS = ("prep", "exec", "acq")


def sample_satisfied(kind: str, serving_db: float, target_db: float,
                     offset_db: float) -> bool:
    if kind in ("prep", "acq"):
        return serving_db < target_db + offset_db
    if kind == "exec":
        return serving_db < target_db - offset_db
    raise ValueError(f"unknown condition kind {kind!r}")


@dataclass
class TriggerCondition:
    """Windowed inequality monitor with per-target consecutive counters."""

    kind: str
    offset_db: float
    window_ms: float
    meas_period_ms: float
    counters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown condition kind {self.kind!r}")
        self.required = max(1, math.ceil(
            self.window_ms / self.meas_period_ms - 1e-9))

    def update(self, target, serving_db: float, target_db: float) -> bool:
        """Feed one measurement instant; returns True when the window fires."""
        if sample_satisfied(self.kind, serving_db, target_db, self.offset_db):
            self.counters[target] = self.counters.get(target, 0) + 1
        else:
            self.counters[target] = 0
        return self.counters[target] >= self.required

    def reset(self, target=None) -> None:
        if target is None:
            self.counters.clear()
        else:
            self.counters.pop(target, None)


@dataclass
class PreparedCell:
    cell: int
    prep_time: float
    ta: TaState = field(default_factory=TaState)
    release_count: int = 0  # reverse-condition window progress


@dataclass
class Execution:
    target: int
    mode: str                 # rach_aided | rach_less
    t_start: float
    t_complete: float | None  # None while a RACH window is still undecided
    t_hof_deadline: float | None
    ta_status: str
    early_forwarding: bool


@dataclass
class ChoState:
    """Per-UE CHO phase: prepared set plus at most one active transition."""

    prepared: dict[int, PreparedCell] = field(default_factory=dict)
    pending_prep: dict[int, float] = field(default_factory=dict)  # cell -> ready t
    executing: Optional[Execution] = None
    reestablish_until: float | None = None

    def is_idle(self) -> bool:
        return self.executing is None and self.reestablish_until is None


def choose_eviction(prepared: dict[int, PreparedCell], l3_db) -> int:
    """Prepared cell with the lowest current L3 quality; ties to lowest id."""
    if not prepared:
        raise ValueError("prepared set is empty")
    return min(sorted(prepared), key=lambda c: (l3_db[c], c))


def release_due(pc: PreparedCell, serving_db: float, target_db: float,
                o_prep_db: float, hysteresis_db: float,
                required: int) -> bool:
    """Reverse-of-preparation rule: serving clearly above target for a full
    window releases the prepared cell."""
    if serving_db > target_db + o_prep_db + hysteresis_db:
        pc.release_count += 1
    else:
        pc.release_count = 0
    return pc.release_count >= required

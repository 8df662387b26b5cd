"""Serving-beam selection, beam-failure detection and recovery, and RLF
declaration within the serving cell.

Recovery starts when the RLQ drops below the out-of-sync threshold, targets
the beam with the highest L1 RSRP at that moment, and retries at fixed
intervals. An attempt succeeds when the candidate link's SINR is at or above
the threshold; exhausting all attempts declares a radio link failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def select_serving_beam(l1_beams_dbm) -> int:
    """Index of the strongest beam; ties go to the lowest beam index."""
    values = np.asarray(l1_beams_dbm, dtype=float)
    if values.size == 0:
        raise ValueError("need at least one beam measurement")
    return int(np.argmax(values))


@dataclass
class Recovery:
    target_beam: int
    target_panel: int
    attempts_done: int = 0
    next_attempt_t: float = 0.0


@dataclass
class BeamFailureState:
    recovery: Recovery | None = None
    rlf_declared: bool = False
    actions: list = field(default_factory=list)  # per-step outcome notes

    def in_recovery(self) -> bool:
        return self.recovery is not None


def beam_failure_step(
    state: BeamFailureState,
    rlq_db: float,
    l1_beams_dbm,
    candidate_sinr_db,
    now: float,
    gamma_out_db: float,
    n_batt: int,
    t_batt_s: float,
    candidate_panel: int = 0,
) -> BeamFailureState:
    """Advance the failure/recovery machine by one step.

    candidate_sinr_db is the current SINR of the recovery target link; when
    no recovery runs it is ignored. Outcomes are appended to state.actions:
    ("recover", beam, panel) on success, ("rlf",) on exhaustion.
    """
    state.actions = []
    if state.rlf_declared:
        return state

    if state.recovery is None:
        if rlq_db < gamma_out_db:
            target = select_serving_beam(l1_beams_dbm)
            state.recovery = Recovery(
                target_beam=target,
                target_panel=candidate_panel,
                next_attempt_t=now + t_batt_s,
            )
        return state

    rec = state.recovery
    if now + 1e-12 >= rec.next_attempt_t:
        if candidate_sinr_db >= gamma_out_db:
            state.actions.append(("recover", rec.target_beam, rec.target_panel))
            state.recovery = None
            return state
        rec.attempts_done += 1
        rec.next_attempt_t += t_batt_s
        if rec.attempts_done >= n_batt:
            state.rlf_declared = True
            state.recovery = None
            state.actions.append(("rlf",))
    return state

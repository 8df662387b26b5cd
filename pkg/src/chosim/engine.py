"""Deterministic discrete-time simulation engine and replication runner.

One run is strictly single-threaded: per step the engine advances UEs,
updates the channel, runs the L1/L3 filters on SSB boundaries, updates
SINR/RLQ, steps the beam-failure machine, drives the CHO and TA state
machines, and finally delivers due signaling events from a deterministic
priority queue (ties broken by sequence number).

All randomness comes from one root seed, split per subsystem so toggling
a feature never shifts another subsystem's stream; the two schemes see
bit-identical channel and mobility realizations for the same seed.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import beam_mgmt, channel, cho, kpi, measurement, ta_protocol
from .config import ScenarioConfig, resolved_text, validate
from .deployment import advance_positions, build_topology, drop_ues, wrapped_vectors
from .sinr import RlqFilter, cell_interference_mw


class EventQueue:
    """Min-heap keyed by (time, sequence number)."""

    def __init__(self):
        self._heap: list = []
        self._seq = 0

    def push(self, time: float, payload) -> None:
        heapq.heappush(self._heap, (time, self._seq, payload))
        self._seq += 1

    def pop_due(self, now: float, eps: float = 1e-9):
        due = []
        while self._heap and self._heap[0][0] <= now + eps:
            due.append(heapq.heappop(self._heap))
        return due

    def __len__(self):
        return len(self._heap)


@dataclass
class TaSequenceCtx:
    ue: int
    target: int
    t0: float
    epoch: int
    failed: bool = False
    cancelled: bool = False


@dataclass
class QueuedMessage:
    ue: int
    target: int
    spec: ta_protocol.MessageSpec
    t_send: float
    epoch: int | None          # None = not cancellable by UE resets
    ta_ctx: TaSequenceCtx | None = None
    prep_cell: int | None = None


@dataclass
class PrepReady:
    ue: int
    cell: int
    epoch: int


@dataclass
class RunArtifacts:
    report: kpi.KpiReport
    events: list[kpi.Event]
    ledger: kpi.OutageLedger
    resolved_config: str

    def report_csv(self) -> str:
        return kpi.report_to_csv([self.report])

    def events_csv(self) -> str:
        return kpi.events_to_csv(self.events)

    def ledger_csv(self) -> str:
        return kpi.ledger_to_csv(self.ledger)

    def write(self, outdir: str | Path) -> None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "kpi_report.csv").write_text(self.report_csv())
        (out / "events.csv").write_text(self.events_csv())
        (out / "ledger.csv").write_text(self.ledger_csv())
        (out / "resolved_config.txt").write_text(self.resolved_config)


@dataclass
class _UEProtocol:
    """Per-UE protocol-side state (the array state lives on the engine)."""

    cho_state: cho.ChoState = field(default_factory=cho.ChoState)
    prep_cond: cho.TriggerCondition | None = None
    exec_cond: cho.TriggerCondition | None = None
    acq_cond: cho.TriggerCondition | None = None
    bf_state: beam_mgmt.BeamFailureState = field(
        default_factory=beam_mgmt.BeamFailureState)
    epoch: int = 0
    pending_start: float | None = None
    pending_cause: str | None = None
    oos_since: float | None = None


class Engine:
    def __init__(self, cfg: ScenarioConfig, record_traces: bool = False):
        validate(cfg)
        self.cfg = cfg
        self.record_traces = record_traces
        self.topo = build_topology(cfg.isd_m, cfg.n_sites)
        self.grid = channel.build_beam_grid(
            cfg.narrow_beam_gain_db, cfg.wide_beam_gain_db,
            cfg.narrow_beam_width_deg, cfg.wide_beam_width_deg,
            cfg.sidelobe_floor_db)
        self.schedules = ta_protocol.load_schedules()

        root = np.random.SeedSequence(cfg.seed)
        drop_ss, shadow_ss, fading_ss, err_ss = root.spawn(4)
        self.shadow_rng = np.random.default_rng(shadow_ss)
        self.err_rng = np.random.default_rng(err_ss)

        ues = drop_ues(cfg.n_ue, int(drop_ss.generate_state(1)[0]),
                       self.topo, cfg.ue_speed_mps)
        self.pos = np.stack([u.position for u in ues])
        self.heading = np.array([u.heading for u in ues])
        self.speed = cfg.ue_speed_mps

        U, C, B, P = cfg.n_ue, self.topo.n_cells, channel.N_BEAMS, channel.N_PANELS
        self.n_cells = C
        doppler = cfg.ue_speed_mps * cfg.fc_ghz * 1e9 / channel.SPEED_OF_LIGHT
        self.fading = channel.FastFading(
            (U, C, B), cfg.n_fading_osc, doppler, cfg.dt_s,
            np.random.default_rng(fading_ss))

        self.noise_mw = 10.0 ** (
            channel.noise_dbm(cfg.bandwidth_mhz, cfg.noise_figure_db) / 10.0)
        self.shadow = None          # (U, C), lazily initialized stationary
        self.rho_step = math.exp(-(cfg.ue_speed_mps * cfg.dt_s) / cfg.d_corr_m)

        # measurement state
        omega = cfg.l1_period_steps
        self.omega = omega
        self.l1_accum = np.zeros((U, C, B, P))
        self.l1_dbm = np.full((U, C, B, P), -np.inf)
        self.l3 = np.full((U, C), np.nan)
        self.has_l3 = np.zeros(U, dtype=bool)

        # link state
        self.connected = np.zeros(U, dtype=bool)
        self.serving_cell = np.full(U, -1, dtype=int)
        self.serving_beam = np.zeros(U, dtype=int)
        self.serving_panel = np.zeros(U, dtype=int)
        self.rlq = [RlqFilter(cfg.rlq_window) for _ in range(U)]

        period_ms = omega * cfg.dt_ms
        self.ue = [_UEProtocol() for _ in range(U)]
        for proto in self.ue:
            proto.prep_cond = cho.TriggerCondition(
                "prep", cfg.o_prep_db, cfg.t_prep_ms, period_ms)
            proto.exec_cond = cho.TriggerCondition(
                "exec", cfg.o_exec_db, cfg.t_exec_ms, period_ms)
            proto.acq_cond = cho.TriggerCondition(
                "acq", cfg.o_acq_db, cfg.t_acq_ms, period_ms)
        self.release_required = proto.prep_cond.required

        self.queue = EventQueue()
        self.events: list[kpi.Event] = []
        self._event_seq = 0
        self.ledger = kpi.OutageLedger(n_ue=U)
        self.powers_mw: np.ndarray | None = None
        self.t = 0.0
        self.rlq_trace: list[list[float]] = [[] for _ in range(U)] \
            if record_traces else []

    # --- logging ------------------------------------------------------------

    def _log(self, time: float, ue: int, kind: str, **detail) -> None:
        det = {k: kpi.format_detail_value(v) for k, v in detail.items()}
        self.events.append(kpi.Event(time=time, ue=ue, kind=kind, detail=det))

    def _log_msg(self, msg: QueuedMessage, lost: bool) -> None:
        self._log(msg.t_send, msg.ue, "signal",
                  msg=msg.spec.kind, step=msg.spec.step, itf=msg.spec.interface,
                  phase=msg.spec.phase, target=msg.target, lost=lost)

    # --- outage bookkeeping ---------------------------------------------------

    def _open_outage(self, u: int, t: float, cause: str) -> None:
        proto = self.ue[u]
        assert proto.pending_start is None
        proto.pending_start = t
        proto.pending_cause = cause

    def _close_outage(self, u: int, t: float) -> None:
        proto = self.ue[u]
        if proto.pending_start is None:
            return
        start, cause = proto.pending_start, proto.pending_cause
        proto.pending_start = None
        proto.pending_cause = None
        if t <= start + 1e-12:
            return
        self.ledger.add(u, start, t, cause)
        self._log(t, u, "outage", cause=cause, start=start, end=t)

    # --- channel ---------------------------------------------------------------

    def _update_channel(self, first: bool) -> None:
        cfg = self.cfg
        vecs, dist = wrapped_vectors(self.pos, self.topo.sites, self.topo)
        dist = np.maximum(dist, 1.0)  # UEs can sit on top of a site
        az_site_to_ue = np.arctan2(-vecs[..., 1], -vecs[..., 0])  # (U, S)
        # vecs measured ue->site, so flip for the site->ue direction
        az_ue_to_site = np.arctan2(vecs[..., 1], vecs[..., 0])

        cell_site = self.topo.cell_site
        az_c2u = az_site_to_ue[:, cell_site]            # (U, C)
        az_u2c = az_ue_to_site[:, cell_site]            # (U, C)
        dist_c = dist[:, cell_site]                     # (U, C)

        sigma = channel.shadow_sigma(dist_c, cfg.sf_sigma_los_db,
                                     cfg.sf_sigma_nlos_db)
        if first:
            self.shadow = sigma * self.shadow_rng.standard_normal(dist_c.shape)
        else:
            noise = self.shadow_rng.standard_normal(dist_c.shape) * sigma
            self.shadow = (self.rho_step * self.shadow
                           + math.sqrt(1.0 - self.rho_step ** 2) * noise)

        pl = channel.pathloss_soft_los(dist_c, cfg.fc_ghz, cfg.bs_height_m,
                                       cfg.ue_height_m)

        beam_off = channel.wrap_angle(
            az_c2u[:, :, None] - self.topo.cell_boresight[None, :, None]
            - self.grid.boresight[None, None, :])
        gain_b = channel.pattern_gain(
            self.grid.peak[None, None, :], self.grid.width[None, None, :],
            self.grid.floor_db, beam_off)                # (U, C, B)

        panel_off = channel.wrap_angle(
            az_u2c[:, :, None] - self.heading[:, None, None]
            - channel.PANEL_BORESIGHT[None, None, :])
        gain_p = channel.pattern_gain(
            cfg.panel_gain_db, math.radians(cfg.panel_width_deg),
            cfg.sidelobe_floor_db, panel_off)            # (U, C, P)

        if not first:
            self.fading.step()
        ff = self.fading.gain_db()                       # (U, C, B)

        raw = channel.compose_rsrp(
            cfg.tx_power_dbm,
            gain_b[:, :, :, None],
            gain_p[:, :, None, :],
            pl[:, :, None, None],
            self.shadow[:, :, None, None],
            ff[:, :, :, None],
        )
        if cfg.meas_error_sigma_db > 0:
            raw = raw + cfg.meas_error_sigma_db * self.err_rng.standard_normal(
                raw.shape)
        self.powers_mw = np.power(10.0, raw / 10.0)

    # --- SINR helpers -----------------------------------------------------------

    def _interference_floor(self, u: int, panel: int) -> np.ndarray:
        """Per-cell interference contribution at one panel, (C,) mW."""
        return cell_interference_mw(
            self.powers_mw[u, :, :, panel], self.cfg.k_beams_scheduled,
            self.cfg.interference_model)

    def _serving_sinr_db(self, u: int) -> float:
        c0 = self.serving_cell[u]
        b0 = self.serving_beam[u]
        p0 = self.serving_panel[u]
        contrib = self._interference_floor(u, p0)
        interference = contrib.sum() - contrib[c0]
        s = self.powers_mw[u, c0, b0, p0]
        return 10.0 * math.log10(s / (interference + self.noise_mw))

    def _best_sinr_toward(self, u: int, cell: int) -> tuple[float, int, int]:
        """Best (SINR dB, beam, panel) of a cell over beams and panels."""
        best = (-math.inf, 0, 0)
        for p in range(channel.N_PANELS):
            contrib = self._interference_floor(u, p)
            interference = contrib.sum() - contrib[cell]
            s = self.powers_mw[u, cell, :, p] / (interference + self.noise_mw)
            b = int(np.argmax(s))
            val = 10.0 * math.log10(s[b])
            if val > best[0]:
                best = (val, b, p)
        return best

    def _candidate_beam_sinr(self, u: int, beam: int,
                             panel: int) -> float:
        c0 = self.serving_cell[u]
        contrib = self._interference_floor(u, panel)
        interference = contrib.sum() - contrib[c0]
        s = self.powers_mw[u, c0, beam, panel]
        return 10.0 * math.log10(s / (interference + self.noise_mw))

    def _rlq_ok(self, u: int) -> bool:
        value = self.rlq[u].value_db
        return value is not None and value >= self.cfg.gamma_out_db

    # --- per-UE resets ------------------------------------------------------------

    def _reset_ue_link(self, u: int) -> None:
        """Fresh filters, conditions, CHO and TA state after (re)connection."""
        proto = self.ue[u]
        proto.epoch += 1
        proto.cho_state = cho.ChoState()
        proto.prep_cond.reset()
        proto.exec_cond.reset()
        proto.acq_cond.reset()
        proto.bf_state = beam_mgmt.BeamFailureState()
        proto.oos_since = None
        self.rlq[u].reset()
        self.l3[u, :] = np.nan
        self.has_l3[u] = False
        self.l1_accum[u] = 0.0

    def _best_l1_beam_panel(self, u: int, cell: int) -> tuple[int, int]:
        per_beam = self.l1_dbm[u, cell]          # (B, P)
        flat = int(np.argmax(per_beam))
        return flat // channel.N_PANELS, flat % channel.N_PANELS

    # --- main loop --------------------------------------------------------------

    def run(self) -> RunArtifacts:
        cfg = self.cfg
        n_steps = int(round(cfg.t_sim_s / cfg.dt_s))
        for k in range(n_steps):
            self.t = k * cfg.dt_s
            t = self.t
            if k > 0:
                self.pos = advance_positions(
                    self.pos, self.heading, self.speed, cfg.dt_s, self.topo)
            self._update_channel(first=(k == 0))
            if k == 0:
                self._initial_association()

            meas_instant = (k + 1) % self.omega == 0
            self._accumulate_l1()
            if meas_instant:
                self._measurement_update()

            self._sinr_rlq_step(t)
            self._beam_mgmt_step(t, meas_instant)
            self._cho_step(t, meas_instant)
            self._deliver_due(t)

        self._finalize(cfg.t_sim_s)
        report = kpi.build_report(
            self.events, cfg.scheme, cfg.n_ue, cfg.warmup_s, cfg.t_sim_s,
            scenario_key=cfg.scenario_key())
        events = sorted(
            range(len(self.events)),
            key=lambda i: (self.events[i].time, i))
        return RunArtifacts(
            report=report,
            events=[self.events[i] for i in events],
            ledger=self.ledger,
            resolved_config=resolved_text(cfg),
        )

    def _initial_association(self) -> None:
        best_cb = self.powers_mw.reshape(self.cfg.n_ue, -1).argmax(axis=1)
        n_bp = channel.N_BEAMS * channel.N_PANELS
        self.serving_cell = (best_cb // n_bp).astype(int)
        rem = best_cb % n_bp
        self.serving_beam = (rem // channel.N_PANELS).astype(int)
        self.serving_panel = (rem % channel.N_PANELS).astype(int)
        self.connected[:] = True

    def _accumulate_l1(self) -> None:
        self.l1_accum += self.powers_mw

    def _measurement_update(self) -> None:
        cfg = self.cfg
        l1_mw = self.l1_accum / self.omega
        self.l1_dbm = 10.0 * np.log10(np.maximum(l1_mw, 1e-30))
        self.l1_accum[:] = 0.0

        # per-panel cell consolidation, then the best panel (MPUE rule)
        if cfg.consolidation == "strongest":
            per_panel = self.l1_dbm.max(axis=2)          # (U, C, P)
        else:
            per_panel = np.empty(self.l1_dbm.shape[:2] + (channel.N_PANELS,))
            for p in range(channel.N_PANELS):
                for u in range(cfg.n_ue):
                    for c in range(self.n_cells):
                        per_panel[u, c, p] = measurement.cell_consolidate(
                            self.l1_dbm[u, c, :, p], policy=cfg.consolidation)
        consolidated = per_panel.max(axis=2)             # (U, C)

        a = cfg.l3_a
        fresh = ~self.has_l3
        self.l3[fresh] = consolidated[fresh]
        self.l3[~fresh] = (1.0 - a) * self.l3[~fresh] + a * consolidated[~fresh]
        self.has_l3[:] = True

    def _sinr_rlq_step(self, t: float) -> None:
        cfg = self.cfg
        for u in range(cfg.n_ue):
            if not self.connected[u]:
                continue
            proto = self.ue[u]
            value = self.rlq[u].update(self._serving_sinr_db(u))
            if self.record_traces:
                self.rlq_trace[u].append(value)
            if value < cfg.gamma_out_db:
                if proto.oos_since is None:
                    proto.oos_since = t
                if proto.pending_start is None:
                    self._open_outage(u, t, kpi.CAUSE_OTHER)
            else:
                proto.oos_since = None
                if proto.pending_cause == kpi.CAUSE_OTHER:
                    self._close_outage(u, t)

    def _beam_mgmt_step(self, t: float, meas_instant: bool) -> None:
        cfg = self.cfg
        for u in range(cfg.n_ue):
            if not self.connected[u]:
                continue
            proto = self.ue[u]

            # forced RLF when the link stays out-of-sync for the full timer
            if (proto.oos_since is not None
                    and t - proto.oos_since + 1e-12 >= cfg.t_rlf_ms / 1000.0):
                self._declare_rlf(u, t)
                continue

            bf = proto.bf_state
            if bf.in_recovery():
                rec = bf.recovery
                cand = self._candidate_beam_sinr(u, rec.target_beam,
                                                 rec.target_panel)
            else:
                cand = math.inf
            if self.has_l3[u]:
                per_beam = self.l1_dbm[u, self.serving_cell[u]].max(axis=1)
            else:
                per_beam = self.powers_mw[u, self.serving_cell[u]].max(axis=1)
            beam_mgmt.beam_failure_step(
                bf, self.rlq[u].value_db, per_beam, cand, t,
                cfg.gamma_out_db, cfg.n_batt, cfg.t_batt_ms / 1000.0,
                candidate_panel=self._best_panel_for_beam(u),
            )
            for action in bf.actions:
                if action[0] == "recover":
                    _, beam, panel = action
                    switched_panel = panel != self.serving_panel[u]
                    self.serving_beam[u] = beam
                    self.serving_panel[u] = panel
                    self.rlq[u].reset()
                    proto.oos_since = None
                    self._log(t, u, "beam_recovered", beam=beam, panel=panel,
                              panel_switched=switched_panel)
                elif action[0] == "rlf":
                    self._declare_rlf(u, t)
            if self.connected[u] and not bf.in_recovery() and meas_instant \
                    and self.has_l3[u]:
                # network-assisted serving beam/panel tracking
                c0 = self.serving_cell[u]
                beam, panel = self._best_l1_beam_panel(u, c0)
                self.serving_beam[u] = beam
                self.serving_panel[u] = panel

    def _best_panel_for_beam(self, u: int) -> int:
        c0 = self.serving_cell[u]
        if self.has_l3[u]:
            per_beam = self.l1_dbm[u, c0].max(axis=1)
            beam = int(np.argmax(per_beam))
            return int(np.argmax(self.l1_dbm[u, c0, beam]))
        return int(self.serving_panel[u])

    def _declare_rlf(self, u: int, t: float) -> None:
        cfg = self.cfg
        proto = self.ue[u]
        self._log(t, u, "rlf", cell=self.serving_cell[u])
        if proto.pending_start is None:
            self._open_outage(u, t, kpi.CAUSE_OTHER)
        proto.epoch += 1
        proto.bf_state = beam_mgmt.BeamFailureState()
        proto.cho_state = cho.ChoState(
            reestablish_until=t + cfg.t_reestablishment_ms / 1000.0)
        self.connected[u] = False
        proto.oos_since = None

    # --- CHO / TA ----------------------------------------------------------------

    def _cho_step(self, t: float, meas_instant: bool) -> None:
        cfg = self.cfg
        for u in range(cfg.n_ue):
            proto = self.ue[u]
            state = proto.cho_state
            if state.executing is not None:
                self._progress_execution(u, t)
            elif state.reestablish_until is not None:
                if t + 1e-12 >= state.reestablish_until:
                    self._complete_reestablishment(u, state.reestablish_until)
            elif self.connected[u] and meas_instant and self.has_l3[u]:
                self._monitor_conditions(u, t)

    def _monitor_conditions(self, u: int, t: float) -> None:
        cfg = self.cfg
        proto = self.ue[u]
        state = proto.cho_state
        c0 = self.serving_cell[u]
        serving_l3 = self.l3[u, c0]

        # release stale prepared cells (reverse of the preparation rule)
        for cell in list(state.prepared):
            pc = state.prepared[cell]
            if cho.release_due(pc, serving_l3, self.l3[u, cell],
                               cfg.o_prep_db, cfg.prep_release_hysteresis_db,
                               self.release_required):
                del state.prepared[cell]
                self._drop_cell_monitors(proto, cell)
                self._log(t, u, "prep_released", target=cell)

        # preparation condition for unprepared neighbor cells
        for cell in range(self.n_cells):
            if cell == c0 or cell in state.prepared or cell in state.pending_prep:
                continue
            if proto.prep_cond.update(cell, serving_l3, self.l3[u, cell]):
                self._start_preparation(u, cell, t)

        # TA acquisition for prepared cells (proposed scheme only)
        if cfg.scheme == "rach_less":
            for cell, pc in state.prepared.items():
                ta = pc.ta
                if (ta.failed() and cfg.ta_retry_enabled
                        and ta.retry_at is not None and t + 1e-12 >= ta.retry_at):
                    pc.ta = ta_protocol.TaState()
                    proto.acq_cond.reset(cell)
                    ta = pc.ta
                if ta.phase != ta_protocol.TA_NONE:
                    continue
                if proto.acq_cond.update(cell, serving_l3, self.l3[u, cell]):
                    self._start_ta_sequence(u, cell, t)

        # execution condition over prepared, ready cells
        fired = []
        for cell in state.prepared:
            if proto.exec_cond.update(cell, serving_l3, self.l3[u, cell]):
                fired.append(cell)
        if fired:
            target = max(fired, key=lambda c: (self.l3[u, c], -c))
            self._execute_handover(u, target, t)

    def _drop_cell_monitors(self, proto: _UEProtocol, cell: int) -> None:
        proto.prep_cond.reset(cell)
        proto.exec_cond.reset(cell)
        proto.acq_cond.reset(cell)

    def _start_preparation(self, u: int, cell: int, t: float) -> None:
        cfg = self.cfg
        proto = self.ue[u]
        specs = {m.kind: m for m in self.schedules["preparation"]}
        report = specs["measurement_report"]
        msg = QueuedMessage(ue=u, target=cell, spec=report, t_send=t,
                            epoch=proto.epoch)
        if not self._rlq_ok(u):
            self._log_msg(msg, lost=True)
            proto.prep_cond.reset(cell)
            return
        self._log_msg(msg, lost=False)
        for m in self.schedules["preparation"]:
            if m.kind == "measurement_report":
                continue
            self.queue.push(
                t + (m.send_offset_ms + m.delay_ms) / 1000.0,
                QueuedMessage(ue=u, target=cell, spec=m,
                              t_send=t + m.send_offset_ms / 1000.0,
                              epoch=proto.epoch))
        ready = t + cfg.t_prep_delay_ms / 1000.0
        proto.cho_state.pending_prep[cell] = ready
        self.queue.push(ready, PrepReady(ue=u, cell=cell, epoch=proto.epoch))
        self._log(t, u, "prep_requested", target=cell)

    def _finish_preparation(self, u: int, cell: int, t: float) -> None:
        cfg = self.cfg
        proto = self.ue[u]
        state = proto.cho_state
        state.pending_prep.pop(cell, None)
        if not self.connected[u]:
            return
        if len(state.prepared) >= cfg.n_c_max:
            victim = cho.choose_eviction(state.prepared, self.l3[u])
            del state.prepared[victim]
            self._drop_cell_monitors(proto, victim)
            self._log(t, u, "prep_evicted", target=victim)
        state.prepared[cell] = cho.PreparedCell(cell=cell, prep_time=t)
        proto.prep_cond.reset(cell)
        self._log(t, u, "prep_ready", target=cell)

    def _start_ta_sequence(self, u: int, cell: int, t: float) -> None:
        proto = self.ue[u]
        pc = proto.cho_state.prepared[cell]
        pc.ta.phase = ta_protocol.TA_RUNNING
        ctx = TaSequenceCtx(ue=u, target=cell, t0=t, epoch=proto.epoch)
        for m in self.schedules["ta_sequence"]:
            self.queue.push(
                t + (m.send_offset_ms + m.delay_ms) / 1000.0,
                QueuedMessage(ue=u, target=cell, spec=m,
                              t_send=t + m.send_offset_ms / 1000.0,
                              epoch=proto.epoch, ta_ctx=ctx))
        self._log(t, u, "ta_fired", target=cell)

    def _execute_handover(self, u: int, target: int, t: float) -> None:
        cfg = self.cfg
        proto = self.ue[u]
        state = proto.cho_state
        pc = state.prepared[target]

        if cfg.scheme == "rach_less":
            if pc.ta.phase == ta_protocol.TA_ACQUIRED:
                if ta_protocol.ta_valid(pc.ta, t, cfg.time_alignment_timer_s):
                    mode, ta_status = "rach_less", "acquired"
                else:
                    mode, ta_status = "rach_aided", "expired"
            elif pc.ta.failed():
                mode, ta_status = "rach_aided", pc.ta.phase
            else:
                mode, ta_status = "rach_aided", "none"
        else:
            mode, ta_status = "rach_aided", "disabled"

        early = pc.ta.early_forwarding_active and mode == "rach_less"
        proto.epoch += 1  # cancels in-flight prep / TA traffic
        self.connected[u] = False
        ex = cho.Execution(
            target=target, mode=mode, t_start=t, t_complete=None,
            t_hof_deadline=t + cfg.t_hof_ms / 1000.0,
            ta_status=ta_status, early_forwarding=early)
        state.executing = ex
        state.prepared.clear()
        state.pending_prep.clear()
        self._log(t, u, "exec_start", target=target, mode=mode, ta=ta_status)

        if mode == "rach_less":
            sinr, _, _ = self._best_sinr_toward(u, target)
            if sinr >= cfg.gamma_out_db:
                self._decide_execution_success(u, t)
            else:
                self._handover_failed(u, t)
        else:
            self._progress_execution(u, t)

    def _decide_execution_success(self, u: int, t_success: float) -> None:
        cfg = self.cfg
        proto = self.ue[u]
        ex = proto.cho_state.executing
        interruption_ms = ta_protocol.interruption_time(
            ex.mode == "rach_less", ex.early_forwarding)
        ex.t_complete = t_success + interruption_ms / 1000.0
        # the degraded-link interval (if any) ends where the handover starts
        if proto.pending_start is not None:
            self._close_outage(u, ex.t_start)
        self._open_outage(u, ex.t_start, kpi.CAUSE_HANDOVER)
        phase = "exec_rach_less" if ex.mode == "rach_less" else "exec_rach_aided"
        base = ex.t_complete if ex.mode == "rach_less" else t_success
        for m in self.schedules[phase]:
            self.queue.push(
                base + (m.send_offset_ms + m.delay_ms) / 1000.0,
                QueuedMessage(ue=u, target=ex.target, spec=m,
                              t_send=base + m.send_offset_ms / 1000.0,
                              epoch=None))

    def _handover_failed(self, u: int, t: float) -> None:
        cfg = self.cfg
        proto = self.ue[u]
        ex = proto.cho_state.executing
        self._log(t, u, "hof", target=ex.target, mode=ex.mode)
        if proto.pending_start is None:
            self._open_outage(u, ex.t_start, kpi.CAUSE_OTHER)
        proto.cho_state = cho.ChoState(
            reestablish_until=t + cfg.t_reestablishment_ms / 1000.0)
        proto.epoch += 1

    def _progress_execution(self, u: int, t: float) -> None:
        cfg = self.cfg
        proto = self.ue[u]
        ex = proto.cho_state.executing
        if ex.t_complete is None:
            # RACH-aided: scan the access window for a usable target link
            sinr, _, _ = self._best_sinr_toward(u, ex.target)
            if sinr >= cfg.gamma_out_db:
                self._decide_execution_success(u, t)
            elif t + 1e-12 >= ex.t_hof_deadline:
                self._handover_failed(u, ex.t_hof_deadline)
            return
        if t + 1e-12 >= ex.t_complete:
            self._complete_handover(u)

    def _complete_handover(self, u: int) -> None:
        proto = self.ue[u]
        ex = proto.cho_state.executing
        t_c = ex.t_complete
        old = self.serving_cell[u]
        self._close_outage(u, t_c)
        self._log(t_c, u, "handover",
                  mode=ex.mode, source=old, target=ex.target,
                  t_trigger=ex.t_start,
                  interruption_ms=(t_c - ex.t_start) * 1000.0,
                  ta=ex.ta_status, early_fwd=ex.early_forwarding)
        self.serving_cell[u] = ex.target
        beam, panel = self._best_l1_beam_panel(u, ex.target)
        self.serving_beam[u] = beam
        self.serving_panel[u] = panel
        self.connected[u] = True
        self._reset_ue_link(u)

    def _complete_reestablishment(self, u: int, t_end: float) -> None:
        proto = self.ue[u]
        if self.has_l3[u]:
            target = int(np.nanargmax(self.l3[u]))
        else:
            target = int(self.powers_mw[u].reshape(self.n_cells, -1)
                         .max(axis=1).argmax())
        self._close_outage(u, t_end)
        self._log(t_end, u, "reestablished", target=target)
        self.serving_cell[u] = target
        beam, panel = self._best_l1_beam_panel(u, target)
        self.serving_beam[u] = beam
        self.serving_panel[u] = panel
        self.connected[u] = True
        self._reset_ue_link(u)

    # --- event delivery -------------------------------------------------------

    def _deliver_due(self, t: float) -> None:
        for due_t, _, payload in self.queue.pop_due(t):
            if isinstance(payload, PrepReady):
                if payload.epoch == self.ue[payload.ue].epoch:
                    self._finish_preparation(payload.ue, payload.cell, due_t)
                continue
            self._deliver_message(payload)

    def _deliver_message(self, msg: QueuedMessage) -> None:
        proto = self.ue[msg.ue]
        if msg.epoch is not None and msg.epoch != proto.epoch:
            return
        ctx = msg.ta_ctx
        if ctx is None:
            self._log_msg(msg, lost=False)
            return
        if ctx.failed or ctx.cancelled:
            return
        if msg.spec.fallible and not self._rlq_ok(msg.ue):
            self._log_msg(msg, lost=True)
            ctx.failed = True
            self._fail_ta(msg)
            return
        self._log_msg(msg, lost=False)
        pc = proto.cho_state.prepared.get(msg.target)
        if pc is None:
            ctx.cancelled = True
            return
        if msg.spec.kind == "ta_acquisition_command" and self.cfg.early_forwarding:
            pc.ta.early_forwarding_active = True
        elif msg.spec.kind == "ta_configuration":
            pc.ta.phase = ta_protocol.TA_ACQUIRED
            pc.ta.t_acquired = msg.t_send
            self._log(msg.t_send, msg.ue, "ta_acquired", target=msg.target)

    def _fail_ta(self, msg: QueuedMessage) -> None:
        proto = self.ue[msg.ue]
        pc = proto.cho_state.prepared.get(msg.target)
        phase = (ta_protocol.TA_FAILED_REPORT
                 if msg.spec.kind == "ta_measurement_report"
                 else ta_protocol.TA_FAILED_CONFIG)
        if pc is not None:
            pc.ta.phase = phase
            pc.ta.t_acquired = None
            if self.cfg.ta_retry_enabled:
                pc.ta.retry_at = msg.t_send + self.cfg.ta_retry_backoff_ms / 1000.0
        self._log(msg.t_send, msg.ue, "ta_failed", target=msg.target, at=phase)

    # --- end of run -------------------------------------------------------------

    def _finalize(self, t_end: float) -> None:
        for u in range(self.cfg.n_ue):
            proto = self.ue[u]
            ex = proto.cho_state.executing
            if (ex is not None and ex.t_complete is None
                    and proto.pending_start is None):
                # undecided access window at the end of the run
                self._open_outage(u, ex.t_start, kpi.CAUSE_OTHER)
            self._close_outage(u, t_end)


_READY = 0.0


def run(cfg: ScenarioConfig, record_traces: bool = False):
    engine = Engine(cfg, record_traces=record_traces)
    artifacts = engine.run()
    if record_traces:
        return artifacts, engine
    return artifacts


def run_many(cfg: ScenarioConfig, seeds: list[int], scheme: str | None = None,
             workers: int = 1) -> list[RunArtifacts]:
    """Independent replications; results ordered by the seeds list."""
    import dataclasses

    def one(seed: int) -> RunArtifacts:
        c = dataclasses.replace(cfg, seed=seed)
        if scheme is not None:
            c = dataclasses.replace(c, scheme=scheme)
        return run(c)

    if workers <= 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, seeds))


@dataclass
class PairComparison:
    baseline: kpi.KpiReport       # rach_aided mean
    proposed: kpi.KpiReport       # rach_less mean
    deltas: dict[str, float]
    baseline_runs: list[RunArtifacts]
    proposed_runs: list[RunArtifacts]


def run_pair(cfg: ScenarioConfig, seeds: list[int],
             workers: int = 1) -> PairComparison:
    """Both schemes over identical seeds (common random numbers)."""
    if not seeds:
        raise ValueError("need at least one seed")
    base_runs = run_many(cfg, seeds, scheme="rach_aided", workers=workers)
    prop_runs = run_many(cfg, seeds, scheme="rach_less", workers=workers)
    base = kpi.mean_report([r.report for r in base_runs])
    prop = kpi.mean_report([r.report for r in prop_runs])
    return PairComparison(
        baseline=base, proposed=prop,
        deltas=kpi.compare_schemes(base, prop),
        baseline_runs=base_runs, proposed_runs=prop_runs,
    )

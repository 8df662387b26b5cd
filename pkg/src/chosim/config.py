"""Scenario configuration: defaults, file parsing, validation, resolved echo.

The config file is a flat key=value text format with dotted section keys,
e.g. ``cho.o_prep_db = 5``. Blank lines and ``#`` comments are ignored.
Unknown keys are hard errors so a config is always auditable against the
parameter table it came from.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    """Raised for malformed files, unknown keys, or invalid values."""


SCHEMES = ("rach_aided", "rach_less")


@dataclass
class ScenarioConfig:
    # run control
    scheme: str = "rach_less"
    n_ue: int = 420
    seed: int = 1
    dt_ms: float = 10.0
    t_sim_s: float = 30.0
    warmup_s: float = 1.0

    # deployment
    isd_m: float = 200.0
    n_sites: int = 7
    ue_speed_kmh: float = 60.0

    # channel
    fc_ghz: float = 28.0
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 9.0
    bandwidth_mhz: float = 100.0
    bs_height_m: float = 10.0
    ue_height_m: float = 1.5
    d_corr_m: float = 13.0
    sf_sigma_los_db: float = 4.0
    sf_sigma_nlos_db: float = 7.82
    n_fading_osc: int = 16
    meas_error_sigma_db: float = 0.0
    narrow_beam_gain_db: float = 18.0
    wide_beam_gain_db: float = 12.0
    narrow_beam_width_deg: float = 15.0
    wide_beam_width_deg: float = 30.0
    sidelobe_floor_db: float = 25.0
    panel_gain_db: float = 5.0
    panel_width_deg: float = 90.0

    # measurement
    ssb_period_ms: float = 20.0
    l3_k: int = 4
    consolidation: str = "strongest"

    # sinr
    interference_model: str = "scaled_topk"
    rlq_window: int = 20
    gamma_out_db: float = -8.0
    k_beams_scheduled: int = 4

    # beam management
    n_batt: int = 4
    t_batt_ms: float = 40.0
    t_rlf_ms: float = 1000.0
    t_reestablishment_ms: float = 200.0

    # conditional handover
    o_prep_db: float = 5.0
    o_exec_db: float = 3.0
    t_prep_ms: float = 80.0
    t_exec_ms: float = 80.0
    t_prep_delay_ms: float = 50.0
    n_c_max: int = 4
    t_hof_ms: float = 200.0
    prep_release_hysteresis_db: float = 2.0

    # timing-advance acquisition
    o_acq_db: float = 2.0
    t_acq_ms: float = 20.0
    t_acq_delay_ms: float = 50.0
    time_alignment_timer_s: float = 10.24
    ta_retry_enabled: bool = False
    ta_retry_backoff_ms: float = 100.0
    early_forwarding: bool = True

    @property
    def dt_s(self) -> float:
        return self.dt_ms / 1000.0

    @property
    def ue_speed_mps(self) -> float:
        return self.ue_speed_kmh / 3.6

    @property
    def l3_a(self) -> float:
        """IIR coefficient a = 1/2^(k/4)."""
        return 0.5 ** (self.l3_k / 4.0)

    @property
    def l1_period_steps(self) -> int:
        return int(round(self.ssb_period_ms / self.dt_ms))

    def scenario_key(self) -> tuple:
        """Everything that must match for two runs to be comparable.

        Excludes scheme and seed: those are the quantities compare sweeps.
        """
        skip = {"scheme", "seed"}
        return tuple(
            (f.name, getattr(self, f.name))
            for f in fields(self)
            if f.name not in skip
        )


# dotted config-file key -> dataclass field
KEY_MAP = {
    "sim.scheme": "scheme",
    "sim.n_ue": "n_ue",
    "sim.seed": "seed",
    "sim.dt_ms": "dt_ms",
    "sim.t_sim_s": "t_sim_s",
    "sim.warmup_s": "warmup_s",
    "deployment.isd_m": "isd_m",
    "deployment.n_sites": "n_sites",
    "deployment.ue_speed_kmh": "ue_speed_kmh",
    "channel.fc_ghz": "fc_ghz",
    "channel.tx_power_dbm": "tx_power_dbm",
    "channel.noise_figure_db": "noise_figure_db",
    "channel.bandwidth_mhz": "bandwidth_mhz",
    "channel.bs_height_m": "bs_height_m",
    "channel.ue_height_m": "ue_height_m",
    "channel.d_corr_m": "d_corr_m",
    "channel.sf_sigma_los_db": "sf_sigma_los_db",
    "channel.sf_sigma_nlos_db": "sf_sigma_nlos_db",
    "channel.n_fading_osc": "n_fading_osc",
    "channel.meas_error_sigma_db": "meas_error_sigma_db",
    "channel.narrow_beam_gain_db": "narrow_beam_gain_db",
    "channel.wide_beam_gain_db": "wide_beam_gain_db",
    "channel.narrow_beam_width_deg": "narrow_beam_width_deg",
    "channel.wide_beam_width_deg": "wide_beam_width_deg",
    "channel.sidelobe_floor_db": "sidelobe_floor_db",
    "channel.panel_gain_db": "panel_gain_db",
    "channel.panel_width_deg": "panel_width_deg",
    "meas.ssb_period_ms": "ssb_period_ms",
    "meas.l3_k": "l3_k",
    "meas.consolidation": "consolidation",
    "sinr.interference_model": "interference_model",
    "sinr.rlq_window": "rlq_window",
    "sinr.gamma_out_db": "gamma_out_db",
    "sinr.k_beams_scheduled": "k_beams_scheduled",
    "beam.n_batt": "n_batt",
    "beam.t_batt_ms": "t_batt_ms",
    "beam.t_rlf_ms": "t_rlf_ms",
    "beam.t_reestablishment_ms": "t_reestablishment_ms",
    "cho.o_prep_db": "o_prep_db",
    "cho.o_exec_db": "o_exec_db",
    "cho.t_prep_ms": "t_prep_ms",
    "cho.t_exec_ms": "t_exec_ms",
    "cho.t_prep_delay_ms": "t_prep_delay_ms",
    "cho.n_c_max": "n_c_max",
    "cho.t_hof_ms": "t_hof_ms",
    "cho.prep_release_hysteresis_db": "prep_release_hysteresis_db",
    "ta.o_acq_db": "o_acq_db",
    "ta.t_acq_ms": "t_acq_ms",
    "ta.t_acq_delay_ms": "t_acq_delay_ms",
    "ta.time_alignment_timer_s": "time_alignment_timer_s",
    "ta.retry_enabled": "ta_retry_enabled",
    "ta.retry_backoff_ms": "ta_retry_backoff_ms",
    "ta.early_forwarding": "early_forwarding",
}

FIELD_TO_KEY = {v: k for k, v in KEY_MAP.items()}


def _coerce(raw: str, target_type: type, key: str):
    raw = raw.strip()
    if target_type is bool:
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if target_type is int:
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
        if val != int(val):
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
        return int(val)
    if target_type is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    return raw


def apply_assignment(cfg: ScenarioConfig, key: str, raw_value: str) -> None:
    """Apply one ``dotted.key = value`` assignment in place."""
    key = key.strip()
    if key not in KEY_MAP:
        raise ConfigError(f"unknown config key {key!r}")
    field_name = KEY_MAP[key]
    ftype = {f.name: f.type for f in fields(ScenarioConfig)}[field_name]
    pytype = {"int": int, "float": float, "str": str, "bool": bool}[ftype]
    setattr(cfg, field_name, _coerce(raw_value, pytype, key))


def load_config(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    cfg = dataclasses.replace(base) if base is not None else ScenarioConfig()
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        apply_assignment(cfg, key, raw)
    return cfg


def apply_overrides(cfg: ScenarioConfig, overrides: list[str]) -> ScenarioConfig:
    out = dataclasses.replace(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        apply_assignment(out, key, raw)
    return out


def validate(cfg: ScenarioConfig) -> None:
    if cfg.scheme not in SCHEMES:
        raise ConfigError(f"sim.scheme must be one of {SCHEMES}, got {cfg.scheme!r}")
    if cfg.n_ue < 1:
        raise ConfigError(f"sim.n_ue must be >= 1, got {cfg.n_ue}")
    if cfg.dt_ms <= 0:
        raise ConfigError(f"sim.dt_ms must be > 0, got {cfg.dt_ms}")
    if cfg.t_sim_s <= 0:
        raise ConfigError(f"sim.t_sim_s must be > 0, got {cfg.t_sim_s}")
    if not 0 <= cfg.warmup_s < cfg.t_sim_s:
        raise ConfigError(
            f"sim.warmup_s must lie in [0, t_sim), got {cfg.warmup_s} vs {cfg.t_sim_s}"
        )
    if cfg.isd_m <= 0:
        raise ConfigError(f"deployment.isd_m must be > 0, got {cfg.isd_m}")
    if cfg.n_sites not in (1, 7):
        raise ConfigError(f"deployment.n_sites must be 1 or 7, got {cfg.n_sites}")
    if cfg.consolidation not in ("strongest", "avg_top2"):
        raise ConfigError(f"meas.consolidation must be strongest or avg_top2")
    if cfg.interference_model not in ("scaled_topk", "full", "single"):
        raise ConfigError(
            f"sinr.interference_model must be scaled_topk, full or single, "
            f"got {cfg.interference_model!r}"
        )
    if cfg.rlq_window < 1:
        raise ConfigError(f"sinr.rlq_window must be >= 1, got {cfg.rlq_window}")
    if cfg.n_c_max < 1:
        raise ConfigError(f"cho.n_c_max must be >= 1, got {cfg.n_c_max}")
    if cfg.n_batt < 1:
        raise ConfigError(f"beam.n_batt must be >= 1, got {cfg.n_batt}")
    # durations the discrete loop steps over must sit on the dt grid; the
    # time-alignment timer and interruption constants stay continuous
    grid_keys = [
        "ssb_period_ms", "t_prep_ms", "t_exec_ms", "t_acq_ms",
        "t_prep_delay_ms", "t_batt_ms", "t_rlf_ms", "t_reestablishment_ms",
        "t_hof_ms", "ta_retry_backoff_ms",
    ]
    for name in grid_keys:
        value = getattr(cfg, name)
        ratio = value / cfg.dt_ms
        if abs(ratio - round(ratio)) > 1e-9 or value <= 0:
            raise ConfigError(
                f"{FIELD_TO_KEY[name]} = {value} must be a positive multiple "
                f"of sim.dt_ms = {cfg.dt_ms}"
            )


def resolved_text(cfg: ScenarioConfig) -> str:
    """Echo of every effective parameter, one ``key = value`` per line."""
    lines = []
    for key in sorted(KEY_MAP):
        lines.append(f"{key} = {getattr(cfg, KEY_MAP[key])}")
    return "\n".join(lines) + "\n"

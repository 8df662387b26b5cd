"""Raw per-link RSRP: soft-LoS path loss, correlated shadowing, Jakes-style
fast fading, and parametric Tx-beam / UE-panel patterns.

Path loss and LoS probability follow the TR 38.901 urban-micro street-canyon
model with default heights (BS 10 m, UE 1.5 m). The soft-LoS blend weights
the LoS and NLoS components by the distance-dependent LoS probability, and
the same weight blends the shadowing standard deviations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0


# --- path loss -------------------------------------------------------------

def los_probability(distance2d) -> np.ndarray | float:
    d = np.asarray(distance2d, dtype=float)
    p = np.where(d <= 18.0, 1.0, 18.0 / d + np.exp(-d / 36.0) * (1.0 - 18.0 / d))
    return p if p.ndim else float(p)


def pathloss_los(distance2d, fc_ghz: float, bs_h: float = 10.0,
                 ue_h: float = 1.5) -> np.ndarray | float:
    """UMi street-canyon LoS path loss, valid below the breakpoint distance.

    At 28 GHz with default heights the breakpoint sits at 1.68 km, far beyond
    the layout, so only the first branch is modeled.
    """
    d3 = np.hypot(np.asarray(distance2d, dtype=float), bs_h - ue_h)
    pl = 32.4 + 21.0 * np.log10(d3) + 20.0 * np.log10(fc_ghz)
    return pl if pl.ndim else float(pl)


def pathloss_nlos(distance2d, fc_ghz: float, bs_h: float = 10.0,
                  ue_h: float = 1.5) -> np.ndarray | float:
    d3 = np.hypot(np.asarray(distance2d, dtype=float), bs_h - ue_h)
    pl = (35.3 * np.log10(d3) + 22.4 + 21.3 * np.log10(fc_ghz)
          - 0.3 * (ue_h - 1.5))
    out = np.maximum(pl, pathloss_los(distance2d, fc_ghz, bs_h, ue_h))
    return out if out.ndim else float(out)


def pathloss_soft_los(distance2d, fc_ghz: float, bs_h: float = 10.0,
                      ue_h: float = 1.5) -> np.ndarray | float:
    """LoS-probability-weighted average of the LoS and NLoS path losses."""
    d = np.asarray(distance2d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance2d must be > 0")
    w = los_probability(d)
    pl = (w * pathloss_los(d, fc_ghz, bs_h, ue_h)
          + (1.0 - w) * pathloss_nlos(d, fc_ghz, bs_h, ue_h))
    return pl if pl.ndim else float(pl)


def shadow_sigma(distance2d, sigma_los: float = 4.0,
                 sigma_nlos: float = 7.82) -> np.ndarray | float:
    w = los_probability(distance2d)
    s = w * sigma_los + (1.0 - w) * sigma_nlos
    return s if np.asarray(s).ndim else float(s)


def noise_dbm(bandwidth_mhz: float, noise_figure_db: float) -> float:
    return -174.0 + 10.0 * math.log10(bandwidth_mhz * 1e6) + noise_figure_db


# --- shadow fading ----------------------------------------------------------

def shadow_step(values, sigma, displacement: float, d_corr: float,
                rng: np.random.Generator):
    """One exponentially-correlated shadowing update.

    new = rho * old + sqrt(1 - rho^2) * N(0, sigma), rho = exp(-disp/d_corr).
    """
    if displacement < 0:
        raise ValueError("displacement must be >= 0")
    rho = math.exp(-displacement / d_corr)
    values = np.asarray(values, dtype=float)
    noise = rng.standard_normal(values.shape) * np.asarray(sigma, dtype=float)
    return rho * values + math.sqrt(max(0.0, 1.0 - rho * rho)) * noise


# --- antenna patterns -------------------------------------------------------

def pattern_gain(peak_db, width_rad, floor_db, offset_rad):
    """Parabolic pattern: peak - min(12*(offset/width)^2, floor).

    width_rad is the full -3 dB beamwidth, so the pattern is 3 dB down at
    half the width off boresight.
    """
    off = np.abs(wrap_angle(offset_rad))
    att = np.minimum(12.0 * (off / width_rad) ** 2, floor_db)
    return peak_db - att


def wrap_angle(a):
    return (np.asarray(a) + math.pi) % (2.0 * math.pi) - math.pi


N_BEAMS = 12
N_NARROW = 8
N_PANELS = 3


@dataclass(frozen=True)
class BeamGrid:
    boresight: np.ndarray  # (12,) rad, relative to the sector boresight
    width: np.ndarray      # (12,) rad, full -3 dB beamwidth
    peak: np.ndarray       # (12,) dB
    floor_db: float

    def is_narrow(self, beam_id: int) -> bool:
        return 1 <= beam_id <= N_NARROW


def build_beam_grid(narrow_gain: float = 18.0, wide_gain: float = 12.0,
                    narrow_width_deg: float = 15.0, wide_width_deg: float = 30.0,
                    floor_db: float = 25.0) -> BeamGrid:
    """12-beam sector grid: beams 1-8 narrow/high-gain spanning the sector,
    beams 9-12 wide/low-gain underneath."""
    narrow_bore = np.deg2rad(np.linspace(-52.5, 52.5, N_NARROW))
    wide_bore = np.deg2rad(np.array([-45.0, -15.0, 15.0, 45.0]))
    return BeamGrid(
        boresight=np.concatenate([narrow_bore, wide_bore]),
        width=np.deg2rad(np.concatenate([
            np.full(N_NARROW, narrow_width_deg),
            np.full(N_BEAMS - N_NARROW, wide_width_deg),
        ])),
        peak=np.concatenate([
            np.full(N_NARROW, narrow_gain),
            np.full(N_BEAMS - N_NARROW, wide_gain),
        ]),
        floor_db=floor_db,
    )


def beam_gain(grid: BeamGrid, beam_id: int, azimuth_offset: float) -> float:
    """Gain of one beam at an azimuth offset from its own boresight's sector.

    beam_id is 1-based (1..12); azimuth_offset is measured from the sector
    boresight, matching how the grid is laid out.
    """
    if not 1 <= beam_id <= N_BEAMS:
        raise ValueError(f"beam id must be in 1..{N_BEAMS}, got {beam_id}")
    i = beam_id - 1
    return float(pattern_gain(
        grid.peak[i], grid.width[i], grid.floor_db,
        azimuth_offset - grid.boresight[i],
    ))


PANEL_BORESIGHT = np.arange(N_PANELS) * (2.0 * math.pi / 3.0)


# --- fast fading ------------------------------------------------------------

class FastFading:
    """Sum-of-sinusoids fading per link, complex oscillator bank.

    Each link carries n_osc unit oscillators with Doppler shifts
    2*pi*f_d*cos(alpha_k); stepping multiplies the bank by a fixed rotor.
    The summed amplitude has unit mean power.
    """

    def __init__(self, shape: tuple, n_osc: int, doppler_hz: float,
                 dt_s: float, rng: np.random.Generator):
        self.n_osc = n_osc
        alpha = rng.uniform(0.0, 2.0 * math.pi, size=shape + (n_osc,))
        phase = rng.uniform(0.0, 2.0 * math.pi, size=shape + (n_osc,))
        omega = 2.0 * math.pi * doppler_hz * np.cos(alpha)
        self.state = (np.exp(1j * phase) / math.sqrt(n_osc)).astype(np.complex64)
        self.rotor = np.exp(1j * omega * dt_s).astype(np.complex64)

    def step(self) -> None:
        self.state *= self.rotor

    def gain_db(self) -> np.ndarray:
        h = self.state.sum(axis=-1)
        power = (h.real.astype(np.float64)) ** 2 + (h.imag.astype(np.float64)) ** 2
        return 10.0 * np.log10(np.maximum(power, 1e-30))


# --- composition ------------------------------------------------------------

def compose_rsrp(tx_power_dbm, beam_gain_db, panel_gain_db, pathloss_db,
                 shadow_db, fading_db):
    """Raw RSRP is exactly additive in dB across its five channel terms."""
    return (tx_power_dbm + beam_gain_db + panel_gain_db - pathloss_db
            - shadow_db + fading_db)

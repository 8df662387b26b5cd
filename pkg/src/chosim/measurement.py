"""L1 and L3 RSRP filtering with multi-panel consolidation.

L1 averages the raw samples of one SSB period in the linear power domain.
L3 is the standard one-pole IIR in the dB domain. Cell consolidation picks
the strongest beam by default; with three panels active simultaneously the
cell quality is the best per-panel consolidated value.
"""

from __future__ import annotations

import numpy as np


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(np.asarray(mw, dtype=float))


def l1_average(samples_dbm) -> float:
    """Linear-domain mean of one L1 period's raw samples, back in dBm."""
    samples = np.asarray(samples_dbm, dtype=float)
    if samples.size == 0:
        raise ValueError("L1 average needs at least one raw sample")
    return float(mw_to_dbm(dbm_to_mw(samples).mean()))


class L1Filter:
    """Collects raw samples and emits one output per omega samples."""

    def __init__(self, omega: int):
        if omega < 1:
            raise ValueError(f"omega must be >= 1, got {omega}")
        self.omega = omega
        self._buf: list[float] = []
        self.output: float | None = None

    def add_sample(self, raw_dbm: float) -> float | None:
        self._buf.append(float(raw_dbm))
        if len(self._buf) == self.omega:
            self.output = l1_average(self._buf)
            self._buf.clear()
            return self.output
        return None


def cell_consolidate(l1_beams_dbm, policy: str = "strongest",
                     min_dbm: float = -100.0) -> float:
    """Consolidate one cell's beam-level L1 values into a cell-level value."""
    values = np.asarray(l1_beams_dbm, dtype=float)
    if values.size == 0:
        raise ValueError("consolidation needs at least one beam measurement")
    if policy == "strongest":
        return float(values.max())
    if policy == "avg_top2":
        eligible = values[values > min_dbm]
        if eligible.size == 0:
            return float(values.max())
        top = np.sort(eligible)[-2:]
        return float(mw_to_dbm(dbm_to_mw(top).mean()))
    raise ValueError(f"unknown consolidation policy {policy!r}")


def consolidate_panels(per_panel_dbm) -> float:
    """MPUE rule: the cell quality input is the best panel's value."""
    values = np.asarray(per_panel_dbm, dtype=float)
    return float(values.max())


def l3_update(previous, consolidated, a: float):
    """One-pole IIR in dB: new = (1 - a) * previous + a * input."""
    if not 0.0 < a <= 1.0:
        raise ValueError(f"l3 coefficient must be in (0, 1], got {a}")
    return (1.0 - a) * np.asarray(previous, dtype=float) + a * np.asarray(
        consolidated, dtype=float
    )


class L3Filter:
    """Scalar L3 state; initializes to the first input it sees."""

    def __init__(self, a: float):
        if not 0.0 < a <= 1.0:
            raise ValueError(f"l3 coefficient must be in (0, 1], got {a}")
        self.a = a
        self.value: float | None = None

    def update(self, consolidated_dbm: float) -> float:
        if self.value is None:
            self.value = float(consolidated_dbm)
        else:
            self.value = float(l3_update(self.value, consolidated_dbm, self.a))
        return self.value

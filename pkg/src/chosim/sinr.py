"""Average downlink SINR per candidate link and the moving-average radio
link quality used against the out-of-sync threshold.

Interference replaces the scheduler expectation with a deterministic load
model: each interfering cell radiates on its K strongest beams toward the
UE, scaled by K / n_beams (``scaled_topk``). ``full`` sums every beam and
``single`` takes only the strongest, for sensitivity checks.
"""

from __future__ import annotations

import numpy as np

INTERFERENCE_MODELS = ("scaled_topk", "full", "single")


def cell_interference_mw(powers_mw: np.ndarray, k: int,
                         model: str = "scaled_topk") -> np.ndarray:
    """Per-cell interference contribution from a (..., C, B) power array."""
    p = np.asarray(powers_mw, dtype=float)
    n_beams = p.shape[-1]
    if model == "scaled_topk":
        kk = min(k, n_beams)
        top = np.partition(p, n_beams - kk, axis=-1)[..., n_beams - kk:]
        return (kk / n_beams) * top.sum(axis=-1)
    if model == "full":
        return p.sum(axis=-1)
    if model == "single":
        return p.max(axis=-1)
    raise ValueError(f"unknown interference model {model!r}")


def sinr_db(powers_mw: np.ndarray, cell: int, beam: int, noise_mw: float,
            k: int = 4, model: str = "scaled_topk") -> float:
    """SINR of link (cell, beam) given all (C, B) received powers in mW."""
    p = np.asarray(powers_mw, dtype=float)
    signal = p[cell, beam]
    contrib = cell_interference_mw(p, k, model)
    interference = contrib.sum() - contrib[cell]
    return 10.0 * float(np.log10(signal / (interference + noise_mw)))


def sinr_all_beams_db(powers_mw: np.ndarray, cell: int, noise_mw: float,
                      k: int = 4, model: str = "scaled_topk") -> np.ndarray:
    """SINR of every beam of one cell against the same interference floor."""
    p = np.asarray(powers_mw, dtype=float)
    contrib = cell_interference_mw(p, k, model)
    interference = contrib.sum() - contrib[cell]
    return 10.0 * np.log10(p[cell] / (interference + noise_mw))


class RlqFilter:
    """Linear moving average over the last W serving-link SINR samples."""

    def __init__(self, window: int):
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self.window = window
        self._buf = np.zeros(window)
        self._count = 0
        self._idx = 0
        self.value_db: float | None = None

    def reset(self) -> None:
        self._count = 0
        self._idx = 0
        self.value_db = None

    def update(self, sinr_sample_db: float) -> float:
        self._buf[self._idx] = 10.0 ** (sinr_sample_db / 10.0)
        self._idx = (self._idx + 1) % self.window
        self._count = min(self._count + 1, self.window)
        mean = self._buf[: self._count].mean() if self._count < self.window \
            else self._buf.mean()
        self.value_db = 10.0 * float(np.log10(mean))
        return self.value_db


def is_out_of_sync(rlq_db: float, gamma_out_db: float) -> bool:
    return rlq_db < gamma_out_db

"""Hexagonal multi-site layout with wrap-around and straight-line UE motion.

Seven sites form the standard flower: one center plus a ring of six at the
inter-site distance. Each site serves three 120-degree sectors. The layout
repeats as six replicas around the original; wrap translations are the first
hexagonal ring of the cluster lattice (magnitude sqrt(7) * isd).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

SECTORS_PER_SITE = 3
N_WRAP = 6


@dataclass(frozen=True)
class CellTopology:
    sites: np.ndarray          # (S, 2) site positions, m
    cell_site: np.ndarray      # (C,) site index per cell
    cell_boresight: np.ndarray  # (C,) sector boresight azimuth, rad
    isd: float
    wrap_images: np.ndarray    # (6, 2) wrap translation vectors, m
    region_vertices: np.ndarray  # (6, 2) padded drop-region hexagon, m

    @property
    def n_cells(self) -> int:
        return len(self.cell_site)

    @property
    def n_sites(self) -> int:
        return len(self.sites)


@dataclass(frozen=True)
class UEKinematics:
    position: np.ndarray  # (2,) m
    speed: float          # m/s, constant for the whole run
    heading: float        # rad, constant for the whole run


def _hex_vertices(radius: float) -> np.ndarray:
    ang = np.arange(6) * (math.pi / 3.0)
    return np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)


def build_topology(isd: float, n_sites: int = 7) -> CellTopology:
    if isd <= 0:
        raise ValueError(f"isd must be > 0, got {isd}")
    if n_sites not in (1, 7):
        raise ValueError(f"n_sites must be 1 or 7, got {n_sites}")

    if n_sites == 1:
        sites = np.zeros((1, 2))
    else:
        sites = np.vstack([np.zeros((1, 2)), _hex_vertices(isd)])

    cell_site = np.repeat(np.arange(n_sites), SECTORS_PER_SITE)
    cell_boresight = np.tile(
        np.arange(SECTORS_PER_SITE) * (2.0 * math.pi / 3.0), n_sites
    )

    # cluster translation: 2*a1 + a2 on the site lattice, |T| = sqrt(7)*isd,
    # rotated through the six hexagonal directions
    base = np.array([2.5 * isd, math.sqrt(3.0) / 2.0 * isd])
    wraps = np.empty((N_WRAP, 2))
    for k in range(N_WRAP):
        a = k * math.pi / 3.0
        c, s = math.cos(a), math.sin(a)
        wraps[k] = (c * base[0] - s * base[1], s * base[0] + c * base[1])

    # drop region: convex hull of the sites (hexagon through the outer ring)
    # with every edge pushed out by isd/2
    hull_r = isd if n_sites == 7 else isd  # degenerate 1-site case keeps scale
    inradius = hull_r * math.sqrt(3.0) / 2.0
    scale = (inradius + isd / 2.0) / inradius
    region = _hex_vertices(hull_r * scale)

    return CellTopology(
        sites=sites,
        cell_site=cell_site,
        cell_boresight=cell_boresight,
        isd=float(isd),
        wrap_images=wraps,
        region_vertices=region,
    )


def in_region(points: np.ndarray, topo: CellTopology) -> np.ndarray:
    """Convex-polygon containment, vectorized over (..., 2) points."""
    pts = np.asarray(points, dtype=float)
    verts = topo.region_vertices
    nxt = np.roll(verts, -1, axis=0)
    edge = nxt - verts                       # (6, 2)
    rel = pts[..., None, :] - verts          # (..., 6, 2)
    cross = edge[:, 0] * rel[..., 1] - edge[:, 1] * rel[..., 0]
    return np.all(cross >= -1e-9, axis=-1)


def effective_displacement(
    a: np.ndarray, b: np.ndarray, topo: CellTopology
) -> tuple[np.ndarray, float]:
    """Minimum-norm displacement from a to b over b and its six wrap images."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    candidates = np.vstack([b - a, b + topo.wrap_images - a])  # (7, 2)
    dist = np.linalg.norm(candidates, axis=1)
    best = int(np.argmin(dist))
    return candidates[best], float(dist[best])


def wrapped_vectors(
    origins: np.ndarray, targets: np.ndarray, topo: CellTopology
) -> tuple[np.ndarray, np.ndarray]:
    """Min-norm displacement from each origin to each target.

    origins (N, 2), targets (M, 2) -> vectors (N, M, 2), distances (N, M).
    """
    shifts = np.vstack([np.zeros((1, 2)), topo.wrap_images])       # (7, 2)
    cand = (
        targets[None, :, None, :] + shifts[None, None, :, :]
        - origins[:, None, None, :]
    )                                                              # (N, M, 7, 2)
    dist = np.linalg.norm(cand, axis=-1)
    best = np.argmin(dist, axis=-1)                                # (N, M)
    vecs = np.take_along_axis(cand, best[..., None, None], axis=2)[:, :, 0, :]
    dmin = np.take_along_axis(dist, best[..., None], axis=2)[..., 0]
    return vecs, dmin


def drop_ues(
    n: int, seed: int, topo: CellTopology, speed_mps: float = 60.0 / 3.6
) -> list[UEKinematics]:
    """Uniform positions over the padded layout region, uniform headings."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    radius = float(np.max(np.linalg.norm(topo.region_vertices, axis=1)))
    positions = np.empty((n, 2))
    got = 0
    while got < n:
        batch = rng.uniform(-radius, radius, size=(2 * (n - got) + 8, 2))
        keep = batch[in_region(batch, topo)]
        take = min(len(keep), n - got)
        positions[got:got + take] = keep[:take]
        got += take
    headings = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return [
        UEKinematics(position=positions[i].copy(), speed=float(speed_mps),
                     heading=float(headings[i]))
        for i in range(n)
    ]


def advance_ue(ue: UEKinematics, dt: float, topo: CellTopology) -> UEKinematics:
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    step = ue.speed * dt * np.array([math.cos(ue.heading), math.sin(ue.heading)])
    new_pos = ue.position + step
    if not bool(in_region(new_pos, topo)):
        new_pos = _reenter(new_pos, topo)
    return replace(ue, position=new_pos)


def _reenter(pos: np.ndarray, topo: CellTopology) -> np.ndarray:
    candidates = pos - topo.wrap_images  # one lattice translation back
    inside = in_region(candidates, topo)
    if np.any(inside):
        picks = candidates[inside]
        return picks[int(np.argmin(np.linalg.norm(picks, axis=1)))].copy()
    # point escaped further than one translation (never for dt*speed << isd);
    # fall back to the min-norm representative
    return candidates[int(np.argmin(np.linalg.norm(candidates, axis=1)))].copy()


def advance_positions(
    positions: np.ndarray, headings: np.ndarray, speed: float, dt: float,
    topo: CellTopology,
) -> np.ndarray:
    """Vectorized advance_ue over (N, 2) positions."""
    step = speed * dt
    new = positions + step * np.stack(
        [np.cos(headings), np.sin(headings)], axis=1
    )
    outside = ~in_region(new, topo)
    for i in np.nonzero(outside)[0]:
        new[i] = _reenter(new[i], topo)
    return new

"""Synthetic urban scene generation and geometric path tracing.

Scenes are a 2D area with one base station, axis-aligned rectangular
buildings and a grid of mobile terminals. Propagation uses the direct
segment (LOS) plus one specular reflection per building wall via the
image method; no diffraction or scattering.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import NO_NOISE, PathRecord, add_noise, adcam, cfr_from_paths

__all__ = [
    "Rect",
    "SceneConfig",
    "Sample",
    "trace_paths",
    "build_dataset",
    "nlos_filter",
    "scene_from_json",
    "scene_to_json",
]

SPEED_OF_LIGHT = 2.99792458e8

# Tolerance for "segment passes through a building" tests; also used to
# nudge angles off the array axis.
_EPS = 1e-9
_ANGLE_EPS = 1e-6


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle (building footprint), origin at lower-left."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("rectangle must have positive extent")

    def contains(self, p: Sequence[float], margin: float = 0.0) -> bool:
        px, py = p
        return (
            self.x - margin < px < self.x + self.w + margin
            and self.y - margin < py < self.y + self.h + margin
        )

    def walls(self):
        """Four wall segments as ((x1, y1), (x2, y2)) tuples."""
        x0, y0, x1, y1 = self.x, self.y, self.x + self.w, self.y + self.h
        return [
            ((x0, y0), (x1, y0)),
            ((x1, y0), (x1, y1)),
            ((x1, y1), (x0, y1)),
            ((x0, y1), (x0, y0)),
        ]


@dataclass
class SceneConfig:
    """Scene layout plus channel and sampling parameters."""

    area_m: tuple[float, float] = (250.0, 250.0)
    bs_pos: tuple[float, float] = (125.0, 125.0)
    buildings: list[Rect] = field(default_factory=list)
    grid_spacing_m: float = 10.0
    grid_jitter: float = 0.0  # fraction of half-spacing, in [0, 1]
    carrier_hz: float = 60e9
    bandwidth_hz: float = 0.05e9
    nc: int = 64
    nt: int = 64
    maxpathnum: int = 10
    reflection_loss_db: float = 6.0
    spacing_ratio: float = 0.5
    snr_db: float = NO_NOISE
    seed: int = 0

    def __post_init__(self):
        self.buildings = [b if isinstance(b, Rect) else Rect(*b) for b in self.buildings]
        w, h = self.area_m
        for b in self.buildings:
            if b.x < 0 or b.y < 0 or b.x + b.w > w or b.y + b.h > h:
                raise ValueError(f"building {b} lies outside the {w}x{h} area")
        bx, by = self.bs_pos
        if not (0 <= bx <= w and 0 <= by <= h):
            raise ValueError("bs_pos outside area")
        for b in self.buildings:
            if b.contains(self.bs_pos):
                raise ValueError("bs_pos inside a building")
        if self.maxpathnum < 1:
            raise ValueError("maxpathnum must be >= 1")

    @property
    def sample_interval_s(self) -> float:
        return 1.0 / self.bandwidth_hz

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz


@dataclass
class Sample:
    """One terminal position with its traced paths and fingerprints."""

    id: int
    pos: tuple[float, float]
    paths: list[PathRecord]
    is_los: bool
    cfr: np.ndarray
    adcam: np.ndarray


def _segment_blocked(p: Sequence[float], q: Sequence[float], rect: Rect) -> bool:
    """True iff the open segment p->q passes through the rectangle interior.

    Liang-Barsky clipping; a segment that merely grazes a wall or corner
    does not count as blocked.
    """
    px, py = p
    dx, dy = q[0] - px, q[1] - py
    t0, t1 = 0.0, 1.0
    for pos0, delta, lo, hi in (
        (px, dx, rect.x, rect.x + rect.w),
        (py, dy, rect.y, rect.y + rect.h),
    ):
        if abs(delta) < _EPS:
            if pos0 <= lo or pos0 >= hi:
                return False
            continue
        ta = (lo - pos0) / delta
        tb = (hi - pos0) / delta
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 >= t1:
            return False
    if t1 - t0 <= _EPS:
        return False
    # Interval may lie along a wall; require the midpoint strictly inside.
    tm = 0.5 * (t0 + t1)
    mx, my = px + tm * dx, py + tm * dy
    return rect.x + _EPS < mx < rect.x + rect.w - _EPS and rect.y + _EPS < my < rect.y + rect.h - _EPS


def _clear(p, q, buildings) -> bool:
    return not any(_segment_blocked(p, q, b) for b in buildings)


def _angle_in_open_interval(dx: float, dy: float) -> float:
    """Angle of direction (dx, dy) against the +x array axis, in (0, pi)."""
    n = np.hypot(dx, dy)
    if n == 0:
        return np.pi / 2.0
    phi = float(np.arccos(np.clip(dx / n, -1.0, 1.0)))
    return float(np.clip(phi, _ANGLE_EPS, np.pi - _ANGLE_EPS))


def _friis_pathloss_db(length_m: float, carrier_hz: float) -> float:
    return 20.0 * np.log10(4.0 * np.pi * length_m * carrier_hz / SPEED_OF_LIGHT)


def _make_path(
    scene: SceneConfig,
    length_m: float,
    arrive_dir: tuple[float, float],
    depart_dir: tuple[float, float],
    bounces: int,
) -> PathRecord:
    delay = int(round(length_m / SPEED_OF_LIGHT / scene.sample_interval_s))
    delay = min(max(delay, 0), scene.nc - 1)
    pathloss = _friis_pathloss_db(length_m, scene.carrier_hz)
    pathloss = max(pathloss, 0.0) + bounces * scene.reflection_loss_db
    phase = 2.0 * np.pi * length_m / scene.wavelength_m
    return PathRecord(
        aoa=_angle_in_open_interval(*arrive_dir),
        aod=_angle_in_open_interval(*depart_dir),
        gain=complex(np.exp(-1j * phase)),
        delay_samples=delay,
        pathloss_db=pathloss,
    )


def _mirror(point, wall):
    """Mirror a point across the (axis-aligned) line carrying a wall."""
    (x1, y1), (x2, y2) = wall
    px, py = point
    if x1 == x2:  # vertical wall
        return (2.0 * x1 - px, py)
    return (px, 2.0 * y1 - py)


def trace_paths(scene: SceneConfig, mt: Sequence[float]) -> tuple[list[PathRecord], bool]:
    """Trace LOS and first-order specular paths from the BS to one terminal.

    Returns the retained paths (strongest ``maxpathnum``, sorted by
    ascending delay) and whether an unobstructed direct segment exists.
    """
    mt = (float(mt[0]), float(mt[1]))
    w, h = scene.area_m
    if not (0 <= mt[0] <= w and 0 <= mt[1] <= h):
        raise ValueError(f"terminal {mt} outside area")
    for b in scene.buildings:
        if b.contains(mt):
            raise ValueError(f"terminal {mt} inside building {b}")
    bs = scene.bs_pos
    candidates: list[tuple[float, PathRecord]] = []

    is_los = _clear(bs, mt, scene.buildings)
    if is_los:
        length = float(np.hypot(mt[0] - bs[0], mt[1] - bs[1]))
        if length > 0:
            arrive = (mt[0] - bs[0], mt[1] - bs[1])
            depart = (bs[0] - mt[0], bs[1] - mt[1])
            candidates.append((length, _make_path(scene, length, arrive, depart, 0)))

    for b in scene.buildings:
        for wall in b.walls():
            (x1, y1), (x2, y2) = wall
            image = _mirror(bs, wall)
            dx, dy = mt[0] - image[0], mt[1] - image[1]
            # Intersection of image->MT with the wall's carrying line.
            if x1 == x2:
                if abs(dx) < _EPS:
                    continue
                t = (x1 - image[0]) / dx
                hit = (x1, image[1] + t * dy)
                lo, hi = min(y1, y2), max(y1, y2)
                on_wall = lo + _EPS < hit[1] < hi - _EPS
                same_side = (bs[0] - x1) * (mt[0] - x1) > 0
            else:
                if abs(dy) < _EPS:
                    continue
                t = (y1 - image[1]) / dy
                hit = (image[0] + t * dx, y1)
                lo, hi = min(x1, x2), max(x1, x2)
                on_wall = lo + _EPS < hit[0] < hi - _EPS
                same_side = (bs[1] - y1) * (mt[1] - y1) > 0
            if not (0.0 < t < 1.0 and on_wall and same_side):
                continue
            if not (_clear(bs, hit, scene.buildings) and _clear(hit, mt, scene.buildings)):
                continue
            length = float(np.hypot(mt[0] - image[0], mt[1] - image[1]))
            arrive = (hit[0] - bs[0], hit[1] - bs[1])
            depart = (hit[0] - mt[0], hit[1] - mt[1])
            candidates.append((length, _make_path(scene, length, arrive, depart, 1)))

    if not candidates:
        return [], is_los
    paths = [p for _, p in candidates]
    paths.sort(key=lambda p: p.pathloss_db)
    paths = paths[: scene.maxpathnum]
    paths.sort(key=lambda p: (p.delay_samples, p.pathloss_db))
    return paths, is_los


def build_dataset(scene: SceneConfig) -> list[Sample]:
    """One sample per reachable grid terminal, in grid-index order."""
    w, h = scene.area_m
    rng = np.random.default_rng(scene.seed)
    spacing = scene.grid_spacing_m
    xs = np.arange(spacing / 2.0, w, spacing)
    ys = np.arange(spacing / 2.0, h, spacing)
    samples: list[Sample] = []
    sid = 0
    for gy in ys:
        for gx in xs:
            # one jitter draw per grid point keeps sampling deterministic
            # regardless of which points survive
            jit = rng.uniform(-0.5, 0.5, size=2) * spacing * scene.grid_jitter
            pos = (float(np.clip(gx + jit[0], 0.0, w)), float(np.clip(gy + jit[1], 0.0, h)))
            if any(b.contains(pos) for b in scene.buildings):
                continue
            paths, is_los = trace_paths(scene, pos)
            if not paths:
                continue
            cfr = cfr_from_paths(paths, scene.nt, scene.nc, scene.spacing_ratio)
            if scene.snr_db != NO_NOISE:
                cfr = add_noise(cfr, scene.snr_db, seed=scene.seed * 1_000_003 + sid)
            samples.append(
                Sample(id=sid, pos=pos, paths=paths, is_los=is_los, cfr=cfr, adcam=adcam(cfr))
            )
            sid += 1
    if not samples:
        raise ValueError("no reachable terminals in scene")
    return samples


def nlos_filter(samples: list[Sample], mode: str = "all") -> list[Sample]:
    """Keep NLOS-only samples or everything."""
    if mode == "all":
        out = list(samples)
    elif mode == "nlos_only":
        out = [s for s in samples if not s.is_los]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not out:
        raise ValueError(f"nlos_filter({mode!r}) left no samples")
    return out


def scene_to_json(scene: SceneConfig) -> dict:
    """SceneConfig as a plain dict with the scene.json key names."""
    return {
        "area_m": list(scene.area_m),
        "bs_pos": list(scene.bs_pos),
        "buildings": [[b.x, b.y, b.w, b.h] for b in scene.buildings],
        "grid_spacing_m": scene.grid_spacing_m,
        "grid_jitter": scene.grid_jitter,
        "carrier_hz": scene.carrier_hz,
        "bandwidth_hz": scene.bandwidth_hz,
        "nc": scene.nc,
        "nt": scene.nt,
        "maxpathnum": scene.maxpathnum,
        "reflection_loss_db": scene.reflection_loss_db,
        "spacing_ratio": scene.spacing_ratio,
        "snr_db": None if scene.snr_db == NO_NOISE else scene.snr_db,
        "seed": scene.seed,
    }


def scene_from_json(obj: dict | str) -> SceneConfig:
    """Parse a scene.json dict (or JSON text) into a SceneConfig."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    kwargs = dict(obj)
    if "area_m" in kwargs:
        kwargs["area_m"] = tuple(kwargs["area_m"])
    if "bs_pos" in kwargs:
        kwargs["bs_pos"] = tuple(kwargs["bs_pos"])
    if kwargs.get("snr_db") is None:
        kwargs["snr_db"] = NO_NOISE
    return SceneConfig(**kwargs)

"""Abdominal-cavity and table-setup model for coverage and clearance checks.

The cavity is a half-ellipsoid hanging below the wall plane; trocar sites and
the robot base-plus-clamp-arm live on that plane. Everything is desk-scale
geometry: good enough to ask "can the scope see it" and "does the base or the
clamp arm sit on an instrument port", nothing more.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .kinematics import JointLimits, Point3, ViewFrustum, is_reachable


@dataclass(frozen=True, slots=True)
class CavityModel:
    """Half-ellipsoid below the wall plane, semi-axes in mm.

    `center` defaults to the pivot's wall point; an offset center (used by
    synthetic test scenes) shifts the whole body, which must stay in z <= 0.
    """

    ax: float = 150.0
    ay: float = 120.0
    az: float = 120.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if min(self.ax, self.ay, self.az) <= 0:
            raise ValueError("semi-axes must be positive")
        if self.center[2] > 0:
            raise ValueError("cavity center must not sit above the wall plane")

    def contains(self, p: Point3) -> bool:
        dx = (p.x - self.center[0]) / self.ax
        dy = (p.y - self.center[1]) / self.ay
        dz = (p.z - self.center[2]) / self.az
        return p.z <= self.center[2] and dx * dx + dy * dy + dz * dz <= 1.0

    def sample(self, n: int, seed: int) -> np.ndarray:
        """n points uniform in the half-ellipsoid, reproducible per seed."""
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(n, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        radius = rng.uniform(size=(n, 1)) ** (1.0 / 3.0)
        ball = v * radius
        ball[:, 2] = -np.abs(ball[:, 2])  # fold into the lower half
        return ball * (self.ax, self.ay, self.az) + self.center


@dataclass(frozen=True, slots=True)
class TrocarSite:
    """Instrument port on the wall plane; position in mm, diameter in mm."""

    x: float
    y: float
    diameter: float = 10.0
    label: str = ""

    def __post_init__(self) -> None:
        if self.diameter <= 0:
            raise ValueError("diameter must be positive")


@dataclass(frozen=True, slots=True)
class BaseFootprint:
    """Robot base disc plus the clamp arm segment running to the table rail."""

    center: tuple[float, float] = (0.0, 0.0)
    diameter: float = 110.0
    clamp_arm: tuple[tuple[float, float], tuple[float, float]] = ((55.0, 0.0), (350.0, 0.0))

    def __post_init__(self) -> None:
        if self.diameter <= 0:
            raise ValueError("diameter must be positive")


class ConflictCause(Enum):
    BASE = "BASE"
    CLAMP_ARM = "CLAMP_ARM"


@dataclass(frozen=True, slots=True)
class Conflict:
    site: TrocarSite
    cause: ConflictCause
    distance: float  # mm, center-to-center or center-to-segment


@dataclass(frozen=True)
class Scene:
    cavity: CavityModel = CavityModel()
    base: BaseFootprint = BaseFootprint()
    sites: tuple[TrocarSite, ...] = ()


DEFAULT_SCENE = Scene()


def coverage(cavity: CavityModel, limits: JointLimits, samples: int, seed: int = 0) -> float:
    """Monte-Carlo fraction of the cavity the scope tip can reach.

    Cavity-uniform points are run through the reachability predicate; the
    result is exact for a given seed (PCG64 sequence, recorded in reports).
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples for a meaningful fraction")
    pts = cavity.sample(samples, seed)
    hits = sum(is_reachable(Point3(float(x), float(y), float(z)), limits)
               for x, y, z in pts)
    return hits / samples


def _segment_distance(px: float, py: float,
                      a: tuple[float, float], b: tuple[float, float]) -> float:
    ax, ay = a
    bx, by = b
    vx, vy = bx - ax, by - ay
    seg_len_sq = vx * vx + vy * vy
    if seg_len_sq == 0.0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * vx + (py - ay) * vy) / seg_len_sq))
    return math.hypot(px - (ax + t * vx), py - (ay + t * vy))


def check_clearance(sites: list[TrocarSite] | tuple[TrocarSite, ...],
                    base: BaseFootprint) -> list[Conflict]:
    """All base/clamp-arm collisions with instrument ports, in site order.

    A site conflicts with the base when the center distance is within the
    sum of radii, and with the clamp arm when its center is within the site
    radius of the segment. Boundaries count as conflicts (closed test).
    """
    conflicts: list[Conflict] = []
    base_r = base.diameter / 2.0
    for site in sites:
        site_r = site.diameter / 2.0
        d_base = math.hypot(site.x - base.center[0], site.y - base.center[1])
        if d_base <= base_r + site_r:
            conflicts.append(Conflict(site, ConflictCause.BASE, d_base))
        d_arm = _segment_distance(site.x, site.y, *base.clamp_arm)
        if d_arm <= site_r:
            conflicts.append(Conflict(site, ConflictCause.CLAMP_ARM, d_arm))
    return conflicts


def visible_targets(frustum: ViewFrustum, targets: list[Point3]) -> list[Point3]:
    """Targets inside the view cone: in front of the apex and within
    half_angle of the axis (boundary included)."""
    out: list[Point3] = []
    ax, ay, az = frustum.axis
    for t in targets:
        vx, vy, vz = t.x - frustum.apex.x, t.y - frustum.apex.y, t.z - frustum.apex.z
        along = vx * ax + vy * ay + vz * az
        if along <= 0.0:
            continue
        cx = vy * az - vz * ay
        cy = vz * ax - vx * az
        cz = vx * ay - vy * ax
        angle = math.degrees(math.atan2(math.hypot(cx, cy, cz), along))
        if angle <= frustum.half_angle + 1e-9:
            out.append(t)
    return out


# --- scene file ----------------------------------------------------------

def _as_xy(value) -> tuple[float, float]:
    x, y = value
    return (float(x), float(y))


def load_scene(path: str | Path) -> Scene:
    """Read the JSON scene description (see README for the schema)."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    cavity = CavityModel()
    if "cavity" in data:
        c = data["cavity"]
        sx, sy, sz = c.get("semi_axes_mm", (150.0, 120.0, 120.0))
        cx, cy, cz = c.get("center_mm", (0.0, 0.0, 0.0))
        cavity = CavityModel(float(sx), float(sy), float(sz),
                             (float(cx), float(cy), float(cz)))
    base = BaseFootprint()
    if "base" in data:
        b = data["base"]
        kwargs = {}
        if "center_mm" in b:
            kwargs["center"] = _as_xy(b["center_mm"])
        if "diameter_mm" in b:
            kwargs["diameter"] = float(b["diameter_mm"])
        if "clamp_arm_mm" in b:
            start, end = b["clamp_arm_mm"]
            kwargs["clamp_arm"] = (_as_xy(start), _as_xy(end))
        base = BaseFootprint(**kwargs)
    sites = tuple(
        TrocarSite(*_as_xy(s["position_mm"]),
                   diameter=float(s.get("diameter_mm", 10.0)),
                   label=str(s.get("label", "")))
        for s in data.get("trocar_sites", ())
    )
    return Scene(cavity=cavity, base=base, sites=sites)

"""Remote-center-of-motion geometry for a trocar-pivoting endoscope holder.

The scope pivots about a fixed point where it crosses the abdominal wall and
translates along its own axis. Joint state is held in exact fixed point so
that simulation runs replay bit for bit:

    pan        millidegrees, wraps modulo 360 000 (rotation about vertical)
    tilt       millidegrees, 0..80 000 (inclination from vertical)
    insertion  micrometers,  0..200 000 (axial travel through the trocar)

Patient frame: origin at the pivot, +z pointing out of the abdomen toward
the robot base, x/y spanning the abdominal-wall plane. Intra-cavity points
therefore have z < 0. With pan = theta and tilt = phi (radians), the scope
axis direction from pivot toward tip is

    (sin(phi)*cos(theta), sin(phi)*sin(theta), -cos(phi))

and the tip sits at insertion (in mm) times that direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

MDEG_FULL_TURN = 360_000

# Range checks tolerate float round-off well below one fixed-point quantum,
# so joints exactly at a limit always round-trip through the solver.
_TILT_EPS_MDEG = 1e-6
_RANGE_EPS_UM = 1e-3

Vec3 = tuple[float, float, float]


@dataclass(frozen=True, slots=True)
class JointLimits:
    """Motion ranges and speed ceilings; defaults match the device."""

    tilt_max: int = 80_000            # millidegrees
    insertion_max: int = 200_000      # micrometers
    pan_speed_max: int = 75_000       # millidegrees per second
    tilt_speed_max: int = 75_000      # millidegrees per second
    insertion_speed_max: int = 80_000  # micrometers per second

    def __post_init__(self) -> None:
        for name in ("tilt_max", "insertion_max", "pan_speed_max",
                     "tilt_speed_max", "insertion_speed_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_LIMITS = JointLimits()


@dataclass(frozen=True, slots=True)
class JointVector:
    """One robot configuration, exact integers for bit-exact replay.

    pan wraps modulo a full turn at construction; tilt and insertion must be
    non-negative here and are held inside the configured limits by every
    producer (controller clamps each tick, the solver checks ranges).
    """

    pan: int
    tilt: int
    insertion: int

    def __post_init__(self) -> None:
        for name in ("pan", "tilt", "insertion"):
            if not isinstance(getattr(self, name), int):
                raise TypeError(f"{name} must be an int")
        object.__setattr__(self, "pan", self.pan % MDEG_FULL_TURN)
        if self.tilt < 0:
            raise ValueError("tilt must be >= 0")
        if self.insertion < 0:
            raise ValueError("insertion must be >= 0")

    def clamped(self, limits: JointLimits) -> "JointVector":
        return JointVector(
            self.pan,
            min(self.tilt, limits.tilt_max),
            min(self.insertion, limits.insertion_max),
        )


@dataclass(frozen=True, slots=True)
class Point3:
    """Point in the patient frame, millimeters (see module docstring)."""

    x: float
    y: float
    z: float


@dataclass(frozen=True, slots=True)
class ScopePose:
    """Endoscope tip position plus unit axis direction (pivot toward tip)."""

    tip: Point3
    axis: Vec3


@dataclass(frozen=True, slots=True)
class ViewFrustum:
    """Camera view cone: apex at the tip, opening half_angle about the axis."""

    apex: Point3
    axis: Vec3
    half_angle: float  # degrees

    def __post_init__(self) -> None:
        if not 0.0 < self.half_angle < 90.0:
            raise ValueError("half_angle must be in (0, 90) degrees")


class UnreachableReason(Enum):
    """Why a target point has no joint solution."""

    TILT_OUT_OF_RANGE = "TiltOutOfRange"
    INSERTION_OUT_OF_RANGE = "InsertionOutOfRange"
    OUTSIDE_CAVITY = "OutsideCavity"


_ZERO_JOINTS = JointVector(0, 0, 0)


def forward_kinematics(j: JointVector, limits: JointLimits = DEFAULT_LIMITS) -> ScopePose:
    """Map a joint configuration to the scope pose.

    Deterministic for equal inputs; the input is clamped to the limits first
    so the returned pose is always physically attainable.
    """
    j = j.clamped(limits)
    theta = math.radians(j.pan / 1000.0)
    phi = math.radians(j.tilt / 1000.0)
    sin_phi = math.sin(phi)
    axis = (sin_phi * math.cos(theta), sin_phi * math.sin(theta), -math.cos(phi))
    s = j.insertion / 1000.0  # mm
    return ScopePose(tip=Point3(s * axis[0], s * axis[1], s * axis[2]), axis=axis)


def inverse_kinematics(
    target: Point3,
    current: JointVector = _ZERO_JOINTS,
    limits: JointLimits = DEFAULT_LIMITS,
) -> JointVector | UnreachableReason:
    """Solve for the joints that put the tip on `target`, or say why not.

    Spherical solution: tilt = arccos(-z/|target|), pan = atan2(y, x),
    insertion = |target|, each quantized to its fixed-point unit. When the
    solution is on the vertical axis (tilt quantizes to zero) the pan angle
    is unobservable, so `current.pan` is kept to avoid spurious base swings.

    Violations are reported in a fixed precedence: OUTSIDE_CAVITY (z >= 0),
    then INSERTION_OUT_OF_RANGE, then TILT_OUT_OF_RANGE.
    """
    if target.z >= 0:
        return UnreachableReason.OUTSIDE_CAVITY
    range_mm = math.sqrt(target.x * target.x + target.y * target.y + target.z * target.z)
    range_um = range_mm * 1000.0
    if range_um > limits.insertion_max + _RANGE_EPS_UM:
        return UnreachableReason.INSERTION_OUT_OF_RANGE
    cos_phi = min(1.0, max(-1.0, -target.z / range_mm))
    phi_mdeg = math.degrees(math.acos(cos_phi)) * 1000.0
    if phi_mdeg > limits.tilt_max + _TILT_EPS_MDEG:
        return UnreachableReason.TILT_OUT_OF_RANGE
    tilt = min(round(phi_mdeg), limits.tilt_max)
    insertion = min(round(range_um), limits.insertion_max)
    if tilt == 0:
        pan = current.pan
    else:
        pan = round(math.degrees(math.atan2(target.y, target.x)) * 1000.0) % MDEG_FULL_TURN
    return JointVector(pan, tilt, insertion)


def is_reachable(target: Point3, limits: JointLimits = DEFAULT_LIMITS) -> bool:
    """Whether the tip can be placed on `target`.

    Equivalent to membership in the spherical sector
    {|p| <= insertion_max, angle from -z <= tilt_max, z < 0}; implemented by
    the solver itself so both answers share identical boundary decisions.
    """
    return isinstance(inverse_kinematics(target, _ZERO_JOINTS, limits), JointVector)


def workspace_volume(limits: JointLimits = DEFAULT_LIMITS) -> float:
    """Analytic volume of the reachable spherical sector, cubic millimeters.

    (2*pi/3) * r^3 * (1 - cos(tilt_max)) with r = insertion travel in mm.
    """
    r_mm = limits.insertion_max / 1000.0
    phi_max = math.radians(limits.tilt_max / 1000.0)
    return (2.0 * math.pi / 3.0) * r_mm**3 * (1.0 - math.cos(phi_max))


def view_frustum(
    j: JointVector,
    limits: JointLimits = DEFAULT_LIMITS,
    fov: float = 70.0,
) -> ViewFrustum:
    """Camera view cone for a joint configuration; `fov` is the full optical
    field of view in degrees (0 < fov < 180)."""
    if not 0.0 < fov < 180.0:
        raise ValueError("fov must be in (0, 180) degrees")
    pose = forward_kinematics(j, limits)
    return ViewFrustum(apex=pose.tip, axis=pose.axis, half_angle=fov / 2.0)

"""Tick-driven motion controller with speed ceilings and safety interlocks.

One axis moves at a time, at exactly its configured top speed, advanced by a
fixed logical timestep. All state is integer fixed point, so a command/tick
sequence always reproduces the same trajectory bit for bit.

Modes: IDLE, MOVING (continuous, until stopped), STEPPING (one small fixed
increment), MANUAL (motors off, joints set by hand), FAULT (thermal trip).
The thermal model is synthetic: each axis carries an accumulator that charges
while that axis drives and decays otherwise; exceeding the budget trips a
FAULT that can only be reset after the accumulator has decayed below half the
budget. Constants are placeholders for real duty-cycle data and are fully
configurable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum, IntEnum

from .kinematics import DEFAULT_LIMITS, JointLimits, JointVector, MDEG_FULL_TURN

DEFAULT_DT_MS = 10


class Axis(IntEnum):
    """Driven axes. On the device: insertion is drive 1, pan (needle
    rotation) drive 2, tilt (pan-tilt stage) drive 3."""

    PAN = 0
    TILT = 1
    INSERTION = 2


class Mode(Enum):
    IDLE = "IDLE"
    MOVING = "MOVING"
    STEPPING = "STEPPING"
    MANUAL = "MANUAL"
    FAULT = "FAULT"


class MotionMode(Enum):
    CONTINUOUS = "CONTINUOUS"
    STEP = "STEP"


class FaultCause(Enum):
    THERMAL = "THERMAL"


@dataclass(frozen=True, slots=True)
class MotionRequest:
    axis: Axis
    direction: int  # +1 or -1
    mode: MotionMode = MotionMode.CONTINUOUS

    def __post_init__(self) -> None:
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")


@dataclass(frozen=True, slots=True)
class StepSizes:
    """Increment of one discrete-step command ("a few degrees")."""

    angular_step: int = 2_000      # millidegrees
    insertion_step: int = 5_000    # micrometers

    def __post_init__(self) -> None:
        if self.angular_step <= 0 or self.insertion_step <= 0:
            raise ValueError("step sizes must be positive")
        if self.angular_step > 10_000:
            raise ValueError("angular_step must stay within a few degrees (<= 10000 mdeg)")


@dataclass(frozen=True, slots=True)
class ThermalConfig:
    """Synthetic overheat model, in integer micro-units for exact ticks.

    Defaults: charge 1 unit/s while driving, decay 0.25 unit/s otherwise,
    budget 60 units (about one minute of continuous full-speed motion),
    resettable after decaying below half the budget.
    """

    charge_per_s: int = 1_000_000
    decay_per_s: int = 250_000
    budget: int = 60_000_000
    reset_fraction: float = 0.5

    def __post_init__(self) -> None:
        if min(self.charge_per_s, self.decay_per_s, self.budget) <= 0:
            raise ValueError("thermal rates and budget must be positive")
        if not 0.0 < self.reset_fraction <= 1.0:
            raise ValueError("reset_fraction must be in (0, 1]")


DEFAULT_STEPS = StepSizes()
DEFAULT_THERMAL = ThermalConfig()


@dataclass(frozen=True, slots=True)
class ControllerState:
    joints: JointVector
    mode: Mode = Mode.IDLE
    active: MotionRequest | None = None
    step_remaining: int = 0
    thermal: tuple[int, int, int] = (0, 0, 0)
    fault_cause: FaultCause | None = None

    @classmethod
    def initial(cls, joints: JointVector | None = None) -> "ControllerState":
        return cls(joints=joints if joints is not None else JointVector(0, 0, 0))


class CommandRejected(Exception):
    """Motion command refused because the controller is in FAULT or MANUAL."""

    def __init__(self, mode: Mode):
        super().__init__(f"command rejected in {mode.value}")
        self.mode = mode


class NotInManualMode(Exception):
    pass


class FaultNotClearable(Exception):
    pass


def _axis_speed(limits: JointLimits, axis: Axis) -> int:
    if axis is Axis.PAN:
        return limits.pan_speed_max
    if axis is Axis.TILT:
        return limits.tilt_speed_max
    return limits.insertion_speed_max


def tick(
    state: ControllerState,
    dt_ms: int = DEFAULT_DT_MS,
    limits: JointLimits = DEFAULT_LIMITS,
    thermal: ThermalConfig = DEFAULT_THERMAL,
) -> ControllerState:
    """Advance one fixed timestep; pure function of (state, dt).

    While MOVING/STEPPING the active axis advances by exactly speed*dt
    (truncated to the step remainder when STEPPING); pan wraps, tilt and
    insertion saturate at their limits. A step that exhausts its remainder
    or is truncated by a limit drops back to IDLE. The active axis charges
    its thermal accumulator, every other axis decays; exceeding the budget
    trips FAULT(THERMAL) and cancels the motion.
    """
    driving = state.mode in (Mode.MOVING, Mode.STEPPING)
    joints = state.joints
    mode = state.mode
    active = state.active
    step_remaining = state.step_remaining

    if driving:
        axis = active.axis
        delta = _axis_speed(limits, axis) * dt_ms // 1000
        if mode is Mode.STEPPING:
            delta = min(delta, step_remaining)
        if axis is Axis.PAN:
            joints = JointVector((joints.pan + active.direction * delta) % MDEG_FULL_TURN,
                                 joints.tilt, joints.insertion)
            actual = delta
        elif axis is Axis.TILT:
            new = min(max(joints.tilt + active.direction * delta, 0), limits.tilt_max)
            actual = abs(new - joints.tilt)
            joints = JointVector(joints.pan, new, joints.insertion)
        else:
            new = min(max(joints.insertion + active.direction * delta, 0),
                      limits.insertion_max)
            actual = abs(new - joints.insertion)
            joints = JointVector(joints.pan, joints.tilt, new)
        if mode is Mode.STEPPING:
            step_remaining -= actual
            if step_remaining <= 0 or actual < delta:
                # step complete, or a hard limit truncated it
                mode = Mode.IDLE
                active = None
                step_remaining = 0

    charge = thermal.charge_per_s * dt_ms // 1000
    decay = thermal.decay_per_s * dt_ms // 1000
    active_idx = state.active.axis if driving else None
    acc = tuple(
        state.thermal[i] + charge if i == active_idx else max(0, state.thermal[i] - decay)
        for i in range(3)
    )

    fault_cause = state.fault_cause
    if driving and acc[active_idx] > thermal.budget:
        mode = Mode.FAULT
        fault_cause = FaultCause.THERMAL
        active = None
        step_remaining = 0

    return ControllerState(joints=joints, mode=mode, active=active,
                           step_remaining=step_remaining, thermal=acc,
                           fault_cause=fault_cause)


def command(
    state: ControllerState,
    req: MotionRequest,
    steps: StepSizes = DEFAULT_STEPS,
) -> ControllerState:
    """Start a continuous or stepped motion; preempts any motion in flight.

    Raises CommandRejected while in FAULT or MANUAL.
    """
    if state.mode is Mode.FAULT or state.mode is Mode.MANUAL:
        raise CommandRejected(state.mode)
    if req.mode is MotionMode.CONTINUOUS:
        return replace(state, mode=Mode.MOVING, active=req, step_remaining=0)
    step = steps.insertion_step if req.axis is Axis.INSERTION else steps.angular_step
    return replace(state, mode=Mode.STEPPING, active=req, step_remaining=step)


def stop(state: ControllerState) -> ControllerState:
    """Cancel any motion; idempotent; MANUAL and FAULT are unchanged."""
    if state.mode in (Mode.MOVING, Mode.STEPPING):
        return replace(state, mode=Mode.IDLE, active=None, step_remaining=0)
    return state


def set_manual(state: ControllerState, on: bool) -> ControllerState:
    """Engage or release the motors-off clutch mode.

    Engaging cancels any motion. FAULT is sticky: the clutch toggle does not
    bypass reset_fault, so the state is returned unchanged while faulted.
    """
    if state.mode is Mode.FAULT:
        return state
    if on:
        return replace(state, mode=Mode.MANUAL, active=None, step_remaining=0)
    if state.mode in (Mode.MANUAL, Mode.MOVING, Mode.STEPPING):
        return replace(state, mode=Mode.IDLE, active=None, step_remaining=0)
    return state


def set_joints_manual(
    state: ControllerState,
    joints: JointVector,
    limits: JointLimits = DEFAULT_LIMITS,
) -> ControllerState:
    """Hand-reposition the back-driveable joints; only legal in MANUAL."""
    if state.mode is not Mode.MANUAL:
        raise NotInManualMode(f"cannot set joints by hand in {state.mode.value}")
    return replace(state, joints=joints.clamped(limits))


def reset_fault(
    state: ControllerState,
    thermal: ThermalConfig = DEFAULT_THERMAL,
) -> ControllerState:
    """Clear a FAULT once the hot accumulator has cooled below the reset
    threshold; no-op outside FAULT; FaultNotClearable while still hot."""
    if state.mode is not Mode.FAULT:
        return state
    threshold = int(thermal.budget * thermal.reset_fraction)
    hottest = max(state.thermal)
    if hottest >= threshold:
        raise FaultNotClearable(
            f"accumulator at {hottest} of budget {thermal.budget}; "
            f"needs to decay below {threshold}")
    return replace(state, mode=Mode.IDLE, fault_cause=None)

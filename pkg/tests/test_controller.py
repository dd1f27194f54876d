"""Controller state machine tests: speeds, clamps, steps, clutch, thermal trip."""

import random

import pytest

from trocarsim.controller import (
    Axis,
    CommandRejected,
    ControllerState,
    DEFAULT_STEPS,
    DEFAULT_THERMAL,
    FaultCause,
    FaultNotClearable,
    Mode,
    MotionMode,
    MotionRequest,
    NotInManualMode,
    StepSizes,
    ThermalConfig,
    command,
    reset_fault,
    set_joints_manual,
    set_manual,
    stop,
    tick,
)
from trocarsim.kinematics import JointVector

MOVE = MotionMode.CONTINUOUS
STEP = MotionMode.STEP


def run_ticks(state, n, **kw):
    for _ in range(n):
        state = tick(state, **kw)
    return state


class TestTick:
    def test_idle_tick_only_decays_thermal(self):
        s0 = ControllerState(joints=JointVector(1_000, 2_000, 3_000),
                             thermal=(5_000, 0, 9_000))
        s1 = tick(s0)
        assert s1.joints == s0.joints
        assert s1.mode is Mode.IDLE
        assert s1.thermal == (2_500, 0, 6_500)

    def test_pan_advances_exactly_750_mdeg_per_tick(self):
        # 75000 mdeg/s at a 10 ms tick
        s = command(ControllerState.initial(), MotionRequest(Axis.PAN, +1, MOVE))
        s = tick(s)
        assert s.joints.pan == 750
        s = run_ticks(s, 3)
        assert s.joints.pan == 3_000

    def test_insertion_advances_exactly_800_um_per_tick(self):
        s = command(ControllerState.initial(), MotionRequest(Axis.INSERTION, +1, MOVE))
        s = tick(s)
        assert s.joints.insertion == 800

    def test_tilt_clamps_at_limit_not_beyond(self):
        s0 = ControllerState(joints=JointVector(0, 79_900, 0))
        s = command(s0, MotionRequest(Axis.TILT, +1, MOVE))
        s = tick(s)
        assert s.joints.tilt == 80_000
        assert s.mode is Mode.MOVING  # continuous motion holds at the wall
        s = tick(s)
        assert s.joints.tilt == 80_000

    def test_pan_wraps_across_zero_both_ways(self):
        s = command(ControllerState.initial(), MotionRequest(Axis.PAN, -1, MOVE))
        s = tick(s)
        assert s.joints.pan == 359_250
        s0 = ControllerState(joints=JointVector(359_500, 0, 0))
        s = command(s0, MotionRequest(Axis.PAN, +1, MOVE))
        s = tick(s)
        assert s.joints.pan == 250

    def test_insertion_saturates_at_zero(self):
        s0 = ControllerState(joints=JointVector(0, 0, 500))
        s = command(s0, MotionRequest(Axis.INSERTION, -1, MOVE))
        s = tick(s)
        assert s.joints.insertion == 0


class TestStepping:
    def test_single_step_moves_exactly_step_size(self):
        s = command(ControllerState.initial(), MotionRequest(Axis.PAN, +1, STEP))
        assert s.mode is Mode.STEPPING
        assert s.step_remaining == DEFAULT_STEPS.angular_step
        ticks = 0
        while s.mode is Mode.STEPPING:
            s = tick(s)
            ticks += 1
        assert s.joints.pan == 2_000
        assert ticks == 3  # 750 + 750 + 500
        assert s.mode is Mode.IDLE
        assert s.active is None

    def test_insertion_step_moves_exactly_5_mm(self):
        s = command(ControllerState.initial(), MotionRequest(Axis.INSERTION, +1, STEP))
        while s.mode is Mode.STEPPING:
            s = tick(s)
        assert s.joints.insertion == 5_000

    def test_step_truncated_by_limit_returns_to_idle(self):
        s0 = ControllerState(joints=JointVector(0, 79_000, 0))
        s = command(s0, MotionRequest(Axis.TILT, +1, STEP))
        s = run_ticks(s, 5)
        assert s.joints.tilt == 80_000
        assert s.mode is Mode.IDLE

    def test_custom_step_sizes_validate(self):
        with pytest.raises(ValueError):
            StepSizes(angular_step=0)
        with pytest.raises(ValueError):
            StepSizes(angular_step=20_000)


class TestCommandAndStop:
    def test_continuous_command_moves(self):
        s = command(ControllerState.initial(), MotionRequest(Axis.PAN, +1, MOVE))
        assert s.mode is Mode.MOVING
        assert s.active == MotionRequest(Axis.PAN, +1, MOVE)

    def test_new_command_preempts_current_motion(self):
        s = command(ControllerState.initial(), MotionRequest(Axis.PAN, +1, MOVE))
        s = tick(s)
        s = command(s, MotionRequest(Axis.TILT, -1, STEP))
        assert s.mode is Mode.STEPPING
        assert s.active.axis is Axis.TILT
        pan_before = s.joints.pan
        s = tick(s)
        assert s.joints.pan == pan_before  # pan motion stopped

    def test_command_rejected_in_fault_and_manual(self):
        faulted = ControllerState(joints=JointVector(0, 0, 0), mode=Mode.FAULT,
                                  fault_cause=FaultCause.THERMAL)
        with pytest.raises(CommandRejected) as e:
            command(faulted, MotionRequest(Axis.PAN, +1, MOVE))
        assert e.value.mode is Mode.FAULT
        manual = set_manual(ControllerState.initial(), True)
        with pytest.raises(CommandRejected) as e:
            command(manual, MotionRequest(Axis.PAN, +1, MOVE))
        assert e.value.mode is Mode.MANUAL

    def test_stop_is_idempotent_and_leaves_manual_fault(self):
        s = command(ControllerState.initial(), MotionRequest(Axis.PAN, +1, MOVE))
        s = stop(s)
        assert s.mode is Mode.IDLE and s.active is None
        assert stop(s) == s
        manual = set_manual(ControllerState.initial(), True)
        assert stop(manual).mode is Mode.MANUAL
        faulted = ControllerState(joints=JointVector(0, 0, 0), mode=Mode.FAULT,
                                  fault_cause=FaultCause.THERMAL)
        assert stop(faulted).mode is Mode.FAULT


class TestManual:
    def test_manual_toggle(self):
        s = command(ControllerState.initial(), MotionRequest(Axis.PAN, +1, MOVE))
        s = set_manual(s, True)
        assert s.mode is Mode.MANUAL and s.active is None
        assert set_manual(s, True).mode is Mode.MANUAL
        s = set_manual(s, False)
        assert s.mode is Mode.IDLE

    def test_manual_joints_are_clamped(self):
        s = set_manual(ControllerState.initial(), True)
        s = set_joints_manual(s, JointVector(10_000, 90_000, 50_000))
        assert s.joints == JointVector(10_000, 80_000, 50_000)

    def test_manual_joints_rejected_outside_manual(self):
        with pytest.raises(NotInManualMode):
            set_joints_manual(ControllerState.initial(), JointVector(0, 0, 0))

    def test_manual_tick_never_moves_joints(self):
        s = set_manual(ControllerState.initial(), True)
        s2 = run_ticks(s, 10)
        assert s2.joints == s.joints
        assert s2.mode is Mode.MANUAL


class TestThermal:
    def test_fault_trips_strictly_after_budget(self):
        # charge 10000 uU per tick against a 60e6 budget: 6000 ticks is at
        # the budget, the 6001st exceeds it
        s = command(ControllerState.initial(), MotionRequest(Axis.PAN, +1, MOVE))
        s = run_ticks(s, 6_000)
        assert s.mode is Mode.MOVING
        assert s.thermal[Axis.PAN] == DEFAULT_THERMAL.budget
        s = tick(s)
        assert s.mode is Mode.FAULT
        assert s.fault_cause is FaultCause.THERMAL
        assert s.active is None

    def test_fault_not_clearable_until_half_decay(self):
        s = command(ControllerState.initial(), MotionRequest(Axis.PAN, +1, MOVE))
        s = run_ticks(s, 6_001)
        assert s.mode is Mode.FAULT
        with pytest.raises(FaultNotClearable):
            reset_fault(s)
        # decay 2500 uU per idle tick from 60_010_000; below 30e6 after 12005
        s = run_ticks(s, 12_004)
        with pytest.raises(FaultNotClearable):
            reset_fault(s)
        s = tick(s)
        s = reset_fault(s)
        assert s.mode is Mode.IDLE
        assert s.fault_cause is None

    def test_reset_fault_noop_outside_fault(self):
        s = ControllerState.initial()
        assert reset_fault(s) == s

    def test_manual_toggle_does_not_bypass_fault(self):
        s = command(ControllerState.initial(), MotionRequest(Axis.PAN, +1, MOVE))
        s = run_ticks(s, 6_001)
        assert set_manual(s, True).mode is Mode.FAULT
        assert set_manual(s, False).mode is Mode.FAULT

    def test_inactive_axes_decay_while_one_drives(self):
        s0 = ControllerState(joints=JointVector(0, 0, 0), thermal=(0, 7_000, 0))
        s = command(s0, MotionRequest(Axis.PAN, +1, MOVE))
        s = tick(s)
        assert s.thermal == (10_000, 4_500, 0)

    def test_custom_thermal_config_validates(self):
        with pytest.raises(ValueError):
            ThermalConfig(budget=0)
        with pytest.raises(ValueError):
            ThermalConfig(reset_fraction=0.0)


class TestPropertiesFuzz:
    def test_ranges_hold_for_random_command_streams(self):
        rng = random.Random(99)
        s = ControllerState.initial()
        axes = list(Axis)
        for _ in range(2_000):
            roll = rng.random()
            if roll < 0.5:
                req = MotionRequest(rng.choice(axes), rng.choice((1, -1)),
                                    rng.choice((MOVE, STEP)))
                try:
                    s = command(s, req)
                except CommandRejected:
                    pass
            elif roll < 0.6:
                s = stop(s)
            elif roll < 0.7:
                s = set_manual(s, rng.random() < 0.5)
            elif roll < 0.75:
                try:
                    s = reset_fault(s)
                except FaultNotClearable:
                    pass
            for _ in range(rng.randrange(4)):
                prev = s.joints
                s = tick(s)
                assert 0 <= s.joints.pan < 360_000
                assert 0 <= s.joints.tilt <= 80_000
                assert 0 <= s.joints.insertion <= 200_000
                # speed ceiling: per-tick displacement never exceeds vmax*dt
                dp = abs(s.joints.pan - prev.pan)
                assert min(dp, 360_000 - dp) <= 750
                assert abs(s.joints.tilt - prev.tilt) <= 750
                assert abs(s.joints.insertion - prev.insertion) <= 800

    def test_identical_streams_give_identical_states(self):
        def run(seed):
            rng = random.Random(seed)
            s = ControllerState.initial()
            for _ in range(500):
                if rng.random() < 0.6:
                    try:
                        s = command(s, MotionRequest(rng.choice(list(Axis)),
                                                     rng.choice((1, -1)),
                                                     rng.choice((MOVE, STEP))))
                    except CommandRejected:
                        pass
                else:
                    s = stop(s)
                s = run_ticks(s, rng.randrange(3))
            return s

        assert run(4242) == run(4242)
        assert run(4242) != run(4243)

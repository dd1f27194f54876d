"""Deterministic simulator and control stack for a voice-steered,
trocar-pivoting endoscope holder: fixed-point kinematics, a velocity-limited
tick controller with safety interlocks, a text-command grammar, scene
coverage/clearance analysis, and a record/replay session service."""

from ._version import __version__
from .command import (
    CommandToken,
    GrammarConfig,
    GrammarError,
    InputSource,
    UnknownPhrase,
    arbitrate,
    default_grammar,
    dispatch,
    parse,
)
from .controller import (
    Axis,
    CommandRejected,
    ControllerState,
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
from .kinematics import (
    DEFAULT_LIMITS,
    JointLimits,
    JointVector,
    Point3,
    ScopePose,
    UnreachableReason,
    ViewFrustum,
    forward_kinematics,
    inverse_kinematics,
    is_reachable,
    view_frustum,
    workspace_volume,
)
from .scene import (
    BaseFootprint,
    CavityModel,
    Conflict,
    ConflictCause,
    Scene,
    TrocarSite,
    check_clearance,
    coverage,
    load_scene,
    visible_targets,
)
from .service import (
    LogCorrupt,
    ReplayReport,
    ScenarioScript,
    ScriptError,
    Session,
    SessionConfig,
    SessionLog,
    TelemetryFrame,
    load_script,
    parse_script,
    replay,
    run_scenario,
    script_from_log,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Session orchestration: fixed-timestep loop, scenario scripts, record/replay.

A session advances the controller on a 10 ms logical clock. Inputs are text
lines tagged with their source; each tick's arrivals are parsed, arbitrated
and dispatched before the controller tick, and a telemetry frame is captured
every `telemetry_interval` ticks (default 2, i.e. 50 Hz logical).

Everything downstream of input stamping is a pure function of the config and
the (tick, source, line) input sequence, so a session log regenerates
byte-for-byte. Telemetry lines are serialized with fixed precision (joints
as integers, tip to 3 decimals, axis to 6) to keep logs byte-stable; the
integer joints are the authoritative values, tip/axis are display fields.

Log layout: one JSON header line with the full resolved config, then
interleaved {"type":"input",...} and {"type":"telemetry",...} lines in tick
order.

Scenario files: `key = value` header lines, then `tick<TAB>line` rows;
'#' starts a comment. Ticks must be nondecreasing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import controller
from ._version import __version__
from .command import (
    Arbitrator,
    CommandToken,
    GrammarConfig,
    InputEvent,
    InputSource,
    Move,
    ResetFault,
    SetManual,
    SetMode,
    Stop,
    UnknownPhrase,
    default_grammar,
    dispatch,
    parse,
)
from .controller import (
    ControllerState,
    DEFAULT_STEPS,
    DEFAULT_THERMAL,
    Mode,
    MotionMode,
    StepSizes,
    ThermalConfig,
)
from .kinematics import DEFAULT_LIMITS, JointLimits, forward_kinematics


class ScriptError(Exception):
    """Scenario file rejected before any tick runs."""


class LogCorrupt(Exception):
    """Session log text that cannot be parsed back."""


@dataclass(frozen=True)
class SessionConfig:
    limits: JointLimits = DEFAULT_LIMITS
    steps: StepSizes = DEFAULT_STEPS
    thermal: ThermalConfig = DEFAULT_THERMAL
    grammar: GrammarConfig = field(default_factory=default_grammar)
    dt_ms: int = 10
    telemetry_interval: int = 2
    debounce_ms: int = 150
    invert_tilt: bool = False
    initial_mode: MotionMode = MotionMode.CONTINUOUS
    seed: int = 0
    ticks: int = 0

    def __post_init__(self) -> None:
        if self.dt_ms <= 0 or self.telemetry_interval <= 0:
            raise ValueError("dt_ms and telemetry_interval must be positive")
        if self.debounce_ms < 0 or self.ticks < 0:
            raise ValueError("debounce_ms and ticks must be non-negative")

    def header_dict(self, ticks: int | None = None) -> dict:
        return {
            "type": "header",
            "version": __version__,
            "dt_ms": self.dt_ms,
            "telemetry_interval": self.telemetry_interval,
            "ticks": self.ticks if ticks is None else ticks,
            "seed": self.seed,
            "debounce_ms": self.debounce_ms,
            "invert_tilt": self.invert_tilt,
            "initial_mode": self.initial_mode.value,
            "limits": {
                "tilt_max": self.limits.tilt_max,
                "insertion_max": self.limits.insertion_max,
                "pan_speed_max": self.limits.pan_speed_max,
                "tilt_speed_max": self.limits.tilt_speed_max,
                "insertion_speed_max": self.limits.insertion_speed_max,
            },
            "steps": {
                "angular_step": self.steps.angular_step,
                "insertion_step": self.steps.insertion_step,
            },
            "thermal": {
                "charge_per_s": self.thermal.charge_per_s,
                "decay_per_s": self.thermal.decay_per_s,
                "budget": self.thermal.budget,
                "reset_fraction": self.thermal.reset_fraction,
            },
            "grammar": {
                "case_insensitive": self.grammar.case_insensitive,
                "locale": self.grammar.locale,
                "phrases": {p: t.value for p, t in sorted(self.grammar.phrases.items())},
            },
        }

    def header_line(self, ticks: int | None = None) -> str:
        return json.dumps(self.header_dict(ticks), sort_keys=True,
                          separators=(",", ":"))

    @classmethod
    def from_header(cls, header: dict) -> "SessionConfig":
        try:
            limits = JointLimits(**{k: int(v) for k, v in header["limits"].items()})
            steps = StepSizes(**{k: int(v) for k, v in header["steps"].items()})
            th = header["thermal"]
            thermal = ThermalConfig(charge_per_s=int(th["charge_per_s"]),
                                    decay_per_s=int(th["decay_per_s"]),
                                    budget=int(th["budget"]),
                                    reset_fraction=float(th["reset_fraction"]))
            g = header["grammar"]
            grammar = GrammarConfig(
                phrases={p: CommandToken[t] for p, t in g["phrases"].items()},
                case_insensitive=bool(g["case_insensitive"]),
                locale=str(g["locale"]))
            return cls(limits=limits, steps=steps, thermal=thermal, grammar=grammar,
                       dt_ms=int(header["dt_ms"]),
                       telemetry_interval=int(header["telemetry_interval"]),
                       debounce_ms=int(header["debounce_ms"]),
                       invert_tilt=bool(header["invert_tilt"]),
                       initial_mode=MotionMode(header["initial_mode"]),
                       seed=int(header["seed"]),
                       ticks=int(header["ticks"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise LogCorrupt(f"bad header: {exc}") from exc


# --- telemetry ------------------------------------------------------------

def _fixed(value: float, decimals: int) -> str:
    s = f"{value:.{decimals}f}"
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]  # normalize -0.000 so logs stay byte-stable
    return s


@dataclass(frozen=True, slots=True)
class TelemetryFrame:
    tick: int
    pan_mdeg: int
    tilt_mdeg: int
    ins_um: int
    tip_mm: tuple[float, float, float]
    axis: tuple[float, float, float]
    mode: str
    fault: str | None
    active: str | None

    @classmethod
    def capture(cls, tick: int, state: ControllerState,
                limits: JointLimits) -> "TelemetryFrame":
        pose = forward_kinematics(state.joints, limits)
        return cls(
            tick=tick,
            pan_mdeg=state.joints.pan,
            tilt_mdeg=state.joints.tilt,
            ins_um=state.joints.insertion,
            tip_mm=(pose.tip.x, pose.tip.y, pose.tip.z),
            axis=pose.axis,
            mode=state.mode.value,
            fault=state.fault_cause.value if state.fault_cause else None,
            active=state.active.axis.name if state.active else None,
        )

    def to_line(self) -> str:
        tip = ",".join(_fixed(c, 3) for c in self.tip_mm)
        axis = ",".join(_fixed(c, 6) for c in self.axis)
        fault = f'"{self.fault}"' if self.fault else "null"
        active = f'"{self.active}"' if self.active else "null"
        return (f'{{"type":"telemetry","tick":{self.tick},'
                f'"pan_mdeg":{self.pan_mdeg},"tilt_mdeg":{self.tilt_mdeg},'
                f'"ins_um":{self.ins_um},"tip_mm":[{tip}],"axis":[{axis}],'
                f'"mode":"{self.mode}","fault":{fault},"active":{active}}}')


def input_line(tick: int, source: InputSource, line: str) -> str:
    return (f'{{"type":"input","tick":{tick},"source":"{source.value}",'
            f'"line":{json.dumps(line, ensure_ascii=True)}}}')


# --- session core ---------------------------------------------------------

RejectCallback = Callable[[str, str], None]


@dataclass
class _Pending:
    source: InputSource
    line: str
    token: CommandToken | None
    on_reject: RejectCallback | None


class Session:
    """One running simulation; single-owner, advanced tick by tick.

    Callers submit (source, line) pairs between ticks; step() stamps them
    with the current tick, logs them, pushes the surviving tokens through
    the controller, advances the clock and returns any telemetry lines due.
    """

    def __init__(self, config: SessionConfig):
        self.config = config
        self.state = ControllerState.initial()
        self.motion_mode = config.initial_mode
        self.tick_count = 0
        self.body: list[str] = []
        self._arbitrator = Arbitrator(config.debounce_ms)
        self._pending: list[_Pending] = []

    def submit(self, source: InputSource, line: str,
               on_reject: RejectCallback | None = None) -> CommandToken | UnknownPhrase:
        """Queue one input line for the next tick; returns the parse echo."""
        result = parse(line, self.config.grammar)
        token = result if isinstance(result, CommandToken) else None
        self._pending.append(_Pending(source, line, token, on_reject))
        return result

    def _apply(self, action, on_reject: RejectCallback | None) -> None:
        if isinstance(action, Move):
            try:
                self.state = controller.command(self.state, action.request,
                                                self.config.steps)
            except controller.CommandRejected as exc:
                if on_reject:
                    on_reject("CommandRejected", exc.mode.value)
        elif isinstance(action, Stop):
            self.state = controller.stop(self.state)
        elif isinstance(action, SetMode):
            self.motion_mode = action.mode
        elif isinstance(action, SetManual):
            self.state = controller.set_manual(self.state, action.on)
        elif isinstance(action, ResetFault):
            try:
                self.state = controller.reset_fault(self.state, self.config.thermal)
            except controller.FaultNotClearable as exc:
                if on_reject:
                    on_reject("FaultNotClearable", str(exc))

    def step(self) -> list[str]:
        cfg = self.config
        t = self.tick_count
        events: list[tuple[InputEvent, RejectCallback | None]] = []
        for item in self._pending:
            self.body.append(input_line(t, item.source, item.line))
            if item.token is not None:
                events.append((InputEvent(t * cfg.dt_ms, item.source, item.token),
                               item.on_reject))
        self._pending.clear()

        tokens = self._arbitrator.feed([e for e, _ in events])
        # the arbitrator may reorder/drop; route rejects to the earliest
        # pending submitter of that token
        remaining = list(events)
        for token in tokens:
            on_reject = None
            for i, (ev, cb) in enumerate(remaining):
                if ev.token is token:
                    on_reject = cb
                    del remaining[i]
                    break
            self._apply(dispatch(token, self.motion_mode, cfg.invert_tilt), on_reject)

        self.state = controller.tick(self.state, cfg.dt_ms, cfg.limits, cfg.thermal)
        self.tick_count += 1

        emitted: list[str] = []
        if self.tick_count % cfg.telemetry_interval == 0:
            frame = TelemetryFrame.capture(self.tick_count, self.state, cfg.limits)
            line = frame.to_line()
            self.body.append(line)
            emitted.append(line)
        return emitted

    def finalize(self) -> "SessionLog":
        header = self.config.header_line(ticks=self.tick_count)
        return SessionLog(lines=[header] + list(self.body))


# --- session log ----------------------------------------------------------

@dataclass
class SessionLog:
    """Header line plus interleaved input/telemetry lines, all raw strings."""

    lines: list[str]

    @property
    def header_line(self) -> str:
        return self.lines[0]

    def header(self) -> dict:
        try:
            header = json.loads(self.lines[0])
        except json.JSONDecodeError as exc:
            raise LogCorrupt(f"header is not JSON: {exc}") from exc
        if not isinstance(header, dict) or header.get("type") != "header":
            raise LogCorrupt("first line is not a header")
        return header

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SessionLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise LogCorrupt("empty log")
        log = cls(lines=lines)
        log.header()
        for i, line in enumerate(lines[1:], start=2):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogCorrupt(f"line {i}: not JSON: {exc}") from exc
            if not isinstance(obj, dict) or obj.get("type") not in ("input", "telemetry"):
                raise LogCorrupt(f"line {i}: unexpected record type")
        return log

    @classmethod
    def load(cls, path: str | Path) -> "SessionLog":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.text(), encoding="utf-8")

    def inputs(self) -> list[tuple[int, InputSource, str]]:
        out = []
        for line in self.lines[1:]:
            obj = json.loads(line)
            if obj["type"] == "input":
                try:
                    out.append((int(obj["tick"]), InputSource(obj["source"]),
                                str(obj["line"])))
                except (KeyError, ValueError) as exc:
                    raise LogCorrupt(f"bad input record: {exc}") from exc
        return out

    def telemetry_lines(self) -> list[str]:
        return [ln for ln in self.lines[1:]
                if json.loads(ln).get("type") == "telemetry"]


# --- scenario scripts -----------------------------------------------------

@dataclass(frozen=True)
class ScenarioScript:
    config: SessionConfig
    rows: tuple[tuple[int, str], ...]


_HEADER_INT_KEYS = {
    "ticks", "seed", "dt_ms", "telemetry_interval", "debounce_ms",
    "tilt_max", "insertion_max", "pan_speed_max", "tilt_speed_max",
    "insertion_speed_max", "angular_step", "insertion_step",
    "thermal_charge_per_s", "thermal_decay_per_s", "thermal_budget",
}


def parse_script(text: str, base_dir: str | Path | None = None) -> ScenarioScript:
    """Parse a scenario file; raises ScriptError before anything runs."""
    values: dict[str, object] = {}
    rows: list[tuple[int, str]] = []
    last_tick = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "\t" in line and line.split("\t", 1)[0].strip().isdigit():
            tick_text, input_text = line.split("\t", 1)
            tick = int(tick_text)
            if tick < last_tick:
                raise ScriptError(f"line {lineno}: ticks must be nondecreasing")
            last_tick = tick
            rows.append((tick, input_text))
            continue
        if rows:
            raise ScriptError(f"line {lineno}: header keys must precede rows")
        if "=" not in line:
            raise ScriptError(f"line {lineno}: expected 'key = value' or 'tick<TAB>line'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _HEADER_INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ScriptError(f"line {lineno}: {key} must be an integer") from None
        elif key == "thermal_reset_fraction":
            try:
                values[key] = float(value)
            except ValueError:
                raise ScriptError(f"line {lineno}: {key} must be a number") from None
        elif key == "invert_tilt":
            values[key] = value.lower() in ("1", "true", "yes", "on")
        elif key == "mode":
            try:
                values[key] = MotionMode(value.upper())
            except ValueError:
                raise ScriptError(f"line {lineno}: mode must be CONTINUOUS or STEP") from None
        elif key == "grammar":
            values[key] = value
        else:
            raise ScriptError(f"line {lineno}: unknown header key {key!r}")

    grammar = None
    if "grammar" in values:
        path = Path(values.pop("grammar"))
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        try:
            grammar = GrammarConfig.load(path)
        except OSError as exc:
            raise ScriptError(f"cannot read grammar file: {exc}") from exc
        except ValueError as exc:
            raise ScriptError(f"bad grammar file: {exc}") from exc

    try:
        limits = JointLimits(
            tilt_max=values.pop("tilt_max", DEFAULT_LIMITS.tilt_max),
            insertion_max=values.pop("insertion_max", DEFAULT_LIMITS.insertion_max),
            pan_speed_max=values.pop("pan_speed_max", DEFAULT_LIMITS.pan_speed_max),
            tilt_speed_max=values.pop("tilt_speed_max", DEFAULT_LIMITS.tilt_speed_max),
            insertion_speed_max=values.pop("insertion_speed_max",
                                           DEFAULT_LIMITS.insertion_speed_max))
        steps = StepSizes(
            angular_step=values.pop("angular_step", DEFAULT_STEPS.angular_step),
            insertion_step=values.pop("insertion_step", DEFAULT_STEPS.insertion_step))
        thermal = ThermalConfig(
            charge_per_s=values.pop("thermal_charge_per_s", DEFAULT_THERMAL.charge_per_s),
            decay_per_s=values.pop("thermal_decay_per_s", DEFAULT_THERMAL.decay_per_s),
            budget=values.pop("thermal_budget", DEFAULT_THERMAL.budget),
            reset_fraction=values.pop("thermal_reset_fraction",
                                      DEFAULT_THERMAL.reset_fraction))
        default_ticks = rows[-1][0] + 1 if rows else 0
        config = SessionConfig(
            limits=limits, steps=steps, thermal=thermal,
            grammar=grammar if grammar is not None else default_grammar(),
            dt_ms=values.pop("dt_ms", 10),
            telemetry_interval=values.pop("telemetry_interval", 2),
            debounce_ms=values.pop("debounce_ms", 150),
            invert_tilt=values.pop("invert_tilt", False),
            initial_mode=values.pop("mode", MotionMode.CONTINUOUS),
            seed=values.pop("seed", 0),
            ticks=values.pop("ticks", default_ticks))
    except ValueError as exc:
        raise ScriptError(f"bad configuration value: {exc}") from exc

    if rows and config.ticks <= rows[-1][0]:
        raise ScriptError(
            f"ticks = {config.ticks} does not cover the last input at tick {rows[-1][0]}")
    return ScenarioScript(config=config, rows=tuple(rows))


def load_script(path: str | Path) -> ScenarioScript:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScriptError(f"cannot read script: {exc}") from exc
    return parse_script(text, base_dir=p.parent)


def run_scenario(script: ScenarioScript) -> SessionLog:
    """Run a script tick by tick; fully deterministic."""
    if script.rows and script.config.ticks <= script.rows[-1][0]:
        raise ScriptError("script duration does not cover its inputs")
    session = Session(script.config)
    by_tick: dict[int, list[str]] = {}
    for tick, line in script.rows:
        by_tick.setdefault(tick, []).append(line)
    for t in range(script.config.ticks):
        for line in by_tick.get(t, ()):
            session.submit(InputSource.VOICE, line)
        session.step()
    return session.finalize()


def script_from_log(log: SessionLog) -> ScenarioScript:
    """Rebuild a scenario from a recorded session's config and inputs."""
    config = SessionConfig.from_header(log.header())
    rows = tuple((tick, line) for tick, _source, line in log.inputs())
    return ScenarioScript(config=config, rows=rows)


# --- replay ---------------------------------------------------------------

_FRAME_FIELDS = ("type", "tick", "pan_mdeg", "tilt_mdeg", "ins_um",
                 "tip_mm", "axis", "mode", "fault", "active")


@dataclass(frozen=True)
class Divergence:
    tick: int
    field: str
    logged: str
    regenerated: str


@dataclass(frozen=True)
class ReplayReport:
    ok: bool
    ticks: int
    frames_compared: int
    divergence: Divergence | None = None


def _first_field_difference(logged: str, regenerated: str) -> tuple[int, str]:
    try:
        a = json.loads(logged)
        b = json.loads(regenerated)
    except json.JSONDecodeError:
        return (-1, "unparseable")
    tick = b.get("tick", a.get("tick", -1))
    for name in _FRAME_FIELDS:
        if a.get(name) != b.get(name):
            return (int(tick), name)
    return (int(tick), "encoding")


def replay(log: SessionLog) -> ReplayReport:
    """Re-run a log's inputs and verify every telemetry line byte for byte."""
    config = SessionConfig.from_header(log.header())
    logged = log.telemetry_lines()

    session = Session(config)
    by_tick: dict[int, list[tuple[InputSource, str]]] = {}
    for tick, source, line in log.inputs():
        by_tick.setdefault(tick, []).append((source, line))
    regenerated: list[str] = []
    for t in range(config.ticks):
        for source, line in by_tick.get(t, ()):
            session.submit(source, line)
        regenerated.extend(session.step())

    for got, want in zip(regenerated, logged):
        if got != want:
            tick, field_name = _first_field_difference(want, got)
            return ReplayReport(ok=False, ticks=config.ticks,
                                frames_compared=len(logged),
                                divergence=Divergence(tick, field_name, want, got))
    if len(regenerated) != len(logged):
        longer = regenerated if len(regenerated) > len(logged) else logged
        extra = json.loads(longer[min(len(regenerated), len(logged))])
        which = "missing_frame" if len(regenerated) > len(logged) else "extra_frame"
        return ReplayReport(ok=False, ticks=config.ticks,
                            frames_compared=min(len(regenerated), len(logged)),
                            divergence=Divergence(int(extra.get("tick", -1)), which,
                                                  "", ""))
    return ReplayReport(ok=True, ticks=config.ticks, frames_compared=len(logged))

"""Scenario runs, log structure, byte-exact determinism, and replay verdicts."""

import json

import pytest

from trocarsim.command import InputSource, UnknownPhrase
from trocarsim.service import (
    Divergence,
    LogCorrupt,
    ScenarioScript,
    ScriptError,
    Session,
    SessionConfig,
    SessionLog,
    TelemetryFrame,
    parse_script,
    replay,
    run_scenario,
    script_from_log,
)

FULL_PAN_SCRIPT = "ticks = 500\n0\tright\n480\tstop\n"
FULL_ZOOM_SCRIPT = "ticks = 300\n0\tzoom in\n250\tstop\n"


def frames_of(log):
    return [json.loads(line) for line in log.telemetry_lines()]


# --- scenario parsing -----------------------------------------------------

def test_parse_script_header_and_rows():
    script = parse_script("ticks = 100\nseed = 5\n# comment\n0\tright\n10\tstop\n")
    assert script.config.ticks == 100
    assert script.config.seed == 5
    assert script.rows == ((0, "right"), (10, "stop"))


def test_parse_script_duration_defaults_to_last_row():
    script = parse_script("0\tright\n41\tstop\n")
    assert script.config.ticks == 42


def test_parse_script_rejects_decreasing_ticks():
    with pytest.raises(ScriptError, match="nondecreasing"):
        parse_script("10\tright\n5\tstop\n")


def test_parse_script_rejects_unknown_key():
    with pytest.raises(ScriptError, match="unknown header key"):
        parse_script("warp_speed = 9\n")


def test_parse_script_rejects_missing_grammar_file(tmp_path):
    with pytest.raises(ScriptError, match="grammar"):
        parse_script("grammar = nowhere.grammar\n0\tstop\n", base_dir=tmp_path)


def test_parse_script_rejects_short_duration():
    with pytest.raises(ScriptError, match="does not cover"):
        parse_script("ticks = 10\n50\tstop\n")


def test_parse_script_rejects_header_after_rows():
    with pytest.raises(ScriptError, match="precede"):
        parse_script("0\tstop\nticks = 10\n")


def test_parse_script_custom_speeds_and_grammar(tmp_path):
    gfile = tmp_path / "g.grammar"
    from trocarsim.command import CommandToken
    gfile.write_text("\n".join(f"cmd {t.value.lower()} = {t.value}"
                               for t in CommandToken))
    script = parse_script("grammar = g.grammar\npan_speed_max = 10000\nticks = 2\n"
                          "0\tcmd right\n", base_dir=tmp_path)
    assert script.config.limits.pan_speed_max == 10_000
    log = run_scenario(script)
    assert frames_of(log)[-1]["pan_mdeg"] == 200  # 2 ticks at 100 mdeg per tick


# --- scenario runs --------------------------------------------------------

def test_empty_script_100_ticks_gives_50_idle_frames():
    log = run_scenario(ScenarioScript(config=SessionConfig(ticks=100), rows=()))
    frames = frames_of(log)
    assert len(frames) == 50
    assert [f["tick"] for f in frames] == list(range(2, 101, 2))
    for f in frames:
        assert f["mode"] == "IDLE"
        assert (f["pan_mdeg"], f["tilt_mdeg"], f["ins_um"]) == (0, 0, 0)
    # identical apart from the tick counter
    bodies = {json.dumps({k: v for k, v in f.items() if k != "tick"}, sort_keys=True)
              for f in frames}
    assert len(bodies) == 1


def test_full_pan_revolution_wraps_to_zero():
    log = run_scenario(parse_script(FULL_PAN_SCRIPT))
    frames = frames_of(log)
    by_tick = {f["tick"]: f for f in frames}
    assert by_tick[2]["pan_mdeg"] == 1_500
    assert by_tick[478]["pan_mdeg"] == 358_500
    assert by_tick[480]["pan_mdeg"] == 0  # 480 ticks * 750 mdeg = one revolution
    assert frames[-1]["pan_mdeg"] == 0
    assert frames[-1]["mode"] == "IDLE"


def test_full_insertion_travel_in_250_ticks():
    log = run_scenario(parse_script(FULL_ZOOM_SCRIPT))
    by_tick = {f["tick"]: f for f in frames_of(log)}
    assert by_tick[248]["ins_um"] == 198_400
    assert by_tick[250]["ins_um"] == 200_000
    assert by_tick[300]["ins_um"] == 200_000  # clamped, idle afterwards


def test_unknown_phrase_is_logged_but_moves_nothing():
    log = run_scenario(ScenarioScript(config=SessionConfig(ticks=10),
                                      rows=((0, "cauterize"),)))
    inputs = log.inputs()
    assert inputs == [(0, InputSource.VOICE, "cauterize")]
    assert all(f["mode"] == "IDLE" for f in frames_of(log))


def test_step_mode_token_changes_subsequent_dispatch():
    script = ScenarioScript(config=SessionConfig(ticks=40),
                            rows=((0, "step"), (1, "right")))
    frames = frames_of(run_scenario(script))
    # a 2 deg step finishes after 3 ticks and stays put
    assert frames[-1]["pan_mdeg"] == 2_000
    assert frames[-1]["mode"] == "IDLE"


def test_telemetry_ticks_strictly_increase_without_gaps():
    log = run_scenario(parse_script(FULL_PAN_SCRIPT))
    ticks = [f["tick"] for f in frames_of(log)]
    assert ticks == list(range(2, 501, 2))


def test_negative_zero_never_serialized():
    from trocarsim.controller import ControllerState
    from trocarsim.kinematics import DEFAULT_LIMITS, JointVector

    # pan 270 deg with a tiny tilt puts the tip at y ~ -1.7e-5 mm
    frame = TelemetryFrame.capture(
        2, ControllerState(joints=JointVector(270_000, 1, 1_000)), DEFAULT_LIMITS)
    line = frame.to_line()
    assert "-0.000," not in line and "[-0.000" not in line
    assert '"tip_mm":[0.000,0.000,-1.000]' in line


# --- determinism ----------------------------------------------------------

def test_run_scenario_twice_is_byte_identical():
    script = parse_script(FULL_PAN_SCRIPT)
    assert run_scenario(script).text() == run_scenario(script).text()


def test_header_round_trip_preserves_config():
    cfg = SessionConfig(ticks=100, seed=9, invert_tilt=True)
    restored = SessionConfig.from_header(json.loads(cfg.header_line()))
    assert restored == cfg


# --- replay ---------------------------------------------------------------

def test_replay_fresh_log_is_ok():
    log = run_scenario(parse_script(FULL_PAN_SCRIPT))
    report = replay(log)
    assert report.ok
    assert report.frames_compared == 250


def test_replay_detects_edited_joint_value():
    log = run_scenario(parse_script(FULL_PAN_SCRIPT))
    target = next(i for i, ln in enumerate(log.lines)
                  if '"tick":100,' in ln and '"telemetry"' in ln)
    assert '"pan_mdeg":75000' in log.lines[target]
    log.lines[target] = log.lines[target].replace('"pan_mdeg":75000', '"pan_mdeg":75001')
    report = replay(log)
    assert not report.ok
    assert report.divergence == Divergence(
        tick=100, field="pan_mdeg",
        logged=log.lines[target],
        regenerated=log.lines[target].replace('"pan_mdeg":75001', '"pan_mdeg":75000'))


def test_replay_detects_changed_speed_config():
    log = run_scenario(parse_script(FULL_PAN_SCRIPT))
    header = log.header()
    header["limits"]["pan_speed_max"] = 60_000
    log.lines[0] = json.dumps(header, sort_keys=True, separators=(",", ":"))
    report = replay(log)
    assert not report.ok
    assert report.divergence.tick == 2  # first frame already differs
    assert report.divergence.field == "pan_mdeg"


def test_replay_detects_single_character_flip():
    log = run_scenario(parse_script(FULL_ZOOM_SCRIPT))
    idx = next(i for i, ln in enumerate(log.lines) if '"tick":50,' in ln)
    line = log.lines[idx]
    pos = line.index('"ins_um":') + len('"ins_um":')
    flipped = line[:pos] + ("1" if line[pos] != "1" else "2") + line[pos + 1:]
    log.lines[idx] = flipped
    report = replay(log)
    assert not report.ok
    assert report.divergence.tick == 50
    assert report.divergence.field == "ins_um"


def test_replay_rejects_corrupt_logs():
    with pytest.raises(LogCorrupt):
        SessionLog.from_text("")
    with pytest.raises(LogCorrupt):
        SessionLog.from_text("not json at all\n")
    with pytest.raises(LogCorrupt):
        SessionLog.from_text('{"type":"telemetry","tick":2}\n')  # no header
    log = run_scenario(parse_script(FULL_PAN_SCRIPT))
    with pytest.raises(LogCorrupt):
        SessionLog.from_text(log.text().replace('"type":"input"', '"type":"mystery"', 1))


def test_log_text_round_trips_through_files(tmp_path):
    log = run_scenario(parse_script(FULL_PAN_SCRIPT))
    path = tmp_path / "session.log"
    log.save(path)
    loaded = SessionLog.load(path)
    assert loaded.lines == log.lines
    assert replay(loaded).ok


# --- script/log equivalence ------------------------------------------------

def test_script_from_log_replays_identical_telemetry():
    original = run_scenario(parse_script(FULL_PAN_SCRIPT))
    rebuilt = run_scenario(script_from_log(original))
    assert rebuilt.telemetry_lines() == original.telemetry_lines()


# --- live-style session (manual stepping) ----------------------------------

def test_session_submit_returns_parse_echo():
    session = Session(SessionConfig(ticks=0))
    from trocarsim.command import CommandToken
    assert session.submit(InputSource.KEYPAD, "zoom in") is CommandToken.IN
    assert session.submit(InputSource.VOICE, "cauterize") == UnknownPhrase("cauterize")


def test_session_reports_rejections_to_callback():
    session = Session(SessionConfig(ticks=0))
    session.submit(InputSource.VOICE, "manual on")
    session.step()
    notices = []
    session.submit(InputSource.VOICE, "right",
                   on_reject=lambda code, detail: notices.append((code, detail)))
    session.step()
    assert notices == [("CommandRejected", "MANUAL")]

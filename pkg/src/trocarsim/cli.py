"""Headless entry point: scenario runs, replay verification, live serving,
and workspace reports.

Exit codes: 0 success, 2 scenario/script errors, 3 replay divergence,
64 usage errors. Reports are deterministic for a given seed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .kinematics import JointLimits
from .service import (
    LogCorrupt,
    ScriptError,
    SessionConfig,
    SessionLog,
    load_script,
    replay,
    run_scenario,
)

EX_OK = 0
EX_SCRIPT = 2
EX_DIVERGED = 3
EX_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def load_limits(path: str | None) -> JointLimits:
    if path is None:
        return JointLimits()
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return JointLimits(**{k: int(v) for k, v in data.items()})


def build_parser() -> _Parser:
    parser = _Parser(prog="trocarsim",
                     description="Deterministic endoscope-holder simulator")
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a scenario script to a session log")
    p.add_argument("--script", required=True, help="scenario file")
    p.add_argument("--out", required=True, help="session log to write")

    p = sub.add_parser("replay", help="verify a session log regenerates byte-exactly")
    p.add_argument("--log", required=True, help="session log file")

    p = sub.add_parser("serve", help="run a live steering session")
    p.add_argument("--listen", default="127.0.0.1:8470", help="host:port")
    p.add_argument("--scene", help="scene JSON (clearance summary at startup)")
    p.add_argument("--grammar", help="grammar file overriding the built-in one")
    p.add_argument("--record", help="write the session log here on shutdown")

    p = sub.add_parser("workspace", help="workspace/coverage/clearance report")
    p.add_argument("--limits", help="JSON file with joint limit overrides")
    p.add_argument("--cavity", help="scene JSON file (cavity, sites, base)")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", dest="as_json",
                   help="machine-readable report")
    p.add_argument("--figures", metavar="DIR",
                   help="also render report figures into DIR")
    return parser


def cmd_simulate(args) -> int:
    try:
        script = load_script(args.script)
        log = run_scenario(script)
    except ScriptError as exc:
        print(f"script error: {exc}", file=sys.stderr)
        return EX_SCRIPT
    log.save(args.out)
    frames = log.telemetry_lines()
    last = json.loads(frames[-1]) if frames else None
    print(f"ran {script.config.ticks} ticks, {len(frames)} frames -> {args.out}")
    if last:
        print(f"final: tick {last['tick']} pan {last['pan_mdeg']} mdeg "
              f"tilt {last['tilt_mdeg']} mdeg insertion {last['ins_um']} um "
              f"mode {last['mode']}")
    return EX_OK


def cmd_replay(args) -> int:
    try:
        log = SessionLog.load(args.log)
        report = replay(log)
    except (LogCorrupt, OSError) as exc:
        print(f"cannot replay: {exc}", file=sys.stderr)
        return EX_SCRIPT
    if report.ok:
        print(f"OK: {report.frames_compared} frames over {report.ticks} ticks "
              f"regenerated byte-identically")
        return EX_OK
    d = report.divergence
    print(f"DIVERGED at tick {d.tick}, field {d.field}", file=sys.stderr)
    if d.logged:
        print(f"  logged:      {d.logged}", file=sys.stderr)
        print(f"  regenerated: {d.regenerated}", file=sys.stderr)
    return EX_DIVERGED


def cmd_serve(args) -> int:
    from .command import GrammarConfig
    from .scene import check_clearance, load_scene
    from .server import SessionServer

    host, _, port_text = args.listen.partition(":")
    try:
        port = int(port_text) if port_text else 8470
    except ValueError:
        print(f"bad --listen address: {args.listen}", file=sys.stderr)
        return EX_USAGE

    config = SessionConfig()
    try:
        if args.grammar:
            from dataclasses import replace
            config = replace(config, grammar=GrammarConfig.load(args.grammar))
        if args.scene:
            scene = load_scene(args.scene)
            conflicts = check_clearance(scene.sites, scene.base)
            for c in conflicts:
                print(f"clearance warning: site ({c.site.x:.0f},{c.site.y:.0f}) "
                      f"{c.cause.value} at {c.distance:.1f} mm")
    except (OSError, ValueError, KeyError) as exc:
        print(f"bad configuration: {exc}", file=sys.stderr)
        return EX_SCRIPT

    server = SessionServer(config, host=host or "127.0.0.1", port=port,
                           record_path=args.record)
    server.start()
    bound = server.address
    print(f"serving on {bound[0]}:{bound[1]} (plain stream or WebSocket); Ctrl-C stops",
          flush=True)
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
        if args.record:
            print(f"session log written to {args.record}")
    return EX_OK


def cmd_workspace(args) -> int:
    from .report import build_report, render_figures, render_json, render_text
    from .scene import DEFAULT_SCENE, load_scene

    try:
        limits = load_limits(args.limits)
        scene = load_scene(args.cavity) if args.cavity else DEFAULT_SCENE
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"bad configuration: {exc}", file=sys.stderr)
        return EX_SCRIPT
    report = build_report(limits, scene, samples=args.samples, seed=args.seed)
    if args.figures:
        written = render_figures(limits, scene, args.seed, args.figures)
        report["figures"] = [str(p) for p in written]
    sys.stdout.write(render_json(report) if args.as_json else render_text(report))
    if args.figures and not args.as_json:
        for p in report["figures"]:
            print(f"figure\t{p}")
    return EX_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "simulate": cmd_simulate,
        "replay": cmd_replay,
        "serve": cmd_serve,
        "workspace": cmd_workspace,
    }
    return handlers[args.cmd](args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()

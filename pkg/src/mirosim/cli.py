"""Command line entry point: ``mirosim run | tournament | replay | calibrate``.

Exit codes: 0 success, 1 configuration error, 2 runtime contract violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .fuzzy import RuleTableError
from .harness import (CONTROLLERS, TEAMS, ConfigError, MatchResult, ScenarioConfig, TeamConfig,
                      config_from_dict, load_config, run_match, run_round_robin)
from .replay import LogFormatError, read_log, render_svg, verify_log
from .vision import CalibrationError, fit_calibration, load_correspondences

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("mirosim")


def _parse_controllers(items: list[str] | None) -> dict[str, str]:
    out: dict[str, str] = {}
    problems = []
    for item in items or []:
        team, sep, ctrl = item.partition("=")
        if not sep or team not in TEAMS or ctrl not in CONTROLLERS:
            problems.append(f"--controller {item!r}: expected TEAM=CONTROLLER with TEAM in {TEAMS} "
                            f"and CONTROLLER in {CONTROLLERS}")
            continue
        out[team] = ctrl
    if problems:
        raise ConfigError(problems)
    return out


def _scenario(args) -> ScenarioConfig:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError([f"config file {path} not found"])
        doc = yaml.safe_load(path.read_text()) or {}
        if not isinstance(doc, dict):
            raise ConfigError([f"{path}: top level must be a mapping"])
    else:
        doc = {}
    if args.seed is not None:
        doc["seed"] = args.seed
    if getattr(args, "duration", None) is not None:
        doc["duration"] = args.duration
    cfg = config_from_dict(doc)
    for team, ctrl in _parse_controllers(getattr(args, "controller", None)).items():
        tc = cfg.team(team)
        cfg = replace(cfg, **{team: TeamConfig(ctrl, tc.robots)})
    return cfg


def _result_json(res: MatchResult) -> dict:
    return {
        "seed": res.seed,
        "controllers": res.controllers,
        "goals": res.goals,
        "goal_events": [{"tick": t, "team": team} for t, team in res.goal_events],
        "shots": res.shots,
        "kicks": res.kicks,
        "ticks": res.ticks,
        "runtime_s": round(res.runtime_s, 3),
        "mean_tick_ms": round(res.mean_tick_ms, 3),
        "log": res.log_path,
    }


def cmd_run(args) -> int:
    cfg = _scenario(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "match.csv"
    res = run_match(cfg, log_path)
    (out / "result.json").write_text(json.dumps(_result_json(res), indent=2) + "\n")
    traj = read_log(log_path)
    (out / "trajectories.svg").write_text(render_svg(traj, cfg.field.length, cfg.field.width,
                                                     cfg.field.goal_width))
    print(f"home ({res.controllers['home']}) {res.goals['home']} : {res.goals['away']} "
          f"away ({res.controllers['away']})   {res.ticks} ticks, {res.mean_tick_ms:.2f} ms/tick")
    print(f"log: {log_path}")
    return EXIT_OK


def cmd_tournament(args) -> int:
    cfg = _scenario(args)
    if args.rounds < 1:
        raise ConfigError([f"--rounds must be >= 1, got {args.rounds}"])
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    report = run_round_robin([cfg], args.rounds, out, workers=args.workers)
    table = report.table()
    print(table, end="")
    if out is not None:
        (out / "table.txt").write_text(table)
        rows = [_result_json(r) for r in report.results[0]]
        (out / "tournament.json").write_text(json.dumps({"rounds": rows, "totals": report.totals()},
                                                        indent=2) + "\n")
    return EXIT_OK


def cmd_replay(args) -> int:
    traj = read_log(args.log)
    summary = verify_log(traj)
    print(f"{summary.ticks} ticks, goals home {summary.goals['home']} away {summary.goals['away']}, "
          f"kicks home {summary.kicks['home']} away {summary.kicks['away']}")
    svg_path = Path(args.svg) if args.svg else Path(args.log).with_suffix(".svg")
    svg_path.write_text(render_svg(traj))
    print(f"plot: {svg_path}")
    if not summary.consistent:
        for p in summary.problems:
            print(f"inconsistent: {p}", file=sys.stderr)
        return EXIT_RUNTIME
    print("log consistent")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    path = Path(args.points)
    if not path.is_file():
        raise ConfigError([f"points file {path} not found"])
    try:
        pts = load_correspondences(path)
    except ValueError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    cal = fit_calibration(pts)
    print("x = {:.9g} + {:.9g} u + {:.9g} v + {:.9g} uv".format(*cal.a))
    print("y = {:.9g} + {:.9g} u + {:.9g} v + {:.9g} uv".format(*cal.b))
    print(f"rms residual: {cal.rms:.6g} mm over {len(pts)} points")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mirosim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        sp.add_argument("--config", help="scenario YAML file")
        sp.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
        sp.add_argument("--duration", type=float, help="match length in seconds")
        sp.add_argument("--controller", action="append", metavar="TEAM=CTRL",
                        help="e.g. home=proposed or away=baseline; may be repeated")

    r = sub.add_parser("run", help="play one match")
    scenario_args(r)
    r.add_argument("--out", default="out", help="output directory")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("tournament", help="play several rounds and print the goal table")
    scenario_args(t)
    t.add_argument("--rounds", type=int, default=4)
    t.add_argument("--out", help="directory for per-round logs")
    t.add_argument("--workers", type=int, default=1)
    t.set_defaults(func=cmd_tournament)

    rp = sub.add_parser("replay", help="recount goals in a log and plot it")
    rp.add_argument("--log", required=True)
    rp.add_argument("--svg", help="plot path (default: alongside the log)")
    rp.set_defaults(func=cmd_replay)

    c = sub.add_parser("calibrate", help="fit the pixel-to-world map from 'u v x y' lines")
    c.add_argument("--points", required=True)
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, RuleTableError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CalibrationError, LogFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

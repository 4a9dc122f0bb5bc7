"""Command-line entry point: ``laserweed <command> [options]``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import actuation as act
from .config import ConfigError, RunConfig, load_config, merge
from .experiments import export_report, run_accuracy_study, run_speed_sweep, run_stability_study
from .experiments.report import csv_text
from .kinematics import LinkGeometryError, report_lines
from .navigation import MissionError, run_mission
from .vision.image import read_pnm, write_pnm
from .vision.pipeline import detect_rows, detect_weeds, row_stages, weed_stages
from .vision.render import render_view
from .world import RobotState, ScenarioError, generate_scenario

log = logging.getLogger("laserweed")

SCENARIOS = {
    "default": {},
    "single-row": {"row_count": 1},
    "empty": {"weed_density_per_m2": 0.0},
}

WEED_STAGES = ("crop", "mask", "blur", "canny", "closed")
ROW_STAGES = ("mask", "plants", "strips", "canny")


class UsageError(Exception):
    pass


def _speeds(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values or any(v <= 0 or not math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError("speeds must be positive numbers")
    return values


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--config", help="TOML run configuration (see configs/SCHEMA.md)")
    g.add_argument("--seed", type=int, help="global random seed")
    g.add_argument("--out", help="output directory")
    g.add_argument("--scenario", help="scenario preset (%s) or a TOML file with a [world] table"
                   % ", ".join(SCENARIOS))
    g.add_argument("--log", default="warning", choices=("debug", "info", "warning", "error"),
                   help="log level on standard error")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="laserweed", description="Laser weeding robot simulator.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    sub.add_parser("kinematics", parents=[common], help="suspension position analysis and climb limit",
                   description="Print the suspension pose from the loop equations and from the "
                               "reference constants, and the resulting climb limit.")

    g = sub.add_parser("gantry", parents=[common], help="plan a gantry move",
                       description="Plan a move from the homed origin to a target and print its step plan.")
    g.add_argument("--target", type=float, nargs=3, metavar=("X", "Y", "Z"), required=True,
                   help="target position in mm")

    v = sub.add_parser("vision", parents=[common], help="run a vision pipeline on an image",
                       description="Run the weed or row pipeline on a PPM image and write one stage.")
    vsub = v.add_subparsers(dest="vision_command", metavar="action")
    vr = vsub.add_parser("run", parents=[common], help="run a pipeline and dump a stage",
                         description="Run the weed (default) or row pipeline on --in and write "
                                     "--stage as a PNM image under --out; detections go to detections.csv.")
    vr.add_argument("--in", dest="input", required=True, help="input PPM image")
    vr.add_argument("--stage", default="canny", choices=sorted(set(WEED_STAGES + ROW_STAGES)))
    vr.add_argument("--pipeline", default="weeds", choices=("weeds", "rows"))

    m = sub.add_parser("mission", parents=[common], help="run one weeding mission",
                       description="Weed a generated field and write the event log.")
    m.add_argument("--speed", type=float, help="travel speed in cm/s")
    m.add_argument("--dump-frames", action="store_true", help="write weed-camera frames under OUT/frames/")
    m.add_argument("--no-fire", action="store_true", help="mark weeds instead of firing")

    s = sub.add_parser("sweep", parents=[common], help="detection rate and weeding time vs speed",
                       description="Marking missions at several speeds with linear fits of both responses.")
    s.add_argument("--speeds", type=_speeds, help="comma-separated speeds in cm/s")
    s.add_argument("--trials", type=int, help="trials per speed")
    s.add_argument("--parallel", type=int, help="worker processes (results are order-stable)")

    a = sub.add_parser("accuracy", parents=[common], help="laser positional error and hit rate",
                       description="Firing mission with every shot measured by the mirrored spot camera.")
    a.add_argument("--speed", type=float, help="travel speed in cm/s")
    a.add_argument("--perfect", action="store_true", help="noiseless, unquantised gantry and cameras")

    sub.add_parser("stability", parents=[common], help="obstacle crossing study",
                   description="Cross each field-trial obstacle on a short row and classify the effects.")

    r = sub.add_parser("render", parents=[common], help="render a camera view",
                       description="Render the weed or row camera at a robot pose to a PPM image.")
    r.add_argument("--camera", default="weed", choices=("weed", "row"))
    r.add_argument("--pose", type=float, nargs=3, metavar=("X", "Y", "HEADING_DEG"),
                   help="robot pose; defaults to the row start")
    r.add_argument("--speed", dest="render_speed", type=float, default=0.0,
                   help="speed for motion blur in cm/s (default 0)")
    r.add_argument("--noise", action="store_true", help="add pixel noise")
    return parser


def resolve_config(args) -> RunConfig:
    """Defaults, then --config, then --scenario, then individual flags."""
    config = load_config(args.config)
    if args.scenario:
        if args.scenario in SCENARIOS:
            config = merge(config, {"world": SCENARIOS[args.scenario]})
        else:
            preset = load_config(args.scenario)
            config = replace(config, world=preset.world)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out is not None:
        config = replace(config, out=args.out)
    speed = getattr(args, "speed", None)
    if speed is not None:
        if speed <= 0:
            raise ConfigError("--speed must be positive")
        config = replace(config, navigation=replace(config.navigation, speed_cm_s=speed))
    exp = config.experiment
    if getattr(args, "speeds", None) is not None:
        exp = replace(exp, speeds=args.speeds)
    if getattr(args, "trials", None) is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be at least 1")
        exp = replace(exp, trials=args.trials)
    if getattr(args, "parallel", None) is not None:
        if args.parallel < 1:
            raise ConfigError("--parallel must be at least 1")
        exp = replace(exp, parallel=args.parallel)
    return replace(config, experiment=exp)


def _out(config: RunConfig) -> Path:
    path = Path(config.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_kinematics(args, config: RunConfig) -> int:
    lines = report_lines(config.suspension)
    rows = [line.split(",", 1) for line in lines]
    _write_text(_out(config) / "kinematics.csv", csv_text(["quantity", "value"], rows))
    print("\n".join(lines))
    return 0


def cmd_gantry(args, config: RunConfig) -> int:
    plan = act.plan_move(act.home(), args.target, config.gantry)
    text = act.plan_csv(plan)
    _write_text(_out(config) / "plan.csv", text)
    print(text, end="")
    return 0


def cmd_vision(args, config: RunConfig) -> int:
    if args.vision_command != "run":
        raise UsageError("vision needs an action: run")
    img = read_pnm(args.input)
    if img.ndim != 3:
        raise UsageError("vision run needs a colour (P6) image")
    out = _out(config)
    if args.pipeline == "weeds":
        if args.stage not in WEED_STAGES:
            raise UsageError(f"weed pipeline stages: {', '.join(WEED_STAGES)}")
        stage = weed_stages(img, None, config.vision)[args.stage]
        det = detect_weeds(img, None, config.vision)
        table = csv_text(["x_px", "y_px"], [[float(x), float(y)] for x, y in det.centroids])
        print(f"weeds: {det.count}")
    else:
        if args.stage not in ROW_STAGES:
            raise UsageError(f"row pipeline stages: {', '.join(ROW_STAGES)}")
        stage = row_stages(img, config.vision)[args.stage]
        rows = detect_rows(img, None, config.vision)
        table = csv_text(["angle_deg", "distance_from_center_px", "votes", "inter_row_spacing_px"],
                         [[r.angle_deg, r.distance_from_center_px, r.votes, r.inter_row_spacing_px]
                          for r in rows])
        print(f"rows: {len(rows)}")
    ext = "ppm" if stage.ndim == 3 else "pgm"
    write_pnm(out / f"{args.stage}.{ext}", stage)
    _write_text(out / "detections.csv", table)
    return 0


def cmd_mission(args, config: RunConfig) -> int:
    out = _out(config)
    world = generate_scenario(config.world, config.seed)
    setup = config.mission_setup()
    nav = replace(setup.nav, fire=setup.nav.fire and not args.no_fire)
    setup = replace(setup, nav=nav)
    if args.dump_frames:
        frames = out / "frames"
        frames.mkdir(parents=True, exist_ok=True)
        count = [0]

        def on_frame(mission, img):
            write_pnm(frames / f"frame_{count[0]:05d}.ppm", img)
            count[0] += 1
        setup = replace(setup, on_frame=on_frame)
    log.info("mission over %d weeds at %.1f cm/s", len(world.weeds), nav.speed_cm_s)
    mlog = run_mission(world, setup, seed=config.seed)
    _write_text(out / "raw.csv", mlog.to_csv())
    summary = [["weeds", mlog.weed_count], ["detected", len(mlog.detected)],
               ["detection_rate", mlog.detection_rate],
               ["eliminated", sum(w.eliminated for w in world.weeds)],
               ["hit_rate", mlog.hit_rate], ["total_time_s", mlog.total_time_s],
               ["driving_time_s", mlog.driving_time_s], ["weed_time_s", mlog.weed_time_s],
               ["weeding_time_s_per_m", mlog.weeding_time_s_per_m],
               ["crop_collisions", mlog.crop_collisions], ["aborted", mlog.aborted or ""]]
    _write_text(out / "summary.csv", csv_text(["metric", "value"], summary))
    print(f"detected {len(mlog.detected)}/{mlog.weed_count} weeds, "
          f"{mlog.weeding_time_s_per_m:.2f} s/m")
    if mlog.aborted:
        print(f"mission aborted: {mlog.aborted}", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args, config: RunConfig) -> int:
    exp = config.experiment
    log.info("sweep over %s cm/s, %d trial(s)", ",".join(f"{v:g}" for v in exp.speeds), exp.trials)
    result = run_speed_sweep(config.world, exp.speeds, exp.trials, config.seed,
                             config.mission_setup(), exp.parallel)
    export_report(result, _out(config))
    for r in result.rows:
        print(f"{r.speed_cm_s:g} cm/s trial {r.trial}: detection {r.detection_pct:.1f}%, "
              f"{r.weeding_time_s_per_m:.2f} s/m")
    if result.model is not None and result.model.optimal_speed_cm_s is not None:
        print(f"fitted lines cross at {result.model.optimal_speed_cm_s:.2f} cm/s")
    return 0


def cmd_accuracy(args, config: RunConfig) -> int:
    report = run_accuracy_study(config.world, config.navigation.speed_cm_s, config.seed,
                                config.mission_setup(), perfect=args.perfect)
    export_report(report, _out(config))
    mean_e, std_e = report.stats("e")
    print(f"detection {100 * report.detection_rate:.1f}%, hit rate {100 * report.hit_rate:.1f}%, "
          f"mean error {mean_e:.3f} mm (std {std_e:.3f})")
    return 0


def cmd_stability(args, config: RunConfig) -> int:
    report = run_stability_study(config.stability, setup=config.mission_setup())
    export_report(report, _out(config))
    print(f"{report.matches}/{len(report.rows)} obstacle outcomes match the field trials")
    return 0


def cmd_render(args, config: RunConfig) -> int:
    world = generate_scenario(config.world, config.seed)
    setup = config.mission_setup()
    if args.pose is None:
        row = world.rows[0]
        robot = RobotState(position=row.start)
    else:
        robot = RobotState(position=(args.pose[0], args.pose[1]), heading_rad=math.radians(args.pose[2]))
    cam = setup.weed_cam if args.camera == "weed" else setup.row_cam
    rng = np.random.Generator(np.random.PCG64(config.seed)) if args.noise else None
    img = render_view(world, robot, cam, rng, speed_cm_s=args.render_speed)
    path = _out(config) / f"{args.camera}.ppm"
    write_pnm(path, img)
    print(path)
    return 0


COMMANDS = {
    "kinematics": cmd_kinematics, "gantry": cmd_gantry, "vision": cmd_vision,
    "mission": cmd_mission, "sweep": cmd_sweep, "accuracy": cmd_accuracy,
    "stability": cmd_stability, "render": cmd_render,
}


def parse_args(argv=None) -> tuple[str, RunConfig, argparse.Namespace]:
    """Parse ``argv`` into (command, merged config, raw namespace); SystemExit(2) on bad usage."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise SystemExit(2)
    try:
        config = resolve_config(args)
    except (ConfigError, ScenarioError) as exc:
        parser.exit(2, f"laserweed: error: {exc}\n")
    return args.command, config, args


def main(argv=None) -> int:
    try:
        command, config, args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, args.log.upper()), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[command](args, config)
    except UsageError as exc:
        print(f"laserweed {command}: error: {exc}", file=sys.stderr)
        return 2
    except (MissionError, act.GantryError, ScenarioError, LinkGeometryError,
            ValueError, OSError) as exc:
        print(f"laserweed {command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

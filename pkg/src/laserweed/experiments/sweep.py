"""Detection rate and weeding time against travel speed."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from ..navigation import MissionSetup, run_mission
from ..world import ScenarioSpec, generate_scenario
from .stats import DegenerateFitError, LinearModel, linear_fit, optimal_speed

TRIAL_SPEEDS_CM_S = (30.0, 40.0, 50.0, 60.0, 70.0)


@dataclass(frozen=True)
class SweepRow:
    speed_cm_s: float
    trial: int
    seed: int
    weeds: int
    detected: int
    detection_pct: float
    weeding_time_s_per_m: float
    row_distance_m: float
    row_time_s: float
    stop_time_s: float
    total_time_s: float
    false_targets: int
    crop_collisions: int


@dataclass(frozen=True)
class SpeedSweepModel:
    detection: LinearModel
    weeding_time: LinearModel
    optimal_speed_cm_s: float | None


@dataclass(frozen=True)
class SweepResult:
    rows: list[SweepRow]
    model: SpeedSweepModel | None


def sweep_trial(spec: ScenarioSpec, setup: MissionSetup, speed: float, trial: int, seed: int) -> SweepRow:
    """One marking pass (laser swapped for a pointer) over a fresh field."""
    world = generate_scenario(spec, seed)
    nav = replace(setup.nav, speed_cm_s=float(speed), fire=False)
    log = run_mission(world, replace(setup, nav=nav), seed=seed)
    return SweepRow(
        speed_cm_s=float(speed), trial=trial, seed=seed, weeds=log.weed_count,
        detected=len(log.detected),
        detection_pct=100.0 * len(log.detected) / log.weed_count if log.weed_count else 100.0,
        weeding_time_s_per_m=log.weeding_time_s_per_m,
        row_distance_m=log.follow_distance_m, row_time_s=log.follow_time_s,
        stop_time_s=log.stop_time_s, total_time_s=log.total_time_s,
        false_targets=sum(t.weed_index is None for t in log.targets),
        crop_collisions=log.crop_collisions)


def _run(args):
    return sweep_trial(*args)


def fit_sweep(rows: list[SweepRow]) -> SpeedSweepModel | None:
    """Fit both responses against speed; None with fewer than two distinct speeds."""
    try:
        det = linear_fit([(r.speed_cm_s, r.detection_pct) for r in rows])
        wt = linear_fit([(r.speed_cm_s, r.weeding_time_s_per_m) for r in rows])
    except DegenerateFitError:
        return None
    try:
        best = optimal_speed(det, wt)
    except DegenerateFitError:
        best = None
    return SpeedSweepModel(det, wt, best)


def run_speed_sweep(spec: ScenarioSpec = ScenarioSpec(), speeds=TRIAL_SPEEDS_CM_S, trials: int = 1,
                    seed: int = 0, setup: MissionSetup | None = None, parallel: int = 1) -> SweepResult:
    """Run every (speed, trial) pair and fit the two speed models.

    Trial ``k`` uses field and mission seed ``seed + k`` at every speed, so
    speeds are compared on the same field. Rows come back in (speed, trial)
    order whatever ``parallel`` is.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    setup = setup or MissionSetup()
    jobs = [(spec, setup, float(v), k, seed + k) for v in speeds for k in range(trials)]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            rows = list(pool.map(_run, jobs))
    else:
        rows = [_run(j) for j in jobs]
    return SweepResult(rows=rows, model=fit_sweep(rows))

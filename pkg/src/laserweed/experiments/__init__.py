"""Speed sweep, positional accuracy, and obstacle stability studies."""
from .accuracy import AccuracyReport, ShotError, run_accuracy_study
from .report import export_report
from .stability import FIELD_TRIALS, ObstacleCase, StabilityConfig, StabilityReport, run_stability_study
from .stats import DegenerateFitError, LinearModel, histogram, linear_fit, mean_std, optimal_speed
from .sweep import TRIAL_SPEEDS_CM_S, SpeedSweepModel, SweepResult, run_speed_sweep

__all__ = [
    "AccuracyReport", "DegenerateFitError", "FIELD_TRIALS", "LinearModel", "ObstacleCase",
    "TRIAL_SPEEDS_CM_S", "ShotError", "SpeedSweepModel", "StabilityConfig", "StabilityReport",
    "SweepResult", "export_report", "histogram", "linear_fit", "mean_std", "optimal_speed",
    "run_accuracy_study", "run_speed_sweep", "run_stability_study",
]

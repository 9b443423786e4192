"""
Tidy CSV outputs for external plotting
"""
import csv
import math
from pathlib import Path
from typing import Iterable, Sequence, Union

from sim.montecarlo import Comparison, McSummary
from sim.trial import TrialResult

STEPS_HEADER = ["trial", "t_s", "pos_err_m", "vel_err_mps", "n_matched", "n_rejected", "state_dim", "flag"]
SUMMARY_HEADER = ["profile", "brightness", "trials", "final_pos_err_mean_m", "final_pos_err_sigma_m",
                  "final_vel_err_mean_mps", "final_vel_err_sigma_mps", "mean_track_len", "mean_craters"]
TRIALS_HEADER = ["profile", "brightness", "trial", "steps", "diverged", "final_pos_err_m", "final_vel_err_mps",
                 "mean_track_len", "mean_craters", "feature_track_len", "max_consecutive_track",
                 "accepted_matches", "false_matches", "skipped_updates"]
ENVELOPE_HEADER = ["profile", "brightness", "t_s", "pos_err_mean_m", "pos_err_sigma_m",
                   "vel_err_mean_mps", "vel_err_sigma_mps"]
IMPROVEMENT_HEADER = ["robust", "brittle", "brightness", "pos_err_decrease", "vel_err_decrease"]

PathLike = Union[str, Path]


def fmt(x: float) -> str:
    if isinstance(x, float) and not math.isfinite(x):
        return "nan"
    return f"{x:.9g}"


def _write(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_steps_csv(path: PathLike, results: Iterable[TrialResult]) -> None:
    _write(path, STEPS_HEADER, (
        [r.trial, fmt(s.t_s), fmt(s.pos_err_m), fmt(s.vel_err_mps), s.n_matched, s.n_rejected, s.state_dim, s.flag]
        for r in results for s in r.steps
    ))


def summary_row(s: McSummary) -> list:
    return [s.profile, fmt(s.brightness), s.trials, fmt(s.final_pos_err_mean), fmt(s.final_pos_err_sigma),
            fmt(s.final_vel_err_mean), fmt(s.final_vel_err_sigma), fmt(s.mean_track_len), fmt(s.mean_craters)]


def write_summary_csv(path: PathLike, summaries: Iterable[McSummary]) -> None:
    _write(path, SUMMARY_HEADER, (summary_row(s) for s in summaries))


def write_trials_csv(path: PathLike, summaries: Iterable[McSummary]) -> None:
    _write(path, TRIALS_HEADER, (
        [s.profile, fmt(s.brightness), r.trial, len(r.steps), int(r.diverged), fmt(r.final_pos_err),
         fmt(r.final_vel_err), fmt(r.mean_track_len), fmt(r.mean_craters), fmt(r.feature_track_len),
         r.max_consecutive_track, r.accepted_matches, r.false_matches, r.skipped_updates]
        for s in summaries for r in s.results
    ))


def write_envelope_csv(path: PathLike, summaries: Iterable[McSummary]) -> None:
    _write(path, ENVELOPE_HEADER, (
        [s.profile, fmt(s.brightness), fmt(float(s.t_s[i])), fmt(float(s.pos_err_mean[i])),
         fmt(float(s.pos_err_sigma[i])), fmt(float(s.vel_err_mean[i])), fmt(float(s.vel_err_sigma[i]))]
        for s in summaries for i in range(len(s.t_s))
    ))


def write_improvement_csv(path: PathLike, comparison: Comparison, robust: str, brittle: str) -> None:
    _write(path, IMPROVEMENT_HEADER, (
        [robust, brittle, fmt(b), fmt(pos), fmt(vel)] for b, pos, vel in comparison.improvement(robust, brittle)
    ))

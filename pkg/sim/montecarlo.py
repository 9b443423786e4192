"""
Monte-Carlo batches and profile x brightness comparisons
"""
import logging
import traceback
from concurrent.futures import as_completed
from concurrent.futures.thread import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from catalog.catalog import CraterCatalog
from sim.config import RunConfig, TrialConfig, trial_config
from sim.trial import TrialResult, run_trial

logger = logging.getLogger(__name__)


@dataclass
class McSummary:
    profile: str
    brightness: float
    trials: int                                 # trials aggregated
    diverged: int = 0
    failed: List[Tuple[int, str]] = field(default_factory=list)
    t_s: np.ndarray = field(default_factory=lambda: np.empty(0))
    pos_err_mean: np.ndarray = field(default_factory=lambda: np.empty(0))
    pos_err_sigma: np.ndarray = field(default_factory=lambda: np.empty(0))
    vel_err_mean: np.ndarray = field(default_factory=lambda: np.empty(0))
    vel_err_sigma: np.ndarray = field(default_factory=lambda: np.empty(0))
    final_pos_err_mean: float = 0.0
    final_pos_err_sigma: float = 0.0
    final_vel_err_mean: float = 0.0
    final_vel_err_sigma: float = 0.0
    mean_track_len: float = 0.0
    mean_craters: float = 0.0
    feature_track_len: float = 0.0
    false_match_fraction: float = 0.0
    results: List[TrialResult] = field(default_factory=list)


def _padded(results: Sequence[TrialResult], attr: str, n: int) -> np.ndarray:
    out = np.full((len(results), n), np.nan)
    for row, r in enumerate(results):
        values = [getattr(s, attr) for s in r.steps]
        out[row, :len(values)] = values
    return out


def _mean_sigma(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-column mean and population sigma over the trials that reached that step"""
    count = np.sum(~np.isnan(a), axis=0)
    safe = np.where(count > 0, count, 1)
    mean = np.nansum(a, axis=0) / safe
    var = np.nansum((a - mean) ** 2, axis=0) / safe
    mean[count == 0] = np.nan
    return mean, np.sqrt(var)


def summarize(results: Sequence[TrialResult], profile: str, brightness: float, dT: float,
              include_diverged: bool = True) -> McSummary:
    """Pure fold of trial results into per-step and final statistics"""
    used = [r for r in results if include_diverged or not r.diverged]
    summary = McSummary(profile, brightness, len(used), diverged=sum(r.diverged for r in results),
                        results=list(results))
    if not used:
        return summary
    n = max(len(r.steps) for r in used)
    summary.t_s = dT * np.arange(1, n + 1)
    summary.pos_err_mean, summary.pos_err_sigma = _mean_sigma(_padded(used, "pos_err_m", n))
    summary.vel_err_mean, summary.vel_err_sigma = _mean_sigma(_padded(used, "vel_err_mps", n))
    final_pos = np.array([r.final_pos_err for r in used])
    final_vel = np.array([r.final_vel_err for r in used])
    summary.final_pos_err_mean, summary.final_pos_err_sigma = float(final_pos.mean()), float(final_pos.std())
    summary.final_vel_err_mean, summary.final_vel_err_sigma = float(final_vel.mean()), float(final_vel.std())
    summary.mean_track_len = float(np.mean([r.mean_track_len for r in used]))
    summary.mean_craters = float(np.mean([r.mean_craters for r in used]))
    summary.feature_track_len = float(np.mean([r.feature_track_len for r in used]))
    accepted = sum(r.accepted_matches for r in used)
    summary.false_match_fraction = sum(r.false_matches for r in used) / accepted if accepted else 0.0
    return summary


def run_trials(cfg: TrialConfig, catalog: CraterCatalog, n_trials: int,
               workers: int = 1) -> Tuple[List[TrialResult], List[Tuple[int, str]]]:
    """Trials 0..n_trials-1 in a thread pool; results come back in trial order"""
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    results: Dict[int, TrialResult] = {}
    failures: List[Tuple[int, str]] = []
    first_error: Optional[BaseException] = None

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        future_to_trial = {executor.submit(run_trial, cfg, catalog, i): i for i in range(n_trials)}
        for future in as_completed(future_to_trial):
            i = future_to_trial[future]
            try:
                results[i] = future.result()
            except Exception as e:
                logger.debug(traceback.format_exc())
                logger.warning(f"Trial {i} ({cfg.profile.name}, {cfg.brightness:+.2f}) failed: {e}")
                failures.append((i, f"{type(e).__name__}: {e}"))
                if first_error is None:
                    first_error = e

    if not results and first_error is not None:
        raise first_error
    failures.sort()
    return [results[i] for i in sorted(results)], failures


def monte_carlo(cfg: TrialConfig, catalog: CraterCatalog, n_trials: int, workers: int = 1,
                include_diverged: bool = True) -> McSummary:
    logger.info(f"Monte-Carlo: {n_trials} trials, profile {cfg.profile.name}, brightness {cfg.brightness:+.2f}, "
                f"seed {cfg.seed}")
    results, failures = run_trials(cfg, catalog, n_trials, workers)
    summary = summarize(results, cfg.profile.name, cfg.brightness, cfg.dT, include_diverged)
    summary.failed = failures
    logger.info(f"Monte-Carlo {cfg.profile.name} {cfg.brightness:+.2f}: final position error "
                f"{summary.final_pos_err_mean:.3f} +/- {summary.final_pos_err_sigma:.3f} m, velocity "
                f"{summary.final_vel_err_mean:.4f} +/- {summary.final_vel_err_sigma:.4f} m/s, "
                f"{summary.diverged} diverged, {len(failures)} failed")
    return summary


@dataclass
class Comparison:
    cells: List[McSummary]

    def cell(self, profile: str, brightness: float) -> McSummary:
        for c in self.cells:
            if c.profile == profile and abs(c.brightness - brightness) < 1e-9:
                return c
        raise KeyError((profile, brightness))

    def spread(self, profile: str) -> float:
        """max / min of the mean final position error across brightness offsets"""
        errors = [c.final_pos_err_mean for c in self.cells if c.profile == profile]
        low = min(errors)
        return max(errors) / low if low > 0 else float("inf")

    def improvement(self, robust: str, brittle: str) -> List[Tuple[float, float, float]]:
        """(brightness, relative position-error decrease, relative velocity-error decrease)"""
        rows = []
        for c in self.cells:
            if c.profile != robust:
                continue
            other = self.cell(brittle, c.brightness)
            pos = 1.0 - c.final_pos_err_mean / other.final_pos_err_mean if other.final_pos_err_mean else 0.0
            vel = 1.0 - c.final_vel_err_mean / other.final_vel_err_mean if other.final_vel_err_mean else 0.0
            rows.append((c.brightness, pos, vel))
        return rows


def compare_profiles(cfg: RunConfig, catalog: CraterCatalog, profiles: Sequence[str],
                     brightness: Sequence[float], n_trials: int, workers: int = 1,
                     seed: Optional[int] = None) -> Comparison:
    """Monte-Carlo summary for every profile x brightness cell with shared trajectories and IMU noise"""
    cells = []
    for name in profiles:
        for b in brightness:
            tc = trial_config(cfg, name, b, seed)
            cells.append(monte_carlo(tc, catalog, n_trials, workers, cfg.monte_carlo.include_diverged))
    return Comparison(cells)



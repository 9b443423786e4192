"""
Command-line front end
"""
# Load config first to initialize environment variables
import config

import logging
import sys
import traceback
from functools import wraps
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import click
import numpy as np

from catalog.catalog import CraterCatalog, load_catalog, save_catalog
from catalog.synthetic import count_for_density, synthesize_catalog
from cli.manifest import MANIFEST_NAME, RunManifest, file_sha256, read_manifest, write_manifest
from detect.mask import run_mask_pipeline
from detect.pgm import read_pgm, write_pgm
from detect.render import RimSpec, render_rim_mask
from model.errors import AllTrialsDivergedError, CatalogError, ConfigError, MaskError, TrnError
from sim.config import RunConfig, build_config, dump_config, load_config, trial_config
from sim.montecarlo import compare_profiles, monte_carlo
from sim.report import (write_envelope_csv, write_improvement_csv, write_steps_csv, write_summary_csv,
                        write_trials_csv)

logger = logging.getLogger(__name__)

EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_DIVERGED = 3

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(out_dir: Optional[Path] = None, level: str = config.LOG_LEVEL) -> List[logging.Handler]:
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if out_dir is not None:
        handlers.append(logging.FileHandler(out_dir / "run.log", mode="w", encoding="utf-8"))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)
    return handlers


def _close_handlers():
    root = logging.getLogger()
    for h in list(root.handlers):
        root.removeHandler(h)
        h.close()


def handle_exceptions(func: Callable) -> Callable:
    """
    Decorator mapping exceptions to the documented exit codes.
    The traceback is logged at DEBUG, the message goes to stderr.
    """

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ConfigError as e:
            logger.debug(traceback.format_exc())
            click.echo(f"config error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        except (CatalogError, MaskError, OSError) as e:
            logger.debug(traceback.format_exc())
            click.echo(f"I/O error: {e}", err=True)
            sys.exit(EXIT_IO)
        except AllTrialsDivergedError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_DIVERGED)
        except TrnError as e:
            logger.debug(traceback.format_exc())
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        finally:
            _close_handlers()

    return wrapper


def resolve_catalog(cfg: RunConfig) -> Tuple[CraterCatalog, Optional[str]]:
    if cfg.catalog.path is not None:
        return load_catalog(cfg.catalog.path), cfg.catalog.path
    syn = cfg.catalog.synthetic
    rng = np.random.default_rng(syn.seed)
    cat = synthesize_catalog(count_for_density(syn.density_per_km2), rng, syn.min_diameter_km * 1000.0,
                             syn.max_diameter_km * 1000.0, syn.slope)
    return cat, None


def _prepare_out(out: Optional[str]) -> Path:
    out_dir = Path(out if out is not None else config.OUTPUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _workers(cfg: RunConfig) -> int:
    return cfg.monte_carlo.workers or config.WORKERS


def _config_from(config_path: Optional[str], replay: Optional[str],
                 overrides: dict) -> Tuple[RunConfig, Optional[RunManifest]]:
    if replay is None:
        return load_config(config_path, overrides), None
    manifest = read_manifest(replay)
    return build_config(manifest.config), manifest


def _check_replay_catalog(manifest: Optional[RunManifest], cat: CraterCatalog) -> None:
    if manifest is not None and manifest.catalog_sha256 and manifest.catalog_sha256 != cat.checksum():
        raise CatalogError(f"catalog checksum differs from the manifest ({manifest.catalog_sha256[:12]}...)")


def _finish(out_dir: Path, command: str, cfg: RunConfig, cat: CraterCatalog, cat_path: Optional[str],
            outputs: dict) -> None:
    manifest = RunManifest(command=command, config=dump_config(cfg), seed=cfg.monte_carlo.seed,
                           catalog_sha256=cat.checksum(), catalog_records=len(cat), catalog_path=cat_path,
                           outputs={name: {"file": file, "sha256": file_sha256(out_dir / file)}
                                    for name, file in outputs.items()})
    write_manifest(manifest, out_dir)
    logger.info(f"Wrote {', '.join(outputs.values())} and {MANIFEST_NAME} to {out_dir}")


def _common_options(func: Callable) -> Callable:
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="YAML run configuration"),
        click.option("--trials", type=int, help="Number of Monte-Carlo trials"),
        click.option("--seed", type=int, help="Master seed"),
        click.option("--profile", help="Detector profile name"),
        click.option("--brightness", type=float, help="Image brightness offset"),
        click.option("--out", type=click.Path(file_okay=False), help="Output directory"),
        click.option("--catalog", "catalog_path", type=click.Path(dir_okay=False), help="Crater catalog file"),
        click.option("--workers", type=int, help="Worker threads"),
        click.option("--replay", type=click.Path(dir_okay=False), help="Re-run from a manifest"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
def main():
    """Lunar crater terrain-relative navigation toolkit"""


@main.command("run")
@_common_options
@handle_exceptions
def cmd_run(config_path, trials, seed, profile, brightness, out, catalog_path, workers, replay):
    """Monte-Carlo run of one detector profile at one brightness"""
    out_dir = _prepare_out(out)
    configure_logging(out_dir)
    cfg, manifest = _config_from(config_path, replay, {
        "monte_carlo.trials": trials, "monte_carlo.seed": seed, "detector.profile": profile,
        "detector.brightness": brightness, "catalog.path": catalog_path, "monte_carlo.workers": workers,
    })
    cat, cat_path = resolve_catalog(cfg)
    _check_replay_catalog(manifest, cat)

    summary = monte_carlo(trial_config(cfg), cat, cfg.monte_carlo.trials, _workers(cfg),
                          cfg.monte_carlo.include_diverged)
    outputs = {"steps": "steps.csv", "summary": "summary.csv", "trials": "trials.csv", "envelope": "envelope.csv"}
    write_steps_csv(out_dir / outputs["steps"], summary.results)
    write_summary_csv(out_dir / outputs["summary"], [summary])
    write_trials_csv(out_dir / outputs["trials"], [summary])
    write_envelope_csv(out_dir / outputs["envelope"], [summary])
    _finish(out_dir, "run", cfg, cat, cat_path, outputs)

    if summary.results and summary.diverged == len(summary.results):
        raise AllTrialsDivergedError(f"all {len(summary.results)} trials diverged")


@main.command("compare")
@_common_options
@handle_exceptions
def cmd_compare(config_path, trials, seed, profile, brightness, out, catalog_path, workers, replay):
    """Profile x brightness comparison grid"""
    out_dir = _prepare_out(out)
    configure_logging(out_dir)
    overrides = {"compare.trials": trials, "monte_carlo.seed": seed, "catalog.path": catalog_path,
                 "monte_carlo.workers": workers}
    if profile is not None:
        overrides["compare.profiles"] = [p.strip() for p in profile.split(",") if p.strip()]
    if brightness is not None:
        overrides["compare.brightness"] = [brightness]
    cfg, manifest = _config_from(config_path, replay, overrides)
    cat, cat_path = resolve_catalog(cfg)
    _check_replay_catalog(manifest, cat)

    comparison = compare_profiles(cfg, cat, cfg.compare.profiles, cfg.compare.brightness, cfg.compare.trials,
                                  _workers(cfg), cfg.monte_carlo.seed)
    outputs = {"summary": "summary.csv", "trials": "trials.csv", "envelope": "envelope.csv"}
    write_summary_csv(out_dir / outputs["summary"], comparison.cells)
    write_trials_csv(out_dir / outputs["trials"], comparison.cells)
    write_envelope_csv(out_dir / outputs["envelope"], comparison.cells)
    if len(cfg.compare.profiles) >= 2:
        outputs["improvement"] = "improvement.csv"
        write_improvement_csv(out_dir / outputs["improvement"], comparison, cfg.compare.profiles[0],
                              cfg.compare.profiles[1])
    for name in cfg.compare.profiles:
        logger.info(f"{name}: final position error spread across brightness {comparison.spread(name):.2f}x")
    _finish(out_dir, "compare", cfg, cat, cat_path, outputs)

    total = sum(len(c.results) for c in comparison.cells)
    if total and sum(c.diverged for c in comparison.cells) == total:
        raise AllTrialsDivergedError(f"all {total} trials diverged")


@main.command("detect")
@click.argument("mask_path", type=click.Path(dir_okay=False))
@click.option("--certainty", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=0.90,
              show_default=True)
@click.option("--min-pixels", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--min-axis-ratio", type=float, default=0.85, show_default=True)
@click.option("--dump", "dump_dir", type=click.Path(file_okay=False), help="Write thresholded and thinned masks")
@handle_exceptions
def cmd_detect(mask_path, certainty, min_pixels, min_axis_ratio, dump_dir):
    """Run the mask pipeline on a PGM and print u,v,major_px,minor_px,theta_rad per detection"""
    configure_logging(level="WARNING")
    mask = read_pgm(mask_path)
    stages = run_mask_pipeline(mask, certainty, min_pixels, min_axis_ratio)
    if dump_dir is not None:
        dump = Path(dump_dir)
        dump.mkdir(parents=True, exist_ok=True)
        write_pgm(stages.binary, dump / "binary.pgm")
        write_pgm(stages.skeleton, dump / "skeleton.pgm")
    for d in stages.detections:
        click.echo(f"{d.u:.3f},{d.v:.3f},{d.major_axis:.3f},{d.minor_axis:.3f},{d.orientation:.6f}")


@main.command("synth-catalog")
@click.argument("out_path", type=click.Path(dir_okay=False))
@click.option("--count", type=int, help="Number of craters (default from density)")
@click.option("--density", type=float, default=0.0053, show_default=True, help="Craters per km^2")
@click.option("--min-diameter-km", type=float, default=5.0, show_default=True)
@click.option("--max-diameter-km", type=float, default=60.0, show_default=True)
@click.option("--slope", type=float, default=2.0, show_default=True)
@click.option("--seed", type=int, default=2024, show_default=True)
@handle_exceptions
def cmd_synth_catalog(out_path, count, density, min_diameter_km, max_diameter_km, slope, seed):
    """Write a synthetic crater catalog file"""
    configure_logging(level="WARNING")
    n = count if count is not None else count_for_density(density)
    try:
        cat = synthesize_catalog(n, np.random.default_rng(seed), min_diameter_km * 1000.0,
                                 max_diameter_km * 1000.0, slope)
    except ValueError as e:
        raise ConfigError("synth-catalog", str(e)) from e
    save_catalog(cat, out_path)
    click.echo(f"{len(cat)} craters written to {out_path}")


def _parse_ring(text: str) -> RimSpec:
    try:
        values = [float(v) for v in text.split(",")]
        return RimSpec(*values)
    except (TypeError, ValueError) as e:
        raise click.BadParameter(f"expected u,v,radius[,axis_ratio[,orientation]], got '{text}'") from e


@main.command("render-mask")
@click.argument("out_path", type=click.Path(dir_okay=False))
@click.option("--ring", "rings", multiple=True, help="u,v,radius[,axis_ratio[,orientation]] in px")
@click.option("--thickness", type=float, default=2.0, show_default=True)
@click.option("--intensity", type=int, default=255, show_default=True)
@click.option("--width", type=int, default=256, show_default=True)
@click.option("--height", type=int, default=256, show_default=True)
@handle_exceptions
def cmd_render_mask(out_path, rings, thickness, intensity, width, height):
    """Render a synthetic rim-prediction mask as PGM"""
    configure_logging(level="WARNING")
    specs = [_parse_ring(r) for r in rings]
    mask = render_rim_mask(specs, width, height, thickness, intensity)
    write_pgm(mask, out_path)

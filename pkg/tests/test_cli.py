from pathlib import Path

import pytest
import yaml
from click.testing import CliRunner

from catalog.catalog import load_catalog
from cli import commands
from cli.commands import main
from cli.manifest import MANIFEST_NAME, file_sha256, read_manifest

FAST = {"trial": {"duration_s": 10.0}, "monte_carlo": {"trials": 2, "workers": 2}}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def shared_catalog(monkeypatch, lunar_catalog):
    monkeypatch.setattr(commands, "resolve_catalog", lambda cfg: (lunar_catalog, None))
    return lunar_catalog


def _config(tmp_path: Path, data: dict, name: str = "run.yaml") -> str:
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def test_run_minimal_config(runner, tmp_path):
    cfg = _config(tmp_path, {**FAST, "catalog": {"synthetic": {"density_per_km2": 1e-4}}})
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 0, result.output
    for name in ("steps.csv", "summary.csv", "trials.csv", "envelope.csv", MANIFEST_NAME, "run.log"):
        assert (out / name).exists()
    manifest = read_manifest(out / MANIFEST_NAME)
    assert manifest.command == "run"
    assert manifest.config["trial"]["duration_s"] == 10.0
    assert manifest.catalog_records == 3793
    assert manifest.outputs["steps"]["sha256"] == file_sha256(out / "steps.csv")
    assert len((out / "steps.csv").read_text().splitlines()) == 1 + 2 * 4


def test_run_config_error_names_the_key(runner, tmp_path):
    cfg = _config(tmp_path, {"trial": {"dT": 0}})
    result = runner.invoke(main, ["run", "--config", cfg, "--out", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "dT" in result.stderr


def test_run_missing_catalog_is_an_io_error(runner, tmp_path):
    result = runner.invoke(main, ["run", "--catalog", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")])
    assert result.exit_code == 2


def test_run_is_reproducible_from_its_manifest(runner, tmp_path, shared_catalog):
    cfg = _config(tmp_path, FAST)
    first, second, replay = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for out in (first, second):
        result = runner.invoke(main, ["run", "--config", cfg, "--seed", "11", "--profile", "trinary",
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["run", "--replay", str(first / MANIFEST_NAME), "--out", str(replay)])
    assert result.exit_code == 0, result.output

    manifest = read_manifest(first / MANIFEST_NAME)
    assert manifest.seed == 11 and manifest.config["detector"]["profile"] == "trinary"
    for name in ("steps.csv", "summary.csv", "trials.csv", "envelope.csv"):
        data = (first / name).read_bytes()
        assert (second / name).read_bytes() == data
        assert (replay / name).read_bytes() == data
        assert manifest.outputs[name.split(".")[0]]["sha256"] == file_sha256(replay / name)


def test_all_trials_diverged_exit_code(runner, tmp_path, shared_catalog):
    cfg = _config(tmp_path, {**FAST, "trial": {"duration_s": 10.0, "bailout_m": 0.001}})
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 3
    assert (out / "summary.csv").exists()


def test_compare_writes_the_grid(runner, tmp_path, shared_catalog):
    cfg = _config(tmp_path, {"trial": {"duration_s": 10.0}})
    out = tmp_path / "out"
    result = runner.invoke(main, ["compare", "--config", cfg, "--trials", "1", "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = (out / "summary.csv").read_text().splitlines()
    assert len(rows) == 7
    header = rows[0].split(",")
    trials = header.index("trials")
    assert [r.split(",")[0] for r in rows[1:]] == ["lunanet"] * 3 + ["trinary"] * 3
    assert all(r.split(",")[trials] == "1" for r in rows[1:])
    assert len((out / "improvement.csv").read_text().splitlines()) == 4
    assert read_manifest(out / MANIFEST_NAME).command == "compare"


def test_compare_unknown_profile(runner, tmp_path, shared_catalog):
    result = runner.invoke(main, ["compare", "--profile", "lunanet,nonesuch", "--out", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "compare.profiles" in result.stderr


def test_detect_blank_mask(runner, tmp_path):
    mask = tmp_path / "blank.pgm"
    mask.write_bytes(b"P5\n16 16\n255\n" + bytes(256))
    result = runner.invoke(main, ["detect", str(mask)])
    assert result.exit_code == 0
    assert result.stdout == ""


def test_render_then_detect_three_rings(runner, tmp_path):
    mask = tmp_path / "rings.pgm"
    result = runner.invoke(main, ["render-mask", str(mask), "--ring", "60,60,20", "--ring", "180,70,30",
                                  "--ring", "120,190,12"])
    assert result.exit_code == 0, result.output
    dump = tmp_path / "dump"
    result = runner.invoke(main, ["detect", str(mask), "--dump", str(dump)])
    assert result.exit_code == 0, result.output
    lines = result.stdout.splitlines()
    assert len(lines) == 3
    assert all(len(line.split(",")) == 5 for line in lines)
    assert (dump / "binary.pgm").exists() and (dump / "skeleton.pgm").exists()


def test_detect_invalid_masks(runner, tmp_path):
    truncated = tmp_path / "truncated.pgm"
    truncated.write_bytes(b"P5\n16 16\n255\n" + bytes(10))
    assert runner.invoke(main, ["detect", str(truncated)]).exit_code == 2
    assert runner.invoke(main, ["detect", str(tmp_path / "missing.pgm")]).exit_code == 2


def test_render_mask_out_of_bounds(runner, tmp_path):
    result = runner.invoke(main, ["render-mask", str(tmp_path / "m.pgm"), "--ring", "5,5,20"])
    assert result.exit_code == 2


def test_synth_catalog(runner, tmp_path):
    path = tmp_path / "cat.csv"
    result = runner.invoke(main, ["synth-catalog", str(path), "--count", "100", "--seed", "3"])
    assert result.exit_code == 0, result.output
    cat = load_catalog(path)
    assert len(cat) == 100
    assert cat.diameter.min() >= 5_000.0 - 1e-6

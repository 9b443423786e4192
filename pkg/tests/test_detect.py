import math

import numpy as np
import pytest
from scipy import ndimage

from detect import (BrightnessResponse, DetectionStats, DetectorProfile, FitDiagnostics, PredictionMask, RimSpec,
                    detect_from_mask, erode_to_rims, extract_contours, fit_ellipses, read_pgm, render_rim_mask,
                    run_mask_pipeline, simulate_detections, threshold_mask, write_pgm)
from model.errors import MaskBoundsError, MaskFormatError
from model.models import CraterRecord, ExpectedCrater, Geodetic
from sim.config import build_config


def _expected(n: int) -> list:
    return [ExpectedCrater(CraterRecord(f"C{i:03d}", Geodetic(0.0, 0.001 * i), 8_000.0), 20.0 + 10.0 * i,
                           30.0 + 5.0 * i, 25.0) for i in range(n)]


def _nearest(detections, u, v):
    return min(detections, key=lambda d: math.hypot(d.u - u, d.v - v))


def _layout(rng: np.random.Generator, n: int) -> list:
    rings = []
    while len(rings) < n:
        r = rng.uniform(8.0, 40.0)
        u, v = rng.uniform(r + 2, 253 - r, 2)
        if all(math.hypot(u - o.u, v - o.v) > r + o.radius + 6 for o in rings):
            rings.append(RimSpec(u, v, r))
    return rings


def test_threshold_is_strict_at_the_certainty():
    m = PredictionMask(np.array([[229, 230, 153, 154]], dtype=np.uint8))
    assert list(threshold_mask(m).intensities[0]) == [0, 255, 0, 0]
    assert list(threshold_mask(m, 153 / 255).intensities[0]) == [255, 255, 0, 255]
    with pytest.raises(ValueError):
        threshold_mask(m, 1.0)


def test_threshold_is_idempotent_on_binary_masks():
    binary = threshold_mask(render_rim_mask([RimSpec(90.0, 100.0, 25.0), RimSpec(170.0, 160.0, 40.0)]))
    np.testing.assert_array_equal(threshold_mask(binary).intensities, binary.intensities)


def test_dim_mask_below_the_certainty_has_no_detections():
    rings = [RimSpec(60.0, 60.0, 20.0), RimSpec(180.0, 70.0, 30.0)]
    dim = render_rim_mask(rings, intensity=int(0.8 * 0.90 * 255))
    assert detect_from_mask(dim) == []
    assert len(detect_from_mask(render_rim_mask(rings))) == 2


def test_thinning_keeps_one_pixel_wide_rings():
    rings = [RimSpec(70.0, 70.0, 30.0), RimSpec(180.0, 170.0, 45.0)]
    binary = threshold_mask(render_rim_mask(rings, thickness=3.0))
    skeleton = erode_to_rims(binary).intensities > 0
    eight = np.ones((3, 3), dtype=bool)
    assert ndimage.label(binary.intensities > 0, structure=eight)[1] == 2
    assert ndimage.label(skeleton, structure=eight)[1] == 2
    # no 2x2 block survives
    blocks = skeleton[:-1, :-1] & skeleton[1:, :-1] & skeleton[:-1, 1:] & skeleton[1:, 1:]
    assert not blocks.any()
    assert skeleton.sum() < 0.5 * (binary.intensities > 0).sum()
    vv, uu = np.mgrid[0:256, 0:256]
    for ring in rings:
        near = np.hypot(uu - ring.u, vv - ring.v) < ring.radius + 5
        assert 5.0 * ring.radius < skeleton[near].sum() < 8.5 * ring.radius


@pytest.mark.parametrize("radius, thickness", [(10.0, 2.0), (30.0, 2.0), (50.0, 2.0), (30.0, 4.0)])
def test_rendered_ring_area(radius, thickness):
    mask = render_rim_mask([RimSpec(128.0, 128.0, radius)], thickness=thickness)
    lit = int((mask.intensities > 0).sum())
    assert lit == pytest.approx(2 * math.pi * radius * thickness, rel=0.2)


def test_contours_shorter_than_min_pixels_are_dropped():
    skel = np.zeros((10, 10), dtype=np.uint8)
    skel[1, 1:3] = 255          # 2 px
    skel[5, 1:4] = 255          # 3 px
    skel[8, 8] = 255            # diagonal pair, one component
    skel[9, 9] = 255
    chains = extract_contours(PredictionMask(skel), min_pixels=3)
    assert [len(c) for c in chains] == [3]
    np.testing.assert_array_equal(chains[0], [[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    assert sorted(len(c) for c in extract_contours(PredictionMask(skel), min_pixels=2)) == [2, 2, 3]


def test_blank_mask_has_no_detections():
    assert detect_from_mask(PredictionMask.blank()) == []


def test_three_rings_are_recovered():
    rings = [RimSpec(60.0, 60.0, 20.0), RimSpec(180.0, 70.0, 30.0), RimSpec(120.0, 190.0, 12.0)]
    stages = run_mask_pipeline(render_rim_mask(rings))
    assert len(stages.detections) == 3
    assert stages.diagnostics.accepted == 3
    for ring in rings:
        d = _nearest(stages.detections, ring.u, ring.v)
        assert math.hypot(d.u - ring.u, d.v - ring.v) <= 1.5
        assert d.diameter == pytest.approx(2 * ring.radius, rel=0.1)
        assert d.major_axis >= d.minor_axis
        assert 0.0 <= d.orientation < math.pi


def test_rendered_layouts_recovery_rate():
    rng = np.random.default_rng(99)
    total = recovered = 0
    for _ in range(100):
        rings = _layout(rng, int(rng.integers(1, 4)))
        detections = detect_from_mask(render_rim_mask(rings))
        for ring in rings:
            total += 1
            if not detections:
                continue
            d = _nearest(detections, ring.u, ring.v)
            center_ok = math.hypot(d.u - ring.u, d.v - ring.v) <= 2.0
            if center_ok and abs(d.diameter - 2 * ring.radius) <= 0.2 * ring.radius:
                recovered += 1
    assert recovered >= 0.95 * total


def test_elongated_ring_is_rejected():
    mask = render_rim_mask([RimSpec(128.0, 128.0, 40.0, axis_ratio=0.5, orientation=0.3)])
    stages = run_mask_pipeline(mask)
    assert stages.detections == []
    assert stages.diagnostics.too_elliptical == 1
    assert stages.diagnostics.rejected_ratios[0] == pytest.approx(0.5, abs=0.05)
    # a loose gate keeps it, with the major axis along the rendered orientation
    diag = FitDiagnostics()
    kept = fit_ellipses(stages.chains, min_axis_ratio=0.3, diagnostics=diag)
    assert len(kept) == 1 and diag.accepted == 1
    assert kept[0].major_axis == pytest.approx(80.0, rel=0.05)
    assert kept[0].orientation == pytest.approx(0.3, abs=0.05)


def test_short_chains_are_skipped_by_the_fit():
    diag = FitDiagnostics()
    chain = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 1.0], [3.0, 1.0]])
    assert fit_ellipses([chain], diagnostics=diag) == []
    assert diag.too_short == 1


def test_render_rejects_rings_leaving_the_image():
    with pytest.raises(MaskBoundsError):
        render_rim_mask([(10.0, 128.0, 12.0)])
    with pytest.raises(ValueError):
        RimSpec(128.0, 128.0, 0.0)


def test_overlapping_rings_are_unioned():
    mask = render_rim_mask([(100.0, 128.0, 20.0), (120.0, 128.0, 20.0)], intensity=200)
    assert mask.intensities.max() == 200
    assert set(np.unique(mask.intensities)) == {0, 200}


def test_mask_validation():
    with pytest.raises(MaskFormatError):
        PredictionMask(np.zeros((4, 4, 3)))
    with pytest.raises(MaskFormatError):
        PredictionMask(np.zeros((0, 4)))
    with pytest.raises(MaskFormatError):
        PredictionMask(np.full((4, 4), 300))


def test_pgm_io(tmp_path):
    mask = render_rim_mask([(64.0, 64.0, 20.0)], width=128, height=100)
    path = tmp_path / "mask.pgm"
    write_pgm(mask, path)
    assert path.read_bytes().startswith(b"P5\n128 100\n255\n")
    np.testing.assert_array_equal(read_pgm(path).intensities, mask.intensities)


def test_pgm_header_comments_and_maxval(tmp_path):
    path = tmp_path / "small.pgm"
    path.write_bytes(b"P5\n# produced by hand\n2 1\n15\n" + bytes([15, 0]))
    assert list(read_pgm(path).intensities[0]) == [255, 0]


@pytest.mark.parametrize("content", [
    b"P2\n2 2\n255\n0 0 0 0\n",
    b"P5\n4 4\n255\n" + bytes(10),
    b"P5\n4 4\n",
    b"P5\n4 4\n65535\n" + bytes(32),
])
def test_pgm_rejects_invalid_files(tmp_path, content):
    path = tmp_path / "bad.pgm"
    path.write_bytes(content)
    with pytest.raises(MaskFormatError):
        read_pgm(path)


def test_perfect_profile_reports_every_crater_exactly():
    profile = DetectorProfile("perfect", 1.0, 1.0)
    visible = _expected(5)
    frame = simulate_detections(visible, set(), profile, 0.0, np.random.default_rng(0))
    assert [d.true_id for d in frame] == [c.record.id for c in visible]
    for d, c in zip(frame, visible):
        assert (d.detection.u, d.detection.v, d.detection.diameter) == (c.u, c.v, c.diameter)


def test_tracked_craters_use_the_redetection_probability():
    profile = DetectorProfile("sticky", p_detect_new=0.0, p_redetect=1.0)
    visible = _expected(6)
    tracked = {"C001", "C004"}
    frame = simulate_detections(visible, tracked, profile, 0.0, np.random.default_rng(1))
    assert {d.true_id for d in frame} == tracked


def test_false_detection_rate():
    profile = DetectorProfile("noisy", 0.0, 0.0, false_rate=4.0)
    rng = np.random.default_rng(2)
    counts = [len(simulate_detections([], set(), profile, 0.0, rng)) for _ in range(2000)]
    assert np.mean(counts) == pytest.approx(4.0, abs=0.2)


def test_mismatches_are_planted_next_to_visible_craters():
    profile = DetectorProfile("mismatch", 1.0, 1.0, false_rate=5.0, mismatch_rate=1.0, mismatch_offset_px=1.0)
    visible = _expected(5)
    rng = np.random.default_rng(3)
    false = []
    for _ in range(200):
        frame = simulate_detections(visible, {c.record.id for c in visible}, profile, 0.0, rng)
        assert sum(d.true_id is not None for d in frame) == 5
        false.extend(d.detection for d in frame if d.true_id is None)
    assert len(false) / 200 == pytest.approx(5.0, abs=0.5)
    near = [min(math.hypot(d.u - c.u, d.v - c.v) for c in visible) < 10.0 for d in false]
    assert np.mean(near) >= 0.95


def test_mismatch_rate_is_the_planted_fraction():
    profile = DetectorProfile("half", 1.0, 1.0, false_rate=5.0, mismatch_rate=0.5, mismatch_offset_px=1.0)
    visible = _expected(5)
    rng = np.random.default_rng(13)
    false = []
    for _ in range(200):
        false.extend(d.detection for d in simulate_detections(visible, set(), profile, 0.0, rng)
                     if d.true_id is None)
    near = [min(math.hypot(d.u - c.u, d.v - c.v) for c in visible) < 8.0 for d in false]
    # uniform clutter lands that close to one of the five craters about 1.5 % of the time
    assert np.mean(near) == pytest.approx(0.5, abs=0.06)


def test_brightness_response_interpolates():
    profiles = build_config().detector_profiles()
    trinary = profiles["trinary"]
    dark = trinary.at_brightness(-0.3)
    assert dark.p_detect_new == pytest.approx(0.35 * 1.286)
    assert dark.false_rate == pytest.approx(8.8 * 1.49)
    assert trinary.at_brightness(0.0).p_redetect == pytest.approx(0.28)
    assert trinary.at_brightness(-0.15).p_detect_new == pytest.approx(0.35 * 1.143)
    assert profiles["lunanet"].at_brightness(0.3).p_redetect == pytest.approx(0.9)


def test_invalid_profiles():
    with pytest.raises(ValueError):
        DetectorProfile("bad", 1.5, 0.5)
    with pytest.raises(ValueError):
        DetectorProfile("bad", 0.5, 0.5, false_diameter_px=(0.0, 10.0))
    with pytest.raises(ValueError):
        hot = DetectorProfile("hot", 0.9, 0.9, brightness_response={0.3: BrightnessResponse(p_detect_new=2.0)})
        hot.at_brightness(0.3)


def _mean_run_length(profile: DetectorProfile, frames: int, rng: np.random.Generator) -> float:
    visible = _expected(3)
    tracked, current, runs = set(), {}, []
    for _ in range(frames):
        emitted = {d.true_id for d in simulate_detections(visible, tracked, profile, 0.0, rng)}
        for cid in list(current):
            if cid not in emitted:
                runs.append(current.pop(cid))
        for cid in emitted:
            current[cid] = current.get(cid, 0) + 1
        tracked = emitted
    return float(np.mean(runs))


def test_redetection_lengthens_tracks():
    sticky = _mean_run_length(DetectorProfile("sticky", 0.3, 0.9), 10_000, np.random.default_rng(5))
    memoryless = _mean_run_length(DetectorProfile("memoryless", 0.3, 0.3), 10_000, np.random.default_rng(5))
    assert sticky > memoryless
    # geometric runs: 1 / (1 - p_redetect)
    assert sticky == pytest.approx(10.0, rel=0.15)
    assert memoryless == pytest.approx(1.0 / 0.7, rel=0.1)


def test_detection_stats():
    stats = DetectionStats()
    a = ExpectedCrater(CraterRecord("A", Geodetic(0.0, 0.0), 6_000.0), 10.0, 10.0, 20.0)
    profile = DetectorProfile("perfect", 1.0, 1.0)
    rng = np.random.default_rng(4)
    emitted = stats.record(simulate_detections([a], set(), profile, 0.0, rng))
    assert emitted == {"A"}
    stats.record(simulate_detections([a], emitted, profile, 0.0, rng))
    stats.record([])
    assert stats.hits == {"A": 2}
    assert stats.mean_track_length == pytest.approx(2.0)
    assert stats.mean_detections_per_frame == pytest.approx(2 / 3)

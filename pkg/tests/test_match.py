import itertools
import math

import numpy as np
import pytest

from catalog.catalog import CraterCatalog
from geometry import geodetic_to_lclf, nadir_pose
from match import (AFFINE, CandidatePair, MatchParams, expected_craters, identify, lms_pair,
                   ransac_filter)
from model.models import R_MOON, CameraModel, CraterRecord, DetectedCrater, ExpectedCrater, Geodetic

CAM = CameraModel()
NORTH = np.array([0.0, 0.0, 1.0])
GATE = MatchParams().gate(CAM)


def _exp(crater_id: str, u: float, v: float, diameter: float = 20.0) -> ExpectedCrater:
    return ExpectedCrater(CraterRecord(crater_id, Geodetic(0.0, 0.0), 10_000.0), u, v, diameter)


def _det(u: float, v: float, diameter: float = 20.0) -> DetectedCrater:
    return DetectedCrater(u, v, diameter, diameter)


def _pair(crater_id: str, u: float, v: float, t: tuple) -> CandidatePair:
    return CandidatePair(_det(u, v), _exp(crater_id, u + t[0], v + t[1]), 0.0)


def _random_pose(rng: np.random.Generator):
    lat, lon = rng.uniform(-60.0, 60.0), rng.uniform(-180.0, 180.0)
    pos = geodetic_to_lclf(Geodetic(math.radians(lat), math.radians(lon), R_MOON + 100_000.0)).as_array()
    return pos, nadir_pose(pos, NORTH)


def _perfect(expected):
    return [_det(e.u, e.v, e.diameter) for e in expected]


def _cost_matrix(detections, expected, weight=1.0):
    return np.array([[(d.u - e.u) ** 2 + (d.v - e.v) ** 2 + weight * (d.diameter - e.diameter) ** 2
                      for e in expected] for d in detections])


def _stable_matchings(cost: np.ndarray, gate: float):
    """Every admissible matching without a blocking pair, by exhaustive enumeration"""
    n, m = cost.shape
    admissible = [(i, j) for i in range(n) for j in range(m) if cost[i, j] <= gate]
    stable = []
    for k in range(min(n, m) + 1):
        for chosen in itertools.combinations(admissible, k):
            rows = [i for i, _ in chosen]
            cols = [j for _, j in chosen]
            if len(set(rows)) < k or len(set(cols)) < k:
                continue
            c_row = {i: cost[i, j] for i, j in chosen}
            c_col = {j: cost[i, j] for i, j in chosen}
            blocked = any(cost[i, j] < c_row.get(i, math.inf) and cost[i, j] < c_col.get(j, math.inf)
                          for i, j in admissible if (i, j) not in chosen)
            if not blocked:
                stable.append(sorted(chosen))
    return stable


def test_gate_default():
    assert GATE == pytest.approx((0.15 * 256) ** 2)


def test_expected_craters_projection():
    pos = geodetic_to_lclf(Geodetic(math.radians(10.0), math.radians(20.0), R_MOON + 100_000.0)).as_array()
    pose = nadir_pose(pos, NORTH)
    cat = CraterCatalog((CraterRecord("N1", Geodetic(math.radians(10.0), math.radians(20.0)), 10_000.0),
                         CraterRecord("FAR", Geodetic(math.radians(-10.0), math.radians(20.0)), 10_000.0)))
    expected = expected_craters(pose, CAM, cat)
    assert [e.record.id for e in expected] == ["N1"]
    assert (expected[0].u, expected[0].v) == pytest.approx((128.0, 128.0), abs=1e-6)
    assert expected[0].diameter == pytest.approx(400.0 * 10_000.0 / 100_000.0)
    assert expected_craters(pose, CAM, CraterCatalog(())) == []


def test_expected_craters_lie_in_the_image(lunar_catalog):
    rng = np.random.default_rng(1)
    for _ in range(10):
        _, pose = _random_pose(rng)
        expected = expected_craters(pose, CAM, lunar_catalog)
        assert [e.record.id for e in expected] == sorted(e.record.id for e in expected)
        for e in expected:
            assert 0.0 <= e.u <= 256.0 and 0.0 <= e.v <= 256.0
            assert e.diameter > 0.0


def test_lms_identity_pairing():
    expected = [_exp("A", 50.0, 50.0), _exp("B", 150.0, 60.0, 30.0), _exp("C", 90.0, 200.0, 12.0)]
    pairs = lms_pair(_perfect(expected), expected, GATE)
    assert [p.expected.record.id for p in pairs] == ["A", "B", "C"]
    assert all(p.cost == 0.0 for p in pairs)
    for p in pairs:
        assert p.detection.center == p.expected.center


def test_lms_tie_goes_to_the_lower_id():
    expected = [_exp("B", 100.0, 100.0), _exp("A", 120.0, 100.0)]
    pairs = lms_pair([_det(110.0, 100.0)], expected, GATE)
    assert len(pairs) == 1
    assert pairs[0].expected.record.id == "A"


def test_lms_gate_drops_distant_pairs():
    expected = [_exp("A", 50.0, 50.0)]
    assert len(lms_pair([_det(50.0 + 38.0, 50.0)], expected, GATE)) == 1
    assert lms_pair([_det(50.0 + 39.0, 50.0)], expected, GATE) == []
    assert lms_pair([], expected, GATE) == []


def test_lms_is_independent_of_detection_order():
    rng = np.random.default_rng(2)
    for _ in range(50):
        expected = [_exp(f"E{j}", *rng.uniform(0.0, 256.0, 2), rng.uniform(10.0, 40.0)) for j in range(8)]
        detections = [_det(*rng.uniform(0.0, 256.0, 2), rng.uniform(10.0, 40.0)) for _ in range(8)]
        reference = [(p.detection.center, p.expected.record.id) for p in lms_pair(detections, expected, GATE)]
        shuffled = [detections[k] for k in rng.permutation(len(detections))]
        assert [(p.detection.center, p.expected.record.id) for p in lms_pair(shuffled, expected, GATE)] == reference


def test_lms_matches_exhaustive_oracle():
    rng = np.random.default_rng(3)
    for _ in range(500):
        n, m = rng.integers(1, 5, size=2)
        expected = [_exp(f"E{j}", *rng.uniform(0.0, 100.0, 2), rng.uniform(10.0, 30.0)) for j in range(m)]
        detections = [_det(*rng.uniform(0.0, 100.0, 2), rng.uniform(10.0, 30.0)) for _ in range(n)]
        cost = _cost_matrix(detections, expected)
        got = sorted((detections.index(p.detection), expected.index(p.expected))
                     for p in lms_pair(detections, expected, GATE))
        assert _stable_matchings(cost, GATE) == [got]


def test_lms_is_optimal_on_separated_layouts():
    rng = np.random.default_rng(4)
    for _ in range(100):
        centers = []
        while len(centers) < 6:
            c = rng.uniform(20.0, 236.0, 2)
            if all(np.linalg.norm(c - o) > 40.0 for o in centers):
                centers.append(c)
        expected = [_exp(f"E{j}", c[0], c[1], rng.uniform(10.0, 30.0)) for j, c in enumerate(centers)]
        detections = [_det(e.u + rng.normal(0.0, 2.0), e.v + rng.normal(0.0, 2.0),
                           e.diameter * rng.uniform(0.95, 1.05)) for e in expected]
        cost = _cost_matrix(detections, expected)
        best = min(itertools.permutations(range(6)), key=lambda perm: sum(cost[i, perm[i]] for i in range(6)))
        got = {detections.index(p.detection): expected.index(p.expected)
               for p in lms_pair(detections, expected, GATE)}
        assert got == dict(enumerate(best))


def test_ransac_identical_translations():
    pairs = [_pair(f"P{k}", 20.0 * k, 10.0 + 5.0 * k, (2.0, -1.0)) for k in range(8)]
    result = ransac_filter(pairs, np.random.default_rng(0))
    assert len(result.inliers) == 8 and result.outliers == []
    assert not result.low_confidence
    np.testing.assert_allclose(result.model, [2.0, -1.0])


def test_ransac_single_offset_outlier():
    pairs = [_pair(f"P{k}", 20.0 * k, 30.0, (3.0, 1.0)) for k in range(7)]
    pairs.append(_pair("BAD", 100.0, 100.0, (53.0, 1.0)))
    result = ransac_filter(pairs, np.random.default_rng(1), inlier_tol=5.0)
    assert [p.expected.record.id for p in result.outliers] == ["BAD"]
    assert len(result.inliers) == 7


def test_ransac_low_confidence_below_min_pairs():
    pairs = [_pair("P0", 10.0, 10.0, (0.0, 0.0)), _pair("P1", 50.0, 10.0, (40.0, 0.0))]
    result = ransac_filter(pairs, np.random.default_rng(2), min_pairs=3)
    assert result.low_confidence
    assert result.inliers == pairs and result.outliers == []
    with pytest.raises(ValueError):
        ransac_filter(pairs, np.random.default_rng(2), iterations=0)


def test_ransac_min_pairs_must_be_positive():
    with pytest.raises(ValueError):
        ransac_filter([], np.random.default_rng(3), min_pairs=0)
    with pytest.raises(ValueError):
        MatchParams(min_pairs=0)
    result = ransac_filter([], np.random.default_rng(3), min_pairs=1)
    assert result.low_confidence
    assert result.inliers == [] and result.outliers == []


def test_ransac_rejects_planted_pairs():
    rng = np.random.default_rng(5)
    planted = rejected = 0
    for _ in range(100):
        shift = rng.uniform(-10.0, 10.0, 2)
        pairs = [_pair(f"T{k}", *rng.uniform(0.0, 256.0, 2), tuple(shift + rng.normal(0.0, 1.0, 2)))
                 for k in range(10)]
        for k in range(4):
            angle, radius = rng.uniform(0.0, 2 * math.pi), rng.uniform(10.0, 38.0)
            offset = shift + radius * np.array([math.cos(angle), math.sin(angle)])
            pairs.append(_pair(f"F{k}", *rng.uniform(0.0, 256.0, 2), tuple(offset)))
        result = ransac_filter(pairs, rng)
        planted += 4
        rejected += sum(p.expected.record.id.startswith("F") for p in result.outliers)
        # inliers stay within tol of the consensus model
        t = np.array([p.translation for p in result.inliers])
        assert np.all(np.linalg.norm(t - result.model, axis=1) <= 5.0)
    assert rejected >= 0.95 * planted


def test_ransac_affine_model():
    angle = math.radians(3.0)
    a = 1.02 * np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    offset = np.array([4.0, -6.0])
    rng = np.random.default_rng(6)
    pairs = []
    for k in range(9):
        src = rng.uniform(0.0, 256.0, 2)
        dst = a @ src + offset
        pairs.append(CandidatePair(_det(*src), _exp(f"P{k}", *dst), 0.0))
    pairs.append(CandidatePair(_det(128.0, 128.0), _exp("BAD", 128.0 + 30.0, 128.0), 0.0))
    result = ransac_filter(pairs, rng, model=AFFINE)
    assert [p.expected.record.id for p in result.outliers] == ["BAD"]
    assert result.model.shape == (2, 3)
    np.testing.assert_allclose(result.model[:, :2], a, atol=1e-6)


def test_identify_without_detections(lunar_catalog):
    _, pose = _random_pose(np.random.default_rng(7))
    result = identify([], pose, CAM, lunar_catalog, MatchParams(), np.random.default_rng(0))
    assert result.matches == []
    d = result.diagnostics
    assert (d.detections, d.expected, d.candidates, d.gated, d.outliers) == (0, 0, 0, 0, 0)


def test_identify_closed_loop_is_bijective(lunar_catalog):
    rng = np.random.default_rng(8)
    params = MatchParams()
    for _ in range(100):
        _, pose = _random_pose(rng)
        expected = expected_craters(pose, CAM, lunar_catalog)
        detections = _perfect(expected)
        owner = {d.center: e.record.id for d, e in zip(detections, expected)}
        result = identify(detections, pose, CAM, lunar_catalog, params, rng)
        assert len(result.matches) == len(expected)
        assert {m.record.id for m in result.matches} == set(owner.values())
        for m in result.matches:
            assert owner[m.detection.center] == m.record.id
            assert m.translation == pytest.approx((0.0, 0.0), abs=1e-9)


def test_identify_tolerates_a_small_position_error(lunar_catalog):
    rng = np.random.default_rng(9)
    correct = total = 0
    for _ in range(20):
        pos, pose = _random_pose(rng)
        expected = expected_craters(pose, CAM, lunar_catalog)
        detections = _perfect(expected)
        owner = {d.center: e.record.id for d, e in zip(detections, expected)}
        east = np.cross(NORTH, pos)
        shifted = nadir_pose(pos + 500.0 * east / np.linalg.norm(east), NORTH)
        result = identify(detections, shifted, CAM, lunar_catalog, MatchParams(expected_margin=0.05), rng)
        total += len(expected)
        correct += sum(owner[m.detection.center] == m.record.id for m in result.matches)
    assert correct >= 0.95 * total

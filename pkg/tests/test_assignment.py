"""Selection math: band bounds, threshold labels, the blended score,
the band gate, and whole-scene assignment against a plain-loop oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from passel.anchors import ClassAnchorSpec
from passel.assignment import (
    SampleLabel,
    SelectionParams,
    assign_scene,
    compute_bounds,
    gated_pair_score,
    legacy_assign,
    point_assisted_score,
)
from passel.cloud import EmptyUnionPolicy, PointCloud, build_index
from passel.geom import Box3D
from passel.synth import jittered_anchors, make_scene

from conftest import CAR, PEDESTRIAN
from reference import reference_assign

HALF = SelectionParams(k=5.0, alpha=0.5, beta=0.5)


class TestComputeBounds:
    def test_car_thresholds(self):
        b = compute_bounds(0.6, 0.45, 5.0)
        assert b.upper == pytest.approx(0.63, abs=1e-12)
        assert b.lower == pytest.approx(0.42, abs=1e-12)

    def test_pedestrian_thresholds(self):
        b = compute_bounds(0.5, 0.35, 5.0)
        assert b.upper == pytest.approx(0.53, abs=1e-12)
        assert b.lower == pytest.approx(0.32, abs=1e-12)

    def test_large_k_collapses_to_thresholds(self):
        b = compute_bounds(0.6, 0.45, 1e9)
        assert b.upper == pytest.approx(0.6, abs=1e-9)
        assert b.lower == pytest.approx(0.45, abs=1e-9)

    def test_band_strictly_contains_thresholds(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            t_neg = float(rng.uniform(0.05, 0.6))
            t_pos = float(rng.uniform(t_neg + 0.01, 0.95))
            k = float(rng.uniform(1.0, 100.0))
            b = compute_bounds(t_pos, t_neg, k)
            assert b.lower < t_neg < t_pos < b.upper

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            compute_bounds(0.45, 0.6, 5.0)
        with pytest.raises(ValueError):
            compute_bounds(0.6, 0.45, 0.5)
        with pytest.raises(ValueError):
            compute_bounds(1.2, 0.45, 5.0)


class TestSelectionParams:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            SelectionParams(alpha=0.6, beta=0.6)
        with pytest.raises(ValueError):
            SelectionParams(alpha=-0.1, beta=1.1)

    def test_k_lower_bound(self):
        with pytest.raises(ValueError):
            SelectionParams(k=0.99)


class TestLegacyAssign:
    def test_branches(self):
        assert legacy_assign(0.7, 0.6, 0.45) is SampleLabel.POSITIVE
        assert legacy_assign(0.1, 0.6, 0.45) is SampleLabel.NEGATIVE
        assert legacy_assign(0.5, 0.6, 0.45) is SampleLabel.IGNORED

    def test_thresholds_are_strict(self):
        assert legacy_assign(0.6, 0.6, 0.45) is SampleLabel.IGNORED
        assert legacy_assign(0.45, 0.6, 0.45) is SampleLabel.IGNORED


class TestPointAssistedScore:
    def test_degenerate_weights_identity(self):
        rng = np.random.default_rng(1)
        bounds = compute_bounds(0.6, 0.45, 5.0)
        for _ in range(200):
            s = float(rng.uniform(0, 1))
            p = float(rng.uniform(0, 1))
            assert point_assisted_score(s, p, bounds, 1.0, 0.0) == s

    def test_hand_evaluated_fixtures(self):
        bounds = compute_bounds(0.6, 0.45, 5.0)
        assert point_assisted_score(0.58, 1.0, bounds, 0.5, 0.5) == pytest.approx(0.605, abs=1e-12)
        assert point_assisted_score(0.62, 0.1, bounds, 0.5, 0.5) == pytest.approx(0.5305, abs=1e-12)
        assert point_assisted_score(0.46, 0.0, bounds, 0.5, 0.5) == pytest.approx(0.44, abs=1e-12)

    def test_monotone_in_point_iou(self):
        rng = np.random.default_rng(2)
        bounds = compute_bounds(0.6, 0.45, 5.0)
        for _ in range(200):
            s = float(rng.uniform(0, 1))
            p1, p2 = sorted(rng.uniform(0, 1, 2))
            if p1 == p2:
                continue
            lo = point_assisted_score(s, float(p1), bounds, 0.5, 0.5)
            hi = point_assisted_score(s, float(p2), bounds, 0.5, 0.5)
            assert hi > lo

    def test_monotone_in_score(self):
        bounds = compute_bounds(0.6, 0.45, 5.0)
        rng = np.random.default_rng(3)
        for _ in range(200):
            p = float(rng.uniform(0, 1))
            s1, s2 = sorted(rng.uniform(0, 1, 2))
            if s1 == s2:
                continue
            assert point_assisted_score(float(s2), p, bounds, 0.5, 0.5) > point_assisted_score(
                float(s1), p, bounds, 0.5, 0.5
            )


class TestBoundGuarantees:
    """The no-crossing value bounds, checked over random tuples."""

    def _draw(self, rng):
        t_neg = float(rng.uniform(0.02, 0.7))
        t_pos = float(rng.uniform(t_neg + 0.01, 0.98))
        k = float(rng.uniform(1.0, 100.0))
        return t_pos, t_neg, compute_bounds(t_pos, t_neg, k)

    def test_negative_samples_never_reach_positive(self):
        rng = np.random.default_rng(4)
        for _ in range(20_000):
            t_pos, t_neg, bounds = self._draw(rng)
            s = float(rng.uniform(0, t_neg))
            p = float(rng.uniform(0, 1))
            assert point_assisted_score(s, p, bounds, 0.5, 0.5) <= t_pos + 1e-9

    def test_positive_samples_never_reach_negative(self):
        rng = np.random.default_rng(5)
        for _ in range(20_000):
            t_pos, t_neg, bounds = self._draw(rng)
            s = float(rng.uniform(t_pos, 1))
            p = float(rng.uniform(0, 1))
            assert point_assisted_score(s, p, bounds, 0.5, 0.5) >= t_neg - 1e-9

    def test_ignored_samples_stay_inside_band(self):
        rng = np.random.default_rng(6)
        for _ in range(20_000):
            t_pos, t_neg, bounds = self._draw(rng)
            s = float(rng.uniform(t_neg, t_pos))
            p = float(rng.uniform(0, 1))
            adjusted = point_assisted_score(s, p, bounds, 0.5, 0.5)
            assert bounds.lower - 1e-9 <= adjusted <= bounds.upper + 1e-9

    @given(
        t_neg=st.floats(0.02, 0.7),
        spread=st.floats(0.01, 0.28),
        k=st.floats(1.0, 100.0),
        s=st.floats(0.0, 1.0),
        p=st.floats(0.0, 1.0),
    )
    @settings(max_examples=300, deadline=None)
    def test_property_all_three_bounds(self, t_neg, spread, k, s, p):
        t_pos = t_neg + spread
        bounds = compute_bounds(t_pos, t_neg, k)
        adjusted = point_assisted_score(s, p, bounds, 0.5, 0.5)
        if s <= t_neg:
            assert adjusted <= t_pos + 1e-9
        if s >= t_pos:
            assert adjusted >= t_neg - 1e-9
        if t_neg <= s <= t_pos:
            assert bounds.lower - 1e-9 <= adjusted <= bounds.upper + 1e-9


class TestGatedPairScore:
    BOUNDS = compute_bounds(0.6, 0.45, 5.0)

    def _counting_provider(self, value):
        calls = []

        def provider():
            calls.append(1)
            return value

        return provider, calls

    def test_below_band_skips_provider(self):
        provider, calls = self._counting_provider(0.9)
        adjusted, p = gated_pair_score(0.2, provider, self.BOUNDS, HALF)
        assert adjusted == 0.2 and p is None
        assert calls == []

    def test_above_band_skips_provider(self):
        provider, calls = self._counting_provider(0.9)
        adjusted, p = gated_pair_score(0.9, provider, self.BOUNDS, HALF)
        assert adjusted == 0.9 and p is None
        assert calls == []

    def test_in_band_invokes_provider(self):
        provider, calls = self._counting_provider(0.9)
        adjusted, p = gated_pair_score(0.5, provider, self.BOUNDS, HALF)
        # 0.25 + 0.5 * (0.567 + 0.042)
        assert adjusted == pytest.approx(0.5545, abs=1e-12)
        assert p == 0.9
        assert calls == [1]

    def test_band_edges_inclusive(self):
        for s in (self.BOUNDS.lower, self.BOUNDS.upper):
            provider, calls = self._counting_provider(0.5)
            gated_pair_score(s, provider, self.BOUNDS, HALF)
            assert calls == [1]

    def test_none_provider_keeps_score(self):
        adjusted, p = gated_pair_score(0.5, lambda: None, self.BOUNDS, HALF)
        assert adjusted == 0.5 and p is None


def _specs():
    return {"Car": CAR, "Pedestrian": PEDESTRIAN}


class TestAssignScene:
    def test_zero_gts_all_negative(self):
        cloud = PointCloud(np.random.default_rng(0).uniform(-5, 5, (50, 3)))
        anchors = {"Car": [Box3D(0, 0, 0, 3.9, 1.6, 1.56, 0.0)]}
        results = assign_scene(cloud, [], anchors, _specs(), HALF)
        assert len(results) == 1
        r = results[0]
        assert r.legacy_label is SampleLabel.NEGATIVE
        assert r.pass_label is SampleLabel.NEGATIVE
        assert r.score == 0.0 and r.adjusted_score == 0.0 and r.best_gt is None

    def test_identity_anchor_positive_under_both(self):
        box = Box3D(5, 5, -1, 3.9, 1.6, 1.56, 0.5)
        pts = np.array([[5.0, 5.0, -1.0], [5.5, 5.0, -1.0], [4.5, 5.2, -0.8]])
        results = assign_scene(
            PointCloud(pts), [(box, "Car")], {"Car": [box]}, _specs(), HALF
        )
        (r,) = results
        assert r.score == 1.0 and r.adjusted_score == 1.0
        assert r.legacy_label is SampleLabel.POSITIVE
        assert r.pass_label is SampleLabel.POSITIVE
        assert r.best_gt == 0

    def test_four_case_scene(self, four_case_scene):
        cloud, gts, anchors, cases = four_case_scene
        results = assign_scene(
            cloud, gts, anchors, _specs(), HALF, record_point_iou=True
        )
        assert len(results) == 4
        for r, (name, s, ip, legacy, pass_, adjusted) in zip(results, cases):
            assert r.legacy_label.value == legacy, name
            assert r.pass_label.value == pass_, name
            assert r.score == pytest.approx(s, abs=1e-9), name
            assert r.adjusted_score == pytest.approx(adjusted, abs=1e-9), name
            assert r.iou_point == pytest.approx(ip, abs=1e-12), name
            assert r.best_gt == results.index(r)

    def test_four_case_scene_matches_reference(self, four_case_scene):
        cloud, gts, anchors, _ = four_case_scene
        got = assign_scene(cloud, gts, anchors, _specs(), HALF)
        ref = reference_assign(cloud, gts, anchors, _specs(), HALF)
        for g, r in zip(got, ref):
            assert g.legacy_label is r.legacy_label
            assert g.pass_label is r.pass_label
            assert g.best_gt == r.best_gt
            assert g.score == pytest.approx(r.score, abs=1e-9)
            assert g.adjusted_score == pytest.approx(r.adjusted_score, abs=1e-9)

    def test_unknown_class_rejected(self):
        cloud = PointCloud(np.zeros((0, 3)))
        with pytest.raises(ValueError, match="Tram"):
            assign_scene(cloud, [(Box3D(0, 0, 0, 1, 1, 1, 0), "Tram")], {}, _specs(), HALF)
        with pytest.raises(ValueError, match="Tram"):
            assign_scene(cloud, [], {"Tram": []}, _specs(), HALF)

    def test_anchor_indices_run_across_classes(self):
        cloud = PointCloud(np.zeros((0, 3)))
        anchors = {
            "Car": [Box3D(0, 0, -1, 3.9, 1.6, 1.56, 0.0)] * 3,
            "Pedestrian": [Box3D(5, 5, -0.6, 0.8, 0.6, 1.73, 0.0)] * 2,
        }
        results = assign_scene(cloud, [], anchors, _specs(), HALF)
        assert [r.anchor_index for r in results] == [0, 1, 2, 3, 4]
        assert [r.class_name for r in results] == ["Car"] * 3 + ["Pedestrian"] * 2


def _random_case(seed, n_gts=6, n_anchors_per_gt=6, n_points=900, k=5.0,
                 alpha=0.5, policy=EmptyUnionPolicy.ZERO):
    specs = _specs()
    rng = np.random.default_rng(seed)
    scene = make_scene(seed, specs, n_gts=n_gts, n_points=n_points,
                       x_range=(0.0, 40.0), y_range=(-20.0, 20.0))
    anchors = jittered_anchors(rng, scene.gts, specs, per_gt=n_anchors_per_gt,
                               extra_random=4, x_range=(0.0, 40.0), y_range=(-20.0, 20.0))
    params = SelectionParams(k=k, alpha=alpha, beta=1.0 - alpha, empty_union_policy=policy)
    return scene, anchors, specs, params


class TestEngineAgainstReference:
    def _compare(self, scene, anchors, specs, params, point_assist=True):
        index = build_index(scene.cloud, 1.0)
        got = assign_scene(scene.cloud, scene.gts, anchors, specs, params,
                           index=index, point_assist=point_assist)
        ref = reference_assign(scene.cloud, scene.gts, anchors, specs, params,
                               point_assist=point_assist)
        assert len(got) == len(ref)
        for g, r in zip(got, ref):
            ctx = f"anchor {g.anchor_index} ({g.class_name})"
            assert g.legacy_label is r.legacy_label, ctx
            assert g.pass_label is r.pass_label, ctx
            assert g.best_gt == r.best_gt, ctx
            assert g.score == pytest.approx(r.score, abs=1e-9), ctx
            assert g.adjusted_score == pytest.approx(r.adjusted_score, abs=1e-9), ctx
            if g.iou_point is not None and r.iou_point is not None:
                assert g.iou_point == pytest.approx(r.iou_point, abs=1e-12), ctx

    @pytest.mark.parametrize("seed", range(8))
    def test_randomized_scenes(self, seed):
        scene, anchors, specs, params = _random_case(seed, k=float(1.0 + seed))
        self._compare(scene, anchors, specs, params)

    def test_skip_policy(self):
        scene, anchors, specs, params = _random_case(100, policy=EmptyUnionPolicy.SKIP)
        self._compare(scene, anchors, specs, params)

    def test_unbalanced_weights(self):
        scene, anchors, specs, params = _random_case(101, alpha=0.7)
        self._compare(scene, anchors, specs, params)

    def test_legacy_mode(self):
        scene, anchors, specs, params = _random_case(102)
        self._compare(scene, anchors, specs, params, point_assist=False)

    def test_spec_scale_scene(self):
        # Near the documented envelope: 10 gts, ~200 anchors, 2000 points.
        scene, anchors, specs, params = _random_case(
            103, n_gts=10, n_anchors_per_gt=16, n_points=2000
        )
        assert sum(len(a) for a in anchors.values()) >= 160
        self._compare(scene, anchors, specs, params)


class TestSceneProperties:
    def test_no_forbidden_crossings(self):
        for seed in range(30):
            scene, anchors, specs, params = _random_case(seed + 200, k=float(1 + seed % 7))
            index = build_index(scene.cloud, 1.0)
            results = assign_scene(scene.cloud, scene.gts, anchors, specs, params, index=index)
            for r in results:
                assert (r.legacy_label, r.pass_label) != (
                    SampleLabel.NEGATIVE, SampleLabel.POSITIVE)
                assert (r.legacy_label, r.pass_label) != (
                    SampleLabel.POSITIVE, SampleLabel.NEGATIVE)

    def test_degenerate_weights_reproduce_legacy(self):
        for seed in range(10):
            scene, anchors, specs, _ = _random_case(seed + 300)
            params = SelectionParams(k=5.0, alpha=1.0, beta=0.0)
            index = build_index(scene.cloud, 1.0)
            results = assign_scene(scene.cloud, scene.gts, anchors, specs, params, index=index)
            for r in results:
                assert r.pass_label is r.legacy_label
                assert r.adjusted_score == r.score

    def test_gate_transparency_out_of_band(self):
        bounds = compute_bounds(CAR.t_pos, CAR.t_neg, HALF.k)
        seen = 0
        for seed in range(6):
            scene, anchors, specs, params = _random_case(seed + 400)
            index = build_index(scene.cloud, 1.0)
            results = assign_scene(scene.cloud, scene.gts, anchors, specs, params, index=index)
            for r in results:
                if r.class_name != "Car":
                    continue
                if not bounds.lower <= r.score <= bounds.upper:
                    seen += 1
                    assert r.adjusted_score == r.score  # bit-exact
                    assert r.pass_label is r.legacy_label
        assert seen > 50

    def test_force_match_promotes_best_anchor(self):
        # One gt whose only anchor sits below the positive threshold.
        gt = Box3D(0, 0, 0, 4, 2, 2, 0.0)
        anchor = Box3D(1.8, 0.6, 0, 4, 2, 2, 0.0)
        pts = np.array([[0.5, 0.0, 0.0], [1.0, 0.2, 0.0]])
        specs = {"Car": CAR}
        plain = assign_scene(PointCloud(pts), [(gt, "Car")], {"Car": [anchor]},
                             specs, HALF)
        forced = assign_scene(PointCloud(pts), [(gt, "Car")], {"Car": [anchor]},
                              specs, HALF, force_match=True)
        assert plain[0].legacy_label is not SampleLabel.POSITIVE
        assert forced[0].legacy_label is SampleLabel.POSITIVE
        assert forced[0].pass_label is SampleLabel.POSITIVE
        assert forced[0].best_gt == 0

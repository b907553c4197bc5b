"""Unit tests for object matching, scene metrics and reports"""
import json
import math
import sys
import tempfile
import unittest
from itertools import permutations
from pathlib import Path

import numpy as np
import pandas as pd

# Add repository root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.datagen import CheckerboardLayout, CoGenTCondition, generate_task
from src.evalkit import (
    REPORT_COLUMNS,
    assign_costs,
    attribute_metrics,
    chamfer_points,
    chamfer_scene,
    cogent_violations,
    count_error,
    evaluate_scenes,
    match_objects,
    memorization_ratio,
    pose_metrics,
    position_strings,
    region_rmse,
    three_decimal_domain,
    write_report,
)
from src.rotkit import axis_angle_to_matrix
from src.scene import ObjectRecord, SceneProgram, clevr_catalog, scene6dof_catalog
from src.utils.errors import EmptyInput, EmptyScene, LengthMismatch


def brute_force_cost(cost: np.ndarray) -> float:
    m, n = cost.shape
    if m <= n:
        return min(sum(cost[i, cols[i]] for i in range(m)) for cols in permutations(range(n), m))
    return min(sum(cost[rows[j], j] for j in range(n)) for rows in permutations(range(m), n))


def dot(x: float, y: float) -> ObjectRecord:
    return ObjectRecord('dot', 'red', (x, y, 0.0))


def clevr_object(shape, color, location, size='small', material='rubber', rotation=None):
    obj = ObjectRecord(shape, color, location, size=size, material=material)
    return obj.with_pose(rotation=rotation) if rotation is not None else obj


class TestMatching(unittest.TestCase):
    """Linear-sum assignment"""

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            cost = rng.uniform(0.0, 10.0, size=(m, n))
            assignment = assign_costs(cost)
            self.assertEqual(len(assignment), min(m, n))
            self.assertAlmostEqual(assignment.total_cost, brute_force_cost(cost), places=9)

    def test_pairs_form_partial_bijection(self):
        cost = np.random.default_rng(1).uniform(size=(3, 5))
        assignment = assign_costs(cost)
        rows = [r for r, _ in assignment.pairs]
        cols = [c for _, c in assignment.pairs]
        self.assertEqual(rows, sorted(rows))
        self.assertEqual(len(set(cols)), 3)
        self.assertEqual(sorted(cols + assignment.unmatched_gt), list(range(5)))
        self.assertEqual(assignment.unmatched_pred, [])

    def test_empty_sides(self):
        assignment = assign_costs(np.zeros((0, 4)))
        self.assertEqual(assignment.pairs, [])
        self.assertEqual(assignment.unmatched_gt, [0, 1, 2, 3])
        assignment = match_objects(SceneProgram((dot(0.1, 0.1),)), SceneProgram.empty())
        self.assertEqual(assignment.unmatched_pred, [0])

    def test_not_a_matrix(self):
        with self.assertRaises(ValueError):
            assign_costs(np.zeros(3))

    def test_matching_ignores_object_order(self):
        gt = SceneProgram((dot(0.1, 0.1), dot(0.9, 0.9)))
        pred = SceneProgram((dot(0.88, 0.9), dot(0.12, 0.1)))
        self.assertEqual(match_objects(pred, gt).pairs, [(0, 1), (1, 0)])


class TestSceneMetrics(unittest.TestCase):
    """Attributes, pose and counts"""

    def setUp(self):
        self.catalog = clevr_catalog()
        self.gt = SceneProgram((
            clevr_object('cube', 'red', (0.0, 0.0, 0.35)),
            clevr_object('sphere', 'blue', (3.0, 0.0, 0.7), size='large', material='metal'),
        ))

    def test_perfect_prediction(self):
        assignment = match_objects(self.gt, self.gt)
        accuracies = attribute_metrics(assignment, self.gt, self.gt, catalog=self.catalog)
        self.assertTrue(all(v == 100.0 for v in accuracies.values()))
        l2, geo = pose_metrics(assignment, self.gt, self.gt)
        self.assertEqual((l2, geo), (0.0, 0.0))

    def test_synonyms_count_as_correct(self):
        pred = SceneProgram((
            clevr_object('block', 'red', (0.0, 0.0, 0.35), size='tiny'),
            clevr_object('ball', 'blue', (3.0, 0.0, 0.7), size='big', material='shiny'),
        ))
        accuracies = attribute_metrics(match_objects(pred, self.gt), pred, self.gt, catalog=self.catalog)
        self.assertEqual(accuracies['shape'], 100.0)
        self.assertEqual(accuracies['size'], 100.0)
        self.assertEqual(accuracies['material'], 100.0)

    def test_wrong_color_on_one_of_two(self):
        pred = SceneProgram((
            clevr_object('cube', 'green', (0.1, 0.0, 0.35)),
            clevr_object('sphere', 'blue', (3.0, 0.1, 0.7), size='large', material='metal'),
        ))
        assignment = match_objects(pred, self.gt)
        accuracies = attribute_metrics(assignment, pred, self.gt, catalog=self.catalog)
        self.assertEqual(accuracies['color'], 50.0)
        l2, _ = pose_metrics(assignment, pred, self.gt)
        self.assertAlmostEqual(l2, 0.1)

    def test_unmatched_objects_leave_accuracy_alone(self):
        pred = SceneProgram((clevr_object('cube', 'red', (0.0, 0.0, 0.35)),))
        accuracies = attribute_metrics(match_objects(pred, self.gt), pred, self.gt, catalog=self.catalog)
        self.assertEqual(accuracies['color'], 100.0)
        empty = attribute_metrics(match_objects(SceneProgram.empty(), self.gt), SceneProgram.empty(), self.gt)
        self.assertTrue(math.isnan(empty['color']))

    def test_geodesic_of_matched_pairs(self):
        turned = axis_angle_to_matrix([0.0, 0.0, 1.0], math.radians(30.0))
        pred = SceneProgram((
            clevr_object('cube', 'red', (0.0, 0.0, 0.35), rotation=turned),
            clevr_object('sphere', 'blue', (3.0, 0.0, 0.7), size='large', material='metal'),
        ))
        _, geo = pose_metrics(match_objects(pred, self.gt), pred, self.gt)
        self.assertAlmostEqual(geo, 15.0, places=9)
        _, skipped = pose_metrics(match_objects(pred, self.gt), pred, self.gt, with_rotation=False)
        self.assertTrue(math.isnan(skipped))

    def test_count_error_with_deletions(self):
        gts = [self.gt, self.gt, self.gt]
        for k in (0, 1, 2):
            preds = [self.gt.without(range(k)), self.gt, self.gt]
            self.assertAlmostEqual(count_error(preds, gts), k / 3.0)
        with self.assertRaises(LengthMismatch):
            count_error([self.gt], gts)
        self.assertEqual(count_error([], []), 0.0)

    def test_category_accuracy_on_furniture(self):
        catalog = scene6dof_catalog()
        gt = SceneProgram((ObjectRecord('chairs_0001', 'red', (0.0, 0.0, 0.4)),))
        pred = SceneProgram((ObjectRecord('chairs_0002', 'red', (0.0, 0.0, 0.4)),))
        accuracies = attribute_metrics(match_objects(pred, gt), pred, gt, ('shape', 'category'), catalog)
        self.assertEqual(accuracies, {'shape': 0.0, 'category': 100.0})


class TestChamfer(unittest.TestCase):
    """Symmetric chamfer distance"""

    def test_single_points_at_unit_distance(self):
        self.assertAlmostEqual(chamfer_points([[0.0, 0.0, 0.0]], [[1.0, 0.0, 0.0]]), 2.0)

    def test_symmetric_and_zero_on_identity(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=(300, 3)), rng.normal(size=(200, 3))
        self.assertAlmostEqual(chamfer_points(a, b), chamfer_points(b, a), places=12)
        self.assertEqual(chamfer_points(a, a), 0.0)

    def test_chunked_matches_direct(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=(5000, 3)), rng.normal(size=(50, 3))
        direct = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
        expected = direct.min(axis=1).mean() + direct.min(axis=0).mean()
        self.assertAlmostEqual(chamfer_points(a, b), expected, places=9)

    def test_identical_scenes_score_zero(self):
        scene = SceneProgram((ObjectRecord('cube', 'red', (0, 0, 0)), ObjectRecord('sphere', 'red', (2, 0, 0))))
        self.assertEqual(chamfer_scene(scene, scene, points_per_object=128), 0.0)
        shifted = SceneProgram((ObjectRecord('cube', 'red', (0, 0, 0)), ObjectRecord('sphere', 'red', (2.5, 0, 0))))
        self.assertGreater(chamfer_scene(scene, shifted, points_per_object=128), 0.0)

    def test_empty_scene(self):
        scene = SceneProgram((ObjectRecord('cube', 'red', (0, 0, 0)),))
        with self.assertRaises(EmptyScene):
            chamfer_scene(scene, SceneProgram.empty())
        with self.assertRaises(EmptyScene):
            chamfer_points(np.zeros((0, 3)), np.zeros((4, 3)))


class TestMemorization(unittest.TestCase):
    """Train-value memorization ratio"""

    def test_three_decimal_domain(self):
        self.assertEqual(three_decimal_domain(0.0, 1.0), 1001)
        self.assertEqual(three_decimal_domain(-0.0005, 0.0015), 2)
        with self.assertRaises(ValueError):
            three_decimal_domain(1.0, 0.0)

    def test_ratio(self):
        train = {'0.100', '0.200'}
        predicted = ['0.100', '0.100', '0.500', '0.600']
        # (2 / 2) / (2 / (1001 - 2))
        self.assertAlmostEqual(memorization_ratio(predicted, train, 1001), 999 / 2.0)

    def test_all_hits_in_train_is_infinite(self):
        self.assertEqual(memorization_ratio(['0.100'], {'0.100'}, 1001), math.inf)

    def test_uniform_sampler_scores_one(self):
        rng = np.random.default_rng(2)
        domain = [f"{k / 1000:.3f}" for k in range(1001)]
        train = set(rng.choice(domain, size=200, replace=False))
        predicted = rng.choice(domain, size=50000)
        self.assertAlmostEqual(memorization_ratio(predicted, train, len(domain)), 1.0, delta=0.05)

    def test_skewed_sampler_recovers_its_rate_ratio(self):
        rng = np.random.default_rng(3)
        domain = [f"{k / 1000:.3f}" for k in range(1001)]
        train = set(rng.choice(domain, size=200, replace=False))
        # every train value is drawn four times as often as any other value
        weights = np.array([4.0 if value in train else 1.0 for value in domain])
        predicted = rng.choice(domain, size=50000, p=weights / weights.sum())
        self.assertAlmostEqual(memorization_ratio(predicted, train, len(domain)), 4.0, delta=0.2)

    def test_empty_inputs(self):
        with self.assertRaises(EmptyInput):
            memorization_ratio([], {'0.100'}, 1001)
        with self.assertRaises(EmptyInput):
            memorization_ratio(['0.100'], set(), 1001)
        with self.assertRaises(EmptyInput):
            memorization_ratio(['0.100'], {'0.100', '0.200'}, 2)

    def test_position_strings(self):
        scenes = [SceneProgram((dot(0.1234, 0.5),)), SceneProgram((dot(0.0, 1.0),))]
        self.assertEqual(position_strings(scenes), ['(0.123, 0.500)', '(0.000, 1.000)'])


class TestCoGenTAndRegions(unittest.TestCase):

    def test_violations(self):
        condition = CoGenTCondition.named('A', clevr_catalog().names('color'))
        scenes = [SceneProgram((clevr_object('cube', 'red', (0, 0, 0.35)),
                                clevr_object('cube', 'gray', (2, 0, 0.35))))]
        violations = cogent_violations(scenes, condition)
        self.assertEqual([(v.scene_index, v.object_index, v.color) for v in violations], [(0, 0, 'red')])

    def test_generated_condition_a_has_no_violations(self):
        condition = CoGenTCondition.named('A', clevr_catalog().names('color'))
        scenes = [r.scene for r in generate_task('cogent', 10, seed=0, variant='A')]
        self.assertEqual(cogent_violations(scenes, condition), [])

    def test_region_rmse(self):
        layout = CheckerboardLayout(8, 'even')
        gts = [SceneProgram((dot(0.05, 0.05),)), SceneProgram((dot(0.2, 0.05),))]
        preds = [SceneProgram((dot(0.08, 0.09),)), SceneProgram((dot(0.2, 0.05),))]
        assignments = [match_objects(p, g) for p, g in zip(preds, gts)]
        rmse = region_rmse(preds, gts, assignments, layout)
        self.assertAlmostEqual(rmse['id'], 0.05)
        self.assertAlmostEqual(rmse['ood'], 0.0)
        with self.assertRaises(LengthMismatch):
            region_rmse(preds, gts[:1], assignments, layout)


class TestEvaluateScenes(unittest.TestCase):
    """Aggregate reports"""

    def test_malformed_predictions_count_as_empty(self):
        gts = [r.scene for r in generate_task('dot2d', 4, seed=1)]
        preds = [gts[0], None, gts[2], gts[3]]
        evaluation = evaluate_scenes(preds, gts, attributes=(), with_rotation=False,
                                     layout=CheckerboardLayout())
        report = evaluation.report
        self.assertEqual(report.malformed_rate, 0.25)
        self.assertEqual(report.count, 0.25)
        self.assertEqual(report.l2, 0.0)
        self.assertEqual(report.rmse_id, 0.0)
        self.assertTrue(math.isnan(report.rmse_ood))
        self.assertEqual(list(evaluation.per_scene['malformed']), [False, True, False, False])
        self.assertTrue(math.isnan(evaluation.per_scene.loc[1, 'pred_x']))

    def test_chamfer_penalty_for_empty_predictions(self):
        gts = [r.scene for r in generate_task('cogent', 2, seed=3)]
        evaluation = evaluate_scenes([gts[0], None], gts, catalog=clevr_catalog(), with_chamfer=True,
                                     points_per_object=64)
        self.assertEqual(evaluation.per_scene.loc[0, 'chamfer'], 0.0)
        self.assertEqual(evaluation.per_scene.loc[1, 'chamfer'], math.inf)
        self.assertEqual(evaluation.report.chamfer, 0.0)

        penalized = evaluate_scenes([gts[0], None], gts, catalog=clevr_catalog(), with_chamfer=True,
                                    points_per_object=64, chamfer_empty_penalty=10.0)
        self.assertEqual(penalized.report.chamfer, 5.0)

    def test_empty_parsed_scene_counts_as_malformed_under_chamfer(self):
        gts = [r.scene for r in generate_task('cogent', 2, seed=3)]
        evaluation = evaluate_scenes([gts[0], SceneProgram.empty()], gts, catalog=clevr_catalog(),
                                     with_chamfer=True, points_per_object=64)
        self.assertEqual(evaluation.report.malformed_rate, 0.5)
        self.assertEqual(list(evaluation.per_scene['malformed']), [False, True])
        without_chamfer = evaluate_scenes([gts[0], SceneProgram.empty()], gts, catalog=clevr_catalog())
        self.assertEqual(without_chamfer.report.malformed_rate, 0.0)

    def test_l2_grows_with_location_noise(self):
        gts = [r.scene for r in generate_task('dot2d', 50, seed=6)]
        noise = np.random.default_rng(0).normal(size=(len(gts), 3)) * np.array([1.0, 1.0, 0.0])
        previous = -1.0
        for sigma in (0.0, 0.001, 0.01, 0.05, 0.1, 0.3):
            preds = [
                SceneProgram((gt.objects[0].with_pose(location=np.asarray(gt.objects[0].location) + sigma * z),))
                for gt, z in zip(gts, noise)
            ]
            l2 = evaluate_scenes(preds, gts, attributes=(), with_rotation=False).report.l2
            self.assertGreaterEqual(l2, previous, sigma)
            previous = l2
        self.assertGreater(previous, 0.0)

    def test_length_mismatch(self):
        with self.assertRaises(LengthMismatch):
            evaluate_scenes([SceneProgram.empty()], [])

    def test_report_files(self):
        gts = [r.scene for r in generate_task('cogent', 3, seed=4)]
        report = evaluate_scenes(gts, gts, catalog=clevr_catalog()).report
        report.memorization_ratio = math.inf
        with tempfile.TemporaryDirectory() as tmp:
            json_path, csv_path = write_report(report, Path(tmp))
            payload = json.loads(json_path.read_text(encoding='utf-8'))
            self.assertEqual(payload['n_scenes'], 3)
            self.assertEqual(payload['color_acc'], 100.0)
            self.assertIsNone(payload['chamfer'])
            self.assertIsNone(payload['memorization_ratio'])
            self.assertIsNone(payload['rmse_id'])
            frame = pd.read_csv(csv_path)
            self.assertEqual(list(frame.columns), REPORT_COLUMNS)
            self.assertEqual(len(frame), 1)


if __name__ == '__main__':
    unittest.main()

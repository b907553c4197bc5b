"""Per-scene metrics: attributes, pose, counts, chamfer distance and value memorization"""
from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from typing import Collection, Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..datagen.layouts import CheckerboardLayout, CoGenTCondition, in_checkerboard
from ..dsl import format_number
from ..rotkit import geodesic_deg
from ..scene.catalog import AttributeCatalog, shape_category
from ..scene.model import ObjectRecord, SceneProgram
from ..scene.sampling import sample_scene_points
from ..utils.errors import DataError, EmptyInput, EmptyScene, LengthMismatch
from .matching import Assignment


logger = logging.getLogger(__name__)

ATTRIBUTES = ('size', 'color', 'material', 'shape', 'category')
CHAMFER_CHUNK = 2048


def _attribute_value(obj: ObjectRecord, attribute: str, catalog: Optional[AttributeCatalog]) -> Optional[str]:
    if attribute == 'category':
        return shape_category(obj.shape)
    value = getattr(obj, attribute)
    if value is None or catalog is None:
        return value
    try:
        return catalog.resolve(value, attribute).name
    except DataError:
        return value


def attribute_hits(assignment: Assignment, pred: SceneProgram, gt: SceneProgram,
                   attributes: Sequence[str] = ATTRIBUTES,
                   catalog: Optional[AttributeCatalog] = None) -> Dict[str, tuple[int, int]]:
    """(correct, compared) per attribute over matched pairs"""
    hits = {}
    for attribute in attributes:
        correct = 0
        for p, g in assignment.pairs:
            correct += (_attribute_value(pred.objects[p], attribute, catalog)
                        == _attribute_value(gt.objects[g], attribute, catalog))
        hits[attribute] = (correct, len(assignment.pairs))
    return hits


def attribute_metrics(assignment: Assignment, pred: SceneProgram, gt: SceneProgram,
                      attributes: Sequence[str] = ATTRIBUTES,
                      catalog: Optional[AttributeCatalog] = None) -> Dict[str, float]:
    """
    Percentage of matched pairs with equal canonical values, per attribute

    Synonyms are resolved through the catalog when one is given; unmatched
    objects do not enter the ratio. NaN when nothing is matched.
    """
    accuracies = {}
    for attribute, (correct, compared) in attribute_hits(assignment, pred, gt, attributes, catalog).items():
        accuracies[attribute] = 100.0 * correct / compared if compared else math.nan
    return accuracies


def count_error(preds: Sequence[SceneProgram], gts: Sequence[SceneProgram]) -> float:
    """
    Mean absolute difference of object counts

    Raises:
        LengthMismatch: If the two lists differ in length
    """
    if len(preds) != len(gts):
        raise LengthMismatch(f"{len(preds)} predictions for {len(gts)} ground-truth scenes")
    if not gts:
        return 0.0
    return float(np.mean([abs(len(p) - len(g)) for p, g in zip(preds, gts)]))


def pair_distances(assignment: Assignment, pred: SceneProgram, gt: SceneProgram,
                   with_rotation: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Location distance and geodesic degrees for every matched pair"""
    l2 = np.array([
        np.linalg.norm(np.subtract(pred.objects[p].location, gt.objects[g].location))
        for p, g in assignment.pairs
    ], dtype=np.float64)
    if not with_rotation:
        return l2, np.zeros(0)
    geo = np.array([
        geodesic_deg(pred.objects[p].rotation, gt.objects[g].rotation)
        for p, g in assignment.pairs
    ], dtype=np.float64)
    return l2, geo


def pose_metrics(assignment: Assignment, pred: SceneProgram, gt: SceneProgram,
                 with_rotation: bool = True) -> tuple[float, float]:
    """Mean matched location distance and mean geodesic degrees (NaN when skipped or unmatched)"""
    l2, geo = pair_distances(assignment, pred, gt, with_rotation)
    mean_l2 = float(l2.mean()) if l2.size else math.nan
    mean_geo = float(geo.mean()) if geo.size else math.nan
    return mean_l2, mean_geo


def _nearest_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(len(a))
    for start in range(0, len(a), CHAMFER_CHUNK):
        out[start:start + CHAMFER_CHUNK] = cdist(a[start:start + CHAMFER_CHUNK], b, 'sqeuclidean').min(axis=1)
    return out


def chamfer_points(points_a: np.ndarray, points_b: np.ndarray) -> float:
    """
    Mean squared nearest distance from A to B plus the same from B to A

    Nearest neighbours are exact (brute force in chunks).

    Raises:
        EmptyScene: If either cloud is empty
    """
    points_a = np.asarray(points_a, dtype=np.float64).reshape(-1, 3)
    points_b = np.asarray(points_b, dtype=np.float64).reshape(-1, 3)
    if len(points_a) == 0 or len(points_b) == 0:
        raise EmptyScene("Chamfer distance needs two nonempty point clouds")
    return float(_nearest_sq(points_a, points_b).mean() + _nearest_sq(points_b, points_a).mean())


def chamfer_scene(pred: SceneProgram, gt: SceneProgram, points_per_object: int = 1024,
                  seed: int = 0, catalog: Optional[AttributeCatalog] = None) -> float:
    """
    Chamfer distance between surface samples of two scenes

    Both scenes are sampled with the same seed, so identical scenes score 0.

    Raises:
        EmptyScene: If either scene has no objects
        UnknownShape: If a shape has neither a primitive nor a proxy extent
    """
    if len(pred) == 0 or len(gt) == 0:
        raise EmptyScene(f"Cannot compare a scene of {len(pred)} objects with one of {len(gt)}")
    return chamfer_points(
        sample_scene_points(pred, points_per_object, seed, catalog),
        sample_scene_points(gt, points_per_object, seed, catalog),
    )


def three_decimal_domain(lo: float, hi: float) -> int:
    """Number of distinct 3-decimal values in [lo, hi]"""
    if hi < lo:
        raise ValueError(f"Empty interval [{lo}, {hi}]")
    first = math.ceil(round(lo * 1000.0, 6))
    last = math.floor(round(hi * 1000.0, 6))
    return max(0, last - first + 1)


def memorization_ratio(predicted_values: Iterable[str], train_values: Collection[str],
                       value_domain: int) -> float:
    """
    How much more often predictions land on a value seen in training

    r = (hits inside the train set / |train set|) divided by
        (hits outside / (value_domain - |train set|))

    Returns:
        The ratio; +inf when every prediction is a training value

    Raises:
        EmptyInput: With no predictions, an empty train set, or a domain no
            larger than the train set
    """
    predicted = list(predicted_values)
    train = set(train_values)
    if not predicted:
        raise EmptyInput("No predicted values to score")
    if not train:
        raise EmptyInput("Train value set is empty")
    if value_domain <= len(train):
        raise EmptyInput(f"Value domain {value_domain} must exceed the {len(train)} train values")

    hits_in = sum(value in train for value in predicted)
    hits_out = len(predicted) - hits_in
    if hits_out == 0:
        return math.inf
    ratio = (hits_in / len(train)) / (hits_out / (value_domain - len(train)))
    logger.debug(f"Memorization: {hits_in} in-train / {hits_out} outside hits, ratio {ratio:.3f}")
    return ratio


def position_strings(scenes: Iterable[SceneProgram]) -> List[str]:
    """Joint "(x, y)" 3-decimal strings of every object, the value unit of the planar task"""
    return [
        f"({format_number(obj.location[0])}, {format_number(obj.location[1])})"
        for scene in scenes for obj in scene.objects
    ]


@dataclass(frozen=True)
class Violation:
    scene_index: int
    object_index: int
    shape: str
    color: str


def cogent_violations(scenes: Sequence[SceneProgram], condition: CoGenTCondition) -> List[Violation]:
    """Every object whose shape and color combination the condition forbids"""
    found = []
    for s, scene in enumerate(scenes):
        for o, obj in enumerate(scene.objects):
            if not condition.allows(obj.shape, obj.color):
                found.append(Violation(s, o, obj.shape, obj.color))
    if found:
        logger.warning(f"{len(found)} objects violate CoGenT condition {condition.id}")
    return found


def region_errors(preds: Sequence[SceneProgram], gts: Sequence[SceneProgram],
                  assignments: Sequence[Assignment], layout: CheckerboardLayout) -> Dict[str, List[float]]:
    """Squared planar position errors of matched pairs, grouped by the ground truth's checkerboard region"""
    errors: Dict[str, List[float]] = {'id': [], 'ood': []}
    for pred, gt, assignment in zip(preds, gts, assignments):
        for p, g in assignment.pairs:
            truth = gt.objects[g].location
            diff = np.subtract(pred.objects[p].location[:2], truth[:2])
            region = 'id' if in_checkerboard(truth[:2], layout) else 'ood'
            errors[region].append(float(diff @ diff))
    return errors


def region_rmse(preds: Sequence[SceneProgram], gts: Sequence[SceneProgram],
                assignments: Sequence[Assignment], layout: CheckerboardLayout) -> Dict[str, float]:
    """Position RMSE for ground truth inside (id) and outside (ood) the checkerboard's training cells"""
    if not (len(preds) == len(gts) == len(assignments)):
        raise LengthMismatch(f"{len(preds)} predictions, {len(gts)} ground truths, {len(assignments)} assignments")
    errors = region_errors(preds, gts, assignments, layout)
    return {region: math.sqrt(float(np.mean(values))) if values else math.nan
            for region, values in errors.items()}

"""Scene-list evaluation and report files"""
from __future__ import annotations

from dataclasses import dataclass, field
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..datagen.layouts import CheckerboardLayout
from ..scene.catalog import AttributeCatalog
from ..scene.model import SceneProgram
from ..utils.errors import EmptyScene, LengthMismatch
from .matching import Assignment, match_objects
from .metrics import (
    ATTRIBUTES,
    attribute_hits,
    chamfer_scene,
    count_error,
    pair_distances,
    region_errors,
)


logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    'l2', 'geodesic_deg', 'count', 'size_acc', 'color_acc', 'material_acc', 'shape_acc',
    'category_acc', 'chamfer', 'malformed_rate', 'rmse_id', 'rmse_ood',
]


def _mean(values: Sequence[float]) -> float:
    return float(np.mean(values)) if len(values) else math.nan


def _json_number(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


@dataclass
class MetricReport:
    """Aggregate metrics; means run over matched pairs, accuracies are percentages"""
    n_scenes: int = 0
    l2: float = math.nan
    geodesic_deg: float = math.nan
    count: float = 0.0
    accuracies: Dict[str, float] = field(default_factory=dict)
    chamfer: float = math.nan
    malformed_rate: float = 0.0
    rmse_id: float = math.nan
    rmse_ood: float = math.nan
    memorization_ratio: Optional[float] = None

    def to_row(self) -> Dict[str, float]:
        row = {
            'l2': self.l2,
            'geodesic_deg': self.geodesic_deg,
            'count': self.count,
            'chamfer': self.chamfer,
            'malformed_rate': self.malformed_rate,
            'rmse_id': self.rmse_id,
            'rmse_ood': self.rmse_ood,
        }
        for attribute in ATTRIBUTES:
            row[f'{attribute}_acc'] = self.accuracies.get(attribute, math.nan)
        return {column: row[column] for column in REPORT_COLUMNS}

    def to_dict(self) -> Dict[str, Any]:
        """JSON-safe view; NaN and infinities become null"""
        out = {key: _json_number(value) for key, value in self.to_row().items()}
        out['n_scenes'] = self.n_scenes
        out['memorization_ratio'] = (_json_number(self.memorization_ratio)
                                     if self.memorization_ratio is not None else None)
        return out


@dataclass
class Evaluation:
    report: MetricReport
    per_scene: pd.DataFrame
    assignments: List[Assignment]


def evaluate_scenes(preds: Sequence[Optional[SceneProgram]], gts: Sequence[SceneProgram],
                    catalog: Optional[AttributeCatalog] = None,
                    attributes: Sequence[str] = ATTRIBUTES,
                    with_rotation: bool = True,
                    with_chamfer: bool = False,
                    points_per_object: int = 1024,
                    seed: int = 0,
                    chamfer_empty_penalty: float = math.inf,
                    layout: Optional[CheckerboardLayout] = None) -> Evaluation:
    """
    Score predictions against ground truth, scene by scene in index order

    A None prediction is a malformed generation: it is scored as an empty scene
    and counted in malformed_rate. With chamfer on, a scene where either side is
    empty gets chamfer_empty_penalty and also counts as malformed.

    Args:
        preds: Predicted scenes (None where generation failed)
        gts: Ground-truth scenes
        catalog: Catalog used to resolve attribute synonyms
        attributes: Attributes to score
        with_rotation: Compute geodesic degrees
        with_chamfer: Compute scene chamfer distances
        points_per_object: Surface samples per object for chamfer
        seed: Sampling seed for chamfer
        chamfer_empty_penalty: Per-scene chamfer recorded when a side is empty
        layout: Checkerboard layout for ID/OOD position RMSE

    Returns:
        Evaluation with the aggregate report, per-scene rows and assignments

    Raises:
        LengthMismatch: If the two lists differ in length
    """
    if len(preds) != len(gts):
        raise LengthMismatch(f"{len(preds)} predictions for {len(gts)} ground-truth scenes")

    scenes = [p if p is not None else SceneProgram.empty() for p in preds]
    malformed = [p is None for p in preds]

    assignments: List[Assignment] = []
    all_l2: List[float] = []
    all_geo: List[float] = []
    hits = {attribute: [0, 0] for attribute in attributes}
    chamfers: List[float] = []
    rows: List[Dict[str, Any]] = []

    for index, (pred, gt) in enumerate(zip(scenes, gts)):
        assignment = match_objects(pred, gt)
        assignments.append(assignment)
        l2, geo = pair_distances(assignment, pred, gt, with_rotation)
        all_l2.extend(l2.tolist())
        all_geo.extend(geo.tolist())
        for attribute, (correct, compared) in attribute_hits(assignment, pred, gt, attributes, catalog).items():
            hits[attribute][0] += correct
            hits[attribute][1] += compared

        row: Dict[str, Any] = {
            'index': index,
            'malformed': malformed[index],
            'n_pred': len(pred),
            'n_gt': len(gt),
            'matched': len(assignment),
            'l2': _mean(l2),
            'geodesic_deg': _mean(geo),
        }
        if with_chamfer:
            try:
                row['chamfer'] = chamfer_scene(pred, gt, points_per_object, seed, catalog)
                chamfers.append(row['chamfer'])
            except EmptyScene:
                # one side is empty: penalized and counted as malformed
                row['chamfer'] = chamfer_empty_penalty
                malformed[index] = row['malformed'] = True
                if math.isfinite(chamfer_empty_penalty):
                    chamfers.append(chamfer_empty_penalty)
        if layout is not None:
            gt_xy = gt.objects[0].location[:2] if len(gt) else (math.nan, math.nan)
            pred_xy = pred.objects[0].location[:2] if len(pred) else (math.nan, math.nan)
            row.update({'gt_x': gt_xy[0], 'gt_y': gt_xy[1], 'pred_x': pred_xy[0], 'pred_y': pred_xy[1]})
        rows.append(row)

    report = MetricReport(
        n_scenes=len(gts),
        l2=_mean(all_l2),
        geodesic_deg=_mean(all_geo),
        count=count_error(scenes, gts),
        accuracies={a: 100.0 * c / n if n else math.nan for a, (c, n) in hits.items()},
        chamfer=_mean(chamfers),
        malformed_rate=float(np.mean(malformed)) if malformed else 0.0,
    )
    if layout is not None:
        errors = region_errors(scenes, gts, assignments, layout)
        report.rmse_id = math.sqrt(_mean(errors['id'])) if errors['id'] else math.nan
        report.rmse_ood = math.sqrt(_mean(errors['ood'])) if errors['ood'] else math.nan

    if any(malformed):
        logger.warning(f"{sum(malformed)}/{len(gts)} predictions were malformed and scored as empty scenes")
    logger.info(
        f"Evaluated {len(gts)} scenes: l2 {report.l2:.4f}, count {report.count:.3f}, "
        f"malformed {report.malformed_rate:.1%}"
    )
    return Evaluation(report=report, per_scene=pd.DataFrame(rows), assignments=assignments)


def write_report(report: MetricReport, out_dir: Path, stem: str = 'report') -> tuple[Path, Path]:
    """Write <stem>.json and a one-row <stem>.csv"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f'{stem}.json'
    csv_path = out_dir / f'{stem}.csv'
    json_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + '\n', encoding='utf-8')
    pd.DataFrame([report.to_row()], columns=REPORT_COLUMNS).to_csv(
        csv_path, index=False, float_format='%.8g', lineterminator='\n'
    )
    logger.info(f"Report written: {json_path}, {csv_path}")
    return json_path, csv_path


def write_per_scene(per_scene: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    per_scene.to_csv(path, index=False, float_format='%.8g', lineterminator='\n')
    return path

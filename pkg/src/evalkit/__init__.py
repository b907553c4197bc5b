"""Scene metrics: object matching, attribute and pose scores, chamfer distance, memorization"""
from .matching import Assignment, assign_costs, match_objects
from .metrics import (
    ATTRIBUTES,
    Violation,
    attribute_metrics,
    chamfer_points,
    chamfer_scene,
    cogent_violations,
    count_error,
    memorization_ratio,
    pose_metrics,
    position_strings,
    region_rmse,
    three_decimal_domain,
)
from .report import (
    REPORT_COLUMNS,
    Evaluation,
    MetricReport,
    evaluate_scenes,
    write_per_scene,
    write_report,
)

__all__ = [
    'ATTRIBUTES', 'Assignment', 'Evaluation', 'MetricReport', 'REPORT_COLUMNS', 'Violation',
    'assign_costs', 'attribute_metrics', 'chamfer_points', 'chamfer_scene', 'cogent_violations',
    'count_error', 'evaluate_scenes', 'match_objects', 'memorization_ratio', 'pose_metrics',
    'position_strings', 'region_rmse', 'three_decimal_domain', 'write_per_scene', 'write_report',
]

"""Optimal pairing of predicted and ground-truth objects"""
from dataclasses import dataclass, field
import logging
from typing import List

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from ..scene.model import SceneProgram


logger = logging.getLogger(__name__)


@dataclass
class Assignment:
    """A partial bijection between prediction and ground-truth object indices"""
    pairs: List[tuple[int, int]] = field(default_factory=list)
    unmatched_pred: List[int] = field(default_factory=list)
    unmatched_gt: List[int] = field(default_factory=list)
    total_cost: float = 0.0

    def __len__(self) -> int:
        return len(self.pairs)


def assign_costs(cost: np.ndarray) -> Assignment:
    """
    Minimum-cost assignment of size min(m, n) for an (m, n) cost matrix

    Rows are predictions and columns ground truth; pairs are sorted by
    prediction index.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValueError(f"Cost matrix must be 2-D, got shape {cost.shape}")
    m, n = cost.shape
    if m == 0 or n == 0:
        return Assignment(unmatched_pred=list(range(m)), unmatched_gt=list(range(n)))

    rows, cols = linear_sum_assignment(cost)
    pairs = sorted((int(r), int(c)) for r, c in zip(rows, cols))
    total = float(sum(cost[r, c] for r, c in pairs))
    matched_rows = {r for r, _ in pairs}
    matched_cols = {c for _, c in pairs}
    return Assignment(
        pairs=pairs,
        unmatched_pred=[i for i in range(m) if i not in matched_rows],
        unmatched_gt=[j for j in range(n) if j not in matched_cols],
        total_cost=total,
    )


def location_costs(pred: SceneProgram, gt: SceneProgram) -> np.ndarray:
    """Pairwise Euclidean distances between object locations, shape (|pred|, |gt|)"""
    if len(pred) == 0 or len(gt) == 0:
        return np.zeros((len(pred), len(gt)))
    return cdist(pred.locations(), gt.locations(), metric='euclidean')


def match_objects(pred: SceneProgram, gt: SceneProgram) -> Assignment:
    """Pair objects by linear-sum assignment on location distances; either side may be empty"""
    assignment = assign_costs(location_costs(pred, gt))
    if assignment.unmatched_pred or assignment.unmatched_gt:
        logger.debug(
            f"Matched {len(assignment)} objects; "
            f"{len(assignment.unmatched_pred)} pred / {len(assignment.unmatched_gt)} gt unmatched"
        )
    return assignment

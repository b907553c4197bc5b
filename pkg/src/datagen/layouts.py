"""Sampling regions: the 2D checkerboard, Euler-angle gaps and CoGenT color conditions"""
from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Sequence

import numpy as np

from ..rotkit import wrap_angle
from ..utils.errors import ConfigError, EmptyRegion, OutOfBounds


REGIONS = ('id', 'ood')


@dataclass(frozen=True)
class CheckerboardLayout:
    """Sparse checkerboard over the unit square; cell (i, j) is ID iff (i + j) % 2 matches parity"""
    cells_per_side: int = 8
    id_parity: str = 'even'

    def __post_init__(self):
        if self.cells_per_side < 2:
            raise ValueError(f"cells_per_side must be >= 2, got {self.cells_per_side}")
        if self.id_parity not in ('even', 'odd'):
            raise ValueError(f"id_parity must be 'even' or 'odd', got {self.id_parity}")

    def cell_of(self, p: Sequence[float]) -> tuple[int, int]:
        """Cell indices with half-open intervals; the closing edge 1.0 belongs to the last cell"""
        x, y = float(p[0]), float(p[1])
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise OutOfBounds(f"Point ({x}, {y}) lies outside the unit square")
        last = self.cells_per_side - 1
        return (min(int(math.floor(x * self.cells_per_side)), last),
                min(int(math.floor(y * self.cells_per_side)), last))

    @property
    def parity(self) -> int:
        return 0 if self.id_parity == 'even' else 1


def in_checkerboard(p: Sequence[float], layout: CheckerboardLayout) -> bool:
    i, j = layout.cell_of(p)
    return (i + j) % 2 == layout.parity


@dataclass(frozen=True)
class AngleGapSpec:
    """
    Gaps removed from each Euler component's training range

    gaps[k] lists (center, half_width) pairs for component k. The ID region of a
    component is [-pi, pi) minus its gaps; the OOD region is the union of gaps.
    """
    gaps: tuple[tuple[tuple[float, float], ...], ...]

    def __post_init__(self):
        gaps = tuple(tuple((float(c), float(w)) for c, w in component) for component in self.gaps)
        object.__setattr__(self, 'gaps', gaps)
        for k, component in enumerate(gaps):
            intervals = sorted((c - w, c + w) for c, w in component)
            for low, high in intervals:
                if high <= low:
                    raise ValueError(f"Component {k}: gap half-width must be positive")
                if low < -math.pi or high > math.pi:
                    raise ValueError(f"Component {k}: gap [{low:.4f}, {high:.4f}] leaves [-pi, pi)")
            for (_, prev_high), (low, _) in zip(intervals, intervals[1:]):
                if low < prev_high:
                    raise ValueError(f"Component {k}: gaps overlap")
            if self.measure('id', k) <= 0.0:
                raise EmptyRegion(f"Component {k}: gaps leave no in-distribution range")

    @classmethod
    def uniform(cls, centers: Sequence[float], half_width: float, components: int = 3) -> 'AngleGapSpec':
        """The same gaps on every component"""
        return cls(tuple(tuple((c, half_width) for c in centers) for _ in range(components)))

    def intervals(self, region: str, component: int) -> list[tuple[float, float]]:
        gaps = sorted((c - w, c + w) for c, w in self.gaps[component])
        if region == 'ood':
            return gaps
        if region != 'id':
            raise ValueError(f"Unknown region: {region}")
        out = []
        cursor = -math.pi
        for low, high in gaps:
            if low > cursor:
                out.append((cursor, low))
            cursor = max(cursor, high)
        if cursor < math.pi:
            out.append((cursor, math.pi))
        return out

    def measure(self, region: str, component: int) -> float:
        return sum(high - low for low, high in self.intervals(region, component))

    def contains(self, component: int, angle: float) -> bool:
        """True if the (wrapped) angle lies inside one of the component's gaps"""
        angle = wrap_angle(angle)
        return any(c - w <= angle < c + w for c, w in self.gaps[component])

    def sample(self, region: str, component: int, rng: np.random.Generator) -> float:
        """
        Uniform draw from a component's ID range or gap union

        Raises:
            EmptyRegion: If the region has zero measure
        """
        intervals = self.intervals(region, component)
        lengths = np.array([high - low for low, high in intervals])
        if len(intervals) == 0 or lengths.sum() <= 0.0:
            raise EmptyRegion(f"Region '{region}' of component {component} has zero measure")
        pick = int(rng.choice(len(intervals), p=lengths / lengths.sum()))
        low, high = intervals[pick]
        return float(rng.uniform(low, high))

    def sample_angles(self, region: str, rng: np.random.Generator) -> tuple[float, ...]:
        return tuple(self.sample(region, k, rng) for k in range(len(self.gaps)))

    def in_region(self, region: str, angles: Sequence[float]) -> bool:
        """id: no component in any gap; ood: every component inside some gap"""
        inside = [self.contains(k, a) for k, a in enumerate(angles)]
        return all(inside) if region == 'ood' else not any(inside)


CLEVR_COLORS_A_CUBE = ('gray', 'blue', 'brown', 'yellow')
CLEVR_COLORS_A_CYLINDER = ('red', 'green', 'purple', 'cyan')


@dataclass(frozen=True)
class CoGenTCondition:
    id: str
    cube_colors: tuple[str, ...]
    cylinder_colors: tuple[str, ...]
    sphere_colors: tuple[str, ...]

    def colors_for(self, shape: str) -> tuple[str, ...]:
        return {'cube': self.cube_colors, 'cylinder': self.cylinder_colors,
                'sphere': self.sphere_colors}[shape]

    def allows(self, shape: str, color: str) -> bool:
        return color in self.colors_for(shape)

    @classmethod
    def named(cls, condition_id: str, all_colors: Sequence[str]) -> 'CoGenTCondition':
        """Condition A or B; B swaps the cube and cylinder palettes"""
        condition_id = condition_id.upper()
        if condition_id == 'A':
            return cls('A', CLEVR_COLORS_A_CUBE, CLEVR_COLORS_A_CYLINDER, tuple(all_colors))
        if condition_id == 'B':
            return cls('B', CLEVR_COLORS_A_CYLINDER, CLEVR_COLORS_A_CUBE, tuple(all_colors))
        raise ConfigError(f"Unknown CoGenT condition: {condition_id}")

"""Per-task settings shared by generation, tokenization and evaluation"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Dict, Optional

from ..dsl import EmitOptions, ParseOptions
from ..scene.catalog import AttributeCatalog, catalog_for_task
from ..scene.model import CameraRecord
from ..utils.config import DEFAULT_CONFIG, TASKS
from ..utils.errors import ConfigError
from .layouts import AngleGapSpec, CheckerboardLayout


@dataclass(frozen=True)
class TaskPreset:
    task: str
    catalog: AttributeCatalog
    layout: str = 'scene'
    rotation_repr: Optional[str] = None
    apply_synonyms: bool = False
    emit_location: bool = True
    scalar_z_on_cubes_only: bool = True
    default_location: Optional[tuple[float, float, float]] = None
    count_range: tuple[int, int] = (1, 1)
    has_rotation: bool = False
    has_chamfer: bool = False

    def emit_options(self, shuffle_seed: int, ordering: str = 'front_to_back') -> EmitOptions:
        return EmitOptions(
            shuffle_seed=shuffle_seed,
            ordering=ordering,
            rotation_repr=self.rotation_repr,
            scalar_z_on_cubes_only=self.scalar_z_on_cubes_only,
            layout=self.layout,
            emit_location=self.emit_location,
            apply_synonyms=self.apply_synonyms,
        )

    def parse_options(self, camera: Optional[CameraRecord] = None) -> ParseOptions:
        return ParseOptions(
            rotation_repr=self.rotation_repr,
            layout=self.layout,
            default_location=self.default_location,
            camera=camera or CameraRecord.clevr(),
        )

    def with_repr(self, rotation_repr: str) -> 'TaskPreset':
        return replace(self, rotation_repr=rotation_repr)


def task_preset(task: str, config: Optional[Dict[str, Any]] = None) -> TaskPreset:
    """
    Build the preset of a task from the datagen section of the configuration

    Raises:
        ConfigError: If the task id is unknown
    """
    if task not in TASKS:
        raise ConfigError(f"Unknown task '{task}'. Choose from: {', '.join(TASKS)}")
    datagen = (config or DEFAULT_CONFIG)['datagen']
    catalog = catalog_for_task(task)

    if task == 'cogent':
        section = datagen['cogent']
        return TaskPreset(
            task=task, catalog=catalog, rotation_repr='scalar_z',
            apply_synonyms=section['apply_synonyms'],
            scalar_z_on_cubes_only=section['scalar_z_on_cubes_only'],
            count_range=(section['min_objects'], section['max_objects']),
            has_rotation=True, has_chamfer=True,
        )
    if task == 'dot2d':
        return TaskPreset(task=task, catalog=catalog, layout='planar')
    if task == 'so3':
        section = datagen['so3']
        return TaskPreset(
            task=task, catalog=catalog, rotation_repr=section['rotation_repr'],
            emit_location=False, default_location=tuple(section['location']),
            has_rotation=True, has_chamfer=True,
        )
    if task == 'single6dof':
        section = datagen['single6dof']
        return TaskPreset(task=task, catalog=catalog, rotation_repr=section['rotation_repr'],
                          has_rotation=True, has_chamfer=True)
    section = datagen['scene6dof']
    return TaskPreset(
        task=task, catalog=catalog, rotation_repr=section['rotation_repr'],
        count_range=(section['min_objects'], section['max_objects']),
        has_rotation=True, has_chamfer=True,
    )


def checkerboard_layout(config: Optional[Dict[str, Any]] = None) -> CheckerboardLayout:
    section = (config or DEFAULT_CONFIG)['datagen']['dot2d']
    return CheckerboardLayout(section['cells_per_side'], section['id_parity'])


def angle_gaps(config: Optional[Dict[str, Any]] = None) -> AngleGapSpec:
    section = (config or DEFAULT_CONFIG)['datagen']['so3']
    return AngleGapSpec.uniform(section['gap_centers'], section['gap_half_width'])


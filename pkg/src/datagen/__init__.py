"""Dataset generators, sampling layouts and the dot rasterizer"""
from .generators import (
    gen_cogent,
    gen_dot2d,
    gen_scene6dof,
    gen_single6dof,
    gen_so3,
    generate_task,
    record_rng,
    sample_region_rotation,
)
from .layouts import AngleGapSpec, CheckerboardLayout, CoGenTCondition, in_checkerboard
from .presets import TaskPreset, angle_gaps, checkerboard_layout, task_preset
from .raster import ink, ink_centroid, load_png, rasterize_dot, save_png
from .records import DatasetRecord, iter_records, read_records, write_records

__all__ = [
    'AngleGapSpec', 'CheckerboardLayout', 'CoGenTCondition', 'DatasetRecord', 'TaskPreset',
    'angle_gaps', 'checkerboard_layout', 'gen_cogent', 'gen_dot2d', 'gen_scene6dof',
    'gen_single6dof', 'gen_so3', 'generate_task', 'in_checkerboard', 'ink', 'ink_centroid',
    'iter_records', 'load_png', 'rasterize_dot', 'read_records', 'record_rng',
    'sample_region_rotation', 'save_png', 'task_preset', 'write_records',
]

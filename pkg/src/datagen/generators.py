"""Deterministic dataset generators for every task family

Record i depends only on (seed, i): each record draws from its own generator
seeded with [seed, i], so records can be produced in any order or in parallel.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from ..dsl import emit_program_with_values, format_number, parse_program
from ..rotkit import EulerAngles, RotationValue, axis_matrix, euler_to_matrix, random_rotation
from ..scene.catalog import split_furniture
from ..scene.model import CameraRecord, ObjectRecord, SceneProgram
from ..utils.config import DEFAULT_CONFIG
from ..utils.errors import ConfigError, EmptyRegion
from .layouts import REGIONS, AngleGapSpec, CheckerboardLayout, CoGenTCondition, in_checkerboard
from .presets import TaskPreset, angle_gaps, checkerboard_layout, task_preset
from .raster import rasterize_dot
from .records import DatasetRecord


logger = logging.getLogger(__name__)

MAX_PLACEMENT_ATTEMPTS = 200
MAX_SCENE_RESTARTS = 100
MAX_REGION_ATTEMPTS = 1000
DOT_DISTRIBUTIONS = ('checkerboard', 'uniform')
SCENE6DOF_SPLITS = {
    'train_solid': 'train',
    'ood_texture_marker': 'val_ood',
    'ood_shape_marker': 'val_ood',
}


def record_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def _map_indices(build: Callable[[int], DatasetRecord], n: int, threads: int = 1) -> List[DatasetRecord]:
    """Build records 0..n-1 in index order, optionally on a thread pool"""
    if n < 1:
        raise ConfigError(f"Number of records must be >= 1, got {n}")
    if threads <= 1:
        return [build(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(build, range(n)))


def _finish_record(index: int, scene: SceneProgram, preset: TaskPreset, rng: np.random.Generator,
                   split: str, condition: Optional[str], image: Optional[np.ndarray] = None,
                   image_path: Optional[str] = None) -> DatasetRecord:
    """Emit the scene and store the parse of the emitted text as the record's scene"""
    options = preset.emit_options(shuffle_seed=int(rng.integers(0, 2 ** 31 - 1)))
    program, values = emit_program_with_values(scene, options, preset.catalog)
    parsed = parse_program(program, preset.catalog, preset.parse_options(scene.camera))
    return DatasetRecord(index=index, program=program, scene=parsed, split=split,
                         condition=condition, image_path=image_path, values=tuple(values), image=image)


def _scatter_xy(rng: np.random.Generator, count: int, extent: float, min_distance: float) -> np.ndarray:
    """count points in [-extent, extent]^2 with pairwise distance >= min_distance"""
    for _ in range(MAX_SCENE_RESTARTS):
        placed: List[np.ndarray] = []
        for _ in range(count):
            for _ in range(MAX_PLACEMENT_ATTEMPTS):
                candidate = rng.uniform(-extent, extent, size=2)
                if all(np.linalg.norm(candidate - other) >= min_distance for other in placed):
                    placed.append(candidate)
                    break
            else:
                break
        if len(placed) == count:
            return np.array(placed)
    raise ConfigError(
        f"Cannot place {count} objects {min_distance} apart within +/-{extent}; relax datagen settings"
    )


def _quantized(values: Sequence[float]) -> List[float]:
    return [float(format_number(v)) for v in values]


# --- CoGenT -----------------------------------------------------------------

def gen_cogent(n: int, cond: Union[CoGenTCondition, str], seed: int,
               config: Optional[Dict[str, Any]] = None, split: Optional[str] = None,
               threads: int = 1) -> List[DatasetRecord]:
    """
    CLEVR-style scenes whose cube and cylinder colors follow a CoGenT condition

    Args:
        n: Number of records
        cond: Condition (or its id 'A' / 'B')
        seed: Base seed
        config: Run configuration (defaults when None)
        split: Split label (train for condition A, val_ood for B by default)
        threads: Worker threads

    Returns:
        Records in index order
    """
    config = config or DEFAULT_CONFIG
    preset = task_preset('cogent', config)
    catalog = preset.catalog
    if isinstance(cond, str):
        cond = CoGenTCondition.named(cond, catalog.names('color'))
    split = split or ('train' if cond.id == 'A' else 'val_ood')
    section = config['datagen']['cogent']
    low, high = preset.count_range
    shapes = catalog.names('shape')
    sizes = catalog.names('size')
    materials = catalog.names('material')

    def build(index: int) -> DatasetRecord:
        rng = record_rng(seed, index)
        count = int(rng.integers(low, high + 1))
        xy = _scatter_xy(rng, count, section['extent'], section['min_distance'])
        objects = []
        for k in range(count):
            shape = shapes[int(rng.integers(len(shapes)))]
            size = sizes[int(rng.integers(len(sizes)))]
            material = materials[int(rng.integers(len(materials)))]
            palette = cond.colors_for(shape)
            color = palette[int(rng.integers(len(palette)))]
            theta = float(rng.uniform(-math.pi, math.pi))
            rotated = shape == 'cube' or not preset.scalar_z_on_cubes_only
            objects.append(ObjectRecord(
                shape=shape,
                size=size,
                color=color,
                material=material,
                location=(float(xy[k, 0]), float(xy[k, 1]), catalog.size_scale(size)),
                rotation=RotationValue(axis_matrix(2, theta)) if rotated else RotationValue.identity(),
            ))
        scene = SceneProgram(tuple(objects), CameraRecord.clevr())
        return _finish_record(index, scene, preset, rng, split, cond.id)

    logger.info(f"Generating {n} CoGenT scenes (condition {cond.id}, seed {seed})")
    return _map_indices(build, n, threads)


# --- 2D dot -----------------------------------------------------------------

def sample_dot_position(rng: np.random.Generator, dist: str, layout: CheckerboardLayout) -> tuple[float, float]:
    """Uniform point; checkerboard mode keeps it (and its 3-decimal form) inside ID cells"""
    if dist not in DOT_DISTRIBUTIONS:
        raise ConfigError(f"Unknown dot distribution '{dist}'")
    while True:
        p = tuple(float(v) for v in rng.uniform(0.0, 1.0, size=2))
        if dist == 'uniform':
            return p
        if in_checkerboard(p, layout) and in_checkerboard(_quantized(p), layout):
            return p


def gen_dot2d(n: int, dist: str, layout: Optional[CheckerboardLayout], seed: int,
              config: Optional[Dict[str, Any]] = None, split: Optional[str] = None,
              threads: int = 1) -> List[DatasetRecord]:
    """
    Red-dot images with their `add(x=..., y=...)` programs

    Args:
        n: Number of records
        dist: 'checkerboard' (rejection-sampled into ID cells) or 'uniform'
        layout: Checkerboard layout (configured default when None)
        seed: Base seed
        config: Run configuration
        split: Split label (train for checkerboard, val_ood for uniform by default)
        threads: Worker threads

    Returns:
        Records in index order, each carrying its rasterized image
    """
    config = config or DEFAULT_CONFIG
    preset = task_preset('dot2d', config)
    layout = layout or checkerboard_layout(config)
    section = config['datagen']['dot2d']
    split = split or ('train' if dist == 'checkerboard' else 'val_ood')
    if dist not in DOT_DISTRIBUTIONS:
        raise ConfigError(f"Unknown dot distribution '{dist}'")

    def build(index: int) -> DatasetRecord:
        rng = record_rng(seed, index)
        x, y = sample_dot_position(rng, dist, layout)
        scene = SceneProgram((ObjectRecord(shape='dot', color='red', location=(x, y, 0.0)),))
        image = rasterize_dot((x, y), section['image_size'], section['radius'])
        return _finish_record(index, scene, preset, rng, split, dist, image=image,
                              image_path=f"images/{split}_{index:06d}.png")

    logger.info(f"Generating {n} dot images ({dist}, {layout.cells_per_side}x{layout.cells_per_side}, seed {seed})")
    return _map_indices(build, n, threads)


# --- SO(3) range gaps -------------------------------------------------------

def sample_region_rotation(rng: np.random.Generator, region: str, gaps: AngleGapSpec) -> RotationValue:
    """
    Extrinsic Euler rotation whose components fall in the region

    Components are drawn per axis and kept on the rotation as drawn, so the
    middle angle may leave [-pi/2, pi/2]. The draw is re-checked after rounding
    to three decimals, since that is what the program text carries.

    Raises:
        EmptyRegion: If no draw lands in the region
    """
    for _ in range(MAX_REGION_ATTEMPTS):
        euler = EulerAngles(gaps.sample_angles(region, rng), 'extrinsic')
        if gaps.in_region(region, _quantized(euler.angles)):
            return RotationValue(euler_to_matrix(euler).matrix, source_euler=euler)
    raise EmptyRegion(f"No rotation found in region '{region}' after {MAX_REGION_ATTEMPTS} draws")


def gen_so3(n: int, region: str, gaps: Optional[AngleGapSpec], seed: int,
            config: Optional[Dict[str, Any]] = None, split: Optional[str] = None,
            rotation_repr: Optional[str] = None, threads: int = 1) -> List[DatasetRecord]:
    """
    Single airplane at a fixed location, rotated inside the ID range or the gaps

    Raises:
        EmptyRegion: If the requested region has zero measure
    """
    config = config or DEFAULT_CONFIG
    preset = task_preset('so3', config)
    if rotation_repr:
        preset = preset.with_repr(rotation_repr)
    gaps = gaps or angle_gaps(config)
    if region not in REGIONS:
        raise ConfigError(f"Unknown region '{region}'")
    for k in range(len(gaps.gaps)):
        if gaps.measure(region, k) <= 0.0:
            raise EmptyRegion(f"Region '{region}' of component {k} has zero measure")
    split = split or ('train' if region == 'id' else 'val_ood')
    catalog = preset.catalog
    shapes, sizes = catalog.names('shape'), catalog.names('size')
    colors, materials = catalog.names('color'), catalog.names('material')

    def build(index: int) -> DatasetRecord:
        rng = record_rng(seed, index)
        obj = ObjectRecord(
            shape=shapes[int(rng.integers(len(shapes)))],
            size=sizes[int(rng.integers(len(sizes)))],
            color=colors[int(rng.integers(len(colors)))],
            material=materials[int(rng.integers(len(materials)))],
            location=preset.default_location,
            rotation=sample_region_rotation(rng, region, gaps),
        )
        return _finish_record(index, SceneProgram((obj,)), preset, rng, split, region)

    logger.info(f"Generating {n} SO(3) samples (region {region}, repr {preset.rotation_repr}, seed {seed})")
    return _map_indices(build, n, threads)


# --- 6-DoF ------------------------------------------------------------------

def gen_single6dof(n: int, seed: int, config: Optional[Dict[str, Any]] = None,
                   split: str = 'train', threads: int = 1) -> List[DatasetRecord]:
    """One airplane proxy per scene with a uniform rotation and a location in the configured box"""
    config = config or DEFAULT_CONFIG
    preset = task_preset('single6dof', config)
    section = config['datagen']['single6dof']
    low = np.array(section['location_low'], dtype=np.float64)
    high = np.array(section['location_high'], dtype=np.float64)
    catalog = preset.catalog
    shapes, colors, materials = catalog.names('shape'), catalog.names('color'), catalog.names('material')

    def build(index: int) -> DatasetRecord:
        rng = record_rng(seed, index)
        obj = ObjectRecord(
            shape=shapes[int(rng.integers(len(shapes)))],
            color=colors[int(rng.integers(len(colors)))],
            material=materials[int(rng.integers(len(materials)))],
            location=tuple(float(v) for v in rng.uniform(low, high)),
            rotation=random_rotation(rng),
        )
        return _finish_record(index, SceneProgram((obj,)), preset, rng, split, None)

    logger.info(f"Generating {n} single-object 6-DoF samples (seed {seed})")
    return _map_indices(build, n, threads)


def gen_scene6dof(n: int, split: str, seed: int, config: Optional[Dict[str, Any]] = None,
                  threads: int = 1) -> List[DatasetRecord]:
    """
    Furniture scenes of 3-5 proxy objects seen from a camera on a sampled arc

    Args:
        n: Number of records
        split: train_solid, ood_texture_marker (train shapes, OOD marker) or
            ood_shape_marker (held-out shape names only)
        seed: Base seed
        config: Run configuration
        threads: Worker threads
    """
    if split not in SCENE6DOF_SPLITS:
        raise ConfigError(f"Unknown scene6dof split '{split}'. Choose from: {', '.join(SCENE6DOF_SPLITS)}")
    config = config or DEFAULT_CONFIG
    preset = task_preset('scene6dof', config)
    section = config['datagen']['scene6dof']
    catalog = preset.catalog
    train_names, heldout_names = split_furniture(section['holdout_fraction'])
    names = heldout_names if split == 'ood_shape_marker' else train_names
    if not names:
        raise ConfigError(f"No furniture names available for split '{split}'")
    colors = catalog.names('color')
    low, high = preset.count_range
    pitch_low, pitch_high = (math.radians(v) for v in section['pitch_deg'])
    radius_low, radius_high = section['radius']
    azimuth = math.radians(section['azimuth_deg'])

    def build(index: int) -> DatasetRecord:
        rng = record_rng(seed, index)
        count = int(rng.integers(low, high + 1))
        xy = _scatter_xy(rng, count, section['extent'], section['min_distance'])
        objects = []
        for k in range(count):
            shape = names[int(rng.integers(len(names)))]
            objects.append(ObjectRecord(
                shape=shape,
                color=colors[int(rng.integers(len(colors)))],
                location=(float(xy[k, 0]), float(xy[k, 1]), catalog.extents[shape][2]),
                rotation=random_rotation(rng),
            ))
        camera = CameraRecord.from_arc(
            pitch=float(rng.uniform(pitch_low, pitch_high)),
            radius=float(rng.uniform(radius_low, radius_high)),
            azimuth=azimuth,
        )
        return _finish_record(index, SceneProgram(tuple(objects), camera), preset, rng,
                              SCENE6DOF_SPLITS[split], split)

    logger.info(f"Generating {n} furniture scenes (split {split}, seed {seed})")
    return _map_indices(build, n, threads)


def generate_task(task: str, n: int, seed: int, config: Optional[Dict[str, Any]] = None,
                  variant: Optional[str] = None, threads: int = 1,
                  rotation_repr: Optional[str] = None, split: Optional[str] = None) -> List[DatasetRecord]:
    """
    Dispatch to the generator of a task

    variant is the CoGenT condition, the dot distribution, the SO(3) region or the
    scene6dof split; it is ignored for single6dof. split overrides the split label
    except for scene6dof, whose variant fixes it.

    Raises:
        ConfigError: Unknown task or variant
    """
    config = config or DEFAULT_CONFIG
    if task == 'cogent':
        return gen_cogent(n, variant or 'A', seed, config, split=split, threads=threads)
    if task == 'dot2d':
        return gen_dot2d(n, variant or 'checkerboard', None, seed, config, split=split, threads=threads)
    if task == 'so3':
        return gen_so3(n, variant or 'id', None, seed, config, split=split,
                       rotation_repr=rotation_repr, threads=threads)
    if task == 'single6dof':
        return gen_single6dof(n, seed, config, split=split or 'train', threads=threads)
    if task == 'scene6dof':
        return gen_scene6dof(n, variant or 'train_solid', seed, config, threads=threads)
    raise ConfigError(f"Unknown task '{task}'")

"""Surface point sampling on the analytic primitive of each shape"""
import logging
import math
from typing import Callable, Dict, Optional

import numpy as np

from ..utils.errors import UnknownShape
from .catalog import AttributeCatalog
from .model import ObjectRecord, SceneProgram


logger = logging.getLogger(__name__)


def _sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    points = rng.normal(size=(n, 3))
    return points / np.linalg.norm(points, axis=1, keepdims=True)


def _box(n: int, rng: np.random.Generator, half_extents=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Uniform over the surface of an axis-aligned box centred at the origin"""
    ex, ey, ez = half_extents
    # faces in pairs (-x, +x, -y, +y, -z, +z), weighted by area
    areas = np.array([ey * ez, ey * ez, ex * ez, ex * ez, ex * ey, ex * ey])
    faces = rng.choice(6, size=n, p=areas / areas.sum())
    uv = rng.uniform(-1.0, 1.0, size=(n, 2))

    points = np.empty((n, 3))
    extents = np.array(half_extents, dtype=np.float64)
    for face in range(6):
        mask = faces == face
        if not mask.any():
            continue
        axis = face // 2
        sign = -1.0 if face % 2 == 0 else 1.0
        others = [a for a in range(3) if a != axis]
        points[mask, axis] = sign * extents[axis]
        points[mask, others[0]] = uv[mask, 0] * extents[others[0]]
        points[mask, others[1]] = uv[mask, 1] * extents[others[1]]
    return points


def _cube(n: int, rng: np.random.Generator) -> np.ndarray:
    return _box(n, rng)


def _cylinder(n: int, rng: np.random.Generator) -> np.ndarray:
    """Radius 1, height 2 along z; side and caps chosen by area (4pi vs 2pi)"""
    on_side = rng.uniform(size=n) < 2.0 / 3.0
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    z = rng.uniform(-1.0, 1.0, size=n)
    # sqrt keeps cap points uniform in area
    r = np.sqrt(rng.uniform(size=n))
    cap_sign = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)

    points = np.empty((n, 3))
    radius = np.where(on_side, 1.0, r)
    points[:, 0] = radius * np.cos(theta)
    points[:, 1] = radius * np.sin(theta)
    points[:, 2] = np.where(on_side, z, cap_sign)
    return points


PRIMITIVES: Dict[str, Callable[[int, np.random.Generator], np.ndarray]] = {
    'sphere': _sphere,
    'cube': _cube,
    'cylinder': _cylinder,
}


def local_points(shape: str, n: int, rng: np.random.Generator,
                 catalog: Optional[AttributeCatalog] = None) -> np.ndarray:
    """Unscaled points in the object frame"""
    primitive = PRIMITIVES.get(shape)
    if primitive is not None:
        return primitive(n, rng)
    if catalog is not None and shape in catalog.extents:
        return _box(n, rng, catalog.extents[shape])
    raise UnknownShape(f"No surface primitive registered for shape {shape!r}")


def sample_surface_points(obj: ObjectRecord, n: int, seed: int,
                          catalog: Optional[AttributeCatalog] = None) -> np.ndarray:
    """
    Sample n points on an object's surface in world frame

    Points are drawn on the unit primitive, scaled by the size factor, rotated
    by the object's rotation and translated to its location.

    Args:
        obj: Object to sample
        n: Number of points (>= 1)
        seed: Seed of the sampler; the same seed gives the same local points
        catalog: Catalog supplying size scales and proxy box extents

    Returns:
        (n, 3) array of world-frame points

    Raises:
        UnknownShape: If the shape has no registered primitive
    """
    if n < 1:
        raise ValueError(f"Number of surface points must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    points = local_points(obj.shape, n, rng, catalog)
    scale = catalog.size_scale(obj.size) if catalog is not None else 1.0
    return obj.rotation.apply(points * scale) + np.asarray(obj.location)


def sample_scene_points(scene: SceneProgram, points_per_object: int, seed: int,
                        catalog: Optional[AttributeCatalog] = None) -> np.ndarray:
    """Union of per-object samples; object i uses seed (seed, i)"""
    if not scene.objects:
        return np.zeros((0, 3))
    clouds = []
    for index, obj in enumerate(scene.objects):
        object_seed = int(np.random.SeedSequence([seed, index]).generate_state(1)[0])
        clouds.append(sample_surface_points(obj, points_per_object, object_seed, catalog))
    logger.debug(f"Sampled {len(clouds)} objects x {points_per_object} points")
    return np.concatenate(clouds, axis=0)

"""Scene data model: objects, camera and the scene program"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import math
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..rotkit import RotationValue, matrix_to_sixd, sixd_to_matrix, SixD
from ..utils.errors import NonFinite, UnknownAttribute
from .catalog import AttributeCatalog


Vector3 = tuple[float, float, float]

# CLEVR's fixed camera, looking at the origin
CLEVR_CAMERA_POSITION = (7.358, -6.926, 4.958)


def _vector3(values: Sequence[float], label: str) -> Vector3:
    vector = tuple(float(v) for v in values)
    if len(vector) != 3:
        raise ValueError(f"{label} must have 3 components, got {len(vector)}")
    if not all(math.isfinite(v) for v in vector):
        raise NonFinite(f"{label} components must be finite, got {vector}")
    return vector  # type: ignore[return-value]


@dataclass(frozen=True)
class CameraRecord:
    position: Vector3
    look_at: Vector3 = (0.0, 0.0, 0.0)
    pitch: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'position', _vector3(self.position, 'camera position'))
        object.__setattr__(self, 'look_at', _vector3(self.look_at, 'camera look_at'))
        if not self.radius > 0:
            raise ValueError(f"Camera radius must be positive, got {self.radius}")

    @classmethod
    def from_arc(cls, pitch: float, radius: float, azimuth: float = -math.pi / 4.0,
                 look_at: Vector3 = (0.0, 0.0, 0.0)) -> 'CameraRecord':
        """Camera on an arc around look_at at the given pitch (elevation) and radius"""
        horizontal = radius * math.cos(pitch)
        position = (
            look_at[0] + horizontal * math.cos(azimuth),
            look_at[1] + horizontal * math.sin(azimuth),
            look_at[2] + radius * math.sin(pitch),
        )
        return cls(position=position, look_at=look_at, pitch=pitch, radius=radius)

    @classmethod
    def clevr(cls) -> 'CameraRecord':
        position = CLEVR_CAMERA_POSITION
        radius = math.sqrt(sum(c * c for c in position))
        pitch = math.asin(position[2] / radius)
        return cls(position=position, look_at=(0.0, 0.0, 0.0), pitch=pitch, radius=radius)

    def to_dict(self) -> Dict[str, Any]:
        return {'position': list(self.position), 'look_at': list(self.look_at),
                'pitch': self.pitch, 'radius': self.radius}

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'CameraRecord':
        return cls(position=raw['position'], look_at=raw.get('look_at', (0.0, 0.0, 0.0)),
                   pitch=raw.get('pitch', 0.0), radius=raw.get('radius', 1.0))


@dataclass(frozen=True)
class ObjectRecord:
    """One object: categorical attributes plus pose

    size None is the fixed-scale marker and material None means absent.
    """
    shape: str
    color: str
    location: Vector3
    size: Optional[str] = None
    material: Optional[str] = None
    rotation: RotationValue = field(default_factory=RotationValue.identity, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'location', _vector3(self.location, 'location'))

    def validate(self, catalog: AttributeCatalog) -> None:
        """Raise UnknownAttribute if any attribute id is not canonical in the catalog"""
        checks = [('shape', self.shape), ('color', self.color)]
        if self.size is not None:
            checks.append(('size', self.size))
        if self.material is not None:
            checks.append(('material', self.material))
        for kind, value in checks:
            if value not in catalog.names(kind):
                raise UnknownAttribute(f"{kind} {value!r} is not canonical in catalog '{catalog.name}'")

    def with_pose(self, location: Optional[Sequence[float]] = None,
                  rotation: Optional[RotationValue] = None) -> 'ObjectRecord':
        return replace(self,
                       location=tuple(location) if location is not None else self.location,
                       rotation=rotation if rotation is not None else self.rotation)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'shape': self.shape,
            'size': self.size,
            'color': self.color,
            'material': self.material,
            'location': list(self.location),
            'rotation': list(matrix_to_sixd(self.rotation).flat()),
        }

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'ObjectRecord':
        rotation = raw.get('rotation')
        return cls(
            shape=raw['shape'],
            color=raw['color'],
            location=raw['location'],
            size=raw.get('size'),
            material=raw.get('material'),
            rotation=sixd_to_matrix(SixD.from_flat(rotation)) if rotation else RotationValue.identity(),
        )


@dataclass(frozen=True)
class SceneProgram:
    objects: tuple[ObjectRecord, ...]
    camera: CameraRecord = field(default_factory=CameraRecord.clevr)

    def __post_init__(self):
        object.__setattr__(self, 'objects', tuple(self.objects))

    def __len__(self) -> int:
        return len(self.objects)

    def locations(self) -> np.ndarray:
        if not self.objects:
            return np.zeros((0, 3))
        return np.array([obj.location for obj in self.objects], dtype=np.float64)

    def validate(self, catalog: AttributeCatalog, count_range: Optional[tuple[int, int]] = None) -> None:
        for obj in self.objects:
            obj.validate(catalog)
        if count_range is not None:
            low, high = count_range
            if not low <= len(self.objects) <= high:
                raise ValueError(f"Scene has {len(self.objects)} objects, expected {low}-{high}")

    def front_to_back(self) -> 'SceneProgram':
        """Objects ordered by distance to the camera position, ties by index"""
        camera = np.asarray(self.camera.position)
        keyed = sorted(
            enumerate(self.objects),
            key=lambda item: (float(np.linalg.norm(np.asarray(item[1].location) - camera)), item[0]),
        )
        return replace(self, objects=tuple(obj for _, obj in keyed))

    def without(self, indices: Sequence[int]) -> 'SceneProgram':
        drop = set(indices)
        return replace(self, objects=tuple(o for i, o in enumerate(self.objects) if i not in drop))

    def to_dict(self) -> Dict[str, Any]:
        return {'objects': [o.to_dict() for o in self.objects], 'camera': self.camera.to_dict()}

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'SceneProgram':
        camera = raw.get('camera')
        return cls(
            objects=tuple(ObjectRecord.from_dict(o) for o in raw.get('objects', [])),
            camera=CameraRecord.from_dict(camera) if camera else CameraRecord.clevr(),
        )

    @classmethod
    def empty(cls, camera: Optional[CameraRecord] = None) -> 'SceneProgram':
        return cls(objects=(), camera=camera or CameraRecord.clevr())

"""Rotation representations and the geodesic metric

The canonical form of every rotation is a 3x3 matrix acting on column vectors.
Euler angles, axis-angle, rotation vectors and the 6D column representation
are conversions to and from that matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from ..utils.errors import DegenerateSixD, NonUnitAxis


ORTHONORMAL_TOLERANCE = 1e-9
UNIT_AXIS_TOLERANCE = 1e-9
GIMBAL_TOLERANCE = 1e-9
SIXD_MIN_NORM = 1e-12
SIXD_MIN_ANGLE = 1e-6
NEAR_PI_SINE = 1e-6

AXES = {'X': 0, 'Y': 1, 'Z': 2}
CYCLIC_ORDERS = {'XYZ', 'YZX', 'ZXY'}
CONVENTIONS = ('intrinsic', 'extrinsic')


def wrap_angle(angle: float) -> float:
    """Map an angle to [-pi, pi)"""
    wrapped = (angle + math.pi) % (2.0 * math.pi) - math.pi
    # the modulo can round up to exactly pi for inputs just below it
    if wrapped >= math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


def axis_matrix(axis: int, angle: float) -> np.ndarray:
    """Elementary rotation about coordinate axis 0, 1 or 2"""
    c, s = math.cos(angle), math.sin(angle)
    if axis == 0:
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis == 1:
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class RotationValue:
    """
    A rotation stored as a row-major 3x3 matrix

    source_euler keeps the angles a sampled rotation was drawn from; Euler
    serialization in the same convention and order emits them as drawn instead
    of the canonical decomposition.
    """
    matrix: np.ndarray
    source_euler: Optional[EulerAngles] = None

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64).reshape(3, 3)
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)

    @classmethod
    def identity(cls) -> 'RotationValue':
        return cls(np.eye(3))

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        """Rotate a 3-vector or an (N, 3) array of row vectors"""
        vectors = np.asarray(vectors, dtype=np.float64)
        return vectors @ self.matrix.T

    def compose(self, other: 'RotationValue') -> 'RotationValue':
        """self · other (other applied first)"""
        return RotationValue(self.matrix @ other.matrix)

    def inverse(self) -> 'RotationValue':
        return RotationValue(self.matrix.T)

    def orthonormality_error(self) -> float:
        return float(np.linalg.norm(self.matrix.T @ self.matrix - np.eye(3)))

    def determinant_error(self) -> float:
        return abs(float(np.linalg.det(self.matrix)) - 1.0)

    def is_valid(self, tolerance: float = ORTHONORMAL_TOLERANCE) -> bool:
        return (np.all(np.isfinite(self.matrix))
                and self.orthonormality_error() <= tolerance
                and self.determinant_error() <= tolerance)

    def allclose(self, other: 'RotationValue', atol: float = 1e-9) -> bool:
        return bool(np.allclose(self.matrix, other.matrix, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        rows = ', '.join('[' + ', '.join(f'{v:.6f}' for v in row) + ']' for row in self.matrix)
        return f"RotationValue([{rows}])"


@dataclass(frozen=True)
class EulerAngles:
    """Three Tait-Bryan angles in radians

    Intrinsic order XYZ means R = Rx(a0) Ry(a1) Rz(a2); extrinsic order XYZ means
    the same elementary rotations applied about fixed axes, R = Rz(a2) Ry(a1) Rx(a0).
    """
    angles: tuple[float, float, float]
    convention: str = 'extrinsic'
    order: str = 'XYZ'

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if len(angles) != 3 or not all(math.isfinite(a) for a in angles):
            raise ValueError(f"Euler angles must be three finite values, got {self.angles}")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"Unknown Euler convention: {self.convention}")
        order = self.order.upper()
        if sorted(order) != ['X', 'Y', 'Z']:
            raise ValueError(f"Euler order must be a permutation of XYZ, got {self.order}")
        object.__setattr__(self, 'angles', angles)
        object.__setattr__(self, 'order', order)

    def canonical(self) -> 'EulerAngles':
        return EulerAngles(tuple(wrap_angle(a) for a in self.angles), self.convention, self.order)


@dataclass(frozen=True)
class SixD:
    """The first two matrix columns, a1 and a2"""
    a1: tuple[float, float, float]
    a2: tuple[float, float, float]

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> 'SixD':
        if len(values) != 6:
            raise DegenerateSixD(f"6D representation needs 6 values, got {len(values)}")
        return cls(tuple(float(v) for v in values[:3]), tuple(float(v) for v in values[3:]))

    def flat(self) -> tuple[float, ...]:
        return tuple(self.a1) + tuple(self.a2)


def _intrinsic_matrix(angles: Iterable[float], order: str) -> np.ndarray:
    matrix = np.eye(3)
    for axis_name, angle in zip(order, angles):
        matrix = matrix @ axis_matrix(AXES[axis_name], angle)
    return matrix


def euler_to_matrix(euler: EulerAngles) -> RotationValue:
    """Compose elementary rotations; extrinsic order equals intrinsic in reverse"""
    if euler.convention == 'intrinsic':
        return RotationValue(_intrinsic_matrix(euler.angles, euler.order))
    return RotationValue(_intrinsic_matrix(reversed(euler.angles), euler.order[::-1]))


def _intrinsic_angles(matrix: np.ndarray, order: str) -> tuple[float, float, float]:
    i, j, k = (AXES[a] for a in order)
    sign = 1.0 if order in CYCLIC_ORDERS else -1.0

    cos_b = math.hypot(matrix[i, i], matrix[i, j])
    b = math.atan2(sign * matrix[i, k], cos_b)
    if cos_b < GIMBAL_TOLERANCE:
        # gimbal lock: only a +/- c is determined, third angle pinned to 0
        a = math.atan2(sign * matrix[k, j], matrix[j, j])
        c = 0.0
    else:
        a = math.atan2(-sign * matrix[j, k], matrix[k, k])
        c = math.atan2(-sign * matrix[i, j], matrix[i, i])
    return wrap_angle(a), wrap_angle(b), wrap_angle(c)


def matrix_to_euler(rotation: RotationValue, convention: str = 'extrinsic',
                    order: str = 'XYZ') -> EulerAngles:
    """Decompose a rotation into Tait-Bryan angles in [-pi, pi)"""
    order = order.upper()
    if convention == 'intrinsic':
        angles = _intrinsic_angles(rotation.matrix, order)
        return EulerAngles(angles, 'intrinsic', order)
    a, b, c = _intrinsic_angles(rotation.matrix, order[::-1])
    if convention != 'extrinsic':
        raise ValueError(f"Unknown Euler convention: {convention}")
    return EulerAngles((c, b, a), 'extrinsic', order)


def _skew(axis: np.ndarray) -> np.ndarray:
    x, y, z = axis
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def axis_angle_to_matrix(axis: Sequence[float], angle: float) -> RotationValue:
    """Rodrigues formula for a unit axis"""
    axis = np.asarray(axis, dtype=np.float64)
    norm = float(np.linalg.norm(axis))
    if abs(norm - 1.0) > UNIT_AXIS_TOLERANCE:
        raise NonUnitAxis(f"Rotation axis must have unit norm, got |axis| = {norm:.12f}")
    k = _skew(axis)
    matrix = np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)
    return RotationValue(matrix)


def matrix_to_axis_angle(rotation: RotationValue) -> tuple[np.ndarray, float]:
    """Return (unit axis, angle in [0, pi])"""
    m = rotation.matrix
    v = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    sin_times_two = float(np.linalg.norm(v))
    cos_angle = (float(np.trace(m)) - 1.0) / 2.0
    angle = math.atan2(sin_times_two / 2.0, cos_angle)

    if sin_times_two < 1e-15 and cos_angle > 0.0:
        return np.array([1.0, 0.0, 0.0]), 0.0

    if sin_times_two / 2.0 < NEAR_PI_SINE and cos_angle < 0.0:
        # near pi the skew part vanishes; read n n^T off the symmetric part
        symmetric = (m + m.T) / 2.0
        outer = (symmetric - cos_angle * np.eye(3)) / (1.0 - cos_angle)
        column = int(np.argmax(np.diag(outer)))
        axis = outer[:, column] / math.sqrt(max(outer[column, column], 1e-300))
        axis = axis / np.linalg.norm(axis)
        if sin_times_two > 0.0 and float(np.dot(axis, v)) < 0.0:
            axis = -axis
        return axis, angle

    return v / sin_times_two, angle


def rotvec_to_matrix(rotvec: Sequence[float]) -> RotationValue:
    """Scaled axis-angle (axis * angle) to matrix"""
    rotvec = np.asarray(rotvec, dtype=np.float64)
    angle = float(np.linalg.norm(rotvec))
    if angle < 1e-15:
        return RotationValue.identity()
    return axis_angle_to_matrix(rotvec / angle, angle)


def matrix_to_rotvec(rotation: RotationValue) -> np.ndarray:
    axis, angle = matrix_to_axis_angle(rotation)
    return axis * angle


def sixd_to_matrix(value: SixD) -> RotationValue:
    """Gram-Schmidt the two columns and complete with their cross product"""
    a1 = np.asarray(value.a1, dtype=np.float64)
    a2 = np.asarray(value.a2, dtype=np.float64)
    n1 = float(np.linalg.norm(a1))
    n2 = float(np.linalg.norm(a2))
    if n1 < SIXD_MIN_NORM or n2 < SIXD_MIN_NORM:
        raise DegenerateSixD("6D representation has a zero column")
    b1 = a1 / n1
    cross_norm = float(np.linalg.norm(np.cross(b1, a2 / n2)))
    if cross_norm < math.sin(SIXD_MIN_ANGLE):
        raise DegenerateSixD("6D representation columns are parallel")
    b2 = a2 - float(np.dot(b1, a2)) * b1
    b2 = b2 / np.linalg.norm(b2)
    b3 = np.cross(b1, b2)
    return RotationValue(np.stack([b1, b2, b3], axis=1))


def matrix_to_sixd(rotation: RotationValue) -> SixD:
    m = rotation.matrix
    return SixD(tuple(m[:, 0]), tuple(m[:, 1]))


def geodesic_rad(r1: RotationValue, r2: RotationValue) -> float:
    relative = r1.matrix.T @ r2.matrix
    v = np.array([relative[2, 1] - relative[1, 2],
                  relative[0, 2] - relative[2, 0],
                  relative[1, 0] - relative[0, 1]])
    cos_angle = min(1.0, max(-1.0, (float(np.trace(relative)) - 1.0) / 2.0))
    # same angle as arccos(cos_angle), without its loss of precision near 0 and pi
    return math.atan2(float(np.linalg.norm(v)) / 2.0, cos_angle)


def geodesic_deg(r1: RotationValue, r2: RotationValue) -> float:
    """Rotation angle of r1^T r2 in degrees, in [0, 180]"""
    return math.degrees(geodesic_rad(r1, r2))


def random_rotation(rng: np.random.Generator) -> RotationValue:
    """Uniform rotation from a normalized Gaussian quaternion"""
    q = rng.normal(size=4)
    q = q / np.linalg.norm(q)
    w, x, y, z = q
    matrix = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])
    return RotationValue(matrix)


# Serialized forms used by the program codec
REPRESENTATIONS = ('ext_euler', 'int_euler', 'axis_angle', 'sixd', 'scalar_z')


def to_representation(rotation: RotationValue, repr_id: str, order: str = 'XYZ') -> tuple[float, ...]:
    """Flatten a rotation into the values serialized for a representation id"""
    if repr_id in ('ext_euler', 'int_euler'):
        convention = 'extrinsic' if repr_id == 'ext_euler' else 'intrinsic'
        source = rotation.source_euler
        if source is not None and source.convention == convention and source.order == order.upper():
            return source.angles
        return matrix_to_euler(rotation, convention, order).angles
    if repr_id == 'axis_angle':
        return tuple(float(v) for v in matrix_to_rotvec(rotation))
    if repr_id == 'sixd':
        return tuple(float(v) for v in matrix_to_sixd(rotation).flat())
    if repr_id == 'scalar_z':
        m = rotation.matrix
        return (math.atan2(m[1, 0], m[0, 0]),)
    raise ValueError(f"Unknown rotation representation: {repr_id}")


def from_representation(values: Sequence[float], repr_id: str, order: str = 'XYZ') -> RotationValue:
    """Inverse of to_representation"""
    if repr_id == 'ext_euler':
        return euler_to_matrix(EulerAngles(tuple(values), 'extrinsic', order))
    if repr_id == 'int_euler':
        return euler_to_matrix(EulerAngles(tuple(values), 'intrinsic', order))
    if repr_id == 'axis_angle':
        return rotvec_to_matrix(values)
    if repr_id == 'sixd':
        return sixd_to_matrix(SixD.from_flat(values))
    if repr_id == 'scalar_z':
        return RotationValue(axis_matrix(2, float(values[0])))
    raise ValueError(f"Unknown rotation representation: {repr_id}")


def representation_size(repr_id: str) -> int:
    return {'ext_euler': 3, 'int_euler': 3, 'axis_angle': 3, 'sixd': 6, 'scalar_z': 1}[repr_id]

"""Rotation representations and metrics"""
from .rotations import (
    EulerAngles,
    REPRESENTATIONS,
    RotationValue,
    SixD,
    axis_angle_to_matrix,
    axis_matrix,
    euler_to_matrix,
    from_representation,
    geodesic_deg,
    matrix_to_axis_angle,
    matrix_to_euler,
    matrix_to_rotvec,
    matrix_to_sixd,
    random_rotation,
    representation_size,
    rotvec_to_matrix,
    sixd_to_matrix,
    to_representation,
    wrap_angle,
)

__all__ = [
    'EulerAngles', 'REPRESENTATIONS', 'RotationValue', 'SixD', 'axis_angle_to_matrix',
    'axis_matrix', 'euler_to_matrix', 'from_representation', 'geodesic_deg',
    'matrix_to_axis_angle', 'matrix_to_euler', 'matrix_to_rotvec', 'matrix_to_sixd',
    'random_rotation', 'representation_size', 'rotvec_to_matrix', 'sixd_to_matrix',
    'to_representation', 'wrap_angle',
]

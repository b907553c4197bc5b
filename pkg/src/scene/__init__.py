"""Scene data model, attribute catalogs and surface sampling"""
from .catalog import (
    AttributeCatalog,
    AttributeId,
    catalog_for_task,
    clevr_catalog,
    dot_catalog,
    extended_palette,
    resolve_attribute,
    scene6dof_catalog,
    shape_category,
    single6dof_catalog,
    so3_catalog,
    split_furniture,
)
from .model import CameraRecord, ObjectRecord, SceneProgram
from .sampling import sample_scene_points, sample_surface_points

__all__ = [
    'AttributeCatalog', 'AttributeId', 'CameraRecord', 'ObjectRecord', 'SceneProgram',
    'catalog_for_task', 'clevr_catalog', 'dot_catalog', 'extended_palette',
    'resolve_attribute', 'sample_scene_points', 'sample_surface_points',
    'scene6dof_catalog', 'shape_category', 'single6dof_catalog', 'so3_catalog',
    'split_furniture',
]

"""Attribute catalogs: canonical names, scale factors, palettes and synonym sets"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import json
import logging
import math
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, Mapping, Optional, Sequence
import zlib

import numpy as np

from ..utils.errors import UnknownAttribute


logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent / 'data'
KINDS = ('shape', 'size', 'color', 'material')

AIRPLANE_SHAPES = ('airliner', 'biplane', 'fighter', 'jet', 'private')
FURNITURE_COUNTS = {'chairs': 56, 'sofas': 35, 'tables': 47}

# proxy half-extents (x, y, z) in world units before per-name jitter
PROXY_BASE_EXTENTS = {
    'chairs': (0.30, 0.30, 0.45),
    'sofas': (0.45, 0.90, 0.40),
    'tables': (0.60, 0.45, 0.38),
    'airliner': (1.00, 0.95, 0.25),
    'biplane': (0.80, 0.90, 0.30),
    'fighter': (0.90, 0.60, 0.20),
    'jet': (0.85, 0.70, 0.22),
    'private': (0.70, 0.75, 0.20),
}


@dataclass(frozen=True)
class AttributeId:
    """A resolved catalog entry, e.g. material:metal"""
    kind: str
    name: str

    def __str__(self) -> str:
        return f"{self.kind}:{self.name}"


@dataclass(frozen=True, eq=False)
class AttributeCatalog:
    """Canonical attribute vocabulary of one task family

    Every canonical name and every alias resolves to exactly one entry; lookups
    are case-insensitive.
    """
    name: str
    shapes: tuple[str, ...]
    sizes: Mapping[str, float]
    colors: Mapping[str, tuple[float, float, float]]
    materials: tuple[str, ...]
    synonyms: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    extents: Mapping[str, tuple[float, float, float]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'shapes', tuple(self.shapes))
        object.__setattr__(self, 'materials', tuple(self.materials))
        object.__setattr__(self, 'sizes', MappingProxyType({k: float(v) for k, v in self.sizes.items()}))
        object.__setattr__(self, 'colors', MappingProxyType(
            {k: tuple(float(c) for c in v) for k, v in self.colors.items()}))
        object.__setattr__(self, 'synonyms', MappingProxyType(
            {k: tuple(v) for k, v in self.synonyms.items()}))
        object.__setattr__(self, 'extents', MappingProxyType(
            {k: tuple(float(c) for c in v) for k, v in self.extents.items()}))
        object.__setattr__(self, '_index', self._build_index())

    def names(self, kind: str) -> tuple[str, ...]:
        if kind == 'shape':
            return self.shapes
        if kind == 'size':
            return tuple(self.sizes)
        if kind == 'color':
            return tuple(self.colors)
        if kind == 'material':
            return self.materials
        raise ValueError(f"Unknown attribute kind: {kind}")

    def _build_index(self) -> Dict[str, AttributeId]:
        index: Dict[str, AttributeId] = {}
        canonical: Dict[str, str] = {}

        for kind in KINDS:
            for name in self.names(kind):
                if name != name.lower() or not name.strip():
                    raise ValueError(f"Catalog '{self.name}': canonical name must be lowercase: {name!r}")
                if name in index:
                    raise ValueError(f"Catalog '{self.name}': duplicate canonical name {name!r}")
                index[name] = AttributeId(kind, name)
                canonical[name] = kind

        for name, aliases in self.synonyms.items():
            if name not in canonical:
                raise ValueError(f"Catalog '{self.name}': synonyms given for unknown name {name!r}")
            for alias in aliases:
                key = alias.lower()
                if key in index and index[key].name != name:
                    raise ValueError(
                        f"Catalog '{self.name}': alias {alias!r} maps to both {index[key]} and {name}"
                    )
                index[key] = AttributeId(canonical[name], name)
        return index

    def resolve(self, term: str, kind: Optional[str] = None) -> AttributeId:
        return resolve_attribute(term, self, kind)

    def aliases(self, name: str) -> tuple[str, ...]:
        """The canonical name followed by its synonyms"""
        return (name,) + tuple(self.synonyms.get(name, ()))

    def terms(self) -> tuple[str, ...]:
        """Every canonical name and alias, in catalog order"""
        out = []
        for kind in KINDS:
            for name in self.names(kind):
                out.extend(self.aliases(name))
        return tuple(out)

    def size_scale(self, size: Optional[str]) -> float:
        """Scale factor of a size id; None is the fixed-scale marker (1.0)"""
        if size is None:
            return 1.0
        return self.sizes[size]


def resolve_attribute(term: str, catalog: AttributeCatalog, kind: Optional[str] = None) -> AttributeId:
    """
    Resolve a canonical name or synonym to its canonical attribute id

    Args:
        term: Attribute value as written (case-insensitive)
        catalog: Active catalog
        kind: Restrict resolution to one attribute kind

    Returns:
        The canonical AttributeId

    Raises:
        UnknownAttribute: If the term matches nothing (or matches another kind)
    """
    if not term or not term.strip():
        raise UnknownAttribute("Attribute term must be nonempty")
    found = catalog._index.get(term.strip().lower())
    if found is None or (kind is not None and found.kind != kind):
        expected = f" {kind}" if kind else ''
        raise UnknownAttribute(f"Unknown{expected} attribute {term!r} in catalog '{catalog.name}'")
    return found


def shape_category(shape: str) -> str:
    """Category of a shape id: the proxy prefix (chairs_0055 -> chairs) or the name itself"""
    return shape.split('_', 1)[0]


def proxy_names(prefix: str, count: int) -> tuple[str, ...]:
    return tuple(f"{prefix}_{i:04d}" for i in range(count))


def proxy_extents(name: str) -> tuple[float, float, float]:
    """Fixed half-extents of a proxy box, jittered deterministically per name"""
    base = PROXY_BASE_EXTENTS[shape_category(name)]
    rng = np.random.default_rng(zlib.crc32(name.encode('utf-8')))
    jitter = rng.uniform(0.75, 1.25, size=3)
    return tuple(round(float(b * j), 4) for b, j in zip(base, jitter))


def furniture_names() -> tuple[str, ...]:
    names: list[str] = []
    for prefix, count in FURNITURE_COUNTS.items():
        names.extend(proxy_names(prefix, count))
    return tuple(names)


def split_furniture(holdout_fraction: float) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Split each furniture category into (train names, held-out names); the tail is held out"""
    train: list[str] = []
    heldout: list[str] = []
    for prefix, count in FURNITURE_COUNTS.items():
        names = proxy_names(prefix, count)
        n_hold = int(math.ceil(count * holdout_fraction)) if holdout_fraction > 0 else 0
        train.extend(names[:count - n_hold])
        heldout.extend(names[count - n_hold:])
    return tuple(train), tuple(heldout)


def load_catalog(path: str | Path, name: Optional[str] = None) -> AttributeCatalog:
    """Load a catalog JSON file with fields {shapes, sizes, colors, materials, synonyms}"""
    path = Path(path)
    with path.open('r', encoding='utf-8') as f:
        raw = json.load(f)
    sizes = raw.get('sizes', {})
    if isinstance(sizes, list):
        sizes = {s: 1.0 for s in sizes}
    colors = raw.get('colors', {})
    if isinstance(colors, list):
        colors = {entry['name']: entry['rgb'] for entry in colors}
    return AttributeCatalog(
        name=name or path.stem,
        shapes=raw.get('shapes', []),
        sizes=sizes,
        colors=colors,
        materials=raw.get('materials', []),
        synonyms=raw.get('synonyms', {}),
        extents=raw.get('extents', {}),
    )


def load_palette(path: str | Path) -> Dict[str, tuple[float, float, float]]:
    """Load a palette JSON list of {name, rgb}"""
    with Path(path).open('r', encoding='utf-8') as f:
        entries = json.load(f)
    palette: Dict[str, tuple[float, float, float]] = {}
    for entry in entries:
        rgb = tuple(float(c) for c in entry['rgb'])
        if len(rgb) != 3 or not all(0.0 <= c <= 1.0 for c in rgb):
            raise ValueError(f"Palette entry {entry['name']!r} must have sRGB components in [0, 1]")
        palette[entry['name'].lower()] = rgb
    return palette


@lru_cache(maxsize=None)
def clevr_catalog() -> AttributeCatalog:
    return load_catalog(DATA_DIR / 'clevr.json', name='clevr')


@lru_cache(maxsize=None)
def extended_palette() -> Mapping[str, tuple[float, float, float]]:
    return MappingProxyType(load_palette(DATA_DIR / 'palette_133.json'))


def _subset_synonyms(synonyms: Mapping[str, Sequence[str]], names: Iterable[str]) -> Dict[str, tuple[str, ...]]:
    keep = set(names)
    return {k: tuple(v) for k, v in synonyms.items() if k in keep}


@lru_cache(maxsize=None)
def dot_catalog() -> AttributeCatalog:
    return AttributeCatalog(name='dot2d', shapes=('dot',), sizes={}, colors={'red': (1.0, 0.0, 0.0)},
                            materials=())


@lru_cache(maxsize=None)
def so3_catalog() -> AttributeCatalog:
    clevr = clevr_catalog()
    keep = list(clevr.sizes) + list(clevr.colors) + list(clevr.materials)
    return AttributeCatalog(
        name='so3',
        shapes=AIRPLANE_SHAPES,
        sizes=clevr.sizes,
        colors=clevr.colors,
        materials=clevr.materials,
        synonyms=_subset_synonyms(clevr.synonyms, keep),
        extents={s: proxy_extents(s) for s in AIRPLANE_SHAPES},
    )


@lru_cache(maxsize=None)
def single6dof_catalog() -> AttributeCatalog:
    clevr = clevr_catalog()
    return AttributeCatalog(
        name='single6dof',
        shapes=AIRPLANE_SHAPES,
        sizes={},
        colors=extended_palette(),
        materials=clevr.materials,
        synonyms=_subset_synonyms(clevr.synonyms, clevr.materials),
        extents={s: proxy_extents(s) for s in AIRPLANE_SHAPES},
    )


@lru_cache(maxsize=None)
def scene6dof_catalog() -> AttributeCatalog:
    names = furniture_names()
    return AttributeCatalog(
        name='scene6dof',
        shapes=names,
        sizes={},
        colors=extended_palette(),
        materials=(),
        extents={s: proxy_extents(s) for s in names},
    )


CATALOG_BUILDERS = {
    'cogent': clevr_catalog,
    'dot2d': dot_catalog,
    'so3': so3_catalog,
    'single6dof': single6dof_catalog,
    'scene6dof': scene6dof_catalog,
}


def catalog_for_task(task: str) -> AttributeCatalog:
    try:
        return CATALOG_BUILDERS[task]()
    except KeyError:
        raise ValueError(f"No catalog for task '{task}'") from None

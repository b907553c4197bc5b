"""Parse and emit `add(...)` scene programs"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP, localcontext
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import LarkError, VisitError
import numpy as np

from ..rotkit import REPRESENTATIONS, RotationValue, from_representation, to_representation
from ..scene.catalog import AttributeCatalog, resolve_attribute
from ..scene.model import CameraRecord, ObjectRecord, SceneProgram
from ..utils.errors import (
    ArityError,
    DuplicateKey,
    NonFinite,
    ProgramSyntaxError,
    UnserializableRotation,
)


logger = logging.getLogger(__name__)

KEYS = ('shape', 'size', 'color', 'material', 'loc', 'rotation', 'x', 'y')
STRING_KEYS = ('shape', 'size', 'color', 'material')
ORDERINGS = ('front_to_back', 'as_given')
LAYOUTS = ('scene', 'planar')

GRAMMAR = r"""
    start: "add" "(" [arg ("," arg)*] ")"
    arg: KEY "=" value
    ?value: STRING           -> string
          | NUMBER           -> number
          | "(" NUMBER ("," NUMBER)* ")"  -> numbers

    KEY: /[a-z_]+/
    STRING: /'[^'\n]*'/
    NUMBER: /-?\d+(\.\d+)?/

    %ignore /[ \t]+/
"""


@v_args(inline=True)
class _CallTransformer(Transformer):
    """Turn one parsed `add(...)` call into a list of (key, value) pairs"""

    def start(self, *args):
        return [a for a in args if a is not None]

    def arg(self, key, value):
        return str(key), value

    def string(self, token):
        return str(token)[1:-1]

    def number(self, token):
        return float(token)

    def numbers(self, *tokens):
        return tuple(float(t) for t in tokens)


_PARSER = Lark(GRAMMAR, parser='lalr', transformer=_CallTransformer())


@dataclass(frozen=True)
class ProgramText:
    """One statement per line; serialized as UTF-8 with LF terminators"""
    lines: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'lines', tuple(self.lines))

    @classmethod
    def from_string(cls, text: str) -> 'ProgramText':
        return cls(tuple(line.strip() for line in text.split('\n') if line.strip()))

    def __str__(self) -> str:
        return '\n'.join(self.lines)

    def __len__(self) -> int:
        return len(self.lines)


@dataclass(frozen=True)
class EmitOptions:
    shuffle_seed: int = 0
    ordering: str = 'front_to_back'
    rotation_repr: Optional[str] = 'sixd'
    scalar_z_on_cubes_only: bool = True
    layout: str = 'scene'
    emit_location: bool = True
    apply_synonyms: bool = False

    def __post_init__(self):
        if self.ordering not in ORDERINGS:
            raise ValueError(f"Unknown ordering: {self.ordering}")
        if self.layout not in LAYOUTS:
            raise ValueError(f"Unknown layout: {self.layout}")


@dataclass(frozen=True)
class ParseOptions:
    """How to interpret values the text leaves open

    rotation_repr decides what a 3-tuple rotation means; default_location fills
    objects whose location is not emitted.
    """
    rotation_repr: Optional[str] = 'ext_euler'
    layout: str = 'scene'
    default_location: Optional[tuple[float, float, float]] = None
    camera: CameraRecord = field(default_factory=CameraRecord.clevr)


def format_number(x: float) -> str:
    """
    Format a real with exactly three fraction digits, rounding half away from zero

    Raises:
        NonFinite: If x is NaN or infinite
    """
    value = float(x)
    if not math.isfinite(value):
        raise NonFinite(f"Cannot format non-finite number: {x}")
    exact = Decimal(repr(value))
    with localcontext() as ctx:
        ctx.prec = max(ctx.prec, exact.adjusted() + 5)
        quantized = exact.quantize(Decimal('0.001'), rounding=ROUND_HALF_UP)
    if quantized == 0:
        quantized = abs(quantized)
    return f"{quantized:.3f}"


def _parse_line(line: str, line_number: int) -> List[tuple[str, Any]]:
    try:
        return _PARSER.parse(line)
    except VisitError as exc:
        raise ProgramSyntaxError(f"Cannot interpret {line!r}: {exc.orig_exc}", line_number) from exc
    except LarkError as exc:
        raise ProgramSyntaxError(f"Malformed call {line!r}", line_number) from exc


def _default_attribute(catalog: AttributeCatalog, kind: str, line_number: int) -> str:
    names = catalog.names(kind)
    if len(names) == 1:
        return names[0]
    raise ProgramSyntaxError(f"Missing required key '{kind}'", line_number)


def _rotation_from_value(value: Any, options: ParseOptions, line_number: int) -> RotationValue:
    if isinstance(value, float):
        return from_representation((value,), 'scalar_z')
    if len(value) == 6:
        return from_representation(value, 'sixd')
    if len(value) == 3:
        repr_id = options.rotation_repr
        if repr_id not in ('ext_euler', 'int_euler', 'axis_angle'):
            repr_id = 'ext_euler'
        return from_representation(value, repr_id)
    raise ArityError(f"rotation must be a scalar, a 3-tuple or a 6-tuple, got {len(value)} values",
                     line_number)


def _object_from_args(args: List[tuple[str, Any]], catalog: AttributeCatalog,
                      options: ParseOptions, line_number: int) -> ObjectRecord:
    values: Dict[str, Any] = {}
    for key, value in args:
        if key not in KEYS:
            raise ProgramSyntaxError(f"Unknown key '{key}'", line_number)
        if key in values:
            raise DuplicateKey(f"Key '{key}' given more than once", line_number)
        if key in STRING_KEYS and not isinstance(value, str):
            raise ProgramSyntaxError(f"Key '{key}' takes a quoted string", line_number)
        if key not in STRING_KEYS and isinstance(value, str):
            raise ProgramSyntaxError(f"Key '{key}' takes a number or a tuple", line_number)
        values[key] = value

    attrs = {}
    for kind in STRING_KEYS:
        if kind in values:
            attrs[kind] = resolve_attribute(values[kind], catalog, kind).name
    shape = attrs.get('shape') or _default_attribute(catalog, 'shape', line_number)
    color = attrs.get('color') or _default_attribute(catalog, 'color', line_number)

    planar_keys = [k for k in ('x', 'y') if k in values]
    if options.layout == 'planar':
        if 'loc' in values:
            raise ArityError("2D programs place objects with x and y, not loc", line_number)
        if len(planar_keys) != 2:
            raise ArityError("2D programs need both x and y", line_number)
        if not isinstance(values['x'], float) or not isinstance(values['y'], float):
            raise ArityError("x and y must be scalars", line_number)
        location = (values['x'], values['y'], 0.0)
    else:
        if planar_keys:
            raise ArityError("3D programs place objects with loc, not x/y", line_number)
        if 'loc' in values:
            loc = values['loc']
            if isinstance(loc, float) or len(loc) != 3:
                raise ArityError("loc must be a 3-tuple", line_number)
            location = loc
        elif options.default_location is not None:
            location = tuple(options.default_location)
        else:
            raise ProgramSyntaxError("Missing required key 'loc'", line_number)

    rotation = RotationValue.identity()
    if 'rotation' in values:
        rotation = _rotation_from_value(values['rotation'], options, line_number)

    return ObjectRecord(
        shape=shape,
        color=color,
        location=location,
        size=attrs.get('size'),
        material=attrs.get('material'),
        rotation=rotation,
    )


def parse_program(text: Union[ProgramText, str], catalog: AttributeCatalog,
                  options: Optional[ParseOptions] = None) -> SceneProgram:
    """
    Parse program text into a scene, one object per `add` line

    Args:
        text: Program text (may be empty)
        catalog: Catalog used to resolve names and synonyms
        options: Interpretation of open values (rotation tuples, default location, camera)

    Returns:
        SceneProgram with canonical attribute ids

    Raises:
        ProgramSyntaxError: Malformed call or unknown key
        UnknownAttribute: Name or synonym not in the catalog
        ArityError: Wrong number of location or rotation components
        DuplicateKey: Key repeated within one call
    """
    options = options or ParseOptions()
    if isinstance(text, str):
        text = ProgramText.from_string(text)

    objects = []
    for line_number, line in enumerate(text.lines, start=1):
        args = _parse_line(line, line_number)
        objects.append(_object_from_args(args, catalog, options, line_number))
    return SceneProgram(objects=tuple(objects), camera=options.camera)


def _format_value(value: Union[str, float, Sequence[float]]) -> str:
    if isinstance(value, str):
        return f"'{value}'"
    if isinstance(value, (tuple, list)):
        return '(' + ', '.join(format_number(v) for v in value) + ')'
    return format_number(value)


def _rotation_items(obj: ObjectRecord, options: EmitOptions) -> List[tuple[str, Any]]:
    repr_id = options.rotation_repr
    if repr_id is None:
        return []
    if repr_id == 'scalar_z':
        if options.scalar_z_on_cubes_only and obj.shape != 'cube':
            return []
        return [('rotation', to_representation(obj.rotation, 'scalar_z')[0])]
    return [('rotation', tuple(to_representation(obj.rotation, repr_id)))]


def _line_items(obj: ObjectRecord, options: EmitOptions) -> List[tuple[str, Any]]:
    if options.layout == 'planar':
        return [('x', obj.location[0]), ('y', obj.location[1])]
    items: List[tuple[str, Any]] = [('shape', obj.shape)]
    if obj.size is not None:
        items.append(('size', obj.size))
    items.append(('color', obj.color))
    if obj.material is not None:
        items.append(('material', obj.material))
    if options.emit_location:
        items.append(('loc', tuple(obj.location)))
    items.extend(_rotation_items(obj, options))
    return items


def emit_program_with_values(scene: SceneProgram, options: EmitOptions,
                             catalog: Optional[AttributeCatalog] = None) -> tuple[ProgramText, List[float]]:
    """
    Emit a scene as program text and return the exact reals behind every literal

    The second element lists, in text order, the unrounded value of each numeric
    literal; float-mode training targets use these instead of the 3-decimal text.

    Raises:
        UnserializableRotation: If options.rotation_repr is not a known representation
    """
    if options.rotation_repr is not None and options.rotation_repr not in REPRESENTATIONS:
        raise UnserializableRotation(f"Unknown rotation representation: {options.rotation_repr}")
    if options.apply_synonyms and catalog is None:
        raise ValueError("Applying synonyms needs the catalog")

    ordered = scene.front_to_back() if options.ordering == 'front_to_back' else scene
    rng = np.random.default_rng(options.shuffle_seed)

    lines: List[str] = []
    values: List[float] = []
    for obj in ordered.objects:
        items = _line_items(obj, options)
        if options.layout == 'scene':
            items = [items[i] for i in rng.permutation(len(items))]

        parts = []
        for key, value in items:
            if key in STRING_KEYS and options.apply_synonyms:
                aliases = catalog.aliases(value)
                value = aliases[int(rng.integers(len(aliases)))]
            if isinstance(value, tuple):
                values.extend(float(v) for v in value)
            elif not isinstance(value, str):
                values.append(float(value))
            parts.append(f"{key}={_format_value(value)}")
        lines.append(f"add({', '.join(parts)})")

    return ProgramText(tuple(lines)), values


def emit_program(scene: SceneProgram, options: EmitOptions,
                 catalog: Optional[AttributeCatalog] = None) -> ProgramText:
    """Emit a scene as program text (see emit_program_with_values)"""
    text, _ = emit_program_with_values(scene, options, catalog)
    return text

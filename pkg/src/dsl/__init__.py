"""Scene program codec: the `add(...)` text format"""
from .codec import (
    EmitOptions,
    KEYS,
    ParseOptions,
    ProgramText,
    emit_program,
    emit_program_with_values,
    format_number,
    parse_program,
)

__all__ = [
    'EmitOptions', 'KEYS', 'ParseOptions', 'ProgramText', 'emit_program',
    'emit_program_with_values', 'format_number', 'parse_program',
]

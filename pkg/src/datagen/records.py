"""Dataset records and their JSONL/PNG storage"""
from __future__ import annotations

from dataclasses import dataclass, field
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional

import numpy as np

from ..dsl import ProgramText
from ..scene.model import SceneProgram
from ..utils.errors import DataError
from .raster import save_png


logger = logging.getLogger(__name__)

SPLITS = ('train', 'val_id', 'val_ood')


@dataclass(frozen=True, eq=False)
class DatasetRecord:
    """
    One (program, scene) pair

    scene is the parse of program, so the pair agrees exactly. values holds the
    unrounded reals behind the program's numeric literals, in text order.
    """
    index: int
    program: ProgramText
    scene: SceneProgram
    split: str = 'train'
    condition: Optional[str] = None
    image_path: Optional[str] = None
    values: tuple[float, ...] = ()
    image: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"Unknown split: {self.split}")
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            'index': self.index,
            'split': self.split,
            'condition': self.condition,
            'program': str(self.program),
            'scene': self.scene.to_dict(),
            'values': list(self.values),
        }
        if self.image_path is not None:
            record['image'] = self.image_path
        return record

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'DatasetRecord':
        return cls(
            index=int(raw['index']),
            program=ProgramText.from_string(raw['program']),
            scene=SceneProgram.from_dict(raw['scene']),
            split=raw.get('split', 'train'),
            condition=raw.get('condition'),
            image_path=raw.get('image'),
            values=tuple(raw.get('values', ())),
        )


def write_records(records: Iterable[DatasetRecord], out_dir: Path, split: str) -> Path:
    """
    Write records to <out_dir>/<split>.jsonl and their images under <out_dir>/images/

    Returns:
        Path of the JSONL file
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jsonl_path = out_dir / f"{split}.jsonl"

    count = 0
    with jsonl_path.open('w', encoding='utf-8', newline='\n') as f:
        for record in records:
            if record.image is not None and record.image_path is not None:
                save_png(record.image, out_dir / record.image_path)
            f.write(json.dumps(record.to_dict(), separators=(', ', ': ')) + '\n')
            count += 1

    logger.info(f"Wrote {count} records to {jsonl_path}")
    return jsonl_path


def iter_records(path: Path) -> Iterator[DatasetRecord]:
    path = Path(path)
    with path.open('r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield DatasetRecord.from_dict(json.loads(line))
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise DataError(f"{path}:{line_number}: malformed dataset record ({exc})") from exc


def read_records(path: Path) -> List[DatasetRecord]:
    records = list(iter_records(path))
    logger.debug(f"Read {len(records)} records from {path}")
    return records

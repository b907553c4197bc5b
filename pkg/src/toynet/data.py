"""Training examples and padded batches"""
from __future__ import annotations

from dataclasses import dataclass
import logging
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import torch

from ..datagen import DatasetRecord, ink, load_png
from ..numstream import TokenStream, Vocabulary, encode, slot_families
from ..utils.errors import ConfigError, ContextOverflow, SlotMismatch
from .scaling import SlotScaler


logger = logging.getLogger(__name__)


@dataclass
class Batch:
    """
    images: (B, H, W) ink rasters
    ids: (B, T) padded token ids, [BOS] first
    slot_values: (B, T) standardized numeric targets at [NUM] positions, 0 elsewhere
    slot_mask: (B, T) True at [NUM] positions
    """
    images: torch.Tensor
    ids: torch.Tensor
    slot_values: torch.Tensor
    slot_mask: torch.Tensor

    def __len__(self) -> int:
        return self.ids.shape[0]

    def to(self, dtype: torch.dtype) -> 'Batch':
        return Batch(self.images.to(dtype), self.ids, self.slot_values.to(dtype), self.slot_mask)


@dataclass
class Examples:
    """Encoded streams with their images, in record order"""
    streams: List[TokenStream]
    images: np.ndarray
    records: List[DatasetRecord]

    def __len__(self) -> int:
        return len(self.streams)

    def subset(self, indices: Sequence[int]) -> 'Examples':
        return Examples([self.streams[i] for i in indices], self.images[list(indices)],
                        [self.records[i] for i in indices])


def load_images(records: Sequence[DatasetRecord], dataset_dir: Path) -> np.ndarray:
    """Ink rasters (N, H, W) in [0, 1] for records with an image"""
    rasters = []
    for record in records:
        if record.image_path is None:
            raise ConfigError(f"Record {record.index} has no image; the toy model trains on image tasks only")
        rasters.append(ink(load_png(Path(dataset_dir) / record.image_path)).astype(np.float32))
    return np.stack(rasters) if rasters else np.zeros((0, 0, 0), dtype=np.float32)


def prepare_examples(records: Sequence[DatasetRecord], vocab: Vocabulary, mode: str,
                     dataset_dir: Path, images: Optional[np.ndarray] = None) -> Examples:
    """
    Encode every record's program; float mode stores the exact sampled reals in the slots
    """
    streams = []
    for record in records:
        values = record.values if mode == 'float' and record.values else None
        streams.append(encode(record.program, vocab, mode, values=values))
    if images is None:
        images = load_images(records, dataset_dir)
    logger.debug(f"Prepared {len(streams)} {mode}-mode examples")
    return Examples(streams, images, list(records))


def collate(streams: Sequence[TokenStream], images: np.ndarray, vocab: Vocabulary,
            scaler: Optional[SlotScaler], context_len: int,
            dtype: torch.dtype = torch.float32) -> Batch:
    """
    Pad streams to a common length and standardize their slot values

    Raises:
        SlotMismatch: If a float-mode stream's slots do not sit on its [NUM] ids
        ContextOverflow: If a stream does not fit the context
    """
    longest = max(len(s) for s in streams)
    if longest > context_len + 1:
        raise ContextOverflow(f"Stream of {longest} tokens does not fit context_len {context_len}")

    ids = torch.full((len(streams), longest), vocab.pad_id, dtype=torch.long)
    slot_values = torch.zeros((len(streams), longest), dtype=dtype)
    slot_mask = torch.zeros((len(streams), longest), dtype=torch.bool)

    for row, stream in enumerate(streams):
        num_positions = [p for p, t in enumerate(stream.ids) if t == vocab.num_id]
        if stream.mode == 'float' and num_positions != stream.positions:
            raise SlotMismatch(
                f"Stream has [NUM] at {num_positions} but slots at {stream.positions}"
            )
        ids[row, :len(stream)] = torch.tensor(stream.ids, dtype=torch.long)
        if stream.numeric_slots:
            values = stream.values
            if scaler is not None:
                values = scaler.transform(values, slot_families(stream.ids, vocab))
            positions = torch.tensor(stream.positions, dtype=torch.long)
            slot_values[row, positions] = torch.tensor(values, dtype=dtype)
            slot_mask[row, positions] = True

    return Batch(torch.as_tensor(np.asarray(images), dtype=dtype), ids, slot_values, slot_mask)

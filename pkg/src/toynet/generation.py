"""Greedy decoding with two-pass number substitution"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math
from typing import List, Optional, Sequence

import numpy as np
import torch

from ..dsl import ProgramText, parse_program
from ..numstream import Vocabulary, decode_two_pass, encode, slot_families
from ..scene.model import SceneProgram
from ..utils.errors import DataError, MalformedGeneration
from .model import ToyDerenderer
from .scaling import SlotScaler


logger = logging.getLogger(__name__)


@dataclass
class GenerationResult:
    ids: List[int]
    numbers: List[float] = field(default_factory=list)
    text: Optional[ProgramText] = None
    scene: Optional[SceneProgram] = None
    error: Optional[str] = None

    @property
    def malformed(self) -> bool:
        return self.error is not None

    @property
    def program(self) -> str:
        return str(self.text) if self.text is not None else ''


@torch.no_grad()
def generate_ids(model: ToyDerenderer, images: torch.Tensor, vocab: Vocabulary,
                 scaler: Optional[SlotScaler] = None) -> tuple[List[List[int]], List[List[float]]]:
    """
    Argmax decoding of a batch until [EOS] or the context limit

    Whenever [NUM] is chosen, the numeric head's output at the same step becomes
    that slot's value (de-standardized with its slot family).

    Returns:
        Generated ids (starting with [BOS]) and collected numbers per image
    """
    model.eval()
    batch = images.shape[0]
    limit = model.config.context_len
    ids = torch.full((batch, 1), vocab.bos_id, dtype=torch.long)
    finished = [False] * batch
    numbers: List[List[float]] = [[] for _ in range(batch)]

    while ids.shape[1] < limit + 1 and not all(finished):
        logits, numeric = model(images, ids)
        next_ids = logits[:, -1, :].argmax(dim=-1)
        values = numeric[:, -1]
        column = torch.full((batch,), vocab.pad_id, dtype=torch.long)
        for row in range(batch):
            if finished[row]:
                continue
            token = int(next_ids[row])
            column[row] = token
            if token == vocab.num_id:
                family = slot_families(ids[row].tolist() + [token], vocab)[-1]
                value = float(values[row])
                numbers[row].append(scaler.inverse_one(value, family) if scaler else value)
            elif token == vocab.eos_id:
                finished[row] = True
        ids = torch.cat([ids, column.unsqueeze(1)], dim=1)

    sequences = []
    for row in range(batch):
        sequence = ids[row].tolist()
        if vocab.eos_id in sequence:
            sequence = sequence[:sequence.index(vocab.eos_id) + 1]
        sequences.append(sequence)
    return sequences, numbers


def finish_generation(sequence: Sequence[int], numbers: Sequence[float], vocab: Vocabulary,
                      preset) -> GenerationResult:
    """Substitute numbers and parse; failures are recorded on the result, not raised"""
    result = GenerationResult(ids=list(sequence), numbers=list(numbers))
    if vocab.eos_id not in sequence:
        result.error = 'no [EOS] before the context limit'
    try:
        if not all(math.isfinite(v) for v in numbers):
            raise MalformedGeneration("numeric head produced a non-finite value")
        result.text = decode_two_pass(sequence, numbers, vocab)
        if vocab.num_id not in sequence:
            # spelled-out digits: the values are the literals of the text
            result.numbers = list(encode(result.text, vocab, add_special=False).values)
        result.scene = parse_program(result.text, preset.catalog, preset.parse_options())
    except DataError as exc:
        result.error = str(exc)
    if result.error is not None:
        result.scene = None
    return result


def generate_batch(model: ToyDerenderer, images: np.ndarray, vocab: Vocabulary,
                   scaler: Optional[SlotScaler], preset, batch_size: int = 256) -> List[GenerationResult]:
    """Greedy decode a stack of ink rasters (N, H, W); malformed outputs are kept and flagged"""
    results: List[GenerationResult] = []
    dtype = next(model.parameters()).dtype
    for start in range(0, len(images), batch_size):
        chunk = torch.as_tensor(np.asarray(images[start:start + batch_size]), dtype=dtype)
        sequences, numbers = generate_ids(model, chunk, vocab, scaler)
        results.extend(finish_generation(s, n, vocab, preset) for s, n in zip(sequences, numbers))
    malformed = sum(r.malformed for r in results)
    if malformed:
        logger.warning(f"{malformed}/{len(results)} generations were malformed")
    return results


def greedy_generate(model: ToyDerenderer, image: np.ndarray, vocab: Vocabulary,
                    scaler: Optional[SlotScaler], preset) -> ProgramText:
    """
    Decode one image to program text

    Raises:
        MalformedGeneration: If the output does not parse as a program
    """
    result = generate_batch(model, np.asarray(image)[None], vocab, scaler, preset)[0]
    if result.malformed:
        raise MalformedGeneration(f"Generated program is malformed: {result.error}")
    return result.text

"""Versioned binary checkpoints

Layout: magic b"DRNT", format version (uint32 LE), header length (uint32 LE),
UTF-8 JSON header, then raw little-endian arrays in header order: every
parameter, followed by the Adam first and second moments when present.
"""
from __future__ import annotations

from dataclasses import dataclass
import json
import logging
import os
from pathlib import Path
import struct
from typing import Any, Dict, List, Optional

import numpy as np
import torch

from ..numstream import Vocabulary
from ..utils.errors import DataError
from .config import ModelConfig, TrainConfig
from .model import ToyDerenderer, build_model
from .scaling import SlotScaler


logger = logging.getLogger(__name__)

MAGIC = b'DRNT'
FORMAT_VERSION = 1
PREAMBLE = struct.Struct('<4sII')
DTYPES = {torch.float32: '<f4', torch.float64: '<f8'}


@dataclass
class Checkpoint:
    model: ToyDerenderer
    vocab: Vocabulary
    scaler: SlotScaler
    step: int
    train_config: Optional[TrainConfig] = None
    optimizer_state: Optional[Dict[str, List[np.ndarray]]] = None
    task: str = 'dot2d'


def _adam_moments(optimizer: Optional[torch.optim.Optimizer], params: List[torch.nn.Parameter]):
    """Per-parameter Adam moments; zeros and step 0 for parameters the loss never reached"""
    if optimizer is None or not any('exp_avg' in optimizer.state.get(p, {}) for p in params):
        return None
    moments = {'exp_avg': [], 'exp_avg_sq': [], 'step': []}
    for param in params:
        state = optimizer.state.get(param, {})
        if 'exp_avg' not in state:
            zeros = np.zeros(tuple(param.shape), dtype=np.float64)
            moments['exp_avg'].append(zeros)
            moments['exp_avg_sq'].append(zeros)
            moments['step'].append(0.0)
            continue
        moments['exp_avg'].append(state['exp_avg'].detach().cpu().numpy())
        moments['exp_avg_sq'].append(state['exp_avg_sq'].detach().cpu().numpy())
        moments['step'].append(float(state['step']))
    return moments


def restore_optimizer(optimizer: torch.optim.Optimizer, model: ToyDerenderer,
                      optimizer_state: Dict[str, List[Any]]) -> None:
    """
    Load saved Adam moments into an optimizer built over the checkpoint's model

    Raises:
        DataError: If the saved moments do not line up with the model parameters
    """
    params = [p for _, p in model.named_parameters()]
    if len(optimizer_state['exp_avg']) != len(params):
        raise DataError(f"Checkpoint holds moments for {len(optimizer_state['exp_avg'])} tensors, "
                        f"model has {len(params)}")
    for param, avg, avg_sq, steps in zip(params, optimizer_state['exp_avg'], optimizer_state['exp_avg_sq'],
                                         optimizer_state['steps']):
        if steps == 0:
            continue
        if tuple(avg.shape) != tuple(param.shape):
            raise DataError(f"Moment shape {tuple(avg.shape)} does not match parameter {tuple(param.shape)}")
        optimizer.state[param] = {
            'step': torch.tensor(float(steps), dtype=torch.get_default_dtype()),
            'exp_avg': torch.from_numpy(np.array(avg, dtype=np.float64)).to(param.dtype),
            'exp_avg_sq': torch.from_numpy(np.array(avg_sq, dtype=np.float64)).to(param.dtype),
        }
    logger.debug(f"Restored Adam moments for {sum(s > 0 for s in optimizer_state['steps'])} tensors")


def save_checkpoint(path: Path, model: ToyDerenderer, vocab: Vocabulary, scaler: SlotScaler,
                    step: int, train_config: Optional[TrainConfig] = None,
                    optimizer: Optional[torch.optim.Optimizer] = None, task: str = 'dot2d') -> Path:
    """
    Write a checkpoint atomically; identical inputs give identical bytes
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    named = list(model.named_parameters())
    dtype = named[0][1].dtype
    moments = _adam_moments(optimizer, [p for _, p in named])

    header = {
        'task': task,
        'model_config': model.config.to_dict(),
        'train_config': train_config.to_dict() if train_config else None,
        'vocab': vocab.to_list(),
        'scaler': scaler.to_dict(),
        'step': int(step),
        'dtype': DTYPES[dtype],
        'parameters': [{'name': n, 'shape': list(p.shape)} for n, p in named],
        'adam': {'steps': moments['step']} if moments else None,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(',', ':')).encode('utf-8')

    tmp_path = path.with_name(path.name + '.tmp')
    with tmp_path.open('wb') as f:
        f.write(PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
        f.write(header_bytes)
        for _, param in named:
            f.write(param.detach().cpu().numpy().astype(DTYPES[dtype]).tobytes())
        if moments:
            for key in ('exp_avg', 'exp_avg_sq'):
                for array in moments[key]:
                    f.write(array.astype(DTYPES[dtype]).tobytes())
    os.replace(tmp_path, path)
    logger.info(f"Checkpoint written: {path} (step {step})")
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    """
    Raises:
        DataError: If the file is not a checkpoint of a supported version
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < PREAMBLE.size:
        raise DataError(f"{path} is too short to be a checkpoint")
    magic, version, header_len = PREAMBLE.unpack_from(data, 0)
    if magic != MAGIC:
        raise DataError(f"{path} is not a checkpoint (bad magic {magic!r})")
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")

    offset = PREAMBLE.size
    header: Dict[str, Any] = json.loads(data[offset:offset + header_len].decode('utf-8'))
    offset += header_len
    dtype = np.dtype(header['dtype'])

    def read_array(shape: List[int]) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * dtype.itemsize
        if end > len(data):
            raise DataError(f"{path} is truncated")
        array = np.frombuffer(data, dtype=dtype, count=count, offset=offset).reshape(shape)
        offset = end
        return array

    model = build_model(ModelConfig.from_dict(header['model_config']))
    if dtype == np.dtype('<f8'):
        model = model.double()
    state = {}
    for entry in header['parameters']:
        state[entry['name']] = torch.from_numpy(read_array(entry['shape']).astype(dtype.newbyteorder('=')))
    model.load_state_dict(state, strict=True)

    optimizer_state = None
    if header.get('adam'):
        optimizer_state = {'steps': header['adam']['steps']}
        for key in ('exp_avg', 'exp_avg_sq'):
            optimizer_state[key] = [read_array(e['shape']).copy() for e in header['parameters']]

    train_config = TrainConfig(**header['train_config']) if header.get('train_config') else None
    logger.debug(f"Loaded checkpoint {path} (step {header['step']})")
    return Checkpoint(
        model=model,
        vocab=Vocabulary(tuple(header['vocab'])),
        scaler=SlotScaler.from_dict(header['scaler']),
        step=int(header['step']),
        train_config=train_config,
        optimizer_state=optimizer_state,
        task=header.get('task', 'dot2d'),
    )

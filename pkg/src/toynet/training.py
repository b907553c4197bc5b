"""Deterministic training loop with Adam, a cosine schedule and a divergence guard"""
from __future__ import annotations

from dataclasses import dataclass
import logging
import math
import time
from typing import Any, Dict, List, Optional
import warnings

import numpy as np
import pandas as pd
import torch

from ..numstream import Vocabulary
from ..utils.errors import ConfigError, DivergenceDetected
from .checkpoint import Checkpoint, restore_optimizer
from .config import ModelConfig, TrainConfig
from .data import Examples, collate
from .generation import generate_batch
from .losses import compute_loss
from .model import ToyDerenderer, build_model
from .scaling import SlotScaler


logger = logging.getLogger(__name__)

TRACE_COLUMNS = ['step', 'ce', 'mse', 'val_metric']


@dataclass
class TrainResult:
    model: ToyDerenderer
    scaler: SlotScaler
    optimizer: torch.optim.Optimizer
    trace: pd.DataFrame
    step: int


def configure_determinism(seed: int) -> None:
    """Seed torch and pin it to one thread and a fixed reduction order"""
    torch.manual_seed(seed)
    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)


def split_validation(n: int, config: TrainConfig) -> tuple[np.ndarray, np.ndarray]:
    """The last val_fraction of the records (capped at val_limit) become validation"""
    n_val = min(int(round(n * config.val_fraction)), config.val_limit) if n > 1 else 0
    indices = np.arange(n)
    return indices[:n - n_val], indices[n - n_val:]


def build_optimizer(model: ToyDerenderer, config: TrainConfig) -> torch.optim.Adam:
    groups = model.parameter_groups()
    return torch.optim.Adam([
        {'params': groups['body'], 'lr': config.learning_rate},
        {'params': groups['numeric_head'],
         'lr': config.learning_rate * config.numeric_head_lr_multiplier},
    ])


def validation_mse(model: ToyDerenderer, examples: Examples, vocab: Vocabulary,
                   scaler: SlotScaler, preset) -> float:
    """
    Mean squared error of greedily decoded numbers against the exact targets

    In char mode the decoded numbers are the literals of the generated text.
    Generations that are malformed or carry the wrong number of values are left
    out; NaN when none remains.
    """
    if len(examples) == 0:
        return float('nan')
    results = generate_batch(model, examples.images, vocab, scaler, preset)
    errors: List[float] = []
    for result, record in zip(results, examples.records):
        truth = record.values
        if result.malformed or len(result.numbers) != len(truth):
            continue
        errors.extend((p - t) ** 2 for p, t in zip(result.numbers, truth))
    model.train()
    return float(np.mean(errors)) if errors else float('nan')


def _check_resume(resume: Checkpoint, model_config: ModelConfig, train_config: TrainConfig,
                  vocab: Vocabulary) -> ModelConfig:
    """The checkpoint's architecture, once it is known to fit this run"""
    if resume.model.config.mode != model_config.mode:
        raise ConfigError(f"Checkpoint is a {resume.model.config.mode}-mode model, run is {model_config.mode}")
    if resume.vocab != vocab:
        raise ConfigError("Checkpoint vocabulary differs from the training vocabulary")
    if resume.step >= train_config.steps:
        raise ConfigError(f"Checkpoint is already at step {resume.step} of {train_config.steps}")
    return resume.model.config


def _replay(steps: int, rng: np.random.Generator, schedule, n_train: int, batch_size: int) -> None:
    """Advance the batch generator and the schedule past steps already trained"""
    for _ in range(steps):
        rng.integers(0, n_train, size=min(batch_size, n_train))
    with warnings.catch_warnings():
        # no optimizer step precedes these schedule steps
        warnings.simplefilter('ignore', UserWarning)
        for _ in range(steps):
            schedule.step()


def train(model_config: ModelConfig, train_config: TrainConfig, examples: Examples,
          vocab: Vocabulary, preset, resume: Optional[Checkpoint] = None) -> TrainResult:
    """
    Train a model on encoded examples

    Minibatches are drawn with a seeded generator and torch runs on one thread, so
    reruns with the same seed reproduce the loss trace and the parameters bit for
    bit. A resumed run continues from the checkpoint's weights, scaler and Adam
    moments up to train_config.steps, replaying the batch draws and the learning
    rate schedule of the steps already taken.

    Args:
        model_config: Architecture
        train_config: Optimization settings and seed
        examples: Encoded training examples with their images
        vocab: Vocabulary the streams were encoded with
        preset: Task preset used to parse validation generations
        resume: Checkpoint to continue from (same mode and vocabulary)

    Returns:
        TrainResult with the trained model, scaler, optimizer and trace

    Raises:
        ConfigError: On an empty training set or a checkpoint that does not fit the run
        DivergenceDetected: If a loss or a parameter becomes non-finite
    """
    if resume is not None:
        model_config = _check_resume(resume, model_config, train_config, vocab)
    if len(examples) == 0:
        raise ConfigError("Training set is empty")
    longest = max(len(s) for s in examples.streams)
    if longest > model_config.context_len + 1:
        raise ConfigError(f"Streams of {longest} tokens do not fit context_len {model_config.context_len}")

    configure_determinism(train_config.seed)
    train_idx, val_idx = split_validation(len(examples), train_config)
    train_set, val_set = examples.subset(train_idx), examples.subset(val_idx)
    if resume is not None:
        model, scaler = resume.model, resume.scaler
    else:
        model = build_model(model_config)
        scaler = SlotScaler.fit(train_set.streams, vocab) if model_config.mode == 'float' else SlotScaler()
    model.train()
    optimizer = build_optimizer(model, train_config)
    schedule = torch.optim.lr_scheduler.CosineAnnealingLR(
        optimizer, T_max=train_config.steps, eta_min=train_config.min_learning_rate
    )
    rng = np.random.default_rng(train_config.seed)
    first_step = 1
    if resume is not None:
        if resume.optimizer_state is not None:
            restore_optimizer(optimizer, model, resume.optimizer_state)
        first_step = resume.step + 1
        _replay(first_step - 1, rng, schedule, len(train_set), train_config.batch_size)
        logger.info(f"Resuming from step {resume.step}")

    logger.info(
        f"Training {model_config.mode}-mode model: {model.count_parameters():,} parameters, "
        f"{len(train_set)} train / {len(val_set)} val examples, {train_config.steps} steps"
    )
    rows: List[Dict[str, Any]] = []
    last_finite = first_step - 1
    start = time.time()

    for step in range(first_step, train_config.steps + 1):
        picks = rng.integers(0, len(train_set), size=min(train_config.batch_size, len(train_set)))
        batch = collate([train_set.streams[i] for i in picks], train_set.images[picks], vocab,
                        scaler, model_config.context_len)

        parts = compute_loss(model, batch, train_config.w_ce, train_config.w_mse, vocab.pad_id)
        if not torch.isfinite(parts.total):
            logger.error(f"Non-finite loss at step {step}; last finite step {last_finite}")
            raise DivergenceDetected(f"Loss became non-finite at step {step}", step, last_finite)

        optimizer.zero_grad(set_to_none=True)
        parts.total.backward()
        optimizer.step()
        schedule.step()

        if not all(torch.isfinite(p).all() for p in model.parameters()):
            logger.error(f"Non-finite parameters after step {step}; last finite step {last_finite}")
            raise DivergenceDetected(f"Parameters became non-finite at step {step}", step, last_finite)
        last_finite = step

        val_metric = math.nan
        if step % train_config.eval_every == 0 or step == train_config.steps:
            val_metric = validation_mse(model, val_set, vocab, scaler, preset)
            logger.info(
                f"step {step:>6}  ce {parts.ce.item():.5f}  mse {parts.mse.item():.5f}  "
                f"val {val_metric:.6f}  ({time.time() - start:.1f}s)"
            )
        rows.append({'step': step, 'ce': float(parts.ce.item()), 'mse': float(parts.mse.item()),
                     'val_metric': val_metric})

    trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    return TrainResult(model=model, scaler=scaler, optimizer=optimizer, trace=trace,
                       step=train_config.steps)


def write_trace(trace: pd.DataFrame, path) -> None:
    trace.to_csv(path, index=False, float_format='%.8g', lineterminator='\n')

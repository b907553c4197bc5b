"""Joint next-token cross-entropy and numeric MSE, plus a finite-difference gradient check"""
import copy
from dataclasses import dataclass
import logging
from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F

from .data import Batch
from .model import ToyDerenderer


logger = logging.getLogger(__name__)


@dataclass
class LossParts:
    total: torch.Tensor
    ce: torch.Tensor
    mse: torch.Tensor


def compute_loss(model: ToyDerenderer, batch: Batch, w_ce: float = 1.0, w_mse: float = 1.0,
                 pad_id: Optional[int] = None) -> LossParts:
    """
    Loss of a batch under teacher forcing

    ce is the mean cross-entropy over every non-pad next-token target, the [NUM]
    token included. mse is the mean squared error over numeric-slot targets only;
    a batch without slots (char mode) has mse = 0 and leaves the numeric head out
    of the graph.
    """
    inputs = batch.ids[:, :-1]
    targets = batch.ids[:, 1:]
    logits, numeric = model(batch.images, inputs)

    if pad_id is None:
        valid = torch.ones_like(targets, dtype=torch.bool)
    else:
        valid = targets != pad_id
    ce = F.cross_entropy(logits[valid], targets[valid])

    slot_mask = batch.slot_mask[:, 1:]
    if slot_mask.any():
        errors = numeric[slot_mask] - batch.slot_values[:, 1:][slot_mask]
        mse = errors.pow(2).mean()
    else:
        mse = ce.new_zeros(())

    return LossParts(total=w_ce * ce + w_mse * mse, ce=ce, mse=mse)


def _selected_parameters(model: ToyDerenderer, n_params: int, rng: np.random.Generator) -> list:
    """One entry from every parameter tensor, then uniform draws over all entries"""
    named = list(model.named_parameters())
    picks = [(index, int(rng.integers(p.numel()))) for index, (_, p) in enumerate(named)]
    sizes = np.array([p.numel() for _, p in named])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    while len(picks) < n_params:
        flat = int(rng.integers(offsets[-1]))
        index = int(np.searchsorted(offsets, flat, side='right') - 1)
        picks.append((index, flat - int(offsets[index])))
    return [(named[i][0], named[i][1], flat) for i, flat in picks]


def grad_check(model: ToyDerenderer, batch: Batch, epsilon: float = 1e-5, n_params: int = 200,
               seed: int = 0, w_ce: float = 1.0, w_mse: float = 1.0, pad_id: Optional[int] = None) -> float:
    """
    Compare analytic gradients with central finite differences in double precision

    Each numeric derivative is a Richardson combination of central differences at
    epsilon and epsilon / 2. Parameters the loss does not reach count as a zero
    analytic gradient.

    Args:
        model: Model to check (copied, not modified)
        batch: Batch to evaluate
        epsilon: Finite-difference step in [1e-7, 1e-4]
        n_params: Number of parameter entries to check (at least one per tensor)
        seed: Seed of the entry selection

    Returns:
        Max relative error |a - n| / max(|a|, |n|, 1e-8)
    """
    if not 1e-7 <= epsilon <= 1e-4:
        raise ValueError(f"epsilon must be in [1e-7, 1e-4], got {epsilon}")

    model = copy.deepcopy(model).double()
    model.eval()
    batch = batch.to(torch.float64)

    model.zero_grad(set_to_none=True)
    compute_loss(model, batch, w_ce, w_mse, pad_id).total.backward()

    def loss_value() -> float:
        return float(compute_loss(model, batch, w_ce, w_mse, pad_id).total.item())

    worst = 0.0
    worst_name = ''
    rng = np.random.default_rng(seed)
    with torch.no_grad():
        for name, param, flat in _selected_parameters(model, n_params, rng):
            view = param.view(-1)
            analytic = float(param.grad.view(-1)[flat].item()) if param.grad is not None else 0.0
            original = float(view[flat].item())

            def central(step: float) -> float:
                view[flat] = original + step
                plus = loss_value()
                view[flat] = original - step
                minus = loss_value()
                view[flat] = original
                return (plus - minus) / (2.0 * step)

            numeric = (4.0 * central(epsilon / 2.0) - central(epsilon)) / 3.0
            error = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
            if error > worst:
                worst, worst_name = error, f"{name}[{flat}]"

    logger.debug(f"Gradient check: max relative error {worst:.3e} at {worst_name or '-'}")
    return worst

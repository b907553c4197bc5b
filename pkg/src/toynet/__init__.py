"""Toy image-to-program model with a numeric regression head"""
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ModelConfig, TrainConfig
from .data import Batch, Examples, collate, load_images, prepare_examples
from .generation import GenerationResult, generate_batch, greedy_generate
from .losses import LossParts, compute_loss, grad_check
from .model import NumericHead, ToyDerenderer, build_model
from .scaling import SlotScaler
from .training import TRACE_COLUMNS, TrainResult, split_validation, train, write_trace

__all__ = [
    'Batch', 'Checkpoint', 'Examples', 'GenerationResult', 'LossParts', 'ModelConfig', 'NumericHead',
    'SlotScaler', 'TRACE_COLUMNS', 'ToyDerenderer', 'TrainConfig', 'TrainResult', 'build_model',
    'collate', 'compute_loss', 'generate_batch', 'grad_check', 'greedy_generate', 'load_checkpoint',
    'load_images', 'prepare_examples', 'save_checkpoint', 'split_validation', 'train', 'write_trace',
]

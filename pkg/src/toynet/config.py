"""Model and training configuration"""
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional

from ..utils.errors import ConfigError


MODES = ('float', 'char')


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    mode: str = 'float'
    image_size: int = 64
    encoder: str = 'raster_mlp'
    encoder_hidden: int = 256
    embed_dim: int = 128
    decoder_layers: int = 2
    heads: int = 4
    context_len: int = 64
    numeric_head_hidden: int = 128

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"Unknown decoding mode '{self.mode}'. Choose from: {', '.join(MODES)}")
        if self.encoder != 'raster_mlp':
            raise ConfigError(f"Unknown encoder '{self.encoder}'")
        if self.embed_dim % self.heads != 0:
            raise ConfigError(f"embed_dim ({self.embed_dim}) must be divisible by heads ({self.heads})")
        if self.vocab_size < 1 or self.context_len < 2:
            raise ConfigError("vocab_size must be >= 1 and context_len >= 2")

    @classmethod
    def from_config(cls, config: Dict[str, Any], vocab_size: int, mode: str) -> 'ModelConfig':
        section = config['model']
        return cls(
            vocab_size=vocab_size,
            mode=mode,
            image_size=config['datagen']['dot2d']['image_size'],
            encoder_hidden=section['encoder_hidden'],
            embed_dim=section['embed_dim'],
            decoder_layers=section['decoder_layers'],
            heads=section['heads'],
            context_len=section['context_len'],
            numeric_head_hidden=section['numeric_head_hidden'],
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'ModelConfig':
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in raw.items() if k in names})


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    steps: int = 3000
    learning_rate: float = 1e-3
    min_learning_rate: float = 1e-5
    numeric_head_lr_multiplier: float = 10.0
    w_ce: float = 1.0
    w_mse: float = 1.0
    eval_every: int = 250
    val_fraction: float = 0.05
    val_limit: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.w_ce <= 0 or self.w_mse <= 0:
            raise ConfigError("Loss weights w_ce and w_mse must be strictly positive")
        if self.batch_size < 1 or self.steps < 1:
            raise ConfigError("batch_size and steps must be >= 1")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigError(f"val_fraction must be in [0, 1), got {self.val_fraction}")

    @classmethod
    def from_config(cls, config: Dict[str, Any], seed: int, steps: Optional[int] = None) -> 'TrainConfig':
        section = dict(config['train'])
        if steps is not None:
            section['steps'] = steps
        names = {f.name for f in fields(cls)}
        return cls(seed=seed, **{k: v for k, v in section.items() if k in names and k != 'seed'})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

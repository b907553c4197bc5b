"""Raster encoder, causal decoder and the two output heads"""
import logging
import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..utils.errors import ContextOverflow
from .config import ModelConfig


logger = logging.getLogger(__name__)


class RMSNorm(nn.Module):
    """Root-mean-square norm with a learned gain"""

    def __init__(self, dim: int, eps: float = 1e-6):
        super().__init__()
        self.eps = eps
        self.weight = nn.Parameter(torch.ones(dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        rms = torch.sqrt(x.pow(2).mean(dim=-1, keepdim=True) + self.eps)
        return x / rms * self.weight


class CausalSelfAttention(nn.Module):

    def __init__(self, embed_dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = embed_dim // heads
        self.qkv = nn.Linear(embed_dim, 3 * embed_dim)
        self.proj = nn.Linear(embed_dim, embed_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, length, dim = x.shape
        q, k, v = self.qkv(x).split(dim, dim=-1)
        q = q.view(batch, length, self.heads, self.head_dim).transpose(1, 2)
        k = k.view(batch, length, self.heads, self.head_dim).transpose(1, 2)
        v = v.view(batch, length, self.heads, self.head_dim).transpose(1, 2)

        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        future = torch.triu(torch.ones(length, length, dtype=torch.bool, device=x.device), diagonal=1)
        scores = scores.masked_fill(future, float('-inf'))
        attended = torch.softmax(scores, dim=-1) @ v
        return self.proj(attended.transpose(1, 2).reshape(batch, length, dim))


class DecoderBlock(nn.Module):
    """Pre-norm attention and feed-forward sublayers with residuals"""

    def __init__(self, embed_dim: int, heads: int):
        super().__init__()
        self.attn_norm = nn.LayerNorm(embed_dim)
        self.attn = CausalSelfAttention(embed_dim, heads)
        self.mlp_norm = nn.LayerNorm(embed_dim)
        self.mlp = nn.Sequential(
            nn.Linear(embed_dim, 4 * embed_dim),
            nn.GELU(),
            nn.Linear(4 * embed_dim, embed_dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.attn_norm(x))
        return x + self.mlp(self.mlp_norm(x))


class RasterEncoder(nn.Module):
    """Two-layer perceptron over the flattened ink raster, producing one prefix embedding"""

    def __init__(self, image_size: int, hidden: int, embed_dim: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Flatten(),
            nn.Linear(image_size * image_size, hidden),
            nn.GELU(),
            nn.Linear(hidden, embed_dim),
        )

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.net(images).unsqueeze(1)


class NumericHead(nn.Module):
    """tanh -> linear -> GELU -> linear, one scalar per position"""

    def __init__(self, embed_dim: int, hidden: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Tanh(),
            nn.Linear(embed_dim, hidden),
            nn.GELU(),
            nn.Linear(hidden, 1),
        )

    @property
    def output_layer(self) -> nn.Linear:
        return self.net[3]

    def forward(self, hidden: torch.Tensor) -> torch.Tensor:
        return self.net(hidden).squeeze(-1)


class ToyDerenderer(nn.Module):
    """
    Image-conditioned autoregressive decoder with a token head and a numeric head

    The image embedding is prepended to the token embeddings. The output at token
    position t predicts token t+1; its numeric value is the number for that next
    token when it is [NUM]. Both heads read the same RMS-normed final state.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d = config.embed_dim
        self.encoder = RasterEncoder(config.image_size, config.encoder_hidden, d)
        self.token_embedding = nn.Embedding(config.vocab_size, d)
        self.position_embedding = nn.Embedding(config.context_len + 1, d)
        self.blocks = nn.ModuleList(DecoderBlock(d, config.heads) for _ in range(config.decoder_layers))
        self.final_norm = RMSNorm(d)
        self.token_head = nn.Linear(d, config.vocab_size)
        self.numeric_head = NumericHead(d, config.numeric_head_hidden)
        self.apply(self._init_weights)

    @staticmethod
    def _init_weights(module: nn.Module) -> None:
        if isinstance(module, nn.Linear):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)
            if module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, nn.Embedding):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)

    def parameter_groups(self) -> dict:
        """Parameters split into the body and the numeric head"""
        head = [p for p in self.numeric_head.parameters()]
        head_ids = {id(p) for p in head}
        body = [p for p in self.parameters() if id(p) not in head_ids]
        return {'body': body, 'numeric_head': head}

    def forward(self, images: torch.Tensor, ids: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """
        Args:
            images: (B, H, W) ink rasters
            ids: (B, T) token ids, T <= context_len

        Returns:
            (B, T, vocab) next-token logits and (B, T) numeric predictions

        Raises:
            ContextOverflow: If T exceeds context_len
        """
        batch, length = ids.shape
        if length > self.config.context_len:
            raise ContextOverflow(f"Sequence of {length} tokens exceeds context_len {self.config.context_len}")

        prefix = self.encoder(images.to(self.token_embedding.weight.dtype))
        tokens = self.token_embedding(ids)
        x = torch.cat([prefix, tokens], dim=1)
        positions = torch.arange(length + 1, device=ids.device)
        x = x + self.position_embedding(positions).unsqueeze(0)
        for block in self.blocks:
            x = block(x)
        hidden = self.final_norm(x[:, 1:, :])
        return self.token_head(hidden), self.numeric_head(hidden)

    def count_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())


def build_model(config: ModelConfig) -> ToyDerenderer:
    model = ToyDerenderer(config)
    logger.debug(f"Built model with {model.count_parameters():,} parameters ({config.mode} mode)")
    return model

"""Token vocabulary for program text"""
from __future__ import annotations

from dataclasses import dataclass
import json
import logging
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping

from ..dsl import KEYS
from ..scene.catalog import AttributeCatalog


logger = logging.getLogger(__name__)

NUM = '[NUM]'
BOS = '[BOS]'
EOS = '[EOS]'
PAD = '[PAD]'
SPECIAL_TOKENS = (NUM, BOS, EOS, PAD)
MODES = ('float', 'char')

STRUCTURAL_TOKENS = ('(', ')', ',', '=', "'", ' ', '\n')
NUMERIC_CHARS = tuple('0123456789') + ('.', '-')
CALL_WORDS = ('add',) + KEYS


@dataclass(frozen=True, eq=False)
class Vocabulary:
    """Dense, stable token ids; ids follow the sorted token list"""
    tokens: tuple[str, ...]

    def __post_init__(self):
        tokens = tuple(self.tokens)
        if len(set(tokens)) != len(tokens):
            raise ValueError("Vocabulary tokens must be unique")
        for special in SPECIAL_TOKENS:
            if special not in tokens:
                raise ValueError(f"Vocabulary is missing {special}")
        object.__setattr__(self, 'tokens', tokens)
        object.__setattr__(self, '_ids', MappingProxyType({t: i for i, t in enumerate(tokens)}))
        object.__setattr__(self, 'max_token_length',
                           max(len(t) for t in tokens if t not in SPECIAL_TOKENS))

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def __hash__(self) -> int:
        return hash(self.tokens)

    @property
    def ids(self) -> Mapping[str, int]:
        return self._ids

    def id_of(self, token: str) -> int:
        return self._ids[token]

    def token_of(self, token_id: int) -> str:
        return self.tokens[token_id]

    @property
    def num_id(self) -> int:
        return self._ids[NUM]

    @property
    def bos_id(self) -> int:
        return self._ids[BOS]

    @property
    def eos_id(self) -> int:
        return self._ids[EOS]

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def key_ids(self) -> frozenset[int]:
        return frozenset(self._ids[k] for k in KEYS if k in self._ids)

    def to_list(self) -> List[str]:
        return list(self.tokens)

    def save(self, path: Path) -> None:
        with Path(path).open('w', encoding='utf-8') as f:
            json.dump(self.to_list(), f, ensure_ascii=False)

    @classmethod
    def load(cls, path: Path) -> 'Vocabulary':
        with Path(path).open('r', encoding='utf-8') as f:
            return cls(tuple(json.load(f)))


def build_vocabulary(catalog: AttributeCatalog, mode: str = 'float',
                     extra_words: Iterable[str] = ()) -> Vocabulary:
    """
    Vocabulary over a catalog: every canonical name and synonym as one token,
    the call words, structural characters, digit characters and special tokens

    The same vocabulary serves both decoding modes; char-mode streams simply never
    use [NUM].
    """
    if mode not in MODES:
        raise ValueError(f"Unknown decoding mode: {mode}")
    words: Dict[str, None] = {}
    for token in (*catalog.terms(), *extra_words, *CALL_WORDS, *STRUCTURAL_TOKENS,
                  *NUMERIC_CHARS, *SPECIAL_TOKENS):
        words[token] = None
    vocab = Vocabulary(tuple(sorted(words)))
    logger.debug(f"Built {mode}-mode vocabulary of {len(vocab)} tokens for catalog '{catalog.name}'")
    return vocab

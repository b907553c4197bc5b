"""Per-slot-family standardization of numeric targets"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
import logging
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from ..numstream import TokenStream, Vocabulary, slot_families


logger = logging.getLogger(__name__)

MIN_STD = 1e-6


@dataclass
class SlotScaler:
    """Mean and standard deviation per slot family, fit on training streams"""
    stats: Dict[str, tuple[float, float]] = field(default_factory=dict)

    @classmethod
    def fit(cls, streams: Iterable[TokenStream], vocab: Vocabulary) -> 'SlotScaler':
        values: Dict[str, List[float]] = defaultdict(list)
        for stream in streams:
            for family, value in zip(slot_families(stream.ids, vocab), stream.values):
                values[family].append(value)
        stats = {}
        for family in sorted(values):
            array = np.asarray(values[family], dtype=np.float64)
            std = float(array.std())
            stats[family] = (float(array.mean()), std if std > MIN_STD else 1.0)
        logger.debug(f"Slot scaler fit on {len(stats)} families: {sorted(stats)}")
        return cls(stats)

    def _stat(self, family: str) -> tuple[float, float]:
        return self.stats.get(family, (0.0, 1.0))

    def transform(self, values: Sequence[float], families: Sequence[str]) -> List[float]:
        out = []
        for value, family in zip(values, families):
            mean, std = self._stat(family)
            out.append((value - mean) / std)
        return out

    def inverse(self, values: Sequence[float], families: Sequence[str]) -> List[float]:
        out = []
        for value, family in zip(values, families):
            mean, std = self._stat(family)
            out.append(value * std + mean)
        return out

    def inverse_one(self, value: float, family: str) -> float:
        mean, std = self._stat(family)
        return value * std + mean

    def to_dict(self) -> Dict[str, Any]:
        return {family: [mean, std] for family, (mean, std) in sorted(self.stats.items())}

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'SlotScaler':
        return cls({family: (float(v[0]), float(v[1])) for family, v in raw.items()})

"""Program text <-> token streams, with numbers as [NUM] slots or as digit tokens"""
from __future__ import annotations

from dataclasses import dataclass
import logging
import re
from typing import Any, Dict, List, Optional, Sequence, Union

from ..dsl import ProgramText, format_number
from ..utils.errors import SlotMismatch, UnencodableText
from .vocab import BOS, EOS, MODES, NUM, PAD, Vocabulary


logger = logging.getLogger(__name__)

NUMBER_LITERAL = re.compile(r'-?\d+(\.\d+)?')


@dataclass(frozen=True)
class TokenStream:
    """
    Token ids plus the numeric slots aligned to [NUM] positions

    numeric_slots holds (position in ids, value) with strictly increasing positions.
    Char-mode streams carry no slots and no [NUM].
    """
    ids: tuple[int, ...]
    numeric_slots: tuple[tuple[int, float], ...] = ()
    mode: str = 'float'

    def __post_init__(self):
        object.__setattr__(self, 'ids', tuple(int(i) for i in self.ids))
        object.__setattr__(self, 'numeric_slots',
                           tuple((int(p), float(v)) for p, v in self.numeric_slots))
        if self.mode not in MODES:
            raise ValueError(f"Unknown decoding mode: {self.mode}")
        positions = [p for p, _ in self.numeric_slots]
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise ValueError("Numeric slot positions must be strictly increasing")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def values(self) -> List[float]:
        return [v for _, v in self.numeric_slots]

    @property
    def positions(self) -> List[int]:
        return [p for p, _ in self.numeric_slots]

    def to_dict(self) -> Dict[str, Any]:
        return {'ids': list(self.ids), 'slots': [list(s) for s in self.numeric_slots], 'mode': self.mode}

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'TokenStream':
        return cls(ids=tuple(raw['ids']), numeric_slots=tuple(tuple(s) for s in raw.get('slots', [])),
                   mode=raw.get('mode', 'float'))


def _longest_match(text: str, start: int, vocab: Vocabulary) -> Optional[str]:
    for length in range(min(vocab.max_token_length, len(text) - start), 0, -1):
        piece = text[start:start + length]
        if piece in vocab:
            return piece
    return None


def encode(text: Union[ProgramText, str], vocab: Vocabulary, mode: str = 'float',
           values: Optional[Sequence[float]] = None, add_special: bool = True) -> TokenStream:
    """
    Tokenize program text

    Outside quotes every numeric literal becomes one [NUM] (float mode) or its
    characters (char mode); all other content is matched longest-first against
    the vocabulary.

    Args:
        text: Program text
        vocab: Vocabulary
        mode: 'float' or 'char'
        values: Exact reals to store in the float-mode slots instead of the
            literals' own values (training targets)
        add_special: Wrap the stream in [BOS] ... [EOS]

    Returns:
        TokenStream

    Raises:
        UnencodableText: If some content has no vocabulary token
        SlotMismatch: If values does not have one entry per numeric literal
    """
    if mode not in MODES:
        raise ValueError(f"Unknown decoding mode: {mode}")
    text = str(text)
    ids: List[int] = [vocab.bos_id] if add_special else []
    slots: List[tuple[int, float]] = []
    literals = 0
    in_quote = False
    i = 0

    while i < len(text):
        char = text[i]
        if char == "'":
            ids.append(vocab.id_of("'"))
            in_quote = not in_quote
            i += 1
            continue

        if not in_quote:
            number = NUMBER_LITERAL.match(text, i)
            if number:
                literal = number.group(0)
                if mode == 'float':
                    value = float(literal)
                    if values is not None:
                        if literals >= len(values):
                            raise SlotMismatch(f"Text has more numeric literals than the {len(values)} values given")
                        value = float(values[literals])
                    slots.append((len(ids), value))
                    ids.append(vocab.num_id)
                else:
                    ids.extend(vocab.id_of(c) for c in literal)
                literals += 1
                i = number.end()
                continue

        piece = _longest_match(text, i, vocab)
        if piece is None:
            context = text[max(0, i - 10):i + 10]
            raise UnencodableText(f"No vocabulary token matches at offset {i}: ...{context!r}...")
        ids.append(vocab.id_of(piece))
        i += len(piece)

    if in_quote:
        raise UnencodableText("Unterminated quoted string")
    if mode == 'float' and values is not None and literals != len(values):
        raise SlotMismatch(f"Text has {literals} numeric literals but {len(values)} values were given")
    if add_special:
        ids.append(vocab.eos_id)
    return TokenStream(tuple(ids), tuple(slots), mode)


def detokenize(ids: Sequence[int], vocab: Vocabulary) -> List[str]:
    """Token strings up to the first [EOS], without [BOS] and [PAD]"""
    pieces = []
    for token_id in ids:
        token = vocab.token_of(int(token_id))
        if token == EOS:
            break
        if token in (BOS, PAD):
            continue
        pieces.append(token)
    return pieces


def decode_two_pass(ids: Sequence[int], numbers: Sequence[float], vocab: Vocabulary) -> ProgramText:
    """
    Rebuild program text: detokenize structure, then substitute numbers at [NUM] in order

    Raises:
        SlotMismatch: If the number count differs from the [NUM] count
    """
    pieces = detokenize(ids, vocab)
    slot_count = sum(1 for piece in pieces if piece == NUM)
    if slot_count != len(numbers):
        raise SlotMismatch(f"Stream has {slot_count} [NUM] slots but {len(numbers)} numbers were given")

    values = iter(numbers)
    text = ''.join(format_number(next(values)) if piece == NUM else piece for piece in pieces)
    return ProgramText.from_string(text)


def decode(stream: TokenStream, vocab: Vocabulary) -> ProgramText:
    return decode_two_pass(stream.ids, stream.values, vocab)


def slot_families(ids: Sequence[int], vocab: Vocabulary) -> List[str]:
    """
    Family of every [NUM] in order: the key it belongs to and its index within the
    key's value, e.g. 'loc:2' for the z component or 'x:0'
    """
    key_ids = vocab.key_ids
    families: List[str] = []
    key = '?'
    index = 0
    for token_id in ids:
        token_id = int(token_id)
        if token_id in key_ids:
            key = vocab.token_of(token_id)
            index = 0
        elif token_id == vocab.num_id:
            families.append(f"{key}:{index}")
            index += 1
    return families

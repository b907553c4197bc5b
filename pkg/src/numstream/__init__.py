"""Tokenization of program text in float ([NUM] slot) and char (digit) modes"""
from .codec import TokenStream, decode, decode_two_pass, detokenize, encode, slot_families
from .vocab import BOS, EOS, MODES, NUM, PAD, Vocabulary, build_vocabulary

__all__ = [
    'BOS', 'EOS', 'MODES', 'NUM', 'PAD', 'TokenStream', 'Vocabulary', 'build_vocabulary',
    'decode', 'decode_two_pass', 'detokenize', 'encode', 'slot_families',
]

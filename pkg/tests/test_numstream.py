"""Unit tests for program tokenization in float and char modes"""
import os
import sys
import tempfile
import unittest
from pathlib import Path

# Add repository root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.datagen import generate_task, task_preset
from src.dsl import ProgramText
from src.numstream import (
    BOS,
    EOS,
    NUM,
    PAD,
    TokenStream,
    Vocabulary,
    build_vocabulary,
    decode,
    decode_two_pass,
    detokenize,
    encode,
    slot_families,
)
from src.scene import clevr_catalog, dot_catalog
from src.utils.errors import SlotMismatch, UnencodableText


class TestVocabulary(unittest.TestCase):
    """Token inventory and ids"""

    def test_contains_terms_and_specials(self):
        vocab = build_vocabulary(clevr_catalog())
        for token in ('cube', 'block', 'shiny', 'add', 'loc', 'rotation', '(', ' ', '\n', '7', '.', '-',
                      NUM, BOS, EOS, PAD):
            self.assertIn(token, vocab)

    def test_ids_are_dense_and_sorted(self):
        vocab = build_vocabulary(clevr_catalog())
        self.assertEqual(list(vocab.tokens), sorted(vocab.tokens))
        self.assertEqual(sorted(vocab.ids.values()), list(range(len(vocab))))
        self.assertEqual(vocab, build_vocabulary(clevr_catalog(), mode='char'))

    def test_save_and_load(self):
        vocab = build_vocabulary(dot_catalog())
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'vocab.json'
            vocab.save(path)
            self.assertEqual(Vocabulary.load(path), vocab)

    def test_missing_special_token(self):
        with self.assertRaises(ValueError):
            Vocabulary(('a', BOS, EOS, PAD))

    def test_unknown_mode(self):
        with self.assertRaises(ValueError):
            build_vocabulary(dot_catalog(), mode='bytes')


class TestEncode(unittest.TestCase):
    """Text to token streams"""

    def setUp(self):
        self.vocab = build_vocabulary(clevr_catalog())

    def test_float_mode_uses_one_slot_per_literal(self):
        stream = encode("add(shape='cube', color='red', loc=(1.250, -2.500, 0.350))", self.vocab)
        self.assertEqual(stream.ids[0], self.vocab.bos_id)
        self.assertEqual(stream.ids[-1], self.vocab.eos_id)
        self.assertEqual(stream.values, [1.25, -2.5, 0.35])
        for position in stream.positions:
            self.assertEqual(stream.ids[position], self.vocab.num_id)

    def test_char_mode_spells_digits(self):
        stream = encode('add(x=0.250, y=-0.750)', build_vocabulary(dot_catalog()), mode='char')
        vocab = build_vocabulary(dot_catalog())
        pieces = detokenize(stream.ids, vocab)
        self.assertNotIn(NUM, pieces)
        self.assertEqual(stream.numeric_slots, ())
        self.assertEqual(pieces[:4], ['add', '(', 'x', '='])
        self.assertEqual(pieces[4:9], ['0', '.', '2', '5', '0'])

    def test_words_are_single_tokens(self):
        pieces = detokenize(encode("add(color='yellow')", self.vocab).ids, self.vocab)
        self.assertEqual(pieces, ['add', '(', 'color', '=', "'", 'yellow', "'", ')'])

    def test_exact_values_replace_literals(self):
        stream = encode('add(x=0.123, y=0.988)', build_vocabulary(dot_catalog()), values=[0.12345, 0.98765])
        self.assertEqual(stream.values, [0.12345, 0.98765])

    def test_value_count_must_match(self):
        vocab = build_vocabulary(dot_catalog())
        with self.assertRaises(SlotMismatch):
            encode('add(x=0.123, y=0.988)', vocab, values=[0.1])
        with self.assertRaises(SlotMismatch):
            encode('add(x=0.123, y=0.988)', vocab, values=[0.1, 0.2, 0.3])

    def test_float_streams_never_longer_than_char_streams(self):
        for task in ('cogent', 'dot2d', 'so3', 'single6dof', 'scene6dof'):
            vocab = build_vocabulary(task_preset(task).catalog)
            for record in generate_task(task, 20, seed=12):
                n_float = len(encode(record.program, vocab, mode='float'))
                n_char = len(encode(record.program, vocab, mode='char'))
                self.assertLessEqual(n_float, n_char, task)

    def test_unencodable_text(self):
        with self.assertRaises(UnencodableText):
            encode("add(shape='cube' # comment)", self.vocab)
        with self.assertRaises(UnencodableText):
            encode("add(color='red)", self.vocab)

    def test_without_special_tokens(self):
        stream = encode('add(x=0.500, y=0.500)', build_vocabulary(dot_catalog()), add_special=False)
        self.assertEqual(len(stream), len(detokenize(stream.ids, build_vocabulary(dot_catalog()))))

    def test_slot_positions_must_increase(self):
        with self.assertRaises(ValueError):
            TokenStream((1, 2, 3), ((2, 0.5), (1, 0.5)))


class TestDecode(unittest.TestCase):
    """Token streams back to text"""

    def test_generated_programs_round_trip_in_both_modes(self):
        for task in ('cogent', 'dot2d', 'so3', 'single6dof', 'scene6dof'):
            vocab = build_vocabulary(task_preset(task).catalog)
            for record in generate_task(task, 3, seed=5):
                for mode in ('float', 'char'):
                    stream = encode(record.program, vocab, mode=mode)
                    self.assertEqual(decode(stream, vocab), record.program, (task, mode))

    def test_numbers_substitute_in_order(self):
        vocab = build_vocabulary(dot_catalog())
        stream = encode('add(x=0.000, y=0.000)', vocab)
        text = decode_two_pass(stream.ids, [0.25, 0.7504], vocab)
        self.assertEqual(text, ProgramText(('add(x=0.250, y=0.750)',)))

    def test_slot_count_mismatch(self):
        vocab = build_vocabulary(dot_catalog())
        stream = encode('add(x=0.000, y=0.000)', vocab)
        with self.assertRaises(SlotMismatch):
            decode_two_pass(stream.ids, [0.25], vocab)

    def test_stops_at_first_eos(self):
        vocab = build_vocabulary(dot_catalog())
        stream = encode('add(x=0.100, y=0.200)', vocab)
        padded = list(stream.ids) + [vocab.pad_id, vocab.id_of('add')]
        self.assertEqual(decode_two_pass(padded, stream.values, vocab), ProgramText(('add(x=0.100, y=0.200)',)))

    def test_stream_dict_round_trip(self):
        stream = encode('add(x=0.100, y=0.200)', build_vocabulary(dot_catalog()))
        self.assertEqual(TokenStream.from_dict(stream.to_dict()), stream)


@unittest.skipUnless(os.environ.get('DERENDER_SLOW_TESTS') == '1', 'set DERENDER_SLOW_TESTS=1 to run')
class TestDecodeAtScale(unittest.TestCase):
    """Encode/decode identity over 10k generated programs per task"""

    def test_every_task_in_both_modes(self):
        for task in ('cogent', 'dot2d', 'so3', 'single6dof', 'scene6dof'):
            vocab = build_vocabulary(task_preset(task).catalog)
            failures = [
                (record.index, mode)
                for record in generate_task(task, 10000, seed=21, threads=4)
                for mode in ('float', 'char')
                if decode(encode(record.program, vocab, mode=mode), vocab) != record.program
            ]
            self.assertEqual(failures, [], task)


class TestSlotFamilies(unittest.TestCase):
    """Key and component of every [NUM]"""

    def test_planar_families(self):
        vocab = build_vocabulary(dot_catalog())
        stream = encode('add(x=0.100, y=0.200)', vocab)
        self.assertEqual(slot_families(stream.ids, vocab), ['x:0', 'y:0'])

    def test_tuple_components(self):
        vocab = build_vocabulary(clevr_catalog())
        text = "add(loc=(1.000, 2.000, 0.350), shape='cube', rotation=0.500)\nadd(color='red', loc=(0.000, 1.000, 0.700))"
        families = slot_families(encode(text, vocab).ids, vocab)
        self.assertEqual(families, ['loc:0', 'loc:1', 'loc:2', 'rotation:0', 'loc:0', 'loc:1', 'loc:2'])


if __name__ == '__main__':
    unittest.main()

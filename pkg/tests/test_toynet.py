"""Unit tests for the toy de-rendering model, its losses, training loop and checkpoints"""
import math
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np
import torch

# Add repository root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.datagen import CheckerboardLayout, generate_task, ink, task_preset
from src.dsl import format_number
from src.evalkit import evaluate_scenes
from src.numstream import build_vocabulary, encode
from src.scene import dot_catalog
from src.toynet import (
    ModelConfig,
    SlotScaler,
    TrainConfig,
    build_model,
    collate,
    compute_loss,
    generate_batch,
    grad_check,
    load_checkpoint,
    prepare_examples,
    save_checkpoint,
    split_validation,
    train,
)
from src.toynet.data import Examples
from src.toynet.generation import finish_generation
from src.toynet.training import validation_mse
from src.utils.errors import ConfigError, ContextOverflow, DataError, DivergenceDetected, SlotMismatch


def small_model_config(vocab_size: int, mode: str = 'float') -> ModelConfig:
    return ModelConfig(vocab_size=vocab_size, mode=mode, image_size=64, encoder_hidden=32, embed_dim=16,
                       decoder_layers=1, heads=2, context_len=24, numeric_head_hidden=16)


def small_train_config(**overrides) -> TrainConfig:
    settings = dict(batch_size=4, steps=3, eval_every=2, val_fraction=0.1, val_limit=4, seed=5)
    settings.update(overrides)
    return TrainConfig(**settings)


def dot_examples(n: int, mode: str, seed: int = 0):
    records = generate_task('dot2d', n, seed=seed)
    vocab = build_vocabulary(dot_catalog())
    images = np.stack([ink(r.image) for r in records]).astype(np.float32)
    return prepare_examples(records, vocab, mode, Path('.'), images=images), vocab


def dot_batch(n: int, mode: str, dtype=torch.float32, seed: int = 0):
    examples, vocab = dot_examples(n, mode, seed)
    scaler = SlotScaler.fit(examples.streams, vocab) if mode == 'float' else None
    return collate(examples.streams, examples.images, vocab, scaler, 24, dtype), vocab


class TestModel(unittest.TestCase):
    """Forward pass shapes and causality"""

    def setUp(self):
        torch.manual_seed(0)
        self.vocab = build_vocabulary(dot_catalog())
        self.model = build_model(small_model_config(len(self.vocab)))

    def test_output_shapes(self):
        images = torch.zeros((3, 64, 64))
        ids = torch.full((3, 7), self.vocab.bos_id, dtype=torch.long)
        logits, numeric = self.model(images, ids)
        self.assertEqual(tuple(logits.shape), (3, 7, len(self.vocab)))
        self.assertEqual(tuple(numeric.shape), (3, 7))

    def test_context_overflow(self):
        ids = torch.zeros((1, 25), dtype=torch.long)
        with self.assertRaises(ContextOverflow):
            self.model(torch.zeros((1, 64, 64)), ids)

    def test_outputs_do_not_see_future_tokens(self):
        self.model.eval()
        images = torch.rand((2, 64, 64))
        generator = torch.Generator().manual_seed(1)
        ids = torch.randint(0, len(self.vocab), (2, 10), generator=generator)
        changed = ids.clone()
        changed[:, 6:] = (changed[:, 6:] + 1) % len(self.vocab)
        with torch.no_grad():
            logits_a, numeric_a = self.model(images, ids)
            logits_b, numeric_b = self.model(images, changed)
        torch.testing.assert_close(logits_a[:, :6], logits_b[:, :6])
        torch.testing.assert_close(numeric_a[:, :6], numeric_b[:, :6])
        self.assertFalse(torch.allclose(logits_a[:, 6:], logits_b[:, 6:]))

    def test_parameter_groups_cover_model(self):
        groups = self.model.parameter_groups()
        total = sum(p.numel() for p in groups['body']) + sum(p.numel() for p in groups['numeric_head'])
        self.assertEqual(total, self.model.count_parameters())
        self.assertEqual(len(groups['numeric_head']), 4)

    def test_invalid_configs(self):
        with self.assertRaises(ConfigError):
            ModelConfig(vocab_size=10, embed_dim=10, heads=4)
        with self.assertRaises(ConfigError):
            ModelConfig(vocab_size=10, mode='bytes')
        with self.assertRaises(ConfigError):
            TrainConfig(w_ce=0.0)


class TestLoss(unittest.TestCase):
    """Joint cross-entropy and numeric loss"""

    def test_uniform_logits_give_log_vocab_size(self):
        torch.manual_seed(0)
        batch, vocab = dot_batch(6, 'float')
        model = build_model(small_model_config(len(vocab)))
        with torch.no_grad():
            model.token_head.weight.zero_()
            model.token_head.bias.zero_()
        parts = compute_loss(model, batch, pad_id=vocab.pad_id)
        self.assertAlmostEqual(parts.ce.item(), math.log(len(vocab)), places=5)

    def test_mse_on_slot_targets_only(self):
        torch.manual_seed(0)
        batch, vocab = dot_batch(6, 'float')
        model = build_model(small_model_config(len(vocab)))
        with torch.no_grad():
            model.numeric_head.output_layer.weight.zero_()
            model.numeric_head.output_layer.bias.zero_()
        parts = compute_loss(model, batch, pad_id=vocab.pad_id)
        expected = batch.slot_values[batch.slot_mask].pow(2).mean().item()
        self.assertAlmostEqual(parts.mse.item(), expected, places=5)

    def test_char_mode_has_no_numeric_loss(self):
        torch.manual_seed(0)
        batch, vocab = dot_batch(4, 'char')
        model = build_model(small_model_config(len(vocab), 'char'))
        parts = compute_loss(model, batch, pad_id=vocab.pad_id)
        self.assertEqual(parts.mse.item(), 0.0)
        parts.total.backward()
        self.assertTrue(all(p.grad is None for p in model.numeric_head.parameters()))

    def test_gradients_match_finite_differences(self):
        for mode in ('float', 'char'):
            torch.manual_seed(3)
            batch, vocab = dot_batch(3, mode)
            model = build_model(small_model_config(len(vocab), mode))
            with torch.no_grad():
                for param in model.parameters():
                    param.normal_(0.0, 0.2)
            error = grad_check(model, batch, epsilon=1e-4, n_params=200, seed=1, pad_id=vocab.pad_id)
            self.assertLessEqual(error, 1e-4, mode)

    def test_grad_check_epsilon_range(self):
        batch, vocab = dot_batch(2, 'float')
        model = build_model(small_model_config(len(vocab)))
        with self.assertRaises(ValueError):
            grad_check(model, batch, epsilon=1e-2)


class TestData(unittest.TestCase):
    """Batches and slot scaling"""

    def test_collate_pads_and_marks_slots(self):
        batch, vocab = dot_batch(3, 'float')
        self.assertEqual(batch.ids.shape[0], 3)
        self.assertTrue(torch.equal(batch.slot_mask, batch.ids == vocab.num_id))
        self.assertEqual(int(batch.slot_mask.sum()), 6)

    def test_collate_rejects_long_streams(self):
        examples, vocab = dot_examples(2, 'char')
        with self.assertRaises(ContextOverflow):
            collate(examples.streams, examples.images, vocab, None, 8)

    def test_collate_rejects_misaligned_slots(self):
        examples, vocab = dot_examples(1, 'float')
        stream = examples.streams[0]
        shifted = type(stream)(stream.ids, tuple((p + 1, v) for p, v in stream.numeric_slots), 'float')
        with self.assertRaises(SlotMismatch):
            collate([shifted], examples.images, vocab, None, 24)

    def test_float_examples_carry_exact_values(self):
        examples, _ = dot_examples(3, 'float')
        for stream, record in zip(examples.streams, examples.records):
            self.assertEqual(tuple(stream.values), record.values)

    def test_scaler_standardizes_per_family(self):
        examples, vocab = dot_examples(50, 'float')
        scaler = SlotScaler.fit(examples.streams, vocab)
        self.assertEqual(sorted(scaler.stats), ['x:0', 'y:0'])
        xs = [s.values[0] for s in examples.streams]
        scaled = scaler.transform(xs, ['x:0'] * len(xs))
        self.assertAlmostEqual(float(np.mean(scaled)), 0.0, places=9)
        self.assertAlmostEqual(float(np.std(scaled)), 1.0, places=9)
        np.testing.assert_allclose(scaler.inverse(scaled, ['x:0'] * len(xs)), xs, atol=1e-12)
        self.assertEqual(SlotScaler.from_dict(scaler.to_dict()).stats, scaler.stats)

    def test_constant_family_keeps_unit_scale(self):
        vocab = build_vocabulary(dot_catalog())
        streams = [encode('add(x=0.500, y=0.250)', vocab) for _ in range(3)]
        self.assertEqual(SlotScaler.fit(streams, vocab).stats['x:0'], (0.5, 1.0))

    def test_validation_split_takes_the_tail(self):
        train_idx, val_idx = split_validation(100, TrainConfig(val_fraction=0.05, val_limit=256))
        self.assertEqual(list(val_idx), [95, 96, 97, 98, 99])
        self.assertEqual(len(train_idx), 95)
        _, capped = split_validation(10000, TrainConfig(val_fraction=0.05, val_limit=256))
        self.assertEqual(len(capped), 256)


class TestGeneration(unittest.TestCase):
    """Number substitution and parsing of decoded streams"""

    def setUp(self):
        self.vocab = build_vocabulary(dot_catalog())
        self.preset = task_preset('dot2d')
        self.ids = list(encode('add(x=0.000, y=0.000)', self.vocab).ids)

    def test_well_formed_stream(self):
        result = finish_generation(self.ids, [0.1234, 0.5], self.vocab, self.preset)
        self.assertFalse(result.malformed)
        self.assertEqual(result.program, 'add(x=0.123, y=0.500)')
        self.assertEqual(result.scene.objects[0].location, (0.123, 0.5, 0.0))

    def test_wrong_number_count_is_malformed(self):
        result = finish_generation(self.ids, [0.1], self.vocab, self.preset)
        self.assertTrue(result.malformed)
        self.assertIsNone(result.scene)

    def test_missing_eos_is_malformed(self):
        result = finish_generation(self.ids[:-1], [0.1, 0.2], self.vocab, self.preset)
        self.assertTrue(result.malformed)

    def test_non_finite_number_is_malformed(self):
        result = finish_generation(self.ids, [0.1, float('nan')], self.vocab, self.preset)
        self.assertTrue(result.malformed)

    def test_untrained_model_output_scores_without_crashing(self):
        torch.manual_seed(0)
        examples, vocab = dot_examples(8, 'float')
        model = build_model(small_model_config(len(vocab)))
        results = generate_batch(model, examples.images, vocab, SlotScaler.fit(examples.streams, vocab),
                                 self.preset)
        evaluation = evaluate_scenes([r.scene for r in results], [r.scene for r in examples.records],
                                     attributes=(), with_rotation=False, layout=CheckerboardLayout())
        self.assertEqual(len(evaluation.per_scene), 8)
        self.assertGreater(evaluation.report.malformed_rate, 0.0)
        self.assertAlmostEqual(evaluation.report.malformed_rate, float(np.mean([r.malformed for r in results])))

    def test_char_stream_numbers_come_from_literals(self):
        ids = encode('add(x=0.250, y=0.750)', self.vocab, mode='char').ids
        result = finish_generation(ids, [], self.vocab, self.preset)
        self.assertFalse(result.malformed)
        self.assertEqual(result.numbers, [0.25, 0.75])


@unittest.skipUnless(os.environ.get('DERENDER_SLOW_TESTS') == '1', 'set DERENDER_SLOW_TESTS=1 to run')
class TestGradientFidelity(unittest.TestCase):
    """Finite-difference checks over twenty random (model, batch) draws"""

    def test_random_draws(self):
        for draw in range(20):
            with self.subTest(draw=draw):
                torch.manual_seed(100 + draw)
                batch, vocab = dot_batch(3, 'float', seed=draw)
                model = build_model(small_model_config(len(vocab)))
                with torch.no_grad():
                    for param in model.parameters():
                        param.normal_(0.0, 0.2)
                error = grad_check(model, batch, epsilon=1e-4, n_params=200, seed=draw, pad_id=vocab.pad_id)
                self.assertLessEqual(error, 1e-4)


class TestTraining(unittest.TestCase):
    """Training loop, determinism and checkpoints"""

    def test_same_seed_reproduces_trace_and_parameters(self):
        examples, vocab = dot_examples(20, 'float')
        preset = task_preset('dot2d')
        first = train(small_model_config(len(vocab)), small_train_config(), examples, vocab, preset)
        second = train(small_model_config(len(vocab)), small_train_config(), examples, vocab, preset)
        self.assertEqual(list(first.trace.columns), ['step', 'ce', 'mse', 'val_metric'])
        self.assertEqual(len(first.trace), 3)
        np.testing.assert_array_equal(first.trace[['ce', 'mse']].to_numpy(), second.trace[['ce', 'mse']].to_numpy())
        for a, b in zip(first.model.parameters(), second.model.parameters()):
            self.assertTrue(torch.equal(a, b))

    def test_validation_metric_only_at_eval_steps(self):
        examples, vocab = dot_examples(20, 'char')
        result = train(small_model_config(len(vocab), 'char'), small_train_config(), examples, vocab,
                       task_preset('dot2d'))
        self.assertTrue(math.isnan(result.trace.loc[0, 'val_metric']))
        self.assertEqual(result.step, 3)
        self.assertEqual(result.scaler.stats, {})

    def test_char_validation_scores_decoded_literals(self):
        examples, vocab = dot_examples(6, 'char')
        preset = task_preset('dot2d')
        model = build_model(small_model_config(len(vocab), 'char'))

        def exact_decoder(*args, **kwargs):
            return [finish_generation(s.ids, [], vocab, preset) for s in examples.streams]

        with mock.patch('src.toynet.training.generate_batch', side_effect=exact_decoder):
            metric = validation_mse(model, examples, vocab, SlotScaler(), preset)
        rounding = [(float(format_number(v)) - v) ** 2 for r in examples.records for v in r.values]
        self.assertAlmostEqual(metric, float(np.mean(rounding)), places=12)
        self.assertLess(metric, 1e-6)

    def test_non_finite_loss_is_divergence(self):
        vocab = build_vocabulary(dot_catalog())
        streams = [encode('add(x=0.100, y=0.200)', vocab, values=[float('nan'), 0.2]) for _ in range(4)]
        records = generate_task('dot2d', 4, seed=0)
        images = np.stack([ink(r.image) for r in records]).astype(np.float32)
        examples = Examples(streams, images, records)
        with self.assertRaises(DivergenceDetected) as ctx:
            train(small_model_config(len(vocab)), small_train_config(val_fraction=0.0), examples, vocab,
                  task_preset('dot2d'))
        self.assertEqual(ctx.exception.step, 1)
        self.assertEqual(ctx.exception.last_finite_step, 0)

    def test_empty_training_set(self):
        vocab = build_vocabulary(dot_catalog())
        with self.assertRaises(ConfigError):
            train(small_model_config(len(vocab)), small_train_config(),
                  Examples([], np.zeros((0, 64, 64), dtype=np.float32), []), vocab, task_preset('dot2d'))

    def test_checkpoint_round_trip(self):
        examples, vocab = dot_examples(20, 'float')
        config = small_train_config()
        result = train(small_model_config(len(vocab)), config, examples, vocab, task_preset('dot2d'))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'model.ckpt'
            save_checkpoint(path, result.model, vocab, result.scaler, result.step, config, result.optimizer)
            loaded = load_checkpoint(path)

            self.assertEqual(loaded.vocab, vocab)
            self.assertEqual(loaded.step, 3)
            self.assertEqual(loaded.train_config, config)
            self.assertEqual(loaded.scaler.stats, result.scaler.stats)
            self.assertEqual(loaded.model.config, result.model.config)
            for a, b in zip(result.model.parameters(), loaded.model.parameters()):
                self.assertTrue(torch.equal(a, b))
            self.assertEqual(len(loaded.optimizer_state['exp_avg']), len(list(result.model.parameters())))

            again = Path(tmp) / 'again.ckpt'
            save_checkpoint(again, result.model, vocab, result.scaler, result.step, config, result.optimizer)
            self.assertEqual(path.read_bytes(), again.read_bytes())

    def test_resume_continues_like_an_uninterrupted_run(self):
        examples, vocab = dot_examples(20, 'float')
        preset = task_preset('dot2d')
        # flat learning rate, so a 2-step run is the head of the 4-step one
        flat = dict(min_learning_rate=1e-3, numeric_head_lr_multiplier=1.0, eval_every=100)
        full = train(small_model_config(len(vocab)), small_train_config(steps=4, **flat), examples, vocab, preset)
        head = train(small_model_config(len(vocab)), small_train_config(steps=2, **flat), examples, vocab, preset)
        with tempfile.TemporaryDirectory() as tmp:
            path = save_checkpoint(Path(tmp) / 'head.ckpt', head.model, vocab, head.scaler, head.step,
                                   optimizer=head.optimizer)
            resumed = train(small_model_config(len(vocab)), small_train_config(steps=4, **flat), examples, vocab,
                            preset, resume=load_checkpoint(path))
            cold_start = load_checkpoint(path)
            cold_start.optimizer_state = None
            cold = train(small_model_config(len(vocab)), small_train_config(steps=4, **flat), examples, vocab,
                         preset, resume=cold_start)

        self.assertEqual(list(resumed.trace['step']), [3, 4])
        np.testing.assert_allclose(resumed.trace['ce'].to_numpy(), full.trace['ce'].to_numpy()[2:], rtol=1e-6)
        for a, b in zip(full.model.parameters(), resumed.model.parameters()):
            torch.testing.assert_close(a, b, rtol=1e-6, atol=1e-8)
        self.assertFalse(all(torch.allclose(a, b, rtol=1e-6, atol=1e-8)
                             for a, b in zip(full.model.parameters(), cold.model.parameters())))

    def test_resume_rejects_mismatched_checkpoints(self):
        examples, vocab = dot_examples(20, 'float')
        preset = task_preset('dot2d')
        result = train(small_model_config(len(vocab)), small_train_config(steps=2), examples, vocab, preset)
        with tempfile.TemporaryDirectory() as tmp:
            path = save_checkpoint(Path(tmp) / 'model.ckpt', result.model, vocab, result.scaler, result.step,
                                   optimizer=result.optimizer)
            with self.assertRaises(ConfigError):
                train(small_model_config(len(vocab)), small_train_config(steps=2), examples, vocab, preset,
                      resume=load_checkpoint(path))
            char_examples, char_vocab = dot_examples(20, 'char')
            with self.assertRaises(ConfigError):
                train(small_model_config(len(char_vocab), 'char'), small_train_config(steps=4), char_examples,
                      char_vocab, preset, resume=load_checkpoint(path))

    def test_char_checkpoint_keeps_moments_of_reached_parameters(self):
        examples, vocab = dot_examples(20, 'char')
        result = train(small_model_config(len(vocab), 'char'), small_train_config(), examples, vocab,
                       task_preset('dot2d'))
        with tempfile.TemporaryDirectory() as tmp:
            path = save_checkpoint(Path(tmp) / 'model.ckpt', result.model, vocab, result.scaler, result.step,
                                   optimizer=result.optimizer)
            state = load_checkpoint(path).optimizer_state
        names = [name for name, _ in result.model.named_parameters()]
        for name, steps in zip(names, state['steps']):
            self.assertEqual(steps == 0, name.startswith('numeric_head'), name)

    def test_bad_magic(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'bogus.ckpt'
            path.write_bytes(b'NOPE' + bytes(16))
            with self.assertRaises(DataError):
                load_checkpoint(path)


if __name__ == '__main__':
    unittest.main()

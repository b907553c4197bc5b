"""End-to-end tests for the gen, train, eval and plot subcommands"""
import json
import shutil
import sys
import tempfile
import unittest
from pathlib import Path

import pandas as pd

# Add repository root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from main import main
from src.cli import PARTIAL_MARKER, is_complete, read_manifest
from src.datagen import checkerboard_layout, in_checkerboard, read_records


class CliTestCase(unittest.TestCase):
    """Shared temp workspace and config file"""

    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())
        self.config_path = self.tmp / 'config.json'
        self.write_config({})

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def write_config(self, overrides):
        config = {'logging': {'log_dir': str(self.tmp / 'logs')}}
        config.update(overrides)
        self.config_path.write_text(json.dumps(config), encoding='utf-8')

    def run_cli(self, *args, seed=0):
        return main(['--config', str(self.config_path), '--seed', str(seed), '--log-level', 'WARNING', *args])

    def gen(self, out, n=20, *extra, seed=0):
        return self.run_cli('gen', '--task', 'dot2d', '--n', str(n), '--out', str(out), *extra, seed=seed)


class TestGen(CliTestCase):
    """gen subcommand"""

    def test_writes_records_images_and_manifest(self):
        out = self.tmp / 'dots'
        self.assertEqual(self.gen(out), 0)
        self.assertTrue((out / 'train.jsonl').exists())
        self.assertTrue((out / 'images' / 'train_000000.png').exists())
        self.assertFalse((out / PARTIAL_MARKER).exists())
        self.assertTrue(is_complete(out, 'train.manifest.json'))

        manifest = read_manifest(out / 'train.manifest.json')
        self.assertEqual(manifest['command'], 'gen')
        self.assertEqual(manifest['seed'], 0)
        self.assertIn('--n', manifest['argv'])
        self.assertEqual(manifest['extra']['task'], 'dot2d')
        self.assertEqual(len(read_records(out / 'train.jsonl')), 20)

    def test_rerun_is_byte_identical(self):
        self.assertEqual(self.gen(self.tmp / 'a', 10, seed=3), 0)
        self.assertEqual(self.gen(self.tmp / 'b', 10, seed=3), 0)
        self.assertEqual((self.tmp / 'a' / 'train.jsonl').read_bytes(),
                         (self.tmp / 'b' / 'train.jsonl').read_bytes())
        self.assertEqual((self.tmp / 'a' / 'images' / 'train_000004.png').read_bytes(),
                         (self.tmp / 'b' / 'images' / 'train_000004.png').read_bytes())

    def test_uniform_distribution_is_labelled_ood(self):
        out = self.tmp / 'dots'
        self.assertEqual(self.gen(out, 5, '--dist', 'uniform'), 0)
        self.assertTrue((out / 'val_ood.jsonl').exists())
        self.assertTrue((out / 'val_ood.manifest.json').exists())

    def test_scene_task_without_images(self):
        out = self.tmp / 'clevr'
        self.assertEqual(self.run_cli('gen', '--task', 'cogent', '--n', '4', '--condition', 'B', '--out', str(out)), 0)
        records = read_records(out / 'val_ood.jsonl')
        self.assertEqual([r.condition for r in records], ['B'] * 4)
        self.assertFalse((out / 'images').exists())


class TestEvalAndPlot(CliTestCase):
    """eval on a predictions file, then plot its per-scene breakdown"""

    def setUp(self):
        super().setUp()
        self.data = self.tmp / 'dots'
        self.assertEqual(self.gen(self.data, 30), 0)
        self.assertEqual(self.gen(self.data, 20, '--dist', 'uniform', seed=1), 0)
        self.gt_path = self.data / 'val_ood.jsonl'

    def write_predictions(self, lines):
        path = self.tmp / 'pred.jsonl'
        path.write_text(''.join(json.dumps(line) + '\n' for line in lines), encoding='utf-8')
        return path

    def test_eval_predictions_file(self):
        records = read_records(self.gt_path)
        lines = [{'program': str(r.program)} for r in records]
        lines[0] = {'program': 'add(x='}
        pred_path = self.write_predictions(lines)
        out = self.tmp / 'eval'

        code = self.run_cli('eval', '--task', 'dot2d', '--pred', str(pred_path), '--gt', str(self.gt_path),
                            '--out', str(out))
        self.assertEqual(code, 0)
        report = json.loads((out / 'report.json').read_text(encoding='utf-8'))
        self.assertEqual(report['n_scenes'], 20)
        self.assertAlmostEqual(report['malformed_rate'], 0.05)
        self.assertLess(report['l2'], 0.001)
        self.assertIn('memorization_ratio', report)
        self.assertIsNotNone(report['memorization_ratio'])
        self.assertTrue((out / 'report.csv').exists())
        self.assertTrue(is_complete(out))

        per_scene = pd.read_csv(out / 'per_scene.csv')
        self.assertEqual(len(per_scene), 20)
        for column in ('gt_x', 'gt_y', 'pred_x', 'pred_y', 'malformed'):
            self.assertIn(column, per_scene.columns)
        self.assertTrue(bool(per_scene['malformed'][0]))

        svg = self.tmp / 'plots' / 'scatter.svg'
        code = self.run_cli('plot', '--kind', 'scatter2d', '--inputs', str(out / 'per_scene.csv'), '--out', str(svg))
        self.assertEqual(code, 0)
        self.assertTrue(svg.read_text(encoding='utf-8').lstrip().startswith('<?xml'))
        sidecar = pd.read_csv(svg.with_suffix('.csv'))
        self.assertEqual(list(sidecar.columns), ['gt_x', 'gt_y', 'pred_x', 'pred_y'])
        self.assertTrue((self.tmp / 'plots' / 'scatter.manifest.json').exists())

    def test_memorization_counts_off_checkerboard_targets_only(self):
        layout = checkerboard_layout()
        train_program = str(read_records(self.data / 'train.jsonl')[0].program)
        records = read_records(self.gt_path)
        on_board = [in_checkerboard(r.scene.objects[0].location[:2], layout) for r in records]
        self.assertTrue(any(on_board) and not all(on_board))
        # on-board targets answered with a training position, off-board ones exactly
        lines = [{'program': train_program if inside else str(r.program)} for r, inside in zip(records, on_board)]
        pred_path = self.write_predictions(lines)
        out = self.tmp / 'eval'

        code = self.run_cli('eval', '--task', 'dot2d', '--pred', str(pred_path), '--gt', str(self.gt_path),
                            '--out', str(out))
        self.assertEqual(code, 0)
        report = json.loads((out / 'report.json').read_text(encoding='utf-8'))
        self.assertEqual(report['memorization_ratio'], 0.0)

    def test_prediction_count_must_match(self):
        pred_path = self.write_predictions([{'program': 'add(x=0.500, y=0.500)'}])
        code = self.run_cli('eval', '--task', 'dot2d', '--pred', str(pred_path), '--gt', str(self.gt_path),
                            '--out', str(self.tmp / 'eval'))
        self.assertEqual(code, 3)

    def test_prediction_without_program_field(self):
        pred_path = self.write_predictions([{'text': 'add(x=0.500, y=0.500)'}] * 20)
        out = self.tmp / 'eval'
        code = self.run_cli('eval', '--task', 'dot2d', '--pred', str(pred_path), '--gt', str(self.gt_path),
                            '--out', str(out))
        self.assertEqual(code, 3)
        self.assertTrue((out / PARTIAL_MARKER).exists())
        self.assertFalse(is_complete(out))

    def test_plot_missing_column(self):
        csv_path = self.tmp / 'other.csv'
        csv_path.write_text('a,b\n1,2\n', encoding='utf-8')
        code = self.run_cli('plot', '--kind', 'scatter2d', '--inputs', str(csv_path),
                            '--out', str(self.tmp / 'p.svg'))
        self.assertEqual(code, 3)


class TestTrain(CliTestCase):
    """train subcommand on a tiny model, then eval from the checkpoint"""

    def setUp(self):
        super().setUp()
        self.write_config({
            'model': {'embed_dim': 16, 'decoder_layers': 1, 'heads': 2, 'context_len': 24,
                      'encoder_hidden': 32, 'numeric_head_hidden': 16},
            'train': {'batch_size': 4, 'steps': 2, 'eval_every': 2, 'val_fraction': 0.1, 'val_limit': 4},
        })
        self.data = self.tmp / 'dots'
        self.assertEqual(self.gen(self.data, 20), 0)

    def test_train_then_eval_checkpoint(self):
        run = self.tmp / 'run'
        self.assertEqual(self.run_cli('train', '--mode', 'float', '--data', str(self.data), '--out', str(run)), 0)
        self.assertTrue((run / 'model.ckpt').exists())
        trace = pd.read_csv(run / 'metrics.csv')
        self.assertEqual(list(trace['step']), [1, 2])
        self.assertTrue(is_complete(run))
        self.assertEqual(read_manifest(run / 'manifest.json')['extra']['mode'], 'float')

        out = self.tmp / 'eval'
        code = self.run_cli('eval', '--task', 'dot2d', '--pred', str(run / 'model.ckpt'),
                            '--gt', str(self.data / 'train.jsonl'), '--out', str(out))
        self.assertEqual(code, 0)
        predictions = (out / 'predictions.jsonl').read_text(encoding='utf-8').splitlines()
        self.assertEqual(len(predictions), 20)
        self.assertIn('malformed', json.loads(predictions[0]))

    def test_char_mode_trains(self):
        run = self.tmp / 'char'
        self.write_config({
            'model': {'embed_dim': 16, 'decoder_layers': 1, 'heads': 2, 'context_len': 32,
                      'encoder_hidden': 32, 'numeric_head_hidden': 16},
            'train': {'batch_size': 4, 'steps': 2, 'eval_every': 2, 'val_fraction': 0.1, 'val_limit': 4},
        })
        self.assertEqual(self.run_cli('train', '--mode', 'char', '--data', str(self.data), '--out', str(run)), 0)
        self.assertTrue((run / 'model.ckpt').exists())

    def test_threads_flag_does_not_change_training(self):
        runs = []
        for name, threads in (('serial', '1'), ('threaded', '3')):
            run = self.tmp / name
            code = main(['--config', str(self.config_path), '--seed', '0', '--threads', threads,
                         '--log-level', 'WARNING', 'train', '--mode', 'float', '--data', str(self.data),
                         '--out', str(run)])
            self.assertEqual(code, 0)
            runs.append(run)
        self.assertEqual((runs[0] / 'model.ckpt').read_bytes(), (runs[1] / 'model.ckpt').read_bytes())
        self.assertEqual(read_manifest(runs[1] / 'manifest.json')['extra']['train_threads'], 1)

    def test_resume_from_checkpoint(self):
        first = self.tmp / 'first'
        self.assertEqual(self.run_cli('train', '--mode', 'float', '--data', str(self.data), '--out', str(first)), 0)
        second = self.tmp / 'second'
        code = self.run_cli('train', '--mode', 'float', '--data', str(self.data), '--steps', '3',
                            '--resume', str(first / 'model.ckpt'), '--out', str(second))
        self.assertEqual(code, 0)
        self.assertEqual(list(pd.read_csv(second / 'metrics.csv')['step']), [3])
        manifest = read_manifest(second / 'manifest.json')
        self.assertEqual(manifest['extra']['resumed_from'], 2)
        self.assertIn(str(first / 'model.ckpt'), manifest['inputs'])

    def test_resume_from_missing_checkpoint(self):
        code = self.run_cli('train', '--mode', 'float', '--data', str(self.data), '--resume',
                            str(self.tmp / 'absent.ckpt'), '--out', str(self.tmp / 'run'))
        self.assertEqual(code, 2)

    def test_train_rejects_tasks_without_images(self):
        code = self.run_cli('train', '--mode', 'float', '--task', 'so3', '--data', str(self.data),
                            '--out', str(self.tmp / 'run'))
        self.assertEqual(code, 2)

    def test_missing_training_data(self):
        code = self.run_cli('train', '--mode', 'float', '--data', str(self.tmp / 'nowhere'),
                            '--out', str(self.tmp / 'run'))
        self.assertEqual(code, 2)


class TestConfigErrors(unittest.TestCase):
    """Exit codes for configuration problems"""

    def test_missing_config_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            code = main(['--config', str(Path(tmp) / 'absent.json'), 'gen', '--task', 'dot2d', '--n', '1',
                         '--out', tmp])
        self.assertEqual(code, 2)

    def test_invalid_heads(self):
        with tempfile.TemporaryDirectory() as tmp:
            config_path = Path(tmp) / 'config.json'
            config_path.write_text(json.dumps({'model': {'embed_dim': 10, 'heads': 4}}), encoding='utf-8')
            code = main(['--config', str(config_path), 'gen', '--task', 'dot2d', '--n', '1', '--out', tmp])
        self.assertEqual(code, 2)


if __name__ == '__main__':
    unittest.main()

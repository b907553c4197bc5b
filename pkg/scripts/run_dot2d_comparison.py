import argparse
import json
import os
import sys
from pathlib import Path

import pandas as pd

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from main import main


parser = argparse.ArgumentParser(description='Char vs float decoding on checkerboard dots')
parser.add_argument('--seeds', type=int, nargs='+', default=[1, 2, 3])
parser.add_argument('--n-train', type=int, default=8000)
parser.add_argument('--n-ood', type=int, default=1000)
parser.add_argument('--steps', type=int, default=None)
parser.add_argument('--threads', type=int, default=1)
parser.add_argument('--config', default=None)
parser.add_argument('--out', default='runs/dot2d_comparison')
args = parser.parse_args()

out = Path(args.out)
common = ['--threads', str(args.threads)] + (['--config', args.config] if args.config else [])


def run(seed, *argv):
    code = main(['--seed', str(seed), *common, *argv])
    if code != 0:
        sys.exit(code)


rows = []
for seed in args.seeds:
    data_dir = out / f'seed{seed}' / 'data'
    print(f'Seed {seed}: generating data...')
    run(seed, 'gen', '--task', 'dot2d', '--n', str(args.n_train), '--dist', 'checkerboard', '--out', str(data_dir))
    run(seed + 1000, 'gen', '--task', 'dot2d', '--n', str(args.n_ood), '--dist', 'uniform', '--out', str(data_dir))

    for mode in ('float', 'char'):
        model_dir = out / f'seed{seed}' / mode
        steps = ['--steps', str(args.steps)] if args.steps else []
        print(f'Seed {seed}: training {mode} model...')
        run(seed, 'train', '--mode', mode, '--data', str(data_dir), *steps, '--out', str(model_dir))
        run(seed, 'eval', '--task', 'dot2d', '--pred', str(model_dir / 'model.ckpt'),
            '--gt', str(data_dir / 'val_ood.jsonl'), '--out', str(model_dir / 'eval'))

        report = json.loads((model_dir / 'eval' / 'report.json').read_text(encoding='utf-8'))
        rows.append({
            'seed': seed,
            'mode': mode,
            'rmse_id': report['rmse_id'],
            'rmse_ood': report['rmse_ood'],
            'malformed_rate': report['malformed_rate'],
            'memorization_ratio': report['memorization_ratio'],
        })

table = pd.DataFrame(rows)
table['gap'] = table['rmse_ood'] - table['rmse_id']
out.mkdir(parents=True, exist_ok=True)
table.to_csv(out / 'comparison.csv', index=False, float_format='%.6f', lineterminator='\n')

print()
print(table.to_string(index=False, float_format=lambda v: f'{v:.4f}'))

for seed in args.seeds:
    per_seed = table[table['seed'] == seed].set_index('mode')
    if {'float', 'char'} <= set(per_seed.index):
        f, c = per_seed.loc['float'], per_seed.loc['char']
        print(f"seed {seed}: OOD ratio char/float {c['rmse_ood'] / f['rmse_ood']:.2f}, "
              f"gap ratio char/float {c['gap'] / f['gap'] if f['gap'] else float('inf'):.2f}")

labels = [f'{r.mode}-s{r.seed}' for r in table.itertuples()]
reports = [str(out / f'seed{r.seed}' / r.mode / 'eval' / 'report.csv') for r in table.itertuples()]
traces = [str(out / f'seed{r.seed}' / r.mode / 'metrics.csv') for r in table.itertuples()]
run(0, 'plot', '--kind', 'id_ood_bars', '--inputs', *reports, '--labels', *labels, '--out', str(out / 'id_ood_bars.svg'))
run(0, 'plot', '--kind', 'dynamics', '--inputs', *traces, '--labels', *labels, '--out', str(out / 'dynamics.svg'))

"""
Main entry point for the inverse-graphics workbench: dataset generation, toy-model
training, evaluation and plotting
"""
import argparse
import logging
import sys
import time

from src.cli import COMMANDS
from src.datagen.generators import DOT_DISTRIBUTIONS, SCENE6DOF_SPLITS
from src.datagen.layouts import REGIONS
from src.datagen.records import SPLITS
from src.plotting import PLOT_KINDS
from src.rotkit import REPRESENTATIONS
from src.toynet.config import MODES
from src.utils.config import TASKS, load_config
from src.utils.errors import DerenderError
from src.utils.logger import setup_logger


METRICS = ('l2', 'geodesic_deg', 'count', 'accuracies', 'chamfer')


def parse_arguments(argv=None):
    """Parse command line arguments"""
    parser = argparse.ArgumentParser(
        description='Generate scene-program datasets, train toy de-rendering models and score them'
    )
    parser.add_argument('--config', type=str, default=None,
                        help='JSON file overriding the built-in configuration')
    parser.add_argument('--seed', type=int, default=0, help='Base seed (default: 0)')
    parser.add_argument('--threads', type=int, default=1, help='Worker threads (default: 1)')
    parser.add_argument('--log-level', type=str, default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='Logging level (default: INFO)')

    subparsers = parser.add_subparsers(dest='command', required=True)

    gen = subparsers.add_parser('gen', help='Generate a dataset split')
    gen.add_argument('--task', required=True, choices=TASKS)
    gen.add_argument('--n', type=int, required=True, help='Number of records')
    gen.add_argument('--condition', choices=['A', 'B'], help='CoGenT condition')
    gen.add_argument('--dist', choices=DOT_DISTRIBUTIONS, help='Dot position distribution')
    gen.add_argument('--region', choices=REGIONS, help='SO(3) angle region')
    gen.add_argument('--variant', choices=sorted(SCENE6DOF_SPLITS), help='Furniture scene split')
    gen.add_argument('--split', choices=SPLITS, help='Override the split label')
    gen.add_argument('--rotation-repr', choices=REPRESENTATIONS, help='Rotation representation (so3)')
    gen.add_argument('--out', required=True, help='Output directory')

    train = subparsers.add_parser('train', help='Train a toy model')
    train.add_argument('--mode', required=True, choices=MODES)
    train.add_argument('--task', default='dot2d', choices=TASKS)
    train.add_argument('--data', required=True, help='Dataset directory holding train.jsonl')
    train.add_argument('--steps', type=int, default=None, help='Override train.steps')
    train.add_argument('--resume', default=None, help='Checkpoint to continue training from')
    train.add_argument('--out', required=True, help='Output directory')

    evaluate = subparsers.add_parser('eval', help='Score predictions against ground truth')
    evaluate.add_argument('--task', required=True, choices=TASKS)
    evaluate.add_argument('--pred', required=True, help='Checkpoint file or JSONL of predicted programs')
    evaluate.add_argument('--gt', required=True, help='Ground-truth JSONL')
    evaluate.add_argument('--metrics', nargs='+', choices=METRICS, default=None)
    evaluate.add_argument('--train-data', default=None,
                          help='Training JSONL for the memorization ratio (dot2d)')
    evaluate.add_argument('--out', required=True, help='Output directory')

    plot = subparsers.add_parser('plot', help='Draw an SVG plot')
    plot.add_argument('--kind', required=True, choices=PLOT_KINDS)
    plot.add_argument('--inputs', nargs='+', required=True, help='Input CSV file(s)')
    plot.add_argument('--labels', nargs='+', default=None, help='One label per input')
    plot.add_argument('--out', required=True, help='Output .svg path')

    return parser.parse_args(argv)


def main(argv=None) -> int:
    """Main execution function"""
    args = parse_arguments(argv)
    args.argv = list(argv) if argv is not None else sys.argv[1:]
    logger = logging.getLogger(__name__)

    try:
        config = load_config(args.config)
        setup_logger(args.log_level, config['logging']['log_dir'], run_name=args.command)

        total_start_time = time.time()
        logger.info("=" * 80)
        logger.info(f"Inverse-graphics workbench: {args.command}")
        logger.info("=" * 80)

        COMMANDS[args.command](args, config)

        total_duration = time.time() - total_start_time
        logger.info("=" * 80)
        logger.info(f"Completed '{args.command}' in {total_duration:.2f}s")
        logger.info("=" * 80)
        return 0
    except DerenderError as e:
        logger.error(f"{type(e).__name__}: {e}")
        logger.debug("Traceback:", exc_info=True)
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        return 1


if __name__ == '__main__':
    sys.exit(main())

"""Subcommands: gen, train, eval and plot"""
from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
import sys
import time
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from ..datagen import (
    CheckerboardLayout,
    DatasetRecord,
    checkerboard_layout,
    generate_task,
    in_checkerboard,
    read_records,
    task_preset,
    write_records,
)
from ..dsl import parse_program
from ..evalkit import (
    evaluate_scenes,
    memorization_ratio,
    position_strings,
    three_decimal_domain,
    write_per_scene,
    write_report,
)
from ..numstream import build_vocabulary
from ..plotting import REQUIRED_COLUMNS, render_plot
from ..scene.model import SceneProgram
from ..toynet import (
    ModelConfig,
    TrainConfig,
    generate_batch,
    load_checkpoint,
    load_images,
    prepare_examples,
    save_checkpoint,
    train,
    write_trace,
)
from ..utils.config import resolve_data_path
from ..utils.errors import ConfigError, DataError, EmptyInput
from .manifest import RunManifest, partial_output


logger = logging.getLogger(__name__)

TASK_ATTRIBUTES = {
    'cogent': ('size', 'color', 'material', 'shape'),
    'dot2d': (),
    'so3': ('size', 'color', 'material', 'shape'),
    'single6dof': ('color', 'material', 'shape'),
    'scene6dof': ('color', 'material', 'shape', 'category'),
}
CHECKPOINT_NAME = 'model.ckpt'
TRACE_NAME = 'metrics.csv'


def _step(number: int, message: str) -> float:
    logger.info(f"Step {number}: {message}...")
    return time.time()


def _done(message: str, started: float) -> None:
    logger.info(f"✓ {message} (took {time.time() - started:.2f}s)")


def _manifest(args: argparse.Namespace, config: Dict[str, Any]) -> RunManifest:
    return RunManifest(command=args.command, argv=list(getattr(args, 'argv', sys.argv[1:])), config=config,
                       seed=args.seed, threads=args.threads)


# --- gen --------------------------------------------------------------------

def _variant(args: argparse.Namespace) -> Optional[str]:
    return args.condition or args.dist or args.region or args.variant


def cmd_gen(args: argparse.Namespace, config: Dict[str, Any]) -> Path:
    """
    Generate a dataset split (JSONL plus PNGs for dot2d) and its manifest

    Returns:
        Path of the written JSONL file
    """
    out_dir = Path(args.out)
    variant = _variant(args)
    manifest = _manifest(args, config)

    with partial_output(out_dir, manifest) as run:
        started = _step(1, f"Generating {args.n} '{args.task}' records")
        records = generate_task(args.task, args.n, args.seed, config, variant=variant,
                                threads=args.threads, rotation_repr=args.rotation_repr,
                                split=args.split)
        _done(f"Generated {len(records)} records", started)

        started = _step(2, "Writing records")
        split = records[0].split if records else (args.split or 'train')
        stem = variant if args.task == 'scene6dof' and variant and variant != 'train_solid' else split
        jsonl_path = write_records(records, out_dir, stem)
        run.manifest_name = f"{stem}.manifest.json"
        manifest.outputs.append(str(jsonl_path))
        manifest.extra = {'task': args.task, 'n': args.n, 'variant': variant, 'split': split}
        _done(f"Dataset written: {jsonl_path}", started)
    return jsonl_path


# --- train ------------------------------------------------------------------

def cmd_train(args: argparse.Namespace, config: Dict[str, Any]) -> Path:
    """
    Train a toy model on <data>/train.jsonl and write checkpoint, metrics trace and manifest

    Raises:
        ConfigError: For tasks without images, missing inputs or a checkpoint that does not fit
        DivergenceDetected: If training diverges
    """
    if args.task != 'dot2d':
        raise ConfigError(f"Training is supported for image tasks only (dot2d), not '{args.task}'")
    data_dir = resolve_data_path(args.data)
    train_path = data_dir / 'train.jsonl'
    if not train_path.exists():
        raise ConfigError(f"Training data not found: {train_path}")
    resume_path = Path(args.resume) if args.resume else None
    if resume_path is not None and not resume_path.exists():
        raise ConfigError(f"Checkpoint to resume from not found: {resume_path}")

    out_dir = Path(args.out)
    manifest = _manifest(args, config)
    manifest.inputs.append(str(train_path))
    if resume_path is not None:
        manifest.inputs.append(str(resume_path))
    preset = task_preset(args.task, config)

    with partial_output(out_dir, manifest):
        started = _step(1, f"Loading training data from {train_path}")
        records = read_records(train_path)
        vocab = build_vocabulary(preset.catalog, args.mode)
        examples = prepare_examples(records, vocab, args.mode, data_dir)
        _done(f"Loaded {len(examples)} examples, vocabulary of {len(vocab)} tokens", started)

        started = _step(2, f"Training {args.mode}-mode model")
        model_config = ModelConfig.from_config(config, len(vocab), args.mode)
        train_config = TrainConfig.from_config(config, args.seed, args.steps)
        resume = load_checkpoint(resume_path) if resume_path is not None else None
        if args.threads > 1:
            logger.warning(f"Training runs torch on one thread for reproducibility; --threads {args.threads} "
                           f"applies to data generation only")
        result = train(model_config, train_config, examples, vocab, preset, resume=resume)
        _done(f"Trained {result.step} steps", started)

        started = _step(3, "Writing checkpoint and metrics trace")
        checkpoint_path = save_checkpoint(out_dir / CHECKPOINT_NAME, result.model, vocab, result.scaler,
                                          result.step, train_config, result.optimizer, task=args.task)
        trace_path = out_dir / TRACE_NAME
        write_trace(result.trace, trace_path)
        manifest.outputs.extend([str(checkpoint_path), str(trace_path)])
        manifest.extra = {'task': args.task, 'mode': args.mode, 'steps': result.step,
                          'parameters': result.model.count_parameters(),
                          'train_threads': 1, 'resumed_from': resume.step if resume else None}
        _done(f"Checkpoint written: {checkpoint_path}", started)
    return checkpoint_path


# --- eval -------------------------------------------------------------------

def _parse_or_none(text: Optional[str], preset) -> Optional[SceneProgram]:
    if text is None:
        return None
    try:
        return parse_program(text, preset.catalog, preset.parse_options())
    except DataError as exc:
        logger.warning(f"Unparseable predicted program: {exc}")
        return None


def read_predictions(path: Path, preset) -> List[Optional[SceneProgram]]:
    """
    Predicted programs from JSONL lines carrying a 'program' string

    Lines flagged malformed (or with a program that fails to parse) become None.
    """
    preds: List[Optional[SceneProgram]] = []
    with Path(path).open('r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{line_number}: invalid JSON ({exc})") from exc
            if not isinstance(raw, dict) or 'program' not in raw:
                raise DataError(f"{path}:{line_number}: prediction lines need a 'program' field")
            preds.append(None if raw.get('malformed') else _parse_or_none(raw['program'], preset))
    return preds


def predict_with_checkpoint(checkpoint_path: Path, gt_records: Sequence[DatasetRecord], gt_dir: Path,
                            preset, out_dir: Path) -> tuple[List[Optional[SceneProgram]], Path]:
    """Greedy-decode every ground-truth image and write predictions.jsonl"""
    checkpoint = load_checkpoint(checkpoint_path)
    images = load_images(gt_records, gt_dir)
    results = generate_batch(checkpoint.model, images, checkpoint.vocab, checkpoint.scaler, preset)

    predictions_path = Path(out_dir) / 'predictions.jsonl'
    with predictions_path.open('w', encoding='utf-8', newline='\n') as f:
        for record, result in zip(gt_records, results):
            f.write(json.dumps({
                'index': record.index,
                'program': result.program if not result.malformed else None,
                'numbers': result.numbers,
                'malformed': result.malformed,
                'error': result.error,
            }, separators=(', ', ': ')) + '\n')
    return [r.scene for r in results], predictions_path


def _memorization(preds: Sequence[Optional[SceneProgram]], gt_scenes: Sequence[SceneProgram],
                  train_path: Path, layout: CheckerboardLayout) -> Optional[float]:
    """
    Memorization ratio of predicted (x, y) strings against the training set's

    Only scenes whose ground-truth dot lies off the training checkerboard count.
    """
    if not train_path.exists():
        logger.info(f"No training data at {train_path}; skipping memorization ratio")
        return None
    train_values = set(position_strings(r.scene for r in read_records(train_path)))
    off_board = [
        pred for pred, gt in zip(preds, gt_scenes)
        if pred is not None and gt.objects and not in_checkerboard(gt.objects[0].location[:2], layout)
    ]
    logger.debug(f"{len(off_board)} of {len(preds)} predictions have an off-checkerboard target")
    try:
        return memorization_ratio(position_strings(off_board), train_values,
                                  three_decimal_domain(0.0, 1.0) ** 2)
    except EmptyInput as exc:
        logger.warning(f"Memorization ratio skipped: {exc}")
        return None
    train_values = set(position_strings(r.scene for r in read_records(train_path)))
    predicted = position_strings(p for p in preds if p is not None)
    try:
        return memorization_ratio(predicted, train_values, three_decimal_domain(0.0, 1.0) ** 2)
    except EmptyInput as exc:
        logger.warning(f"Memorization ratio skipped: {exc}")
        return None


def cmd_eval(args: argparse.Namespace, config: Dict[str, Any]) -> Path:
    """
    Score predictions (a checkpoint or a JSONL of programs) against a ground-truth JSONL

    Returns:
        Path of the JSON report

    Raises:
        DataError: On schema problems or a prediction count that does not match
    """
    gt_path = resolve_data_path(args.gt)
    pred_path = Path(args.pred)
    if not gt_path.exists():
        raise ConfigError(f"Ground-truth file not found: {gt_path}")
    if not pred_path.exists():
        raise ConfigError(f"Prediction source not found: {pred_path}")

    out_dir = Path(args.out)
    preset = task_preset(args.task, config)
    eval_config = config['eval']
    metrics = args.metrics or eval_config['metrics']
    manifest = _manifest(args, config)
    manifest.inputs.extend([str(gt_path), str(pred_path)])

    with partial_output(out_dir, manifest):
        started = _step(1, f"Loading ground truth from {gt_path}")
        gt_records = read_records(gt_path)
        _done(f"Loaded {len(gt_records)} scenes", started)

        if pred_path.suffix == '.jsonl':
            started = _step(2, f"Reading predicted programs from {pred_path}")
            preds = read_predictions(pred_path, preset)
        else:
            started = _step(2, f"Decoding images with checkpoint {pred_path}")
            preds, predictions_path = predict_with_checkpoint(pred_path, gt_records, gt_path.parent,
                                                              preset, out_dir)
            manifest.outputs.append(str(predictions_path))
        _done(f"{len(preds)} predictions ready", started)

        started = _step(3, "Computing metrics")
        evaluation = evaluate_scenes(
            preds, [r.scene for r in gt_records],
            catalog=preset.catalog,
            attributes=TASK_ATTRIBUTES[args.task] if 'accuracies' in metrics else (),
            with_rotation=preset.has_rotation and 'geodesic_deg' in metrics,
            with_chamfer=preset.has_chamfer and 'chamfer' in metrics,
            points_per_object=eval_config['points_per_object'],
            seed=args.seed,
            chamfer_empty_penalty=eval_config['chamfer_empty_penalty'],
            layout=checkerboard_layout(config) if args.task == 'dot2d' else None,
        )
        if args.task == 'dot2d':
            train_path = Path(args.train_data) if args.train_data else gt_path.parent / 'train.jsonl'
            evaluation.report.memorization_ratio = _memorization(
                preds, [r.scene for r in gt_records], train_path, checkerboard_layout(config))
        _done("Metrics computed", started)

        json_path, csv_path = write_report(evaluation.report, out_dir)
        per_scene_path = write_per_scene(evaluation.per_scene, out_dir / 'per_scene.csv')
        manifest.outputs.extend([str(json_path), str(csv_path), str(per_scene_path)])
        manifest.extra = {'task': args.task, 'metrics': list(metrics), 'report': evaluation.report.to_dict()}
    return json_path


# --- plot -------------------------------------------------------------------

def _read_input(path: Path, kind: str) -> pd.DataFrame:
    if not path.exists():
        raise ConfigError(f"Plot input not found: {path}")
    try:
        return pd.read_csv(path)
    except pd.errors.EmptyDataError:
        logger.warning(f"{path} is empty; plotting axes only")
        return pd.DataFrame(columns=REQUIRED_COLUMNS[kind])


def cmd_plot(args: argparse.Namespace, config: Dict[str, Any]) -> Path:
    """
    Draw an SVG from one or more CSV inputs

    scatter2d reads a per-scene breakdown; id_ood_bars reads report CSVs and
    dynamics reads metrics traces, one labelled row group per input.
    """
    inputs = [Path(p) for p in args.inputs]
    labels = args.labels or [p.parent.name or p.stem for p in inputs]
    if len(labels) != len(inputs):
        raise ConfigError(f"{len(labels)} labels for {len(inputs)} inputs")

    frames = []
    for path, label in zip(inputs, labels):
        frame = _read_input(path, args.kind)
        if args.kind != 'scatter2d':
            frame = frame.assign(label=label)
        frames.append(frame)
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()

    out_path = Path(args.out)
    manifest = _manifest(args, config)
    manifest.inputs.extend(str(p) for p in inputs)
    with partial_output(out_path.parent, manifest, f"{out_path.stem}.manifest.json"):
        started = _step(1, f"Drawing {args.kind} plot")
        svg_path, sidecar = render_plot(args.kind, frame, out_path, config['plot'])
        manifest.outputs.extend([str(svg_path), str(sidecar)])
        _done(f"Plot written: {svg_path}", started)
    return svg_path


COMMANDS = {
    'gen': cmd_gen,
    'train': cmd_train,
    'eval': cmd_eval,
    'plot': cmd_plot,
}

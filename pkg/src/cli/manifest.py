"""Run manifests and the partial-output marker"""
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
import json
import logging
import os
from pathlib import Path
import time
from typing import Any, Dict, Iterator, List

from .. import __version__


logger = logging.getLogger(__name__)

PARTIAL_MARKER = '.partial'


@dataclass
class RunManifest:
    """What a command ran with and what it produced"""
    command: str
    argv: List[str]
    config: Dict[str, Any]
    seed: int
    threads: int
    inputs: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)
    version: str = __version__
    duration_s: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def write_manifest(manifest: RunManifest, path: Path) -> Path:
    """Write manifest JSON atomically (temporary file, then rename)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + '.tmp')
    tmp_path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True, default=str) + '\n',
                        encoding='utf-8')
    os.replace(tmp_path, path)
    logger.debug(f"Manifest written: {path}")
    return path


def read_manifest(path: Path) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding='utf-8'))


@dataclass
class RunContext:
    manifest: RunManifest
    manifest_name: str = 'manifest.json'


@contextmanager
def partial_output(out_dir: Path, manifest: RunManifest,
                   manifest_name: str = 'manifest.json') -> Iterator[RunContext]:
    """
    Mark out_dir as partial until the body finishes and the manifest is written

    The marker stays behind when the body raises, so an interrupted run is
    never mistaken for a complete one. The body may rename the manifest through
    the yielded context.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    marker = out_dir / PARTIAL_MARKER
    marker.write_text(f"{manifest.command} in progress\n", encoding='utf-8')
    run = RunContext(manifest, manifest_name)
    start = time.time()
    yield run
    manifest.duration_s = round(time.time() - start, 3)
    write_manifest(manifest, out_dir / run.manifest_name)
    marker.unlink(missing_ok=True)


def is_complete(out_dir: Path, manifest_name: str = 'manifest.json') -> bool:
    out_dir = Path(out_dir)
    return not (out_dir / PARTIAL_MARKER).exists() and (out_dir / manifest_name).exists()

"""Command-line subcommands and run manifests"""
from .commands import COMMANDS, cmd_eval, cmd_gen, cmd_plot, cmd_train
from .manifest import PARTIAL_MARKER, RunManifest, is_complete, partial_output, read_manifest, write_manifest

__all__ = [
    'COMMANDS', 'PARTIAL_MARKER', 'RunManifest', 'cmd_eval', 'cmd_gen', 'cmd_plot', 'cmd_train',
    'is_complete', 'partial_output', 'read_manifest', 'write_manifest',
]

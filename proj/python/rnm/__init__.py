"""Relation-aware neighborhood matching for knowledge-graph alignment."""

try:
    from ._core import (  # installed package layout
        __version__,
        default_config,
        entity_distance,
        eval_state,
        run,
        synthesize,
    )
except ImportError:  # build-tree layout: _core.so on PYTHONPATH
    from _core import (
        __version__,
        default_config,
        entity_distance,
        eval_state,
        run,
        synthesize,
    )

__all__ = [
    "__version__",
    "default_config",
    "entity_distance",
    "eval_state",
    "run",
    "synthesize",
]

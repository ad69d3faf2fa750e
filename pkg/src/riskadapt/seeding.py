"""Deterministic random-stream derivation.

Every run is driven by a single integer seed.  Each consumer (environment
dynamics, network initialisation, exploration, replay sampling, evaluation
episodes, ...) gets its own named sub-stream so that adding or removing one
consumer never perturbs the draws seen by the others.

Sub-streams are derived with ``numpy.random.SeedSequence`` spawn keys.  Names
are mapped onto fixed integers (see ``_STREAM_IDS``); extra integer components
(e.g. an evaluation-interval index or episode index) may follow the name.
"""

from __future__ import annotations

import numpy as np

_STREAM_IDS = {
    "env": 0,
    "agent_init": 1,
    "exploration": 2,
    "replay": 3,
    "eval": 4,
    "rnd_init": 5,
    "data": 6,
}


def _spawn_key(components: tuple) -> tuple[int, ...]:
    key = []
    for part in components:
        if isinstance(part, str):
            try:
                key.append(_STREAM_IDS[part])
            except KeyError:
                raise ValueError(f"unknown stream name {part!r}") from None
        else:
            key.append(int(part))
    return tuple(key)


def derive_seed(root_seed: int, *components) -> int:
    """Stable 64-bit seed for the sub-stream identified by ``components``."""
    seq = np.random.SeedSequence(entropy=int(root_seed), spawn_key=_spawn_key(components))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def substream(root_seed: int, *components) -> np.random.Generator:
    """Generator for the sub-stream identified by ``components``."""
    seq = np.random.SeedSequence(entropy=int(root_seed), spawn_key=_spawn_key(components))
    return np.random.default_rng(seq)

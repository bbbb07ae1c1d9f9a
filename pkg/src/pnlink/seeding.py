"""Deterministic seed derivation.

Every random draw in the simulator comes from a ``numpy.random.Generator``
built from a *seed label*. A label is either a non-negative integer or a
string; strings are hashed with SHA-256 so that any readable identifier can
name a stream. ``derive_seed`` maps ``(master_seed, trial, purpose)`` to a
64-bit integer label by hashing the canonical text ``"<master>/<trial>/<purpose>"``.
"""

from __future__ import annotations

import hashlib
from typing import Union

import numpy as np

SeedLabel = Union[int, str]


def _digest64(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def derive_seed(master_seed: int, trial: int, purpose: str) -> int:
    """Stable 64-bit seed label for one (trial, purpose) stream of a run."""
    return _digest64(f"{int(master_seed)}/{int(trial)}/{purpose}")


def sub_label(label: SeedLabel, *parts: object) -> int:
    """Child label of ``label``; used to split one stream into independent ones."""
    return _digest64("/".join([repr(label), *map(str, parts)]))


def rng_for(label: SeedLabel) -> np.random.Generator:
    if isinstance(label, (bool, np.bool_)):
        raise TypeError("seed label must be an int or str")
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("integer seed labels must be non-negative")
        entropy = int(label)
    elif isinstance(label, str):
        entropy = _digest64("str:" + label)
    else:
        raise TypeError(f"unsupported seed label type {type(label).__name__}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

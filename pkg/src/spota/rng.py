"""Deterministic, named random substreams.

All randomness in this package flows through counter-based Philox streams
derived from a master seed plus a path of labels/indices.  Two streams with
different paths are statistically independent; the same path always yields
the same stream, no matter how many other streams were consumed in between.
This is what makes synchronized (paired) evaluation of two policies and
order-independent parallel rollouts possible.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

EntropyPart = Union[int, str, np.integer]


def _as_entropy(part: EntropyPart) -> int:
    """Map a label or index to a 64-bit entropy word."""
    if isinstance(part, str):
        return int.from_bytes(hashlib.blake2b(part.encode(), digest_size=8).digest(), "big")
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    raise TypeError(f"entropy parts must be int or str, got {type(part).__name__}")


def seed_sequence(*path: EntropyPart) -> np.random.SeedSequence:
    return np.random.SeedSequence(tuple(_as_entropy(p) for p in path))


def stream(*path: EntropyPart) -> np.random.Generator:
    """Independent generator addressed by ``path``, e.g. ``stream(seed, "init-state", 3)``."""
    return np.random.Generator(np.random.Philox(seed_sequence(*path)))


def derive_key(*path: EntropyPart) -> int:
    """Stable 64-bit integer derived from ``path``, usable as a child seed."""
    return int(seed_sequence(*path).generate_state(1, np.uint64)[0])


@dataclass
class RolloutStreams:
    """Per-rollout named generators for one batch of episodes.

    Slot ``j`` of each list drives exactly one rollout, so a rollout's
    initial state, observation noise and exploration noise depend only on
    its own entropy path, never on the batch it happens to be evaluated in.
    """

    init: list[np.random.Generator]
    obs_noise: list[np.random.Generator]
    exploration: list[np.random.Generator]

    @property
    def batch(self) -> int:
        return len(self.init)


def rollout_streams(slot_paths: Sequence[tuple]) -> RolloutStreams:
    """Build the named substreams for a batch, one slot per entry of ``slot_paths``."""
    return RolloutStreams(
        init=[stream(*p, "init-state") for p in slot_paths],
        obs_noise=[stream(*p, "obs-noise") for p in slot_paths],
        exploration=[stream(*p, "exploration") for p in slot_paths],
    )

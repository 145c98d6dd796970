"""Counter-based random streams for reproducible, parallel shot generation.

Every shot owns a fixed span of the Philox counter space, so any chunking
of the shot range (any worker count, any restart offset) reproduces the
same draws bit for bit.  Normals are produced by inverse-CDF transform of
uniforms (fixed consumption per draw), never by rejection sampling, so the
per-shot word budget is exact.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

# Philox-4x64 emits 4 words per counter increment; advance() counts increments.
_BLOCK_WORDS = 4
_MASK64 = (1 << 64) - 1

NOISE_PURPOSE = 0
POSITION_PURPOSE = 1


def _to_uniform(raw: np.ndarray) -> np.ndarray:
    """Map uint64 words to float64 in the open interval (0, 1)."""
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


class ShotStream:
    """One logical stream: a fixed number of words per shot, block-aligned."""

    def __init__(self, seed: int, purpose: int, words_per_shot: int):
        self.seed = int(seed) & _MASK64
        self.purpose = int(purpose)
        self.words_per_shot = int(words_per_shot)
        self.blocks_per_shot = max(1, math.ceil(words_per_shot / _BLOCK_WORDS))

    def _bitgen(self, start_shot: int) -> Philox:
        bg = Philox(key=np.array([self.seed, self.purpose], dtype=np.uint64))
        if start_shot:
            bg.advance(start_shot * self.blocks_per_shot)
        return bg

    def raw(self, start_shot: int, n_shots: int) -> np.ndarray:
        """uint64 words, shape (n_shots, blocks_per_shot * 4)."""
        bg = self._bitgen(start_shot)
        words = bg.random_raw(n_shots * self.blocks_per_shot * _BLOCK_WORDS)
        return words.reshape(n_shots, -1)

    def uniforms(self, start_shot: int, n_shots: int) -> np.ndarray:
        """Open-interval uniforms, shape (n_shots, words_per_shot)."""
        return _to_uniform(self.raw(start_shot, n_shots)[:, : self.words_per_shot])

    def normals(self, start_shot: int, n_shots: int) -> np.ndarray:
        """Standard normals via the inverse normal CDF (fixed consumption)."""
        return ndtri(self.uniforms(start_shot, n_shots))

"""Counter-based random streams keyed by (master seed, path index).

Every Monte Carlo path draws from its own Philox stream, so results do not
depend on batch size, path order or backend. Independent sub-streams of a
path (Brownian increments, stable increments, jump arrivals, ...) live at
disjoint counter offsets: the high counter word holds the component id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BROWNIAN = 1
BRIDGE = 2
STABLE = 3
SMALL_JUMPS = 4
COMPOUND = 5
STABLE_JUMPS = 6

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class PathStream:
    """The rng state of one path: ``generator(component)`` is deterministic."""

    seed: int
    index: int

    def generator(self, component: int) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.index & _MASK64], dtype=np.uint64)
        counter = np.array([0, 0, 0, component], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))


def stream(seed: int, index: int = 0) -> PathStream:
    if seed < 0 or index < 0:
        raise ValueError("seed and path index must be non-negative")
    return PathStream(int(seed), int(index))

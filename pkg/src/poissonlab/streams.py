"""Reproducible splittable random streams.

Every sampler in the package is a pure function of its parameters and a
:class:`StreamKey`.  A key is a 64-bit seed plus a hierarchical path of
nonnegative integers; keys with distinct paths yield statistically
independent generators (numpy ``SeedSequence`` spawn keys).  Replicas of a
Monte Carlo experiment take ``key.child(i)``, lazy window extensions take
region-indexed children, and so on -- no sampler ever touches global RNG
state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["StreamKey"]


@dataclass(frozen=True)
class StreamKey:
    """Seed plus sub-stream path identifying one independent random stream."""

    seed: int
    path: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits (unsigned)")
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))
        if any(p < 0 for p in self.path):
            raise ValueError("path entries must be nonnegative")

    def child(self, *indices: int) -> "StreamKey":
        """Key for the sub-stream at ``path + indices``."""
        return StreamKey(self.seed, self.path + tuple(indices))

    def generator(self) -> np.random.Generator:
        """Fresh PCG64 generator for this key.  Same key, same draws."""
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))

    def to_json(self) -> dict:
        return {"seed": int(self.seed), "path": list(self.path)}

    @classmethod
    def from_json(cls, obj: dict) -> "StreamKey":
        return cls(int(obj["seed"]), tuple(obj["path"]))

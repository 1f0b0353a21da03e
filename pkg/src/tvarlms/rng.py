"""Deterministic seed derivation and innovation sampling.

Every random quantity is drawn from its own PCG64 stream whose seed is
derived from a master seed, a purpose tag and an integer index::

    stream_seed(master, tag, index)
        = splitmix64(splitmix64(master XOR fnv1a64(tag)) + index)

so that any single replicate can be regenerated in isolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

MASK64 = (1 << 64) - 1

FAMILIES = ("gaussian", "uniform", "student_t")


def splitmix64(x: int) -> int:
    """One SplitMix64 step: advance by the golden-ratio increment, then mix."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def fnv1a64(tag: str) -> int:
    h = 0xCBF29CE484222325
    for byte in tag.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & MASK64
    return h


def stream_seed(master: int, tag: str, index: int = 0) -> int:
    """Derive the 64-bit seed of stream ``(tag, index)`` under ``master``."""
    if master < 0 or index < 0:
        raise ValidationError("seeds and stream indices must be non-negative")
    inner = splitmix64((master & MASK64) ^ fnv1a64(tag))
    return splitmix64((inner + index) & MASK64)


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & MASK64))


@dataclass(frozen=True)
class InnovationSpec:
    """Distribution of the normalized innovations (zero mean, unit variance).

    ``moment_order_q`` is the moment order the family is guaranteed to have;
    for Student-t the degrees of freedom must exceed it.
    """

    family: str = "gaussian"
    moment_order_q: float = 4.0
    df: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(
                f"unknown innovation family {self.family!r}; expected one of {FAMILIES}")
        if not self.moment_order_q >= 2:
            raise ValidationError("moment_order_q must be >= 2")
        if self.family == "student_t":
            if self.df is None or not self.df > 2:
                raise ValidationError(
                    "student_t needs df > 2 (variance undefined otherwise)")
            if not self.df > self.moment_order_q:
                raise ValidationError(
                    f"student_t df={self.df} must exceed moment_order_q={self.moment_order_q}")

    def draw(self, gen: np.random.Generator, count: int) -> np.ndarray:
        if self.family == "gaussian":
            return gen.standard_normal(count)
        if self.family == "uniform":
            s = math.sqrt(3.0)
            return gen.uniform(-s, s, count)
        return gen.standard_t(self.df, count) * math.sqrt((self.df - 2.0) / self.df)


def sample_innovations(spec: InnovationSpec, count: int, stream: int) -> np.ndarray:
    """Draw ``count`` i.i.d. normalized innovations from stream seed ``stream``."""
    if count < 0:
        raise ValidationError("count must be >= 0")
    return spec.draw(generator(stream), count)


class InnovationStream:
    """Chunked reader over one innovation stream.

    Reading the stream in chunks yields exactly the values of a single
    bulk draw, which lets long paths be simulated without storing them.
    """

    def __init__(self, spec: InnovationSpec, seed: int):
        self.spec = spec
        self._gen = generator(seed)

    def take(self, count: int) -> np.ndarray:
        return self.spec.draw(self._gen, count)

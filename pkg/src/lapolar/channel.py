"""BPSK channel models producing decoder input LLRs.

Random numbers come from Philox-4x64-10 (numpy's ``Philox`` bit generator)
keyed by ``(seed, stream)``; uniforms are the usual 53-bit doubles
``(x >> 11) * 2^-53``.  Gaussian samples use the basic Box-Muller transform
``sqrt(-2 ln(1 - u1)) cos(2 pi u2)`` on consecutive uniform pairs, so the
noise stream can be reproduced outside numpy from the same key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ChannelConfig:
    kind: str = "awgn"
    ebno_db: float | None = 2.0
    crossover_p: float | None = None
    seed: int = 0
    frames: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("awgn", "bsc"):
            raise ConfigError(f"channel kind must be 'awgn' or 'bsc', got {self.kind!r}")
        if self.kind == "awgn" and (self.ebno_db is None or not math.isfinite(self.ebno_db)):
            raise ConfigError("AWGN channel needs a finite Eb/N0")
        if self.kind == "bsc" and (self.crossover_p is None or not 0 < self.crossover_p < 0.5):
            raise ConfigError("BSC crossover probability must be in (0, 0.5)")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if self.frames < 0:
            raise ConfigError("frames must be >= 0")


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    key = np.array([seed % 2**64, stream % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def box_muller(rng: np.random.Generator, shape) -> np.ndarray:
    u = rng.random(tuple(shape) + (2,))
    return np.sqrt(-2.0 * np.log(1.0 - u[..., 0])) * np.cos(2.0 * np.pi * u[..., 1])


def noise_variance(ebno_db: float, rate: float) -> float:
    """Per-dimension noise variance for unit-energy BPSK at code rate ``rate``."""
    if rate <= 0:
        raise ConfigError("code rate must be positive")
    return 1.0 / (2.0 * rate * 10.0 ** (ebno_db / 10.0))


def channel_llrs(codeword, cfg: ChannelConfig, rate: float = 1.0, rng: np.random.Generator | None = None) -> np.ndarray:
    """LLRs of BPSK-modulated ``codeword`` bits (any shape) after the channel.

    Without ``rng`` a fresh generator keyed by ``cfg.seed`` is used, so
    repeated calls give identical vectors.
    """
    x = np.asarray(codeword, dtype=np.uint8)
    rng = rng or make_rng(cfg.seed)
    if cfg.kind == "awgn":
        var = noise_variance(cfg.ebno_db, rate)
        y = (1.0 - 2.0 * x) + math.sqrt(var) * box_muller(rng, x.shape)
        return 2.0 * y / var
    p = cfg.crossover_p
    r = x ^ (rng.random(x.shape) < p).astype(np.uint8)
    return (1.0 - 2.0 * r) * math.log((1 - p) / p)


def uncoded_bpsk_ber(ebno_db: float) -> float:
    """``Q(sqrt(2 Eb/N0))``."""
    return 0.5 * math.erfc(math.sqrt(10.0 ** (ebno_db / 10.0)))

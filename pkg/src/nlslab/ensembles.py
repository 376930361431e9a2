"""Seeded random ensembles.

All randomness flows through numpy's Philox counter-based bit generator.
A stream is identified by ``(seed, key)``; distinct keys map to disjoint
SeedSequence spawn keys, so sub-streams never overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_SEED = 2**64 - 1


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``."""
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError("seed must be a 64-bit unsigned integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(int(rng))


@dataclass(frozen=True)
class EnsembleConfig:
    D: int
    seed: int = 0
    sigma: float | None = None

    def __post_init__(self):
        if self.D < 4 or self.D % 2:
            raise ValueError(f"D must be even and >= 4, got {self.D}")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def scale(self) -> float:
        return self.sigma if self.sigma is not None else 1.0 / np.sqrt(self.D)


def goe_matrix(D: int, sigma: float, rng) -> np.ndarray:
    """Real symmetric matrix: off-diagonal N(0, σ²), diagonal N(0, 2σ²)."""
    rng = as_generator(rng)
    A = rng.normal(0.0, sigma, size=(D, D))
    return (A + A.T) / np.sqrt(2.0)


def goe(cfg: EnsembleConfig, key: int = 0) -> np.ndarray:
    return goe_matrix(cfg.D, cfg.scale, stream(cfg.seed, key))


def haar_orthogonal(D: int, rng) -> np.ndarray:
    """Haar-random orthogonal matrix via Gaussian QR with R's diagonal made positive."""
    rng = as_generator(rng)
    if D == 1:
        return np.ones((1, 1))
    Z = rng.standard_normal((D, D))
    Q, R = np.linalg.qr(Z)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def random_phases(n: int, rng) -> np.ndarray:
    rng = as_generator(rng)
    theta = rng.uniform(0.0, 2 * np.pi, size=n)
    return np.exp(1j * theta)


def spacing_ratio(levels) -> float:
    """Mean of min(s_k, s_{k+1}) / max(s_k, s_{k+1}) over sorted levels."""
    e = np.sort(np.asarray(levels, float))
    s = np.diff(e)
    a, b = s[:-1], s[1:]
    r = np.minimum(a, b) / np.maximum(a, b)
    return float(np.mean(r))

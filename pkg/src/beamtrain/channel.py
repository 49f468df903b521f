"""Beamspace channel model: uniform path subsets, complex gains, DFT codebook.

A realization holds, per user, a uniformly drawn set of L path positions in
[1, N_t] and iid circular complex Gaussian gains of variance 1/L on those
positions (exact zeros elsewhere).  Beam index arguments are 1-based
throughout, matching the codebook numbering; user indices are 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .rng import StreamKey, substream_words, words_to_normals, words_to_unit

__all__ = [
    "FixedPaths",
    "ScaledPaths",
    "ChannelConfig",
    "ChannelRealization",
    "sample_channel",
    "dft_beam",
    "effective_gain",
    "antenna_domain_vector",
    "realization_records",
    "dump_realization",
]


@dataclass(frozen=True)
class FixedPaths:
    """Path count held constant in N_t."""

    count: int

    def resolve(self, n_t: int) -> int:
        if self.count < 1:
            raise ValueError(f"path count must be >= 1, got {self.count}")
        if self.count > n_t:
            raise ValueError(f"path count {self.count} exceeds N_t={n_t}")
        return self.count


@dataclass(frozen=True)
class ScaledPaths:
    """Path count growing linearly with N_t: L = round(c * N_t), c in (0, 1]."""

    fraction: float

    def resolve(self, n_t: int) -> int:
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"fraction must lie in (0, 1], got {self.fraction}")
        # round-half-up, clamped into [1, N_t]
        return min(max(int(math.floor(self.fraction * n_t + 0.5)), 1), n_t)


@dataclass(frozen=True)
class ChannelConfig:
    n_t: int
    paths: FixedPaths | ScaledPaths
    n_users: int = 1

    def __post_init__(self):
        if self.n_t < 2:
            raise ValueError(f"N_t must be >= 2, got {self.n_t}")
        if self.n_users < 1:
            raise ValueError(f"user count must be >= 1, got {self.n_users}")

    @property
    def n_paths(self) -> int:
        return self.paths.resolve(self.n_t)


@dataclass(frozen=True)
class ChannelRealization:
    """One channel draw: per-user path positions and beam-domain gains.

    ``supports`` is (U, L) of 1-based positions, ascending per user;
    ``beam_gains`` is the dense (U, N_t) gain matrix, exactly zero off-support.
    Arrays are frozen after construction and safe to share.
    """

    n_t: int
    n_paths: int
    supports: np.ndarray
    beam_gains: np.ndarray

    def __post_init__(self):
        self.supports.flags.writeable = False
        self.beam_gains.flags.writeable = False

    @property
    def n_users(self) -> int:
        return self.supports.shape[0]


def _subsets_from_uniforms(u: np.ndarray, n_t: int) -> np.ndarray:
    """Partial Fisher-Yates: map uniforms (rows, L) to L-subsets of 1..N_t.

    Step k swaps slot k with a uniform slot in [k, N_t); after L steps the
    first L slots hold a uniformly random L-subset (in random order).
    """
    rows, n_sel = u.shape
    out = np.empty((rows, n_sel), dtype=np.int32)
    # bound the (rows, n_t) scratch to ~2^24 cells
    step = max(1, (1 << 24) // max(n_t, 1))
    for lo in range(0, rows, step):
        hi = min(lo + step, rows)
        idx = np.broadcast_to(np.arange(1, n_t + 1, dtype=np.int32), (hi - lo, n_t)).copy()
        r = np.arange(hi - lo)
        for k in range(n_sel):
            j = k + (u[lo:hi, k] * (n_t - k)).astype(np.int64)
            picked = idx[r, j].copy()
            idx[r, j] = idx[:, k]
            idx[:, k] = picked
        out[lo:hi] = idx[:, :n_sel]
    return out


def draw_support_gains(n_t, n_paths, seed, point, trial0, n_trials, user):
    """Vectorized keyed channel draws for one user over a trial range.

    Returns (supports, gains): (T, L) int32 positions sorted ascending and the
    aligned (T, L) complex gains.  Identical to per-trial ``sample_channel``
    output for the same (seed, point, trial, user) keys.
    """
    trials = np.arange(trial0, trial0 + n_trials, dtype=np.uint64)
    words = substream_words(seed, point, trials, [user], 3 * n_paths)[:, 0, :]
    supports = _subsets_from_uniforms(words_to_unit(words[:, :n_paths]), n_t)
    z = words_to_normals(words[:, n_paths:])
    gains = (z[:, 0::2] + 1j * z[:, 1::2]) * math.sqrt(1.0 / (2 * n_paths))
    order = np.argsort(supports, axis=1)
    supports = np.take_along_axis(supports, order, axis=1)
    gains = np.take_along_axis(gains, order, axis=1)
    return supports, gains


def sample_channel(cfg: ChannelConfig, stream: StreamKey) -> ChannelRealization:
    """Draw one realization; deterministic in the stream key (seed, trial, point)."""
    n_paths = cfg.n_paths
    supports = np.empty((cfg.n_users, n_paths), dtype=np.int64)
    dense = np.zeros((cfg.n_users, cfg.n_t), dtype=np.complex128)
    for u in range(cfg.n_users):
        sup, g = draw_support_gains(
            cfg.n_t, n_paths, stream.seed, stream.point, stream.trial, 1, u
        )
        supports[u] = sup[0]
        dense[u, sup[0] - 1] = g[0]
    return ChannelRealization(cfg.n_t, n_paths, supports, dense)


def dft_beam(n_t: int, i: int) -> np.ndarray:
    """Unit-norm analog beam i: conjugated i-th DFT column over sqrt(N_t)."""
    if not 1 <= i <= n_t:
        raise ValueError(f"beam index {i} outside [1, {n_t}]")
    k = np.arange(n_t)
    return np.exp(2j * np.pi * (i - 1) * k / n_t) / math.sqrt(n_t)


def effective_gain(ch: ChannelRealization, user: int, i: int) -> complex:
    """Effective channel of a user on beam i: sqrt(N_t) times the beam gain."""
    if not 1 <= i <= ch.n_t:
        raise ValueError(f"beam index {i} outside [1, {ch.n_t}]")
    return complex(math.sqrt(ch.n_t) * ch.beam_gains[user, i - 1])


def antenna_domain_vector(ch: ChannelRealization, user: int) -> np.ndarray:
    """Antenna-space channel vector: DFT synthesis of the beam gains."""
    sup = ch.supports[user]
    k = np.arange(ch.n_t)
    cols = np.exp(-2j * np.pi * np.outer(k, sup - 1) / ch.n_t)
    return cols @ ch.beam_gains[user, sup - 1]


def realization_records(ch: ChannelRealization) -> list[dict]:
    """JSON-ready debug records, one per user."""
    recs = []
    for u in range(ch.n_users):
        g = ch.beam_gains[u, ch.supports[u] - 1]
        recs.append(
            {
                "user": u,
                "indices": [int(i) for i in ch.supports[u]],
                "gains_re": [float(v) for v in g.real],
                "gains_im": [float(v) for v in g.imag],
            }
        )
    return recs


def dump_realization(ch: ChannelRealization, path) -> None:
    with open(path, "w") as f:
        json.dump(realization_records(ch), f)

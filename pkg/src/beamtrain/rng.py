"""Counter-based random streams built on Philox4x64-10.

Every random quantity in the simulator is a pure function of a
``(seed, point, trial, user)`` key.  Each key owns a disjoint slice of the
128-bit Philox counter space, so trials can be generated in any order, in any
batch size, on any number of workers, and always reproduce bit-identically.

Counter layout (four 64-bit words, little-endian significance):

    counter = (block, user, trial, point)     key = (seed, STREAM_TAG)

where ``block`` indexes successive 256-bit output blocks inside one
(user, trial, point) substream.  A substream would collide with a neighbour
only after 2**64 blocks, far beyond any use here.

The generator core is the reference Philox4x64 with 10 rounds (Random123
constants); ``philox4x64`` is validated against the published known-answer
vectors and against numpy's ``np.random.Philox`` in the test suite.  All
arithmetic is vectorized uint64 numpy, so drawing a million keyed substreams
costs a handful of array operations rather than a million generator setups.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
PHILOX_M1 = np.uint64(0xCA5A826395121157)
PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

# Fixed second key word so seed=0 does not degenerate to the all-zero key.
STREAM_TAG = np.uint64(0x9E3779B97F4A7C15)

_U64 = np.uint64


def _mulhilo(a, b):
    """Full 64x64 -> 128 bit product of uint64 arrays, as (hi, lo)."""
    with np.errstate(over="ignore"):
        lo = a * b
        a_lo = a & _MASK32
        a_hi = a >> _SHIFT32
        b_lo = b & _MASK32
        b_hi = b >> _SHIFT32
        p1 = a_lo * b_hi
        p2 = a_hi * b_lo
        carry = (((a_lo * b_lo) >> _SHIFT32) + (p1 & _MASK32) + (p2 & _MASK32)) >> _SHIFT32
        hi = a_hi * b_hi + (p1 >> _SHIFT32) + (p2 >> _SHIFT32) + carry
    return hi, lo


def philox4x64(c0, c1, c2, c3, key0, key1, rounds=10):
    """Philox4x64 block function on broadcastable uint64 arrays.

    Returns the four output words for each counter.  Matches the Random123
    reference (and numpy's Philox stream, which emits counter+1 first).
    """
    x0 = np.asarray(c0, dtype=np.uint64)
    x1, x2, x3 = (np.asarray(c, dtype=np.uint64) for c in (c1, c2, c3))
    shape = np.broadcast_shapes(x0.shape, x1.shape, x2.shape, x3.shape)
    x0, x1, x2, x3 = (np.broadcast_to(x, shape).copy() for x in (x0, x1, x2, x3))
    k0 = _U64(key0)
    k1 = _U64(key1)
    with np.errstate(over="ignore"):
        for _ in range(rounds):
            hi0, lo0 = _mulhilo(x0, PHILOX_M0)
            hi1, lo1 = _mulhilo(x2, PHILOX_M1)
            x0 = hi1 ^ x1 ^ k0
            x1 = lo1
            x2 = hi0 ^ x3 ^ k1
            x3 = lo0
            k0 = k0 + PHILOX_W0
            k1 = k1 + PHILOX_W1
    return x0, x1, x2, x3


def substream_words(seed, point, trials, users, n_words):
    """Raw 64-bit words for a block of keyed substreams.

    ``trials`` and ``users`` are integer arrays (or scalars); the result has
    shape ``(len(trials), len(users), n_words)`` where words ``[t, u, :]``
    belong to substream ``(seed, point, trials[t], users[u])``.
    """
    trials = np.atleast_1d(np.asarray(trials, dtype=np.uint64))
    users = np.atleast_1d(np.asarray(users, dtype=np.uint64))
    n_blocks = -(-n_words // 4)
    blocks = np.arange(n_blocks, dtype=np.uint64)
    c0 = blocks[None, None, :]
    c1 = users[None, :, None]
    c2 = trials[:, None, None]
    c3 = _U64(int(point) & 0xFFFFFFFFFFFFFFFF)
    x0, x1, x2, x3 = philox4x64(c0, c1, c2, c3, _U64(int(seed) & 0xFFFFFFFFFFFFFFFF), STREAM_TAG)
    out = np.stack([x0, x1, x2, x3], axis=-1).reshape(len(trials), len(users), 4 * n_blocks)
    return out[:, :, :n_words]


def words_to_unit(words):
    """Map raw words to float64 in [0, 1) with 53-bit resolution."""
    return (words >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def words_to_normals(words):
    """Map an even count of raw words to standard normals via Box-Muller.

    Consecutive word pairs (w0, w1) produce normal pairs (z0, z1).  The radial
    uniform is shifted into (0, 1] so the log never sees zero.
    """
    if words.shape[-1] % 2:
        raise ValueError("Box-Muller needs an even number of words")
    u1 = ((words[..., 0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * (2.0 ** -53)
    u2 = words_to_unit(words[..., 1::2])
    r = np.sqrt(-2.0 * np.log(u1))
    theta = (2.0 * np.pi) * u2
    out = np.empty(words.shape, dtype=np.float64)
    out[..., 0::2] = r * np.cos(theta)
    out[..., 1::2] = r * np.sin(theta)
    return out


@dataclass(frozen=True)
class StreamKey:
    """Identifies one trial's random substream: (seed, trial, point)."""

    seed: int
    trial: int
    point: int = 0

    def words(self, user, n_words):
        """Raw words for this trial's given user, shape (n_words,)."""
        return substream_words(self.seed, self.point, [self.trial], [user], n_words)[0, 0]

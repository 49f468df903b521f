"""Single-user schemes: interleaved training, non-interleaved baselines, beamformers.

The interleaved scheme trains beams in natural order and stops as soon as the
strongest min(N_RF, known) beams clear the outage threshold; the baselines
train a fixed window.  All schemes share the same outage criterion

    sum of selected |gain|^2  >  alpha / N_t.

Rate bookkeeping: a scheme that declines to transmit on outage reports rate 0
for that realization; the rate-variant and the non-interleaved baselines
always transmit on the best beams they know.  No training-overhead discount
is applied anywhere; lengths are reported alongside so any discount can be
applied downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, dft_beam, draw_support_gains

__all__ = [
    "SuSystemConfig",
    "SuEpisodeResult",
    "it_su_episode",
    "nit_su_full",
    "nit_su_partial",
    "su_rate_episode",
    "su_beamformers",
    "SuBatchStats",
    "run_su_batch",
    "SU_SCHEMES",
]

SU_SCHEMES = ("it", "nit_full", "nit_partial", "rate_variant")


@dataclass(frozen=True)
class SuSystemConfig:
    """System parameters; the outage threshold alpha = (2^R_th - 1) / P."""

    n_t: int
    n_rf: int
    power: float = 1.0
    rate_threshold: float = 1.0

    def __post_init__(self):
        if self.n_rf < 1:
            raise ValueError(f"N_RF must be >= 1, got {self.n_rf}")
        if self.power <= 0:
            raise ValueError(f"power must be positive, got {self.power}")
        if self.rate_threshold < 0:
            raise ValueError(f"target rate must be >= 0, got {self.rate_threshold}")

    @classmethod
    def from_alpha(cls, n_t, n_rf, alpha, power=1.0):
        if alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {alpha}")
        return cls(n_t, n_rf, power, math.log2(1.0 + alpha * power))

    @property
    def alpha(self) -> float:
        return (2.0 ** self.rate_threshold - 1.0) / self.power


@dataclass(frozen=True)
class SuEpisodeResult:
    training_length: int
    outage: bool
    selected_beams: tuple[int, ...]
    received_snr: float
    rate: float


def _single_user_paths(ch: ChannelRealization):
    if ch.n_users != 1:
        raise ValueError(f"single-user scheme on a {ch.n_users}-user realization")
    sup = ch.supports[0]
    gains = ch.beam_gains[0, sup - 1]
    return sup, np.abs(gains) ** 2


def _select(known: list[tuple[float, int]], n_rf: int):
    """Strongest min(n_rf, |known|) beams; ties broken by lower beam index."""
    sel = sorted(known, key=lambda t: (-t[0], t[1]))[: min(n_rf, len(known))]
    power = math.fsum(t[0] for t in sel)
    return tuple(sorted(t[1] for t in sel)), power


def it_su_episode(ch: ChannelRealization, cfg: SuSystemConfig) -> SuEpisodeResult:
    """Interleaved training: stop at the first beam whose addition avoids outage."""
    sup, g2 = _single_user_paths(ch)
    a = cfg.alpha / cfg.n_t
    known: list[tuple[float, int]] = []
    for pos, power in zip(sup, g2):
        if power == 0.0:  # synthetic zero inside the support set: a zero beam
            continue
        known.append((float(power), int(pos)))
        beams, s = _select(known, cfg.n_rf)
        if s > a:
            snr = cfg.power * cfg.n_t * s
            return SuEpisodeResult(int(pos), False, beams, snr, math.log2(1.0 + snr))
    beams, s = _select(known, cfg.n_rf)
    snr = cfg.power * cfg.n_t * s
    return SuEpisodeResult(cfg.n_t, True, beams, snr, 0.0)


def su_rate_episode(ch: ChannelRealization, cfg: SuSystemConfig) -> SuEpisodeResult:
    """Interleaved variant that still transmits on the best beams after a full sweep."""
    res = it_su_episode(ch, cfg)
    if not res.outage:
        return res
    rate = math.log2(1.0 + res.received_snr)
    return SuEpisodeResult(res.training_length, True, res.selected_beams, res.received_snr, rate)


def nit_su_full(ch: ChannelRealization, cfg: SuSystemConfig) -> SuEpisodeResult:
    """Full training: all N_t beams, then one shot at the best combination."""
    return nit_su_partial(ch, cfg, cfg.n_t)


def nit_su_partial(ch: ChannelRealization, cfg: SuSystemConfig, l_trained: int) -> SuEpisodeResult:
    """Fixed-window training over beams 1..l_trained."""
    if not 1 <= l_trained <= cfg.n_t:
        raise ValueError(f"l_trained={l_trained} outside [1, {cfg.n_t}]")
    sup, g2 = _single_user_paths(ch)
    known = [
        (float(p), int(pos)) for pos, p in zip(sup, g2) if pos <= l_trained and p > 0.0
    ]
    beams, s = _select(known, cfg.n_rf)
    a = cfg.alpha / cfg.n_t
    outage = s <= a
    snr = cfg.power * cfg.n_t * s
    return SuEpisodeResult(l_trained, outage, beams, snr, math.log2(1.0 + snr))


def su_beamformers(n_t: int, selected):
    """Analog columns and matched baseband vector for the selected beams.

    ``selected`` pairs (beam index, complex gain).  The analog matrix stacks
    the codebook columns; the baseband vector is the conjugated gain vector
    normalized to unit power.
    """
    selected = list(selected)
    if not selected:
        raise ValueError("beam selection is empty")
    gains = np.array([g for _, g in selected], dtype=np.complex128)
    norm = np.linalg.norm(gains)
    if norm == 0.0:
        raise ValueError("all selected gains are zero")
    f_rf = np.column_stack([dft_beam(n_t, int(i)) for i, _ in selected])
    f_bb = gains.conj() / norm
    return f_rf, f_bb


def _prefix_top_sums(g2: np.ndarray, n_rf: int) -> np.ndarray:
    """Running sum of the top-min(n_rf, k) gains over position-ordered prefixes.

    g2 is (T, L) in ascending position order; column k of the result is the
    selected power after the (k+1)-th path position has been trained.
    """
    n_trials, n_paths = g2.shape
    r = min(n_rf, n_paths)
    out = np.empty_like(g2)
    buf = np.empty((n_trials, r))
    s = np.zeros(n_trials)
    for k in range(n_paths):
        g = g2[:, k]
        if k < r:
            buf[:, k] = g
            s = s + g
            buf[:, : k + 1].sort(axis=1)
        else:
            floor = buf[:, 0]
            take = g > floor
            s = np.where(take, s + g - floor, s)
            buf[take, 0] = g[take]
            buf.sort(axis=1)
        out[:, k] = s
    return out


@dataclass
class SuBatchStats:
    """Per-trial outcomes for one scheme over a seeded batch."""

    lengths: np.ndarray
    outage: np.ndarray
    snr: np.ndarray
    rate: np.ndarray


def run_su_batch(cfg, n_paths, schemes, seed, trials, point=0, trial0=0,
                 l_trained=None, chunk=65536):
    """Vectorized Monte Carlo over keyed trials for any subset of SU schemes.

    All requested schemes are evaluated on the same realizations (matched
    seeds), which is what the per-realization equivalence properties need.
    Results are functions of (seed, point, trial) only, so chunking and
    worker counts can never change them.
    """
    for s in schemes:
        if s not in SU_SCHEMES:
            raise ValueError(f"unknown scheme {s!r}")
    if "nit_partial" in schemes and l_trained is None:
        raise ValueError("nit_partial needs l_trained")
    n_t, n_rf = cfg.n_t, cfg.n_rf
    a = cfg.alpha / n_t
    out = {
        s: SuBatchStats(
            np.empty(trials, dtype=np.int32),
            np.empty(trials, dtype=bool),
            np.empty(trials),
            np.empty(trials),
        )
        for s in schemes
    }
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        sup, gains = draw_support_gains(n_t, n_paths, seed, point, trial0 + lo, hi - lo, 0)
        g2 = np.abs(gains) ** 2
        prefix = _prefix_top_sums(g2, n_rf)
        rows = np.arange(hi - lo)
        exceed = prefix > a
        hit = exceed.any(axis=1)
        kstar = exceed.argmax(axis=1)
        s_stop = np.where(hit, prefix[rows, kstar], prefix[:, -1])
        s_full = prefix[:, -1]
        block = slice(lo, hi)
        for scheme in schemes:
            st = out[scheme]
            if scheme in ("it", "rate_variant"):
                st.lengths[block] = np.where(hit, sup[rows, kstar], n_t)
                st.outage[block] = ~hit
                st.snr[block] = cfg.power * n_t * s_stop
                rate = np.log2(1.0 + cfg.power * n_t * s_stop)
                if scheme == "it":
                    rate = np.where(hit, rate, 0.0)
                st.rate[block] = rate
            elif scheme == "nit_full":
                st.lengths[block] = n_t
                st.outage[block] = s_full <= a
                st.snr[block] = cfg.power * n_t * s_full
                st.rate[block] = np.log2(1.0 + cfg.power * n_t * s_full)
            else:  # nit_partial
                counts = (sup <= l_trained).sum(axis=1)
                s_part = np.where(counts > 0, prefix[rows, np.maximum(counts - 1, 0)], 0.0)
                st.lengths[block] = l_trained
                st.outage[block] = s_part <= a
                st.snr[block] = cfg.power * n_t * s_part
                st.rate[block] = np.log2(1.0 + cfg.power * n_t * s_part)
    return out

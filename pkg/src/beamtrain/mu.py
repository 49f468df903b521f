"""Multi-user schemes: joint interleaved training, beam assignment, ZF transmission.

A beam assignment is an ordered tuple (n_1, ..., n_U) giving each user's beam.
It is feasible when the U x U effective channel matrix has full rank, in which
case zero-forcing baseband serves every user at the common post-ZF SNR factor
lambda^2.  Training stops at the first step where the chosen assignment method
finds a feasible assignment with lambda^2 above the per-user threshold.

Two assignment methods are provided: exhaustive search over all distinct beam
tuples drawn from the fed-back non-zero beams (optimal, O(|B|^U)), and the
stage-wise max-min (lexicographic bottleneck) assignment (O(U^2 |B|^2)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, dft_beam, draw_support_gains

__all__ = [
    "RANK_TOL",
    "MuSystemConfig",
    "MuEpisodeResult",
    "BeamAssignment",
    "ExhaustiveCapError",
    "zf_lambda",
    "zf_precoders",
    "check_feasible",
    "exhaustive_assignment",
    "maxmin_assignment",
    "it_mu_episode",
    "nit_mu_full",
    "nit_mu_partial",
    "MuBatchStats",
    "run_mu_batch",
    "MU_SCHEMES",
]

BeamAssignment = tuple[int, ...]

MU_SCHEMES = ("it", "nit_full", "nit_partial")

# Relative singular-value threshold declaring the effective matrix rank-deficient.
# Gains are continuous so real draws are never near it; it guards synthetic input.
RANK_TOL = 1e-9

# Ordered-tuple budget for the exhaustive search before it refuses to run.
DEFAULT_SEARCH_CAP = 10 ** 6


class ExhaustiveCapError(RuntimeError):
    """Exhaustive beam search would exceed its tuple budget."""


@dataclass(frozen=True)
class MuSystemConfig:
    """System parameters; per-user threshold alpha_bar = (2^R_th - 1) U / P."""

    n_t: int
    n_rf: int
    n_users: int
    power: float = 1.0
    rate_threshold: float = 1.0

    def __post_init__(self):
        if self.n_users < 1:
            raise ValueError(f"user count must be >= 1, got {self.n_users}")
        if self.n_users > self.n_rf:
            raise ValueError(f"U={self.n_users} exceeds N_RF={self.n_rf}")
        if self.power <= 0:
            raise ValueError(f"power must be positive, got {self.power}")
        if self.rate_threshold < 0:
            raise ValueError(f"target rate must be >= 0, got {self.rate_threshold}")

    @classmethod
    def from_alpha_bar(cls, n_t, n_rf, n_users, alpha_bar, power=1.0):
        if alpha_bar < 0:
            raise ValueError(f"alpha_bar must be >= 0, got {alpha_bar}")
        rate = math.log2(1.0 + alpha_bar * power / n_users)
        return cls(n_t, n_rf, n_users, power, rate)

    @property
    def alpha_bar(self) -> float:
        return (2.0 ** self.rate_threshold - 1.0) * self.n_users / self.power


@dataclass(frozen=True)
class MuEpisodeResult:
    training_length: int
    outage: bool
    assignment: BeamAssignment | None
    lambda_sq: float
    method: str


def _lambda_sq_from_matrix(h_eff: np.ndarray) -> float:
    """U / ||H^+ ||_F^2 from singular values; 0 for a rank-deficient matrix."""
    s = np.linalg.svd(h_eff, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= RANK_TOL * s[0]:
        return 0.0
    return h_eff.shape[0] / float(np.sum(1.0 / s ** 2))


def _effective_matrix(assignment, ch: ChannelRealization) -> np.ndarray:
    cols = [int(c) for c in assignment]
    if len(cols) != ch.n_users:
        raise ValueError(f"assignment length {len(cols)} != user count {ch.n_users}")
    for c in cols:
        if not 1 <= c <= ch.n_t:
            raise ValueError(f"beam index {c} outside [1, {ch.n_t}]")
    return math.sqrt(ch.n_t) * ch.beam_gains[:, [c - 1 for c in cols]]


def zf_lambda(assignment, ch: ChannelRealization) -> float:
    """lambda^2 of ZF on the given assignment; 0 signals an infeasible one.

    The analog codebook columns are orthonormal, so the Frobenius norm in the
    power constraint can be taken on the baseband pseudo-inverse alone.
    """
    cols = tuple(int(c) for c in assignment)
    if len(set(cols)) < len(cols):
        return 0.0
    return _lambda_sq_from_matrix(_effective_matrix(cols, ch))


def zf_precoders(assignment, ch: ChannelRealization):
    """(F_RF, F_BB, lambda) for a feasible assignment; ValueError if singular."""
    h_eff = _effective_matrix(assignment, ch)
    lam_sq = zf_lambda(assignment, ch)
    if lam_sq == 0.0:
        raise ValueError("assignment is infeasible (singular effective matrix)")
    lam = math.sqrt(lam_sq)
    pinv = h_eff.conj().T @ np.linalg.inv(h_eff @ h_eff.conj().T)
    f_rf = np.column_stack([dft_beam(ch.n_t, int(c)) for c in assignment])
    return f_rf, lam * pinv, lam


def check_feasible(assignment, ch: ChannelRealization) -> bool:
    """Full-rank test of the effective matrix at the RANK_TOL threshold."""
    cols = tuple(int(c) for c in assignment)
    if len(set(cols)) < len(cols):
        return False
    s = np.linalg.svd(_effective_matrix(cols, ch), compute_uv=False)
    return s[0] > 0.0 and s[-1] > RANK_TOL * s[0]


# ---------------------------------------------------------------------------
# assignment search on a (users x candidate-beams) gain matrix


def _combo_index(n_cols: int, n_users: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(n_cols), n_users)), dtype=np.intp)


def _exhaustive_on_matrix(colmat: np.ndarray, beams, n_t: int, cap: int):
    """Best lambda^2 over distinct beam subsets; first (lexicographic) subset wins ties.

    lambda^2 is invariant to which user is labelled with which beam of the
    subset (column permutations preserve singular values), so subsets stand in
    for the full ordered-tuple search; the returned tuple is the ascending
    order, the lexicographically smallest optimal tuple.
    """
    n_users, n_cols = colmat.shape
    if n_cols < n_users:
        return None
    n_tuples = math.perm(n_cols, n_users)
    if n_tuples > cap:
        raise ExhaustiveCapError(
            f"{n_tuples} ordered tuples exceed the cap of {cap}; "
            "use the max-min method or raise the cap"
        )
    combos = _combo_index(n_cols, n_users)
    stack = math.sqrt(n_t) * colmat[:, combos].transpose(1, 0, 2)
    sig = np.linalg.svd(stack, compute_uv=False)
    feasible = (sig[:, 0] > 0.0) & (sig[:, -1] > RANK_TOL * sig[:, 0])
    if not feasible.any():
        return None
    lam2 = np.zeros(len(combos))
    lam2[feasible] = n_users / np.sum(1.0 / sig[feasible] ** 2, axis=1)
    best = int(np.argmax(lam2))
    if lam2[best] <= 0.0:
        return None
    assignment = tuple(int(beams[c]) for c in combos[best])
    return assignment, float(lam2[best])


def _perfect_matching(adj, n_users, n_cols):
    """Kuhn's augmenting-path matching; returns column->user map or None."""
    match = [-1] * n_cols

    def try_user(u, seen):
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                if match[v] == -1 or try_user(match[v], seen):
                    match[v] = u
                    return True
        return False

    for u in range(n_users):
        if not try_user(u, [False] * n_cols):
            return None
    return match


def _bottleneck_stage(gabs: np.ndarray):
    """Max-min matching value and a matching attaining it, by bisecting gain levels."""
    n_users, n_cols = gabs.shape
    levels = np.unique(gabs[gabs > 0.0])
    if levels.size == 0:
        return None
    lo, hi = 0, levels.size - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        thr = levels[mid]
        adj = [np.nonzero(gabs[u] >= thr)[0].tolist() for u in range(n_users)]
        match = _perfect_matching(adj, n_users, n_cols)
        if match is not None:
            best = (thr, match)
            lo = mid + 1
        else:
            hi = mid - 1
    return best


def _maxmin_on_matrix(colmat: np.ndarray, beams, n_t: int):
    """Stage-wise lexicographic-bottleneck assignment on the candidate matrix.

    Each stage maximizes the minimum gain over the remaining users, then pins
    and removes the user/beam pair attaining that minimum (lowest (user, beam)
    pair on synthetic ties) and recurses on the rest.
    """
    n_users, n_cols = colmat.shape
    if n_cols < n_users:
        return None
    gabs = np.abs(colmat)
    users = list(range(n_users))
    cols = list(range(n_cols))
    chosen = {}
    while users:
        stage = _bottleneck_stage(gabs[np.ix_(users, cols)])
        if stage is None:
            return None
        thr, match = stage
        pairs = [
            (users[ui], cols[ci])
            for ci, ui in enumerate(match)
            if ui >= 0 and gabs[users[ui], cols[ci]] == thr
        ]
        user, col = min(pairs)
        chosen[user] = col
        users.remove(user)
        cols.remove(col)
    order = [chosen[u] for u in range(n_users)]
    h_eff = math.sqrt(n_t) * colmat[:, order]
    lam2 = _lambda_sq_from_matrix(h_eff)
    return tuple(int(beams[c]) for c in order), lam2


def _candidate_matrix(beam_sets, ch: ChannelRealization):
    union = sorted(set().union(*[set(int(b) for b in s) for s in beam_sets]))
    for b in union:
        if not 1 <= b <= ch.n_t:
            raise ValueError(f"beam index {b} outside [1, {ch.n_t}]")
    colmat = ch.beam_gains[:, [b - 1 for b in union]]
    return colmat, union


def exhaustive_assignment(beam_sets, ch: ChannelRealization, cfg: MuSystemConfig,
                          cap: int = DEFAULT_SEARCH_CAP):
    """Optimal assignment over the union of fed-back beams, or None if infeasible."""
    colmat, union = _candidate_matrix(beam_sets, ch)
    return _exhaustive_on_matrix(colmat, union, ch.n_t, cap)


def maxmin_assignment(beam_sets, ch: ChannelRealization, cfg: MuSystemConfig):
    """Lexicographic-bottleneck assignment, or None without a positive-gain matching."""
    colmat, union = _candidate_matrix(beam_sets, ch)
    return _maxmin_on_matrix(colmat, union, ch.n_t)


# ---------------------------------------------------------------------------
# training episodes


def _attempt(method, colmat, beams, n_t, cap):
    if method == "exhaustive":
        return _exhaustive_on_matrix(colmat, beams, n_t, cap)
    if method == "maxmin":
        return _maxmin_on_matrix(colmat, beams, n_t)
    raise ValueError(f"unknown assignment method {method!r}")


def _episode_core(supports, gains, n_t, n_users, alpha_bar, method, mode,
                  l_trained, cap):
    """Shared scan for it / nit_full / nit_partial on one realization.

    Walks beams in natural order, growing the per-user fed-back beam sets, and
    attempts an assignment only at steps that added a non-zero beam while every
    user knows at least one beam and the union can cover all users.  The first
    assignment with lambda^2 above threshold ends training.
    """
    events: dict[int, list[tuple[int, complex]]] = {}
    horizon = n_t if mode != "partial" else l_trained
    for u in range(n_users):
        for pos, g in zip(supports[u], gains[u]):
            if g != 0 and pos <= horizon:
                events.setdefault(int(pos), []).append((u, g))

    colmat = np.zeros((n_users, n_users * len(supports[0]) + len(events)), dtype=complex)
    beams: list[int] = []
    user_known = [False] * n_users
    last = (None, 0.0)

    def add_beam(pos, contributors):
        col = len(beams)
        beams.append(pos)
        for u, g in contributors:
            colmat[u, col] = g
            user_known[u] = True

    def ready():
        return all(user_known) and len(beams) >= n_users

    def attempt():
        nonlocal last
        found = _attempt(method, colmat[:, : len(beams)], beams, n_t, cap)
        if found is None:
            return False
        if found[1] > 0.0:  # keep the latest feasible assignment for reporting
            last = found
        return found[1] > alpha_bar

    if mode == "it":
        for pos in range(1, n_users + 1):
            if pos in events:
                add_beam(pos, events[pos])
        if ready() and attempt():
            return n_users, False, last[0], last[1]
        for pos in sorted(p for p in events if p > n_users):
            add_beam(pos, events[pos])
            if ready() and attempt():
                return pos, False, last[0], last[1]
        return n_t, True, last[0], last[1]

    # single shot over the trained window
    for pos in sorted(events):
        add_beam(pos, events[pos])
    if ready() and attempt():
        return horizon, False, last[0], last[1]
    return horizon, True, last[0], last[1]


def _check_episode_args(ch, cfg):
    if ch.n_users != cfg.n_users:
        raise ValueError(f"realization has {ch.n_users} users, config {cfg.n_users}")
    if ch.n_t != cfg.n_t:
        raise ValueError(f"realization N_t={ch.n_t} != config N_t={cfg.n_t}")


def it_mu_episode(ch: ChannelRealization, cfg: MuSystemConfig, method: str,
                  cap: int = DEFAULT_SEARCH_CAP) -> MuEpisodeResult:
    """Joint interleaved training and MU transmission on one realization."""
    _check_episode_args(ch, cfg)
    sup = [ch.supports[u] for u in range(cfg.n_users)]
    g = [ch.beam_gains[u, ch.supports[u] - 1] for u in range(cfg.n_users)]
    length, outage, assignment, lam2 = _episode_core(
        sup, g, cfg.n_t, cfg.n_users, cfg.alpha_bar, method, "it", None, cap
    )
    return MuEpisodeResult(length, outage, assignment, lam2, method)


def nit_mu_full(ch: ChannelRealization, cfg: MuSystemConfig, method: str,
                cap: int = DEFAULT_SEARCH_CAP) -> MuEpisodeResult:
    """Train every beam, then one assignment attempt."""
    return nit_mu_partial(ch, cfg, cfg.n_t, method, cap)


def nit_mu_partial(ch: ChannelRealization, cfg: MuSystemConfig, l_trained: int,
                   method: str, cap: int = DEFAULT_SEARCH_CAP) -> MuEpisodeResult:
    """Train beams 1..l_trained, then one assignment attempt."""
    _check_episode_args(ch, cfg)
    if not cfg.n_users <= l_trained <= cfg.n_t:
        raise ValueError(f"l_trained={l_trained} outside [{cfg.n_users}, {cfg.n_t}]")
    sup = [ch.supports[u] for u in range(cfg.n_users)]
    g = [ch.beam_gains[u, ch.supports[u] - 1] for u in range(cfg.n_users)]
    length, outage, assignment, lam2 = _episode_core(
        sup, g, cfg.n_t, cfg.n_users, cfg.alpha_bar, method, "partial", l_trained, cap
    )
    return MuEpisodeResult(length, outage, assignment, lam2, method)


@dataclass
class MuBatchStats:
    """Per-trial outcomes for one MU scheme over a seeded batch."""

    lengths: np.ndarray
    outage: np.ndarray
    lam2: np.ndarray
    rate: np.ndarray


def run_mu_batch(cfg, n_paths, scheme, method, seed, trials, point=0, trial0=0,
                 l_trained=None, cap=DEFAULT_SEARCH_CAP, chunk=4096):
    """Monte Carlo over keyed trials for one MU scheme.

    Channel draws are vectorized per chunk; the episode scan runs per trial.
    Outcomes depend only on (seed, point, trial), never on chunking.
    """
    if scheme not in MU_SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == "nit_partial" and l_trained is None:
        raise ValueError("nit_partial needs l_trained")
    mode = {"it": "it", "nit_full": "partial", "nit_partial": "partial"}[scheme]
    window = cfg.n_t if scheme != "nit_partial" else l_trained
    stats = MuBatchStats(
        np.empty(trials, dtype=np.int32),
        np.empty(trials, dtype=bool),
        np.empty(trials),
        np.empty(trials),
    )
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        per_user = [
            draw_support_gains(cfg.n_t, n_paths, seed, point, trial0 + lo, hi - lo, u)
            for u in range(cfg.n_users)
        ]
        for t in range(hi - lo):
            sup = [per_user[u][0][t] for u in range(cfg.n_users)]
            g = [per_user[u][1][t] for u in range(cfg.n_users)]
            length, outage, _, lam2 = _episode_core(
                sup, g, cfg.n_t, cfg.n_users, cfg.alpha_bar, method, mode, window, cap
            )
            i = lo + t
            stats.lengths[i] = length
            stats.outage[i] = outage
            stats.lam2[i] = lam2
            stats.rate[i] = (
                0.0 if outage else math.log2(1.0 + cfg.power / cfg.n_users * lam2)
            )
    return stats

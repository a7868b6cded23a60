"""Dynamic time warping over feature sequences, batch and streaming.

The batch form fills the full cost matrix; the streaming form keeps one
dynamic-programming row per prototype and consumes trajectory points one at
a time, so a posterior can be produced at every time step for the cost of
one row update. Both share only the local cost formula, so their agreement
is a meaningful check of the bookkeeping.

Step pattern is the symmetric {(1,0), (0,1), (1,1)} recursion. Ties between
predecessors are broken diagonal first, then advancing the trajectory, then
advancing the prototype; both implementations apply the same order so
path-length normalization is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import BandInfeasible, EmptyInput
from .trajectory import FeatureSeq


@dataclass(frozen=True)
class DtwConfig:
    """Knobs for the local cost and the alignment.

    beta weighs the direction terms against position in the local cost;
    band is an optional Sakoe-Chiba half-width; normalize_by_path divides
    the total cost by the optimal alignment's length so distances are
    comparable across prototype lengths.
    """

    beta: float = 1.0
    band: int | None = None
    normalize_by_path: bool = True

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.band is not None and self.band < 1:
            raise ValueError("band must be >= 1 when present")

    @property
    def band_value(self) -> int:
        return -1 if self.band is None else self.band


@njit(cache=True)
def _local_cost(ax, ay, adx, ady, bx, by, bdx, bdy, beta):
    dx = ax - bx
    dy = ay - by
    ddx = adx - bdx
    ddy = ady - bdy
    return np.sqrt(dx * dx + dy * dy + beta * beta * (ddx * ddx + ddy * ddy))


@njit(cache=True)
def _dtw_full(a, b, beta, band):
    """Full-matrix DP. Returns (total cost, optimal path length)."""
    n = a.shape[0]
    m = b.shape[0]
    cost = np.full((n, m), np.inf)
    plen = np.zeros((n, m), np.int64)
    for i in range(n):
        jlo = 0
        jhi = m - 1
        if band >= 0:
            if i - band > 0:
                jlo = i - band
            if i + band < m - 1:
                jhi = i + band
        for j in range(jlo, jhi + 1):
            c = _local_cost(
                a[i, 0], a[i, 1], a[i, 2], a[i, 3],
                b[j, 0], b[j, 1], b[j, 2], b[j, 3], beta,
            )
            if i == 0 and j == 0:
                cost[0, 0] = c
                plen[0, 0] = 1
                continue
            best = np.inf
            blen = 0
            if i > 0 and j > 0 and cost[i - 1, j - 1] < best:
                best = cost[i - 1, j - 1]
                blen = plen[i - 1, j - 1]
            if i > 0 and cost[i - 1, j] < best:
                best = cost[i - 1, j]
                blen = plen[i - 1, j]
            if j > 0 and cost[i, j - 1] < best:
                best = cost[i, j - 1]
                blen = plen[i, j - 1]
            cost[i, j] = c + best
            plen[i, j] = blen + 1
    return cost[n - 1, m - 1], plen[n - 1, m - 1]


@njit(cache=True)
def _dtw_many(traj, states, lengths, beta, band, normalize):
    """Batch distance from one trajectory to every prototype in a packed set."""
    n_protos = lengths.shape[0]
    out = np.empty(n_protos)
    for p in range(n_protos):
        total, plen = _dtw_full(traj, states[p, : lengths[p]], beta, band)
        if normalize and plen > 0:
            out[p] = total / plen
        else:
            out[p] = total
    return out


@njit(cache=True)
def _prefix_step(cost_rows, len_rows, states, lengths, point, beta, band, t):
    """Advance every prototype's DP row by one trajectory point, in place."""
    n_protos = lengths.shape[0]
    for p in range(n_protos):
        m = lengths[p]
        prev_c = cost_rows[p].copy()
        prev_l = len_rows[p].copy()
        jlo = 0
        jhi = m - 1
        if band >= 0:
            if t - band > 0:
                jlo = t - band
            if t + band < m - 1:
                jhi = t + band
        for j in range(m):
            cost_rows[p, j] = np.inf
            len_rows[p, j] = 0
        for j in range(jlo, jhi + 1):
            c = _local_cost(
                point[0], point[1], point[2], point[3],
                states[p, j, 0], states[p, j, 1], states[p, j, 2], states[p, j, 3],
                beta,
            )
            if t == 0 and j == 0:
                cost_rows[p, 0] = c
                len_rows[p, 0] = 1
                continue
            best = np.inf
            blen = 0
            if t > 0 and j > 0 and prev_c[j - 1] < best:
                best = prev_c[j - 1]
                blen = prev_l[j - 1]
            if t > 0 and prev_c[j] < best:
                best = prev_c[j]
                blen = prev_l[j]
            if j > 0 and cost_rows[p, j - 1] < best:
                best = cost_rows[p, j - 1]
                blen = len_rows[p, j - 1]
            cost_rows[p, j] = c + best
            len_rows[p, j] = blen + 1


def _as_points(seq) -> np.ndarray:
    if isinstance(seq, FeatureSeq):
        return seq.points
    arr = np.ascontiguousarray(seq, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError("expected an (n, 4) feature array")
    return arr


def dtw_distance(a, b, cfg: DtwConfig = DtwConfig()) -> float:
    """Alignment distance between two feature sequences."""
    pa = _as_points(a)
    pb = _as_points(b)
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        raise EmptyInput("cannot align an empty sequence")
    if cfg.band is not None and abs(pa.shape[0] - pb.shape[0]) > cfg.band:
        raise BandInfeasible(
            f"length gap {abs(pa.shape[0] - pb.shape[0])} exceeds band {cfg.band}"
        )
    total, plen = _dtw_full(pa, pb, cfg.beta, cfg.band_value)
    if cfg.normalize_by_path:
        return float(total) / int(plen)
    return float(total)


@dataclass(frozen=True)
class PrefixState:
    """Streaming DP state: one cost row per prototype plus points consumed.

    States are packed as (n_protos, max_len, 4) with per-prototype lengths.
    Instances are value-like; prefix_update returns a fresh state.
    """

    states: np.ndarray
    lengths: np.ndarray
    cost_rows: np.ndarray
    len_rows: np.ndarray
    consumed: int
    cfg: DtwConfig

    def __eq__(self, other) -> bool:
        if not isinstance(other, PrefixState):
            return NotImplemented
        return (
            self.consumed == other.consumed
            and self.cfg == other.cfg
            and np.array_equal(self.lengths, other.lengths)
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.cost_rows, other.cost_rows, equal_nan=True)
            and np.array_equal(self.len_rows, other.len_rows)
        )


def prefix_init(states: np.ndarray, lengths: np.ndarray, cfg: DtwConfig = DtwConfig()) -> PrefixState:
    """Fresh state for a packed prototype set; zero points consumed."""
    if lengths.shape[0] == 0:
        raise EmptyInput("prototype set is empty")
    n_protos, max_len = states.shape[0], states.shape[1]
    return PrefixState(
        states=states,
        lengths=np.ascontiguousarray(lengths, dtype=np.int64),
        cost_rows=np.full((n_protos, max_len), np.inf),
        len_rows=np.zeros((n_protos, max_len), np.int64),
        consumed=0,
        cfg=cfg,
    )


def prefix_update(st: PrefixState, point) -> PrefixState:
    """Consume one feature point; O(total prototype states)."""
    pt = np.asarray(point, dtype=np.float64).reshape(4)
    cost_rows = st.cost_rows.copy()
    len_rows = st.len_rows.copy()
    _prefix_step(
        cost_rows, len_rows, st.states, st.lengths, pt,
        st.cfg.beta, st.cfg.band_value, st.consumed,
    )
    return PrefixState(
        states=st.states,
        lengths=st.lengths,
        cost_rows=cost_rows,
        len_rows=len_rows,
        consumed=st.consumed + 1,
        cfg=st.cfg,
    )


def prefix_distances(st: PrefixState) -> np.ndarray:
    """Current distance from the consumed prefix to every prototype."""
    if st.consumed == 0:
        raise EmptyInput("no points consumed yet")
    idx = np.arange(st.lengths.shape[0])
    total = st.cost_rows[idx, st.lengths - 1]
    if st.cfg.normalize_by_path:
        plen = st.len_rows[idx, st.lengths - 1]
        safe = np.where(plen > 0, plen, 1)
        return total / safe
    return total.copy()

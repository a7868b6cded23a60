"""Bayesian-style decoding: trajectory distances to a posterior over letters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alphabet import LETTERS, N_LETTERS
from .dtw import DtwConfig, PrefixState, _dtw_many, prefix_distances, prefix_init, prefix_update
from .errors import EmptyInput
from .prototypes import PrototypeSet
from .trajectory import FeatureSeq


@dataclass(frozen=True, eq=False)
class Posterior:
    """Distribution over the alphabet after consuming t seconds of writing."""

    probabilities: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        p = np.ascontiguousarray(self.probabilities, dtype=np.float64)
        if p.shape != (N_LETTERS,):
            raise ValueError(f"posterior must have {N_LETTERS} entries")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("posterior entries must be >= 0 and sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def prob(self, label: str) -> float:
        return float(self.probabilities[LETTERS.index(label)])

    def as_dict(self) -> dict[str, float]:
        return {c: float(v) for c, v in zip(LETTERS, self.probabilities)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Posterior):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.probabilities, other.probabilities)


@dataclass(frozen=True)
class DecoderConfig:
    """Distance-to-probability transfer parameters.

    sigma scales distances before the exponential transfer; floor keeps
    every label's probability strictly positive so log loss stays finite.
    """

    sigma: float = 0.1
    floor: float = 1e-6

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if not 0 <= self.floor <= 1.0 / N_LETTERS:
            raise ValueError("floor must lie in [0, 1/26]")


def posterior_from_distances(distances: np.ndarray, cfg: DecoderConfig = DecoderConfig()) -> np.ndarray:
    """exp(-d/sigma) over any distance vector, normalized and floored.

    The minimum distance is subtracted first; that cancels in the
    normalization and keeps the exponentials in range, which is also what
    makes the result invariant to a constant shift of all distances.
    """
    d = np.asarray(distances, dtype=np.float64)
    if d.size == 0:
        raise EmptyInput("no distances to decode")
    scores = np.exp(-(d - d.min()) / cfg.sigma)
    probs = scores / scores.sum()
    if cfg.floor > 0:
        probs = np.maximum(probs, cfg.floor)
        probs = probs / probs.sum()
    return probs


def label_distances(
    fs: FeatureSeq, pset: PrototypeSet, dtw_cfg: DtwConfig = DtwConfig()
) -> np.ndarray:
    """Min DTW distance per label; prototypes of a label are alternatives."""
    if len(fs) == 0:
        raise EmptyInput("empty feature sequence")
    states, lengths, labels = pset.packed()
    dists = _dtw_many(
        fs.points, states, lengths, dtw_cfg.beta, dtw_cfg.band_value, dtw_cfg.normalize_by_path
    )
    per_label = np.full(N_LETTERS, np.inf)
    np.minimum.at(per_label, labels, dists)
    return per_label


def decode_posterior(
    fs: FeatureSeq,
    pset: PrototypeSet,
    cfg: DecoderConfig = DecoderConfig(),
    dtw_cfg: DtwConfig = DtwConfig(),
) -> Posterior:
    """Posterior over the alphabet for a complete (or prefix) trajectory."""
    probs = posterior_from_distances(label_distances(fs, pset, dtw_cfg), cfg)
    return Posterior(probs, t=fs.duration)


def decode_init(pset: PrototypeSet, dtw_cfg: DtwConfig = DtwConfig()) -> PrefixState:
    """Streaming decode state for a prototype snapshot."""
    states, lengths, _ = pset.packed()
    return prefix_init(states, lengths, dtw_cfg)


def decode_incremental(
    st: PrefixState,
    point,
    pset: PrototypeSet,
    cfg: DecoderConfig = DecoderConfig(),
    t: float = 0.0,
) -> tuple[PrefixState, Posterior]:
    """Consume one point and return the posterior for the prefix so far."""
    st = prefix_update(st, point)
    _, _, labels = pset.packed()
    dists = prefix_distances(st)
    per_label = np.full(N_LETTERS, np.inf)
    np.minimum.at(per_label, labels, dists)
    return st, Posterior(posterior_from_distances(per_label, cfg), t=t)


def predict(q: Posterior) -> str:
    """Maximum-probability label; ties resolve to the earliest letter."""
    return LETTERS[int(np.argmax(q.probabilities))]

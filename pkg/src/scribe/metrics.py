"""Channel-rate metrics: treat writer plus recognizer as a noisy channel.

All information quantities are in bits; durations in seconds; rates in
bits per second. The mutual-information rate divides the plug-in mutual
information between intent and final posterior by the mean writing
duration. The log-loss rate replaces the conditional-entropy term with the
mean log loss of the true label, which is cheaper to estimate and punishes
confidently-wrong posteriors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as _sstats

from .alphabet import LETTERS, N_LETTERS, label_index
from .decoder import Posterior
from .errors import LengthMismatch, MissingClass, NotADistribution, ZeroVariance

LOG2_ALPHABET = math.log2(N_LETTERS)


@dataclass(frozen=True, eq=False)
class CharacterRecord:
    """One writing attempt: what was meant, what was decoded, how long it took."""

    intent: str
    posterior: Posterior
    duration: float
    condition: str = ""
    session: int = 0
    user: str = ""

    def __post_init__(self):
        label_index(self.intent)
        if self.duration <= 0:
            raise ValueError("duration must be > 0")


@dataclass(frozen=True, eq=False)
class MeanPosteriorMatrix:
    """Row m is the mean final posterior given the writer meant letter m."""

    rows: np.ndarray
    prior: np.ndarray

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype=np.float64)
        prior = np.ascontiguousarray(self.prior, dtype=np.float64)
        if rows.shape != (N_LETTERS, N_LETTERS) or prior.shape != (N_LETTERS,):
            raise ValueError("matrix must be 26x26 with a 26-entry prior")
        if np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-9):
            raise NotADistribution("every row must sum to 1")
        rows.setflags(write=False)
        prior.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "prior", prior)

    def marginal(self) -> np.ndarray:
        return self.prior @ self.rows


@dataclass(frozen=True)
class ChannelReport:
    """Summary of a record collection as a communication channel."""

    entropy_marginal: float
    mutual_information: float | None
    mean_log_loss: float
    mean_duration: float
    rate_mi: float | None
    rate_ll: float
    rate_ideal: float
    n: int

    def to_json(self) -> str:
        def sig15(v):
            return None if v is None else float(f"{v:.15g}")

        return json.dumps(
            {
                "entropy_marginal": sig15(self.entropy_marginal),
                "mutual_information": sig15(self.mutual_information),
                "mean_log_loss": sig15(self.mean_log_loss),
                "mean_duration": sig15(self.mean_duration),
                "rate_mi": sig15(self.rate_mi),
                "rate_ll": sig15(self.rate_ll),
                "rate_ideal": sig15(self.rate_ideal),
                "n": self.n,
            }
        )


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p_two_sided: float


def entropy(dist: Sequence[float] | np.ndarray) -> float:
    """Shannon entropy in bits; zero probabilities contribute nothing."""
    p = np.asarray(dist, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise NotADistribution("entropy expects a non-empty vector")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise NotADistribution("entries must be >= 0 and sum to 1")
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def mean_posteriors(
    records: Sequence[CharacterRecord], prior: np.ndarray | None = None
) -> MeanPosteriorMatrix:
    """Empirical mean posterior per true label.

    Labels carrying prior mass must appear in the records; zero-prior
    labels may be absent and get a uniform placeholder row that never
    enters the marginal.
    """
    prior = _as_prior(prior)
    sums = np.zeros((N_LETTERS, N_LETTERS))
    counts = np.zeros(N_LETTERS, dtype=np.int64)
    for rec in records:
        i = label_index(rec.intent)
        sums[i] += rec.posterior.probabilities
        counts[i] += 1
    rows = np.full((N_LETTERS, N_LETTERS), 1.0 / N_LETTERS)
    for i in range(N_LETTERS):
        if counts[i] > 0:
            rows[i] = sums[i] / counts[i]
        elif prior[i] > 0:
            raise MissingClass(LETTERS[i])
    return MeanPosteriorMatrix(rows, prior)


def mutual_information(mat: MeanPosteriorMatrix) -> float:
    """Plug-in I(intent; posterior) in bits, clamped at zero float dust."""
    h_marginal = entropy(mat.marginal())
    h_cond = sum(
        float(mat.prior[i]) * entropy(mat.rows[i])
        for i in range(N_LETTERS)
        if mat.prior[i] > 0
    )
    return max(0.0, h_marginal - h_cond)


def _as_prior(prior: np.ndarray | None) -> np.ndarray:
    if prior is None:
        return np.full(N_LETTERS, 1.0 / N_LETTERS)
    p = np.asarray(prior, dtype=np.float64)
    if p.shape != (N_LETTERS,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise NotADistribution("prior must be a 26-entry distribution")
    return p


def _mean_log_loss(records: Sequence[CharacterRecord], prior: np.ndarray) -> float:
    """Per-label mean of -log2 q(intent), mixed by the prior."""
    per_label: dict[int, list[float]] = {}
    for rec in records:
        i = label_index(rec.intent)
        q = rec.posterior.probabilities[i]
        with np.errstate(divide="ignore"):
            per_label.setdefault(i, []).append(float(-np.log2(q)))
    total = 0.0
    for i in range(N_LETTERS):
        if prior[i] == 0:
            continue
        if i not in per_label:
            raise MissingClass(LETTERS[i])
        total += prior[i] * float(np.mean(per_label[i]))
    return total


def channel_report(
    records: Sequence[CharacterRecord], prior: np.ndarray | None = None
) -> ChannelReport:
    """Full channel summary of a record collection."""
    if not records:
        raise ValueError("no records")
    prior = _as_prior(prior)
    mat = mean_posteriors(records, prior)
    mi = mutual_information(mat)
    h_marginal = entropy(mat.marginal())
    log_loss = _mean_log_loss(records, prior)
    mean_duration = float(np.mean([r.duration for r in records]))
    return ChannelReport(
        entropy_marginal=h_marginal,
        mutual_information=mi,
        mean_log_loss=log_loss,
        mean_duration=mean_duration,
        rate_mi=mi / mean_duration,
        rate_ll=(h_marginal - log_loss) / mean_duration,
        rate_ideal=LOG2_ALPHABET / mean_duration,
        n=len(records),
    )


def rate_mi(records: Sequence[CharacterRecord], prior: np.ndarray | None = None) -> ChannelReport:
    """Mutual-information channel rate (full report; see rate_mi field)."""
    return channel_report(records, prior)


def rate_ll(records: Sequence[CharacterRecord], prior: np.ndarray | None = None) -> ChannelReport:
    """Log-loss channel rate (full report; see rate_ll field).

    The numerator is marginal entropy minus mean log loss and may be
    negative; it is reported as computed.
    """
    return channel_report(records, prior)


def rate_ideal(records: Sequence[CharacterRecord]) -> float:
    """Perfect-recognition ceiling: log2(26) over the mean duration."""
    if not records:
        raise ValueError("no records")
    return LOG2_ALPHABET / float(np.mean([r.duration for r in records]))


def session_report(
    records: Sequence[CharacterRecord], prior: np.ndarray | None = None
) -> ChannelReport:
    """Channel report for one session; every letter must have been written."""
    return channel_report(records, prior)


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-sided paired t-test on per-subject means."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch("paired samples must have equal length")
    if x.size < 2:
        raise LengthMismatch("need at least two pairs")
    d = x - y
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise ZeroVariance("all paired differences are identical")
    n = d.size
    t = float(d.mean() / (sd / math.sqrt(n)))
    p = float(2.0 * _sstats.t.sf(abs(t), n - 1))
    return TTestResult(t=t, df=n - 1, p_two_sided=p)

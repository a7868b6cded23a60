"""Per-user prototype sets: training, adaptation, and state reduction.

A prototype is a left-to-right sequence of feature states standing for one
way of writing a character. The generation-0 set comes from clustering
pooled multi-user data; later generations fold in the user's own examples
with higher weight, so the recognizer drifts toward the individual hand.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit

from .alphabet import LETTERS, N_LETTERS, label_index
from .dtw import DtwConfig, _dtw_many, _local_cost
from .errors import CorruptStore, EmptyClass, EmptyCorpus, VersionMismatch
from .trajectory import FeatureSeq, resample

STORE_FORMAT = 1


@dataclass(frozen=True, eq=False)
class WeightedInstance:
    """A labeled training example with a clustering weight."""

    features: FeatureSeq
    weight: float
    label: str

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("weight must be > 0")
        label_index(self.label)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedInstance):
            return NotImplemented
        return (
            self.label == other.label
            and self.weight == other.weight
            and self.features == other.features
        )


@dataclass(frozen=True, eq=False)
class Prototype:
    """One character template: ordered states with visit statistics."""

    label: str
    states: np.ndarray
    visit_counts: np.ndarray
    version: int = 0

    def __post_init__(self):
        states = np.ascontiguousarray(self.states, dtype=np.float64)
        visits = np.ascontiguousarray(self.visit_counts, dtype=np.float64)
        if states.ndim != 2 or states.shape[1] != 4 or states.shape[0] < 2:
            raise ValueError("a prototype needs >= 2 states of 4 features")
        if visits.shape != (states.shape[0],) or np.any(visits < 0):
            raise ValueError("visit_counts must be non-negative, one per state")
        label_index(self.label)
        states.setflags(write=False)
        visits.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "visit_counts", visits)

    def __len__(self) -> int:
        return self.states.shape[0]

    def as_features(self) -> FeatureSeq:
        return FeatureSeq(self.states)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Prototype):
            return NotImplemented
        return (
            self.label == other.label
            and self.version == other.version
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.visit_counts, other.visit_counts)
        )


@dataclass(frozen=True, eq=False)
class PrototypeSet:
    """All prototypes for one user plus per-label adaptation buffers."""

    user: str
    prototypes: tuple[Prototype, ...]
    generation: int = 0
    pending: Mapping[str, tuple[FeatureSeq, ...]] = field(default_factory=dict)
    _packed: tuple | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        covered = {p.label for p in self.prototypes}
        missing = [c for c in LETTERS if c not in covered]
        if missing:
            raise EmptyClass(missing[0])
        object.__setattr__(self, "prototypes", tuple(self.prototypes))
        object.__setattr__(self, "pending", dict(self.pending))

    def for_label(self, label: str) -> tuple[Prototype, ...]:
        return tuple(p for p in self.prototypes if p.label == label)

    def pending_counts(self) -> dict[str, int]:
        return {k: len(v) for k, v in self.pending.items() if v}

    def total_states(self) -> int:
        return sum(len(p) for p in self.prototypes)

    def packed(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(states, lengths, label indices) padded arrays, cached per set."""
        if self._packed is None:
            lengths = np.array([len(p) for p in self.prototypes], dtype=np.int64)
            max_len = int(lengths.max())
            states = np.zeros((len(self.prototypes), max_len, 4))
            labels = np.empty(len(self.prototypes), dtype=np.int64)
            for i, p in enumerate(self.prototypes):
                states[i, : len(p)] = p.states
                labels[i] = label_index(p.label)
            object.__setattr__(self, "_packed", (states, lengths, labels))
        return self._packed

    def __eq__(self, other) -> bool:
        if not isinstance(other, PrototypeSet):
            return NotImplemented
        return (
            self.user == other.user
            and self.generation == other.generation
            and self.prototypes == other.prototypes
            and dict(self.pending) == dict(other.pending)
        )


@dataclass(frozen=True)
class AdaptConfig:
    """Clustering and adaptation parameters.

    resample_len is the fixed state count instances are clustered at.
    w_user and w_proto weigh the user's examples against the pool and the
    previous prototypes against fresh examples. cadence is how many new
    examples per label trigger a re-clustering round.
    """

    resample_len: int = 32
    k_typical: int = 3
    k_user: int = 2
    w_user: float = 10.0
    w_proto: float = 4.0
    cadence: int = 4
    seed: int = 0


def _derived_seed(*keys: int) -> int:
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


def _flatten(instances: Sequence[WeightedInstance]) -> tuple[np.ndarray, np.ndarray, int]:
    lengths = {len(wi.features) for wi in instances}
    if len(lengths) != 1:
        raise ValueError("instances must share one resampled length")
    n_pts = lengths.pop()
    X = np.stack([wi.features.points.reshape(-1) for wi in instances])
    w = np.array([wi.weight for wi in instances], dtype=np.float64)
    return X, w, n_pts


def _kmeanspp(X: np.ndarray, w: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Weighted k-means++ seeding; never re-picks an already-chosen point."""
    first = int(rng.choice(X.shape[0], p=w / w.sum()))
    centroids = [X[first]]
    d2 = ((X - X[first]) ** 2).sum(axis=1)
    for _ in range(1, k):
        probs = w * d2
        probs /= probs.sum()
        nxt = int(rng.choice(X.shape[0], p=probs))
        centroids.append(X[nxt])
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return np.stack(centroids)


def _renorm_directions(pts: np.ndarray) -> np.ndarray:
    """Rescale (dx, dy) rows to unit length, carrying across near-zero rows."""
    out = pts.copy()
    norms = np.hypot(out[:, 2], out[:, 3])
    ok = norms > 1e-12
    out[ok, 2] /= norms[ok]
    out[ok, 3] /= norms[ok]
    if not ok.all():
        if not ok.any():
            out[:, 2] = 1.0  # no surviving direction at all; point east
            out[:, 3] = 0.0
        else:
            first = np.flatnonzero(ok)[0]
            last = out[first, 2:4]
            for i in range(out.shape[0]):
                if ok[i]:
                    last = out[i, 2:4]
                else:
                    out[i, 2:4] = last
    return out


def weighted_kmeans(
    instances: Sequence[WeightedInstance],
    k: int,
    seed: int,
    *,
    objective_history: list | None = None,
) -> list[FeatureSeq]:
    """Lloyd iterations on flattened feature vectors with weighted means.

    Centroid count drops to the number of distinct points when k exceeds
    it. Terminates when assignments stabilize or after 100 rounds. Pass a
    list as objective_history to observe the weighted objective per round.
    """
    if not instances:
        raise EmptyClass(instances[0].label if instances else "?")
    labels = {wi.label for wi in instances}
    if len(labels) != 1:
        raise ValueError("weighted_kmeans expects instances of one label")
    if k < 1:
        raise ValueError("k must be >= 1")
    X, w, n_pts = _flatten(instances)
    k_eff = min(k, np.unique(X, axis=0).shape[0])
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp(X, w, k_eff, rng)

    assign = None
    idx = np.arange(X.shape[0])
    for _ in range(100):
        d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = d2.argmin(axis=1)
        if objective_history is not None:
            objective_history.append(float((w * d2[idx, new_assign]).sum()))
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k_eff):
            mask = assign == c
            if mask.any():
                centroids[c] = (w[mask, None] * X[mask]).sum(axis=0) / w[mask].sum()

    durations = np.array([wi.features.duration for wi in instances])
    out = []
    for c in range(k_eff):
        mask = assign == c
        dur = float((w[mask] * durations[mask]).sum() / w[mask].sum()) if mask.any() else 0.0
        pts = _renorm_directions(centroids[c].reshape(n_pts, 4))
        out.append(FeatureSeq(pts, duration=dur))
    return out


def _group_by_label(instances: Iterable[WeightedInstance]) -> dict[str, list[WeightedInstance]]:
    groups: dict[str, list[WeightedInstance]] = defaultdict(list)
    for wi in instances:
        groups[wi.label].append(wi)
    return groups


def train_typical_prototypes(
    corpus: Sequence[WeightedInstance],
    k_per_class: int = 3,
    seed: int = 0,
    user: str = "p0",
) -> PrototypeSet:
    """Cluster the pooled corpus into the generation-0 typical prototypes."""
    groups = _group_by_label(corpus)
    protos: list[Prototype] = []
    for i, label in enumerate(LETTERS):
        if label not in groups:
            raise EmptyClass(label)
        centroids = weighted_kmeans(groups[label], k_per_class, _derived_seed(seed, 0, i))
        for c in centroids:
            protos.append(
                Prototype(label, c.points, np.ones(len(c)), version=0)
            )
    return PrototypeSet(user=user, prototypes=tuple(protos), generation=0)


def initial_adapt(
    p0: PrototypeSet,
    user_examples: Sequence[WeightedInstance],
    pool: Sequence[WeightedInstance],
    cfg: AdaptConfig = AdaptConfig(),
    user: str | None = None,
) -> PrototypeSet:
    """First personalization round: re-cluster pool plus user data.

    The user's examples enter the pool with weight cfg.w_user; labels the
    user has not written yet keep their typical prototypes. Always returns
    a generation-1 set, even for an empty example list.
    """
    if p0.generation != 0:
        raise ValueError("initial_adapt starts from a generation-0 set")
    user_groups = _group_by_label(user_examples)
    pool_groups = _group_by_label(pool)
    protos: list[Prototype] = []
    for i, label in enumerate(LETTERS):
        if label not in user_groups:
            protos.extend(p0.for_label(label))
            continue
        mix = [WeightedInstance(wi.features, 1.0, label) for wi in pool_groups.get(label, [])]
        mix += [WeightedInstance(wi.features, cfg.w_user, label) for wi in user_groups[label]]
        centroids = weighted_kmeans(mix, cfg.k_user, _derived_seed(cfg.seed, 1, i))
        for c in centroids:
            protos.append(Prototype(label, c.points, np.ones(len(c)), version=1))
    return PrototypeSet(
        user=user if user is not None else p0.user,
        prototypes=tuple(protos),
        generation=1,
    )


def incremental_adapt(
    pset: PrototypeSet,
    new_examples: Sequence[WeightedInstance],
    cfg: AdaptConfig = AdaptConfig(),
) -> PrototypeSet:
    """Buffer examples per label; re-cluster a label once its buffer fills.

    A full buffer (cfg.cadence examples) is clustered together with the
    label's current prototypes at weight cfg.w_proto, then cleared. Each
    triggered label bumps the generation by one.
    """
    if pset.generation < 1:
        raise ValueError("incremental adaptation needs an initialized set (generation >= 1)")
    pending = {k: list(v) for k, v in pset.pending.items()}
    protos = list(pset.prototypes)
    generation = pset.generation

    for wi in new_examples:
        i = label_index(wi.label)
        buf = pending.setdefault(wi.label, [])
        buf.append(wi.features)
        if len(buf) < cfg.cadence:
            continue
        generation += 1
        keep = [p for p in protos if p.label != wi.label]
        seeds = [
            WeightedInstance(_resampled(p.as_features(), cfg.resample_len), cfg.w_proto, wi.label)
            for p in protos
            if p.label == wi.label
        ]
        fresh = [WeightedInstance(fs, 1.0, wi.label) for fs in buf]
        centroids = weighted_kmeans(
            seeds + fresh, cfg.k_user, _derived_seed(cfg.seed, generation, i)
        )
        keep.extend(
            Prototype(wi.label, c.points, np.ones(len(c)), version=generation)
            for c in centroids
        )
        protos = keep
        pending[wi.label] = []

    return PrototypeSet(
        user=pset.user,
        prototypes=tuple(protos),
        generation=generation,
        pending={k: tuple(v) for k, v in pending.items() if v},
    )


def _resampled(fs: FeatureSeq, n: int) -> FeatureSeq:
    return fs if len(fs) == n else resample(fs, n)


@njit(cache=True)
def _alignment_counts(a, b, beta):
    """Points-per-state counts under the optimal alignment.

    Each trajectory point contributes one count, to the state with the
    lowest local cost among those it aligns to (lowest index on ties).
    Mirrors the batch DP's predecessor preferences exactly.
    """
    n = a.shape[0]
    m = b.shape[0]
    cost = np.full((n, m), np.inf)
    local = np.empty((n, m))
    move = np.zeros((n, m), np.int8)  # 0 diag, 1 prev point, 2 prev state
    for i in range(n):
        for j in range(m):
            c = _local_cost(
                a[i, 0], a[i, 1], a[i, 2], a[i, 3],
                b[j, 0], b[j, 1], b[j, 2], b[j, 3], beta,
            )
            local[i, j] = c
            if i == 0 and j == 0:
                cost[0, 0] = c
                continue
            best = np.inf
            mv = np.int8(0)
            if i > 0 and j > 0 and cost[i - 1, j - 1] < best:
                best = cost[i - 1, j - 1]
                mv = np.int8(0)
            if i > 0 and cost[i - 1, j] < best:
                best = cost[i - 1, j]
                mv = np.int8(1)
            if j > 0 and cost[i, j - 1] < best:
                best = cost[i, j - 1]
                mv = np.int8(2)
            cost[i, j] = c + best
            move[i, j] = mv

    counts = np.zeros(m)
    i = n - 1
    j = m - 1
    best_j = j
    best_c = local[i, j]
    while i > 0 or j > 0:
        mv = move[i, j]
        if mv == 2:
            j -= 1
            if local[i, j] <= best_c:
                best_c = local[i, j]
                best_j = j
        else:
            counts[best_j] += 1.0
            if mv == 0:
                i -= 1
                j -= 1
            else:
                i -= 1
            best_j = j
            best_c = local[i, j]
    counts[best_j] += 1.0
    return counts


def state_visit_counts(
    proto: Prototype, corpus: Sequence[FeatureSeq], cfg: DtwConfig = DtwConfig()
) -> np.ndarray:
    """Mean points mapped to each state per corpus instance."""
    if not corpus:
        raise EmptyCorpus("alignment corpus is empty")
    counts = np.zeros(len(proto))
    for fs in corpus:
        counts += _alignment_counts(fs.points, proto.states, cfg.beta)
    return counts / len(corpus)


def reduce_states(
    proto: Prototype,
    alignment_corpus: Sequence[FeatureSeq],
    threshold: float,
    cfg: DtwConfig = DtwConfig(),
    merge_eps: float = 0.01,
) -> Prototype:
    """Drop rarely visited states and merge near-duplicate neighbours.

    Visit statistics are measured on the corpus; states whose mean visits
    fall below the threshold go away, then consecutive states closer than
    merge_eps collapse into their visit-weighted mean. At least two states
    survive no matter what.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    visits = state_visit_counts(proto, alignment_corpus, cfg)

    keep = visits >= threshold
    if keep.sum() < 2:
        # Floor rule: retain the two best-visited states in order.
        order = np.argsort(-visits, kind="stable")[:2]
        keep = np.zeros(len(proto), dtype=bool)
        keep[np.sort(order)] = True
    states = [proto.states[i].copy() for i in np.flatnonzero(keep)]
    counts = [float(visits[i]) for i in np.flatnonzero(keep)]

    merged = True
    while merged and len(states) > 2:
        merged = False
        for i in range(len(states) - 1):
            if np.linalg.norm(states[i] - states[i + 1]) < merge_eps:
                w1, w2 = counts[i], counts[i + 1]
                tot = w1 + w2
                if tot > 0:
                    fused = (w1 * states[i] + w2 * states[i + 1]) / tot
                else:
                    fused = 0.5 * (states[i] + states[i + 1])
                states[i] = _renorm_directions(fused[None, :]).reshape(4)
                counts[i] = tot
                del states[i + 1]
                del counts[i + 1]
                merged = True
                break

    return Prototype(
        proto.label,
        np.stack(states),
        np.asarray(counts),
        version=proto.version + 1,
    )


def predict_labels(
    seqs: Sequence[FeatureSeq], pset: PrototypeSet, cfg: DtwConfig = DtwConfig()
) -> list[str]:
    """Nearest-prototype label for each sequence (alphabet order on ties)."""
    states, lengths, labels = pset.packed()
    out = []
    for fs in seqs:
        dists = _dtw_many(
            fs.points, states, lengths, cfg.beta, cfg.band_value, cfg.normalize_by_path
        )
        per_label = np.full(N_LETTERS, np.inf)
        np.minimum.at(per_label, labels, dists)
        out.append(LETTERS[int(per_label.argmin())])
    return out


def reduce_set_states(
    pset: PrototypeSet,
    corpus: Sequence[WeightedInstance],
    threshold: float,
    cfg: DtwConfig = DtwConfig(),
    min_agreement: float = 0.95,
) -> tuple[PrototypeSet, float]:
    """Reduce every prototype, rolling the whole set back if accuracy slips.

    Corpus items align against the nearest prototype of their own label to
    build visit statistics. The reduced set must predict the same label as
    the original on at least min_agreement of the corpus; otherwise the
    original set is returned. Returns (set, agreement fraction).
    """
    if not corpus:
        raise EmptyCorpus("alignment corpus is empty")
    by_proto: dict[int, list[FeatureSeq]] = defaultdict(list)
    proto_ids = {id(p): i for i, p in enumerate(pset.prototypes)}
    for wi in corpus:
        candidates = pset.for_label(wi.label)
        dists = [
            float(_dtw_many(
                wi.features.points,
                np.ascontiguousarray(p.states[None, :, :]),
                np.array([len(p)], dtype=np.int64),
                cfg.beta, cfg.band_value, cfg.normalize_by_path,
            )[0])
            for p in candidates
        ]
        chosen = candidates[int(np.argmin(dists))]
        by_proto[proto_ids[id(chosen)]].append(wi.features)

    reduced = []
    for i, p in enumerate(pset.prototypes):
        assigned = by_proto.get(i)
        reduced.append(reduce_states(p, assigned, threshold, cfg) if assigned else p)

    new_set = PrototypeSet(
        user=pset.user,
        prototypes=tuple(reduced),
        generation=pset.generation,
        pending=pset.pending,
    )
    seqs = [wi.features for wi in corpus]
    before = predict_labels(seqs, pset, cfg)
    after = predict_labels(seqs, new_set, cfg)
    agreement = float(np.mean([a == b for a, b in zip(before, after)]))
    if agreement < min_agreement:
        return pset, agreement
    return new_set, agreement


def to_document(pset: PrototypeSet) -> dict:
    """Versioned store document; adaptation buffers are not part of it."""
    return {
        "format": STORE_FORMAT,
        "user": pset.user,
        "generation": pset.generation,
        "prototypes": [
            {
                "label": p.label,
                "states": p.states.tolist(),
                "visits": p.visit_counts.tolist(),
                "version": p.version,
            }
            for p in pset.prototypes
        ],
    }


def from_document(doc: dict) -> PrototypeSet:
    if not isinstance(doc, dict) or doc.get("format") != STORE_FORMAT:
        raise VersionMismatch(f"unsupported prototype store format: {doc.get('format')!r}")
    try:
        protos = tuple(
            Prototype(
                label=entry["label"],
                states=np.asarray(entry["states"], dtype=np.float64),
                visit_counts=np.asarray(entry["visits"], dtype=np.float64),
                version=int(entry.get("version", 0)),
            )
            for entry in doc["prototypes"]
        )
        return PrototypeSet(
            user=doc["user"], prototypes=protos, generation=int(doc["generation"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptStore(f"malformed prototype document: {exc}") from exc


def save_prototypes(pset: PrototypeSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_document(pset)))


def load_prototypes(path: str | Path) -> PrototypeSet:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptStore(f"unreadable prototype store {path}: {exc}") from exc
    return from_document(doc)

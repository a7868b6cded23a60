"""Desk-scale reproduction of the co-adaptation experiment.

Synthetic writers play the writing game against the adaptive recognizer;
the control condition re-decodes the same recorded traces against the
frozen generation-0 prototypes, so the two logs stay paired record for
record and the machine-adaptation effect can be isolated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .alphabet import LETTERS, N_LETTERS
from .decoder import DecoderConfig, Posterior, decode_posterior, predict
from .dtw import DtwConfig
from .errors import MissingClass, MissingTrajectories
from .metrics import (
    LOG2_ALPHABET,
    ChannelReport,
    CharacterRecord,
    channel_report,
)
from .prototypes import (
    AdaptConfig,
    PrototypeSet,
    WeightedInstance,
    incremental_adapt,
    initial_adapt,
    reduce_set_states,
    train_typical_prototypes,
)
from .trajectory import FeatureSeq, RawTrace, featurize, normalize, resample
from .writers import SyntheticWriter, WriterProfile, base_templates, synthesize_user

ADAPT = "adapt"
FIXED = "fixed"


@dataclass(frozen=True)
class EngineConfig:
    """Everything the recognizer needs besides the prototypes themselves."""

    adapt: AdaptConfig = AdaptConfig()
    decoder: DecoderConfig = DecoderConfig()
    dtw: DtwConfig = DtwConfig()
    reduce_threshold: float | None = None  # state reduction off unless set


class AdaptiveEngine:
    """Decode-and-learn loop for one user.

    Decoding always reads the current immutable prototype snapshot.
    Observed examples buffer per label; the first completed session
    triggers the pool re-clustering, later buffers the incremental rounds.
    """

    def __init__(
        self,
        p0: PrototypeSet,
        pool: Sequence[WeightedInstance],
        cfg: EngineConfig = EngineConfig(),
        adapt_enabled: bool = True,
        user: str | None = None,
    ):
        self._p0 = p0
        self._pool = pool
        self._cfg = cfg
        self._adapt_enabled = adapt_enabled
        self._user = user if user is not None else p0.user
        if self._user == p0.user:
            self._pset = p0
        else:
            self._pset = PrototypeSet(
                user=self._user, prototypes=p0.prototypes, generation=0
            )
        self._first_session: list[WeightedInstance] = []

    @property
    def pset(self) -> PrototypeSet:
        return self._pset

    @property
    def generation(self) -> int:
        return self._pset.generation

    @property
    def first_session_buffer(self) -> tuple[WeightedInstance, ...]:
        return tuple(self._first_session)

    def restore(self, pset: PrototypeSet, first_session: Sequence[WeightedInstance]) -> None:
        """Resume from persisted state (used by the storage layer)."""
        self._pset = pset
        self._first_session = list(first_session)

    def decode(self, fs: FeatureSeq) -> Posterior:
        return decode_posterior(fs, self._pset, self._cfg.decoder, self._cfg.dtw)

    def observe(self, label: str, fs: FeatureSeq) -> None:
        """Record a labeled example once its true label is known."""
        if not self._adapt_enabled:
            return
        wi = WeightedInstance(resample(fs, self._cfg.adapt.resample_len), 1.0, label)
        if self._pset.generation == 0:
            self._first_session.append(wi)
        else:
            self._pset = incremental_adapt(self._pset, [wi], self._cfg.adapt)

    def end_session(self) -> None:
        """Session boundary; the first one personalizes the typical set."""
        if not self._adapt_enabled:
            return
        if self._pset.generation == 0:
            self._pset = initial_adapt(
                self._p0, self._first_session, self._pool, self._cfg.adapt, user=self._user
            )
            if self._cfg.reduce_threshold is not None and self._first_session:
                self._pset, _ = reduce_set_states(
                    self._pset, self._first_session, self._cfg.reduce_threshold, self._cfg.dtw
                )
            self._first_session = []


@dataclass(frozen=True, eq=False)
class LogRecord:
    """One prompted character with everything needed to replay it."""

    user: str
    session: int
    index: int
    intent: str
    predicted: str
    posterior: np.ndarray
    duration: float
    generation: int
    condition: str
    samples: np.ndarray | None

    def character_record(self) -> CharacterRecord:
        return CharacterRecord(
            intent=self.intent,
            posterior=Posterior(self.posterior, t=self.duration),
            duration=self.duration,
            condition=self.condition,
            session=self.session,
            user=self.user,
        )


@dataclass
class ExperimentLog:
    records: list[LogRecord]

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def users(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.user)
        return list(seen)

    def filter(self, **fields) -> "ExperimentLog":
        recs = [
            r for r in self.records
            if all(getattr(r, k) == v for k, v in fields.items())
        ]
        return ExperimentLog(recs)

    def character_records(self) -> list[CharacterRecord]:
        return [r.character_record() for r in self.records]

    def to_jsonl(self) -> str:
        lines = []
        for r in self.records:
            lines.append(
                json.dumps(
                    {
                        "user": r.user,
                        "session": r.session,
                        "index": r.index,
                        "intent": r.intent,
                        "predicted": r.predicted,
                        "posterior": r.posterior.tolist(),
                        "duration_s": r.duration,
                        "generation": r.generation,
                        "condition": r.condition,
                        "samples": None if r.samples is None else r.samples.tolist(),
                    },
                    separators=(",", ":"),
                )
            )
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @staticmethod
    def from_jsonl(text: str) -> "ExperimentLog":
        records = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            records.append(
                LogRecord(
                    user=obj["user"],
                    session=int(obj["session"]),
                    index=int(obj["index"]),
                    intent=obj["intent"],
                    predicted=obj["predicted"],
                    posterior=np.asarray(obj["posterior"], dtype=np.float64),
                    duration=float(obj["duration_s"]),
                    generation=int(obj["generation"]),
                    condition=obj["condition"],
                    samples=None if obj["samples"] is None else np.asarray(obj["samples"]),
                )
            )
        return ExperimentLog(records)

    @staticmethod
    def load(path: str | Path) -> "ExperimentLog":
        return ExperimentLog.from_jsonl(Path(path).read_text())


def build_pool(
    seed: int,
    n_writers: int = 8,
    reps_per_label: int = 3,
    profile: WriterProfile = WriterProfile(),
    resample_len: int = 32,
    templates: dict[str, np.ndarray] | None = None,
) -> list[WeightedInstance]:
    """Multi-user training pool for the typical prototypes."""
    if templates is None:
        templates = base_templates()
    pool: list[WeightedInstance] = []
    for i in range(n_writers):
        writer = synthesize_user(
            _subseed(seed, 9000 + i), profile, user=f"pool{i:02d}", templates=templates
        )
        for rep in range(reps_per_label):
            for label in LETTERS:
                fs = featurize(normalize(writer.emit(label, rep + 1)))
                pool.append(WeightedInstance(resample(fs, resample_len), 1.0, label))
    return pool


def _subseed(seed: int, key: int) -> int:
    return int(np.random.SeedSequence([seed, key]).generate_state(1)[0])


def make_writers(
    n: int,
    seed: int,
    profile: WriterProfile = WriterProfile(),
    templates: dict[str, np.ndarray] | None = None,
) -> list[SyntheticWriter]:
    """Fresh deterministic writers; call again with the same args to rerun."""
    if templates is None:
        templates = base_templates()
    return [
        synthesize_user(_subseed(seed, i), profile, user=f"user{i:02d}", templates=templates)
        for i in range(n)
    ]


def run_condition(
    writers: Sequence[SyntheticWriter],
    sessions: int,
    condition: str,
    p0: PrototypeSet,
    pool: Sequence[WeightedInstance],
    cfg: EngineConfig = EngineConfig(),
    seed: int = 0,
) -> ExperimentLog:
    """Play the writing game for every writer over the given sessions.

    Writers are stateful and get consumed; build fresh ones per run. Under
    the fixed condition the prototypes stay at generation 0 throughout,
    but the writers still receive feedback and keep adapting.
    """
    if condition not in (ADAPT, FIXED):
        raise ValueError(f"unknown condition {condition!r}")
    if not writers or sessions < 1:
        raise ValueError("need at least one writer and one session")
    records: list[LogRecord] = []
    for widx, writer in enumerate(writers):
        engine = AdaptiveEngine(
            p0, pool, cfg, adapt_enabled=(condition == ADAPT), user=writer.user
        )
        for session_n in range(1, sessions + 1):
            perm_rng = np.random.default_rng(np.random.SeedSequence([seed, widx, session_n]))
            for pos, li in enumerate(perm_rng.permutation(N_LETTERS)):
                label = LETTERS[int(li)]
                raw = writer.emit(label, session_n)
                fs = featurize(normalize(raw))
                generation = engine.generation
                q = engine.decode(fs)
                guess = predict(q)
                records.append(
                    LogRecord(
                        user=writer.user,
                        session=session_n,
                        index=pos,
                        intent=label,
                        predicted=guess,
                        posterior=q.probabilities,
                        duration=fs.duration,
                        generation=generation,
                        condition=condition,
                        samples=raw.samples,
                    )
                )
                writer.feedback(label, guess)
                engine.observe(label, fs)
            engine.end_session()
    return ExperimentLog(records)


def replay_fixed(log: ExperimentLog, p0: PrototypeSet, cfg: EngineConfig = EngineConfig()) -> ExperimentLog:
    """Re-decode recorded traces against the frozen typical prototypes.

    Durations are copied from the source records, so the replayed log is
    paired with the original on (intent, duration).
    """
    if p0.generation != 0:
        raise ValueError("replay needs the generation-0 set")
    out = []
    for r in log.records:
        if r.samples is None:
            raise MissingTrajectories(f"record {r.user}/{r.session}/{r.index} has no trace")
        fs = featurize(normalize(RawTrace(r.samples)))
        q = decode_posterior(fs, p0, cfg.decoder, cfg.dtw)
        out.append(
            replace(
                r,
                predicted=predict(q),
                posterior=q.probabilities,
                generation=0,
                condition=FIXED,
            )
        )
    return ExperimentLog(out)


def session_reports(log: ExperimentLog) -> dict[tuple[str, int], ChannelReport]:
    """Channel report per (user, session)."""
    groups: dict[tuple[str, int], list[CharacterRecord]] = {}
    for r in log.records:
        groups.setdefault((r.user, r.session), []).append(r.character_record())
    return {key: channel_report(recs) for key, recs in sorted(groups.items())}


def user_reports(log: ExperimentLog) -> dict[str, ChannelReport]:
    """Channel report per user over all their records."""
    groups: dict[str, list[CharacterRecord]] = {}
    for r in log.records:
        groups.setdefault(r.user, []).append(r.character_record())
    return {user: channel_report(recs) for user, recs in sorted(groups.items())}


def per_user_session_rates(log: ExperimentLog) -> dict[str, list[float]]:
    """Log-loss rate of each session, per user, in session order."""
    rates: dict[str, dict[int, float]] = {}
    for (user, session), rep in session_reports(log).items():
        rates.setdefault(user, {})[session] = rep.rate_ll
    return {u: [v for _, v in sorted(sess.items())] for u, sess in rates.items()}


def per_character_rates(log: ExperimentLog) -> dict[str, ChannelReport]:
    """Per-letter channel rate with the marginal entropy fixed at log2(26)."""
    groups: dict[str, list[CharacterRecord]] = {c: [] for c in LETTERS}
    for r in log.records:
        groups[r.intent].append(r.character_record())
    out = {}
    for label in LETTERS:
        recs = groups[label]
        if not recs:
            raise MissingClass(label)
        with np.errstate(divide="ignore"):
            lls = [
                float(-np.log2(rec.posterior.probabilities[LETTERS.index(label)]))
                for rec in recs
            ]
        mean_ll = float(np.mean(lls))
        mean_dur = float(np.mean([rec.duration for rec in recs]))
        out[label] = ChannelReport(
            entropy_marginal=LOG2_ALPHABET,
            mutual_information=None,
            mean_log_loss=mean_ll,
            mean_duration=mean_dur,
            rate_mi=None,
            rate_ll=(LOG2_ALPHABET - mean_ll) / mean_dur,
            rate_ideal=LOG2_ALPHABET / mean_dur,
            n=len(recs),
        )
    return out


def default_experiment(
    users: int = 15,
    sessions: int = 20,
    seed: int = 0,
    profile: WriterProfile = WriterProfile(),
    cfg: EngineConfig = EngineConfig(),
) -> tuple[ExperimentLog, ExperimentLog, PrototypeSet]:
    """Adapt run plus its replayed fixed control. Returns (adapt, fixed, p0)."""
    templates = base_templates()
    pool = build_pool(seed, profile=profile, resample_len=cfg.adapt.resample_len,
                      templates=templates)
    p0 = train_typical_prototypes(pool, cfg.adapt.k_typical, seed=cfg.adapt.seed)
    writers = make_writers(users, seed, profile, templates=templates)
    adapt_log = run_condition(writers, sessions, ADAPT, p0, pool, cfg, seed=seed)
    fixed_log = replay_fixed(adapt_log, p0, cfg)
    return adapt_log, fixed_log, p0

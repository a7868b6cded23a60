"""User state storage and the HTTP wire API for live writing sessions.

State lives in plain files under the data directory (one subdirectory per
user): the versioned prototype document, a state file with sessions and
adaptation buffers, and an append-only trace log in the dataset format.
Requests for the same user are serialized in arrival order.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import BaseModel

from .alphabet import LETTERS, N_LETTERS, is_label
from .decoder import Posterior, predict
from .errors import CorruptStore, DegenerateTrace, IncompleteSession, VersionMismatch
from .experiment import AdaptiveEngine, EngineConfig
from .metrics import ChannelReport, CharacterRecord, session_report
from .prototypes import (
    PrototypeSet,
    WeightedInstance,
    from_document,
    to_document,
)
from .trajectory import FeatureSeq, RawTrace, featurize, normalize
from .writers import base_templates

STATE_FORMAT = 1

DATA_DIR_ENV = "SCRIBE_DATA_DIR"


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "."))


@dataclass
class SessionState:
    """One writing-game session: prompts plus the records written so far."""

    session_id: int
    prompts: list[str]
    records: list[dict] = field(default_factory=list)

    def labels_written(self) -> set[str]:
        return {r["intent"] for r in self.records}

    def is_complete(self) -> bool:
        return len(self.labels_written()) == N_LETTERS


@dataclass(eq=False)
class UserState:
    """Everything the service knows about one user."""

    user: str
    engine: AdaptiveEngine
    session_counter: int = 0
    sessions: dict[int, SessionState] = field(default_factory=dict)

    @property
    def pset(self) -> PrototypeSet:
        return self.engine.pset

    def __eq__(self, other) -> bool:
        if not isinstance(other, UserState):
            return NotImplemented
        return (
            self.user == other.user
            and self.pset == other.pset
            and self.engine.first_session_buffer == other.engine.first_session_buffer
            and self.state_document() == other.state_document()
        )

    def state_document(self) -> dict:
        return {
            "format": STATE_FORMAT,
            "user": self.user,
            "session_counter": self.session_counter,
            "sessions": [
                {
                    "session_id": s.session_id,
                    "prompts": s.prompts,
                    "records": s.records,
                }
                for s in self.sessions.values()
            ],
            "first_session_buffer": [
                {"label": wi.label, "points": wi.features.points.tolist(),
                 "duration": wi.features.duration}
                for wi in self.engine.first_session_buffer
            ],
            "pending": {
                label: [
                    {"points": fs.points.tolist(), "duration": fs.duration}
                    for fs in buf
                ]
                for label, buf in self.pset.pending.items()
            },
        }


def save_user_state(state: UserState, user_dir: Path) -> None:
    user_dir.mkdir(parents=True, exist_ok=True)
    (user_dir / "prototypes.json").write_text(json.dumps(to_document(state.pset)))
    (user_dir / "state.json").write_text(json.dumps(state.state_document()))


def load_user_state(
    user_dir: Path,
    pool: Sequence[WeightedInstance],
    p0: PrototypeSet,
    cfg: EngineConfig,
) -> UserState:
    """Rebuild a UserState from disk; raises CorruptStore / VersionMismatch."""
    try:
        proto_doc = json.loads((user_dir / "prototypes.json").read_text())
        state_doc = json.loads((user_dir / "state.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptStore(f"unreadable user store {user_dir}: {exc}") from exc
    pset = from_document(proto_doc)
    if state_doc.get("format") != STATE_FORMAT:
        raise VersionMismatch(f"unsupported state format: {state_doc.get('format')!r}")
    try:
        pending = {
            label: tuple(
                FeatureSeq(np.asarray(e["points"]), float(e["duration"])) for e in entries
            )
            for label, entries in state_doc["pending"].items()
        }
        if pending:
            pset = PrototypeSet(
                user=pset.user,
                prototypes=pset.prototypes,
                generation=pset.generation,
                pending=pending,
            )
        engine = AdaptiveEngine(p0, pool, cfg, adapt_enabled=True, user=state_doc["user"])
        engine.restore(
            pset,
            [
                WeightedInstance(
                    FeatureSeq(np.asarray(e["points"]), float(e["duration"])), 1.0, e["label"]
                )
                for e in state_doc["first_session_buffer"]
            ],
        )
        sessions = {
            int(s["session_id"]): SessionState(
                session_id=int(s["session_id"]),
                prompts=list(s["prompts"]),
                records=list(s["records"]),
            )
            for s in state_doc["sessions"]
        }
        return UserState(
            user=state_doc["user"],
            engine=engine,
            session_counter=int(state_doc["session_counter"]),
            sessions=sessions,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptStore(f"malformed state document: {exc}") from exc


class ScribeService:
    """In-process core of the wire API; endpoints are thin wrappers."""

    def __init__(
        self,
        p0: PrototypeSet,
        pool: Sequence[WeightedInstance],
        cfg: EngineConfig = EngineConfig(),
        data_dir: Path | None = None,
        seed: int = 0,
    ):
        self._p0 = p0
        self._pool = pool
        self._cfg = cfg
        self._data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
        self._users: dict[str, UserState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._rng = np.random.default_rng(seed)

    def _user_dir(self, user: str) -> Path:
        return self._data_dir / "users" / user

    def _lock(self, user: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(user, threading.Lock())

    def _get_user(self, user: str, create: bool = False) -> UserState:
        state = self._users.get(user)
        if state is not None:
            return state
        user_dir = self._user_dir(user)
        if (user_dir / "state.json").exists():
            state = load_user_state(user_dir, self._pool, self._p0, self._cfg)
            self._users[user] = state
            return state
        if not create:
            raise KeyError(user)
        engine = AdaptiveEngine(self._p0, self._pool, self._cfg, adapt_enabled=True, user=user)
        state = UserState(user=user, engine=engine)
        self._users[user] = state
        save_user_state(state, user_dir)
        return state

    def start_session(self, user: str) -> tuple[int, list[str]]:
        """New prompt permutation; creates the user from P0 at first contact."""
        with self._lock(user):
            state = self._get_user(user, create=True)
            state.session_counter += 1
            sid = state.session_counter
            prompts = [LETTERS[int(i)] for i in self._rng.permutation(N_LETTERS)]
            state.sessions[sid] = SessionState(session_id=sid, prompts=prompts)
            save_user_state(state, self._user_dir(user))
            return sid, prompts

    def handle_character(
        self, user: str, session_id: int, prompt: str, samples
    ) -> dict:
        """Decode one submitted trace and fold it into the user's model."""
        if not is_label(prompt):
            raise ValueError(f"prompt {prompt!r} is not a lowercase letter")
        raw = RawTrace(np.asarray(samples, dtype=np.float64))
        with self._lock(user):
            state = self._get_user(user, create=True)
            session = state.sessions.get(session_id)
            if session is None:
                raise KeyError(session_id)
            fs = featurize(normalize(raw))
            generation = state.engine.generation
            q = state.engine.decode(fs)
            guess = predict(q)
            session.records.append(
                {
                    "intent": prompt,
                    "posterior": q.probabilities.tolist(),
                    "duration_s": fs.duration,
                    "prediction": guess,
                    "generation": generation,
                }
            )
            self._append_trace(user, session_id, prompt, raw)
            state.engine.observe(prompt, fs)
            if session.is_complete():
                state.engine.end_session()
            save_user_state(state, self._user_dir(user))
            return {
                "posterior": q.as_dict(),
                "prediction": guess,
                "duration_s": fs.duration,
            }

    def session_score(self, user: str, session_id: int) -> ChannelReport:
        """Channel report of a finished session."""
        with self._lock(user):
            state = self._get_user(user)
            session = state.sessions.get(session_id)
            if session is None:
                raise KeyError(session_id)
            if not session.is_complete():
                raise IncompleteSession(
                    f"{len(session.labels_written())}/{N_LETTERS} letters written"
                )
            records = [
                CharacterRecord(
                    intent=r["intent"],
                    posterior=Posterior(np.asarray(r["posterior"])),
                    duration=r["duration_s"],
                    session=session_id,
                    user=user,
                )
                for r in session.records
            ]
            return session_report(records)

    def prototype_document(self, user: str) -> dict:
        with self._lock(user):
            return to_document(self._get_user(user).pset)

    def _append_trace(self, user: str, session_id: int, label: str, raw: RawTrace) -> None:
        line = json.dumps(
            {
                "user": user,
                "session": session_id,
                "label": label,
                "samples": raw.samples.tolist(),
            },
            separators=(",", ":"),
        )
        path = self._user_dir(user) / "traces.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a") as fh:
            fh.write(line + "\n")


def default_service(
    data_dir: Path | None = None, seed: int = 0, cfg: EngineConfig = EngineConfig()
) -> ScribeService:
    """Service backed by a synthetic multi-writer pool (no human data needed)."""
    from .experiment import build_pool
    from .prototypes import train_typical_prototypes
    from .writers import WriterProfile

    templates = base_templates()
    pool = build_pool(seed, profile=WriterProfile(), resample_len=cfg.adapt.resample_len,
                      templates=templates)
    p0 = train_typical_prototypes(pool, cfg.adapt.k_typical, seed=cfg.adapt.seed)
    return ScribeService(p0, pool, cfg, data_dir=data_dir, seed=seed)


class CharacterIn(BaseModel):
    prompt: str
    samples: list[list[float]]


def create_app(service: ScribeService):
    """FastAPI application exposing the wire API."""
    from fastapi import FastAPI, HTTPException
    from fastapi.middleware.cors import CORSMiddleware

    app = FastAPI(title="scribe", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/users/{user_id}/sessions")
    def start_session(user_id: str):
        sid, prompts = service.start_session(user_id)
        return {"session_id": sid, "prompts": prompts}

    @app.post("/users/{user_id}/sessions/{session_id}/characters")
    def submit_character(user_id: str, session_id: int, body: CharacterIn):
        try:
            return service.handle_character(user_id, session_id, body.prompt, body.samples)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"unknown id: {exc}") from exc
        except (DegenerateTrace, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/users/{user_id}/sessions/{session_id}/score")
    def session_score(user_id: str, session_id: int):
        try:
            report = service.session_score(user_id, session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"unknown id: {exc}") from exc
        except IncompleteSession as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return json.loads(report.to_json())

    @app.get("/users/{user_id}/prototypes")
    def prototypes(user_id: str):
        try:
            return service.prototype_document(user_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"unknown user: {exc}") from exc

    return app

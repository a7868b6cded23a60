"""Synthetic writers standing in for human participants.

Each writer owns a personal style (a perturbed copy of the shared base
shapes), emits noisy traces of it, speeds up with practice following a
power law, and nudges confused letters apart when told a prediction was
wrong. The last two model the human half of the co-adaptation loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .alphabet import LETTERS
from .trajectory import RawTrace, resample_polyline


@dataclass(frozen=True)
class WriterProfile:
    """Behavioral parameters of a synthetic writer.

    Durations follow t_floor + (t_first - t_floor) * n^-practice_exponent
    for session number n. drift is how far a letter's template moves away
    from the class it was confused with, per error.
    """

    noise: float = 0.02
    style_spread: float = 0.18
    t_first: float = 2.0
    t_floor: float = 0.8
    practice_exponent: float = 0.3
    drift: float = 0.02
    device_scale: float = 280.0
    device_margin: float = 20.0

    def __post_init__(self):
        if not self.t_first >= self.t_floor > 0:
            raise ValueError("need t_first >= t_floor > 0")
        if self.practice_exponent < 0 or self.noise < 0 or self.drift < 0:
            raise ValueError("exponent, noise and drift must be >= 0")


def base_templates(seed: int = 0, n_points: int = 32, n_controls: int = 6) -> dict[str, np.ndarray]:
    """Shared alphabet shapes: one smooth random unistroke per letter.

    Shapes are normalized into the unit box with aspect preserved, so they
    survive the recognizer's own normalization unchanged.
    """
    templates = {}
    for i, label in enumerate(LETTERS):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        ctrl = rng.uniform(0.05, 0.95, size=(n_controls, 2))
        u = np.linspace(0.0, 1.0, n_controls)
        spline_x = CubicSpline(u, ctrl[:, 0])
        spline_y = CubicSpline(u, ctrl[:, 1])
        dense = np.linspace(0.0, 1.0, 200)
        pts = np.column_stack([spline_x(dense), spline_y(dense)])
        templates[label] = _unit_box(resample_polyline(pts, n_points))
    return templates


def _unit_box(pts: np.ndarray) -> np.ndarray:
    lo = pts.min(axis=0)
    scale = float((pts.max(axis=0) - lo).max())
    return (pts - lo) / scale


class SyntheticWriter:
    """Stateful writer: emits traces, drifts on error feedback."""

    def __init__(
        self,
        user: str,
        templates: dict[str, np.ndarray],
        profile: WriterProfile,
        seed: int,
    ):
        self.user = user
        self.profile = profile
        self.rng = np.random.default_rng(seed)
        self.templates = {k: np.array(v, dtype=np.float64) for k, v in templates.items()}

    def duration(self, session_n: int) -> float:
        """Practice-law writing duration for 1-based session numbers."""
        p = self.profile
        return p.t_floor + (p.t_first - p.t_floor) * session_n ** (-p.practice_exponent)

    def emit(self, label: str, session_n: int) -> RawTrace:
        """One noisy trace of the letter, in device units and milliseconds."""
        p = self.profile
        pts = self.templates[label]
        if p.noise > 0:
            pts = pts + self.rng.normal(0.0, p.noise, size=pts.shape)
        device = p.device_margin + p.device_scale * pts
        t_ms = np.linspace(0.0, self.duration(session_n) * 1000.0, pts.shape[0])
        return RawTrace(np.column_stack([device, t_ms]))

    def feedback(self, intent: str, predicted: str) -> None:
        """On a miss, move the intended letter's shape away from the confusion."""
        if predicted == intent or self.profile.drift == 0:
            return
        away = self.templates[intent] - self.templates[predicted]
        norm = float(np.linalg.norm(away))
        if norm == 0:
            return
        shifted = self.templates[intent] + self.profile.drift * away / norm
        self.templates[intent] = np.clip(shifted, 0.0, 1.0)


def synthesize_user(
    seed: int,
    profile: WriterProfile = WriterProfile(),
    user: str | None = None,
    templates: dict[str, np.ndarray] | None = None,
) -> SyntheticWriter:
    """Deterministic writer: personal style derived entirely from the seed.

    The personal style bends each base shape with a smooth random offset
    field, so it differs from the shared shapes in form, not just scale.
    """
    if templates is None:
        templates = base_templates()
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    styled = {}
    for label in LETTERS:
        base = templates[label]
        n = base.shape[0]
        anchors = rng.normal(0.0, profile.style_spread, size=(4, 2))
        at = np.linspace(0.0, 1.0, 4)
        u = np.linspace(0.0, 1.0, n)
        offsets = np.column_stack(
            [np.interp(u, at, anchors[:, 0]), np.interp(u, at, anchors[:, 1])]
        )
        styled[label] = np.clip(base + offsets, 0.0, 1.0)
    name = user if user is not None else f"w{seed:04d}"
    return SyntheticWriter(name, styled, profile, seed=int(rng.integers(2**63)))

"""The 26-letter input alphabet and its prior."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotADistribution, UnknownLabel

LETTERS: tuple[str, ...] = tuple("abcdefghijklmnopqrstuvwxyz")
N_LETTERS = len(LETTERS)

_INDEX = {c: i for i, c in enumerate(LETTERS)}


def label_index(label: str) -> int:
    """Index of a label in alphabet order; raises UnknownLabel otherwise."""
    try:
        return _INDEX[label]
    except KeyError:
        raise UnknownLabel(f"{label!r} is not a lowercase letter") from None


def is_label(label: str) -> bool:
    return label in _INDEX


@dataclass(frozen=True)
class Alphabet:
    """Ordered character set with a prior over intents.

    The default prior is uniform; a custom prior must sum to one.
    """

    prior: np.ndarray = field(default_factory=lambda: np.full(N_LETTERS, 1.0 / N_LETTERS))

    def __post_init__(self):
        prior = np.asarray(self.prior, dtype=np.float64)
        if prior.shape != (N_LETTERS,):
            raise NotADistribution(f"prior must have {N_LETTERS} entries")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-6:
            raise NotADistribution("prior entries must be >= 0 and sum to 1")
        prior.setflags(write=False)
        object.__setattr__(self, "prior", prior)

    @property
    def labels(self) -> tuple[str, ...]:
        return LETTERS


UNIFORM = Alphabet()

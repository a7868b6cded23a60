import numpy as np
import pytest

from scribe.alphabet import LETTERS
from scribe.prototypes import Prototype, PrototypeSet
from scribe.trajectory import FeatureSeq, _with_directions


def random_polyline(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random polyline in the unit box without repeated consecutive points."""
    pts = rng.random((n, 2))
    return pts


def random_featureseq(rng: np.random.Generator, n: int, duration: float = 1.0) -> FeatureSeq:
    return FeatureSeq(_with_directions(random_polyline(rng, n)), duration=duration)


def smooth_polyline(rng: np.random.Generator, n: int, n_controls: int = 5) -> np.ndarray:
    """Stroke-like smooth curve through random control points."""
    from scipy.interpolate import CubicSpline

    ctrl = rng.random((n_controls, 2))
    u = np.linspace(0.0, 1.0, n_controls)
    t = np.linspace(0.0, 1.0, n)
    return np.column_stack([CubicSpline(u, ctrl[:, 0])(t), CubicSpline(u, ctrl[:, 1])(t)])


def smooth_featureseq(rng: np.random.Generator, n: int, duration: float = 1.0) -> FeatureSeq:
    return FeatureSeq(_with_directions(smooth_polyline(rng, n)), duration=duration)


def stroke_polyline(rng: np.random.Generator, n: int = 64, max_turn: float = 0.25) -> np.ndarray:
    """Pen-like curve: unit steps with bounded turning, fit to the unit box."""
    ang = rng.uniform(0.0, 2.0 * np.pi)
    pts = [np.zeros(2)]
    for _ in range(n - 1):
        ang += rng.uniform(-max_turn, max_turn)
        pts.append(pts[-1] + np.array([np.cos(ang), np.sin(ang)]))
    pts = np.asarray(pts)
    lo = pts.min(axis=0)
    return (pts - lo) / (pts.max(axis=0) - lo).max()


def stroke_featureseq(rng: np.random.Generator, n: int = 64, duration: float = 1.0) -> FeatureSeq:
    return FeatureSeq(_with_directions(stroke_polyline(rng, n)), duration=duration)


def random_prototype_set(
    rng: np.random.Generator, k_per_label: int = 1, min_len: int = 4, max_len: int = 8
) -> PrototypeSet:
    protos = []
    for label in LETTERS:
        for _ in range(k_per_label):
            n = int(rng.integers(min_len, max_len + 1))
            pts = _with_directions(random_polyline(rng, n))
            protos.append(Prototype(label, pts, np.ones(n)))
    return PrototypeSet(user="test", prototypes=tuple(protos), generation=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

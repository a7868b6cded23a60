import math

import numpy as np
import pytest
from conftest import random_featureseq, random_prototype_set
from hypothesis import given, settings
from hypothesis import strategies as st

from scribe.dtw import (
    DtwConfig,
    dtw_distance,
    prefix_distances,
    prefix_init,
    prefix_update,
)
from scribe.errors import BandInfeasible, EmptyInput
from scribe.trajectory import FeatureSeq

RAW = DtwConfig(normalize_by_path=False)


def scalar_seq(values):
    """Sequences that differ only in x, with constant direction."""
    pts = np.array([[v, 0.0, 1.0, 0.0] for v in values])
    return FeatureSeq(pts)


def oracle_dtw(a: np.ndarray, b: np.ndarray, beta: float) -> float:
    """Min total cost over every monotone alignment path, enumerated."""
    n, m = a.shape[0], b.shape[0]
    local = [
        [
            math.sqrt(
                (a[i, 0] - b[j, 0]) * (a[i, 0] - b[j, 0])
                + (a[i, 1] - b[j, 1]) * (a[i, 1] - b[j, 1])
                + beta * beta * (
                    (a[i, 2] - b[j, 2]) * (a[i, 2] - b[j, 2])
                    + (a[i, 3] - b[j, 3]) * (a[i, 3] - b[j, 3])
                )
            )
            for j in range(m)
        ]
        for i in range(n)
    ]
    best = [math.inf]

    def walk(i, j, acc):
        acc = acc + local[i][j]
        if i == n - 1 and j == m - 1:
            if acc < best[0]:
                best[0] = acc
            return
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc)
        if i + 1 < n:
            walk(i + 1, j, acc)
        if j + 1 < m:
            walk(i, j + 1, acc)

    walk(0, 0, 0.0)
    return best[0]


class TestBatch:
    def test_self_distance_zero(self, rng):
        fs = random_featureseq(rng, 9)
        assert dtw_distance(fs, fs) == 0.0

    def test_scalar_example(self):
        # [0,1] vs [0,2]: best path matches 0-0, 1-2 for total |1-2| = 1.
        a = scalar_seq([0.0, 1.0])
        b = scalar_seq([0.0, 2.0])
        assert dtw_distance(a, b, DtwConfig(beta=0.0, normalize_by_path=False)) == 1.0

    def test_single_point_pair_is_local_cost(self):
        a = FeatureSeq(np.array([[0.0, 0.0, 1.0, 0.0]]))
        b = FeatureSeq(np.array([[3.0, 4.0, 1.0, 0.0]]))
        assert dtw_distance(a, b, RAW) == pytest.approx(5.0)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_symmetry_unnormalized(self, seed):
        r = np.random.default_rng(seed)
        a = random_featureseq(r, int(r.integers(2, 9)))
        b = random_featureseq(r, int(r.integers(2, 9)))
        assert dtw_distance(a, b, RAW) == dtw_distance(b, a, RAW)

    def test_non_negative(self, rng):
        for _ in range(20):
            a = random_featureseq(rng, int(rng.integers(2, 7)))
            b = one_point(rng) if rng.random() < 0.2 else random_featureseq(rng, int(rng.integers(2, 7)))
            assert dtw_distance(a, b, RAW) >= 0.0
            assert dtw_distance(a, b) >= 0.0

    def test_oracle_equivalence_small(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(1, 7))
            a = random_featureseq(rng, n) if n > 1 else one_point(rng)
            b = random_featureseq(rng, m) if m > 1 else one_point(rng)
            got = dtw_distance(a, b, RAW)
            want = oracle_dtw(a.points, b.points, 1.0)
            assert got == want

    def test_band_infeasible(self, rng):
        a = random_featureseq(rng, 10)
        b = random_featureseq(rng, 4)
        with pytest.raises(BandInfeasible):
            dtw_distance(a, b, DtwConfig(band=2))

    def test_band_wide_enough_matches_unbanded(self, rng):
        a = random_featureseq(rng, 8)
        b = random_featureseq(rng, 8)
        assert dtw_distance(a, b, DtwConfig(band=8)) == dtw_distance(a, b)

    def test_empty_rejected(self):
        a = np.empty((0, 4))
        b = np.array([[0.0, 0.0, 1.0, 0.0]])
        with pytest.raises(EmptyInput):
            dtw_distance(a, b)


def one_point(rng):
    pts = rng.random((1, 2))
    return FeatureSeq(np.hstack([pts, [[1.0, 0.0]]]))


class TestPrefix:
    def test_distances_before_any_point_rejected(self, rng):
        pset = random_prototype_set(rng)
        states, lengths, _ = pset.packed()
        st = prefix_init(states, lengths)
        with pytest.raises(EmptyInput):
            prefix_distances(st)

    def test_init_deterministic(self, rng):
        pset = random_prototype_set(rng)
        states, lengths, _ = pset.packed()
        assert prefix_init(states, lengths) == prefix_init(states, lengths)

    def test_init_column_sizes_match(self, rng):
        pset = random_prototype_set(rng)
        states, lengths, _ = pset.packed()
        st = prefix_init(states, lengths)
        assert st.cost_rows.shape == (len(pset.prototypes), int(lengths.max()))

    def test_one_point_matches_first_state_alignment(self, rng):
        pset = random_prototype_set(rng)
        states, lengths, _ = pset.packed()
        st = prefix_update(prefix_init(states, lengths), [0.5, 0.5, 1.0, 0.0])
        single = FeatureSeq(np.array([[0.5, 0.5, 1.0, 0.0]]))
        got = prefix_distances(st)
        for p_idx, proto in enumerate(pset.prototypes):
            want = dtw_distance(single, proto.as_features())
            assert got[p_idx] == want

    @pytest.mark.parametrize("normalize_by_path", [False, True])
    def test_prefix_equals_batch_at_every_step(self, rng, normalize_by_path):
        cfg = DtwConfig(normalize_by_path=normalize_by_path)
        for _ in range(10):
            pset = random_prototype_set(rng)
            states, lengths, _ = pset.packed()
            traj = random_featureseq(rng, 12)
            st = prefix_init(states, lengths, cfg)
            for t in range(1, len(traj) + 1):
                st = prefix_update(st, traj.points[t - 1])
                got = prefix_distances(st)
                for p_idx, proto in enumerate(pset.prototypes):
                    want = dtw_distance(traj.prefix(t), proto.as_features(), cfg)
                    assert got[p_idx] == want

    def test_update_is_pure(self, rng):
        pset = random_prototype_set(rng)
        states, lengths, _ = pset.packed()
        st0 = prefix_init(states, lengths)
        st1 = prefix_update(st0, [0.1, 0.2, 0.0, 1.0])
        st2 = prefix_update(st0, [0.1, 0.2, 0.0, 1.0])
        assert st1 == st2
        assert st0.consumed == 0 and st1.consumed == 1

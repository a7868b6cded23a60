import numpy as np
import pytest
from conftest import random_featureseq, random_prototype_set
from hypothesis import given, settings
from hypothesis import strategies as st

from scribe.alphabet import LETTERS, N_LETTERS
from scribe.decoder import (
    DecoderConfig,
    Posterior,
    decode_incremental,
    decode_init,
    decode_posterior,
    label_distances,
    posterior_from_distances,
    predict,
)

def uniform_posterior():
    return Posterior(np.full(N_LETTERS, 1.0 / N_LETTERS))


class TestTransfer:
    def test_two_label_worked_example(self):
        # exp(0) = 1 and exp(-ln 2) = 0.5 normalize to (2/3, 1/3).
        probs = posterior_from_distances(
            np.array([0.0, np.log(2.0)]), DecoderConfig(sigma=1.0, floor=0.0)
        )
        assert probs == pytest.approx([2.0 / 3.0, 1.0 / 3.0])

    def test_equidistant_gives_uniform(self):
        probs = posterior_from_distances(np.full(N_LETTERS, 0.37))
        assert probs == pytest.approx(np.full(N_LETTERS, 1.0 / N_LETTERS))

    def test_additive_shift_invariance(self, rng):
        cfg = DecoderConfig(sigma=0.25, floor=1e-6)
        for _ in range(50):
            d = rng.uniform(0, 2, N_LETTERS)
            c = float(rng.uniform(-5, 5))
            base = posterior_from_distances(d, cfg)
            shifted = posterior_from_distances(d + c, cfg)
            assert np.allclose(base, shifted, atol=1e-12)

    def test_floor_keeps_everything_positive(self, rng):
        cfg = DecoderConfig(sigma=0.01, floor=1e-6)
        d = np.zeros(N_LETTERS)
        d[5] = 1000.0  # would underflow to zero without the floor
        probs = posterior_from_distances(d, cfg)
        assert probs.min() >= 1e-6 / (1 + N_LETTERS * 1e-6) - 1e-18
        assert probs.sum() == pytest.approx(1.0)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_normalized_for_any_distances(self, seed):
        r = np.random.default_rng(seed)
        probs = posterior_from_distances(r.uniform(0, 10, N_LETTERS))
        assert abs(probs.sum() - 1.0) < 1e-9
        assert np.all(probs >= 0)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_monotone_transform_preserves_argmax(self, seed):
        r = np.random.default_rng(seed)
        d = r.uniform(0, 3, N_LETTERS)
        cfg = DecoderConfig()
        base = predict(Posterior(posterior_from_distances(d, cfg)))
        for transform in (lambda x: 2 * x + 1, np.square, np.sqrt, lambda x: np.log1p(x)):
            again = predict(Posterior(posterior_from_distances(transform(d), cfg)))
            assert again == base


class TestPredict:
    def test_clear_winner(self):
        p = np.full(N_LETTERS, 0.3 / 25)
        p[0] = 0.7
        assert predict(Posterior(p)) == "a"

    def test_tie_breaks_to_alphabet_order(self):
        p = np.zeros(N_LETTERS)
        p[1] = 0.5
        p[2] = 0.5
        assert predict(Posterior(p)) == "b"

    def test_uniform_predicts_a(self):
        assert predict(uniform_posterior()) == "a"


class TestDecode:
    def test_posterior_sums_to_one(self, rng):
        pset = random_prototype_set(rng)
        q = decode_posterior(random_featureseq(rng, 10), pset)
        assert abs(q.probabilities.sum() - 1.0) < 1e-9

    def test_closest_label_wins(self, rng):
        pset = random_prototype_set(rng)
        proto = pset.for_label("m")[0]
        q = decode_posterior(proto.as_features(), pset)
        d = label_distances(proto.as_features(), pset)
        assert d[LETTERS.index("m")] == 0.0
        assert predict(q) == LETTERS[int(np.argmin(d))]

    def test_incremental_matches_batch_exactly(self, rng):
        cfg = DecoderConfig()
        for _ in range(5):
            pset = random_prototype_set(rng)
            traj = random_featureseq(rng, 10)
            st = decode_init(pset)
            for t in range(1, len(traj) + 1):
                st, q_inc = decode_incremental(st, traj.points[t - 1], pset, cfg)
                q_batch = decode_posterior(traj.prefix(t), pset, cfg)
                assert np.array_equal(q_inc.probabilities, q_batch.probabilities)

    def test_incremental_deterministic(self, rng):
        pset = random_prototype_set(rng)
        point = [0.3, 0.4, 0.0, 1.0]
        st1, q1 = decode_incremental(decode_init(pset), point, pset)
        st2, q2 = decode_incremental(decode_init(pset), point, pset)
        assert st1 == st2
        assert np.array_equal(q1.probabilities, q2.probabilities)

    def test_posterior_t_tracks_duration(self, rng):
        pset = random_prototype_set(rng)
        fs = random_featureseq(rng, 8, duration=1.25)
        assert decode_posterior(fs, pset).t == 1.25


class TestValidation:
    def test_posterior_must_sum_to_one(self):
        with pytest.raises(ValueError):
            Posterior(np.full(N_LETTERS, 0.5))

    def test_sigma_positive(self):
        with pytest.raises(ValueError):
            DecoderConfig(sigma=0.0)

    def test_floor_bounded(self):
        with pytest.raises(ValueError):
            DecoderConfig(floor=0.5)

"""Adaptive handwriting recognition with channel-rate evaluation."""

from .alphabet import Alphabet, LETTERS, N_LETTERS
from .decoder import DecoderConfig, Posterior, decode_posterior, predict
from .dtw import DtwConfig, dtw_distance
from .errors import ScribeError
from .metrics import ChannelReport, CharacterRecord, channel_report, paired_t_test
from .prototypes import (
    AdaptConfig,
    Prototype,
    PrototypeSet,
    WeightedInstance,
    incremental_adapt,
    initial_adapt,
    reduce_states,
    train_typical_prototypes,
    weighted_kmeans,
)
from .trajectory import FeatureSeq, RawTrace, Trajectory, featurize, normalize, resample

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "LETTERS",
    "N_LETTERS",
    "DecoderConfig",
    "Posterior",
    "decode_posterior",
    "predict",
    "DtwConfig",
    "dtw_distance",
    "ScribeError",
    "ChannelReport",
    "CharacterRecord",
    "channel_report",
    "paired_t_test",
    "AdaptConfig",
    "Prototype",
    "PrototypeSet",
    "WeightedInstance",
    "incremental_adapt",
    "initial_adapt",
    "reduce_states",
    "train_typical_prototypes",
    "weighted_kmeans",
    "FeatureSeq",
    "RawTrace",
    "Trajectory",
    "featurize",
    "normalize",
    "resample",
]

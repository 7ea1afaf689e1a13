"""Skewed stable projections for frequency moments and entropy near alpha = 1."""

from .entropy import EntropyEstimate, choose_delta, renyi, shannon_from_sketch, tsallis
from .errors import (
    ConfigurationError,
    ConvergenceError,
    CorpusFormatError,
    IncompatibleSketchError,
    ModelViolationError,
    NumericalInstabilityWarning,
    RegimeError,
    StreamCorruptionError,
)
from .estimators import (
    Estimator,
    MomentEstimate,
    estimate,
    estimate_gm,
    estimate_hm,
    estimate_min,
    estimate_new,
    estimate_symmetric_gm,
)
from .sketch import CCSketch, SparseVector, StreamUpdate, merge, new_sketch, project_dense
from .stable_sampler import Skew, StableParams
from .tail_bounds import Tail, TailBoundResult, solve_tail

__all__ = [
    "CCSketch", "ConfigurationError", "ConvergenceError", "CorpusFormatError",
    "EntropyEstimate", "Estimator", "IncompatibleSketchError", "ModelViolationError",
    "MomentEstimate", "NumericalInstabilityWarning", "RegimeError", "Skew", "SparseVector",
    "StableParams", "StreamCorruptionError", "StreamUpdate", "Tail", "TailBoundResult",
    "choose_delta", "estimate", "estimate_gm", "estimate_hm", "estimate_min", "estimate_new",
    "estimate_symmetric_gm", "merge", "new_sketch", "project_dense", "renyi",
    "shannon_from_sketch", "solve_tail", "tsallis",
]

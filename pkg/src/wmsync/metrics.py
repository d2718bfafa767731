"""Decoder quality metrics: BER, NIIS and SAO."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RunMetrics:
    ber: float
    niis: float
    sao: int


def _pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return a, b


def ber(d, d_hat) -> float:
    """Fraction of message bits that differ."""
    d, d_hat = _pair(d, d_hat)
    if d.size == 0:
        return 0.0
    return float(np.count_nonzero(d != d_hat)) / d.size


def niis(actual, derived) -> float:
    """Number of incorrectly identified drift states, normalised by Gamma."""
    actual, derived = _pair(actual, derived)
    if actual.size == 0:
        return 0.0
    return float(np.count_nonzero(actual != derived)) / actual.size


def sao(actual, derived) -> int:
    """Sum of absolute offsets between true and inferred drift paths."""
    actual, derived = _pair(actual, derived)
    return int(np.abs(actual.astype(np.int64) - derived.astype(np.int64)).sum())


def run_metrics(d, d_hat, actual, derived) -> RunMetrics:
    return RunMetrics(ber(d, d_hat), niis(actual, derived), sao(actual, derived))

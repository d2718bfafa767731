"""Brute-force reference computations for tiny decoder instances.

These routines trade speed for transparency and are meant for tests:

* :func:`exact_dm1_posteriors` marginalises the memoryless channel law over
  every event sequence consistent with the received length.
* :func:`naive_recursion` evaluates the second-order recursions literally,
  in exact rational arithmetic, with no per-column normalisation.

Both follow the lattice boundary convention of the production decoders: the
drift before the last bit is pinned to the final offset, so steps
``1 .. Gamma-1`` are modelled and the last bit is unscored.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .codec import as_bits
from .decoder import LatticeConfig

MAX_EXACT_GAMMA = 10
MAX_EXACT_PSI = 3
MAX_NAIVE_GAMMA = 12


def _score(received, watermark, p_f, bit, drift_after):
    idx = bit + drift_after
    if idx < 1 or idx > len(received):
        return 0
    return 1 - p_f if received[idx - 1] == watermark[bit - 1] else p_f


def enumerate_event_sequences(cfg: LatticeConfig, received, watermark):
    """Yield ``(drifts, weight)`` for every admissible global event sequence.

    ``drifts`` holds the drift before each of the Gamma bits. Each step is m
    insertions (uniform bits) followed by a transmission, scored against the
    watermark, or a deletion.
    """
    p = cfg.params
    im = p.max_insertions
    gamma, psi, x_max = cfg.gamma, cfg.psi, cfg.x_max
    received = as_bits(received)
    watermark = as_bits(np.asarray(watermark))

    def rec(n, drift, path, weight):
        if n == gamma:
            if drift == psi:
                yield tuple(path), weight
            return
        remaining = gamma - n  # steps left after this one, plus this one
        for m in range(im + 1):
            ins = p.p_i ** m * 0.5 ** m
            # deletion after m inserts
            nd = drift + m - 1
            if -x_max <= nd <= x_max and -(remaining - 1) <= psi - nd <= im * (remaining - 1):
                yield from rec(n + 1, nd, path + [nd], weight * ins * p.p_d)
            # transmission after m inserts
            nt = drift + m
            if -x_max <= nt <= x_max and -(remaining - 1) <= psi - nt <= im * (remaining - 1):
                pt = p.p_t if m < im else p.p_hat_t
                z = _score(received, watermark, p.p_f, n, nt)
                yield from rec(n + 1, nt, path + [nt], weight * ins * pt * z)

    for s, start in enumerate(cfg.pi):
        if start > 0:
            d0 = s - x_max
            yield from rec(1, d0, [d0], float(start))


def exact_dm1_posteriors(cfg: LatticeConfig, received, watermark) -> np.ndarray:
    if cfg.gamma > MAX_EXACT_GAMMA or abs(cfg.psi) > MAX_EXACT_PSI or cfg.max_insertions != 1:
        raise ValueError("instance too large for exhaustive enumeration")
    sums = [[[] for _ in range(cfg.n_states)] for _ in range(cfg.gamma)]
    for drifts, w in enumerate_event_sequences(cfg, received, watermark):
        for n, d in enumerate(drifts):
            sums[n][d + cfg.x_max].append(w)
    post = np.array([[math.fsum(cell) for cell in col] for col in sums]).T
    totals = post.sum(axis=0)
    if np.any(totals <= 0):
        raise ValueError("received sequence has zero likelihood under the model")
    return post / totals


def count_event_sequences(cfg: LatticeConfig, received, watermark) -> int:
    return sum(1 for _ in enumerate_event_sequences(cfg, received, watermark))


# --- literal recursions in rational arithmetic ------------------------------

def _alpha(j, k, p, im):
    if -1 <= k - j < im:
        return p["i"] ** (k - j + 1) * p["d"] / 2 ** (k - j + 1)
    return Fraction(0)


def _beta(j, k, p, im):
    if 0 <= k - j < im:
        return p["i"] ** (k - j) * p["t"] / 2 ** (k - j)
    if k - j == im:
        return p["i"] ** im * p["hat_t"] / 2 ** (k - j)
    return Fraction(0)


def _table2(a):
    """(unscored, scored) parts of the I_m = 1 two-interval probabilities."""
    h = Fraction(1, 2)
    z = Fraction(0)
    return {
        (0, 0): (a["DD"], z),
        (0, 1): (a["DI"] * a["ID"] * h, a["DT"]),
        (0, 2): (z, a["DI"] * a["IT"] * h),
        (1, 0): (a["TD"] + a["ID"] * a["DD"], z),
        (1, 1): (a["TI"] * a["ID"] * h + a["ID"] * a["DI"] * a["ID"] * h,
                 a["TT"] + a["ID"] * a["DT"]),
        (1, 2): (z, a["TI"] * a["IT"] * h + a["ID"] * a["DI"] * a["IT"] * h),
        (2, 0): (a["IT"] * a["TD"], z),
        (2, 1): (a["IT"] * a["TI"] * a["ID"] * h, a["IT"] * a["TT"]),
        (2, 2): (z, a["IT"] * a["TI"] * a["IT"] * h),
    }


def _normalised(cols):
    out = []
    for col in cols:
        total = sum(col)
        out.append([float(x / total) if total else 0.0 for x in col])
    return np.array(out).T


def naive_recursion(cfg: LatticeConfig, received, watermark, which: str) -> dict:
    """Literal evaluation of the ``fsmc`` or ``dm2`` recursions.

    Returns columnwise-normalised ``forward``, ``backward`` and ``posterior``.
    """
    if cfg.gamma > MAX_NAIVE_GAMMA:
        raise ValueError("instance too large for the naive recursion")
    if which not in ("fsmc", "dm2"):
        raise ValueError(f"unknown recursion {which!r}")
    im = cfg.max_insertions
    if which == "fsmc" and im != 1:
        raise ValueError("the literal window table is written for I_m = 1")
    received = [int(b) for b in as_bits(received)]
    watermark = [int(b) for b in as_bits(np.asarray(watermark))]
    gamma, psi, x_max = cfg.gamma, cfg.psi, cfg.x_max
    states = range(-x_max, x_max + 1)
    p = {"t": Fraction(cfg.params.p_t), "d": Fraction(cfg.params.p_d),
         "i": Fraction(cfg.params.p_i), "hat_t": Fraction(cfg.params.p_hat_t)}
    p_f = Fraction(cfg.params.p_f)
    if which == "fsmc":
        a = {s + d: Fraction(cfg.a3[s, d]) for s in "TDI" for d in "TDI"}
        table = _table2(a)

    def zeta(bit, drift_after):
        return _score(received, watermark, p_f, bit, drift_after)

    def first(j, k, z):
        return _alpha(j, k, p, im) + _beta(j, k, p, im) * z

    def inside(s):
        return -x_max <= s <= x_max

    def second(i, j, k, z):
        if which == "dm2":
            return (_alpha(i, j, p, im) + _beta(i, j, p, im)) * first(j, k, z)
        u, f = table.get((j - i + 1, k - j + 1), (0, 0))
        return u + f * z

    F = {(k, 1): Fraction(cfg.pi[k + x_max]) for k in states}
    for n in range(2, gamma + 1):
        for k in states:
            total = Fraction(0)
            z = zeta(n - 1, k)
            for j in range(k - im, k + 2):
                if not inside(j):
                    continue
                if n == 2:
                    total += F[(j, 1)] * first(j, k, z)
                    continue
                for i in range(j - im, j + 2):
                    if inside(i):
                        total += F[(j, n - 1)] * second(i, j, k, z)
            F[(k, n)] = total

    B = {(k, gamma): Fraction(int(k == psi)) for k in states}
    for n in range(gamma - 1, 0, -1):
        for k in states:
            total = Fraction(0)
            for j in range(k - 1, k + im + 1):
                if not inside(j):
                    continue
                z = zeta(n, j)
                if n == gamma - 1:
                    total += B[(j, gamma)] * first(k, j, z)
                    continue
                for i in range(j - 1, j + im + 1):
                    if not inside(i):
                        continue
                    if which == "dm2":
                        w = (_alpha(j, i, p, im) + _beta(j, i, p, im)) * first(k, j, z)
                    else:
                        u, f = table.get((i - j + 1, j - k + 1), (0, 0))
                        w = u + f * z
                    total += B[(j, n + 1)] * w
            B[(k, n)] = total

    fcols = [[F[(k, n)] for k in states] for n in range(1, gamma + 1)]
    bcols = [[B[(k, n)] for k in states] for n in range(1, gamma + 1)]
    pcols = [[F[(k, n)] * B[(k, n)] for k in states] for n in range(1, gamma + 1)]
    return {"forward": _normalised(fcols), "backward": _normalised(bcols),
            "posterior": _normalised(pcols)}

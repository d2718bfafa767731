"""Drift-lattice inner decoders.

Three forward-backward variants share the lattice of synchronisation drifts
``-x_max .. x_max`` over time ``1 .. Gamma``:

* ``dm1``  first-order memoryless decoder,
* ``dm2``  second-order memoryless decoder,
* ``fsmc`` second-order decoder driven by the three-state transition matrix
  through a window table of two-interval event sequences.

Column ``n`` of a lattice is the drift before bit ``n`` enters the channel.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _lattice
from .codec import as_bits
from .exceptions import ConfigError, DecoderFailure
from .markov import STATES3, ChannelParams, TransitionMatrix

DECODERS = ("dm1", "dm2", "fsmc")


def compute_xmax(psi: int) -> int:
    """Five times the absolute final offset, or 5 when the offset is zero."""
    return 5 * abs(int(psi)) if psi else 5


@dataclass(frozen=True)
class LatticeConfig:
    gamma: int
    psi: int
    x_max: int
    params: ChannelParams
    pi: np.ndarray = field(repr=False)
    a3: TransitionMatrix | None = None

    def __post_init__(self):
        if self.gamma < 1:
            raise ConfigError("gamma must be at least 1")
        if abs(self.psi) > self.x_max:
            raise ConfigError(f"|psi|={abs(self.psi)} exceeds x_max={self.x_max}")
        pi = np.asarray(self.pi, dtype=float)
        if pi.shape != (2 * self.x_max + 1,):
            raise ConfigError("initial distribution has the wrong number of states")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ConfigError("initial distribution must be a probability vector")
        object.__setattr__(self, "pi", pi)

    @property
    def max_insertions(self) -> int:
        return self.params.max_insertions

    @property
    def n_states(self) -> int:
        return 2 * self.x_max + 1

    @classmethod
    def build(cls, gamma: int, received_len: int, params: ChannelParams,
              a3: TransitionMatrix | None = None, x_max: int | None = None):
        """Config for a received sequence, starting synchronised at drift 0."""
        psi = int(received_len) - int(gamma)
        x_max = compute_xmax(psi) if x_max is None else int(x_max)
        pi = np.zeros(2 * x_max + 1)
        pi[x_max] = 1.0
        return cls(gamma, psi, x_max, params, pi, a3)


@dataclass(frozen=True)
class DriftLattice:
    forward: np.ndarray = field(repr=False)
    backward: np.ndarray = field(repr=False)
    posterior: np.ndarray = field(repr=False)
    x_max: int

    @property
    def states(self) -> np.ndarray:
        return np.arange(-self.x_max, self.x_max + 1)

    def to_csv(self, path, which: str = "posterior") -> None:
        """Dump one matrix (rows = drift states, columns = time) for debugging."""
        data = getattr(self, which)
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["drift"] + [str(n) for n in range(1, data.shape[1] + 1)])
            for state, row in zip(self.states, data):
                w.writerow([int(state)] + [repr(float(x)) for x in row])


# --- first-order (memoryless) step probabilities -------------------------

def alpha(j: int, k: int, params: ChannelParams) -> float:
    """``k-j+1`` insertions followed by a deletion."""
    m = k - j + 1
    if 0 <= m <= params.max_insertions:
        return params.p_i ** m * params.p_d / 2 ** m
    return 0.0


def beta(j: int, k: int, params: ChannelParams) -> float:
    """``k-j`` insertions followed by a transmission (bit score excluded)."""
    m = k - j
    im = params.max_insertions
    if 0 <= m < im:
        return params.p_i ** m * params.p_t / 2 ** m
    if m == im:
        return params.p_i ** im * params.p_hat_t / 2 ** m
    return 0.0


def zeta(n: int, k: int, received, watermark, p_f: float) -> float:
    """Agreement of received bit ``n + k`` with watermark bit ``n`` (1-based)."""
    return _lattice._score(np.asarray(received), np.asarray(watermark), p_f, n, k)


def first_order_tables(params: ChannelParams) -> tuple[np.ndarray, np.ndarray]:
    """(alpha, beta) indexed by bits emitted ``b = k - j + 1``."""
    nb = params.max_insertions + 2
    a = np.array([alpha(0, b - 1, params) for b in range(nb)])
    b_ = np.array([beta(0, b - 1, params) for b in range(nb)])
    return a, b_


# --- window table ---------------------------------------------------------

@dataclass(frozen=True)
class WindowTerm:
    """Ordered product of transition entries times ``scale``.

    ``factors`` holds (from, to) state pairs, e.g. (("T", "I"), ("I", "D")).
    """

    factors: tuple[tuple[str, str], ...]
    scale: float
    ends_in_transmission: bool

    def evaluate(self, a3: TransitionMatrix) -> float:
        v = self.scale
        for src, dst in self.factors:
            v *= a3[src, dst]
        return v

    def __str__(self):
        body = "*".join(f"a_{s}{d}" for s, d in self.factors) or "1"
        if self.scale != 1:
            body += f"/{int(round(1 / self.scale))}"
        return body + (" [xi]" if self.ends_in_transmission else "")


@dataclass(frozen=True)
class WindowTable:
    """Second-order transition terms keyed by (bits in first, bits in second interval)."""

    max_insertions: int
    terms: dict = field(repr=False)

    def evaluate(self, a3: TransitionMatrix) -> tuple[np.ndarray, np.ndarray]:
        """Return (unflagged, flagged) coefficient sums as ``[b1, b2]`` arrays."""
        nb = self.max_insertions + 2
        u = np.zeros((nb, nb))
        f = np.zeros((nb, nb))
        for (b1, b2), terms in self.terms.items():
            for term in terms:
                if term.ends_in_transmission:
                    f[b1, b2] += term.evaluate(a3)
                else:
                    u[b1, b2] += term.evaluate(a3)
        return u, f


def _interval_sequences(max_insertions: int):
    # m inserts then T (m+1 bits) or m inserts then D (m bits)
    for m in range(max_insertions + 1):
        for last in ("T", "D"):
            yield ("I",) * m + (last,)


def _internal(seq):
    return tuple(zip(seq[:-1], seq[1:]))


def build_window_table(a3: TransitionMatrix | None = None,
                       max_insertions: int = 1) -> WindowTable:
    """Enumerate every pair of per-interval event sequences.

    A term is [transitions inside seq1] x [last(seq1) -> first(seq2)] x
    [transitions inside seq2] x 2^-(inserts in seq2). Only the second interval
    carries insertion scaling and the watermark score. ``a3`` is accepted for
    signature symmetry; the table itself is symbolic.
    """
    if max_insertions < 0:
        raise ConfigError("max_insertions must be non-negative")
    terms: dict = {}
    seqs = list(_interval_sequences(max_insertions))
    for s1, s2 in itertools.product(seqs, seqs):
        b1 = len(s1) - (s1[-1] == "D")
        b2 = len(s2) - (s2[-1] == "D")
        m2 = len(s2) - 1
        factors = _internal(s1) + ((s1[-1], s2[0]),) + _internal(s2)
        term = WindowTerm(factors, 0.5 ** m2, s2[-1] == "T")
        terms.setdefault((b1, b2), []).append(term)
    return WindowTable(max_insertions, {k: tuple(v) for k, v in sorted(terms.items())})


# --- forward-backward -----------------------------------------------------

def _prepare(cfg: LatticeConfig, received, watermark):
    received = as_bits(received)
    watermark = as_bits(np.asarray(watermark))
    if watermark.size != cfg.gamma:
        raise ConfigError(f"watermark length {watermark.size} != gamma {cfg.gamma}")
    if received.size - cfg.gamma != cfg.psi:
        raise ConfigError(
            f"received length {received.size} inconsistent with psi={cfg.psi}")
    return received, watermark


def _run(cfg, received, watermark, u2, f2, second_order) -> DriftLattice:
    received, watermark = _prepare(cfg, received, watermark)
    u1, f1 = first_order_tables(cfg.params)
    nb = cfg.max_insertions + 2
    if u2 is None:
        u2 = f2 = np.zeros((nb, nb))
    fwd, bwd, post, status = _lattice.sweep(
        received, watermark, cfg.gamma, cfg.x_max, cfg.max_insertions, cfg.psi,
        cfg.pi, cfg.params.p_f, u1, f1, np.ascontiguousarray(u2, dtype=float),
        np.ascontiguousarray(f2, dtype=float), second_order)
    if status == _lattice.FORWARD_FAILED:
        raise DecoderFailure("forward pass lost all probability mass")
    if status == _lattice.BACKWARD_FAILED:
        raise DecoderFailure("backward pass lost all probability mass")
    if status == _lattice.POSTERIOR_FAILED:
        raise DecoderFailure("posterior column is all zero (x_max too small?)")
    return DriftLattice(fwd, bwd, post, cfg.x_max)


def forward_backward_dm1(cfg: LatticeConfig, received, watermark) -> DriftLattice:
    return _run(cfg, received, watermark, None, None, False)


def dm2_tables(params: ChannelParams) -> tuple[np.ndarray, np.ndarray]:
    """Second-order memoryless coefficients: (alpha+beta)[b1] * (alpha, beta)[b2]."""
    a, b = first_order_tables(params)
    return np.outer(a + b, a), np.outer(a + b, b)


def forward_backward_dm2(cfg: LatticeConfig, received, watermark) -> DriftLattice:
    u2, f2 = dm2_tables(cfg.params)
    return _run(cfg, received, watermark, u2, f2, True)


def forward_backward_fsmc(cfg: LatticeConfig, received, watermark,
                          table: WindowTable | None = None) -> DriftLattice:
    if cfg.a3 is None or cfg.a3.states != STATES3:
        raise ConfigError("the fsmc decoder needs a three-state matrix in the config")
    if table is None:
        table = build_window_table(cfg.a3, cfg.max_insertions)
    if table.max_insertions != cfg.max_insertions:
        raise ConfigError("window table was built for a different max_insertions")
    u2, f2 = table.evaluate(cfg.a3)
    return _run(cfg, received, watermark, u2, f2, True)


def decode(method: str, cfg: LatticeConfig, received, watermark,
           table: WindowTable | None = None) -> DriftLattice:
    if method == "dm1":
        return forward_backward_dm1(cfg, received, watermark)
    if method == "dm2":
        return forward_backward_dm2(cfg, received, watermark)
    if method == "fsmc":
        return forward_backward_fsmc(cfg, received, watermark, table)
    raise ConfigError(f"unknown decoder {method!r}; expected one of {DECODERS}")


def posteriors(forward, backward) -> np.ndarray:
    forward = np.asarray(forward, dtype=float)
    backward = np.asarray(backward, dtype=float)
    if forward.shape != backward.shape:
        raise ValueError("forward and backward shapes differ")
    prod = forward * backward
    sums = prod.sum(axis=0)
    if np.any(sums <= 0):
        raise DecoderFailure(f"posterior column {int(np.argmin(sums)) + 1} is all zero")
    return prod / sums


# --- path extraction and resynchronisation --------------------------------

def extract_path(posterior, max_insertions: int = 1) -> np.ndarray:
    """Greedy constrained argmax through the posterior.

    Each step may move the drift by -1 .. +max_insertions. Ties prefer the
    smaller absolute drift change, then the smaller drift.
    """
    post = np.asarray(posterior, dtype=float)
    n_states, gamma = post.shape
    x_max = (n_states - 1) // 2
    path = np.empty(gamma, dtype=np.int64)
    path[0] = int(np.argmax(post[:, 0])) - x_max
    for n in range(1, gamma):
        prev = path[n - 1]
        best, best_key = None, None
        for k in range(max(prev - 1, -x_max), min(prev + max_insertions, x_max) + 1):
            key = (-post[k + x_max, n], abs(k - prev), k)
            if best_key is None or key < best_key:
                best, best_key = k, key
        path[n] = best
    return path


def check_path(path, max_insertions: int = 1) -> None:
    steps = np.diff(np.asarray(path))
    if steps.size and (steps.min() < -1 or steps.max() > max_insertions):
        raise ValueError("path contains an illegal drift step")


def resynchronize(received, path, psi: int, max_insertions: int | None = None) -> np.ndarray:
    """Map the received sequence back onto Gamma transmitted positions.

    A deletion step (drift change -1) restores a '0'; otherwise bit ``n`` is
    read at received position ``n + drift_after`` and skipped bits are
    dropped as insertions.
    """
    received = as_bits(received)
    path = np.asarray(path, dtype=np.int64)
    if max_insertions is not None:
        check_path(path, max_insertions)
    elif path.size > 1 and np.diff(path).min() < -1:
        raise ValueError("path contains an illegal drift step")
    gamma = path.size
    after = np.append(path[1:], psi)
    delta = after - path
    idx = np.arange(1, gamma + 1) + after  # 1-based
    valid = (delta >= 0) & (idx >= 1) & (idx <= received.size)
    r = np.zeros(gamma, dtype=np.uint8)
    r[valid] = received[idx[valid] - 1]
    return r

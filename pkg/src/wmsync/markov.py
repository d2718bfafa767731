"""Transition-matrix algebra for the insertion/deletion/substitution chain.

Covers stationary distributions, the 4-state (T, S, D, I) to 3-state
(T, D, I) reduction, average channel entropy and entropy-banded random
matrix generation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import (
    DegenerateRowError,
    InvalidMatrixError,
    MatrixNotFoundError,
    NumericError,
)

STATES4 = ("T", "S", "D", "I")
STATES3 = ("T", "D", "I")

# mean density of the canonical 4-to-5 sparse codebook: (0*1 + 1*5 + 2*10) / 80
CODEBOOK_DENSITY = 0.3125

ROW_TOL = 1e-12


def _check_stochastic(a: np.ndarray, name: str = "matrix") -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidMatrixError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrixError(f"{name} has non-finite entries")
    if np.any(a < 0) or np.any(a > 1):
        raise InvalidMatrixError(f"{name} entries must lie in [0, 1]")
    dev = np.abs(a.sum(axis=1) - 1.0)
    if np.any(dev > ROW_TOL):
        raise InvalidMatrixError(
            f"{name} rows must sum to 1 (max deviation {dev.max():.3e})")


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix with named states.

    ``states`` is ``STATES4`` for the four-state chain and ``STATES3`` for
    the reduced channel. Entries can be read by state name::

        a3["I", "D"]   # probability of Insertion -> Deletion
    """

    states: tuple[str, ...]
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if tuple(self.states) not in (STATES4, STATES3):
            raise InvalidMatrixError(f"unsupported state labels {self.states!r}")
        if entries.shape != (len(self.states),) * 2:
            raise InvalidMatrixError(
                f"expected {len(self.states)}x{len(self.states)} entries, "
                f"got {entries.shape}")
        _check_stochastic(entries)
        entries.setflags(write=False)
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "entries", entries)

    def __eq__(self, other):
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return self.states == other.states and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.states, self.entries.tobytes()))

    @classmethod
    def four(cls, rows) -> "TransitionMatrix":
        return cls(STATES4, rows)

    @classmethod
    def three(cls, rows) -> "TransitionMatrix":
        return cls(STATES3, rows)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def index(self, state: str) -> int:
        return self.states.index(state)

    def __getitem__(self, key):
        src, dst = key
        return float(self.entries[self.index(src), self.index(dst)])

    def row(self, state: str) -> np.ndarray:
        return self.entries[self.index(state)].copy()

    def to_dict(self) -> dict:
        return {"states": list(self.states),
                "rows": [[float(x) for x in r] for r in self.entries]}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "TransitionMatrix":
        try:
            return cls(tuple(data["states"]), data["rows"])
        except KeyError as exc:
            raise InvalidMatrixError(f"missing key {exc} in matrix JSON") from None

    @classmethod
    def from_json(cls, text: str) -> "TransitionMatrix":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ChannelParams:
    """IID channel probabilities derived from a four-state chain.

    ``p_f`` is the probability that a received transmitted bit disagrees
    with its watermark bit, given sparse density ``f``.
    """

    p_t: float
    p_s: float
    p_d: float
    p_i: float
    p_hat_t: float
    p_f: float
    max_insertions: int = 1
    f: float = CODEBOOK_DENSITY

    def __post_init__(self):
        if self.max_insertions < 0:
            raise ValueError("max_insertions must be non-negative")
        if not 0.0 <= self.p_f <= 0.5:
            raise ValueError(f"p_f must lie in [0, 0.5], got {self.p_f}")


def mismatch_probability(f: float, p_s: float) -> float:
    """Probability a transmitted bit differs from the watermark bit."""
    return f * (1.0 - p_s) + (1.0 - f) * p_s


@dataclass(frozen=True)
class EntropyBand:
    band_id: int
    trans_to_error: tuple[float, float]
    error_to_error: tuple[float, float]
    entropy_range: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        for lo, hi in (self.trans_to_error, self.error_to_error):
            if not (0.0 < lo <= hi < 1.0):
                raise ValueError(f"invalid band range [{lo}, {hi}]")


BANDS = {
    1: EntropyBand(1, (0.0001, 0.005), (0.001, 0.05), (0.01, 0.1)),
    2: EntropyBand(2, (0.001, 0.05), (0.01, 0.05), (0.1, 0.2)),
    3: EntropyBand(3, (0.01, 0.05), (0.001, 0.05), (0.2, 0.3)),
}


def band_for_entropy(target: float) -> EntropyBand:
    """Pick the band whose entropy range holds ``target`` (lower edge inclusive)."""
    for band in BANDS.values():
        lo, hi = band.entropy_range
        if lo <= target < hi:
            return band
    if np.isclose(target, BANDS[3].entropy_range[1]):
        return BANDS[3]
    raise ValueError(f"no entropy band covers target {target}")


def stationary_distribution(a) -> np.ndarray:
    """Stationary law of a row-stochastic matrix.

    Solves ``rho (A - I) = 0`` together with ``sum(rho) = 1``. One balance
    equation is redundant (rows of ``A.T - I`` sum to zero) and is replaced
    by the normalisation.

    Raises
    ------
    InvalidMatrixError
        ``a`` is not row-stochastic.
    NumericError
        The chain has no unique stationary distribution.
    """
    a = np.asarray(a, dtype=float)
    _check_stochastic(a)
    n = a.shape[0]
    m = a.T - np.eye(n)
    m[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        rho = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError:
        raise NumericError("chain has no unique stationary distribution") from None
    if np.any(rho < -1e-9) or not np.all(np.isfinite(rho)):
        raise NumericError("stationary solve produced an invalid distribution")
    rho = np.clip(rho, 0.0, None)
    return rho / rho.sum()


def derive_iid_params(a4: TransitionMatrix, max_insertions: int = 1,
                      f: float = CODEBOOK_DENSITY) -> ChannelParams:
    if a4.states != STATES4:
        raise InvalidMatrixError("derive_iid_params needs a four-state matrix")
    rho = stationary_distribution(a4.entries)
    p_t, p_s, p_d, p_i = (float(x) for x in rho)
    return ChannelParams(p_t=p_t, p_s=p_s, p_d=p_d, p_i=p_i,
                         p_hat_t=1.0 - p_d,
                         p_f=mismatch_probability(f, p_s),
                         max_insertions=max_insertions, f=f)


def reduce_to_three_state(a4: TransitionMatrix) -> TransitionMatrix:
    """Drop the substitution state and renormalise the remaining rows."""
    if a4.states != STATES4:
        raise InvalidMatrixError("reduce_to_three_state needs a four-state matrix")
    keep = [a4.index(s) for s in STATES3]
    sub = a4.entries[np.ix_(keep, keep)]
    mass = sub.sum(axis=1)
    if np.any(mass <= 0):
        bad = STATES3[int(np.argmin(mass))]
        raise DegenerateRowError(f"row {bad} has no mass outside the S column")
    return TransitionMatrix(STATES3, sub / mass[:, None])


def state_entropy(row) -> float:
    """Entropy in bits of one transition row, with 0*log2(0) = 0."""
    row = np.asarray(row, dtype=float)
    if np.any(row < 0):
        raise InvalidMatrixError("probability row has negative entries")
    nz = row[row > 0]
    return float(-(nz * np.log2(nz)).sum())


def average_entropy(a3: TransitionMatrix) -> float:
    """Stationary-weighted mean of the per-state entropies (bits/symbol)."""
    rho = stationary_distribution(a3.entries)
    return float(sum(r * state_entropy(row) for r, row in zip(rho, a3.entries)))


def generate_matrix(band: EntropyBand, rng: np.random.Generator,
                    max_tries: int = 1000) -> TransitionMatrix:
    """Draw a four-state matrix with error entries uniform inside ``band``.

    The transmission row draws its S, D and I entries from the
    transmission-to-error range, the error rows from the error-to-error range;
    the T column closes each row to one.
    """
    for _ in range(max_tries):
        rows = np.empty((4, 4))
        for r in range(4):
            lo, hi = band.trans_to_error if r == 0 else band.error_to_error
            errs = rng.uniform(lo, hi, size=3)
            rows[r, 1:] = errs
            rows[r, 0] = 1.0 - errs.sum()
        if np.all(rows[:, 0] >= 0):
            return TransitionMatrix(STATES4, rows)
    raise InvalidMatrixError("band ranges leave no room for the transmission entry")


def generate_matrix_for_entropy(target: float, tol: float = 0.001,
                                band: EntropyBand | None = None,
                                rng: np.random.Generator | None = None,
                                max_attempts: int = 100_000):
    """Rejection-sample a matrix whose three-state entropy is within ``tol``.

    Returns ``(a4, a3, entropy)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if band is None:
        band = band_for_entropy(target)
    if rng is None:
        rng = np.random.default_rng()
    best = None
    for _ in range(max_attempts):
        a4 = generate_matrix(band, rng)
        a3 = reduce_to_three_state(a4)
        h = average_entropy(a3)
        if best is None or abs(h - target) < abs(best[2] - target):
            best = (a4, a3, h)
        if abs(h - target) <= tol:
            return a4, a3, h
    raise MatrixNotFoundError(
        f"no matrix within {tol} of entropy {target} after {max_attempts} attempts "
        f"(closest {best[2]:.5f})", best=best)


def capped_row(row: Sequence[float], drop: int) -> np.ndarray:
    """Zero entry ``drop`` of ``row`` and renormalise the rest."""
    out = np.array(row, dtype=float)
    out[drop] = 0.0
    mass = out.sum()
    if mass <= 0:
        raise DegenerateRowError("row has no mass left after capping")
    return out / mass


def cap_insertion_row(a3: TransitionMatrix) -> np.ndarray:
    """Insertion row with the I->I entry removed, used once I_m inserts occurred."""
    if a3.states != STATES3:
        raise InvalidMatrixError("cap_insertion_row needs a three-state matrix")
    i = a3.index("I")
    return capped_row(a3.entries[i], i)

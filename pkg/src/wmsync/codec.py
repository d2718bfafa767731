"""Sparse 4-to-5 codebook, watermark generation and XOR combining."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SYMBOL_BITS = 4
CODEWORD_BITS = 5


def as_bits(x) -> np.ndarray:
    """Coerce a '0'/'1' string or integer sequence to a uint8 bit array."""
    if isinstance(x, str):
        if x.strip("01"):
            raise ValueError("bit strings may only contain '0' and '1'")
        return np.frombuffer(x.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError("bit sequences must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("bit sequences may only contain 0 and 1")
    return arr.astype(np.uint8)


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits))


@dataclass(frozen=True)
class Codebook:
    codewords: np.ndarray = field(repr=False)   # (16, 5) uint8, row v encodes symbol v
    symbol_bits: int = SYMBOL_BITS

    @property
    def density(self) -> float:
        return float(self.codewords.mean())

    @property
    def codeword_bits(self) -> int:
        return self.codewords.shape[1]


def build_codebook() -> Codebook:
    """The 16 lowest-weight 5-bit words ordered by (weight, value)."""
    words = sorted(range(2 ** CODEWORD_BITS), key=lambda v: (bin(v).count("1"), v))
    words = words[: 2 ** SYMBOL_BITS]
    shifts = np.arange(CODEWORD_BITS - 1, -1, -1)
    cw = ((np.array(words)[:, None] >> shifts) & 1).astype(np.uint8)
    cw.setflags(write=False)
    return Codebook(cw)


_DEFAULT = None


def default_codebook() -> Codebook:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = build_codebook()
    return _DEFAULT


def sparsify(d, cb: Codebook | None = None) -> np.ndarray:
    cb = cb or default_codebook()
    d = as_bits(d)
    if d.size % cb.symbol_bits:
        raise ValueError(f"message length {d.size} is not a multiple of {cb.symbol_bits}")
    groups = d.reshape(-1, cb.symbol_bits).astype(np.int64)
    weights = 1 << np.arange(cb.symbol_bits - 1, -1, -1)
    symbols = groups @ weights
    return cb.codewords[symbols].reshape(-1).astype(np.uint8)


def desparsify(s_hat, cb: Codebook | None = None) -> np.ndarray:
    """Nearest-codeword decoding; ties go to the lowest symbol value."""
    cb = cb or default_codebook()
    s_hat = as_bits(s_hat)
    n = cb.codeword_bits
    if s_hat.size % n:
        raise ValueError(f"sparse length {s_hat.size} is not a multiple of {n}")
    blocks = s_hat.reshape(-1, n)
    dist = (blocks[:, None, :] != cb.codewords[None, :, :]).sum(axis=2)
    symbols = dist.argmin(axis=1)  # argmin returns the first minimum
    shifts = np.arange(cb.symbol_bits - 1, -1, -1)
    return ((symbols[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


@dataclass(frozen=True)
class Watermark:
    bits: np.ndarray = field(repr=False)
    seed: int

    def __len__(self):
        return self.bits.size

    def __array__(self, dtype=None, copy=None):
        return self.bits if dtype is None else self.bits.astype(dtype)


def generate_watermark(length: int, seed: int) -> Watermark:
    if length <= 0:
        raise ValueError("watermark length must be positive")
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=length, dtype=np.uint8)
    bits.setflags(write=False)
    return Watermark(bits, seed)


def _xor(a, b) -> np.ndarray:
    a = as_bits(np.asarray(a))
    b = as_bits(np.asarray(b))
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return a ^ b


def apply_watermark(s, w) -> np.ndarray:
    return _xor(s, w)


def strip_watermark(r, w) -> np.ndarray:
    return _xor(r, w)

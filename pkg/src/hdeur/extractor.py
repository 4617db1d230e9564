"""Privacy amplification with Toeplitz hashing over GF(2).

The hash of an ``n_in``-bit input is ``T @ x mod 2`` where ``T`` is the
``ell x n_in`` Toeplitz matrix ``T[j, k] = seed[j - k + n_in - 1]``. Toeplitz
matrices with a uniform seed of ``n_in + ell - 1`` bits form a two-universal
family: distinct inputs collide with probability exactly ``2**-ell``.

Serialized bit strings use little-endian bit order within each byte.
"""

from dataclasses import dataclass
import math
from pathlib import Path

import numpy as np
from scipy import signal

from .sampling import make_rng

# below this many multiply-adds the direct convolution is cheaper than FFT
_DIRECT_LIMIT = 1 << 22


@dataclass(frozen=True)
class ToeplitzSeed:
    bits: np.ndarray
    n_in: int
    ell: int

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8).reshape(-1)
        object.__setattr__(self, "bits", bits)
        if self.ell < 1 or self.n_in < self.ell:
            raise ValueError(f"need 1 <= ell <= n_in, got ell={self.ell}, n_in={self.n_in}")
        if bits.size != self.n_in + self.ell - 1:
            raise ValueError(f"seed must hold n_in + ell - 1 = {self.n_in + self.ell - 1} bits")
        if np.any(bits > 1):
            raise ValueError("seed entries must be bits")

    @classmethod
    def random(cls, n_in, ell, rng=None):
        gen = make_rng(rng)
        return cls(gen.integers(0, 2, size=n_in + ell - 1, dtype=np.uint8), n_in, ell)

    def matrix(self):
        """Dense ``ell x n_in`` Toeplitz matrix (small sizes only)."""
        j = np.arange(self.ell)[:, None]
        k = np.arange(self.n_in)[None, :]
        return self.bits[j - k + self.n_in - 1]


def _as_bits(x):
    x = np.asarray(x).reshape(-1)
    if x.size and (x.min() < 0 or x.max() > 1):
        raise ValueError("input must be a bit vector")
    return x.astype(np.uint8)


def toeplitz_hash(bits, seed):
    """Hash ``bits`` to ``seed.ell`` bits with the Toeplitz matrix defined by ``seed``."""
    x = _as_bits(bits)
    if x.size != seed.n_in:
        raise ValueError(f"input has {x.size} bits, seed expects {seed.n_in}")
    # output_j = sum_k seed[j - k + n_in - 1] x_k = (seed * x)[j + n_in - 1]
    a = seed.bits.astype(np.int64)
    b = x.astype(np.int64)
    lo, hi = seed.n_in - 1, seed.n_in - 1 + seed.ell
    if a.size * b.size <= _DIRECT_LIMIT:
        conv = np.convolve(a, b)[lo:hi]
    else:
        conv = np.rint(signal.fftconvolve(a.astype(float), b.astype(float))[lo:hi]).astype(np.int64)
    return (conv & 1).astype(np.uint8)


def pa_distance_bound(h_min, ell, epsilon=0.0):
    """Distance from ideal after hashing to ``ell`` bits: ``min(1, 2^(-(h_min - ell)/2) + 2 eps)``."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must lie in [0, 1)")
    exponent = -(h_min - ell) / 2.0
    if exponent > 1.0:
        return 1.0
    return min(1.0, 2.0**exponent + 2.0 * epsilon)


def symbol_width(d):
    return max(1, math.ceil(math.log2(d)))


def encode_symbols(raw, d):
    """Fixed-width big-endian bit encoding, ``ceil(log2 d)`` bits per symbol."""
    raw = np.asarray(raw, dtype=np.int64).reshape(-1)
    if raw.size and (raw.min() < 0 or raw.max() >= d):
        raise ValueError(f"symbols must lie in [0, {d - 1}]")
    width = symbol_width(d)
    shifts = np.arange(width - 1, -1, -1)
    return ((raw[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def extract(raw, ell, rng=None, d=2):
    """Hash the d-ary string ``raw`` down to ``ell`` bits with a freshly drawn Toeplitz seed.

    Returns ``(output_bits, seed)``; the seed is ``None`` when ``ell == 0``.
    """
    raw = np.asarray(raw).reshape(-1)
    if ell < 0:
        raise ValueError("ell must be non-negative")
    if ell > raw.size * math.log2(d) + 1e-9:
        raise ValueError(f"cannot extract {ell} bits from {raw.size} symbols of dimension {d}")
    if ell == 0:
        return np.zeros(0, dtype=np.uint8), None
    bits = encode_symbols(raw, d)
    seed = ToeplitzSeed.random(bits.size, int(ell), rng)
    return toeplitz_hash(bits, seed), seed


def pack_bits(bits):
    return np.packbits(_as_bits(bits), bitorder="little").tobytes()


def unpack_bits(data, count):
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=count, bitorder="little")


def write_output(path, bits, seed):
    """Write ``bits`` as raw bytes to ``path`` and the seed as hex to ``path`` + ``.seed.hex``."""
    path = Path(path)
    path.write_bytes(pack_bits(bits))
    seed_path = path.with_name(path.name + ".seed.hex")
    if seed is None:
        seed_path.write_text("\n")
    else:
        seed_path.write_text(pack_bits(seed.bits).hex() + "\n")
    return path, seed_path


def read_output(path, n_bits, n_in=None, ell=None):
    """Inverse of :func:`write_output`; returns ``(bits, seed_or_None)``."""
    path = Path(path)
    bits = unpack_bits(path.read_bytes(), n_bits)
    text = path.with_name(path.name + ".seed.hex").read_text().strip()
    if not text or n_in is None:
        return bits, None
    seed_bits = unpack_bits(bytes.fromhex(text), n_in + ell - 1)
    return bits, ToeplitzSeed(seed_bits, n_in, ell)

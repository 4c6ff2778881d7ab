"""Bit sequences, byte ingestion and s-bit block segmentation."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAX_BLOCK_LENGTH = 32
BIT_ORDERS = ("msb", "lsb")


class ParameterError(ValueError):
    """Raised for out-of-range parameters."""


@dataclass(frozen=True)
class BitSequence:
    """An immutable sample x_1..x_n of binary symbols (uint8 array of 0/1)."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ParameterError("bits must be one-dimensional")
        if arr.size and arr.max() > 1:
            raise ParameterError("bits must be 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def length_bits(self) -> int:
        return int(self.bits.size)

    def __len__(self):
        return self.length_bits

    def to_bytes(self, order: str = "msb") -> bytes:
        """Pack into bytes; a trailing partial byte is zero padded."""
        _check_order(order)
        return np.packbits(self.bits, bitorder="big" if order == "msb" else "little").tobytes()


@dataclass(frozen=True)
class BlockStream:
    """Ordinals of consecutive non-overlapping s-bit words."""

    block_length_s: int
    ordinals: np.ndarray

    @property
    def word_count_m(self) -> int:
        return int(self.ordinals.size)

    @property
    def alphabet_size(self) -> int:
        return 1 << self.block_length_s


def _check_order(order):
    if order not in BIT_ORDERS:
        raise ParameterError(f"bit order must be one of {BIT_ORDERS}, got {order!r}")


def from_bytes(data: bytes, order: str = "msb") -> BitSequence:
    """Expand bytes into bits, 8 per byte, ``msb`` (default) or ``lsb`` first."""
    _check_order(order)
    raw = np.frombuffer(bytes(data), dtype=np.uint8)
    return BitSequence(np.unpackbits(raw, bitorder="big" if order == "msb" else "little"))


def read_file(path, order: str = "msb") -> BitSequence:
    return from_bytes(Path(path).read_bytes(), order)


def to_blocks(seq: BitSequence, s: int) -> BlockStream:
    """Split into floor(n/s) words read msb-first; leftover bits are dropped."""
    if not 1 <= s <= MAX_BLOCK_LENGTH:
        raise ParameterError(f"block length s must be in [1, {MAX_BLOCK_LENGTH}], got {s}")
    m = seq.length_bits // s
    words = seq.bits[: m * s].reshape(m, s).astype(np.int64)
    weights = np.left_shift(np.int64(1), np.arange(s - 1, -1, -1, dtype=np.int64))
    return BlockStream(s, words @ weights if m else np.zeros(0, dtype=np.int64))


def from_blocks(blocks: BlockStream) -> BitSequence:
    """Inverse of :func:`to_blocks` for the m*s retained bits."""
    s = blocks.block_length_s
    shifts = np.arange(s - 1, -1, -1, dtype=np.int64)
    bits = (blocks.ordinals[:, None] >> shifts) & 1
    return BitSequence(bits.reshape(-1).astype(np.uint8))

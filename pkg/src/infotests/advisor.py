"""Block-length advice from the birthday bound.

With ``m = floor(n/s)`` words thrown into ``S = 2^s`` cells and
``m = c sqrt(S)``, about ``c^2 / 2`` cells receive two or more words. Tests
over s-bit words need such repeats, which ties the block length to the
sample size through ``n ~ s 2^(s/2)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .bitstream import MAX_BLOCK_LENGTH, ParameterError

DEFAULT_TARGET_C = 5.0


@dataclass(frozen=True)
class BlockAdvice:
    suggested_s: int
    expected_collisions: float
    pellets_m: int
    cells_S: int
    load_c: float

    def to_dict(self):
        return asdict(self)


def _feasible(n_bits, s, target_c):
    return n_bits // s >= target_c * 2.0 ** (s / 2)


def suggest_block_length(n_bits: int, target_c: float = DEFAULT_TARGET_C) -> BlockAdvice:
    """Largest s <= 32 with ``floor(n/s) >= c 2^(s/2)``."""
    if n_bits < 16:
        raise ParameterError("need at least 16 bits")
    if target_c <= 0:
        raise ParameterError("target_c must be positive")
    best = None
    for s in range(1, MAX_BLOCK_LENGTH + 1):
        if _feasible(n_bits, s, target_c):
            best = s
        else:
            # floor(n/s) / 2^(s/2) only shrinks from here on
            break
    if best is None:
        raise ParameterError(f"no block length satisfies c={target_c} for n={n_bits}")
    m = n_bits // best
    load = m / 2.0 ** (best / 2)
    return BlockAdvice(best, expected_repeats(n_bits, best), m, 1 << best, load)


def min_bits_for_block_length(s: int, target_c: float = DEFAULT_TARGET_C) -> int:
    """Smallest n for which ``floor(n/s) >= c 2^(s/2)`` holds."""
    if not 1 <= s <= MAX_BLOCK_LENGTH:
        raise ParameterError(f"s must be in [1, {MAX_BLOCK_LENGTH}]")
    return s * math.ceil(target_c * 2.0 ** (s / 2))


def expected_repeats(n_bits: int, s: int) -> float:
    """Asymptotic mean number of words seen at least twice, ``c^2 / 2``."""
    if s < 1:
        raise ParameterError("s must be >= 1")
    m = n_bits // s
    c = m / 2.0 ** (s / 2)
    return c * c / 2.0

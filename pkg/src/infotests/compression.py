"""Compression-gate tests.

A word ``u`` of ``n`` letters over an alphabet ``A`` is declared non-random
when some lossless code maps it to a short codeword:

* ``gamma``: reject iff ``|code(u)| <= n log|A| - log(1/alpha) - 1``; any
  injective code keeps the Type I error at or below alpha.
* ``gamma_hat``: for uniquely decodable (Kraft) codes the threshold moves up
  by exactly one bit.
* ``upsilon``: randomised version that needs the full codelength histogram
  and hits alpha exactly.

A Krichevsky-Trofimov context model provides the built-in universal code.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln

from ._jit import USE_NUMBA, njit
from .bitstream import BitSequence, ParameterError

MAX_KT_ORDER = 8
DEFAULT_ALPHA_EXPONENT = 7


@dataclass(frozen=True)
class GateParams:
    n: int
    alphabet_size: int
    alpha: float

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if self.alphabet_size < 2:
            raise ParameterError("alphabet_size must be >= 2")
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterError("alpha must lie in (0, 1]")

    @property
    def raw_bits(self) -> float:
        return self.n * math.log2(self.alphabet_size)


@dataclass
class GateOutcome:
    decision: str
    observed_length_bits: float
    critical_value_bits: float
    randomized: bool = False
    acceptance_probability: float | None = None
    parameters: dict = field(default_factory=dict)

    @property
    def rejected(self) -> bool:
        return self.decision == "reject"

    def to_dict(self):
        return asdict(self)


def gamma_critical(params: GateParams) -> float:
    return params.raw_bits - math.log2(1.0 / params.alpha) - 1.0


def gamma_hat_critical(params: GateParams) -> float:
    return params.raw_bits - math.log2(1.0 / params.alpha)


def _gate(observed, critical, params, test):
    if observed < 0:
        raise ParameterError("observed length must be non-negative")
    return GateOutcome(
        decision="reject" if observed <= critical else "accept",
        observed_length_bits=float(observed),
        critical_value_bits=critical,
        parameters={"test": test, **asdict(params)},
    )


def gamma_test(observed_len_bits, params: GateParams) -> GateOutcome:
    """Threshold test valid for any injective code."""
    return _gate(observed_len_bits, gamma_critical(params), params, "gamma")


def gamma_hat_test(observed_len_bits, params: GateParams) -> GateOutcome:
    """Threshold test for uniquely decodable codes (one bit more lenient)."""
    return _gate(observed_len_bits, gamma_hat_critical(params), params, "gamma_hat")


# ----------------------------------------------------------------- upsilon

@dataclass(frozen=True)
class CodeLengthLedger:
    """``histogram[j]`` = number of n-letter words whose codeword has length j."""

    histogram: tuple

    @classmethod
    def from_lengths(cls, lengths):
        lengths = np.asarray(lengths, dtype=np.int64)
        if lengths.size and lengths.min() < 0:
            raise ParameterError("codeword lengths must be non-negative")
        return cls(tuple(int(c) for c in np.bincount(lengths)))

    @property
    def total(self) -> int:
        return sum(self.histogram)


def upsilon_threshold(ledger: CodeLengthLedger, params: GateParams):
    """Return ``(g, accept_prob)``.

    ``g`` is the largest index with ``sum_{j<=g} |A_j| <= alpha |A|^n`` (``-1``
    when even ``|A_0|`` exceeds the budget); words of length ``g+1`` are
    accepted with probability ``(sum_{j<=g+1} |A_j| - alpha |A|^n) / |A_{g+1}|``.
    """
    words = params.alphabet_size ** params.n
    if ledger.total != words:
        raise ParameterError(f"ledger covers {ledger.total} words, expected {words}")
    budget = params.alpha * words
    hist = ledger.histogram
    cum = 0
    g = -1
    for j, c in enumerate(hist):
        if cum + c <= budget:
            cum += c
            g = j
        else:
            break
    if g + 1 >= len(hist):
        # alpha = 1: every word is rejected
        return g, 0.0
    accept = (cum + hist[g + 1] - budget) / hist[g + 1]
    return g, min(max(accept, 0.0), 1.0)


def upsilon_test(observed_len: int, ledger: CodeLengthLedger, params: GateParams, coin: float) -> GateOutcome:
    """Randomised gate; ``coin`` is a uniform draw in [0, 1)."""
    g, accept = upsilon_threshold(ledger, params)
    if observed_len <= g:
        decision = "reject"
    elif observed_len > g + 1:
        decision = "accept"
    else:
        decision = "accept" if coin < accept else "reject"
    return GateOutcome(
        decision=decision,
        observed_length_bits=float(observed_len),
        critical_value_bits=float(g),
        randomized=True,
        acceptance_probability=accept,
        parameters={"test": "upsilon", "g": g, **asdict(params)},
    )


def upsilon_type1_error(ledger: CodeLengthLedger, params: GateParams) -> float:
    """Exact rejection probability when every word is equally likely."""
    g, accept = upsilon_threshold(ledger, params)
    hist = ledger.histogram
    below = sum(hist[: g + 1])
    edge = hist[g + 1] if g + 1 < len(hist) else 0
    return (below + edge * (1.0 - accept)) / ledger.total


# ---------------------------------------------------------- KT universal code

@njit
def _kt_length_loop(bits, order):
    mask = (1 << order) - 1
    counts = np.zeros((1 << order, 2), dtype=np.float64)
    ctx = 0
    total = 0.0
    for i in range(bits.size):
        b = bits[i]
        c = counts[ctx, b]
        total -= np.log2((c + 0.5) / (counts[ctx, 0] + counts[ctx, 1] + 1.0))
        counts[ctx, b] = c + 1.0
        ctx = ((ctx << 1) | b) & mask
    return total


def _kt_length_counts(bits, order):
    # KT probability depends only on per-context counts:
    # Gamma(a+1/2) Gamma(b+1/2) / (pi Gamma(a+b+1))
    n = bits.size
    bits = bits.astype(np.int64)
    if order:
        padded = np.concatenate([np.zeros(order, dtype=np.int64), bits])
        ctx = np.zeros(n, dtype=np.int64)
        for j in range(order):
            ctx = (ctx << 1) | padded[j:j + n]
    else:
        ctx = np.zeros(n, dtype=np.int64)
    table = np.zeros((1 << order, 2))
    np.add.at(table, (ctx, bits), 1.0)
    a, b = table[:, 0], table[:, 1]
    log_p = gammaln(a + 0.5) + gammaln(b + 0.5) - math.log(math.pi) - gammaln(a + b + 1.0)
    return float(-log_p.sum() / math.log(2.0))


def kt_code_length(seq, context_order: int = 0) -> float:
    """Ideal KT codelength in bits; the first symbols see an all-zero history."""
    if not 0 <= context_order <= MAX_KT_ORDER:
        raise ParameterError(f"context order must be in [0, {MAX_KT_ORDER}]")
    bits = seq.bits if isinstance(seq, BitSequence) else np.asarray(seq, dtype=np.uint8)
    if bits.size == 0:
        return 0.0
    if USE_NUMBA:
        return float(_kt_length_loop(bits, context_order))
    return _kt_length_counts(bits, context_order)


def integer_length(ideal_bits: float) -> int:
    """Codeword length in whole bits; exact powers of two are not bumped."""
    r = round(ideal_bits)
    return int(r) if abs(ideal_bits - r) < 1e-9 else math.ceil(ideal_bits)


def kt_test(seq: BitSequence, alpha: float = 0.01, context_order: int = 0, gate: str = "gamma_hat") -> GateOutcome:
    """Compress the whole sample with the KT code and apply a threshold gate."""
    params = GateParams(seq.length_bits, 2, alpha)
    ideal = kt_code_length(seq, context_order)
    if gate == "gamma":
        out = gamma_test(integer_length(ideal), params)
    elif gate == "gamma_hat":
        out = gamma_hat_test(ideal, params)
    else:
        raise ParameterError("gate must be 'gamma' or 'gamma_hat'")
    out.parameters["context_order"] = context_order
    return out


# ------------------------------------------------------- external compressor

def external_compressor_test(
    file_bytes: int, compressed_size_bytes: int, alpha_exponent: int = DEFAULT_ALPHA_EXPONENT
) -> GateOutcome:
    """Byte-level gate for a compressor measured by the caller.

    With ``alpha = 2^-alpha_exponent`` the bit threshold ``8n - e - 1`` becomes
    ``compressed <= n - ceil((e + 1) / 8)`` bytes; the default rejects any
    file that shrinks by at least one byte.
    """
    if compressed_size_bytes <= 0:
        raise ParameterError("compressed size must be positive")
    if file_bytes < 1:
        raise ParameterError("file must hold at least one byte")
    params = GateParams(file_bytes, 256, 2.0 ** -alpha_exponent)
    limit = file_bytes - math.ceil((alpha_exponent + 1) / 8)
    out = GateOutcome(
        decision="reject" if compressed_size_bytes <= limit else "accept",
        observed_length_bits=8.0 * compressed_size_bytes,
        critical_value_bits=gamma_critical(params),
        parameters={"test": "compress", "alpha_exponent": alpha_exponent, **asdict(params)},
    )
    return out

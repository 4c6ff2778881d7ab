"""Reference and adversarial bit sources.

* RANDU, ``X_{n+1} = 65539 X_n mod 2^31`` with the top eight bits of each
  output kept.
* Fair-coin Bernoulli bits.
* The two-faced Markov families ``T(k, pi)`` / ``Tbar(k, pi)``, together with
  an exact oracle for their stationary word distributions and entropies.

Every random draw comes from NumPy's PCG64 bit generator seeded through
``numpy.random.SeedSequence``; results are reproducible bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._jit import USE_NUMBA, njit
from .bitstream import BitSequence, ParameterError

RANDU_A = 65539
RANDU_M = 1 << 31
RANDU_SEED = 1
RANDU_SHIFT = 23

KINDS = ("T", "Tbar")

DIRECT_SOLVE_MAX_K = 12
MAX_ORACLE_K = 20
MAX_ORDER_D = 22
STATIONARY_TOL = 1e-12


class ResourceError(RuntimeError):
    """Requested exact computation is too large."""


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator from an int seed or a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


# --------------------------------------------------------------------- RANDU

def randu_step(x: int) -> int:
    return (RANDU_A * x) % RANDU_M


def randu_extract8(x: int) -> int:
    if not 0 <= x < RANDU_M:
        raise ParameterError(f"RANDU state out of range: {x}")
    return x >> RANDU_SHIFT


def randu_jump(x: int, steps: int) -> int:
    """State after ``steps`` applications of :func:`randu_step`."""
    return (pow(RANDU_A, steps, RANDU_M) * x) % RANDU_M


@njit
def _randu_outputs_loop(x0, n):
    out = np.empty(n, dtype=np.int64)
    x = x0
    for i in range(n):
        x = (65539 * x) % 2147483648
        out[i] = x
    return out


def _randu_outputs_numpy(x0, n):
    # powers A^1..A^n mod M by doubling; every product stays below 2^62
    pw = np.empty(n, dtype=np.int64)
    if n == 0:
        return pw
    pw[0] = RANDU_A
    filled = 1
    while filled < n:
        take = min(filled, n - filled)
        pw[filled:filled + take] = (pw[:take] * pw[filled - 1]) % RANDU_M
        filled += take
    return (pw * x0) % RANDU_M


def randu_outputs(n: int, x0: int = RANDU_SEED) -> np.ndarray:
    """``X_1..X_n`` starting from state ``x0`` (not included)."""
    if USE_NUMBA:
        return _randu_outputs_loop(np.int64(x0), n)
    return _randu_outputs_numpy(int(x0), n)


def randu_bytes(n_bytes: int, x0: int = RANDU_SEED) -> np.ndarray:
    return (randu_outputs(n_bytes, x0) >> RANDU_SHIFT).astype(np.uint8)


def randu_bits(n_bits: int, x0: int = RANDU_SEED) -> BitSequence:
    """Top-8-bit RANDU stream, each byte unpacked msb first, truncated to n_bits."""
    n_bytes = -(-n_bits // 8)
    return BitSequence(np.unpackbits(randu_bytes(n_bytes, x0))[:n_bits])


def bernoulli_bits(n_bits: int, rng: np.random.Generator) -> BitSequence:
    return BitSequence(rng.integers(0, 2, size=n_bits, dtype=np.uint8))


# ------------------------------------------------------- two-faced processes

@dataclass(frozen=True)
class MarkovSpec:
    """Two-faced process ``T(k, pi)`` (kind ``"T"``) or ``Tbar(k, pi)``."""

    memory_k: int
    kind: str
    pi: float

    def __post_init__(self):
        if self.memory_k < 1:
            raise ParameterError("memory_k must be >= 1")
        if self.kind not in KINDS:
            raise ParameterError(f"kind must be one of {KINDS}")
        if not 0.0 < self.pi < 1.0:
            raise ParameterError("pi must lie strictly between 0 and 1")


def _recursive_prob0(kind, pi, context):
    # P(0 | context) straight from the inductive definition: peel the oldest symbol
    if len(context) == 1:
        even = context[0] == 0
        if kind == "T":
            return pi if even else 1.0 - pi
        return 1.0 - pi if even else pi
    head, rest = context[0], context[1:]
    if head == 0:
        return _recursive_prob0(kind, pi, rest)
    return _recursive_prob0("Tbar" if kind == "T" else "T", pi, rest)


def _as_context(context):
    if isinstance(context, str):
        return tuple(int(c) for c in context)
    return tuple(int(c) for c in context)


def two_faced_cond_prob(spec: MarkovSpec, context) -> float:
    """P(next symbol = 0 | previous ``memory_k`` symbols, oldest first)."""
    ctx = _as_context(context)
    if len(ctx) != spec.memory_k:
        raise ParameterError(f"context length {len(ctx)} != memory_k {spec.memory_k}")
    if any(c not in (0, 1) for c in ctx):
        raise ParameterError("context symbols must be 0/1")
    return _recursive_prob0(spec.kind, spec.pi, ctx)


def parity_prob0(spec: MarkovSpec, context) -> float:
    """Closed form of :func:`two_faced_cond_prob`: depends only on the parity of the context."""
    odd = sum(_as_context(context)) & 1
    if spec.kind == "T":
        return 1.0 - spec.pi if odd else spec.pi
    return spec.pi if odd else 1.0 - spec.pi


@njit
def _two_faced_loop(init, flips, k):
    n = init.size + flips.size
    out = np.empty(n, dtype=np.uint8)
    par = 0
    for i in range(init.size):
        out[i] = init[i]
        par ^= init[i]
    for t in range(k, n):
        b = par ^ flips[t - k]
        out[t] = b
        par ^= b ^ out[t - k]
    return out


def _two_faced_numpy(init, flips, k):
    # with prefix xors P_t, x_t xor (x_{t-k}..x_{t-1}) = P_t xor P_{t-k-1}, so each
    # residue class of P mod (k+1) is a running xor of the flip bits
    n = init.size + flips.size
    period = k + 1
    rows = -(-(n + 1) // period)
    grid = np.zeros(rows * period, dtype=np.uint8)
    grid[1:k + 1] = np.bitwise_xor.accumulate(init)
    grid[k + 1:n + 1] = flips
    prefix = np.bitwise_xor.accumulate(grid.reshape(rows, period), axis=0).reshape(-1)[:n + 1]
    return prefix[1:] ^ prefix[:-1]


def two_faced_sample(spec: MarkovSpec, n: int, rng: np.random.Generator) -> BitSequence:
    """Draw ``n`` symbols; the first ``k`` come from the (uniform) stationary law."""
    k = spec.memory_k
    head = min(k, n)
    init = rng.integers(0, 2, size=head, dtype=np.uint8)
    u = rng.random(max(n - k, 0))
    # with an even context, T keeps the parity bit with probability pi
    stay = spec.pi if spec.kind == "T" else 1.0 - spec.pi
    flips = (u >= stay).astype(np.uint8)
    if n <= k:
        return BitSequence(init)
    if USE_NUMBA:
        return BitSequence(_two_faced_loop(init, flips, k))
    return BitSequence(_two_faced_numpy(init, flips, k))


# ------------------------------------------------------------- exact oracle

@dataclass(frozen=True)
class Distribution:
    """Probability of every word in {0,1}^d, indexed by its msb-first ordinal."""

    order_d: int
    mass: np.ndarray

    def prob(self, word) -> float:
        idx = 0
        for c in _as_context(word):
            idx = (idx << 1) | c
        return float(self.mass[idx])

    def as_dict(self):
        return {format(i, f"0{self.order_d}b"): float(p) for i, p in enumerate(self.mass)}


def _transition_prob0(spec):
    k = spec.memory_k
    states = np.arange(1 << k)
    odd = np.zeros(1 << k, dtype=np.int64)
    for j in range(k):
        odd ^= (states >> j) & 1
    stay = spec.pi if spec.kind == "T" else 1.0 - spec.pi
    return np.where(odd == 1, 1.0 - stay, stay)


def _transition_matrix(spec, p0):
    k = spec.memory_k
    n_states = 1 << k
    mask = n_states - 1
    src = np.arange(n_states)
    nxt0 = (src << 1) & mask
    rows = np.concatenate([src, src])
    cols = np.concatenate([nxt0, nxt0 | 1])
    vals = np.concatenate([p0, 1.0 - p0])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_states, n_states))


@lru_cache(maxsize=64)
def _stationary_k(spec: MarkovSpec) -> np.ndarray:
    k = spec.memory_k
    if k > MAX_ORACLE_K:
        raise ResourceError(f"memory_k={k} exceeds oracle limit {MAX_ORACLE_K}")
    p0 = _transition_prob0(spec)
    P = _transition_matrix(spec, p0)
    n_states = 1 << k
    if k <= DIRECT_SOLVE_MAX_K:
        # pi (P - I) = 0 with the last equation replaced by sum(pi) = 1
        A = (P.T - sp.identity(n_states, format="csr")).tolil()
        A[n_states - 1, :] = np.ones(n_states)
        b = np.zeros(n_states)
        b[-1] = 1.0
        dist = spla.spsolve(A.tocsc(), b)
    else:
        dist = np.full(n_states, 1.0 / n_states)
        PT = P.T.tocsr()
        for _ in range(100_000):
            new = PT @ dist
            if np.abs(new - dist).max() < STATIONARY_TOL:
                dist = new
                break
            dist = new
    dist = np.clip(dist, 0.0, None)
    return dist / dist.sum()


def stationary_distribution(spec: MarkovSpec, d: int) -> Distribution:
    """Stationary law of d consecutive symbols.

    ``d`` may exceed ``memory_k`` (the law is extended with the chain rule) up to
    ``max(memory_k + 8, 22)``; beyond that the table is refused.
    """
    k = spec.memory_k
    if d < 1:
        raise ParameterError("d must be >= 1")
    if d > max(k + 8, MAX_ORDER_D):
        raise ResourceError(f"d={d} exceeds the word-table limit {max(k + 8, MAX_ORDER_D)}")
    base = _stationary_k(spec)
    if d <= k:
        mass = base.reshape(1 << d, 1 << (k - d)).sum(axis=1)
        return Distribution(d, mass)
    p0 = _transition_prob0(spec)
    mask = (1 << k) - 1
    mass = base
    for length in range(k + 1, d + 1):
        words = np.arange(1 << (length - 1))
        ctx_p0 = p0[words & mask]
        ext = np.empty(1 << length)
        ext[0::2] = mass * ctx_p0
        ext[1::2] = mass * (1.0 - ctx_p0)
        mass = ext
    return Distribution(d, mass)


def order_s_entropy(spec: MarkovSpec, s: int) -> float:
    """Per-letter block entropy ``H(x_1..x_s) / s`` in bits."""
    if s < 1:
        raise ParameterError("s must be >= 1")
    mass = stationary_distribution(spec, s).mass
    nz = mass[mass > 0]
    return float(-(nz * np.log2(nz)).sum() / s)


def conditional_entropy(spec: MarkovSpec, s: int) -> float:
    """``H(x_s | x_1..x_{s-1})`` in bits; equals the block entropy increment."""
    if s < 1:
        raise ParameterError("s must be >= 1")
    prev = 0.0 if s == 1 else order_s_entropy(spec, s - 1) * (s - 1)
    return order_s_entropy(spec, s) * s - prev


def limit_entropy(pi: float) -> float:
    """Entropy rate of ``T(k, pi)``: the binary entropy of ``pi``."""
    if not 0.0 < pi < 1.0:
        raise ParameterError("pi must lie strictly between 0 and 1")
    return -(pi * math.log2(pi) + (1.0 - pi) * math.log2(1.0 - pi))

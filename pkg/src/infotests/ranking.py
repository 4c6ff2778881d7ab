"""Book-stack and order tests over s-bit words.

Both tests keep the alphabet in a self-organising list and tally which
subset of list positions each incoming word occupies *before* the list is
updated; the tallies are scored with a chi-square goodness-of-fit test.

The fast kernels never materialise the list. Each letter that has been seen
carries a sort key (book stack: last access time, newest first; order test:
``(count, time it reached that count)``, higher count first, earlier arrival
first) and a Fenwick tree over all keys that occur in the run counts how many
live keys precede it. Unseen letters always sit below every seen letter in
their initial (ordinal) order, so their position is ``#seen + ordinal - #seen
letters with a smaller ordinal + 1``, answered by a second Fenwick tree over
the distinct ordinals of the stream. Memory is O(m) regardless of 2^s.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from ._jit import njit
from .bitstream import BitSequence, BlockStream, ParameterError, to_blocks

BOOK_STACK = "bookstack"
ORDER = "order"
DISCIPLINES = (BOOK_STACK, ORDER)
DEFAULT_A1_SCALE = 5.0


@dataclass(frozen=True)
class PartitionSpec:
    """Cut points k_1 < ... < k_r = S splitting positions 1..S into r subsets."""

    alphabet_size: int
    boundaries: tuple

    def __post_init__(self):
        b = tuple(int(x) for x in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if len(b) < 2:
            raise ParameterError("a partition needs at least two subsets")
        if any(x >= y for x, y in zip(b, b[1:])) or b[0] < 1:
            raise ParameterError("boundaries must be strictly increasing and positive")
        if b[-1] != self.alphabet_size:
            raise ParameterError("last boundary must equal the alphabet size")

    @property
    def r(self) -> int:
        return len(self.boundaries)

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(np.concatenate([[0], self.boundaries])).astype(np.int64)

    @classmethod
    def from_cuts(cls, alphabet_size, cuts):
        cuts = [int(c) for c in cuts]
        if not cuts or cuts[-1] != alphabet_size:
            cuts = cuts + [alphabet_size]
        return cls(alphabet_size, tuple(cuts))


def default_partition(alphabet_size: int, a1_size: int | None = None) -> PartitionSpec:
    """Two subsets, the first holding the top ``ceil(5 sqrt(S))`` positions."""
    if a1_size is None:
        a1_size = math.ceil(DEFAULT_A1_SCALE * math.sqrt(alphabet_size))
    if not 1 <= a1_size < alphabet_size:
        raise ParameterError(
            f"|A1|={a1_size} leaves no second subset for S={alphabet_size}; pass explicit cuts"
        )
    return PartitionSpec(alphabet_size, (a1_size, alphabet_size))


@dataclass(frozen=True)
class SubsetCounts:
    counts: np.ndarray

    @property
    def total_n(self) -> int:
        return int(self.counts.sum())


@dataclass
class TestOutcome:
    test: str
    statistic_x2: float
    degrees_of_freedom: int
    p_value: float
    alpha: float
    decision: str
    parameters: dict = field(default_factory=dict)

    __test__ = False  # keep pytest from collecting this

    @property
    def rejected(self) -> bool:
        return self.decision == "reject"

    def to_dict(self):
        return asdict(self)


# ------------------------------------------------------------ fast kernels

@njit
def _fenwick_add(tree, i, delta):
    i += 1
    while i < tree.size:
        tree[i] += delta
        i += i & -i


@njit
def _fenwick_prefix(tree, i):
    # sum of entries [0, i)
    total = 0
    while i > 0:
        total += tree[i]
        i -= i & -i
    return total


@njit
def _ranked_positions(ordinals, letter_id, distinct_ordinals, key_rank):
    """1-based list positions of each word before its update.

    ``key_rank[t]`` is the rank, among all keys created in the run, of the key
    the word receives at step t; smaller rank means closer to the top.
    """
    m = ordinals.size
    n_letters = distinct_ordinals.size
    live_key = np.full(n_letters, -1, dtype=np.int64)
    key_tree = np.zeros(m + 1, dtype=np.int64)
    seen_tree = np.zeros(n_letters + 1, dtype=np.int64)
    seen = 0
    out = np.empty(m, dtype=np.int64)
    for t in range(m):
        a = letter_id[t]
        kr = live_key[a]
        if kr >= 0:
            out[t] = 1 + _fenwick_prefix(key_tree, kr)
            _fenwick_add(key_tree, kr, -1)
        else:
            smaller_seen = _fenwick_prefix(seen_tree, a)
            out[t] = 1 + seen + ordinals[t] - smaller_seen
            _fenwick_add(seen_tree, a, 1)
            seen += 1
        _fenwick_add(key_tree, key_rank[t], 1)
        live_key[a] = key_rank[t]
    return out


def _letter_ids(ordinals):
    distinct, letter_id = np.unique(ordinals, return_inverse=True)
    return distinct.astype(np.int64), letter_id.astype(np.int64).reshape(-1)


def _occurrence_index(letter_id):
    # how many times the same letter appeared before step t
    order = np.argsort(letter_id, kind="stable")
    sorted_ids = letter_id[order]
    starts = np.r_[0, np.flatnonzero(np.diff(sorted_ids)) + 1]
    run_start = np.repeat(starts, np.diff(np.r_[starts, sorted_ids.size]))
    occ = np.empty_like(letter_id)
    occ[order] = np.arange(sorted_ids.size) - run_start
    return occ


def book_stack_positions(ordinals) -> np.ndarray:
    ordinals = np.ascontiguousarray(ordinals, dtype=np.int64)
    if ordinals.size == 0:
        return np.zeros(0, dtype=np.int64)
    distinct, letter_id = _letter_ids(ordinals)
    m = ordinals.size
    # newest access on top: key rank of step t is m-1-t
    key_rank = np.arange(m - 1, -1, -1, dtype=np.int64)
    return _ranked_positions(ordinals, letter_id, distinct, key_rank)


def order_test_positions(ordinals) -> np.ndarray:
    ordinals = np.ascontiguousarray(ordinals, dtype=np.int64)
    if ordinals.size == 0:
        return np.zeros(0, dtype=np.int64)
    distinct, letter_id = _letter_ids(ordinals)
    new_count = _occurrence_index(letter_id) + 1
    t = np.arange(ordinals.size, dtype=np.int64)
    # higher count first; inside a count group, earlier arrival first
    sort_order = np.lexsort((t, -new_count))
    key_rank = np.empty_like(t)
    key_rank[sort_order] = t
    return _ranked_positions(ordinals, letter_id, distinct, key_rank)


def _tally(positions, partition):
    subset = np.searchsorted(np.asarray(partition.boundaries), positions, side="left")
    return SubsetCounts(np.bincount(subset, minlength=partition.r).astype(np.int64))


def _ordinals_of(blocks):
    return blocks.ordinals if isinstance(blocks, BlockStream) else np.asarray(blocks, dtype=np.int64)


def _check_alphabet(ordinals, partition):
    if ordinals.size and (ordinals.min() < 0 or ordinals.max() >= partition.alphabet_size):
        raise ParameterError("word ordinal outside the partition's alphabet")


def book_stack_process(blocks, partition: PartitionSpec) -> SubsetCounts:
    """Subset tallies for move-to-front ordering (initial order = identity)."""
    ordinals = _ordinals_of(blocks)
    _check_alphabet(ordinals, partition)
    return _tally(book_stack_positions(ordinals), partition)


def order_test_process(blocks, partition: PartitionSpec) -> SubsetCounts:
    """Subset tallies for count ordering (initial order = identity)."""
    ordinals = _ordinals_of(blocks)
    _check_alphabet(ordinals, partition)
    return _tally(order_test_positions(ordinals), partition)


# --------------------------------------------------------- naive references

def naive_book_stack(ordinals, alphabet_size, initial=None):
    """Explicit list simulation. Returns (positions, orders) with orders[t] the letter order after t updates."""
    stack = list(range(alphabet_size)) if initial is None else list(initial)
    orders = [tuple(stack)]
    positions = []
    for a in ordinals:
        i = stack.index(a)
        positions.append(i + 1)
        stack.insert(0, stack.pop(i))
        orders.append(tuple(stack))
    return positions, orders


def naive_order_test(ordinals, alphabet_size, initial=None):
    """Explicit list simulation of the count ordering, same return shape."""
    order = list(range(alphabet_size)) if initial is None else list(initial)
    count = [0] * alphabet_size
    orders = [tuple(order)]
    positions = []
    for a in ordinals:
        i = order.index(a)
        positions.append(i + 1)
        c = count[a]
        # move to the head of its own count group, then bump the count
        head = 0
        while count[order[head]] > c:
            head += 1
        order.insert(head, order.pop(i))
        count[a] += 1
        orders.append(tuple(order))
    return positions, orders


# ------------------------------------------------------------- chi-square

def chi_square_statistic(counts: SubsetCounts, partition: PartitionSpec) -> float:
    n = counts.total_n
    if n <= 0:
        raise ParameterError("no words were processed")
    expected = n * partition.sizes / partition.alphabet_size
    if np.any(expected <= 0):
        raise ParameterError("partition has a subset with zero expected count")
    obs = np.asarray(counts.counts, dtype=float)
    return float(((obs - expected) ** 2 / expected).sum())


def chi_square_pvalue(x2: float, df: int) -> float:
    """Upper tail P(chi2_df > x2) as the regularized upper incomplete gamma Q(df/2, x2/2)."""
    if df < 1:
        raise ParameterError("df must be >= 1")
    if x2 <= 0:
        return 1.0
    return float(special.gammaincc(df / 2.0, x2 / 2.0))


def run_ranking_test(
    seq: BitSequence,
    discipline: str,
    s: int,
    partition: PartitionSpec | None = None,
    alpha: float = 0.01,
) -> TestOutcome:
    if discipline not in DISCIPLINES:
        raise ParameterError(f"discipline must be one of {DISCIPLINES}")
    if not 0.0 < alpha < 1.0:
        raise ParameterError("alpha must lie in (0, 1)")
    blocks = to_blocks(seq, s)
    if partition is None:
        partition = default_partition(blocks.alphabet_size)
    if partition.alphabet_size != blocks.alphabet_size:
        raise ParameterError("partition alphabet size must be 2^s")
    if blocks.word_count_m == 0:
        raise ParameterError("sample holds no complete block")
    process = book_stack_process if discipline == BOOK_STACK else order_test_process
    counts = process(blocks, partition)
    x2 = chi_square_statistic(counts, partition)
    df = partition.r - 1
    p = chi_square_pvalue(x2, df)
    return TestOutcome(
        test=discipline,
        statistic_x2=x2,
        degrees_of_freedom=df,
        p_value=p,
        alpha=alpha,
        decision="reject" if p < alpha else "accept",
        parameters={
            "s": s,
            "n_bits": seq.length_bits,
            "m_words": blocks.word_count_m,
            "boundaries": list(partition.boundaries),
            "counts": [int(c) for c in counts.counts],
        },
    )

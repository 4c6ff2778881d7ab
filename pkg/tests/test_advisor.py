import numpy as np
import pytest

from infotests.advisor import (
    expected_repeats,
    min_bits_for_block_length,
    suggest_block_length,
)
from infotests.bitstream import ParameterError


def brute_suggest(n, c):
    ok = [s for s in range(1, 33) if n // s >= c * 2 ** (s / 2)]
    return max(ok)


def cells_hit_twice(m, S, trials, rng):
    counts = [np.count_nonzero(np.bincount(rng.integers(0, S, m), minlength=S) >= 2) for _ in range(trials)]
    return float(np.mean(counts))


def test_small_example():
    adv = suggest_block_length(5120, 1)
    assert adv.suggested_s == 16
    assert adv.cells_S == 2**16
    assert adv.pellets_m == 320
    assert adv.load_c == pytest.approx(320 / 256)


@pytest.mark.parametrize("c, s", [(50, 19), (48.8, 20), (2, 28), (5, 25)])
def test_megabit(c, s):
    assert suggest_block_length(10**6, c).suggested_s == s == brute_suggest(10**6, c)


@pytest.mark.parametrize("n", [16, 100, 999, 5120, 10**5, 3 * 10**6])
@pytest.mark.parametrize("c", [0.5, 1, 5])
def test_matches_brute_force(n, c):
    try:
        expected = brute_suggest(n, c)
    except ValueError:
        with pytest.raises(ParameterError):
            suggest_block_length(n, c)
        return
    assert suggest_block_length(n, c).suggested_s == expected


def test_doubling_never_decreases():
    n = 64
    prev = suggest_block_length(n).suggested_s
    while n < 10**8:
        n *= 2
        cur = suggest_block_length(n).suggested_s
        assert cur >= prev
        prev = cur


def test_errors():
    with pytest.raises(ParameterError):
        suggest_block_length(15)
    with pytest.raises(ParameterError):
        suggest_block_length(1000, 0)
    with pytest.raises(ParameterError):
        suggest_block_length(16, 100)


@pytest.mark.parametrize("s, c", [(12, 5), (20, 48.8), (7, 1)])
def test_min_bits_inverse(s, c):
    n = min_bits_for_block_length(s, c)
    assert n // s >= c * 2 ** (s / 2)
    assert (n - 1) // s < c * 2 ** (s / 2)


def test_expected_repeats():
    s = 10
    assert expected_repeats(32 * s, s) == pytest.approx(0.5)
    assert expected_repeats(5, s) == 0
    assert expected_repeats(16 * 4096, 16) == pytest.approx(128)


def test_repeats_monte_carlo(rng):
    assert abs(cells_hit_twice(4096, 2**16, 60, rng) - 128) < 0.10 * 128


@pytest.mark.parametrize("s", [10, 16])
@pytest.mark.parametrize("c", [0.5, 1, 4])
def test_repeats_monte_carlo_grid(s, c, rng):
    S = 2**s
    m = int(round(c * 2 ** (s / 2)))
    trials = 4000 if c < 1 else 1000
    sim = cells_hit_twice(m, S, trials, rng)
    assert abs(sim - c * c / 2) <= 0.15 * c * c / 2

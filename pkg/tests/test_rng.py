import math

import pytest

from mtpipe.rng import GOLDEN, MASK64, SplitMix64, mix64, stream_seed


def reference_splitmix64(seed: int, count: int) -> list[int]:
    # Transcribed independently from the published algorithm.
    out = []
    state = seed & MASK64
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


@pytest.mark.parametrize("seed", [0, 1, 42, 2 ** 64 - 1, 0xDEADBEEF])
def test_matches_reference_sequence(seed):
    rng = SplitMix64(seed)
    assert [rng.next_u64() for _ in range(64)] == reference_splitmix64(seed, 64)


def test_stream_seed_is_nth_output():
    base = SplitMix64(1234)
    outputs = [base.next_u64() for _ in range(8)]
    assert [stream_seed(1234, i) for i in range(8)] == outputs


def test_stream_seeds_distinct():
    seeds = {stream_seed(7, i) for i in range(10_000)}
    assert len(seeds) == 10_000


def test_float_range_and_mean():
    rng = SplitMix64(99)
    values = [rng.next_float() for _ in range(20_000)]
    assert all(0.0 <= v < 1.0 for v in values)
    mean = sum(values) / len(values)
    sigma = 1.0 / math.sqrt(12 * len(values))
    assert abs(mean - 0.5) < 3 * sigma


def test_randbelow_unbiased():
    rng = SplitMix64(3)
    n, trials = 10, 20_000
    counts = [0] * n
    for _ in range(trials):
        counts[rng.randbelow(n)] += 1
    expect = trials / n
    sigma = math.sqrt(trials * (1 / n) * (1 - 1 / n))
    for c in counts:
        assert abs(c - expect) < 3 * sigma


def test_randbelow_rejects_nonpositive():
    with pytest.raises(ValueError):
        SplitMix64(0).randbelow(0)


def test_sample_indices_sorted_distinct():
    rng = SplitMix64(11)
    idx = rng.sample_indices(100, 10)
    assert idx == sorted(set(idx))
    assert all(0 <= i < 100 for i in idx)
    assert rng.sample_indices(5, 5) == [0, 1, 2, 3, 4]
    assert rng.sample_indices(5, 0) == []


def test_sample_indices_bounds():
    with pytest.raises(ValueError):
        SplitMix64(0).sample_indices(3, 4)


def test_mix64_bijective_spot():
    seen = {mix64(x) for x in range(4096)}
    assert len(seen) == 4096
    assert mix64(GOLDEN) == reference_splitmix64(0, 1)[0]

from collections import Counter

import pytest

from structprobe.rng import MASK64, SeedPolicy, Xoshiro256, shuffle, splitmix64


def test_splitmix64_reference_vector():
    state, out = splitmix64(0)
    assert out == 0xE220A8397B1DCDAF
    state, out = splitmix64(state)
    assert out == 0x6E789E6AA1B965F4


def test_xoshiro256_reference_vector():
    rng = Xoshiro256(0)
    rng._s = [1, 2, 3, 4]
    assert [rng.next_u64() for _ in range(4)] == [11520, 0, 1509978240, 1215971899390074240]


def test_random_in_unit_interval():
    rng = Xoshiro256(99)
    draws = [rng.random() for _ in range(10_000)]
    assert all(0.0 <= d < 1.0 for d in draws)
    assert abs(sum(draws) / len(draws) - 0.5) < 0.02


def test_randbelow_unbiased():
    rng = Xoshiro256(5)
    counts = Counter(rng.randbelow(3) for _ in range(30_000))
    assert set(counts) == {0, 1, 2}
    assert all(abs(c - 10_000) < 500 for c in counts.values())
    with pytest.raises(ValueError):
        rng.randbelow(0)


def test_shuffle_is_permutation():
    items = list(range(50))
    shuffle(items, Xoshiro256(3))
    assert sorted(items) == list(range(50))
    assert items != list(range(50))


def test_seed_policy_deterministic_and_distinct():
    policy = SeedPolicy(7)
    assert policy.derive("r1", "benchmark", 0) == 9343611120896014477
    seeds = {
        policy.derive(rec, setting, k)
        for rec in ("r1", "r2")
        for setting in ("a", "b")
        for k in range(5)
    }
    assert len(seeds) == 20
    assert SeedPolicy(8).derive("r1", "benchmark", 0) != policy.derive("r1", "benchmark", 0)
    assert all(0 <= s <= MASK64 for s in seeds)


def test_negative_global_seed_wraps():
    assert SeedPolicy(-1).derive(0, "x", 0) == SeedPolicy(MASK64).derive(0, "x", 0)

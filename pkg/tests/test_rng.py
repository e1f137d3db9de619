import numpy as np
import pytest
from scipy import stats

from glsemigroup.rng import new_stream, normal, philox4x32, poisson, uniform, uniforms

U = np.uint64


# Random123 known-answer vectors for Philox4x32-10
@pytest.mark.parametrize(
    "ctr,key,want",
    [
        ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
        (
            (0xFFFFFFFF,) * 4,
            (0xFFFFFFFF,) * 2,
            (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD),
        ),
        (
            (0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
            (0xA4093822, 0x299F31D0),
            (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1),
        ),
    ],
)
def test_philox_known_answers(ctr, key, want):
    got = philox4x32(*(U(c) for c in ctr), *(U(k) for k in key))
    assert tuple(int(g) for g in got) == want


def test_streams_are_reproducible():
    assert np.array_equal(uniforms(7, 3, 1, 1000), uniforms(7, 3, 1, 1000))


def test_streams_are_distinct():
    base = uniforms(7, 3, 1, 100)
    for other in (uniforms(8, 3, 1, 100), uniforms(7, 4, 1, 100), uniforms(7, 3, 2, 100)):
        assert not np.any(base == other)


def test_prefix_property():
    assert np.array_equal(uniforms(1, 0, 0, 10), uniforms(1, 0, 0, 1000)[:10])


def test_seed_high_word_matters():
    assert not np.array_equal(uniforms(1, 0, 0, 8), uniforms(1 + (1 << 32), 0, 0, 8))


def test_uniform_range_and_law():
    u = uniforms(2024, 0, 0, 200_000)
    assert np.all((u > 0) & (u < 1))
    assert stats.kstest(u, "uniform").pvalue > 1e-3
    # lag-1 correlation of an independent sequence is O(n^-1/2)
    assert abs(np.corrcoef(u[:-1], u[1:])[0, 1]) < 0.01


def test_normal_moments():
    st = new_stream(U(11), U(0), U(0))
    buf = np.zeros(3)
    z = np.array([normal(st, buf) for _ in range(100_000)])
    assert abs(z.mean()) < 4 / np.sqrt(z.size)
    assert abs(z.var() - 1) < 4 * np.sqrt(2 / z.size)
    assert stats.kstest(z, "norm").pvalue > 1e-3


@pytest.mark.parametrize("mean", [0.002, 0.5, 3.0])
def test_poisson_law(mean):
    st = new_stream(U(5), U(1), U(2))
    buf = np.zeros(3)
    n = np.array([poisson(st, buf, mean) for _ in range(50_000)])
    assert abs(n.mean() - mean) < 4 * np.sqrt(mean / n.size)
    for k in range(3):
        p = stats.poisson(mean).pmf(k)
        assert abs(np.mean(n == k) - p) < 4 * np.sqrt(p * (1 - p) / n.size) + 1e-12


def test_uniform_consumes_blocks_in_pairs():
    st = new_stream(U(3), U(0), U(0))
    buf = np.zeros(3)
    first = [uniform(st, buf) for _ in range(4)]
    assert int(st[4]) == 2
    assert first == list(uniforms(3, 0, 0, 4))

"""Backend agreement: the numba and numpy kernel paths must match bit-for-bit
on integer outputs and on the cumsum-based float window sums."""

import numpy as np
import pytest

from ifslab import _kernels_numpy as knp
from ifslab import kernels

knb = pytest.importorskip("ifslab._kernels_numba")


def random_case(seed, S=40, n=90, m=3, k=4):
    rng = np.random.default_rng(seed)
    words = rng.integers(0, m, size=(S, n)).astype(np.int64)
    logr = np.log(rng.uniform(0.2, 0.8, m))
    logp = np.log(rng.dirichlet(np.ones(m)))
    bands = (k * (float(np.mean(logr)) - 0.4), k * (float(np.mean(logr)) + 0.4),
             k * (float(np.mean(logp)) - 0.5), k * (float(np.mean(logp)) + 0.5))
    return words, logr, logp, bands


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_counting_kernels_agree(seed):
    words, logr, logp, bands = random_case(seed)
    for fn in ("distinct_count_batch", "collision_stat_batch", "first_window_mask_batch"):
        a = getattr(knp, fn)(words, 4, 3)
        b = getattr(knb, fn)(words, 4, 3)
        assert np.array_equal(a, b), fn


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_window_sums_bit_identical(seed):
    words, logr, _, _ = random_case(seed)
    a = knp.window_log_sums_batch(words, 4, logr)
    b = knb.window_log_sums_batch(words, 4, logr)
    assert np.array_equal(a, b)  # exact equality, not allclose


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_good_and_bad_agree(seed):
    words, logr, logp, (rlo, rhi, plo, phi) = random_case(seed)
    S, n = words.shape
    a = knp.good_windows_batch(words, 4, 3, logr, logp, rlo, rhi, plo, phi,
                               n // 10, n // 20, True)
    b = knb.good_windows_batch(words, 4, 3, logr, logp, rlo, rhi, plo, phi,
                               n // 10, n // 20, True)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    a = knp.bad_window_count_batch(words, 4, logr, logp, rlo, rhi, plo, phi)
    b = knb.bad_window_count_batch(words, 4, logr, logp, rlo, rhi, plo, phi)
    assert np.array_equal(a, b)


def test_extension_and_assembly_agree():
    rng = np.random.default_rng(3)
    S, n, m = 60, 14, 2
    words = rng.integers(0, m, size=(S, n)).astype(np.int64)
    ratios = np.array([1 / 3, 1 / 3])
    wid = np.repeat(np.arange(S, dtype=np.int64), 3)
    ls = np.tile(np.array([0, 5, 13], dtype=np.int64), S)
    a = knp.tail_ratio_products(words, wid, ls, ratios)
    b = knb.tail_ratio_products(words, wid, ls, ratios)
    assert np.array_equal(a, b)
    aM, aok = knp.extension_scan_batch(words, wid, ls, ratios, 0.01, 1000)
    bM, bok = knb.extension_scan_batch(words, wid, ls, ratios, 0.01, 1000)
    assert np.array_equal(aM, bM) and np.array_equal(aok, bok)
    assert aok.all()
    pre = np.array([0], dtype=np.int64)
    assert int((1 + ls + aM).max()) <= 64
    ak, al, ac = knp.assemble_cylinders(words, wid, ls, aM, pre, m, 1)
    bk, bl, bc = knb.assemble_cylinders(words, wid, ls, aM, pre, m, 1)
    assert np.array_equal(ak, bk)
    assert np.array_equal(al, bl)
    assert np.array_equal(ac, bc)


def test_extension_scan_respects_step_cap():
    words = np.zeros((1, 4), dtype=np.int64)
    wid = np.array([0], dtype=np.int64)
    ls = np.array([0], dtype=np.int64)
    M, ok = knp.extension_scan_batch(words, wid, ls, np.array([0.5, 0.5]), 1e-30, 5)
    assert not ok[0]
    M2, ok2 = knb.extension_scan_batch(words, wid, ls, np.array([0.5, 0.5]), 1e-30, 5)
    assert not ok2[0]


def test_large_code_space_sort_route():
    # force the numba sort fallback (m^k above the stamp-table cap) and compare
    rng = np.random.default_rng(4)
    m, k, n, S = 5, 11, 40, 20  # 5^11 = 48e6 > 2^22
    words = rng.integers(0, m, size=(S, n)).astype(np.int64)
    assert kernels.supports_packing(m, k, n)
    a = knp.distinct_count_batch(words, k, m)
    b = knb.distinct_count_batch(words, k, m)
    assert np.array_equal(a, b)
    a = knp.collision_stat_batch(words, k, m)
    b = knb.collision_stat_batch(words, k, m)
    assert np.array_equal(a, b)
    a = knp.first_window_mask_batch(words, k, m)
    b = knb.first_window_mask_batch(words, k, m)
    assert np.array_equal(a, b)


def test_packing_guard():
    assert kernels.supports_packing(2, 10, 400)
    assert not kernels.supports_packing(6, 30, 100)


def test_python_fallback_on_unpackable():
    # wordstats falls back to tuple-based counting when packing is impossible
    from ifslab.wordstats import collision_statistic, distinct_subwords

    word = tuple(np.random.default_rng(5).integers(0, 5, 80))
    big_t = 40  # 5^40 overflows packing
    assert distinct_subwords(word, big_t, 5) == len(
        {word[i:i + big_t] for i in range(len(word) - big_t + 1)})
    from collections import Counter

    counts = Counter(word[i:i + big_t] for i in range(len(word) - big_t + 1))
    assert collision_statistic(word, big_t, 5) == sum(c * c for c in counts.values())

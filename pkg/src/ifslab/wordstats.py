"""Subword statistics: window length k_n, the frequent set, collision sums,
bad windows, and good-witness extraction, with seeded Monte Carlo estimators.

The window length is floor(-log n / log sum p_a^2) + 1 (base-invariant). All
|a|-t+1 windows of a word are counted.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .ifs import IFSystem, ProbabilityVector, entropy, lyapunov
from .util import map_chunks
from .words import sample_codes

__all__ = [
    "GoodWitness",
    "k_n",
    "distinct_subwords",
    "in_frequent_set",
    "collision_statistic",
    "bad_windows",
    "in_bad_set",
    "extract_good_witness",
    "validate_witness",
    "estimate_frequent_measure",
    "estimate_bad_measure",
    "estimate_witness_fraction",
    "frequent_measure_exact",
]

_INTEGER_SNAP = 1e-9


@dataclass(frozen=True)
class GoodWitness:
    """A word together with window starts indexing distinct in-band factors."""

    word: tuple
    windows: tuple  # sorted window starts l in [0, n - k]
    k: int


def k_n(p: ProbabilityVector, n: int) -> int:
    """floor(-log n / log sum p_a^2) + 1, snapping exact integer ratios."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ratio = -math.log(n) / math.log(float(np.sum(p.floats ** 2)))
    nearest = round(ratio)
    if abs(ratio - nearest) < _INTEGER_SNAP:
        ratio = nearest
    return int(math.floor(ratio)) + 1


def _as_matrix(word) -> np.ndarray:
    return np.asarray(word, dtype=np.int64)[None, :]


def _distinct_py(word, t: int) -> int:
    word = tuple(word)
    return len({word[i:i + t] for i in range(len(word) - t + 1)})


def _collision_py(word, t: int) -> int:
    word = tuple(word)
    counts = Counter(word[i:i + t] for i in range(len(word) - t + 1))
    return sum(c * c for c in counts.values())


def distinct_subwords(word, t: int, n_symbols: int) -> int:
    """Number of distinct length-t factors of word; 0 when t exceeds the length."""
    if t < 1:
        raise ValueError("t must be >= 1")
    n = len(word)
    if t > n:
        return 0
    if kernels.supports_packing(n_symbols, t, n):
        return int(kernels.distinct_count_batch(_as_matrix(word), t, n_symbols)[0])
    return _distinct_py(word, t)


def collision_statistic(word, t: int, n_symbols: int) -> int:
    """Sum over distinct length-t factors of the squared window count."""
    n = len(word)
    if t > n:
        raise ValueError("t must not exceed the word length")
    if kernels.supports_packing(n_symbols, t, n):
        return int(kernels.collision_stat_batch(_as_matrix(word), t, n_symbols)[0])
    return _collision_py(word, t)


def in_frequent_set(word, p: ProbabilityVector) -> bool:
    """Membership in F_n: at least floor(n/10) distinct k_n-factors.

    Defined false whenever k_n exceeds the word length (no windows).
    """
    n = len(word)
    k = k_n(p, n)
    if k > n:
        return False
    return distinct_subwords(word, k, p.size) >= n // 10


def _band_bounds(ifs: IFSystem, p: ProbabilityVector, k: int, eps: float):
    chi = lyapunov(ifs, p)
    h = entropy(p)
    return (k * (-chi - eps), k * (-chi + eps), k * (-h - eps), k * (-h + eps))


def bad_windows(ifs: IFSystem, p: ProbabilityVector, word, eps: float) -> set:
    """Window starts whose ratio product leaves the Lyapunov band or whose
    weight product leaves the entropy band."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = len(word)
    k = k_n(p, n)
    if k > n:
        return set()
    rlo, rhi, plo, phi = _band_bounds(ifs, p, k, eps)
    w = _as_matrix(word)
    sr = kernels.window_log_sums_batch(w, k, np.log(ifs.ratios))[0]
    sp = kernels.window_log_sums_batch(w, k, np.log(p.floats))[0]
    bad = (sr < rlo) | (sr > rhi) | (sp < plo) | (sp > phi)
    return set(int(i) for i in np.nonzero(bad)[0])


def in_bad_set(ifs: IFSystem, p: ProbabilityVector, word, eps: float) -> bool:
    """Membership in Bad(n, eps): at least floor(n/20) bad windows."""
    return len(bad_windows(ifs, p, word, eps)) >= len(word) // 20


def extract_good_witness(ifs: IFSystem, p: ProbabilityVector, word,
                         eps: float) -> Optional[GoodWitness]:
    """Greedy witness: first window of each distinct k_n-factor, band-filtered.

    Requires frequent-set membership (the good set lives inside F_n); returns a
    witness iff at least floor(n/20) filtered windows survive, else None.
    """
    n = len(word)
    k = k_n(p, n)
    if k > n:
        return None
    rlo, rhi, plo, phi = _band_bounds(ifs, p, k, eps)
    has, chosen, _distinct = kernels.good_windows_batch(
        _as_matrix(word), k, p.size, np.log(ifs.ratios), np.log(p.floats),
        rlo, rhi, plo, phi, n // 10, n // 20, True,
    )
    if not bool(has[0]):
        return None
    ls = tuple(int(i) for i in np.nonzero(chosen[0])[0])
    return GoodWitness(word=tuple(int(a) for a in word), windows=ls, k=k)


def validate_witness(ifs: IFSystem, p: ProbabilityVector, w: GoodWitness,
                     eps: float) -> bool:
    """Independent replay of the witness invariants in product space.

    Checks the window-count floor, pairwise-distinct factors, and both product
    bands computed by direct multiplication (no shared kernel code).
    """
    n = len(w.word)
    k = w.k
    if k != k_n(p, n):
        return False
    if len(w.windows) < n // 20:
        return False
    chi = lyapunov(ifs, p)
    h = entropy(p)
    r_band = (math.exp(k * (-chi - eps)), math.exp(k * (-chi + eps)))
    p_band = (math.exp(k * (-h - eps)), math.exp(k * (-h + eps)))
    seen = set()
    ratios = [m.ratio for m in ifs.maps]
    weights = [float(v) for v in p.weights]
    for l in w.windows:
        if not (0 <= l <= n - k):
            return False
        factor = w.word[l:l + k]
        if factor in seen:
            return False
        seen.add(factor)
        rp = 1.0
        pp = 1.0
        for a in factor:
            rp *= ratios[a]
            pp *= weights[a]
        if not (r_band[0] <= rp <= r_band[1]):
            return False
        if not (p_band[0] <= pp <= p_band[1]):
            return False
    return True


def estimate_frequent_measure(p: ProbabilityVector, n: int, samples: int,
                              seed: int, threads: int = 1):
    """Monte Carlo fraction of length-n draws lying in F_n, with binomial stderr."""
    if samples < 100:
        raise ValueError("samples must be >= 100")
    k = k_n(p, n)
    if k > n:
        return 0.0, 0.0
    thr = n // 10

    def run(a, b):
        words = sample_codes(p, n, b - a, seed, start_index=a)
        return int(np.sum(kernels.distinct_count_batch(words, k, p.size) >= thr))

    hits = sum(map_chunks(run, samples, threads))
    est = hits / samples
    return est, math.sqrt(max(est * (1 - est), 0.0) / samples)


def frequent_measure_exact(p: ProbabilityVector, n: int):
    """Exact m(union of F_n cylinders) by full enumeration; n <= 20 only (oracle)."""
    from .words import all_words_matrix, cylinder_measure

    if p.size ** n > 1 << 20:
        raise ValueError("exact frequent-set measure is exponential; use n <= 20")
    k = k_n(p, n)
    if k > n:
        return 0 if p.is_exact else 0.0
    words = all_words_matrix(p.size, n)
    member = kernels.distinct_count_batch(words, k, p.size) >= n // 10
    total = 0 if p.is_exact else 0.0
    for row in words[member]:
        total = total + cylinder_measure(p, tuple(int(a) for a in row))
    return total


def estimate_bad_measure(ifs: IFSystem, p: ProbabilityVector, eps: float,
                         n_list: Sequence[int], samples: int, seed: int,
                         threads: int = 1):
    """Per-n Monte Carlo estimates of m(Bad(n, eps)) plus a fitted decay rate.

    Returns (rows, gamma_fit): rows are dicts with n, k_n, estimate, stderr;
    gamma_fit is exp(slope) of log-estimate against k_n over nonzero estimates
    (None when fewer than two are nonzero).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    rows = []
    for n in n_list:
        k = k_n(p, n)
        if k > n:
            rows.append({"n": n, "k_n": k, "estimate": 0.0, "stderr": 0.0})
            continue
        rlo, rhi, plo, phi = _band_bounds(ifs, p, k, eps)
        logr = np.log(ifs.ratios)
        logp = np.log(p.floats)
        thr = n // 20

        def run(a, b, _n=n, _k=k):
            words = sample_codes(p, _n, b - a, seed, start_index=a)
            cnt = kernels.bad_window_count_batch(words, _k, logr, logp, rlo, rhi, plo, phi)
            return int(np.sum(cnt >= thr))

        hits = sum(map_chunks(run, samples, threads))
        est = hits / samples
        rows.append({
            "n": n, "k_n": k, "estimate": est,
            "stderr": math.sqrt(max(est * (1 - est), 0.0) / samples),
        })
    pts = [(r["k_n"], math.log(r["estimate"])) for r in rows if r["estimate"] > 0]
    gamma = None
    if len(pts) >= 2:
        ks = np.array([q[0] for q in pts], dtype=float)
        ys = np.array([q[1] for q in pts], dtype=float)
        slope = float(np.polyfit(ks, ys, 1)[0])
        gamma = math.exp(slope)
    return rows, gamma


def estimate_witness_fraction(ifs: IFSystem, p: ProbabilityVector, eps: float,
                              n: int, samples: int, seed: int, threads: int = 1,
                              validate: bool = False):
    """Fraction of sampled words with a good witness; optionally replay-validates
    every witness and reports how many failed (must be 0)."""
    k = k_n(p, n)
    if k > n:
        return {"fraction": 0.0, "stderr": 0.0, "validated": 0, "invalid": 0}
    rlo, rhi, plo, phi = _band_bounds(ifs, p, k, eps)
    logr = np.log(ifs.ratios)
    logp = np.log(p.floats)

    def run(a, b):
        words = sample_codes(p, n, b - a, seed, start_index=a)
        has, chosen, _ = kernels.good_windows_batch(
            words, k, p.size, logr, logp, rlo, rhi, plo, phi, n // 10, n // 20, True)
        bad = 0
        checked = 0
        if validate:
            for s in range(words.shape[0]):
                if not has[s]:
                    continue
                ls = tuple(int(i) for i in np.nonzero(chosen[s])[0])
                w = GoodWitness(word=tuple(int(x) for x in words[s]), windows=ls, k=k)
                checked += 1
                if not validate_witness(ifs, p, w, eps):
                    bad += 1
        return int(np.sum(has)), checked, bad

    parts = map_chunks(run, samples, threads)
    hits = sum(x[0] for x in parts)
    checked = sum(x[1] for x in parts)
    bad = sum(x[2] for x in parts)
    est = hits / samples
    return {
        "fraction": est,
        "stderr": math.sqrt(max(est * (1 - est), 0.0) / samples),
        "validated": checked,
        "invalid": bad,
    }

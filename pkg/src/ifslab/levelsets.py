"""Level sets of band-controlled cylinders, their exact measures, pairwise
intersections, and the second-moment lower bound.

Each level n collects, over every good word a and witness window l, the
shortest periodic extension c a[:l] (a[l:])^h a[l:j] whose cylinder diameter
drops below Diam(X_{c a}) * g2(|c|+n). Cylinder words are packed into
left-aligned 64-bit keys so prefix logic is integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .ifs import IFSystem, ProbabilityVector, entropy, epsilon_star, lyapunov, similarity_dimension
from .rates import RateFunction
from .util import map_chunks
from .wordstats import k_n
from .words import all_words_matrix, sample_codes

__all__ = [
    "LevelSet",
    "extension_params",
    "choose_depth_threshold",
    "build_level_set",
    "level_set_measure",
    "pairwise_intersection_measure",
    "kochen_stone_bound",
]

_EXACT_WORD_CAP = 1 << 20


def extension_params(ifs: IFSystem, a: Sequence[int], l: int, g2_value,
                     max_steps: int = 100000):
    """Shortest periodic extension parameters (h, j) for the window at l.

    Symbols are appended one at a time cycling through a[l:]; the scan stops at
    the first total length whose ratio product drops the cylinder diameter
    below Diam(X_{c a}) * g2_value. The common Diam(X) and prefix factors
    cancel, so only ratio products are compared, exactly so when g2_value is
    a Fraction on an integer-form system. The returned word shape is
    (a[l:])^h a[l:j] with h >= 1 and l < j <= n.
    """
    n = len(a)
    if not (0 <= l <= n - 1):
        raise ValueError("l must lie in [0, n-1]")
    if not (0 < g2_value < 1):
        raise ValueError("g2_value must lie in (0,1); h is undefined otherwise")
    exact = ifs.exact_mode and isinstance(g2_value, Fraction)
    if exact:
        ratios = [m.exact_ratio() for m in ifs.maps]
        tail = Fraction(1)
    else:
        ratios = [m.ratio for m in ifs.maps]
        g2_value = float(g2_value)
        tail = 1.0
    for i in range(l, n):
        tail = tail * ratios[a[i]]
    threshold = tail * g2_value
    period = n - l
    run = Fraction(1) if exact else 1.0
    m_scan = 0
    while m_scan < max_steps:
        m_scan += 1
        run = run * ratios[a[l + ((m_scan - 1) % period)]]
        if run < threshold:
            h = (m_scan - 1) // period
            j = l + (m_scan - h * period)
            return h, j
    raise RuntimeError("extension scan exhausted max_steps")


def choose_depth_threshold(ifs: IFSystem, p: ProbabilityVector, eps: float,
                           n_max: int = 10 ** 4):
    """Smallest N so the construction inequalities hold on [N, n_max].

    Requires n^(-2/dim_S) < exp(k_n (-chi - eps)) and (h+eps) k_n / log n < 2
    for every n in range; returns (N, gamma_fit) with gamma_fit the largest
    (h+eps) k_n / log n over [N, n_max] (the fitted exponent of e^{(h+eps)k_n}
    as a power of n).
    """
    dim_s = similarity_dimension(ifs)
    chi = lyapunov(ifs, p)
    h = entropy(p)
    last_fail = 1
    gammas = {}
    for n in range(2, n_max + 1):
        k = k_n(p, n)
        cond13 = n ** (-2.0 / dim_s) < math.exp(k * (-chi - eps))
        gamma_n = (h + eps) * k / math.log(n)
        gammas[n] = gamma_n
        if not cond13 or gamma_n >= 2.0:
            last_fail = n
    N = last_fail + 1
    if N > n_max:
        raise ValueError("no admissible level below n_max")
    gamma_fit = max(g for n, g in gammas.items() if n >= N)
    return N, gamma_fit


@dataclass
class LevelSet:
    """A disjoint family of packed cylinder words at one level.

    keys are left-aligned base-2^bits packings sorted ascending; lengths, meta
    (word index, l, h, j) and optional per-symbol counts align with keys.
    weights are the Bernoulli weights used for measures. In sampled mode the
    measures are importance-weighted estimates and `measure_floats` is set.
    """

    prefix: tuple
    n: int
    k: int
    g2_value: float
    bits: int
    n_symbols: int
    weights: tuple
    keys: np.ndarray
    lengths: np.ndarray
    meta: np.ndarray  # (N, 4) int64: word_id, l, h, j
    counts: Optional[np.ndarray] = None  # (N, n_symbols) int32, non-uniform exact mode
    mode: str = "exact"
    measure_floats: Optional[np.ndarray] = None  # sampled mode

    @property
    def size(self) -> int:
        return len(self.keys)

    def cylinder_word(self, i: int) -> tuple:
        L = int(self.lengths[i])
        key = int(self.keys[i])
        mask = (1 << self.bits) - 1
        return tuple((key >> (64 - self.bits * (p + 1))) & mask for p in range(L))

    def is_prefix_free(self) -> bool:
        """Exact check: in sorted key order only adjacent pairs can nest."""
        if self.size <= 1:
            return True
        k1 = self.keys[:-1]
        k2 = self.keys[1:]
        l1 = self.lengths[:-1]
        l2 = self.lengths[1:]
        can = l1 <= l2
        sh = (64 - self.bits * l1).astype(np.uint64)
        same = (k1 >> sh) == (k2 >> sh)
        return not bool(np.any(can & same))

    def measure(self):
        """Total Bernoulli measure; exact when the weights are Fractions."""
        if self.mode == "sampled":
            return float(np.sum(self.measure_floats)) if self.size else 0.0
        return _measure_of_subset(self, np.ones(self.size, dtype=bool))


def _measure_of_subset(E: LevelSet, mask: np.ndarray):
    exact = all(isinstance(w, Fraction) for w in E.weights)
    if not np.any(mask):
        return Fraction(0) if exact else 0.0
    if E.counts is None:
        # uniform weights: measure depends on the length alone
        w0 = E.weights[0]
        lens, cnt = np.unique(E.lengths[mask], return_counts=True)
        if exact:
            return sum(int(c) * w0 ** int(L) for L, c in zip(lens, cnt))
        return float(sum(int(c) * float(w0) ** int(L) for L, c in zip(lens, cnt)))
    sigs, cnt = np.unique(E.counts[mask], axis=0, return_counts=True)
    total = Fraction(0) if exact else 0.0
    for sig, c in zip(sigs, cnt):
        term = Fraction(1) if exact else 1.0
        for sym, e in enumerate(sig):
            term = term * E.weights[sym] ** int(e)
        total = total + int(c) * term
    return total


def _uniform(p: ProbabilityVector) -> bool:
    return len(set(p.weights)) == 1


def build_level_set(ifs: IFSystem, p: ProbabilityVector, c: Sequence[int], n: int,
                    eps: Optional[float] = None, g2: Optional[RateFunction] = None,
                    sample_budget: int = 0, seed: int = 0, threads: int = 1,
                    exact_word_cap: int = _EXACT_WORD_CAP) -> LevelSet:
    """Assemble the level-n family over good words and witness windows.

    Exact mode enumerates all #A^n words when that count fits the cap,
    otherwise `sample_budget` words are drawn and measures become importance
    weighted. Disjointness (prefix-freeness) is verified exactly and a failure
    raises, since the construction guarantees it.
    """
    if g2 is None:
        raise ValueError("a transformed rate g2 is required")
    if eps is None:
        eps = epsilon_star(ifs, p)
    m = ifs.size
    k = k_n(p, n)
    total_len_base = len(c) + n
    g2v = g2.value(total_len_base)
    N_min, _ = choose_depth_threshold(ifs, p, eps, n_max=max(n, 2))
    if n < N_min:
        raise ValueError(f"level {n} below construction threshold {N_min}")
    bits = max(1, int(math.ceil(math.log2(m))))
    common = dict(prefix=tuple(c), n=n, k=k, g2_value=float(g2v), bits=bits,
                  n_symbols=m, weights=p.weights)
    if g2v == 0.0:
        z = np.zeros(0, dtype=np.uint64)
        return LevelSet(keys=z, lengths=np.zeros(0, np.int64),
                        meta=np.zeros((0, 4), np.int64), **common)

    exact_mode = m ** n <= exact_word_cap
    chi = lyapunov(ifs, p)
    h_ent = entropy(p)
    rlo, rhi = k * (-chi - eps), k * (-chi + eps)
    plo, phi = k * (-h_ent - eps), k * (-h_ent + eps)
    logr = np.log(ifs.ratios)
    logp = np.log(p.floats)
    ratios = ifs.ratios
    dim_s = similarity_dimension(ifs)
    r_min = float(ratios.min())
    r_max = float(ratios.max())
    max_steps = n + int(math.ceil(
        ((4.0 / dim_s) * math.log(total_len_base) - math.log(r_min)) / (-math.log(r_max))
    )) + 8

    def harvest(words, word_offset_ids=None):
        has, chosen, _ = kernels.good_windows_batch(
            words, k, m, logr, logp, rlo, rhi, plo, phi, n // 10, n // 20, True)
        wid, ls = np.nonzero(chosen)
        wid = wid.astype(np.int64)
        ls = ls.astype(np.int64)
        Ms, ok = kernels.extension_scan_batch(words, wid, ls, ratios, float(g2v), max_steps)
        if not bool(np.all(ok)):
            raise RuntimeError("extension scan exhausted its step bound")
        period = n - ls
        hs = (Ms - 1) // period
        js = ls + (Ms - hs * period)
        max_len = len(c) + int((ls + Ms).max()) if len(ls) else len(c)
        if max_len * bits > 64:
            raise ValueError(
                f"cylinder words need {max_len * bits} bits; beyond the 64-bit packing")
        keys, lengths, counts = kernels.assemble_cylinders(
            words, wid, ls, Ms, np.asarray(c, dtype=np.int64), m, bits)
        if word_offset_ids is not None:
            wid = word_offset_ids[wid]
        meta = np.stack([wid, ls, hs, js], axis=1)
        return has, keys, lengths, counts, meta

    if exact_mode:
        words = all_words_matrix(m, n)

        def run(a, b):
            return harvest(words[a:b], word_offset_ids=np.arange(a, b, dtype=np.int64))

        parts = map_chunks(run, words.shape[0], threads=threads, chunk=1 << 16)
        keys = np.concatenate([x[1] for x in parts])
        lengths = np.concatenate([x[2] for x in parts])
        counts = np.concatenate([x[3] for x in parts])
        meta = np.concatenate([x[4] for x in parts])
        mode = "exact"
        measure_floats = None
    else:
        if sample_budget <= 0:
            raise ValueError("sampled mode needs a positive sample_budget")
        words = sample_codes(p, n, sample_budget, seed)
        has, keys, lengths, counts, meta = harvest(
            words, word_offset_ids=np.arange(sample_budget, dtype=np.int64))
        # importance weights: each sampled word contributes 1/(S * m([a])) times
        # the exact measures of its cylinders, an unbiased estimator of m(E_n)
        logm_word = np.sum(logp[words], axis=1)
        cyl_logm = np.zeros(len(keys))
        for sym in range(m):
            cyl_logm += counts[:, sym] * logp[sym]
        src = meta[:, 0]
        measure_floats = np.exp(cyl_logm - logm_word[src]) / sample_budget
        mode = "sampled"

    order = np.lexsort((lengths, keys)) if len(keys) else np.zeros(0, dtype=np.int64)
    keys = keys[order]
    lengths = lengths[order]
    counts = counts[order]
    meta = meta[order]
    if measure_floats is not None:
        measure_floats = measure_floats[order]

    E = LevelSet(keys=keys, lengths=lengths, meta=meta,
                 counts=None if _uniform(p) else counts,
                 mode=mode, measure_floats=measure_floats, **common)
    if mode == "exact" and not E.is_prefix_free():
        raise RuntimeError("level-set cylinders are not prefix-free (construction bug)")
    return E


def level_set_measure(E: LevelSet):
    return E.measure()


def _prefix_hit_mask(host: LevelSet, query: LevelSet, strict: bool) -> np.ndarray:
    """Boolean per query cylinder: some host cylinder prefixes it.

    Host families are prefix-free, so within the host's sorted keys the only
    candidate prefix of a query key is its predecessor (largest key <= query).
    """
    if host.size == 0 or query.size == 0:
        return np.zeros(query.size, dtype=bool)
    bits = host.bits
    idx = np.searchsorted(host.keys, query.keys, side="right") - 1
    valid = idx >= 0
    idx = np.maximum(idx, 0)
    hk = host.keys[idx]
    hl = host.lengths[idx]
    ok_len = (hl < query.lengths) if strict else (hl <= query.lengths)
    sh = (64 - bits * hl).astype(np.uint64)
    same = (hk >> sh) == (query.keys >> sh)
    return valid & ok_len & same


def pairwise_intersection_measure(E: LevelSet, F: LevelSet):
    """Exact measure of the set intersection of two cylinder families.

    Two cylinders intersect iff one word prefixes the other, and then the
    intersection is the longer cylinder; summing the longer cylinders over
    prefix pairs never double counts because each family is prefix-free.
    """
    if tuple(E.prefix) != tuple(F.prefix):
        raise ValueError("level sets must share the prefix word")
    in_f = _prefix_hit_mask(E, F, strict=False)   # F-cylinders under some E-cylinder
    in_e = _prefix_hit_mask(F, E, strict=True)    # E-cylinders strictly under some F-cylinder
    if E.mode == "sampled" or F.mode == "sampled":
        a = float(np.sum(F.measure_floats[in_f])) if F.mode == "sampled" else float(
            _measure_of_subset(F, in_f))
        b = float(np.sum(E.measure_floats[in_e])) if E.mode == "sampled" else float(
            _measure_of_subset(E, in_e))
        return a + b
    return _measure_of_subset(F, in_f) + _measure_of_subset(E, in_e)


def kochen_stone_bound(levels: Sequence[LevelSet]):
    """Second-moment lower bound (sum m(E_n))^2 / sum m(E_n ∩ E_m).

    Returns a dict with the exact bound, the bound normalized by the prefix
    cylinder measure, and both sums. Raises when every level is empty.
    """
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    prefix = tuple(levels[0].prefix)
    for E in levels:
        if tuple(E.prefix) != prefix:
            raise ValueError("levels must share the prefix word")
    weights = levels[0].weights
    num = sum(E.measure() for E in levels)
    den = sum(E.measure() for E in levels)  # diagonal terms m(E_n ∩ E_n)
    for i in range(len(levels)):
        for j in range(i + 1, len(levels)):
            den = den + 2 * pairwise_intersection_measure(levels[i], levels[j])
    if den == 0:
        raise ValueError("all levels empty: zero denominator")
    bound = num * num / den
    exact = all(isinstance(w, Fraction) for w in weights)
    m_prefix = Fraction(1) if exact else 1.0
    for a in prefix:
        m_prefix = m_prefix * weights[a]
    return {
        "bound": bound,
        "normalized": bound / m_prefix,
        "sum_measures": num,
        "sum_intersections": den,
        "prefix_measure": m_prefix,
    }

"""Pure-numpy kernel implementations (fallback path, selected by IFSLAB_NO_NUMBA=1).

Window factors are packed exactly into int64 base-#A codes; callers guarantee
m^k * (n-k+2) < 2^63 (see kernels.supports). Float window sums are prefix-sum
based with sequential semantics, so this path and the numba path agree
bit-for-bit.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def _window_codes(words: np.ndarray, k: int, m: int) -> np.ndarray:
    """(S, n-k+1) packed base-m codes of all length-k windows."""
    view = np.lib.stride_tricks.sliding_window_view(words, k, axis=1)
    powers = np.empty(k, dtype=np.int64)
    p = 1
    for i in range(k - 1, -1, -1):
        powers[i] = p
        p *= m
    return view @ powers


def distinct_count_batch(words: np.ndarray, k: int, m: int) -> np.ndarray:
    codes = np.sort(_window_codes(words, k, m), axis=1)
    fresh = np.ones(codes.shape, dtype=bool)
    fresh[:, 1:] = codes[:, 1:] != codes[:, :-1]
    return fresh.sum(axis=1).astype(np.int64)


def collision_stat_batch(words: np.ndarray, k: int, m: int) -> np.ndarray:
    codes = np.sort(_window_codes(words, k, m), axis=1)
    S, W = codes.shape
    fresh = np.ones((S, W), dtype=np.int64)
    fresh[:, 1:] = (codes[:, 1:] != codes[:, :-1]).astype(np.int64)
    # run length at each run start, via positions of starts
    out = np.empty(S, dtype=np.int64)
    pos = np.arange(W, dtype=np.int64)
    for s in range(S):
        starts = pos[fresh[s].astype(bool)]
        ends = np.append(starts[1:], W)
        runs = ends - starts
        out[s] = int(np.sum(runs * runs))
    return out


def window_log_sums_batch(words: np.ndarray, k: int, vals: np.ndarray) -> np.ndarray:
    """(S, n-k+1) sums of vals[symbol] over each length-k window (prefix sums)."""
    logs = vals[words]
    cs = np.cumsum(logs, axis=1)
    zeros = np.zeros((words.shape[0], 1), dtype=np.float64)
    cs = np.concatenate([zeros, cs], axis=1)
    return cs[:, k:] - cs[:, : cs.shape[1] - k]


def first_window_mask_batch(words: np.ndarray, k: int, m: int) -> np.ndarray:
    """Boolean (S, n-k+1): window l is the smallest-l occurrence of its factor.

    Sort-order independent: codes and window indexes are fused into one integer
    key, so the first entry of each equal-code run carries the minimal l.
    """
    codes = _window_codes(words, k, m)
    S, W = codes.shape
    comb = codes * np.int64(W + 1) + np.arange(W, dtype=np.int64)
    comb = np.sort(comb, axis=1)
    code_part = comb // np.int64(W + 1)
    fresh = np.ones((S, W), dtype=bool)
    fresh[:, 1:] = code_part[:, 1:] != code_part[:, :-1]
    ls = (comb % np.int64(W + 1)).astype(np.int64)
    mask = np.zeros((S, W), dtype=bool)
    rows = np.broadcast_to(np.arange(S)[:, None], (S, W))
    mask[rows[fresh], ls[fresh]] = True
    return mask


def good_windows_batch(words, k, m, logr, logp, rlo, rhi, plo, phi, n10, n20,
                       check_bands):
    """Witness machinery at scale.

    Returns (has_witness bool[S], chosen bool[S, n-k+1], distinct int64[S]).
    chosen marks the first window of each distinct factor that also passes both
    bands; a witness requires distinct >= n10 (frequent-set membership) and at
    least n20 surviving windows. chosen rows are zeroed where there is no witness.
    """
    first = first_window_mask_batch(words, k, m)
    distinct = first.sum(axis=1).astype(np.int64)
    if check_bands:
        sr = window_log_sums_batch(words, k, logr)
        sp = window_log_sums_batch(words, k, logp)
        in_band = (sr >= rlo) & (sr <= rhi) & (sp >= plo) & (sp <= phi)
        chosen = first & in_band
    else:
        chosen = first
    survivors = chosen.sum(axis=1)
    has = (distinct >= n10) & (survivors >= n20)
    chosen = chosen & has[:, None]
    return has, chosen, distinct


def bad_window_count_batch(words, k, logr, logp, rlo, rhi, plo, phi) -> np.ndarray:
    sr = window_log_sums_batch(words, k, logr)
    sp = window_log_sums_batch(words, k, logp)
    bad = (sr < rlo) | (sr > rhi) | (sp < plo) | (sp > phi)
    return bad.sum(axis=1).astype(np.int64)


def tail_ratio_products(words, word_ids, ls, ratios) -> np.ndarray:
    """prod(ratios[a_i], i = l..n-1) per (word, l) pair, ascending multiply order."""
    N = len(word_ids)
    n = words.shape[1]
    out = np.ones(N, dtype=np.float64)
    for i in range(n):
        active = ls <= i
        if not active.any():
            continue
        sym = words[word_ids[active], i]
        out[active] = out[active] * ratios[sym]
    return out


def extension_scan_batch(words, word_ids, ls, ratios, g2_value, max_steps):
    """Minimal appended length M per pair with cycled-ratio product < r_tail * g2.

    Symbols a[l], a[l+1], ... are appended cycling with period n-l. Returns
    (M int64[N], ok bool[N]); ok is False where max_steps was exhausted.
    """
    N = len(word_ids)
    n = words.shape[1]
    T = tail_ratio_products(words, word_ids, ls, ratios) * g2_value
    R = np.ones(N, dtype=np.float64)
    M = np.zeros(N, dtype=np.int64)
    done = np.zeros(N, dtype=bool)
    period = n - ls
    for step in range(1, max_steps + 1):
        act = ~done
        if not act.any():
            break
        pos = ls[act] + ((step - 1) % period[act])
        sym = words[word_ids[act], pos]
        R[act] = R[act] * ratios[sym]
        newly = np.zeros(N, dtype=bool)
        newly[act] = R[act] < T[act]
        M[newly] = step
        done |= newly
    return M, done


def assemble_cylinders(words, word_ids, ls, Ms, prefix, m, bits):
    """Pack prefix + a[:l] + cycled(M) into left-aligned uint64 keys.

    Returns (keys uint64[N], lengths int64[N], counts int32[N, m]). Caller
    guarantees (len(prefix) + l + M) * bits <= 64 for every pair.
    """
    N = len(word_ids)
    n = words.shape[1]
    c_len = len(prefix)
    lengths = (c_len + ls + Ms).astype(np.int64)
    keys = np.zeros(N, dtype=np.uint64)
    counts = np.zeros((N, m), dtype=np.int32)
    key0 = np.uint64(0)
    for i, s in enumerate(prefix):
        key0 |= np.uint64(s) << np.uint64(64 - bits * (i + 1))
        counts[:, int(s)] += 1
    keys[:] = key0
    extra = ls + Ms
    max_extra = int(extra.max()) if N else 0
    period = np.maximum(n - ls, 1)
    for step in range(max_extra):
        act = step < extra
        if not act.any():
            break
        pos = np.where(step < ls, step, ls + ((step - ls) % period))
        sym = words[word_ids[act], pos[act]]
        sh = 64 - bits * (c_len + step + 1)
        keys[act] |= sym.astype(np.uint64) << np.uint64(sh)
        np.add.at(counts, (np.nonzero(act)[0], sym), 1)
    return keys, lengths, counts

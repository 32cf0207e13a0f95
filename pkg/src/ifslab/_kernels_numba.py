"""Numba kernel implementations (default path when numba imports).

Semantics mirror _kernels_numpy exactly. Window factors are packed into int64
base-#A codes; when the code space m^k is small a stamped lookup table gives
O(1) first-occurrence and multiplicity queries, otherwise a fused-key sort is
used (both exact, so the two routes and the numpy path agree bit-for-bit).
"""

from __future__ import annotations

import numpy as np
from numba import njit

BACKEND = "numba"

_TABLE_CAP = 1 << 22


@njit(cache=True, nogil=True)
def _code_space(k, m):
    size = np.int64(1)
    for _ in range(k):
        size *= m
    return size


@njit(cache=True, nogil=True)
def _fill_codes(row, k, m, codes):
    n = row.shape[0]
    W = n - k + 1
    top = np.int64(1)
    for _ in range(k - 1):
        top *= m
    c = np.int64(0)
    for i in range(k):
        c = c * m + row[i]
    codes[0] = c
    for l in range(1, W):
        c = (c - row[l - 1] * top) * m + row[l + k - 1]
        codes[l] = c


@njit(cache=True, nogil=True)
def distinct_count_batch(words, k, m):
    S, n = words.shape
    W = n - k + 1
    out = np.empty(S, dtype=np.int64)
    size = _code_space(k, m)
    codes = np.empty(W, dtype=np.int64)
    if size <= _TABLE_CAP:
        stamp = np.full(size, -1, dtype=np.int64)
        for s in range(S):
            _fill_codes(words[s], k, m, codes)
            cnt = 0
            for l in range(W):
                c = codes[l]
                if stamp[c] != s:
                    stamp[c] = s
                    cnt += 1
            out[s] = cnt
        return out
    for s in range(S):
        _fill_codes(words[s], k, m, codes)
        codes.sort()
        cnt = 1
        for i in range(1, W):
            if codes[i] != codes[i - 1]:
                cnt += 1
        out[s] = cnt
    return out


@njit(cache=True, nogil=True)
def collision_stat_batch(words, k, m):
    S, n = words.shape
    W = n - k + 1
    out = np.empty(S, dtype=np.int64)
    size = _code_space(k, m)
    codes = np.empty(W, dtype=np.int64)
    if size <= _TABLE_CAP:
        stamp = np.full(size, -1, dtype=np.int64)
        mult = np.zeros(size, dtype=np.int64)
        fresh = np.empty(W, dtype=np.int64)
        for s in range(S):
            _fill_codes(words[s], k, m, codes)
            nfresh = 0
            for l in range(W):
                c = codes[l]
                if stamp[c] != s:
                    stamp[c] = s
                    mult[c] = 1
                    fresh[nfresh] = c
                    nfresh += 1
                else:
                    mult[c] += 1
            total = np.int64(0)
            for i in range(nfresh):
                v = mult[fresh[i]]
                total += v * v
            out[s] = total
        return out
    for s in range(S):
        _fill_codes(words[s], k, m, codes)
        codes.sort()
        total = np.int64(0)
        run = np.int64(1)
        for i in range(1, W):
            if codes[i] == codes[i - 1]:
                run += 1
            else:
                total += run * run
                run = 1
        total += run * run
        out[s] = total
    return out


@njit(cache=True, nogil=True)
def window_log_sums_batch(words, k, vals):
    S, n = words.shape
    W = n - k + 1
    out = np.empty((S, W), dtype=np.float64)
    cs = np.empty(n + 1, dtype=np.float64)
    for s in range(S):
        cs[0] = 0.0
        for i in range(n):
            cs[i + 1] = cs[i] + vals[words[s, i]]
        for l in range(W):
            out[s, l] = cs[l + k] - cs[l]
    return out


@njit(cache=True, nogil=True)
def _first_mask_row(row, k, m, s, stamp, codes, mask_row):
    W = row.shape[0] - k + 1
    _fill_codes(row, k, m, codes)
    for l in range(W):
        c = codes[l]
        if stamp[c] != s:
            stamp[c] = s
            mask_row[l] = True
        else:
            mask_row[l] = False


@njit(cache=True, nogil=True)
def _first_mask_row_sorted(row, k, m, codes, comb, mask_row):
    W = row.shape[0] - k + 1
    _fill_codes(row, k, m, codes)
    for l in range(W):
        comb[l] = codes[l] * (W + 1) + l
        mask_row[l] = False
    comb.sort()
    prev = np.int64(-1)
    for i in range(W):
        cp = comb[i] // (W + 1)
        if cp != prev:
            mask_row[comb[i] % (W + 1)] = True
            prev = cp


@njit(cache=True, nogil=True)
def first_window_mask_batch(words, k, m):
    S, n = words.shape
    W = n - k + 1
    mask = np.zeros((S, W), dtype=np.bool_)
    codes = np.empty(W, dtype=np.int64)
    size = _code_space(k, m)
    if size <= _TABLE_CAP:
        stamp = np.full(size, -1, dtype=np.int64)
        for s in range(S):
            _first_mask_row(words[s], k, m, s, stamp, codes, mask[s])
    else:
        comb = np.empty(W, dtype=np.int64)
        for s in range(S):
            _first_mask_row_sorted(words[s], k, m, codes, comb, mask[s])
    return mask


@njit(cache=True, nogil=True)
def good_windows_batch(words, k, m, logr, logp, rlo, rhi, plo, phi, n10, n20,
                       check_bands):
    S, n = words.shape
    W = n - k + 1
    chosen = np.zeros((S, W), dtype=np.bool_)
    has = np.zeros(S, dtype=np.bool_)
    distinct = np.empty(S, dtype=np.int64)
    codes = np.empty(W, dtype=np.int64)
    comb = np.empty(W, dtype=np.int64)
    cs = np.empty(n + 1, dtype=np.float64)
    cp = np.empty(n + 1, dtype=np.float64)
    size = _code_space(k, m)
    table = size <= _TABLE_CAP
    stamp = np.full(size if table else 1, -1, dtype=np.int64)
    for s in range(S):
        row = words[s]
        if table:
            _first_mask_row(row, k, m, s, stamp, codes, chosen[s])
        else:
            _first_mask_row_sorted(row, k, m, codes, comb, chosen[s])
        d = 0
        for l in range(W):
            if chosen[s, l]:
                d += 1
        distinct[s] = d
        if check_bands:
            cs[0] = 0.0
            cp[0] = 0.0
            for i in range(n):
                cs[i + 1] = cs[i] + logr[row[i]]
                cp[i + 1] = cp[i] + logp[row[i]]
        surv = 0
        for l in range(W):
            if not chosen[s, l]:
                continue
            ok = True
            if check_bands:
                sr = cs[l + k] - cs[l]
                sp = cp[l + k] - cp[l]
                ok = (sr >= rlo) and (sr <= rhi) and (sp >= plo) and (sp <= phi)
            chosen[s, l] = ok
            if ok:
                surv += 1
        if d >= n10 and surv >= n20:
            has[s] = True
        else:
            for l in range(W):
                chosen[s, l] = False
    return has, chosen, distinct


@njit(cache=True, nogil=True)
def bad_window_count_batch(words, k, logr, logp, rlo, rhi, plo, phi):
    S, n = words.shape
    W = n - k + 1
    out = np.empty(S, dtype=np.int64)
    cs = np.empty(n + 1, dtype=np.float64)
    cp = np.empty(n + 1, dtype=np.float64)
    for s in range(S):
        cs[0] = 0.0
        cp[0] = 0.0
        for i in range(n):
            cs[i + 1] = cs[i] + logr[words[s, i]]
            cp[i + 1] = cp[i] + logp[words[s, i]]
        cnt = 0
        for l in range(W):
            sr = cs[l + k] - cs[l]
            sp = cp[l + k] - cp[l]
            if sr < rlo or sr > rhi or sp < plo or sp > phi:
                cnt += 1
        out[s] = cnt
    return out


@njit(cache=True, nogil=True)
def tail_ratio_products(words, word_ids, ls, ratios):
    N = word_ids.shape[0]
    n = words.shape[1]
    out = np.ones(N, dtype=np.float64)
    for j in range(N):
        w = word_ids[j]
        for i in range(ls[j], n):
            out[j] = out[j] * ratios[words[w, i]]
    return out


@njit(cache=True, nogil=True)
def extension_scan_batch(words, word_ids, ls, ratios, g2_value, max_steps):
    N = word_ids.shape[0]
    n = words.shape[1]
    M = np.zeros(N, dtype=np.int64)
    ok = np.zeros(N, dtype=np.bool_)
    for j in range(N):
        w = word_ids[j]
        l = ls[j]
        T = 1.0
        for i in range(l, n):
            T = T * ratios[words[w, i]]
        T = T * g2_value
        period = n - l
        R = 1.0
        for step in range(1, max_steps + 1):
            R = R * ratios[words[w, l + ((step - 1) % period)]]
            if R < T:
                M[j] = step
                ok[j] = True
                break
    return M, ok


@njit(cache=True, nogil=True)
def assemble_cylinders(words, word_ids, ls, Ms, prefix, m, bits):
    N = word_ids.shape[0]
    n = words.shape[1]
    c_len = prefix.shape[0]
    keys = np.zeros(N, dtype=np.uint64)
    lengths = np.empty(N, dtype=np.int64)
    counts = np.zeros((N, m), dtype=np.int32)
    for j in range(N):
        w = word_ids[j]
        l = ls[j]
        period = n - l
        L = c_len + l + Ms[j]
        lengths[j] = L
        key = np.uint64(0)
        pos_out = 0
        for i in range(c_len):
            key |= np.uint64(prefix[i]) << np.uint64(64 - bits * (pos_out + 1))
            counts[j, prefix[i]] += 1
            pos_out += 1
        for step in range(l + Ms[j]):
            if step < l:
                sym = words[w, step]
            else:
                sym = words[w, l + ((step - l) % period)]
            key |= np.uint64(sym) << np.uint64(64 - bits * (pos_out + 1))
            counts[j, sym] += 1
            pos_out += 1
        keys[j] = key
    return keys, lengths, counts

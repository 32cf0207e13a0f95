"""Enumeration cache: one .npz per (system content hash, depth).

Layout version 1: string arrays value, code, and integer arrays q_int, n, l,
reduced_q, certified, plus scalars layout_version, ifs_key, depth, partial.
Cache hits are verified by recomputing one deterministic entry.
"""

from __future__ import annotations

import os

import numpy as np

from .ifs import IFSystem
from .rationals import rational_point
from .util import content_hash
from .words import code_from_str, code_to_str

LAYOUT_VERSION = 1


def cache_path(out_dir: str, ifs: IFSystem, depth: int) -> str:
    return os.path.join(out_dir, "cache", f"enum_{content_hash(ifs.content_key())}_d{depth}.npz")


def _value_str(value) -> str:
    return ",".join(f"{v.numerator}/{v.denominator}" for v in value)


def save_enumeration(path: str, ifs: IFSystem, depth: int, points, partial: bool):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    np.savez_compressed(
        path,
        layout_version=np.int64(LAYOUT_VERSION),
        ifs_key=np.str_(ifs.content_key()),
        depth=np.int64(depth),
        partial=np.bool_(partial),
        value=np.array([_value_str(pt.value) for pt in points], dtype=np.str_),
        code=np.array([code_to_str(ifs, pt.canonical_code) for pt in points], dtype=np.str_),
        q_int=np.array([str(pt.q_int) for pt in points], dtype=np.str_),
        n_param=np.array([pt.n_param for pt in points], dtype=np.int64),
        l_param=np.array([pt.l_param for pt in points], dtype=np.int64),
        reduced_q=np.array([str(pt.reduced_q) for pt in points], dtype=np.str_),
        certified=np.array([pt.certified for pt in points], dtype=bool),
    )


def load_enumeration(path: str, ifs: IFSystem, depth: int):
    """Rows from a verified cache hit, or None on miss/stale/corrupt entry.

    Returns (rows, partial) where each row mirrors the CSV columns. One entry,
    chosen deterministically from the content hash, is recomputed and compared.
    """
    if not os.path.exists(path):
        return None
    try:
        data = np.load(path, allow_pickle=False)
    except Exception:
        return None
    if int(data["layout_version"]) != LAYOUT_VERSION:
        return None
    if str(data["ifs_key"]) != ifs.content_key() or int(data["depth"]) != depth:
        return None
    count = len(data["value"])
    if count:
        probe = int(content_hash(f"{ifs.content_key()}|{depth}"), 16) % count
        code = code_from_str(ifs, str(data["code"][probe]))
        pt = rational_point(ifs, code)
        if str(pt.q_int) != str(data["q_int"][probe]):
            return None
    rows = [
        {
            "value": str(data["value"][i]),
            "code": str(data["code"][i]),
            "q_int": str(data["q_int"][i]),
            "n": int(data["n_param"][i]),
            "l": int(data["l_param"][i]),
            "reduced_q": str(data["reduced_q"][i]),
            "certified": bool(data["certified"][i]),
        }
        for i in range(count)
    ]
    return rows, bool(data["partial"])


def rows_of_points(ifs: IFSystem, points) -> list:
    return [
        {
            "value": _value_str(pt.value),
            "code": code_to_str(ifs, pt.canonical_code),
            "q_int": str(pt.q_int),
            "n": pt.n_param,
            "l": pt.l_param,
            "reduced_q": str(pt.reduced_q),
            "certified": pt.certified,
        }
        for pt in points
    ]

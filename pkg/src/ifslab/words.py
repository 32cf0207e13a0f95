"""Words over the alphabet, eventually periodic codes, and the projection map.

A word is a tuple of symbol indexes into the IFS alphabet. An eventually
periodic code u|v denotes the infinite sequence u v v v ...; these are exactly
the codes of rational points for integer-form systems.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Tuple

import numpy as np

from .ifs import IFSystem, ProbabilityVector

Word = Tuple[int, ...]

__all__ = [
    "Word",
    "EpCode",
    "canonicalize",
    "primitive_root",
    "unroll",
    "project_exact",
    "project_float",
    "cylinder_measure",
    "cylinder_ratio",
    "cylinder_diam",
    "sample_code",
    "sample_codes",
    "word_from_labels",
    "labels_of",
    "code_to_str",
    "code_from_str",
    "all_words_matrix",
]


@dataclass(frozen=True)
class EpCode:
    """Eventually periodic code u v^infinity with nonempty period v.

    Canonical instances (see canonicalize) have a primitive v and a minimal u:
    the last symbol of u differs from the last symbol of v.
    """

    u: Word
    v: Word

    def __post_init__(self):
        if len(self.v) == 0:
            raise ValueError("period must be nonempty")

    @property
    def preperiod_len(self) -> int:
        return len(self.u)

    @property
    def period_len(self) -> int:
        return len(self.v)


def primitive_root(v: Word) -> Word:
    """Shortest word whose power equals v."""
    n = len(v)
    for p in range(1, n + 1):
        if n % p == 0 and v[:p] * (n // p) == tuple(v):
            return tuple(v[:p])
    return tuple(v)


def canonicalize(u: Sequence[int], v: Sequence[int]) -> EpCode:
    """Unique normal form of u v^infinity: primitive period, minimal preperiod.

    While the preperiod ends with the period's last symbol, that symbol is
    rotated to the front of the period and dropped from the preperiod.
    """
    v = primitive_root(tuple(v))
    u = list(u)
    while u and u[-1] == v[-1]:
        v = (v[-1],) + v[:-1]
        u.pop()
    return EpCode(tuple(u), v)


def unroll(code: EpCode, n: int) -> Word:
    """First n symbols of the infinite sequence u v^infinity."""
    out = list(code.u[:n])
    i = 0
    while len(out) < n:
        out.append(code.v[i % len(code.v)])
        i += 1
    return tuple(out)


def _compose_exact(ifs: IFSystem, word: Iterable[int]):
    """Exact (scale, translation) of phi_word for integer-form systems."""
    scale = Fraction(1)
    trans = [Fraction(0)] * ifs.dim
    for a in word:
        m = ifs.maps[a]
        ra = m.exact_ratio()
        ta = m.exact_translation()
        for i in range(ifs.dim):
            trans[i] += scale * ta[i]
        scale *= ra
    return scale, tuple(trans)


def project_exact(ifs: IFSystem, code: EpCode) -> tuple:
    """Exact rational value of pi(u v^infinity) for integer-form systems."""
    if not ifs.exact_mode:
        raise ValueError("project_exact requires every map to carry an exact form")
    rv, tv = _compose_exact(ifs, code.v)
    y = tuple(t / (1 - rv) for t in tv)  # fixed point of phi_v
    ru, tu = _compose_exact(ifs, code.u)
    return tuple(ru * yi + ti for yi, ti in zip(y, tu))


def project_float(ifs: IFSystem, prefix: Sequence[int]):
    """(point, error_bound): phi_prefix applied to the attractor center.

    The true projection of any extension of the prefix lies within error_bound
    = prod(r) * diam_upper of the returned point.
    """
    if len(prefix) == 0:
        raise ValueError("prefix must be nonempty")
    z = np.asarray(ifs.bounds.center, dtype=float)
    scale = 1.0
    for a in reversed(tuple(prefix)):
        z = ifs.maps[a].apply(z)
    for a in prefix:
        scale *= ifs.maps[a].ratio
    return z, scale * ifs.bounds.diam_upper


def cylinder_measure(p: ProbabilityVector, word: Sequence[int]):
    """Bernoulli measure of [word]: the product of the symbol weights (1 for the empty word)."""
    out = Fraction(1) if p.is_exact else 1.0
    for a in word:
        out = out * p.weights[a]
    return out


def cylinder_ratio(ifs: IFSystem, word: Sequence[int]):
    """Product of the contraction ratios along word; exact Fraction in exact mode."""
    if ifs.exact_mode:
        out = Fraction(1)
        for a in word:
            out *= ifs.maps[a].exact_ratio()
        return out
    out = 1.0
    for a in word:
        out *= ifs.maps[a].ratio
    return out


def cylinder_diam(ifs: IFSystem, word: Sequence[int]) -> float:
    """Diam(X_word) = prod(r) * Diam(X), using the configured diameter proxy."""
    return float(cylinder_ratio(ifs, word)) * ifs.diam


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, index & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_code(p: ProbabilityVector, length: int, seed: int, index: int = 0) -> np.ndarray:
    """Deterministic i.i.d. word draw: identical (seed, index) gives an identical word.

    Counter-based (Philox keyed by (seed, index)), so draws are independent of
    chunking and thread count.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = _sample_rng(seed, index)
    cum = np.cumsum(p.floats)
    cum[-1] = 1.0
    u = rng.random(length)
    return np.searchsorted(cum, u, side="right").astype(np.int64)


def sample_codes(p: ProbabilityVector, length: int, n_samples: int, seed: int,
                 start_index: int = 0) -> np.ndarray:
    """(n_samples, length) matrix of sample_code draws at consecutive indexes."""
    out = np.empty((n_samples, length), dtype=np.int64)
    cum = np.cumsum(p.floats)
    cum[-1] = 1.0
    for i in range(n_samples):
        rng = _sample_rng(seed, start_index + i)
        out[i] = np.searchsorted(cum, rng.random(length), side="right")
    return out


def word_from_labels(ifs: IFSystem, labels: Sequence[str]) -> Word:
    return tuple(ifs.index_of(lab) for lab in labels)


def labels_of(ifs: IFSystem, word: Sequence[int]) -> tuple:
    return tuple(ifs.labels[a] for a in word)


def _join_labels(labels: Sequence[str]) -> str:
    if all(len(s) == 1 for s in labels):
        return "".join(labels)
    return ",".join(labels)


def code_to_str(ifs: IFSystem, code: EpCode) -> str:
    """Serialize as 'u|v' over symbol labels (e.g. '2|1' for 2 * 1^inf)."""
    return f"{_join_labels(labels_of(ifs, code.u))}|{_join_labels(labels_of(ifs, code.v))}"


def _split_labels(ifs: IFSystem, s: str) -> Word:
    if not s:
        return ()
    parts = s.split(",") if "," in s else list(s)
    return word_from_labels(ifs, parts)


def code_from_str(ifs: IFSystem, s: str) -> EpCode:
    if "|" not in s:
        raise ValueError(f"code string must look like 'u|v', got {s!r}")
    u_s, v_s = s.split("|", 1)
    return EpCode(_split_labels(ifs, u_s), _split_labels(ifs, v_s))


def all_words_matrix(n_symbols: int, length: int) -> np.ndarray:
    """(n_symbols^length, length) matrix of every word of the given length.

    Row i holds the base-n_symbols digits of i, most significant first, so rows
    are in lexicographic order.
    """
    count = n_symbols ** length
    idx = np.arange(count, dtype=np.int64)
    out = np.empty((count, length), dtype=np.int64)
    for pos in range(length - 1, -1, -1):
        out[:, pos] = idx % n_symbols
        idx //= n_symbols
    return out

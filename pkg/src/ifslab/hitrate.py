"""Periodic-target search and empirical hit-rate curves for the limsup sets.

A level-n target is pi(w[:l] (w[l:])^inf) for a length-n word w and split l.
Membership experiments sample points of the self-similar measure and record
the first level at which a target falls within the configured radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ifs import IFSystem, ProbabilityVector, natural_weights
from .rates import RateFunction, TargetFunction
from .rationals import Representation, rational_point
from .util import chunk_spans
from .words import all_words_matrix, canonicalize, project_exact, sample_code

__all__ = [
    "nearby_periodic_points",
    "nearby_periodic_points_bruteforce",
    "hit_rate",
    "first_moment_tail",
    "HitCurve",
    "SearchBudgetExceeded",
]

_GUARD = 1e-12  # absolute-distance slack so pruning never beats the leaf test


class SearchBudgetExceeded(RuntimeError):
    pass


def _hull_distance(ifs: IFSystem, scale: float, trans: np.ndarray,
                   ortho, x: np.ndarray) -> float:
    """Distance from x to the hull (box or ball) of the cylinder with this map."""
    b = ifs.bounds
    if b.kind == "box" and ortho is None:
        lo = trans + scale * np.asarray([float(v) for v in b.lo])
        hi = trans + scale * np.asarray([float(v) for v in b.hi])
        gap = np.maximum(0.0, np.maximum(lo - x, x - hi))
        return float(np.linalg.norm(gap))
    c = np.asarray(b.center)
    cw = (scale * (ortho @ c) if ortho is not None else scale * c) + trans
    return max(0.0, float(np.linalg.norm(x - cw)) - scale * b.radius)


def _suffix_targets(ifs: IFSystem, word: tuple) -> list:
    """Float targets pi(word[:l] (word[l:])^inf) for every l, via suffix fixed points."""
    d = ifs.dim
    n = len(word)
    # composed (scale, ortho, trans) of suffixes, built right to left
    suffix = [None] * (n + 1)
    scale, ortho, trans = 1.0, np.eye(d), np.zeros(d)
    suffix[n] = (scale, ortho, trans)
    for i in range(n - 1, -1, -1):
        m = ifs.maps[word[i]]
        Oa = np.asarray(m.orthogonal) if m.orthogonal is not None else np.eye(d)
        trans = m.ratio * (Oa @ trans) + np.asarray(m.translation)
        ortho = Oa @ ortho
        scale = m.ratio * scale
        suffix[i] = (scale, ortho, trans)
    out = []
    pre_scale, pre_ortho, pre_trans = 1.0, np.eye(d), np.zeros(d)
    for l in range(n):
        s_scale, s_ortho, s_trans = suffix[l]
        y = np.linalg.solve(np.eye(d) - s_scale * s_ortho, s_trans)  # fixed point
        target = pre_scale * (pre_ortho @ y) + pre_trans
        out.append(target)
        m = ifs.maps[word[l]]
        Oa = np.asarray(m.orthogonal) if m.orthogonal is not None else np.eye(d)
        pre_trans = pre_trans + pre_scale * (pre_ortho @ np.asarray(m.translation))
        pre_ortho = pre_ortho @ Oa
        pre_scale = pre_scale * m.ratio
    return out


def nearby_periodic_points(ifs: IFSystem, x, n: int, radius: float,
                           node_budget: int = 10 ** 6):
    """Complete list of level-n targets within `radius` of x (strict inequality).

    Branch-and-bound over the cylinder tree: a prefix w is pruned when
    dist(x, hull(X_w)) exceeds radius + Diam(X_w); every surviving length-n
    word is tested at every preperiod split l. Returns (Representation, target
    point, distance) triples in lexicographic (word, l) order.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    x = np.asarray(x, dtype=float)
    D = ifs.bounds.diam_upper
    results = []
    nodes = 0
    d = ifs.dim

    def descend(word, scale, ortho, trans):
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise SearchBudgetExceeded(f"node budget {node_budget} exceeded")
        dist = _hull_distance(ifs, scale, trans, ortho, x)
        if dist > radius + scale * D + _GUARD:
            return
        if len(word) == n:
            for l, target in enumerate(_suffix_targets(ifs, word)):
                dd = float(np.linalg.norm(x - target))
                if dd < radius:
                    results.append((Representation(l=l, n=n, word=word), target, dd))
            return
        for a in range(ifs.size):
            m = ifs.maps[a]
            if m.orthogonal is None and ortho is None:
                descend(word + (a,), scale * m.ratio,
                        None, trans + scale * np.asarray(m.translation))
            else:
                O = ortho if ortho is not None else np.eye(d)
                Oa = np.asarray(m.orthogonal) if m.orthogonal is not None else np.eye(d)
                descend(word + (a,), scale * m.ratio, O @ Oa,
                        trans + scale * (O @ np.asarray(m.translation)))

    descend((), 1.0, None, np.zeros(d))
    return results


def nearby_periodic_points_bruteforce(ifs: IFSystem, x, n: int, radius: float):
    """Exhaustive oracle over all #A^n words and every split (for n small)."""
    x = np.asarray(x, dtype=float)
    out = []
    for row in all_words_matrix(ifs.size, n):
        word = tuple(int(v) for v in row)
        for l, target in enumerate(_suffix_targets(ifs, word)):
            dd = float(np.linalg.norm(x - target))
            if dd < radius:
                out.append((Representation(l=l, n=n, word=word), target, dd))
    return out


@dataclass
class HitCurve:
    levels: np.ndarray
    cumulative: np.ndarray       # fraction of samples hit by each level
    first_hit: np.ndarray        # per-sample first hitting level, -1 when none
    samples: int
    aborted: bool = False


def _cylinder_hit(ifs: IFSystem, x, n: int, g_level: float, r_max: float,
                  node_budget: int) -> bool:
    """Any level-n target with ||x - target|| < Diam(X_a) * g(n)?"""
    if g_level <= 0:
        return False
    D = ifs.bounds.diam_upper
    x = np.asarray(x, dtype=float)
    d = ifs.dim
    nodes = 0

    def descend(depth, scale, ortho, trans, word):
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise SearchBudgetExceeded(f"node budget {node_budget} exceeded")
        rad_max = D * g_level * scale * (r_max ** (n - depth))
        dist = _hull_distance(ifs, scale, trans, ortho, x)
        if dist > rad_max + scale * D + _GUARD:
            return False
        if depth == n:
            rad = D * g_level * scale
            for target in _suffix_targets(ifs, word):
                if float(np.linalg.norm(x - target)) < rad:
                    return True
            return False
        for a in range(ifs.size):
            m = ifs.maps[a]
            if m.orthogonal is None and ortho is None:
                hit = descend(depth + 1, scale * m.ratio, None,
                              trans + scale * np.asarray(m.translation), word + (a,))
            else:
                O = ortho if ortho is not None else np.eye(d)
                Oa = np.asarray(m.orthogonal) if m.orthogonal is not None else np.eye(d)
                hit = descend(depth + 1, scale * m.ratio, O @ Oa,
                              trans + scale * (O @ np.asarray(m.translation)), word + (a,))
            if hit:
                return True
        return False

    return descend(0, 1.0, None, np.zeros(d), ())


def _intrinsic_hit(ifs: IFSystem, x, n: int, target: TargetFunction,
                   node_budget: int, qint_cache: dict) -> bool:
    """Any rational point with minimal total length n within its intrinsic radius?"""
    q_min = min(m.exact[1] for m in ifs.maps)
    g = target.rate
    if target.mode == "intrinsic-equi":
        rad_bound = g.value(q_min ** (n - 1) * (q_min - 1)) if n > 1 else g.value(q_min - 1)
    else:
        rad_bound = g.value(n) / (q_min ** (n - 1))
    if rad_bound <= 0:
        return False
    cands = nearby_periodic_points(ifs, x, n, rad_bound, node_budget)
    x = np.asarray(x, dtype=float)
    for rep, point, dist in cands:
        code = canonicalize(rep.word[: rep.l], rep.word[rep.l:])
        value = project_exact(ifs, code)
        rec = qint_cache.get(value)
        if rec is None:
            pt = rational_point(ifs, code)
            rec = (pt.q_int, pt.n_param)
            qint_cache[value] = rec
        q_int, n_min = rec
        if n_min != n:
            continue  # counted at its own minimal level
        if target.mode == "intrinsic-equi":
            rad = g.value(q_int)
        else:
            rad = g.value(n_min) / q_int
        exact_pt = np.asarray([float(v) for v in value])
        if float(np.linalg.norm(x - exact_pt)) < rad:
            return True
    return False


def hit_rate(ifs: IFSystem, target: TargetFunction, N0: int, N1: int,
             samples: int, seed: int, p: Optional[ProbabilityVector] = None,
             node_budget: int = 10 ** 6, threads: int = 1) -> HitCurve:
    """First-hit levels of measure-distributed samples against the target family.

    Samples are projections of long measure-random prefixes; for each the least
    level in [N0, N1] with a strict hit is recorded. When a per-level search
    exhausts the node budget the curve is marked aborted: samples completed
    before the failing chunk keep their results, the rest count as unhit.
    """
    if samples < 100:
        raise ValueError("samples must be >= 100")
    if N0 > N1:
        raise ValueError("need N0 <= N1")
    if p is None:
        p = natural_weights(ifs)
    if target.mode != "cylinder":
        if not ifs.exact_mode:
            raise ValueError("intrinsic modes need an integer-form system")
        if not target.rate.is_non_increasing(hi=1000):
            raise ValueError("intrinsic modes need a non-increasing rate")
    r_max = float(ifs.ratios.max())
    prefix_len = max(N1 + 5, int(math.ceil(math.log(1e-12) / math.log(r_max))))
    D = ifs.bounds.diam_upper
    qint_cache: dict = {}
    aborted = False

    def one_sample(i: int) -> int:
        code = sample_code(p, prefix_len, seed, index=i)
        z = np.asarray(ifs.bounds.center, dtype=float)
        for a in reversed(code):
            z = ifs.maps[a].apply(z)
        for n in range(N0, N1 + 1):
            if target.mode == "cylinder":
                if _cylinder_hit(ifs, z, n, target.rate.value(n), r_max, node_budget):
                    return n
            else:
                if _intrinsic_hit(ifs, z, n, target, node_budget, qint_cache):
                    return n
        return -1

    def run(a, b):
        out = np.empty(b - a, dtype=np.int64)
        for i in range(a, b):
            out[i - a] = one_sample(i)
        return out

    # chunks complete in index order; on a budget abort the already-finished
    # prefix is kept (deterministic) and the remaining samples are marked unhit
    from concurrent.futures import ThreadPoolExecutor

    spans = chunk_spans(samples, 128)
    parts = []

    def fill_rest(start_idx):
        for a, b in spans[start_idx:]:
            parts.append(np.full(b - a, -1, dtype=np.int64))

    if threads <= 1 or len(spans) <= 1:
        for idx, (a, b) in enumerate(spans):
            try:
                parts.append(run(a, b))
            except SearchBudgetExceeded:
                aborted = True
                fill_rest(idx)
                break
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            it = ex.map(lambda s: run(*s), spans)
            idx = 0
            while idx < len(spans):
                try:
                    parts.append(next(it))
                    idx += 1
                except SearchBudgetExceeded:
                    aborted = True
                    fill_rest(idx)
                    break
                except StopIteration:
                    break
    first_hit = np.concatenate(parts)
    levels = np.arange(N0, N1 + 1)
    cum = np.array([np.sum((first_hit >= 0) & (first_hit <= n)) for n in levels])
    return HitCurve(levels=levels, cumulative=cum / samples, first_hit=first_hit,
                    samples=samples, aborted=aborted)


def min_first_level_gap(ifs: IFSystem) -> Optional[float]:
    """Smallest positive gap between first-level cylinder hulls (1-d only)."""
    if ifs.dim != 1 or not ifs.homothety:
        return None
    b = ifs.bounds
    lo0, hi0 = float(b.lo[0]), float(b.hi[0])
    spans = sorted((m.ratio * lo0 + m.translation[0], m.ratio * hi0 + m.translation[0])
                   for m in ifs.maps)
    gaps = [s2[0] - s1[1] for s1, s2 in zip(spans, spans[1:])]
    pos = [g for g in gaps if g > 0]
    return min(pos) if pos else None


def first_moment_tail(ifs: IFSystem, g: RateFunction, s: float, N0: int, N1: int,
                      ball_constant: Optional[float] = None) -> float:
    """Union bound on the measure of the level-[N0,N1] target neighborhoods.

    Uses mu(B(x,r)) <= 2 (2 r / G)^s for 1-d separated systems, with G the
    smallest first-level gap (an interval shorter than the level-k gap meets at
    most two level-k cylinders). The constant is a diagnostic: supply
    ball_constant to override. Result is clipped at 1.
    """
    if ball_constant is None:
        G = min_first_level_gap(ifs)
        if G is None or G <= 0:
            raise ValueError("no provable ball constant; pass ball_constant explicitly")
        ball_constant = 2.0 * (2.0 / G) ** s
    D = ifs.bounds.diam_upper
    A = float(np.sum(ifs.ratios ** s))
    total = 0.0
    for n in range(N0, N1 + 1):
        total += n * (D * g.value(n)) ** s * A ** n
    return min(1.0, ball_constant * total)

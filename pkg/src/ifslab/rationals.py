"""Rational points of integer-form self-similar sets: eventually periodic
representations, intrinsic denominators, enumeration, and separation checks.

The intrinsic denominator of a point is the minimum over representations
u v^inf (preperiod length l, total length n) of
prod_{j<=l} q_{a_j} * (prod_{l<j<=n} q_{a_j} - 1); a finite search certifies
the global minimum once q_min^n_cap reaches the best value found, since every
length-n representation has denominator >= q_min^(n-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .ifs import IFSystem, detect_exact_overlap
from .words import EpCode, canonicalize, project_exact, unroll

__all__ = [
    "Representation",
    "RationalPoint",
    "representation_denominator",
    "find_representations",
    "intrinsic_denominator",
    "rational_point",
    "enumerate_rationals",
    "reduced_denominator",
    "separation_check",
]

_DEFAULT_CODE_CAP = 10 ** 7
_DEFAULT_NODE_BUDGET = 10 ** 6


@dataclass(frozen=True)
class Representation:
    """One eventually periodic representation: word[:l] (word[l:n])^inf."""

    l: int
    n: int
    word: tuple

    def __post_init__(self):
        if not (0 <= self.l < self.n):
            raise ValueError("need 0 <= l < n")
        if len(self.word) != self.n:
            raise ValueError("word length must equal n")


@dataclass(frozen=True)
class RationalPoint:
    value: tuple  # Fractions, one per coordinate
    canonical_code: EpCode
    reps: tuple
    q_int: int
    n_param: int
    l_param: int
    reduced_q: int
    certified: bool
    search_complete: bool


def representation_denominator(ifs: IFSystem, rep: Representation) -> int:
    """prod_{j<l} q * (prod_{l<=j<n} q - 1) for the representation's word."""
    qs = [ifs.maps[a].exact[1] for a in rep.word]
    pre = math.prod(qs[: rep.l])
    per = math.prod(qs[rep.l:])
    return pre * (per - 1)


def _decomposition_reps(code: EpCode, n_cap: int):
    """All (l, n <= n_cap) splittings of the canonical infinite sequence itself:
    l at least the minimal preperiod and n - l a multiple of the primitive period."""
    L, P = code.preperiod_len, code.period_len
    reps = []
    for n in range(L + P, n_cap + 1):
        w = unroll(code, n)
        for l in range(L, n):
            if (n - l) % P == 0:
                reps.append(Representation(l=l, n=n, word=w))
    return reps


def _exact_box(ifs: IFSystem):
    b = ifs.bounds
    if b.kind != "box" or not ifs.exact_mode:
        raise ValueError("exact cylinder boxes need an integer-form homothety system")
    lo = tuple(Fraction(v) if isinstance(v, Fraction) else Fraction(v).limit_denominator()
               for v in b.lo)
    hi = tuple(Fraction(v) if isinstance(v, Fraction) else Fraction(v).limit_denominator()
               for v in b.hi)
    return lo, hi


def _alternative_code_reps(ifs: IFSystem, x, n_cap: int, budget: int):
    """Branch-and-bound over cylinders whose exact box contains x.

    Yields every (word, l) with n <= n_cap representing x exactly; pruning uses
    exact rational boxes, so nothing valid is discarded. Returns (reps, complete).
    """
    lo0, hi0 = _exact_box(ifs)
    d = ifs.dim
    reps = []
    nodes = 0
    complete = True
    one = Fraction(1)
    zero = tuple(Fraction(0) for _ in range(d))
    stack = [((), one, zero)]
    while stack:
        word, scale, trans = stack.pop()
        nodes += 1
        if nodes > budget:
            complete = False
            break
        n = len(word)
        if n >= 1:
            # exact membership test for every preperiod split of this word
            qs = [ifs.maps[a].exact[1] for a in word]
            for l in range(n):
                # pi(word[:l] (word[l:])^inf) via the suffix fixed point
                rs = Fraction(1)
                ts = list(zero)
                for j in range(l, n):
                    m = ifs.maps[word[j]]
                    ta = m.exact_translation()
                    for i in range(d):
                        ts[i] += rs * ta[i]
                    rs /= qs[j]
                y = tuple(t / (1 - rs) for t in ts)
                rp = Fraction(1)
                tp = list(zero)
                for j in range(l):
                    m = ifs.maps[word[j]]
                    ta = m.exact_translation()
                    for i in range(d):
                        tp[i] += rp * ta[i]
                    rp /= qs[j]
                val = tuple(rp * yi + ti for yi, ti in zip(y, tp))
                if val == tuple(x):
                    reps.append(Representation(l=l, n=n, word=word))
        if n < n_cap:
            for a in range(ifs.size - 1, -1, -1):
                mp = ifs.maps[a]
                ra = mp.exact_ratio()
                ta = mp.exact_translation()
                ns = scale * ra
                nt = tuple(t + scale * v for t, v in zip(trans, ta))
                inside = True
                for i in range(d):
                    clo = nt[i] + ns * lo0[i]
                    chi = nt[i] + ns * hi0[i]
                    if not (clo <= x[i] <= chi):
                        inside = False
                        break
                if inside:
                    stack.append((word + (a,), ns, nt))
    return reps, complete


def _ssc_witnessed(ifs: IFSystem) -> bool:
    key = ifs.content_key()
    hit = _SSC_CACHE.get(key)
    if hit is None:
        hit = separation_check(ifs, depth=3).verdict == "SSC-witnessed"
        _SSC_CACHE[key] = hit
    return hit


_SSC_CACHE: dict = {}


def find_representations(ifs: IFSystem, code, n_cap: int,
                         node_budget: int = _DEFAULT_NODE_BUDGET):
    """All representations of the point coded by `code` with total length <= n_cap.

    For systems witnessed as strongly separated the decompositions of the
    canonical code are complete; otherwise alternative codings of the same
    exact value are searched by branch-and-bound over exact cylinder boxes.
    Returns (reps sorted by (n, l, word), complete_flag).
    """
    if not ifs.exact_mode:
        raise ValueError("representations need an integer-form system")
    if isinstance(code, EpCode):
        code = canonicalize(code.u, code.v)
    else:
        code = canonicalize(*code)
    if n_cap < code.preperiod_len + code.period_len:
        raise ValueError("n_cap smaller than the canonical code length")
    if _ssc_witnessed(ifs):
        reps = _decomposition_reps(code, n_cap)
        complete = True
    else:
        x = project_exact(ifs, code)
        reps, complete = _alternative_code_reps(ifs, x, n_cap, node_budget)
    reps = sorted(set(reps), key=lambda r: (r.n, r.l, r.word))
    return reps, complete


def reduced_denominator(x: Sequence[Fraction]) -> int:
    """LCM of fully reduced coordinate denominators."""
    out = 1
    for xi in x:
        out = out * xi.denominator // math.gcd(out, xi.denominator)
    return out


def rational_point(ifs: IFSystem, code, n_cap: Optional[int] = None,
                   node_budget: int = _DEFAULT_NODE_BUDGET) -> RationalPoint:
    """Assemble the full record for one eventually periodic code.

    When n_cap is omitted it is chosen so that q_min^n_cap reaches the
    denominator of the canonical representation, which certifies the intrinsic
    denominator: any longer representation has a denominator >= q_min^n_cap.
    """
    code = canonicalize(code.u, code.v) if isinstance(code, EpCode) else canonicalize(*code)
    value = project_exact(ifs, code)
    L, P = code.preperiod_len, code.period_len
    base = Representation(l=L, n=L + P, word=unroll(code, L + P))
    first = representation_denominator(ifs, base)
    q_min = min(m.exact[1] for m in ifs.maps)
    if n_cap is None:
        n_cap = max(L + P, int(math.ceil(math.log(first) / math.log(q_min))))
    n_cap = max(n_cap, L + P)
    reps, complete = find_representations(ifs, code, n_cap, node_budget)
    best = None
    for r in reps:
        den = representation_denominator(ifs, r)
        key = (den, r.n, r.l)
        if best is None or key < best[0]:
            best = (key, r)
    q_int, n_param, l_param = best[0]
    certified = (q_min ** n_cap >= q_int) and complete
    return RationalPoint(
        value=value,
        canonical_code=code,
        reps=tuple(reps),
        q_int=q_int,
        n_param=n_param,
        l_param=l_param,
        reduced_q=reduced_denominator(value),
        certified=certified,
        search_complete=complete,
    )


def intrinsic_denominator(ifs: IFSystem, code, n_cap: Optional[int] = None,
                          node_budget: int = _DEFAULT_NODE_BUDGET):
    """(q_int, n, l, certified, complete); ties broken by smaller n then l."""
    pt = rational_point(ifs, code, n_cap, node_budget)
    return pt.q_int, pt.n_param, pt.l_param, pt.certified, pt.search_complete


def enumerate_rationals(ifs: IFSystem, depth: int, code_cap: int = _DEFAULT_CODE_CAP):
    """All distinct rational points with a code of total length <= depth.

    Returns (points sorted by value, partial_flag). Deduplication is by exact
    value, so overlapping systems with many codes per point are handled soundly.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    m = ifs.size
    planned = sum(m ** k * k for k in range(1, depth + 1))
    partial = planned > code_cap
    seen = {}
    emitted = 0
    for total in range(1, depth + 1):
        for widx in range(m ** total):
            digits = []
            w = widx
            for _ in range(total):
                digits.append(w % m)
                w //= m
            digits.reverse()
            for l in range(total):
                emitted += 1
                if emitted > code_cap:
                    partial = True
                    break
                code = canonicalize(tuple(digits[:l]), tuple(digits[l:]))
                key = (code.u, code.v)
                if key in seen:
                    continue
                seen[key] = project_exact(ifs, code)
            if emitted > code_cap:
                break
        if emitted > code_cap:
            break
    by_value = {}
    for (u, v), val in seen.items():
        by_value.setdefault(val, []).append(EpCode(u, v))
    # certification margin: q_min^cap must dominate any depth-length denominator
    q_min = min(mp.exact[1] for mp in ifs.maps)
    q_max = max(mp.exact[1] for mp in ifs.maps)
    cap = max(depth, int(math.ceil(depth * math.log(q_max) / math.log(q_min))))
    points = []
    for val in sorted(by_value):
        codes = sorted(by_value[val], key=lambda c: (len(c.u) + len(c.v), c.u, c.v))
        points.append(rational_point(ifs, codes[0], n_cap=cap))
    return points, partial


def code_of_value(ifs: IFSystem, x, max_total: int = 24,
                  node_budget: int = _DEFAULT_NODE_BUDGET) -> EpCode:
    """An eventually periodic code of the exact rational vector x, if one exists
    with total length <= max_total (shortest found, canonical form)."""
    if not ifs.exact_mode:
        raise ValueError("code search needs an integer-form system")
    x = tuple(Fraction(v) for v in x)
    cap = 2
    while True:
        cap = min(cap, max_total)
        reps, complete = _alternative_code_reps(ifs, x, cap, node_budget)
        if reps:
            best = min(reps, key=lambda r: (r.n, r.l, r.word))
            return canonicalize(best.word[: best.l], best.word[best.l:])
        if cap >= max_total:
            raise ValueError(
                f"no eventually periodic code of {x} with length <= {max_total}"
                + ("" if complete else " (search budget hit)"))
        cap = min(cap * 2, max_total)


@dataclass(frozen=True)
class SeparationResult:
    verdict: str  # "SSC-witnessed" | "overlap-witnessed" | "inconclusive"
    detail: str = ""


def _boxes_at_depth(ifs: IFSystem, top: int, depth: int, lo0, hi0):
    """Exact (or float) boxes of all cylinders top·w with |w| = depth-1."""
    d = ifs.dim
    states = [(ifs.maps[top].exact_ratio() if ifs.exact_mode else ifs.maps[top].ratio,
               ifs.maps[top].exact_translation() if ifs.exact_mode
               else tuple(ifs.maps[top].translation))]
    for _ in range(depth - 1):
        nxt = []
        for scale, trans in states:
            for a in range(ifs.size):
                mp = ifs.maps[a]
                ra = mp.exact_ratio() if ifs.exact_mode else mp.ratio
                ta = mp.exact_translation() if ifs.exact_mode else tuple(mp.translation)
                nxt.append((scale * ra, tuple(t + scale * v for t, v in zip(trans, ta))))
        states = nxt
    return [tuple((t + s * l, t + s * h) for t, l, h in zip(trans, lo0, hi0))
            for s, trans in states]


def _box_gap_sq(b1, b2):
    g = 0
    for (l1, h1), (l2, h2) in zip(b1, b2):
        if l2 > h1:
            g += (l2 - h1) ** 2
        elif l1 > h2:
            g += (l1 - h2) ** 2
    return g


def separation_check(ifs: IFSystem, depth: int = 3) -> SeparationResult:
    """Witness strong separation, witness an overlap, or report inconclusive.

    Separation: refine first-level cylinders down to `depth` and require a
    positive gap between the refined hull unions of distinct top symbols
    (exact comparisons in exact mode, margin 1e-9 otherwise). Overlap: an
    exact-overlap witness or coinciding equal-length cylinder hulls.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not ifs.homothety:
        over = detect_exact_overlap(ifs, depth)
        if over is not None:
            return SeparationResult("overlap-witnessed", f"equal composed maps {over}")
        return SeparationResult("inconclusive", "non-homothety hulls not refined")

    over = detect_exact_overlap(ifs, depth)
    if over is not None:
        return SeparationResult("overlap-witnessed", f"equal composed maps {over}")

    b = ifs.bounds
    if ifs.exact_mode:
        fps = [tuple(Fraction(pi, q - 1) for pi in p) for (p, q) in (m.exact for m in ifs.maps)]
        lo0 = tuple(min(fp[i] for fp in fps) for i in range(ifs.dim))
        hi0 = tuple(max(fp[i] for fp in fps) for i in range(ifs.dim))
        margin = 0
    else:
        lo0 = tuple(b.lo)
        hi0 = tuple(b.hi)
        margin = 1e-18  # squared gap margin (1e-9 per coordinate)

    hull_seen = {}
    for dd in range(1, depth + 1):
        groups = [_boxes_at_depth(ifs, a, dd, lo0, hi0) for a in range(ifs.size)]
        # coinciding equal-length hulls across distinct words
        flat = {}
        for gi, grp in enumerate(groups):
            for bi, box in enumerate(grp):
                if box in flat and flat[box] != (gi, bi):
                    return SeparationResult("overlap-witnessed",
                                            f"coinciding depth-{dd} cylinder hulls")
                flat[box] = (gi, bi)
        min_gap = None
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                for b1 in groups[i]:
                    for b2 in groups[j]:
                        g = _box_gap_sq(b1, b2)
                        if min_gap is None or g < min_gap:
                            min_gap = g
        if min_gap is not None and min_gap > margin:
            return SeparationResult("SSC-witnessed", f"positive gap at depth {dd}")
    return SeparationResult("inconclusive", f"no witness up to depth {depth}")

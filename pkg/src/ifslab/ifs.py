"""Iterated function systems of contracting similarities and their scalar invariants.

All logarithms are natural. The window length used by the word statistics is a
ratio of logs and therefore base-invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "SimilarityMap",
    "IFSystem",
    "ProbabilityVector",
    "AttractorBounds",
    "similarity_dimension",
    "natural_weights",
    "entropy",
    "lyapunov",
    "check_measure_inequality",
    "boundary_weight_two_maps",
    "epsilon_star",
    "detect_exact_overlap",
    "attractor_bounds",
]

_ORTHO_TOL = 1e-12
_OVERLAP_TABLE_CAP = 1 << 22


@dataclass(frozen=True)
class SimilarityMap:
    """A contracting similarity x -> ratio * O x + translation on R^d.

    ``exact`` is an optional integer form (p, q) meaning x -> (x + p) / q with
    q >= 2; it forces ratio == 1/q and an identity orthogonal part.
    """

    ratio: float
    translation: tuple
    orthogonal: Optional[tuple] = None
    exact: Optional[tuple] = None  # (p: tuple[int,...], q: int)

    def __post_init__(self):
        if not (0.0 < self.ratio < 1.0):
            raise ValueError(f"contraction ratio must lie in (0,1), got {self.ratio}")
        if self.exact is not None:
            p, q = self.exact
            if q < 2:
                raise ValueError(f"exact form requires integer q >= 2, got q={q}")
            if len(p) != len(self.translation):
                raise ValueError("exact translation vector has wrong dimension")
            if self.orthogonal is not None:
                raise ValueError("exact form requires an identity orthogonal part")
            if self.ratio != 1.0 / q:
                raise ValueError("exact form requires ratio == 1/q exactly")
        if self.orthogonal is not None:
            O = np.asarray(self.orthogonal, dtype=float)
            d = len(self.translation)
            if O.shape != (d, d):
                raise ValueError("orthogonal part has wrong shape")
            if not np.all(np.abs(O.T @ O - np.eye(d)) <= _ORTHO_TOL):
                raise ValueError("orthogonal part is not orthogonal to 1e-12")

    @classmethod
    def from_exact(cls, p: Sequence[int], q: int) -> "SimilarityMap":
        p = tuple(int(v) for v in p)
        if q < 2:
            raise ValueError(f"exact form requires integer q >= 2, got q={q}")
        return cls(
            ratio=1.0 / q,
            translation=tuple(v / q for v in p),
            orthogonal=None,
            exact=(p, int(q)),
        )

    @classmethod
    def from_float(cls, ratio, translation, orthogonal=None) -> "SimilarityMap":
        t = tuple(float(v) for v in translation)
        O = None if orthogonal is None else tuple(tuple(float(v) for v in row) for row in orthogonal)
        return cls(ratio=float(ratio), translation=t, orthogonal=O)

    @property
    def dim(self) -> int:
        return len(self.translation)

    @property
    def is_homothety(self) -> bool:
        return self.orthogonal is None

    def exact_ratio(self) -> Fraction:
        if self.exact is None:
            raise ValueError("map has no exact form")
        return Fraction(1, self.exact[1])

    def exact_translation(self) -> tuple:
        if self.exact is None:
            raise ValueError("map has no exact form")
        p, q = self.exact
        return tuple(Fraction(v, q) for v in p)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.orthogonal is None:
            return self.ratio * x + np.asarray(self.translation)
        return self.ratio * (np.asarray(self.orthogonal) @ x) + np.asarray(self.translation)

    def apply_exact(self, x: Sequence[Fraction]) -> tuple:
        p, q = self.exact
        return tuple((xi + pi) / q for xi, pi in zip(x, p))


@dataclass(frozen=True)
class IFSystem:
    """A finite labeled family of contracting similarities sharing one ambient dimension."""

    labels: tuple
    maps: tuple
    dim: int
    diam_mode: str = "upper"  # "upper" | "refined": which Diam(X) proxy Psi uses

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ValueError("an IFS needs at least 2 maps")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("symbol labels must be distinct")
        if len(self.maps) != len(self.labels):
            raise ValueError("one map per label required")
        for m in self.maps:
            if m.dim != self.dim:
                raise ValueError("all maps must share the ambient dimension")
        if self.diam_mode not in ("upper", "refined"):
            raise ValueError(f"unknown diam_mode {self.diam_mode!r}")

    @classmethod
    def from_maps(cls, maps, labels=None, diam_mode="upper") -> "IFSystem":
        maps = tuple(maps)
        if labels is None:
            labels = tuple(str(i + 1) for i in range(len(maps)))
        return cls(labels=tuple(labels), maps=maps, dim=maps[0].dim, diam_mode=diam_mode)

    @property
    def size(self) -> int:
        return len(self.maps)

    @cached_property
    def ratios(self) -> np.ndarray:
        return np.array([m.ratio for m in self.maps], dtype=float)

    @cached_property
    def equicontractive(self) -> bool:
        r = self.ratios
        return bool(np.all(r == r[0]))

    @cached_property
    def exact_mode(self) -> bool:
        return all(m.exact is not None for m in self.maps)

    @cached_property
    def homothety(self) -> bool:
        return all(m.is_homothety for m in self.maps)

    @cached_property
    def bounds(self) -> "AttractorBounds":
        return attractor_bounds(self)

    @property
    def diam(self) -> float:
        b = self.bounds
        return b.diam_upper if self.diam_mode == "upper" else b.diam_refined

    def index_of(self, label: str) -> int:
        return self.labels.index(label)

    def content_key(self) -> str:
        """Stable text key for caching: exact forms verbatim, floats via repr."""
        parts = [f"d={self.dim}"]
        for lab, m in zip(self.labels, self.maps):
            if m.exact is not None:
                p, q = m.exact
                parts.append(f"{lab}:exact:{','.join(map(str, p))}/{q}")
            else:
                t = ",".join(repr(v) for v in m.translation)
                o = "" if m.orthogonal is None else ";".join(
                    ",".join(repr(v) for v in row) for row in m.orthogonal
                )
                parts.append(f"{lab}:float:{m.ratio!r}:{t}:{o}")
        return "|".join(parts)


@dataclass(frozen=True)
class ProbabilityVector:
    """Per-symbol weights in (0,1) summing to 1 (exactly when rational-valued)."""

    weights: tuple

    def __post_init__(self):
        for w in self.weights:
            if not (0 < w < 1):
                raise ValueError(f"weights must lie strictly in (0,1), got {w}")
        total = sum(self.weights)
        if self.is_exact:
            if total != 1:
                raise ValueError(f"exact weights must sum to 1, got {total}")
        elif abs(float(total) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 within 1e-12, got {float(total)}")

    @classmethod
    def uniform(cls, n: int) -> "ProbabilityVector":
        return cls(tuple(Fraction(1, n) for _ in range(n)))

    @property
    def is_exact(self) -> bool:
        return all(isinstance(w, Fraction) for w in self.weights)

    @property
    def size(self) -> int:
        return len(self.weights)

    @cached_property
    def floats(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights], dtype=float)

    def __getitem__(self, i):
        return self.weights[i]


@dataclass(frozen=True)
class AttractorBounds:
    """Computable enclosure of the attractor X.

    ``kind`` is "box" (axis-aligned, available for homothety systems; exact
    rational endpoints in exact mode) or "ball". diam_refined is a lower bound
    on Diam(X) from depth-D sample points, diam_upper an upper bound, and
    refine_error = 2 * r_max^D * R the gap bookkeeping.
    """

    kind: str
    lo: Optional[tuple] = None
    hi: Optional[tuple] = None
    center: tuple = ()
    radius: float = 0.0
    diam_upper: float = 0.0
    diam_refined: float = 0.0
    refine_error: float = 0.0
    depth: int = 0
    diam_upper_exact: Optional[Fraction] = None  # 1-d exact boxes only


def similarity_dimension(ifs: IFSystem, tol: float = 1e-12) -> float:
    """Root s of sum_a r_a^s = 1; closed form when equicontractive, else bisection."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    r = ifs.ratios
    if ifs.equicontractive:
        return math.log(len(r)) / (-math.log(r[0]))

    def f(s):
        return float(np.sum(r ** s)) - 1.0

    lo, hi = 1e-9, ifs.dim + 10.0
    while f(hi) > 0:  # ratios near 1 can push the root past the initial bracket
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def natural_weights(ifs: IFSystem) -> ProbabilityVector:
    """Weights p_a = r_a^dim_S; exact uniform Fractions when equicontractive."""
    if ifs.equicontractive:
        return ProbabilityVector.uniform(ifs.size)
    s = similarity_dimension(ifs)
    w = ifs.ratios ** s
    w = w / w.sum()  # remove the bisection residual so the invariant holds exactly
    return ProbabilityVector(tuple(float(v) for v in w))


def entropy(p: ProbabilityVector) -> float:
    w = p.floats
    return float(-np.sum(w * np.log(w)))


def lyapunov(ifs: IFSystem, p: ProbabilityVector) -> float:
    if p.size != ifs.size:
        raise ValueError("weights and maps must align by symbol")
    return float(-np.sum(p.floats * np.log(ifs.ratios)))


def collision_entropy_rhs(p: ProbabilityVector) -> float:
    """-2 log sum_a p_a^2, the right side of the measure inequality."""
    return -2.0 * math.log(float(np.sum(p.floats ** 2)))


def check_measure_inequality(p: ProbabilityVector):
    """Return (holds, margin) for h_p < -2 log sum p_a^2; margin = rhs - h_p."""
    margin = collision_entropy_rhs(p) - entropy(p)
    return margin > 0, margin


def boundary_weight_two_maps(tol: float = 1e-6):
    """The two weights where the two-map measure inequality turns equality.

    Bisects margin(p) = -2 log(p^2+(1-p)^2) - h(p) on (0, 1/2); the high root
    is 1 - low by the p <-> 1-p symmetry of both sides.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")

    def margin(q):
        h = -(q * math.log(q) + (1 - q) * math.log(1 - q))
        return -2.0 * math.log(q * q + (1 - q) * (1 - q)) - h

    lo, hi = 1e-9, 0.5
    # margin < 0 near 0, > 0 at 1/2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if margin(mid) < 0:
            lo = mid
        else:
            hi = mid
    low = 0.5 * (lo + hi)
    return low, 1.0 - low


def epsilon_star(ifs: IFSystem, p: ProbabilityVector) -> float:
    """Largest-safe half of the two epsilon constraints behind the good-window bands.

    eps* = 1/2 * min( rhs - h , chi * (rhs - h) / h ) with rhs = -2 log sum p^2.
    Raises when the measure inequality fails (outside the full-measure statement's
    hypothesis).
    """
    h = entropy(p)
    chi = lyapunov(ifs, p)
    rhs = collision_entropy_rhs(p)
    gap = rhs - h
    if gap <= 0:
        raise ValueError(
            "measure inequality h < -2 log sum p^2 fails; no admissible epsilon"
        )
    return 0.5 * min(gap, chi * gap / h)


def _compose_key_exact(scale: Fraction, trans: tuple) -> tuple:
    return (scale,) + trans


def _compose_key_float(scale: float, trans: np.ndarray, ortho: Optional[np.ndarray]) -> tuple:
    key = [int(round(scale / 1e-12))]
    key.extend(int(round(v / 1e-12)) for v in trans)
    if ortho is not None:
        key.extend(int(round(v / 1e-12)) for v in ortho.ravel())
    return tuple(key)


def detect_exact_overlap(ifs: IFSystem, max_depth: int):
    """Search words up to max_depth for two distinct words with equal composed maps.

    Returns a witness pair of words (tuples of symbol indexes) or None. Absence at
    max_depth is not a proof of no overlap. Comparison is exact in exact mode and
    rounded to 1e-12 per component otherwise. Table capped at 2^22 entries.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    table = {}
    exact = ifs.exact_mode
    d = ifs.dim

    if exact:
        level = [((), Fraction(1), tuple(Fraction(0) for _ in range(d)))]
    else:
        eye = np.eye(d)
        level = [((), 1.0, np.zeros(d), eye if not ifs.homothety else None)]

    for _depth in range(1, max_depth + 1):
        nxt = []
        for state in level:
            for a in range(ifs.size):
                m = ifs.maps[a]
                if exact:
                    word, scale, trans = state
                    # compose on the right: phi_word o phi_a
                    ra, ta = m.exact_ratio(), m.exact_translation()
                    new = (word + (a,), scale * ra,
                           tuple(t + scale * v for t, v in zip(trans, ta)))
                    key = _compose_key_exact(new[1], new[2])
                else:
                    word, scale, trans, ortho = state
                    ra = m.ratio
                    ta = np.asarray(m.translation)
                    if ortho is None and m.is_homothety:
                        new = (word + (a,), scale * ra, trans + scale * ta, None)
                        key = _compose_key_float(new[1], new[2], None)
                    else:
                        O = ortho if ortho is not None else np.eye(d)
                        Oa = np.asarray(m.orthogonal) if m.orthogonal is not None else np.eye(d)
                        new = (word + (a,), scale * ra, trans + scale * (O @ ta), O @ Oa)
                        key = _compose_key_float(new[1], new[2], new[3])
                prev = table.get(key)
                if prev is not None:
                    return prev, new[0]
                if len(table) >= _OVERLAP_TABLE_CAP:
                    return None
                table[key] = new[0]
                nxt.append(new)
        level = nxt
    return None


def _map_fixed_point(m: SimilarityMap) -> np.ndarray:
    if m.is_homothety:
        return np.asarray(m.translation) / (1.0 - m.ratio)
    d = m.dim
    A = np.eye(d) - m.ratio * np.asarray(m.orthogonal)
    return np.linalg.solve(A, np.asarray(m.translation))


def _set_diameter(pts: np.ndarray) -> float:
    if pts.shape[1] == 1:
        return float(pts.max() - pts.min())
    from scipy.spatial import ConvexHull  # hull vertices suffice for the diameter

    if len(pts) > pts.shape[1] + 1:
        try:
            hull = ConvexHull(pts)
            pts = pts[hull.vertices]
        except Exception:
            pass  # degenerate (flat) clouds: fall through to all-pairs
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def attractor_bounds(ifs: IFSystem, refine_target: float = 1e-6, point_cap: int = 1 << 16) -> AttractorBounds:
    """Bounding box (homothety systems) or ball enclosing X, plus a diameter refinement.

    Box mode: coordinate-wise extremes of X equal the coordinate-wise min/max of
    the map fixed points (exact rationals in exact mode). Ball mode: center at
    the mean of fixed points, radius max_a |phi_a(c)-c| / (1-r_a). diam_refined
    is the diameter of the depth-D image of one fixed point, D capped so the
    point count stays below point_cap.
    """
    r_max = float(ifs.ratios.max())
    if ifs.homothety:
        if ifs.exact_mode:
            fps = [tuple(Fraction(pi, q - 1) for pi in p)
                   for (p, q) in (m.exact for m in ifs.maps)]
        else:
            fps = [tuple(float(v) for v in _map_fixed_point(m)) for m in ifs.maps]
        lo = tuple(min(fp[i] for fp in fps) for i in range(ifs.dim))
        hi = tuple(max(fp[i] for fp in fps) for i in range(ifs.dim))
        ext = [float(h) - float(l) for l, h in zip(lo, hi)]
        diam_upper = math.sqrt(sum(e * e for e in ext))
        diam_exact = (hi[0] - lo[0]) if (ifs.dim == 1 and ifs.exact_mode) else None
        center = tuple(0.5 * (float(l) + float(h)) for l, h in zip(lo, hi))
        radius = 0.5 * diam_upper
        kind = "box"
    else:
        fps = np.array([_map_fixed_point(m) for m in ifs.maps])
        c = fps.mean(axis=0)
        radius = max(
            float(np.linalg.norm(m.apply(c) - c)) / (1.0 - m.ratio) for m in ifs.maps
        )
        lo = hi = None
        center = tuple(float(v) for v in c)
        diam_upper = 2.0 * radius
        diam_exact = None
        kind = "ball"

    # depth-D representative points: image of one fixed point under all depth-D words
    anchor = np.asarray(_map_fixed_point(ifs.maps[0]), dtype=float)
    depth_cap = max(1, int(math.floor(math.log(point_cap) / math.log(ifs.size))))
    if r_max < 1.0:
        want = max(1, int(math.ceil(math.log(refine_target / 2.0) / math.log(r_max))))
    else:
        want = depth_cap
    depth = min(want, depth_cap)
    pts = anchor[None, :]
    for _ in range(depth):
        children = []
        for m in ifs.maps:
            t = np.asarray(m.translation)
            if m.is_homothety:
                children.append(m.ratio * pts + t)
            else:
                children.append(m.ratio * (pts @ np.asarray(m.orthogonal).T) + t)
        pts = np.concatenate(children, axis=0)
    diam_refined = _set_diameter(pts)
    scale_ref = radius if radius > 0 else 1.0
    refine_error = 2.0 * (r_max ** depth) * scale_ref

    return AttractorBounds(
        kind=kind,
        lo=lo,
        hi=hi,
        center=center,
        radius=radius,
        diam_upper=diam_upper,
        diam_refined=min(diam_refined, diam_upper),
        refine_error=refine_error,
        depth=depth,
        diam_upper_exact=diam_exact,
    )

"""Approximation rate functions, their shrink/support transforms, and
volume-series classification.

A rate g induces the target radius Diam(X_a) * g(|a|) in cylinder mode. The
two transforms mirror the divergence-preserving surgery on g: first a pointwise
minimum with n^(-2/dim_S) (1/dim_S in equicontractive mode), then zeroing
wherever the result drops below n^(-4/dim_S).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .ifs import IFSystem

__all__ = [
    "RateFunction",
    "TargetFunction",
    "SeriesVerdict",
    "g1_transform",
    "g2_transform",
    "series_classify",
    "power_divergence_threshold",
]

_EQ_TOL = 1e-12


@dataclass(frozen=True)
class RateFunction:
    """One of the closed rate families, with optional shrink/support transforms.

    family/params: power (t,) -> n^-t; power_log (t, u) -> n^-t (log n)^-u with
    the log factor clamped at n=1; geometric (c,) -> c^n with 0 < c < 1;
    constant (c0,); table (values...) clamped to the last value past the end.
    cap_exponent e: pointwise min with n^-e. support_exponent e4: value is
    zeroed where the capped value falls below n^-e4.
    """

    family: str
    params: tuple = ()
    cap_exponent: Optional[float] = None
    support_exponent: Optional[float] = None

    def __post_init__(self):
        if self.family not in ("power", "power_log", "geometric", "constant", "table"):
            raise ValueError(f"unknown rate family {self.family!r}")
        if self.family == "geometric" and not (0 < self.params[0] < 1):
            raise ValueError("geometric rate needs base in (0,1)")
        if self.family == "constant" and self.params[0] < 0:
            raise ValueError("rate values must be >= 0")
        if self.family == "table" and (len(self.params) == 0 or min(self.params) < 0):
            raise ValueError("table rate needs nonnegative values")

    @classmethod
    def power(cls, t: float) -> "RateFunction":
        return cls("power", (float(t),))

    @classmethod
    def power_log(cls, t: float, u: float) -> "RateFunction":
        return cls("power_log", (float(t), float(u)))

    @classmethod
    def geometric(cls, c: float) -> "RateFunction":
        return cls("geometric", (float(c),))

    @classmethod
    def constant(cls, c: float) -> "RateFunction":
        return cls("constant", (float(c),))

    @classmethod
    def table(cls, values: Sequence[float]) -> "RateFunction":
        return cls("table", tuple(float(v) for v in values))

    def base_value(self, n: int) -> float:
        if n < 1:
            raise ValueError("rates are defined for n >= 1")
        if self.family == "power":
            return float(n) ** (-self.params[0])
        if self.family == "power_log":
            t, u = self.params
            return float(n) ** (-t) * math.log(max(n, 2)) ** (-u)
        if self.family == "geometric":
            return self.params[0] ** n
        if self.family == "constant":
            return self.params[0]
        return self.params[min(n, len(self.params)) - 1]

    def value(self, n: int) -> float:
        v = self.base_value(n)
        if self.cap_exponent is not None:
            v = min(v, float(n) ** (-self.cap_exponent))
        if self.support_exponent is not None:
            if v < float(n) ** (-self.support_exponent):
                v = 0.0
        return v

    def values(self, ns) -> np.ndarray:
        return np.array([self.value(int(n)) for n in np.asarray(ns).ravel()], dtype=float)

    def is_non_increasing(self, hi: int = 10 ** 4) -> bool:
        vs = self.values(np.arange(1, hi + 1))
        return bool(np.all(np.diff(vs) <= 1e-15))


@dataclass(frozen=True)
class TargetFunction:
    """A rate plus the radius convention it feeds.

    cylinder: radius Diam(X_a) * g(|a|). intrinsic-equi: radius g evaluated at
    the intrinsic denominator. intrinsic-general: radius g(n(p/q)) / q_int.
    """

    rate: RateFunction
    mode: str = "cylinder"

    def __post_init__(self):
        if self.mode not in ("cylinder", "intrinsic-equi", "intrinsic-general"):
            raise ValueError(f"unknown target mode {self.mode!r}")


def g1_transform(g: RateFunction, dim_s: float, equicontractive: bool = False) -> RateFunction:
    """Pointwise min with n^(-2/dim_s) (n^(-1/dim_s) in equicontractive mode)."""
    if dim_s <= 0:
        raise ValueError("dim_s must be positive")
    e = (1.0 if equicontractive else 2.0) / dim_s
    if g.cap_exponent is not None:
        e = max(e, g.cap_exponent)
    return replace(g, cap_exponent=e)


def g2_transform(g1: RateFunction, dim_s: float) -> RateFunction:
    """Zero the rate wherever it falls below n^(-4/dim_s)."""
    if dim_s <= 0:
        raise ValueError("dim_s must be positive")
    e4 = 4.0 / dim_s
    if g1.support_exponent is not None:
        e4 = min(e4, g1.support_exponent)
    return replace(g1, support_exponent=e4)


def power_divergence_threshold(s: float) -> float:
    """For g(n) = n^-t at exponent s (critical level), divergence iff t <= 2/s."""
    return 2.0 / s


@dataclass(frozen=True)
class SeriesVerdict:
    verdict: str  # "Converges" | "Diverges" | "Inconclusive"
    reason: str
    partial_sums: tuple = ()  # (n, cumulative) pairs at sampled horizons


def _tail_shape(g: RateFunction):
    """Asymptotic shape after transforms: ("zero"), ("geometric", c),
    ("power", t_eff, u_eff), or ("table",)."""
    if g.family == "table":
        return ("table",)
    if g.family == "constant" and g.params[0] == 0.0:
        return ("zero",)
    cap = g.cap_exponent
    if g.family == "geometric":
        shape = ("geometric", g.params[0])  # beats any power cap eventually
    elif g.family == "constant":
        shape = ("power", cap, 0.0) if cap is not None else ("power", 0.0, 0.0)
    else:
        t = g.params[0]
        u = g.params[1] if g.family == "power_log" else 0.0
        if cap is None:
            shape = ("power", t, u)
        elif t > cap + _EQ_TOL:
            shape = ("power", t, u)
        elif t < cap - _EQ_TOL:
            shape = ("power", cap, 0.0)
        else:
            shape = ("power", t, u) if u >= 0 else ("power", cap, 0.0)
    if g.support_exponent is not None and shape[0] in ("power", "geometric"):
        e4 = g.support_exponent
        if shape[0] == "geometric":
            return ("zero",)  # geometric drops below every power tail
        t_eff, u_eff = shape[1], shape[2]
        if t_eff > e4 + _EQ_TOL or (abs(t_eff - e4) <= _EQ_TOL and u_eff > 0):
            return ("zero",)
    return shape


def _classify_power_terms(exponent: float, log_exponent: float):
    """Sum over n of n^exponent (log n)^(-log_exponent)."""
    if exponent > -1 + _EQ_TOL:
        return "Diverges"
    if exponent < -1 - _EQ_TOL:
        return "Converges"
    return "Diverges" if log_exponent <= 1 + _EQ_TOL else "Converges"


def _partial_sums(term, horizon: int):
    marks = {1, 10, 100, 1000, horizon}
    out = []
    total = 0.0
    for n in range(1, horizon + 1):
        total += term(n)
        if n in marks:
            out.append((n, total))
    return tuple(out)


def series_classify(g: RateFunction, ifs: IFSystem, s: float,
                    horizon: int = 2000, mode: str = "cylinder") -> SeriesVerdict:
    """Classify the reduced volume series for the given target mode.

    cylinder / intrinsic-general: sum_n n * g(n)^s * (sum_a r_a^s)^n, the
    per-level reduction of sum_n sum_a n * (Diam(X_a) g(n))^s.
    intrinsic-equi: sum_n n * #A^n * g(q^n)^s for the common integer q.
    Closed families classify analytically; tables get partial sums and an
    Inconclusive verdict unless a geometric envelope is detected.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    if mode == "intrinsic-equi":
        return _classify_intrinsic_equi(g, ifs, s, horizon)
    A = float(np.sum(ifs.ratios ** s))
    term = lambda n: n * g.value(n) ** s * A ** n
    sums = _partial_sums(term, horizon)
    shape = _tail_shape(g)
    if shape[0] == "table":
        return _table_verdict(g, term, horizon, sums)
    if shape[0] == "zero":
        return SeriesVerdict("Converges", "rate vanishes eventually", sums)
    if shape[0] == "geometric":
        rho = shape[1] ** s * A
        if rho < 1 - _EQ_TOL:
            return SeriesVerdict("Converges", f"geometric ratio {rho:.6g} < 1", sums)
        return SeriesVerdict("Diverges", f"geometric ratio {rho:.6g} >= 1", sums)
    _, t_eff, u_eff = shape
    if A < 1 - _EQ_TOL:
        return SeriesVerdict("Converges", f"branch factor {A:.6g} < 1", sums)
    if A > 1 + _EQ_TOL:
        return SeriesVerdict("Diverges", f"branch factor {A:.6g} > 1", sums)
    verdict = _classify_power_terms(1 - s * t_eff, s * u_eff)
    return SeriesVerdict(verdict, f"critical level: exponent {1 - s * t_eff:.6g}", sums)


def _classify_intrinsic_equi(g: RateFunction, ifs: IFSystem, s: float, horizon: int):
    if not ifs.equicontractive or not ifs.exact_mode:
        raise ValueError("intrinsic-equi reduction needs an equicontractive integer-form IFS")
    q = ifs.maps[0].exact[1]
    mA = ifs.size
    term = lambda n: n * mA ** n * g.value(q ** n) ** s if q ** n < 10 ** 300 else 0.0
    sums = _partial_sums(term, min(horizon, 500))
    if g.family == "table":
        return _table_verdict(g, term, min(horizon, 500), sums)
    if g.family == "constant":
        if g.params[0] == 0.0:
            return SeriesVerdict("Converges", "zero rate", sums)
        return SeriesVerdict("Diverges", "constant rate with geometric level count", sums)
    if g.family == "geometric":
        return SeriesVerdict("Converges", "double-exponential decay", sums)
    tau = g.params[0]
    u = g.params[1] if g.family == "power_log" else 0.0
    rho = mA * q ** (-tau * s)
    if rho < 1 - _EQ_TOL:
        return SeriesVerdict("Converges", f"geometric ratio {rho:.6g} < 1", sums)
    if rho > 1 + _EQ_TOL:
        return SeriesVerdict("Diverges", f"geometric ratio {rho:.6g} > 1", sums)
    verdict = _classify_power_terms(1 - s * u, 0.0)
    return SeriesVerdict(verdict, f"critical ratio, residual exponent {1 - s * u:.6g}", sums)


def _table_verdict(g, term, horizon, sums):
    # geometric envelope: consistently shrinking nonzero terms near the end
    vals = [term(n) for n in range(max(2, horizon - 50), horizon + 1)]
    nz = [v for v in vals if v > 0]
    if len(nz) >= 10:
        ratios = [b / a for a, b in zip(nz, nz[1:]) if a > 0]
        if ratios and max(ratios) < 0.95:
            return SeriesVerdict("Converges", "geometric envelope on table tail", sums)
    if all(v == 0 for v in vals):
        return SeriesVerdict("Converges", "table tail is zero", sums)
    return SeriesVerdict("Inconclusive", "table family: partial sums only", sums)

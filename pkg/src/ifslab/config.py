"""Plain-text experiment specs: key = value lines under [ifs] and [experiment].

Example::

    [ifs]
    dim = 1
    map 1 = exact 0/3
    map 2 = exact 2/3

    [experiment]
    seed = 42
    rate = power 1.0
    mode = cylinder
    s = dim_s
    levels = 10 25
    samples = 1000

Exact map values are `exact p1,...,pd/q` with integer p and q >= 2; float maps
are `float r=0.5 t=0.25,0.25 [O=0,-1;1,0]`. The [ifs] section may instead hold
`file = other.spec` to pull the system from another spec file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .ifs import IFSystem, ProbabilityVector, SimilarityMap, natural_weights
from .rates import RateFunction

__all__ = ["SpecError", "ExperimentSpec", "parse_spec_file", "parse_spec_text"]


class SpecError(ValueError):
    """Validation failure; `field` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentSpec:
    ifs: IFSystem
    seed: int
    weights: Optional[ProbabilityVector] = None  # None = natural weights
    rate: RateFunction = field(default_factory=lambda: RateFunction.constant(1.0))
    mode: str = "cylinder"
    s: Optional[float] = None  # None = dim_S
    levels: tuple = (1, 10)
    samples: int = 1000
    budget: int = 10 ** 6
    eps: Optional[float] = None  # None = epsilon_star
    prefix_labels: tuple = ()
    depth: int = 6
    nlist: tuple = ()
    transform: bool = False  # apply the g1/g2 surgery to the rate
    raw_text: str = ""

    def weights_or_natural(self) -> ProbabilityVector:
        return self.weights if self.weights is not None else natural_weights(self.ifs)


def _split_sections(text: str):
    sections = {}
    current = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, [])
            continue
        if current is None:
            raise SpecError(f"line {ln}", "entries must appear under a [section]")
        if "=" not in line:
            raise SpecError(f"line {ln}", f"expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        sections[current].append((key.strip(), value.strip(), ln))
    return sections


def _parse_exact_map(field_name: str, body: str, dim: int) -> SimilarityMap:
    if "/" not in body:
        raise SpecError(field_name, "exact map needs the form p1,...,pd/q")
    p_str, q_str = body.rsplit("/", 1)
    try:
        p = tuple(int(v.strip()) for v in p_str.split(","))
        q = int(q_str.strip())
    except ValueError:
        raise SpecError(field_name, f"exact entries must be integers, got {body!r}")
    if q < 2:
        raise SpecError(field_name, f"q must be an integer >= 2, got {q}")
    if len(p) != dim:
        raise SpecError(field_name, f"p has {len(p)} coordinates, expected {dim}")
    return SimilarityMap.from_exact(p, q)


def _parse_float_map(field_name: str, body: str, dim: int) -> SimilarityMap:
    ratio = None
    trans = None
    ortho = None
    for tok in body.split():
        if "=" not in tok:
            raise SpecError(field_name, f"float map tokens look like k=v, got {tok!r}")
        k, v = tok.split("=", 1)
        if k == "r":
            ratio = float(v)
        elif k == "t":
            trans = tuple(float(x) for x in v.split(","))
        elif k == "O":
            ortho = tuple(tuple(float(x) for x in row.split(",")) for row in v.split(";"))
        else:
            raise SpecError(field_name, f"unknown float-map token {k!r}")
    if ratio is None or trans is None:
        raise SpecError(field_name, "float map needs r= and t=")
    if not (0 < ratio < 1):
        raise SpecError(field_name, f"ratio must lie in (0,1), got {ratio}")
    if len(trans) != dim:
        raise SpecError(field_name, f"translation has {len(trans)} coordinates, expected {dim}")
    try:
        return SimilarityMap.from_float(ratio, trans, ortho)
    except ValueError as e:
        raise SpecError(field_name, str(e))


def _parse_ifs(entries, base_dir: str) -> IFSystem:
    kv = {}
    maps = []
    for key, value, ln in entries:
        if key.startswith("map "):
            maps.append((key[4:].strip(), value, ln))
        else:
            kv[key] = value
    if "file" in kv:
        path = os.path.join(base_dir, kv["file"])
        if not os.path.exists(path):
            raise SpecError("[ifs] file", f"referenced spec {path!r} does not exist")
        with open(path) as fh:
            sub = _split_sections(fh.read())
        if "ifs" not in sub:
            raise SpecError("[ifs] file", f"{path!r} has no [ifs] section")
        return _parse_ifs(sub["ifs"], os.path.dirname(path))
    if "dim" not in kv:
        raise SpecError("[ifs] dim", "missing")
    try:
        dim = int(kv["dim"])
    except ValueError:
        raise SpecError("[ifs] dim", f"must be a positive integer, got {kv['dim']!r}")
    if dim < 1:
        raise SpecError("[ifs] dim", f"must be >= 1, got {dim}")
    if len(maps) < 2:
        raise SpecError("[ifs]", "need at least two map entries")
    labels = []
    sims = []
    for label, value, ln in maps:
        field_name = f"[ifs] map {label}"
        if label in labels:
            raise SpecError(field_name, "duplicate label")
        parts = value.split(None, 1)
        if len(parts) != 2 or parts[0] not in ("exact", "float"):
            raise SpecError(field_name, "value must start with 'exact' or 'float'")
        kind, body = parts
        sims.append(_parse_exact_map(field_name, body, dim) if kind == "exact"
                    else _parse_float_map(field_name, body, dim))
        labels.append(label)
    return IFSystem(labels=tuple(labels), maps=tuple(sims), dim=dim)


_RATE_ARITY = {"power": 1, "power_log": 2, "geometric": 1, "constant": 1}


def _parse_rate(value: str) -> RateFunction:
    parts = value.split()
    fam = parts[0]
    if fam == "table":
        return RateFunction.table([float(v) for v in parts[1:]])
    if fam not in _RATE_ARITY:
        raise SpecError("[experiment] rate",
                        f"unknown family {fam!r} (power|power_log|geometric|constant|table)")
    if len(parts) - 1 != _RATE_ARITY[fam]:
        raise SpecError("[experiment] rate",
                        f"{fam} takes {_RATE_ARITY[fam]} parameter(s)")
    try:
        params = [float(v) for v in parts[1:]]
        return RateFunction(fam, tuple(params))
    except ValueError as e:
        raise SpecError("[experiment] rate", str(e))


def parse_spec_text(text: str, base_dir: str = ".") -> ExperimentSpec:
    sections = _split_sections(text)
    if "ifs" not in sections:
        raise SpecError("[ifs]", "section missing")
    ifs = _parse_ifs(sections["ifs"], base_dir)
    exp = dict()
    for key, value, ln in sections.get("experiment", []):
        exp[key] = value
    if "seed" not in exp:
        raise SpecError("[experiment] seed", "missing (runs must be reproducible)")
    spec = ExperimentSpec(ifs=ifs, seed=_int_field(exp, "seed"), raw_text=text)
    if "weights" in exp and exp["weights"] != "natural":
        if exp["weights"] == "uniform":
            spec.weights = ProbabilityVector.uniform(ifs.size)
        else:
            try:
                ws = tuple(Fraction(v) for v in exp["weights"].split(","))
            except (ValueError, ZeroDivisionError):
                raise SpecError("[experiment] weights",
                                f"expected natural|uniform|w1,...,wm, got {exp['weights']!r}")
            try:
                spec.weights = ProbabilityVector(ws)
            except ValueError as e:
                raise SpecError("[experiment] weights", str(e))
    if "rate" in exp:
        spec.rate = _parse_rate(exp["rate"])
    if "mode" in exp:
        if exp["mode"] not in ("cylinder", "intrinsic-equi", "intrinsic-general"):
            raise SpecError("[experiment] mode", f"unknown mode {exp['mode']!r}")
        spec.mode = exp["mode"]
    if "s" in exp and exp["s"] != "dim_s":
        spec.s = _float_field(exp, "s")
    if "levels" in exp:
        parts = exp["levels"].split()
        if len(parts) != 2:
            raise SpecError("[experiment] levels", "expected 'N0 N1'")
        spec.levels = (_int_of(parts[0], "[experiment] levels"),
                       _int_of(parts[1], "[experiment] levels"))
        if spec.levels[0] > spec.levels[1]:
            raise SpecError("[experiment] levels", "need N0 <= N1")
    if "samples" in exp:
        spec.samples = _int_field(exp, "samples")
    if "budget" in exp:
        spec.budget = _int_field(exp, "budget")
    if "eps" in exp and exp["eps"] != "auto":
        spec.eps = _float_field(exp, "eps")
    if "prefix" in exp:
        spec.prefix_labels = tuple(exp["prefix"].split(","))
    if "depth" in exp:
        spec.depth = _int_field(exp, "depth")
    if "nlist" in exp:
        spec.nlist = tuple(_int_of(v, "[experiment] nlist") for v in exp["nlist"].split())
    if "transform" in exp:
        spec.transform = exp["transform"].lower() in ("1", "true", "yes")
    return spec


def _int_of(v: str, field_name: str) -> int:
    try:
        return int(v)
    except ValueError:
        raise SpecError(field_name, f"expected an integer, got {v!r}")


def _int_field(exp: dict, key: str) -> int:
    return _int_of(exp[key], f"[experiment] {key}")


def _float_field(exp: dict, key: str) -> float:
    try:
        return float(exp[key])
    except ValueError:
        raise SpecError(f"[experiment] {key}", f"expected a number, got {exp[key]!r}")


def parse_spec_file(path: str) -> ExperimentSpec:
    if not os.path.exists(path):
        raise SpecError("spec", f"file {path!r} does not exist")
    with open(path) as fh:
        return parse_spec_text(fh.read(), base_dir=os.path.dirname(os.path.abspath(path)))

"""Command-line entry point: experiment orchestration and result emission.

Every output file starts with a `# timestamp=...` header line (the one
non-reproducible field); everything after it is byte-identical across replays
with the same spec, seed, and any thread count. Exit codes: 0 success,
2 validation error, 3 budget abort with partial results.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__, cache
from .config import ExperimentSpec, SpecError, parse_spec_file
from .dimension import box_dimension, covering_sum, effective_dimension
from .hitrate import SearchBudgetExceeded, first_moment_tail, hit_rate
from .ifs import (check_measure_inequality, entropy, epsilon_star, lyapunov,
                  similarity_dimension)
from .levelsets import build_level_set, kochen_stone_bound
from .rates import TargetFunction, g1_transform, g2_transform, series_classify
from .rationals import code_of_value, enumerate_rationals, separation_check
from .util import content_hash
from .wordstats import (estimate_bad_measure, estimate_frequent_measure,
                        estimate_witness_fraction, k_n)
from .words import word_from_labels

SUBCOMMANDS = ("analyze", "enumerate", "qint", "series", "lemma31", "lemma32",
               "good-sets", "levelsets", "kochen-stone", "hitrate", "dimension",
               "covering")


def _meta(spec: ExperimentSpec) -> dict:
    return {
        "spec_hash": content_hash(spec.raw_text),
        "seed": spec.seed,
        "version": __version__,
    }


def _write_lines(path: str, lines):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_csv(path: str, spec: ExperimentSpec, columns: dict, rows):
    """columns maps name -> unit/definition text (emitted as a header row)."""
    meta = _meta(spec)
    lines = [f"# timestamp={time.strftime('%Y-%m-%dT%H:%M:%S')}"]
    lines.append("# " + " ".join(f"{k}={v}" for k, v in sorted(meta.items())))
    lines.append("# columns: " + "; ".join(f"{k}: {v}" for k, v in columns.items()))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row[k]) for k in columns))
    _write_lines(path, lines)


def write_json(path: str, spec: ExperimentSpec, payload: dict):
    body = {"meta": _meta(spec), **payload}
    lines = [f"# timestamp={time.strftime('%Y-%m-%dT%H:%M:%S')}"]
    lines.append(json.dumps(body, sort_keys=True, indent=1, default=_json_default))
    _write_lines(path, lines)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return str(v)


def _json_default(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serializable: {type(v)}")


def _resolved_s(spec: ExperimentSpec) -> float:
    return spec.s if spec.s is not None else similarity_dimension(spec.ifs)


def _transformed_rate(spec: ExperimentSpec):
    dim_s = similarity_dimension(spec.ifs)
    g1 = g1_transform(spec.rate, dim_s, equicontractive=False)
    return g2_transform(g1, dim_s)


def cmd_analyze(spec, out, threads):
    ifs = spec.ifs
    p = spec.weights_or_natural()
    holds, margin = check_measure_inequality(p)
    sep = separation_check(ifs, depth=3)
    payload = {
        "dim_s": similarity_dimension(ifs),
        "equicontractive": ifs.equicontractive,
        "exact_mode": ifs.exact_mode,
        "weights": [str(w) for w in p.weights],
        "entropy": entropy(p),
        "lyapunov": lyapunov(ifs, p),
        "measure_inequality_holds": holds,
        "measure_inequality_margin": margin,
        "epsilon_star": epsilon_star(ifs, p) if holds else None,
        "diam_upper": ifs.bounds.diam_upper,
        "diam_refined": ifs.bounds.diam_refined,
        "separation": sep.verdict,
        "separation_detail": sep.detail,
    }
    write_json(os.path.join(out, "analyze.json"), spec, payload)
    return 0


def cmd_enumerate(spec, out, threads):
    path = cache.cache_path(out, spec.ifs, spec.depth)
    hit = cache.load_enumeration(path, spec.ifs, spec.depth)
    if hit is not None:
        rows, partial = hit
        from_cache = True
    else:
        points, partial = enumerate_rationals(spec.ifs, spec.depth)
        rows = cache.rows_of_points(spec.ifs, points)
        cache.save_enumeration(path, spec.ifs, spec.depth, points, partial)
        from_cache = False
    write_csv(os.path.join(out, "enumerate.csv"), spec, {
        "value": "exact rational, num/den per coordinate",
        "code": "canonical code u|v over labels",
        "q_int": "intrinsic denominator (integer)",
        "n": "minimizing total length",
        "l": "minimizing preperiod length",
        "reduced_q": "lcm of reduced coordinate denominators",
        "certified": "global-minimum certificate reached",
    }, rows)
    write_json(os.path.join(out, "enumerate.json"), spec, {
        "depth": spec.depth, "count": len(rows), "partial": partial,
        "from_cache": from_cache,
    })
    return 3 if partial else 0


def cmd_qint(spec, out, threads, value=None):
    if not value:
        raise SpecError("--value", "qint needs --value like 1/4 or 1/4,2/3")
    try:
        x = tuple(Fraction(v) for v in value.split(","))
    except (ValueError, ZeroDivisionError):
        raise SpecError("--value", f"expected rationals like 1/4,2/3, got {value!r}")
    if len(x) != spec.ifs.dim:
        raise SpecError("--value", f"expected {spec.ifs.dim} coordinates")
    code = code_of_value(spec.ifs, x)
    from .rationals import rational_point

    pt = rational_point(spec.ifs, code)
    payload = {
        "value": cache._value_str(pt.value),
        "q_int": str(pt.q_int),
        "n": pt.n_param,
        "l": pt.l_param,
        "reduced_q": str(pt.reduced_q),
        "certified": pt.certified,
        "search_complete": pt.search_complete,
    }
    write_json(os.path.join(out, "qint.json"), spec, payload)
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_series(spec, out, threads):
    s = _resolved_s(spec)
    g = _transformed_rate(spec) if spec.transform else spec.rate
    verdict = series_classify(g, spec.ifs, s, mode=spec.mode if spec.mode != "intrinsic-general" else "cylinder")
    write_json(os.path.join(out, "series.json"), spec, {
        "verdict": verdict.verdict,
        "reason": verdict.reason,
        "s": s,
        "mode": spec.mode,
        "partial_sums": [{"n": n, "sum": v} for n, v in verdict.partial_sums],
    })
    print(verdict.verdict)
    return 0


def _nlist(spec) -> tuple:
    return spec.nlist if spec.nlist else tuple(
        sorted({spec.levels[0], (spec.levels[0] + spec.levels[1]) // 2, spec.levels[1]}))


def cmd_lemma31(spec, out, threads):
    p = spec.weights_or_natural()
    rows = []
    for n in _nlist(spec):
        est, se = estimate_frequent_measure(p, n, spec.samples, spec.seed, threads)
        rows.append({"n": n, "k_n": k_n(p, n), "estimate": est, "stderr": se,
                     "threshold": 7 / 32})
    write_csv(os.path.join(out, "lemma31.csv"), spec, {
        "n": "word length", "k_n": "window length (integer)",
        "estimate": "fraction of samples in the frequent set [0,1]",
        "stderr": "binomial standard error", "threshold": "proved lower bound 7/32",
    }, rows)
    ok = all(r["estimate"] >= r["threshold"] - 3 * r["stderr"] for r in rows)
    write_json(os.path.join(out, "lemma31.json"), spec,
               {"rows": rows, "passes": ok})
    return 0


def cmd_lemma32(spec, out, threads):
    ifs = spec.ifs
    p = spec.weights_or_natural()
    eps = spec.eps if spec.eps is not None else epsilon_star(ifs, p)
    rows, gamma = estimate_bad_measure(ifs, p, eps, _nlist(spec), spec.samples,
                                       spec.seed, threads)
    for r in rows:
        r["threshold"] = 0.0
    write_csv(os.path.join(out, "lemma32.csv"), spec, {
        "n": "word length", "k_n": "window length (integer)",
        "estimate": "fraction of samples in the bad set [0,1]",
        "stderr": "binomial standard error", "threshold": "asymptotic limit 0",
    }, rows)
    write_json(os.path.join(out, "lemma32.json"), spec,
               {"rows": rows, "epsilon": eps, "gamma_fit": gamma})
    return 0


def cmd_good_sets(spec, out, threads):
    ifs = spec.ifs
    p = spec.weights_or_natural()
    eps = spec.eps if spec.eps is not None else epsilon_star(ifs, p)
    rows = []
    for n in _nlist(spec):
        res = estimate_witness_fraction(ifs, p, eps, n, spec.samples, spec.seed,
                                        threads, validate=True)
        rows.append({"n": n, "k_n": k_n(p, n), "estimate": res["fraction"],
                     "stderr": res["stderr"], "threshold": 7 / 64,
                     "validated": res["validated"], "invalid": res["invalid"]})
    write_csv(os.path.join(out, "good_sets.csv"), spec, {
        "n": "word length", "k_n": "window length (integer)",
        "estimate": "fraction of samples with a good witness [0,1]",
        "stderr": "binomial standard error", "threshold": "proved lower bound 7/64",
        "validated": "witnesses replay-checked", "invalid": "replay failures (must be 0)",
    }, rows)
    ok = all(r["invalid"] == 0 for r in rows)
    write_json(os.path.join(out, "good_sets.json"), spec,
               {"rows": rows, "epsilon": eps, "all_witnesses_valid": ok})
    return 0


def _build_levels(spec, threads):
    ifs = spec.ifs
    p = spec.weights_or_natural()
    eps = spec.eps if spec.eps is not None else epsilon_star(ifs, p)
    g2 = _transformed_rate(spec)
    prefix = word_from_labels(ifs, spec.prefix_labels) if spec.prefix_labels else (0,)
    dim_s = similarity_dimension(ifs)
    levels = []
    rows = []
    for n in range(spec.levels[0], spec.levels[1] + 1):
        E = build_level_set(ifs, p, prefix, n, eps=eps, g2=g2,
                            sample_budget=spec.samples, seed=spec.seed, threads=threads)
        levels.append(E)
        mE = E.measure()
        from .words import cylinder_measure

        mc = cylinder_measure(p, prefix)
        denom = float(mc) * n * E.g2_value ** dim_s
        hs, js, ls = E.meta[:, 2], E.meta[:, 3], E.meta[:, 1]
        h1 = hs == 1
        rows.append({
            "n": n, "k_n": E.k, "size": E.size, "g2": E.g2_value,
            "measure": float(mE),
            "rho": float(mE) / denom if denom > 0 else math.nan,
            "prefix_free": E.is_prefix_free(),
            "short_ext_ok": bool(np.all(js[h1] > ls[h1] + E.k)) if E.size else True,
            "mode": E.mode,
        })
    return levels, rows, eps, prefix


def cmd_levelsets(spec, out, threads):
    levels, rows, eps, prefix = _build_levels(spec, threads)
    write_csv(os.path.join(out, "levelsets.csv"), spec, {
        "n": "level", "k_n": "window length", "size": "cylinder count",
        "g2": "transformed rate value at |c|+n",
        "measure": "exact Bernoulli measure of the level set",
        "rho": "measure / (m([c]) n g2^dim_s), the comparability ratio",
        "prefix_free": "exact disjointness check",
        "short_ext_ok": "single-period extensions end past the window",
        "mode": "exact enumeration or importance-weighted sampling",
    }, rows)
    write_json(os.path.join(out, "levelsets.json"), spec, {
        "rows": rows, "epsilon": eps, "prefix": list(prefix),
        "rho_band": (min(r["rho"] for r in rows), max(r["rho"] for r in rows)),
    })
    return 0


def cmd_kochen_stone(spec, out, threads):
    levels, rows, eps, prefix = _build_levels(spec, threads)
    ks = kochen_stone_bound(levels)
    write_json(os.path.join(out, "kochen_stone.json"), spec, {
        "bound": ks["bound"],
        "normalized": ks["normalized"],
        "normalized_float": float(ks["normalized"]),
        "sum_measures": ks["sum_measures"],
        "sum_intersections": ks["sum_intersections"],
        "levels": [r["n"] for r in rows],
        "epsilon": eps,
    })
    print(f"normalized bound {float(ks['normalized']):.6g}")
    return 0


def cmd_hitrate(spec, out, threads):
    ifs = spec.ifs
    target = TargetFunction(rate=spec.rate, mode=spec.mode)
    p = spec.weights_or_natural()
    curve = hit_rate(ifs, target, spec.levels[0], spec.levels[1], spec.samples,
                     spec.seed, p=p, node_budget=spec.budget, threads=threads)
    rows = [{"level": int(n), "cumulative": float(c)}
            for n, c in zip(curve.levels, curve.cumulative)]
    write_csv(os.path.join(out, "hitrate.csv"), spec, {
        "level": "target level n",
        "cumulative": "fraction of samples hit by this level [0,1]",
    }, rows)
    payload = {"rows": rows, "aborted": curve.aborted, "mode": spec.mode}
    if spec.mode == "cylinder" and ifs.dim == 1 and ifs.homothety:
        try:
            s = _resolved_s(spec)
            payload["first_moment_tail"] = first_moment_tail(
                ifs, spec.rate, s, spec.levels[0], spec.levels[1])
        except ValueError:
            payload["first_moment_tail"] = None
    write_json(os.path.join(out, "hitrate.json"), spec, payload)
    return 3 if curve.aborted else 0


def cmd_dimension(spec, out, threads):
    lo, hi = spec.levels
    est, resid, rows = box_dimension(spec.ifs, range(max(1, lo), hi + 1))
    write_csv(os.path.join(out, "dimension.csv"), spec, {
        "scale": "cover scale delta", "count": "stopping cylinders at that scale",
    }, [{"scale": d, "count": c} for d, c in rows])
    eff, how = effective_dimension(spec.ifs)
    write_json(os.path.join(out, "dimension.json"), spec, {
        "box_estimate": est, "residual": resid,
        "dim_s": similarity_dimension(spec.ifs),
        "effective_dimension": eff, "effective_rule": how,
    })
    return 0


def cmd_covering(spec, out, threads):
    s = _resolved_s(spec)
    target = TargetFunction(rate=spec.rate, mode="cylinder")
    res = covering_sum(spec.ifs, target, s, spec.levels[0], spec.levels[1])
    write_csv(os.path.join(out, "covering.csv"), spec, {
        "n": "level", "term": "n * sum_a radius^s at that level",
        "cumulative": "partial covering sum",
    }, [{"n": n, "term": t, "cumulative": c} for n, t, c in res["rows"]])
    write_json(os.path.join(out, "covering.json"), spec, {
        "partial_sum": res["partial_sum"], "tail_bound": res["tail_bound"],
        "verdict": res["verdict"], "reason": res["reason"],
        "s": s,
    })
    return 0


_HANDLERS = {
    "analyze": cmd_analyze,
    "enumerate": cmd_enumerate,
    "series": cmd_series,
    "lemma31": cmd_lemma31,
    "lemma32": cmd_lemma32,
    "good-sets": cmd_good_sets,
    "levelsets": cmd_levelsets,
    "kochen-stone": cmd_kochen_stone,
    "hitrate": cmd_hitrate,
    "dimension": cmd_dimension,
    "covering": cmd_covering,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ifslab",
        description="Self-similar set experiments: invariants, rational points, "
                    "word statistics, level sets, and hit-rate curves.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--spec", required=True, help="experiment spec file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the spec seed")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--budget", type=int, default=None, help="override node budget")
    parser.add_argument("--value", default=None, help="rational vector for qint")
    args = parser.parse_args(argv)

    try:
        spec = parse_spec_file(args.spec)
        if args.seed is not None:
            spec.seed = args.seed
        if args.budget is not None:
            spec.budget = args.budget
        if args.subcommand == "qint":
            return cmd_qint(spec, args.out, args.threads, value=args.value)
        return _HANDLERS[args.subcommand](spec, args.out, args.threads)
    except SpecError as e:
        print(f"spec error: {e}", file=sys.stderr)
        return 2
    except SearchBudgetExceeded as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

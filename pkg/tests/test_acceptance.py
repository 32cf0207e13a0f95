"""Acceptance criteria, one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s`. Tolerances and budgets are
stated inline; Monte Carlo configurations are the full-size ones.
"""

import math
import os
import time
from fractions import Fraction

import numpy as np
import pytest

from ifslab.cli import main as cli_main
from ifslab.hitrate import (first_moment_tail, hit_rate, nearby_periodic_points,
                            nearby_periodic_points_bruteforce)
from ifslab.ifs import (boundary_weight_two_maps, entropy, epsilon_star, lyapunov,
                        natural_weights, similarity_dimension, IFSystem,
                        SimilarityMap)
from ifslab.levelsets import build_level_set, kochen_stone_bound
from ifslab.rates import (RateFunction, TargetFunction, g1_transform, g2_transform,
                          power_divergence_threshold, series_classify)
from ifslab.rationals import enumerate_rationals, representation_denominator
from ifslab.wordstats import estimate_frequent_measure, estimate_witness_fraction
from ifslab.words import cylinder_measure, cylinder_ratio, project_float, sample_code

SAMPLES_FULL = 10 ** 4


def report(num, desc, elapsed, budget, ok, detail=""):
    status = "PASS" if ok and elapsed < budget else "FAIL"
    print(f"\n[criterion {num:2d}] {status} ({elapsed:6.2f}s / {budget:.0f}s) "
          f"{desc}  {detail}")
    assert ok, f"criterion {num}: {desc} -- {detail}"
    assert elapsed < budget, f"criterion {num}: runtime {elapsed:.2f}s over {budget}s"


def test_criterion_01_boundary_digits():
    t0 = time.perf_counter()
    low, high = boundary_weight_two_maps(1e-6)
    ok = 0.951 < high < 0.952 and 0.048 < low < 0.049
    report(1, "two-map inequality boundary digits", time.perf_counter() - t0, 1.0,
           ok, f"low={low:.7f} high={high:.7f}")


def test_criterion_02_frequent_set_measure(cantor, cantor_weights, twoscale,
                                           twoscale_weights):
    t0 = time.perf_counter()
    e1, s1 = estimate_frequent_measure(cantor_weights, 200, SAMPLES_FULL, seed=42)
    e2, s2 = estimate_frequent_measure(twoscale_weights, 400, SAMPLES_FULL, seed=42)
    ok = e1 >= 7 / 32 - 3 * s1 and e2 >= 7 / 32 - 3 * s2
    report(2, "frequent-set measure lower bound", time.perf_counter() - t0, 60.0,
           ok, f"cantor={e1:.4f} twoscale={e2:.4f} (threshold {7/32:.4f})")


def test_criterion_03_witness_validity(cantor, cantor_weights, twoscale,
                                       twoscale_weights):
    t0 = time.perf_counter()
    details = []
    ok = True
    for ifs, p, n in ((cantor, cantor_weights, 200), (twoscale, twoscale_weights, 400)):
        eps = epsilon_star(ifs, p)
        res = estimate_witness_fraction(ifs, p, eps, n, SAMPLES_FULL, seed=42,
                                        validate=True)
        ok = ok and res["invalid"] == 0
        ok = ok and res["fraction"] >= 7 / 64 - 3 * res["stderr"]
        details.append(f"n={n}: frac={res['fraction']:.4f} "
                       f"validated={res['validated']} invalid={res['invalid']}")
    report(3, "good-witness validity and existence", time.perf_counter() - t0,
           120.0, ok, "; ".join(details))


def _oracle_qint_table(ifs, n_max):
    """Independent brute force over every (word, l) with n <= n_max."""
    table = {}
    m = ifs.size
    for n in range(1, n_max + 1):
        for widx in range(m ** n):
            word = []
            w = widx
            for _ in range(n):
                word.append(w % m)
                w //= m
            word.reverse()
            qs = [ifs.maps[a].exact[1] for a in word]
            ps = [ifs.maps[a].exact[0] for a in word]
            for l in range(n):
                rs, ts = Fraction(1), [Fraction(0)] * ifs.dim
                for j in range(l, n):
                    for i in range(ifs.dim):
                        ts[i] += rs * Fraction(ps[j][i], qs[j])
                    rs /= qs[j]
                y = [t / (1 - rs) for t in ts]
                rp, tp = Fraction(1), [Fraction(0)] * ifs.dim
                for j in range(l):
                    for i in range(ifs.dim):
                        tp[i] += rp * Fraction(ps[j][i], qs[j])
                    rp /= qs[j]
                val = tuple(rp * yi + ti for yi, ti in zip(y, tp))
                den = math.prod(qs[:l]) * (math.prod(qs[l:]) - 1)
                if val not in table or den < table[val]:
                    table[val] = den
    return table


def test_criterion_04_intrinsic_denominators(cantor):
    t0 = time.perf_counter()
    points, partial = enumerate_rationals(cantor, 8)
    by_value = {pt.value[0]: pt for pt in points}
    ok = not partial
    ok = ok and by_value[Fraction(1, 4)].q_int == 8
    ok = ok and by_value[Fraction(2, 3)].q_int == 6
    ok = ok and by_value[Fraction(0)].q_int == 2
    # comparability and reduction bounds over every representation found
    for pt in points:
        ok = ok and pt.reduced_q <= pt.q_int
        for rep in pt.reps:
            d = representation_denominator(cantor, rep)
            ok = ok and 3 ** (rep.n - 1) <= d <= 3 ** rep.n
    # independent oracle to n <= 10
    oracle = _oracle_qint_table(cantor, 10)
    mismatches = sum(1 for pt in points
                     if pt.value not in oracle or oracle[pt.value] != pt.q_int)
    ok = ok and mismatches == 0 and all(pt.certified for pt in points)
    report(4, "intrinsic denominators against brute force",
           time.perf_counter() - t0, 30.0, ok,
           f"points={len(points)} mismatches={mismatches}")


def test_criterion_05_series_dichotomy(cantor):
    t0 = time.perf_counter()
    s = math.log(2) / math.log(3)
    div = series_classify(RateFunction.power(1.0), cantor, s, mode="intrinsic-equi")
    conv = series_classify(RateFunction.power(1.01), cantor, s, mode="intrinsic-equi")
    dim_s = similarity_dimension(cantor)
    t_star = power_divergence_threshold(dim_s)
    ok = div.verdict == "Diverges" and conv.verdict == "Converges"
    ok = ok and abs(t_star - 2 * math.log(3) / math.log(2)) <= 1e-9
    report(5, "volume-series dichotomy and power threshold",
           time.perf_counter() - t0, 1.0, ok,
           f"tau=1:{div.verdict} tau=1.01:{conv.verdict} t*={t_star:.10f}")


@pytest.fixture(scope="module")
def criterion6_levels(cantor, cantor_weights):
    dim_s = similarity_dimension(cantor)
    g2 = g2_transform(g1_transform(RateFunction.constant(1.0), dim_s, False), dim_s)
    t0 = time.perf_counter()
    levels = [build_level_set(cantor, cantor_weights, (0,), n, g2=g2)
              for n in range(12, 19)]
    return levels, time.perf_counter() - t0


def test_criterion_06_level_set_soundness(cantor, cantor_weights, criterion6_levels):
    levels, build_time = criterion6_levels
    t0 = time.perf_counter()
    dim_s = similarity_dimension(cantor)
    ok = True
    rhos = []
    for E in levels:
        ok = ok and E.is_prefix_free()
        hs, js, ls = E.meta[:, 2], E.meta[:, 3], E.meta[:, 1]
        h1 = hs == 1
        ok = ok and bool(np.all(js[h1] > ls[h1] + E.k))
        m_c = cylinder_measure(cantor_weights, E.prefix)
        rho = float(E.measure()) / (float(m_c) * E.n * E.g2_value ** dim_s)
        rhos.append(rho)
    band = max(rhos) / min(rhos)
    ok = ok and band <= 100.0
    elapsed = build_time + (time.perf_counter() - t0)
    report(6, "level-set construction soundness", elapsed, 120.0, ok,
           f"sizes={[E.size for E in levels]} rho-band={band:.2f}")


def test_criterion_07_kochen_stone(criterion6_levels, cantor_weights):
    levels, _ = criterion6_levels
    t0 = time.perf_counter()
    ks = kochen_stone_bound(levels)
    normalized = ks["normalized"]
    # Cauchy-Schwarz upper check, exact: bound <= sum of level measures
    ok = isinstance(normalized, Fraction)
    ok = ok and Fraction(1, 100) <= normalized <= 1
    ok = ok and ks["bound"] <= ks["sum_measures"]
    report(7, "second-moment lower bound in range", time.perf_counter() - t0,
           60.0, ok, f"normalized={float(normalized):.6f}")


def test_criterion_08_hit_rate_dichotomy(cantor, cantor_weights):
    t0 = time.perf_counter()
    s = similarity_dimension(cantor)
    # divergent configuration
    div_target = TargetFunction(RateFunction.constant(1.0), "cylinder")
    div_curve = hit_rate(cantor, div_target, 1, 5, 1000, seed=42)
    ok = div_curve.cumulative[-1] >= 0.99
    # convergent configuration against the first-moment tail
    conv_target = TargetFunction(RateFunction.geometric(1 / 3), "cylinder")
    conv_curve = hit_rate(cantor, conv_target, 10, 25, 1000, seed=42)
    frac = float(conv_curve.cumulative[-1])
    bound = first_moment_tail(cantor, conv_target.rate, s, 10, 25)
    stderr = math.sqrt(max(frac * (1 - frac), 1e-6) / conv_curve.samples)
    ok = ok and frac <= bound + 3 * stderr
    # exact agreement with the exhaustive oracle for all n <= 12
    agree = True
    for n in range(1, 13):
        code = sample_code(cantor_weights, 40, seed=7, index=n)
        x, _ = project_float(cantor, tuple(int(v) for v in code))
        radius = 1.5 * 3.0 ** -n
        fast = nearby_periodic_points(cantor, x, n, radius)
        slow = nearby_periodic_points_bruteforce(cantor, x, n, radius)
        key = lambda h: (h[0].word, h[0].l, h[2])
        agree = agree and sorted(map(key, fast)) == sorted(map(key, slow))
    ok = ok and agree
    report(8, "hit-rate dichotomy and search completeness",
           time.perf_counter() - t0, 300.0, ok,
           f"divergent@5={div_curve.cumulative[-1]:.3f} "
           f"convergent@25={frac:.3f} bound={bound:.3f} oracle={'ok' if agree else 'BAD'}")


def test_criterion_09_identity_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(123)
    ok = True
    for _ in range(100):
        k = int(rng.integers(2, 6))
        ratios = rng.uniform(0.05, 0.9, k)
        ratios /= max(1.05, ratios.sum() + 0.1)  # keep dimension below 1-ish
        ratios = np.clip(ratios, 0.02, 0.9)
        maps = [SimilarityMap.from_float(float(r), [float(i)]) for i, r in enumerate(ratios)]
        ifs = IFSystem.from_maps(maps)
        s = similarity_dimension(ifs)
        ok = ok and abs(float(np.sum(ratios ** s)) - 1.0) <= 1e-9
        p = natural_weights(ifs)
        ok = ok and abs(entropy(p) - s * lyapunov(ifs, p)) <= 1e-9
        word = tuple(int(v) for v in rng.integers(0, k, int(rng.integers(1, 10))))
        lhs = float(cylinder_measure(p, word))
        rhs = float(cylinder_ratio(ifs, word)) ** s
        ok = ok and abs(lhs - rhs) <= 1e-9
    report(9, "identity suite on randomized systems", time.perf_counter() - t0,
           5.0, ok)


CANTOR_TEXT = """
[ifs]
dim = 1
map 1 = exact 0/3
map 2 = exact 2/3
[experiment]
seed = 42
samples = 10000
nlist = 200
rate = constant 1.0
mode = cylinder
levels = 1 5
"""

TWOSCALE_TEXT = CANTOR_TEXT.replace("exact 0/3", "exact 0/2").replace(
    "exact 2/3", "exact 3/4").replace("nlist = 200", "nlist = 400")

CONV_TEXT = CANTOR_TEXT.replace("rate = constant 1.0",
                                "rate = geometric 0.3333333333333333").replace(
    "levels = 1 5", "levels = 10 25").replace("samples = 10000", "samples = 1000")


def _strip_timestamp(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    return "\n".join(ln for ln in lines if not ln.startswith("# timestamp="))


def test_criterion_10_determinism(tmp_path):
    t0 = time.perf_counter()
    cases = [
        ("lemma31", CANTOR_TEXT, "lemma31.csv"),
        ("lemma31", TWOSCALE_TEXT, "lemma31.csv"),
        ("good-sets", CANTOR_TEXT, "good_sets.csv"),
        ("good-sets", TWOSCALE_TEXT, "good_sets.csv"),
        ("hitrate", CANTOR_TEXT, "hitrate.csv"),
        ("hitrate", CONV_TEXT, "hitrate.csv"),
    ]
    ok = True
    for i, (sub, text, fname) in enumerate(cases):
        spec = tmp_path / f"case{i}.spec"
        spec.write_text(text)
        bodies = []
        for threads in ("1", "8"):
            out = tmp_path / f"case{i}_t{threads}"
            code = cli_main([sub, "--spec", str(spec), "--out", str(out),
                             "--threads", threads])
            ok = ok and code == 0
            bodies.append(_strip_timestamp(os.path.join(str(out), fname)))
        ok = ok and bodies[0] == bodies[1]
    report(10, "byte-identical replays across thread counts",
           time.perf_counter() - t0, 600.0, ok, f"cases={len(cases)}")

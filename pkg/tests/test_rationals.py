import math
from fractions import Fraction

import pytest

from ifslab.rationals import (
    Representation,
    code_of_value,
    enumerate_rationals,
    find_representations,
    intrinsic_denominator,
    reduced_denominator,
    representation_denominator,
    separation_check,
)
from ifslab.words import canonicalize, project_exact


def brute_force_qint(ifs, n_max):
    """Independent oracle: group every (word, l) with n <= n_max by exact value.

    Values are computed from scratch (suffix fixed point, prefix map) without
    the library's projection code; returns value -> (q_int, n, l, all denominators).
    """
    m = ifs.size
    table = {}
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
                # suffix composed map: scale 1/prod(q), translation by digits
                rs = Fraction(1)
                ts = [Fraction(0)] * ifs.dim
                for j in range(l, n):
                    for i in range(ifs.dim):
                        ts[i] = (ts[i] + ps[j][i]) / qs[j] if False else ts[i] + rs * Fraction(ps[j][i], qs[j])
                    rs = rs / qs[j]
                y = [t / (1 - rs) for t in ts]
                rp = Fraction(1)
                tp = [Fraction(0)] * ifs.dim
                for j in range(l):
                    for i in range(ifs.dim):
                        tp[i] = tp[i] + rp * Fraction(ps[j][i], qs[j])
                    rp = rp / qs[j]
                val = tuple(rp * yi + ti for yi, ti in zip(y, tp))
                den = math.prod(qs[:l]) * (math.prod(qs[l:]) - 1)
                rec = table.get(val)
                key = (den, n, l)
                if rec is None or key < rec[0]:
                    table[val] = (key, [den] if rec is None else rec[1] + [den])
                else:
                    rec[1].append(den)
    return {v: (k[0], k[1], k[2], dens) for v, (k, dens) in table.items()}


class TestRepresentationDenominator:
    def test_examples(self, cantor):
        r1 = Representation(l=0, n=2, word=(0, 1))
        r2 = Representation(l=1, n=2, word=(1, 0))
        assert representation_denominator(cantor, r1) == 8
        assert representation_denominator(cantor, r2) == 6

    def test_equicontractive_comparability(self, cantor):
        # q^(n-1) <= denominator <= q^n for every split of every word
        for n in range(1, 8):
            for widx in range(2 ** n):
                word = tuple((widx >> (n - 1 - i)) & 1 for i in range(n))
                for l in range(n):
                    d = representation_denominator(
                        cantor, Representation(l=l, n=n, word=word))
                    assert 3 ** (n - 1) <= d <= 3 ** n

    def test_general_comparability(self, twoscale):
        for n in range(1, 8):
            for widx in range(2 ** n):
                word = tuple((widx >> (n - 1 - i)) & 1 for i in range(n))
                for l in range(n):
                    d = representation_denominator(
                        twoscale, Representation(l=l, n=n, word=word))
                    assert 2 ** (n - 1) <= d <= 4 ** n


class TestFindRepresentations:
    def test_quarter_cap6(self, cantor):
        reps, complete = find_representations(cantor, ((), (0, 1)), 6)
        assert complete
        assert {(r.l, r.n) for r in reps} == {
            (0, 2), (0, 4), (0, 6), (1, 3), (1, 5), (2, 4), (2, 6), (3, 5), (4, 6)}
        for r in reps:
            assert project_exact(cantor, canonicalize(r.word[:r.l], r.word[r.l:])) == (
                Fraction(1, 4),)

    def test_two_thirds_cap4(self, cantor):
        reps, _ = find_representations(cantor, ((1,), (0,)), 4)
        assert {(r.l, r.n) for r in reps} == {
            (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)}

    def test_zero_cap2(self, cantor):
        reps, _ = find_representations(cantor, ((), (0,)), 2)
        assert {(r.l, r.n) for r in reps} == {(0, 1), (0, 2), (1, 2)}

    def test_cap_too_small_rejected(self, cantor):
        with pytest.raises(ValueError):
            find_representations(cantor, ((), (0, 1)), 1)


class TestIntrinsicDenominator:
    def test_examples(self, cantor):
        assert intrinsic_denominator(cantor, ((), (0, 1)))[:3] == (8, 2, 0)
        assert intrinsic_denominator(cantor, ((1,), (0,)))[:3] == (6, 2, 1)
        assert intrinsic_denominator(cantor, ((), (0,)))[:3] == (2, 1, 0)

    def test_certified(self, cantor):
        q_int, n, l, certified, complete = intrinsic_denominator(cantor, ((), (0, 1)))
        assert certified and complete

    def test_representation_invariant(self, cantor):
        base = intrinsic_denominator(cantor, ((0,), (1, 0)))
        assert intrinsic_denominator(cantor, ((0, 1, 0), (1, 0)))[:3] == base[:3]
        assert intrinsic_denominator(cantor, ((0,), (1, 0, 1, 0)))[:3] == base[:3]

    def test_overlap_system_alternative_codes(self, overlap_pair):
        # 0 is the fixed point of both maps: the one-letter code through q=2
        # gives denominator 2 - 1 = 1
        q_int, n, l, certified, complete = intrinsic_denominator(overlap_pair, ((), (1,)))
        assert (q_int, n, l) == (1, 1, 0)
        assert complete

    def test_matches_bruteforce_oracle(self, cantor):
        oracle = brute_force_qint(cantor, 7)
        points, _ = enumerate_rationals(cantor, 5)
        for pt in points:
            assert pt.value in oracle
            assert pt.q_int == oracle[pt.value][0]
            assert (pt.n_param, pt.l_param) == (oracle[pt.value][1], oracle[pt.value][2])

    def test_matches_bruteforce_oracle_twoscale(self, twoscale):
        oracle = brute_force_qint(twoscale, 8)
        points, _ = enumerate_rationals(twoscale, 5)
        for pt in points:
            assert pt.q_int == oracle[pt.value][0], pt.value


class TestEnumerate:
    def test_depth2_six_points(self, cantor):
        points, partial = enumerate_rationals(cantor, 2)
        assert not partial
        values = sorted(pt.value[0] for pt in points)
        assert values == [Fraction(0), Fraction(1, 4), Fraction(1, 3),
                          Fraction(2, 3), Fraction(3, 4), Fraction(1)]

    def test_depth1_fixed_points(self, cantor):
        points, _ = enumerate_rationals(cantor, 1)
        assert sorted(pt.value[0] for pt in points) == [Fraction(0), Fraction(1)]

    def test_monotone_nesting(self, cantor):
        v1 = {pt.value for pt in enumerate_rationals(cantor, 1)[0]}
        v2 = {pt.value for pt in enumerate_rationals(cantor, 2)[0]}
        assert v1 <= v2

    def test_code_cap_partial_flag(self, cantor):
        _, partial = enumerate_rationals(cantor, 4, code_cap=10)
        assert partial

    def test_reduced_le_qint(self, cantor):
        points, _ = enumerate_rationals(cantor, 6)
        for pt in points:
            assert pt.reduced_q <= pt.q_int

    def test_diameter_denominator_comparability(self, cantor):
        # Diam(X_word) * denominator stays in a fixed band of ratio <= 9
        points, _ = enumerate_rationals(cantor, 6)
        ratios = []
        for pt in points:
            for rep in pt.reps:
                diam = 3.0 ** -rep.n  # Diam(X) = 1
                ratios.append(diam * representation_denominator(cantor, rep))
        assert max(ratios) / min(ratios) <= 9.0


class TestReducedDenominator:
    def test_basics(self):
        assert reduced_denominator((Fraction(1, 4),)) == 4
        assert reduced_denominator((Fraction(2, 3),)) == 3
        assert reduced_denominator((Fraction(1, 4), Fraction(2, 3))) == 12


class TestSeparation:
    def test_cantor_ssc(self, cantor):
        assert separation_check(cantor, 3).verdict == "SSC-witnessed"

    def test_planar_four_ssc(self, planar_four):
        assert separation_check(planar_four, 3).verdict == "SSC-witnessed"

    def test_overlap_witnessed(self, overlap_pair):
        assert separation_check(overlap_pair, 3).verdict == "overlap-witnessed"

    def test_touching_dyadic_inconclusive(self):
        from ifslab.ifs import IFSystem, SimilarityMap

        ifs = IFSystem.from_maps(
            [SimilarityMap.from_exact([0], 2), SimilarityMap.from_exact([1], 2)])
        assert separation_check(ifs, 3).verdict == "inconclusive"


def test_unique_coding_for_separated_system(cantor):
    # strong separation: each exact value owns exactly one canonical code
    seen = {}
    for total in range(1, 6):
        for l in range(total):
            for widx in range(2 ** total):
                digits = tuple((widx >> (total - 1 - i)) & 1 for i in range(total))
                code = canonicalize(digits[:l], digits[l:])
                val = project_exact(cantor, code)
                seen.setdefault(val, set()).add((code.u, code.v))
    assert all(len(codes) == 1 for codes in seen.values())


class TestCodeOfValue:
    def test_round_trip(self, cantor):
        for code in [((), (0, 1)), ((1,), (0,)), ((), (1,)), ((0, 1), (1, 0, 0))]:
            x = project_exact(cantor, canonicalize(*code))
            found = code_of_value(cantor, x)
            assert project_exact(cantor, found) == x

    def test_not_in_attractor(self, cantor):
        with pytest.raises(ValueError):
            code_of_value(cantor, (Fraction(1, 2),), max_total=10)

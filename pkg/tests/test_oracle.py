from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from localboot.model import FROBOSE, MODIFIED, STANDARD, Rect
from localboot.oracle import (MAX_SITES, WindowTooLarge, exact_event_probability,
                              exact_growth_probability, exact_spanning_probability, naive_relax)

LINE = [(1, 0), (2, 0)]
TARGET = Rect(0, 2, 0, 0)


def spanning_formula(p):
    return p ** 4 + 4 * p ** 3 * (1 - p) + 2 * p ** 2 * (1 - p) ** 2


class TestExactResult:
    def test_true_predicate(self):
        res = exact_event_probability([(x, 0) for x in range(6)], lambda occ: True, 0.5)
        assert res.counts == tuple(comb(6, k) for k in range(7))
        assert res.exact(Fraction(1, 2)) == 1
        assert res.value == 1.0

    def test_all_occupied(self):
        sites = [(0, y) for y in range(5)]
        res = exact_event_probability(sites, lambda occ: len(occ) == 5, 0.3)
        assert res.value == pytest.approx(0.3 ** 5, rel=1e-14)

    def test_too_large(self):
        with pytest.raises(WindowTooLarge):
            exact_event_probability([(x, 0) for x in range(MAX_SITES + 1)], lambda o: True, 0.5)

    def test_gray_visits_every_subset(self):
        seen = set()
        exact_event_probability([(x, 0) for x in range(5)], lambda occ: seen.add(occ) or False, 0.5)
        assert len(seen) == 32


class TestGrowth:
    def test_line_standard(self):
        res = exact_growth_probability(LINE, STANDARD, TARGET, 0.3)
        assert res.counts == (0, 1, 1)
        assert res.exact(Fraction(3, 10)) == Fraction(3, 10)

    def test_line_frobose(self):
        res = exact_growth_probability(LINE, FROBOSE, TARGET, 0.3)
        assert res.counts == (0, 0, 1)
        assert res.exact(Fraction(3, 10)) == Fraction(9, 100)

    def test_empty_window(self):
        res = exact_growth_probability([], STANDARD, Rect(0, 0, 0, 0), 0.4)
        assert res.counts == (1,) and res.value == 1

    def test_origin_rejected(self):
        with pytest.raises(ValueError):
            exact_growth_probability([(0, 0)], STANDARD, TARGET, 0.3)

    @pytest.mark.parametrize("v", [STANDARD, MODIFIED, FROBOSE])
    def test_three_by_three(self, v):
        window = [s for s in Rect(-1, 1, -1, 1).sites() if s != (0, 0)]
        res = exact_growth_probability(window, v, Rect(-1, 1, -1, 1), 0.5)
        assert all(0 <= c <= comb(8, k) for k, c in enumerate(res.counts))
        vals = [res.evaluate(p / 10) for p in range(1, 10)]
        assert vals == sorted(vals)
        assert res.counts[-1] == 1

    def test_variant_ordering(self):
        window = [s for s in Rect(-1, 2, 0, 1).sites() if s != (0, 0)]
        t = Rect(-1, 2, 0, 1)
        ps = {v.name: exact_growth_probability(window, v, t, 0.4).value for v in (STANDARD, MODIFIED, FROBOSE)}
        # larger reach never hurts
        assert ps["frobose"] <= ps["modified"] <= ps["standard"]


class TestSpanning:
    @pytest.mark.parametrize("p", [Fraction(1, 5), Fraction(3, 10), Fraction(1, 2)])
    def test_two_by_two(self, p):
        res = exact_spanning_probability(2, float(p))
        assert res.exact(p) == spanning_formula(p)

    def test_one_and_three(self):
        assert exact_spanning_probability(1, 0.3).value == pytest.approx(0.3)
        vals = [exact_spanning_probability(3, p / 10).value for p in range(1, 10)]
        assert vals == sorted(vals)


class TestNaiveRelax:
    def test_standard_hand_example(self):
        final = naive_relax({(0, 0): 2, (2, 0): 1, (0, 2): 1}, STANDARD.reaches)
        assert {s for s, v in final.items() if v == 2} == set(Rect(0, 2, 0, 2).sites())

    def test_two_neighbour_rule_only(self):
        final = naive_relax({(0, 0): 2, (1, 1): 2}, lambda dx, dy: False, use_l1=False)
        assert {s for s, v in final.items() if v == 2} == set(Rect(0, 1, 0, 1).sites())

    @given(st.sets(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), max_size=12))
    def test_never_deactivates(self, occ):
        start = {s: 1 for s in occ}
        start[(0, 0)] = 2
        final = naive_relax(start, FROBOSE.reaches)
        assert all(final[s] >= v for s, v in start.items())

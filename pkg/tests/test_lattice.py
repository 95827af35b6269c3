import numpy as np
import pytest
from hypothesis import given, strategies as st

from localboot.lattice import (Configuration, eventually_active, relax, run_standard_bp,
                               standard_bp_configuration, step)
from localboot.model import EMPTY, FROBOSE, MODIFIED, STANDARD, Field, Rect, SiteState
from localboot.oracle import naive_relax

E, O, A = SiteState.EMPTY, SiteState.OCCUPIED, SiteState.ACTIVE
variants = st.sampled_from([STANDARD, MODIFIED, FROBOSE])


def configuration(window, pairs):
    return Configuration.from_sites(window, dict(pairs))


@st.composite
def small_configs(draw):
    w = Rect(0, draw(st.integers(0, 6)), 0, draw(st.integers(0, 6)))
    states = draw(st.lists(st.sampled_from([0, 0, 1, 1, 2]), min_size=w.area, max_size=w.area))
    arr = np.array(states, dtype=np.uint8).reshape(w.dims)
    return Configuration(w, arr)


class TestRules:
    def test_standard_reach_two(self):
        c = configuration(Rect(0, 2, 0, 0), [((0, 0), A), ((2, 0), O)])
        assert step(c, STANDARD).state(2, 0) == A

    def test_diagonal(self):
        c = configuration(Rect(0, 1, 0, 1), [((0, 0), A), ((1, 1), O)])
        assert step(c, MODIFIED).state(1, 1) == A
        assert step(c, FROBOSE).state(1, 1) == O

    def test_two_neighbour_rule(self):
        c = configuration(Rect(0, 2, 0, 0), [((0, 0), A), ((2, 0), A)])
        assert step(c, FROBOSE).state(1, 0) == A
        c1 = configuration(Rect(0, 2, 0, 0), [((0, 0), A)])
        assert step(c1, FROBOSE).state(1, 0) == E

    def test_synchronous(self):
        # a chain of Occupied sites advances one site per step
        c = configuration(Rect(0, 3, 0, 0), [((0, 0), A), ((1, 0), O), ((2, 0), O), ((3, 0), O)])
        s1 = step(c, FROBOSE)
        assert [s1.state(x, 0) for x in range(4)] == [A, A, O, O]
        assert s1.time == 1

    @given(small_configs(), variants)
    def test_only_toward_active(self, c, v):
        n = step(c, v)
        before, after = c.states, n.states
        assert ((after == before) | (after == A)).all()


class TestRelax:
    def test_empty_window(self):
        c = Configuration.empty(Rect(0, 3, 0, 3))
        final, steps = relax(c, STANDARD)
        assert steps == 1 and (final.states == E).all()

    def test_hand_example(self):
        c = configuration(Rect(-2, 4, -2, 4), [((0, 0), A), ((2, 0), O), ((0, 2), O)])
        final, _ = relax(c, STANDARD)
        assert final.active_sites() == frozenset(Rect(0, 2, 0, 2).sites())

    def test_saturation(self):
        w = Rect(0, 4, 0, 4)
        arr = np.full(w.dims, O, dtype=np.uint8)
        arr[2, 2] = A
        final, _ = relax(Configuration(w, arr), FROBOSE)
        assert (final.states == A).all()

    @given(small_configs(), variants)
    def test_matches_naive(self, c, v):
        final, _ = relax(c, v)
        start = {}
        for (x, y) in c.window.sites():
            start[(x, y)] = int(c.states[x, y])
        ref = naive_relax(start, v.reaches)
        expect = {s for s, val in ref.items() if val == A and s in c.window}
        assert final.active_sites() == expect

    @given(small_configs(), variants)
    def test_fixed_point(self, c, v):
        final, _ = relax(c, v)
        again, steps = relax(final, v)
        assert steps == 1 and (again.states == final.states).all()
        assert (step(final, v).states == final.states).all()

    @given(small_configs(), variants, st.data())
    def test_monotone_in_occupied(self, c, v, data):
        # turning an Empty site Occupied never shrinks the final Active set
        empties = list(zip(*np.nonzero(c.states == E)))
        if not empties:
            return
        i, j = data.draw(st.sampled_from(empties))
        more = c.states.copy()
        more[i, j] = O
        a, _ = relax(c, v)
        b, _ = relax(Configuration(c.window, more), v)
        assert a.active_sites() <= b.active_sites()


class TestEventuallyActive:
    def test_empty_origin(self):
        f = Field(1, 0.3, SiteState.EMPTY)
        fx = eventually_active(f, Rect(-5, 5, -5, 5), STANDARD)
        assert fx.active == frozenset() and fx.rect is EMPTY

    def test_lonely_origin(self):
        fx = eventually_active(Field(1, 0.0), Rect(-4, 4, -4, 4), STANDARD)
        assert fx.active == {(0, 0)} and not fx.boundary_touched

    def test_boundary_flag(self):
        fx = eventually_active(Field(1, 1.0), Rect(-4, 4, -4, 4), MODIFIED)
        assert fx.boundary_touched and fx.rect == Rect(-4, 4, -4, 4)

    def test_window_must_hold_origin(self):
        with pytest.raises(ValueError):
            eventually_active(Field(1, 0.2), Rect(1, 5, 1, 5), STANDARD)

    @pytest.mark.parametrize("v", [STANDARD, MODIFIED, FROBOSE])
    def test_uncensored_fixations_are_rectangles(self, v):
        w = Rect(-25, 25, -25, 25)
        seen = 0
        for seed in range(300):
            fx = eventually_active(Field(seed, 0.12), w, v)
            if not fx.boundary_touched:
                seen += 1
                assert fx.is_rectangle()
        assert seen > 50


class TestStandardBP:
    def test_extremes(self):
        assert run_standard_bp(5, 1.0, 0)
        assert not run_standard_bp(5, 0.0, 0)

    def test_configuration_matches_run(self):
        for seed in range(50):
            c = standard_bp_configuration(4, 0.4, seed)
            ref = naive_relax({s: A for s in c.active_sites()}, lambda dx, dy: False, use_l1=False)
            spans = all(ref.get(s) == A for s in Rect(1, 4, 1, 4).sites())
            assert spans == run_standard_bp(4, 0.4, seed)

    def test_bad_size(self):
        with pytest.raises(ValueError):
            run_standard_bp(0, 0.5, 1)

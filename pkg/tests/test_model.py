import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from localboot import _kernels as K
from localboot.model import (EMPTY, FROBOSE, MODIFIED, STANDARD, Field, Rect, SiteState,
                             frame_strips, get_variant, mix64, site_state, trial_seed)

coords = st.integers(-50, 50)


@st.composite
def rects(draw, lo=-20, hi=20):
    x0 = draw(st.integers(lo, hi))
    y0 = draw(st.integers(lo, hi))
    return Rect(x0, x0 + draw(st.integers(0, 8)), y0, y0 + draw(st.integers(0, 8)))


@st.composite
def nested(draw):
    inner = draw(rects())
    k = [draw(st.integers(0, 3)) for _ in range(4)]
    outer = Rect(inner.xmin - k[0], inner.xmax + k[1], inner.ymin - k[2], inner.ymax + k[3])
    return inner, outer


class TestVariant:
    def test_lambdas(self):
        assert STANDARD.lam == pytest.approx(math.pi ** 2 / 18, abs=1e-15)
        assert MODIFIED.lam == FROBOSE.lam == pytest.approx(math.pi ** 2 / 6, abs=1e-15)

    def test_pads_and_rates(self):
        assert (STANDARD.pad, STANDARD.rate) == (2, "g")
        assert (MODIFIED.pad, MODIFIED.rate) == (1, "f")
        assert (FROBOSE.pad, FROBOSE.rate) == (1, "f")
        assert STANDARD.double_gap and not MODIFIED.double_gap and not FROBOSE.double_gap

    @pytest.mark.parametrize("dx", range(-3, 4))
    @pytest.mark.parametrize("dy", range(-3, 4))
    def test_reach(self, dx, dy):
        nz = (dx, dy) != (0, 0)
        assert STANDARD.reaches(dx, dy) == (nz and abs(dx) + abs(dy) <= 2)
        assert MODIFIED.reaches(dx, dy) == (nz and max(abs(dx), abs(dy)) <= 1)
        assert FROBOSE.reaches(dx, dy) == (abs(dx) + abs(dy) == 1)

    def test_kernel_offsets_match_reach(self):
        for v in (STANDARD, MODIFIED, FROBOSE):
            offs = {tuple(int(c) for c in o) for o in K.OFFSETS[:v.reach]}
            expect = {(dx, dy) for dx in range(-2, 3) for dy in range(-2, 3) if v.reaches(dx, dy)}
            assert offs == expect

    def test_lookup(self):
        assert get_variant("standard") is STANDARD
        assert get_variant("Froböse") is FROBOSE
        assert get_variant(MODIFIED) is MODIFIED
        with pytest.raises(ValueError):
            get_variant("hexagonal")


class TestRect:
    def test_basic(self):
        r = Rect(0, 2, -1, 3)
        assert r.dims == (3, 5)
        assert r.semiperimeter == 8
        assert r.area == 15 == len(list(r.sites()))
        assert (2, 3) in r and (3, 3) not in r
        assert r.padded(1) == Rect(-1, 3, -2, 4)

    def test_invalid(self):
        with pytest.raises(ValueError):
            Rect(1, 0, 0, 0)
        with pytest.raises(OverflowError):
            Rect(0, 2 ** 62, 0, 0)
        assert Rect.from_bounds(1, 0, 0, 0) is EMPTY

    def test_empty(self):
        assert EMPTY.is_empty and EMPTY.area == 0 and (0, 0) not in EMPTY
        assert EMPTY.subset_of(Rect(0, 0, 0, 0))
        with pytest.raises(Exception):
            EMPTY.dims

    @given(rects(), rects())
    def test_subset_matches_sites(self, a, b):
        assert a.subset_of(b) == set(a.sites()).issubset(set(b.sites()))


class TestFrameStrips:
    def test_inner_equals_outer(self):
        r = Rect(0, 2, 0, 2)
        assert all(s.is_empty for s in frame_strips(r, r))

    def test_full_frame(self):
        strips = frame_strips(Rect(0, 2, 0, 2), Rect(-1, 3, -1, 3))
        assert all(not s.is_empty for s in strips)
        assert sum(s.area for s in strips) == 16

    def test_right_side_only(self):
        strips = frame_strips(Rect(0, 2, 0, 2), Rect(0, 4, 0, 2))
        assert [s.is_empty for s in strips] == [True, True, True, False, True, True, True, True]
        assert strips[3] == Rect(3, 4, 0, 2)
        assert sum(s.area for s in strips) == 6

    def test_layout(self):
        s = frame_strips(Rect(0, 0, 0, 0), Rect(-1, 1, -1, 1))
        centres = [(r.xmin, r.ymin) for r in s]
        assert centres == [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)]

    def test_not_nested(self):
        with pytest.raises(ValueError):
            frame_strips(Rect(0, 3, 0, 0), Rect(0, 2, 0, 2))

    @given(nested())
    def test_partition(self, io):
        inner, outer = io
        frame = set(outer.sites()) - set(inner.sites())
        seen = []
        for s in frame_strips(inner, outer):
            seen.extend(s.sites())
        assert len(seen) == len(set(seen))
        assert set(seen) == frame


class TestField:
    def test_hash_is_splitmix(self):
        # splitmix64 finalizer reference values
        assert mix64(0) == 0
        assert mix64(1) == 0x5692161D100B05E5
        assert int(K.mix64(np.uint64(1))) == mix64(1)

    @given(st.integers(0, 2 ** 64 - 1), st.integers(0, 10 ** 6))
    def test_trial_seed_kernel(self, master, i):
        assert int(K.trial_seed(np.uint64(master), i)) == trial_seed(master, i)

    @given(st.integers(0, 2 ** 63), st.floats(0, 1), rects())
    def test_materialize_matches_pointwise(self, seed, p, r):
        f = Field(seed, p)
        grid = f.materialize(r)
        for (x, y) in r.sites():
            assert grid[x - r.xmin, y - r.ymin] == site_state(f, x, y)

    def test_extreme_p(self):
        r = Rect(-5, 5, -5, 5)
        g0 = Field(1, 0.0).materialize(r)
        g1 = Field(1, 1.0).materialize(r)
        assert g0[5, 5] == SiteState.ACTIVE and g1[5, 5] == SiteState.ACTIVE
        g0[5, 5] = 0
        g1[5, 5] = 1
        assert (g0 == SiteState.EMPTY).all() and (g1 == SiteState.OCCUPIED).all()

    def test_origin_modes(self):
        assert Field(3, 0.5, SiteState.EMPTY).state(0, 0) == SiteState.EMPTY
        sampled = [Field(s, 0.3, None).state(0, 0) for s in range(4000)]
        assert set(sampled) <= {SiteState.ACTIVE, SiteState.EMPTY}
        frac = sum(s == SiteState.ACTIVE for s in sampled) / 4000
        assert abs(frac - 0.3) < 5 * math.sqrt(0.3 * 0.7 / 4000)

    @pytest.mark.parametrize("p", [0.05, 0.3, 0.77])
    def test_density(self, p):
        g = Field(11, p).materialize(Rect(1, 300, 1, 300))
        n = g.size
        frac = (g == SiteState.OCCUPIED).mean()
        assert abs(frac - p) < 5 * math.sqrt(p * (1 - p) / n)

    def test_determinism_and_independence(self):
        r = Rect(-10, 10, -10, 10)
        assert (Field(5, 0.4).materialize(r) == Field(5, 0.4).materialize(r)).all()
        assert (Field(5, 0.4).materialize(r) != Field(6, 0.4).materialize(r)).any()

    def test_p_out_of_range(self):
        with pytest.raises(ValueError):
            Field(0, 1.5)

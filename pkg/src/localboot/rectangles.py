"""The rectangle process and the gap events used to bound it."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels as K
from .analytics import ScaleConstants, scale_constants
from .model import EMPTY, STANDARD, AnyRect, Field, Rect, Variant, frame_strips, get_variant

FIXATED = "fixated"
THRESHOLD_REACHED = "thresholdReached"
STEP_CAP = "stepCap"
_STOP_NAMES = {K.FIXATED: FIXATED, K.THRESHOLD: THRESHOLD_REACHED, K.STEP_CAP: STEP_CAP}


class RectangularityError(AssertionError):
    """A relaxed rectangle-process step produced a non-rectangular Active set."""


def _raise_for(code: int, where: str):
    if code == K.NOT_RECTANGLE:
        raise RectangularityError(f"fixated Active set is not a rectangle ({where})")
    if code == K.COORD_OVERFLOW:
        raise OverflowError(f"rectangle process reached coordinate magnitude 2**62 ({where})")


def advance(field: Field, variant: Variant, rect: Rect) -> Rect:
    """One rectangle-process step: ``rect`` all Active, the field on the pad
    ring, Empty beyond; relax and return the resulting Active rectangle."""
    variant = get_variant(variant)
    if rect.is_empty:
        raise ValueError("cannot advance the empty rectangle")
    key, thr, full, origin = field.kernel_args()
    code, x0, x1, y0, y1 = K.advance(key, thr, full, origin, variant.reach, variant.pad,
                                     rect.xmin, rect.xmax, rect.ymin, rect.ymax)
    _raise_for(code, f"advancing {rect!r}")
    return Rect(x0, x1, y0, y1)


@dataclass(frozen=True)
class Trajectory:
    rects: Tuple[Rect, ...]
    stop: str
    field: Field
    variant: Variant

    @property
    def final(self) -> AnyRect:
        return self.rects[-1] if self.rects else EMPTY

    @property
    def dims(self) -> List[Tuple[int, int]]:
        return [r.dims for r in self.rects]

    def dumps(self) -> str:
        lines = [f"{i} {r.xmin} {r.xmax} {r.ymin} {r.ymax}" for i, r in enumerate(self.rects)]
        lines.append(f"stop {self.stop}")
        return "\n".join(lines) + "\n"


def parse_trajectory(text: str) -> Tuple[List[Rect], str]:
    """Inverse of Trajectory.dumps: (rectangles, stop reason)."""
    rects: List[Rect] = []
    stop = None
    for n, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "stop":
            if len(parts) != 2 or parts[1] not in (FIXATED, THRESHOLD_REACHED, STEP_CAP):
                raise ValueError(f"line {n}: bad stop line {line!r}")
            stop = parts[1]
            continue
        if stop is not None or len(parts) != 5 or int(parts[0]) != len(rects):
            raise ValueError(f"line {n}: unexpected {line!r}")
        rects.append(Rect(*map(int, parts[1:])))
    if stop is None:
        raise ValueError("missing stop line")
    return rects, stop


def run(field: Field, variant: Variant, success_semiperimeter: int, step_cap: int = 10 ** 6) -> Trajectory:
    """Iterate ``advance`` from the origin.

    Stops at fixation, once the semiperimeter reaches
    ``success_semiperimeter``, or after ``step_cap`` advances.  An Empty
    origin gives an empty, fixated trajectory.
    """
    variant = get_variant(variant)
    if success_semiperimeter < 2 or step_cap < 1:
        raise ValueError("need success_semiperimeter >= 2 and step_cap >= 1")
    key, thr, full, origin = field.kernel_args()
    code, arr, n = K.run(key, thr, full, origin, variant.reach, variant.pad,
                         int(success_semiperimeter), int(step_cap), True)
    _raise_for(code, f"seed {field.seed}")
    rects = tuple(Rect(*map(int, row)) for row in arr[:n])
    return Trajectory(rects, _STOP_NAMES[code], field, variant)


def success_threshold(p: float, kappa: float = 2.0) -> int:
    """Semiperimeter taken as the indefinite-growth proxy: kappa * B(q), at
    least 3 so that success always needs one advance past the origin."""
    if p >= 1 or p <= 0:
        return 3
    sc = ScaleConstants.from_q(-math.log1p(-p), p)
    return max(3, math.ceil(kappa * sc.B))


# ---------------------------------------------------------------------------
# gap events


def _bad_lines(empty: np.ndarray, double: bool) -> np.ndarray:
    """Along the last axis: True where lines[..., k] (or lines k, k+1) are empty."""
    if not double:
        return empty
    return empty[..., :-1] & empty[..., 1:]


def _no_gap(lines_empty: np.ndarray, double: bool) -> np.ndarray:
    if lines_empty.shape[-1] == 0:
        return np.ones(lines_empty.shape[:-1], dtype=bool)
    return ~_bad_lines(lines_empty, double).any(axis=-1)


def columns_ok(empty: np.ndarray, double: bool) -> np.ndarray:
    """``empty`` has shape (..., w, h); no (double) gap among its w columns."""
    return _no_gap(empty.all(axis=-1), double)


def rows_ok(empty: np.ndarray, double: bool) -> np.ndarray:
    return _no_gap(empty.all(axis=-2), double)


def check_G(field: Field, rect: Rect, variant: Variant = STANDARD) -> bool:
    """No double gap (other models: no empty line) in the columns or rows of
    ``rect`` in the initial configuration."""
    variant = get_variant(variant)
    empty = field.materialize(rect) == K.EMPTY
    return bool(columns_ok(empty, variant.double_gap) and rows_ok(empty, variant.double_gap))


def d_holds(empty: np.ndarray, inner: Rect, outer: Rect, double: bool) -> np.ndarray:
    """Border event on an emptiness array over ``outer`` (leading axes batch)."""
    li = inner.xmin - outer.xmin
    ri = inner.xmax - outer.xmin + 1
    bj = inner.ymin - outer.ymin
    tj = inner.ymax - outer.ymin + 1
    ok = columns_ok(empty[..., :li, :], double)
    ok &= columns_ok(empty[..., ri:, :], double)
    ok &= rows_ok(empty[..., :, :bj], double)
    ok &= rows_ok(empty[..., :, tj:], double)
    return ok


def check_D(field: Field, inner: Rect, outer: Rect, variant: Variant = STANDARD) -> bool:
    """S1+S8+S7 and S3+S4+S5 have no double gap in the columns, S1+S2+S3 and
    S7+S6+S5 none in the rows (other models: no empty line)."""
    variant = get_variant(variant)
    frame_strips(inner, outer)  # validates nesting
    empty = field.materialize(outer) == K.EMPTY
    return bool(d_holds(empty, inner, outer, variant.double_gap))


def _e_scales(p: float) -> ScaleConstants:
    sc = scale_constants(p)
    if sc.B - sc.A - 10 < 1:
        raise ArithmeticError(f"scales degenerate at this p (p={p}, A={sc.A}, B={sc.B})")
    return sc


def check_E(field: Field, p: Optional[float] = None, variant: Variant = STANDARD) -> bool:
    """Some rectangle containing 0, one side in [B-A-10, B-A] and the other
    in [1, A], has no double gaps (other models: no empty line)."""
    variant = get_variant(variant)
    sc = _e_scales(field.p if p is None else p)
    lo, hi, short = sc.B - sc.A - 10, sc.B - sc.A, sc.A
    region = Rect(-(hi - 1), hi - 1, -(short - 1), short - 1)
    wide = field.materialize(region) == K.EMPTY
    if _e_scan(wide, lo, hi, short, variant.double_gap):
        return True
    tall = field.materialize(Rect(-(short - 1), short - 1, -(hi - 1), hi - 1)) == K.EMPTY
    return _e_scan(tall.T, lo, hi, short, variant.double_gap)


def _e_scan(empty: np.ndarray, lo: int, hi: int, short: int, double: bool) -> bool:
    """``empty`` covers x in [-(hi-1), hi-1], y in [-(short-1), short-1]; look
    for a long-side-along-x rectangle through the centre satisfying G."""
    cx = hi - 1
    cy = short - 1
    nx = empty.shape[0]
    occ = ~empty
    for h in range(1, short + 1):
        for y0 in range(cy - h + 1, cy + 1):
            band = empty[:, y0:y0 + h]
            col_empty = band.all(axis=1)
            bad = _bad_lines(col_empty, double).astype(np.int64)
            bad_prefix = np.concatenate([[0], np.cumsum(bad)])
            # occupancy prefix sums per row of the band
            row_prefix = np.concatenate([np.zeros((1, h), np.int64), np.cumsum(occ[:, y0:y0 + h], axis=0)])
            for w in range(lo, hi + 1):
                x0 = np.arange(cx - w + 1, cx + 1)
                x0 = x0[(x0 >= 0) & (x0 + w <= nx)]
                nbad = w - 1 if double else w
                cols_good = bad_prefix[x0 + nbad] - bad_prefix[x0] == 0
                if not cols_good.any():
                    continue
                row_empty = (row_prefix[x0 + w] - row_prefix[x0]) == 0  # (len(x0), h)
                rows_good = _no_gap(row_empty, double)
                if (cols_good & rows_good).any():
                    return True
    return False


# ---------------------------------------------------------------------------
# good sequences


class _Escaped:
    def __repr__(self):
        return "ESCAPED"

    def __bool__(self):
        return False


ESCAPED = _Escaped()


@dataclass(frozen=True)
class GoodSequence:
    rects: Tuple[Rect, ...]
    q: float
    A: int
    B: int

    @property
    def dims(self) -> List[Tuple[int, int]]:
        return [r.dims for r in self.rects]

    @property
    def increments(self) -> List[Tuple[int, int]]:
        d = self.dims
        return [(a1 - a0, b1 - b0) for (a0, b0), (a1, b1) in zip(d, d[1:])]


def extract_good_sequence(traj: Trajectory, q: float) -> Union[GoodSequence, _Escaped]:
    """Coarse-grain a growing trajectory through the good region
    T = {a, b >= A, a + b <= B}.

    R1 is the first rectangle with dims in T; each next R is the first later
    rectangle whose growth over the current one reaches a*sqrt(q) in width or
    b*sqrt(q) in height; the sequence ends at the first chosen rectangle
    outside T.  Returns ESCAPED when the dims never enter T.
    """
    sc = ScaleConstants.from_q(q)
    A, B = sc.A, sc.B
    rq = math.sqrt(q)
    rects = traj.rects
    start = next((k for k, r in enumerate(rects)
                  if r.width >= A and r.height >= A and r.semiperimeter <= B), None)
    if start is None:
        return ESCAPED
    chosen = [rects[start]]
    for r in rects[start + 1:]:
        a, b = chosen[-1].dims
        if r.width - a >= a * rq or r.height - b >= b * rq:
            chosen.append(r)
            if r.semiperimeter > B:
                return GoodSequence(tuple(chosen), q, A, B)
    raise ValueError("trajectory ends before the extracted sequence leaves the good region")


def is_good_sequence(dims: Sequence[Tuple[int, int]], q: float, A: int, B: int) -> bool:
    """Check the dimension conditions of a good sequence:
    min(a1, b1) in [A, A+3]; a_n + b_n <= B < a_{n+1} + b_{n+1}; and each step
    has s >= a sqrt(q) or t >= b sqrt(q), with s < a sqrt(q) + 4 and
    t < b sqrt(q) + 4."""
    if len(dims) < 2:
        raise ValueError("a good sequence has at least two rectangles")
    rq = math.sqrt(q)
    a1, b1 = dims[0]
    if not A <= min(a1, b1) <= A + 3:
        return False
    if sum(dims[-2]) > B or sum(dims[-1]) <= B:
        return False
    for (a, b), (a2, b2) in zip(dims, dims[1:]):
        s, t = a2 - a, b2 - b
        if s < 0 or t < 0:
            return False
        if not (s >= a * rq or t >= b * rq):
            return False
        if not (s < a * rq + 4 and t < b * rq + 4):
            return False
    return True


def transition_occurs(field: Field, inner: Rect, outer: Rect, variant: Variant,
                      max_steps: int = 10 ** 6) -> bool:
    """Whether the rectangle process restarted from ``inner`` (all Active)
    passes through ``outer``."""
    variant = get_variant(variant)
    if not inner.subset_of(outer):
        raise ValueError(f"{inner!r} is not contained in {outer!r}")
    r = inner
    for _ in range(max_steps):
        if r == outer:
            return True
        nxt = advance(field, variant, r)
        if nxt == r or not nxt.subset_of(outer):
            return False
        r = nxt
    raise RuntimeError("step budget exhausted")

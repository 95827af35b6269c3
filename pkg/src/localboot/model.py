"""Site states, model variants, rectangles and the lazily sampled random field."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Tuple, Union

import numpy as np

from . import _kernels as K

MASK64 = (1 << 64) - 1


class SiteState(IntEnum):
    EMPTY = K.EMPTY
    OCCUPIED = K.OCCUPIED
    ACTIVE = K.ACTIVE


@dataclass(frozen=True)
class Variant:
    """One of the three local models.

    ``reach`` is the number of leading entries of ``_kernels.OFFSETS`` an
    Occupied site scans for an Active one (4: l1<=1, 8: linf<=1, 12: l1<=2).
    """

    name: str
    reach: int
    pad: int
    rate: str  # "g" or "f"

    @property
    def lam(self) -> float:
        return math.pi ** 2 / 18 if self.rate == "g" else math.pi ** 2 / 6

    @property
    def double_gap(self) -> bool:
        # standard model obstructs on two empty lines, the others on one
        return self.rate == "g"

    def reaches(self, dx: int, dy: int) -> bool:
        """True when an Active site at offset (dx, dy) activates an Occupied one."""
        if dx == 0 and dy == 0:
            return False
        if self.reach == 12:
            return abs(dx) + abs(dy) <= 2
        if self.reach == 8:
            return max(abs(dx), abs(dy)) <= 1
        return abs(dx) + abs(dy) <= 1

    def __str__(self) -> str:
        return self.name


STANDARD = Variant("standard", 12, 2, "g")
MODIFIED = Variant("modified", 8, 1, "f")
FROBOSE = Variant("frobose", 4, 1, "f")
VARIANTS = {v.name: v for v in (STANDARD, MODIFIED, FROBOSE)}


def get_variant(v: Union[str, Variant]) -> Variant:
    if isinstance(v, Variant):
        return v
    try:
        return VARIANTS[v.lower().replace("ö", "o")]
    except KeyError:
        raise ValueError(f"unknown model {v!r}; expected one of {sorted(VARIANTS)}") from None


# ---------------------------------------------------------------------------
# rectangles


class _EmptyRect:
    """The empty rectangle.  Has no dimensions; asking for them is a bug."""

    is_empty = True
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EMPTY"

    def __contains__(self, site):
        return False

    def __len__(self):
        return 0

    @property
    def area(self) -> int:
        return 0

    @property
    def dims(self):
        raise ValueError("the empty rectangle has no dimensions")

    def subset_of(self, other) -> bool:
        return True

    def padded(self, k: int):
        return self

    def sites(self):
        return iter(())


EMPTY = _EmptyRect()


@dataclass(frozen=True, order=True)
class Rect:
    """Integer rectangle {xmin..xmax} x {ymin..ymax}, bounds inclusive."""

    xmin: int
    xmax: int
    ymin: int
    ymax: int

    is_empty = False

    def __post_init__(self):
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError(f"degenerate rectangle {self!r}; use EMPTY")
        if max(-self.xmin, self.xmax, -self.ymin, self.ymax) >= K.COORD_LIMIT:
            raise OverflowError(f"rectangle {self!r} reaches coordinate magnitude 2**62")

    @classmethod
    def from_bounds(cls, xmin, xmax, ymin, ymax):
        """Like the constructor, but returns EMPTY for inverted bounds."""
        if xmin > xmax or ymin > ymax:
            return EMPTY
        return cls(int(xmin), int(xmax), int(ymin), int(ymax))

    @classmethod
    def square(cls, lo: int, hi: int) -> "Rect":
        return cls(lo, hi, lo, hi)

    @property
    def width(self) -> int:
        return self.xmax - self.xmin + 1

    @property
    def height(self) -> int:
        return self.ymax - self.ymin + 1

    @property
    def dims(self) -> Tuple[int, int]:
        return self.width, self.height

    @property
    def semiperimeter(self) -> int:
        return self.width + self.height

    @property
    def area(self) -> int:
        return self.width * self.height

    def __len__(self):
        return self.area

    def __contains__(self, site) -> bool:
        x, y = site
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def subset_of(self, other) -> bool:
        if other.is_empty:
            return False
        return (other.xmin <= self.xmin and self.xmax <= other.xmax
                and other.ymin <= self.ymin and self.ymax <= other.ymax)

    def padded(self, k: int) -> "Rect":
        return Rect(self.xmin - k, self.xmax + k, self.ymin - k, self.ymax + k)

    def sites(self):
        for x in range(self.xmin, self.xmax + 1):
            for y in range(self.ymin, self.ymax + 1):
                yield (x, y)


AnyRect = Union[Rect, _EmptyRect]


def frame_strips(inner: Rect, outer: Rect) -> Tuple[AnyRect, ...]:
    """Split ``outer`` minus ``inner`` into the eight frame strips S1..S8.

    S1 is the bottom-left corner, S2 the bottom side, S3 bottom-right, S4 the
    right side, then counterclockwise through S5 (top-right), S6 (top),
    S7 (top-left) to S8 (left side).
    """
    if not inner.subset_of(outer):
        raise ValueError(f"{inner!r} is not contained in {outer!r}")
    left = (outer.xmin, inner.xmin - 1)
    mid_x = (inner.xmin, inner.xmax)
    right = (inner.xmax + 1, outer.xmax)
    bottom = (outer.ymin, inner.ymin - 1)
    mid_y = (inner.ymin, inner.ymax)
    top = (inner.ymax + 1, outer.ymax)
    layout = [(left, bottom), (mid_x, bottom), (right, bottom), (right, mid_y),
              (right, top), (mid_x, top), (left, top), (left, mid_y)]
    return tuple(Rect.from_bounds(xs[0], xs[1], ys[0], ys[1]) for xs, ys in layout)


# ---------------------------------------------------------------------------
# the random field


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(master: int, index: int) -> int:
    """Per-trial field seed; stable across runs and worker layouts."""
    return mix64(mix64(master ^ 0x5851F42D4C957F2D) + (index * 0x8CB92BA72F3D8DD7))


def _site_hash(key: int, x: int, y: int) -> int:
    h = mix64(key ^ ((x & MASK64) * 0xD1B54A32D192ED03 & MASK64))
    return mix64(h ^ ((y & MASK64) * 0xABC98388FB8FAC03 & MASK64))


@dataclass(frozen=True)
class Field:
    """Deterministic, lazily evaluated initial configuration on Z^2.

    Every non-origin site is Occupied with probability ``p``; the origin is
    forced to ``origin`` unless that is None, in which case it is Active with
    probability ``p``.
    """

    seed: int
    p: float
    origin: Optional[SiteState] = SiteState.ACTIVE

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")
        object.__setattr__(self, "seed", int(self.seed) & MASK64)

    @property
    def key(self) -> int:
        return mix64(self.seed ^ 0x9E3779B97F4A7C15)

    @property
    def threshold(self) -> int:
        return min(int(self.p * 2.0 ** 64), MASK64)

    @property
    def full(self) -> bool:
        return self.p >= 1.0

    @property
    def origin_code(self) -> int:
        return K.ORIGIN_SAMPLED if self.origin is None else int(self.origin)

    def kernel_args(self):
        return np.uint64(self.key), np.uint64(self.threshold), self.full, self.origin_code

    def state(self, x: int, y: int) -> SiteState:
        return site_state(self, x, y)

    def with_origin(self, origin: Optional[SiteState]) -> "Field":
        return Field(self.seed, self.p, origin)

    def materialize(self, rect: Rect) -> np.ndarray:
        """States on ``rect`` as a uint8 array indexed [x - xmin, y - ymin]."""
        key, thr, full, origin = self.kernel_args()
        return K.materialize(key, thr, full, origin, rect.xmin, rect.ymin, rect.width, rect.height)


def site_state(field: Field, x: int, y: int) -> SiteState:
    if x == 0 and y == 0 and field.origin is not None:
        return SiteState(field.origin)
    hit = field.full or _site_hash(field.key, x, y) < field.threshold
    if x == 0 and y == 0:
        return SiteState.ACTIVE if hit else SiteState.EMPTY
    return SiteState.OCCUPIED if hit else SiteState.EMPTY

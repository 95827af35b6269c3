"""Synchronous cellular-automaton dynamics on finite windows.

Sites outside the window are Empty.  The relaxation only re-examines the
neighbourhoods of sites activated in the previous step.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import FrozenSet, Mapping, Tuple

import numpy as np

from . import _kernels as K
from .model import EMPTY, AnyRect, Field, Rect, SiteState, Variant, get_variant

Site = Tuple[int, int]


@dataclass(frozen=True)
class Configuration:
    window: Rect
    states: np.ndarray = dc_field(repr=False, compare=False)
    time: int = 0

    def __post_init__(self):
        if self.states.shape != self.window.dims:
            raise ValueError(f"states shape {self.states.shape} != window dims {self.window.dims}")

    @classmethod
    def empty(cls, window: Rect) -> "Configuration":
        return cls(window, np.zeros(window.dims, dtype=np.uint8))

    @classmethod
    def from_sites(cls, window: Rect, sites: Mapping[Site, SiteState]) -> "Configuration":
        states = np.zeros(window.dims, dtype=np.uint8)
        for (x, y), s in sites.items():
            states[x - window.xmin, y - window.ymin] = int(s)
        return cls(window, states)

    @classmethod
    def from_field(cls, field: Field, window: Rect) -> "Configuration":
        return cls(window, field.materialize(window))

    def state(self, x: int, y: int) -> SiteState:
        if (x, y) not in self.window:
            return SiteState.EMPTY
        return SiteState(int(self.states[x - self.window.xmin, y - self.window.ymin]))

    def active_mask(self) -> np.ndarray:
        return self.states == K.ACTIVE

    def active_sites(self) -> FrozenSet[Site]:
        ii, jj = np.nonzero(self.active_mask())
        return frozenset(zip((ii + self.window.xmin).tolist(), (jj + self.window.ymin).tolist()))

    def active_count(self) -> int:
        return int(np.count_nonzero(self.active_mask()))

    def active_bbox(self) -> AnyRect:
        count, i0, i1, j0, j1 = K.active_bbox(self.states)
        if count == 0:
            return EMPTY
        w = self.window
        return Rect(w.xmin + i0, w.xmin + i1, w.ymin + j0, w.ymin + j1)


def step(config: Configuration, variant: Variant) -> Configuration:
    """Apply the update rules once, simultaneously at every window site."""
    variant = get_variant(variant)
    states, _ = K.step_full(config.states, variant.reach)
    return Configuration(config.window, states, config.time + 1)


def relax(config: Configuration, variant: Variant) -> Tuple[Configuration, int]:
    """Iterate ``step`` to the fixed point.

    The step count includes the final pass that changes nothing, so an
    already-fixed configuration reports 1.
    """
    variant = get_variant(variant)
    states = config.states.copy()
    steps = int(K.relax(states, variant.reach))
    return Configuration(config.window, states, config.time + steps), steps


def _bp_relax(config: Configuration) -> Tuple[Configuration, int]:
    # rule (L1) off: only the two-neighbour rule acts
    states = config.states.copy()
    steps = int(K.relax(states, 0))
    return Configuration(config.window, states, config.time + steps), steps


@dataclass(frozen=True)
class Fixation:
    """Fixed point of a window relaxation started from the field."""

    config: Configuration
    steps: int
    boundary_touched: bool

    @property
    def active(self) -> FrozenSet[Site]:
        return self.config.active_sites()

    @property
    def rect(self) -> AnyRect:
        """Bounding rectangle of the Active set (EMPTY when none)."""
        return self.config.active_bbox()

    def is_rectangle(self) -> bool:
        r = self.rect
        return r.is_empty or self.config.active_count() == r.area


def eventually_active(field: Field, window: Rect, variant: Variant) -> Fixation:
    """Relax the field restricted to ``window``.

    ``boundary_touched`` marks results where some Active site sits within the
    variant's pad width of the window edge; those are censored as answers
    about the infinite lattice.
    """
    variant = get_variant(variant)
    if (0, 0) not in window:
        raise ValueError("window must contain the origin")
    final, steps = relax(Configuration.from_field(field, window), variant)
    rect = final.active_bbox()
    touched = False
    if not rect.is_empty:
        touched = not rect.padded(variant.pad).subset_of(window)
    return Fixation(final, steps, touched)


def run_standard_bp(L: int, p: float, seed: int) -> bool:
    """One sample of standard bootstrap percolation on {1..L}^2.

    Sites are Active with probability p (drawn from the field with this
    seed) and Empty otherwise.  True when the whole square fills.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    f = Field(seed, p, origin=None)
    key, thr, full, _ = f.kernel_args()
    return bool(K.bp_spanned(key, thr, full, int(L)))


def standard_bp_configuration(L: int, p: float, seed: int) -> Configuration:
    """The initial square used by run_standard_bp, for inspection."""
    f = Field(seed, p, origin=None)
    key, thr, full, _ = f.kernel_args()
    return Configuration(Rect(1, L, 1, L), K.bp_grid(key, thr, full, int(L)))

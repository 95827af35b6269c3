"""Exhaustive enumeration over tiny windows: exact ground truth for the
engines, the gap predicates and the Monte Carlo estimators.

The relaxer here is deliberately naive (full rescan of every site until
nothing changes) and shares no code with the frontier kernel.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from typing import Callable, Dict, FrozenSet, Iterable, List, Tuple

import numpy as np

from .lattice import Configuration, relax
from .model import Rect, Variant, get_variant

Site = Tuple[int, int]
MAX_SITES = 22

_EMPTY, _OCC, _ACT = 0, 1, 2


class WindowTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ExactResult:
    """counts[k] = number of assignments with k Occupied sites (out of n)
    satisfying the event; probability = sum counts[k] p^k (1-p)^(n-k)."""

    counts: Tuple[int, ...]
    p: float

    @property
    def n(self) -> int:
        return len(self.counts) - 1

    def evaluate(self, p: float) -> float:
        n = self.n
        return float(sum(c * p ** k * (1 - p) ** (n - k) for k, c in enumerate(self.counts)))

    def exact(self, p: Fraction) -> Fraction:
        n = self.n
        return sum(c * p ** k * (1 - p) ** (n - k) for k, c in enumerate(self.counts))

    @property
    def value(self) -> float:
        return self.evaluate(self.p)


def naive_relax(states: Dict[Site, int], reach: Callable[[int, int], bool], use_l1: bool = True) -> Dict[Site, int]:
    """Relax a finite configuration given as a site -> state map; sites not
    in the map are Empty and may become Active."""
    cur = dict(states)
    while True:
        active = {s for s, v in cur.items() if v == _ACT}
        cand = set()
        for (x, y) in active:
            for dx in range(-2, 3):
                for dy in range(-2, 3):
                    cand.add((x + dx, y + dy))
        changes = []
        for (x, y) in cand:
            v = cur.get((x, y), _EMPTY)
            if v == _ACT:
                continue
            if v == _OCC:
                if use_l1 and any((x + dx, y + dy) in active
                                  for dx in range(-2, 3) for dy in range(-2, 3) if reach(dx, dy)):
                    changes.append((x, y))
            else:
                n = sum((x + dx, y + dy) in active for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)))
                if n >= 2:
                    changes.append((x, y))
        if not changes:
            return cur
        for s in changes:
            cur[s] = _ACT


def _gray_assignments(n: int):
    """Yield (k, flipped index or -1) walking all 2^n assignments in Gray order."""
    yield -1
    prev = 0
    for i in range(1, 1 << n):
        g = i ^ (i >> 1)
        yield (g ^ prev).bit_length() - 1
        prev = g


def _check_window(sites) -> List[Site]:
    sites = list(dict.fromkeys(tuple(s) for s in sites))
    if len(sites) > MAX_SITES:
        raise WindowTooLarge(f"{len(sites)} sites exceeds the enumeration limit of {MAX_SITES}")
    return sites


def exact_event_probability(window: Iterable[Site], predicate: Callable[[FrozenSet[Site]], bool],
                            p: float) -> ExactResult:
    """Exact probability that ``predicate(occupied sites)`` holds when each
    window site is independently Occupied with probability p."""
    sites = _check_window(window)
    n = len(sites)
    counts = [0] * (n + 1)
    occupied = set()
    for flip in _gray_assignments(n):
        if flip >= 0:
            occupied ^= {sites[flip]}
        if predicate(frozenset(occupied)):
            counts[len(occupied)] += 1
    return ExactResult(tuple(counts), p)


def _bbox(sites: Iterable[Site]) -> Rect:
    xs, ys = zip(*sites)
    return Rect(min(xs), max(xs), min(ys), max(ys))


def exact_growth_probability(window: Iterable[Site], variant: Variant, target: Rect, p: float,
                             cross_check: bool = True) -> ExactResult:
    """Probability that ``target`` is entirely Active at fixation, given an
    Active origin, the window sites Occupied independently with probability
    p and every other site Empty.

    Each assignment is relaxed by the lattice engine; with ``cross_check``
    it is also relaxed by the naive relaxer and the two must agree.
    """
    variant = get_variant(variant)
    sites = _check_window(window)
    if (0, 0) in sites:
        raise ValueError("the origin is not part of the window; it is always Active")
    box = _bbox(sites + [(0, 0)] + [(target.xmin, target.ymin), (target.xmax, target.ymax)])
    n = len(sites)
    counts = [0] * (n + 1)
    grid = np.zeros(box.dims, dtype=np.uint8)
    grid[-box.xmin, -box.ymin] = _ACT
    idx = [(x - box.xmin, y - box.ymin) for x, y in sites]
    k = 0
    target_idx = (slice(target.xmin - box.xmin, target.xmax - box.xmin + 1),
                  slice(target.ymin - box.ymin, target.ymax - box.ymin + 1))
    for flip in _gray_assignments(n):
        if flip >= 0:
            i, j = idx[flip]
            grid[i, j] ^= _OCC
            k += 1 if grid[i, j] == _OCC else -1
        final, _ = relax(Configuration(box, grid.copy()), variant)
        ok = bool((final.states[target_idx] == _ACT).all())
        if cross_check:
            start = {(x, y): int(grid[x - box.xmin, y - box.ymin]) for x, y in sites}
            start[(0, 0)] = _ACT
            naive = naive_relax(start, variant.reaches)
            naive_ok = all(naive.get(s) == _ACT for s in target.sites())
            if set(final.active_sites()) != {s for s, v in naive.items() if v == _ACT}:
                raise AssertionError("lattice engine and naive relaxer disagree")
            assert naive_ok == ok
        if ok:
            counts[k] += 1
    return ExactResult(tuple(counts), p)


def exact_spanning_probability(L: int, p: float) -> ExactResult:
    """I(L, p) for standard bootstrap percolation by enumeration (L^2 <= 22)."""
    sites = [(x, y) for x in range(1, L + 1) for y in range(1, L + 1)]

    def spans(active: FrozenSet[Site]) -> bool:
        final = naive_relax({s: _ACT for s in active}, lambda dx, dy: False, use_l1=False)
        return all(final.get(s) == _ACT for s in sites)

    return exact_event_probability(sites, spans, p)

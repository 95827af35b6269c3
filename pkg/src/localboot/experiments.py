"""Monte Carlo growth estimates, power-law fits and the bootstrap
percolation threshold scan.

Trials are split into fixed-size chunks whose seeds depend only on the
trial index, so the worker count never changes a result.
"""
from __future__ import annotations

import logging
import math
import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels as K
from .model import Field, Rect, SiteState, Variant, _site_hash, get_variant, mix64, trial_seed
from .rectangles import d_holds, success_threshold, transition_occurs

log = logging.getLogger(__name__)

CHUNK = 4096
Z95 = 1.959963984540054
MIN_P = 0.08
MAX_BP_CELLS = 10 ** 9
GAMMA_EPS = 1e-9


class ScaleRefused(RuntimeError):
    """The requested run is outside what plain Monte Carlo can resolve."""


def _chunks(n: int):
    return [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]


def _map_chunks(fn: Callable[[int, int], np.ndarray], n: int, workers: int):
    chunks = _chunks(n)
    if workers <= 1 or len(chunks) <= 1:
        return [fn(a, b) for a, b in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), chunks))


def wilson(successes: int, trials: int, z: float = Z95) -> Tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class GrowthEstimate:
    variant: str
    p: float
    trials: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float
    alpha_hat: float
    kappa: float
    seed: int
    capped: int = 0
    threshold: int = 0
    error: Optional[str] = None

    @property
    def defined(self) -> bool:
        return self.error is None and self.successes > 0


def _estimate(variant: Variant, p: float, decided: int, successes: int, kappa: float, seed: int,
              factor: float, capped: int, threshold: int) -> GrowthEstimate:
    if successes == 0:
        # one-sided 95% upper bound: 1 - 0.05^(1/n)
        lo, hi = 0.0, (-math.expm1(math.log(0.05) / decided) if decided else 1.0)
    else:
        lo, hi = wilson(successes, decided)
    rate = successes / decided if decided else 0.0
    p_hat = rate * factor
    alpha = 2 * variant.lam + p * math.log(p_hat) if p_hat > 0 else math.nan
    return GrowthEstimate(variant.name, p, decided, successes, p_hat, lo * factor, hi * factor,
                          alpha, kappa, seed, capped, threshold)


def estimate_growth(variant: Variant, p: float, trials: int, kappa: float = 2.0,
                    step_cap: int = 10 ** 6, seed: int = 0, workers: int = 1,
                    conditioned: bool = True, method: str = "rectangles",
                    force: bool = False) -> GrowthEstimate:
    """Estimate P(indefinite growth) by running independent trials to the
    semiperimeter threshold kappa * B(q).

    Conditioned trials force the origin Active and multiply the success rate
    by p; unconditioned ones sample the origin.  ``method="window"`` relaxes
    the full automaton on a window instead of running the rectangle process.
    Trials stopped by ``step_cap`` are counted in ``capped`` and excluded.
    """
    variant = get_variant(variant)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if 0 < p < MIN_P and not force:
        raise ScaleRefused(
            f"p={p} < {MIN_P}: growth probability ~exp(-2*lambda/p) is below plain Monte Carlo "
            "reach; importance splitting is not implemented")
    seed = int(seed) & ((1 << 64) - 1)
    thr_semi = success_threshold(p, kappa)
    f = Field(0, p, SiteState.ACTIVE if conditioned else None)
    _, thr, full, origin = f.kernel_args()
    master = np.uint64(seed)
    if method == "rectangles":
        def work(a, b):
            return K.growth_counts(master, a, b, thr, full, origin, variant.reach, variant.pad,
                                   thr_semi, int(step_cap))
    elif method == "window":
        half = thr_semi + variant.pad + 1

        def work(a, b):
            return K.growth_counts_window(master, a, b, thr, full, origin, variant.reach,
                                          variant.pad, thr_semi, half)
    else:
        raise ValueError(f"unknown method {method!r}")
    counts = np.sum(_map_chunks(work, trials, workers), axis=0)
    succ, fail, capped, errors = (int(c) for c in counts)
    if errors:
        raise AssertionError(f"{errors} trials produced a non-rectangular fixation or overflow")
    if capped:
        log.warning("%d of %d trials hit the step cap and are excluded", capped, trials)
    factor = p if conditioned else 1.0
    return _estimate(variant, p, succ + fail, succ, kappa, seed, factor, capped, thr_semi)


def sweep(variant: Variant, p_list: Sequence[float], trials_per_point: Union[int, Mapping[float, int]],
          kappa: float = 2.0, seed: int = 0, workers: int = 1, step_cap: int = 10 ** 6) -> List[GrowthEstimate]:
    """One estimate per p.  Points that fail (e.g. refused scales) come back
    as rows with ``error`` set instead of aborting the sweep."""
    variant = get_variant(variant)
    if not p_list:
        raise ValueError("empty p list")
    rows = []
    for p in p_list:
        n = trials_per_point[p] if isinstance(trials_per_point, Mapping) else trials_per_point
        try:
            rows.append(estimate_growth(variant, p, n, kappa, step_cap, seed, workers))
        except (ScaleRefused, ValueError) as exc:
            log.warning("p=%s: %s", p, exc)
            rows.append(GrowthEstimate(variant.name, p, 0, 0, math.nan, math.nan, math.nan,
                                       math.nan, kappa, seed, error=str(exc)))
    return rows


# ---------------------------------------------------------------------------
# fits


@dataclass(frozen=True)
class FitResult:
    c: float
    gamma: float
    residual: float
    lam: float
    rows_used: int
    gamma_in_range: bool


def fit_correction(rows: Iterable[Tuple[float, float, float]], lam: float) -> FitResult:
    """Weighted least squares of log(alpha) = log(c) + gamma log(p).

    ``rows`` are (p, alpha, weight); ``lam`` is the threshold the alphas were
    computed with and is carried into the result.
    """
    rows = list(rows)
    good = [(p, a, w) for p, a, w in rows
            if a > 0 and p > 0 and w > 0 and math.isfinite(a) and math.isfinite(w)]
    if len(good) < len(rows):
        warnings.warn(f"dropped {len(rows) - len(good)} rows with non-positive or undefined alpha",
                      RuntimeWarning, stacklevel=2)
    if len(good) < 3:
        raise ValueError(f"need at least 3 usable rows, have {len(good)}")
    p, a, w = (np.array(col, dtype=float) for col in zip(*good))
    sw = np.sqrt(w)
    X = np.column_stack([np.ones_like(p), np.log(p)]) * sw[:, None]
    y = np.log(a) * sw
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    residual = float(np.linalg.norm(X @ coef - y))
    gamma = float(coef[1])
    # exponents within round-off of the boundary count as on it
    in_range = GAMMA_EPS < gamma < 2 - GAMMA_EPS
    if not in_range:
        warnings.warn(f"fitted exponent {gamma:.4g} is outside (0, 2)", RuntimeWarning, stacklevel=2)
    return FitResult(float(math.exp(coef[0])), gamma, residual, lam, len(good), in_range)


def fit_weight(est: GrowthEstimate) -> float:
    """Inverse variance of log(alpha_hat) from the confidence interval; 1
    when the interval carries no information."""
    if not est.defined or est.alpha_hat <= 0 or est.ci_low <= 0:
        return 1.0
    sd_log_p = (math.log(est.ci_high) - math.log(est.ci_low)) / (2 * Z95)
    sd = est.p * sd_log_p / est.alpha_hat
    return 1.0 / (sd * sd) if sd > 0 else 1.0


# ---------------------------------------------------------------------------
# standard bootstrap percolation


@dataclass(frozen=True)
class ScanRow:
    L: int
    p: float
    trials: int
    spanned: int
    lam: float

    @property
    def spanned_fraction(self) -> float:
        return self.spanned / self.trials

    @property
    def p_log_L_minus_lambda(self) -> float:
        return self.p * math.log(self.L) - self.lam


def _cell_seed(master: int, L: int, p: float) -> int:
    bits = struct.unpack("<Q", struct.pack("<d", float(p)))[0]
    return _site_hash(mix64(master ^ 0x2545F4914F6CDD1D), L, bits)


def bp_spanning_count(L: int, p: float, trials: int, seed: int, workers: int = 1) -> int:
    if L < 1 or trials < 1:
        raise ValueError("need L >= 1 and trials >= 1")
    if L * L > MAX_BP_CELLS:
        raise ScaleRefused(f"L={L}: {L * L} cells exceeds the {MAX_BP_CELLS} cell guard")
    f = Field(0, p, None)
    _, thr, full, _ = f.kernel_args()
    master = np.uint64(_cell_seed(int(seed) & ((1 << 64) - 1), L, p))
    hits = _map_chunks(lambda a, b: K.bp_counts(master, a, b, thr, full, int(L)), trials, workers)
    return int(sum(hits))


def bp_transition_scan(L_list: Sequence[int], p_list: Sequence[float], trials_per_cell: int,
                       seed: int, workers: int = 1) -> List[ScanRow]:
    """Monte Carlo I(L, p) over the grid, with p log L - lambda alongside."""
    for L in L_list:
        if L * L > MAX_BP_CELLS:
            raise ScaleRefused(f"L={L}: {L * L} cells exceeds the {MAX_BP_CELLS} cell guard")
    lam = math.pi ** 2 / 18
    return [ScanRow(int(L), float(p), trials_per_cell,
                    bp_spanning_count(L, p, trials_per_cell, seed, workers), lam)
            for L in L_list for p in p_list]


# ---------------------------------------------------------------------------
# tiny-window and border-event rates


def window_growth_rate(window: Sequence[Tuple[int, int]], variant: Variant, target: Rect, p: float,
                       trials: int, seed: int, workers: int = 1) -> int:
    """Monte Carlo counterpart of oracle.exact_growth_probability: number of
    trials (out of ``trials``) with ``target`` entirely Active."""
    variant = get_variant(variant)
    sites = list(dict.fromkeys(tuple(s) for s in window))
    xs = [x for x, _ in sites] + [0, target.xmin, target.xmax]
    ys = [y for _, y in sites] + [0, target.ymin, target.ymax]
    xmin, ymin = min(xs), min(ys)
    nx, ny = max(xs) - xmin + 1, max(ys) - ymin + 1
    sx = np.array([x for x, _ in sites], dtype=np.int64)
    sy = np.array([y for _, y in sites], dtype=np.int64)
    _, thr, full, _ = Field(0, p).kernel_args()
    master = np.uint64(int(seed) & ((1 << 64) - 1))

    def work(a, b):
        return K.window_event_counts(master, a, b, thr, full, variant.reach, sx, sy, xmin, ymin,
                                     nx, ny, target.xmin, target.xmax, target.ymin, target.ymax)

    return int(sum(_map_chunks(work, trials, workers)))


def border_event_count(variant: Variant, inner: Rect, outer: Rect, p: float, samples: int,
                       seed: int) -> int:
    """Number of sampled fields (out of ``samples``) on which D(inner, outer)
    holds.  For the Frobose model the event is the rectangle-process
    transition from inner to outer."""
    variant = get_variant(variant)
    seeds = [trial_seed(seed, i) for i in range(samples)]
    if variant.name == "frobose":
        return sum(transition_occurs(Field(s, p), inner, outer, variant) for s in seeds)
    total = 0
    _, thr, full, origin = Field(0, p).kernel_args()
    for a in range(0, samples, CHUNK):
        batch = np.array(seeds[a:a + CHUNK], dtype=np.uint64)
        grids = K.materialize_many(batch, thr, full, origin, outer.xmin, outer.ymin,
                                   outer.width, outer.height)
        total += int(d_holds(grids == K.EMPTY, inner, outer, variant.double_gap).sum())
    return total

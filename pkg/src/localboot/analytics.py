"""Rate functions, threshold integrals, gap probabilities and growth bounds."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .model import Variant, get_variant
from .quadrature import integrate, integrate_panels

LOG2 = math.log(2.0)


class ScaleWarning(UserWarning):
    """p is outside the range where the scale constants are meaningful."""


def _exp(x: float) -> float:
    # bounds may legitimately exceed the float range; they are then vacuous
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def beta(u: float) -> float:
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"beta is defined on [0, 1], got {u}")
    return (u + math.sqrt(u * (4.0 - 3.0 * u))) / 2.0


def _g(z: np.ndarray) -> np.ndarray:
    # -log beta(1 - e^-z).  Near beta = 1 use the cancellation-free form
    # 1 - beta(1 - e) = 2 e^2 / (1 + e + sqrt((1 - e)(1 + 3e))).
    e = np.exp(-z)
    v = -np.expm1(-z)
    one_minus = 2.0 * e * e / (1.0 + e + np.sqrt(v * (1.0 + 3.0 * e)))
    direct = (v + np.sqrt(v * (4.0 - 3.0 * v))) / 2.0
    with np.errstate(divide="ignore"):
        return np.where(direct < 0.5, -np.log(direct), -np.log1p(-one_minus))


def _f(z: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(z > LOG2, -np.log1p(-np.exp(-z)), -np.log(-np.expm1(-z)))


def rate_function(z, variant: Variant = "standard"):
    """g(z) = -log beta(1 - e^-z) for the standard model, f(z) = -log(1 - e^-z)
    for the modified and Frobose models.  Accepts scalars or arrays."""
    variant = get_variant(variant)
    arr = np.asarray(z, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("rate functions are defined for z > 0 only")
    out = _g(arr) if variant.rate == "g" else _f(arr)
    return float(out) if out.ndim == 0 else out


def g(z):
    return rate_function(z, "standard")


def f(z):
    return rate_function(z, "modified")


# ---------------------------------------------------------------------------
# threshold integrals

_CUTOFF = 40.0


def _head_bound(delta: float) -> float:
    # g <= f and 1 - e^-z >= z/2 on (0, 1], so both are <= log(2/z) there
    return delta * (math.log(2.0 / delta) + 1.0)


def _tail_bound(variant: Variant, Z: float) -> float:
    e = math.exp(-Z)
    if variant.rate == "g":
        # g(z) <= e^-2z / (1 - e^-2z)
        return 0.5 * e * e / (1.0 - e * e) * 1.01
    # integral of f beyond Z is Li2(e^-Z) <= e^-Z / (1 - e^-Z)
    return e / (1.0 - e) * 1.01


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error: float


def lambda_integral(variant: Variant = "standard", tolerance: float = 1e-10) -> IntegralResult:
    """Integral of the variant's rate function over (0, inf).

    (0, delta] is bounded analytically, (delta, 1] is cut into dyadic panels
    that double away from the log singularity at 0, (1, 40] is adaptive, and
    the tail beyond 40 enters only through its analytic bound.
    """
    variant = get_variant(variant)
    if tolerance < 1e-12:
        raise ValueError("tolerance below 1e-12 is not supported in double precision")
    delta = 1e-12
    while _head_bound(delta) > tolerance / 4:
        delta /= 2
    tail = _tail_bound(variant, _CUTOFF)
    fn = _g if variant.rate == "g" else _f
    pts = [delta]
    while pts[-1] < 1.0:
        pts.append(min(pts[-1] * 2.0, 1.0))
    pts += [2.0, 4.0, 8.0, 16.0, _CUTOFF]
    budget = tolerance - _head_bound(delta) - tail
    value, err = integrate_panels(fn, pts, 0.5 * budget)
    # head: g ~ (1/2) log(1/z), f ~ log(1/z) near 0
    c = 0.5 if variant.rate == "g" else 1.0
    head = c * delta * (math.log(1.0 / delta) + 1.0)
    return IntegralResult(value + head, err + _head_bound(delta) + tail)


def rate_integral(a: float, b: float, variant: Variant = "standard", tol: float = 1e-13) -> float:
    """Integral of the rate function over [a, b], 0 < a <= b."""
    variant = get_variant(variant)
    if a <= 0:
        raise ValueError("lower limit must be positive")
    fn = _g if variant.rate == "g" else _f
    return integrate(fn, a, b, tol)[0]


# ---------------------------------------------------------------------------
# gap probabilities


def no_double_gap_exact(n: int, empty_prob: float, mode: str = "double", log: bool = False) -> float:
    """Probability that none of ``n`` independent lines, each empty with
    probability ``empty_prob``, form two adjacent empty lines (mode "double")
    or that none is empty (mode "single")."""
    u = float(empty_prob)
    if n < 0 or not 0.0 <= u <= 1.0:
        raise ValueError("need n >= 0 and empty_prob in [0, 1]")
    if mode == "single":
        lp = n * math.log1p(-u) if u < 1 else (0.0 if n == 0 else -math.inf)
    elif mode == "double":
        lp = _log_no_double_gap(n, u)
    else:
        raise ValueError(f"mode must be 'double' or 'single', not {mode!r}")
    return lp if log else math.exp(lp)


def _log_no_double_gap(n: int, u: float) -> float:
    # N_k = (1-u) N_{k-1} + u(1-u) N_{k-2}, N_0 = N_1 = 1, carried
    # normalized by N_{k-1} with the log of the scale kept aside
    if n <= 1:
        return 0.0
    v = 1.0 - u
    if v == 0.0:
        return -math.inf
    prev, cur = 1.0, 1.0
    logscale = 0.0
    for _ in range(n - 1):
        nxt = v * cur + u * v * prev
        prev, cur = cur / nxt, 1.0
        logscale += math.log(nxt)
    return logscale


def double_gap_bound(a: int, b: int, q: float, variant: Variant = "standard", log: bool = False) -> float:
    """Upper bound on P(no double gap in the columns) of an a x b rectangle;
    for the modified/Frobose models, on P(no empty column)."""
    variant = get_variant(variant)
    if a < 1 or b < 1 or q <= 0:
        raise ValueError("need a, b >= 1 and q > 0")
    if variant.rate == "g":
        lb = -(a - 1) * rate_function(b * q, variant)
    else:
        lb = -a * rate_function(b * q, variant)
    return lb if log else math.exp(lb)


def border_bound(a: int, b: int, s: int, t: int, q: float, variant: Variant = "standard",
                 log: bool = False) -> float:
    """Upper bound on P[D(R, R')] for R of dims (a, b) inside R' of dims
    (a + s, b + t).

    standard: exp(-s g(bq) - t g(aq) + 2[g(bq) + g(aq)] + stq e^{2[g(bq) + g(aq)]})
    modified: f in place of g, and e^{[f(bq) + f(aq)]} in the last term
    frobose:  f in place of g, no st term
    """
    variant = get_variant(variant)
    if a < 1 or b < 1 or s < 0 or t < 0 or q <= 0:
        raise ValueError("need a, b >= 1, s, t >= 0 and q > 0")
    rb = rate_function(b * q, variant)
    ra = rate_function(a * q, variant)
    expo = -s * rb - t * ra + 2.0 * (rb + ra)
    if s * t > 0 and variant.name == "standard":
        expo += s * t * q * _exp(2.0 * (rb + ra))
    elif s * t > 0 and variant.name == "modified":
        expo += s * t * q * _exp(rb + ra)
    return expo if log else _exp(expo)


# ---------------------------------------------------------------------------
# monotone paths


@dataclass(frozen=True)
class MonotonePath:
    vertices: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        vs = tuple((float(x), float(y)) for x, y in self.vertices)
        if not vs:
            raise ValueError("a path needs at least one vertex")
        for x, y in vs:
            if not (x > 0 and y > 0):
                raise ValueError("path must stay in the open positive quadrant")
        for (x0, y0), (x1, y1) in zip(vs, vs[1:]):
            if x1 < x0 or y1 < y0:
                raise ValueError("path must be non-decreasing in both coordinates")
        object.__setattr__(self, "vertices", vs)


def path_weight(path: MonotonePath, variant: Variant = "standard") -> float:
    """Line integral of g(y) dx + g(x) dy along the path."""
    variant = get_variant(variant)
    total = []
    for (x0, y0), (x1, y1) in zip(path.vertices, path.vertices[1:]):
        dx = x1 - x0
        dy = y1 - y0
        # g(y) dx: y = y0 + (dy/dx)(x - x0) along the segment
        if dx > 0:
            if dy > 0:
                total.append(dx / dy * rate_integral(y0, y1, variant))
            else:
                total.append(dx * rate_function(y0, variant))
        if dy > 0:
            if dx > 0:
                total.append(dy / dx * rate_integral(x0, x1, variant))
            else:
                total.append(dy * rate_function(x0, variant))
    return math.fsum(total)


# ---------------------------------------------------------------------------
# growth-probability envelopes and scale constants


def envelope(p: float, c_lower: float, c_upper: float, variant: Variant = "standard",
             log: bool = False) -> Tuple[float, float]:
    """(lower, upper) growth-probability envelope for given constants; with
    ``log`` the natural logarithms are returned instead."""
    variant = get_variant(variant)
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if c_lower < 0 or c_upper < 0:
        raise ValueError("constants must be non-negative")
    power = 2 if variant.name == "frobose" else 3
    lam = variant.lam
    lower = (-2 * lam + c_lower * math.sqrt(p)) / p
    upper = (-2 * lam + c_upper * math.sqrt(p) * math.log(1 / p) ** power) / p
    return (lower, upper) if log else (_exp(lower), _exp(upper))


@dataclass(frozen=True)
class ScaleConstants:
    p: float
    q: float
    A: int
    B: int
    in_range: bool = True

    @classmethod
    def from_q(cls, q: float, p: float = float("nan")) -> "ScaleConstants":
        A = math.ceil(1.0 / math.sqrt(q))
        B = math.floor(math.log(1.0 / q) / q)
        return cls(p, q, A, B)


def scale_constants(p: float) -> ScaleConstants:
    """q = -log(1 - p), A = ceil(1/sqrt q), B = floor(q^-1 log q^-1).

    Intended for p < 0.1; larger p are computed but flagged with a
    ScaleWarning and ``in_range=False``.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    q = -math.log1p(-p)
    sc = ScaleConstants.from_q(q, p)
    in_range = p < 0.1
    if not in_range:
        warnings.warn(f"p={p} >= 0.1: scale constants are outside their intended range",
                      ScaleWarning, stacklevel=2)
    if p < 0.06 and not (sc.A >= 2 and sc.B > 2 * sc.A):
        raise ArithmeticError(f"scale constants degenerate at p={p}: A={sc.A}, B={sc.B}")
    return ScaleConstants(p, q, sc.A, sc.B, in_range)

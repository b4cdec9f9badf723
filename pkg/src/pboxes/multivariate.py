"""Joint p-boxes from marginal models, and arithmetic on real-line p-boxes.

A joint model on a product space is induced by aggregating per-dimension
coordinates with a pointwise maximum, under which every joint sublevel set
is a product of marginal sublevel sets.  Any combination rule expressible as
a pair of pointwise combiners on marginal probabilities (Fréchet bounds for
unknown dependence, products for epistemic independence, or a user-supplied
pair) then yields the tightest p-box dominated by the combined model simply
by combining the marginal CDFs pointwise.

Arithmetic on real-line p-boxes (dependency-bounds convolution for sums,
differences, products, and quotients) is the special case where the
per-dimension coordinate rescalings are optimised out; it is computed here
by direct optimisation over the constraint segment ``x1 + x2 = y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize as _opt

from .errors import ValidationError
from .pbox import AnalyticCdf, PBox, PiecewiseLinearCdf, _eval_array
from .preorder import UNIT_INTERVAL

__all__ = [
    "MarginalSpec",
    "CombinationRule",
    "FRECHET",
    "INDEPENDENT",
    "RealLinePBox",
    "combine",
    "sublevel_box_lower",
    "prob_arith_add_lower",
    "prob_arith_add_upper",
    "prob_arith_transform",
]


@dataclass(frozen=True)
class MarginalSpec:
    """One factor of a product space: its coordinate map and CDF bounds.

    ``z_map`` is a human-readable description of the surjective mapping from
    the factor space onto [0, 1]; the CDFs are functions of that coordinate.
    The mapping itself never enters the joint computation, only its CDFs do.
    """

    lower: PiecewiseLinearCdf | AnalyticCdf
    upper: PiecewiseLinearCdf | AnalyticCdf
    z_map: str = ""

    def __post_init__(self):
        # delegate the pair validation (ordering, monotonicity, top value)
        PBox(self.lower, self.upper, UNIT_INTERVAL, validation_grid=512)


@dataclass(frozen=True)
class CombinationRule:
    """A pair of n-ary combiners applied to marginal lower/upper probabilities.

    Both combiners take a sequence of values in [0, 1] (one per marginal) and
    must be non-decreasing in every argument, map all-ones to one, and
    satisfy ``ell <= u`` pointwise.  These invariants are spot-checked on a
    coarse grid by :meth:`validate`.
    """

    name: str
    ell: Callable
    u: Callable

    def validate(self, arity: int):
        if arity < 2:
            raise ValidationError("combination rules need at least two marginals")
        steps = np.linspace(0.0, 1.0, 5 if arity <= 3 else 3)
        ones = [1.0] * arity
        if abs(self.ell(ones) - 1.0) > 1e-12 or abs(self.u(ones) - 1.0) > 1e-12:
            raise ValidationError(f"rule {self.name!r} must map all-ones to 1")
        grids = np.meshgrid(*([steps] * arity), indexing="ij")
        points = np.stack([g.ravel() for g in grids], axis=1)
        lo = np.array([float(self.ell(list(p))) for p in points])
        hi = np.array([float(self.u(list(p))) for p in points])
        if np.any(lo > hi + 1e-12):
            raise ValidationError(f"rule {self.name!r} has ell above u on the grid")
        step = steps[1] - steps[0]
        for axis in range(arity):
            for p, v_lo, v_hi in zip(points, lo, hi):
                if p[axis] + step > 1.0 + 1e-12:
                    continue
                q = p.copy()
                q[axis] += step
                if float(self.ell(list(q))) < v_lo - 1e-12 or float(self.u(list(q))) < v_hi - 1e-12:
                    raise ValidationError(
                        f"rule {self.name!r} is not monotone in argument {axis}")


def _frechet_lower(values) -> float:
    return np.maximum(0.0, 1.0 - len(values) + sum(values))


def _frechet_upper(values):
    out = values[0]
    for v in values[1:]:
        out = np.minimum(out, v)
    return out


def _product(values):
    out = values[0]
    for v in values[1:]:
        out = out * v
    return out


FRECHET = CombinationRule("frechet", _frechet_lower, _frechet_upper)
INDEPENDENT = CombinationRule("independence", _product, _product)


def combine(marginals: Sequence[MarginalSpec], rule: CombinationRule) -> PBox:
    """Joint p-box of the max-aggregated coordinate under a combination rule.

    The joint lower CDF is ``ell`` of the marginal lower CDFs evaluated at
    the same coordinate, and likewise for the upper; this is the tightest
    p-box whose inferences are dominated by the combined marginal model.
    """
    if len(marginals) < 2:
        raise ValidationError("combine needs at least two marginals")
    rule.validate(len(marginals))
    lowers = [m.lower for m in marginals]
    uppers = [m.upper for m in marginals]

    def joint_lower(z):
        return rule.ell([cdf(z) for cdf in lowers])

    def joint_upper(z):
        return rule.u([cdf(z) for cdf in uppers])

    continuous = all(getattr(cdf, "continuous", True) for cdf in lowers + uppers)

    def joint_lower_left(z):
        return rule.ell([cdf.left_limit(z) for cdf in lowers])

    def joint_upper_left(z):
        return rule.u([cdf.left_limit(z) for cdf in uppers])

    lower = AnalyticCdf(joint_lower, None if continuous else joint_lower_left,
                        continuous=continuous, name=f"{rule.name}-lower")
    upper = AnalyticCdf(joint_upper, None if continuous else joint_upper_left,
                        continuous=continuous, name=f"{rule.name}-upper")
    return PBox(lower, upper, UNIT_INTERVAL, validation_grid=2048)


def sublevel_box_lower(joint: PBox, levels: Sequence[float]) -> float:
    """Lower probability of a product of marginal sublevel sets.

    The largest joint sublevel set inside the box sits at the smallest of
    the per-dimension levels, so the p-box (outer-approximation) value is
    the joint lower CDF there.
    """
    if not levels:
        raise ValidationError("at least one level is required")
    if any(a < 0.0 or a > 1.0 for a in levels):
        raise ValidationError("levels must lie in [0, 1]")
    return float(joint.lower(min(levels)))


# ---------------------------------------------------------------------------
# probabilistic arithmetic on the real line


@dataclass(frozen=True)
class RealLinePBox:
    """A p-box for a real variable with bounded support.

    The CDFs are functions of the real coordinate; outside the support they
    evaluate to 0 below and 1 above.  Supports must be bounded; point
    supports (degenerate variables) are allowed.
    """

    support: tuple
    lower: PiecewiseLinearCdf
    upper: PiecewiseLinearCdf

    def __post_init__(self):
        a, b = self.support
        if not (math.isfinite(a) and math.isfinite(b) and a <= b):
            raise ValidationError(f"support must be a bounded interval, got {self.support}")
        object.__setattr__(self, "support", (float(a), float(b)))
        xs = np.unique(np.concatenate([
            np.linspace(a, b, 257),
            np.asarray(self.lower.knot_xs), np.asarray(self.upper.knot_xs)]))
        flo = _eval_array(self.lower, xs)
        fhi = _eval_array(self.upper, xs)
        if np.any(flo > fhi + 1e-12):
            raise ValidationError("lower CDF exceeds upper CDF on the support")

    @classmethod
    def from_knots(cls, lower_knots, upper_knots=None) -> "RealLinePBox":
        lower = PiecewiseLinearCdf(tuple(lower_knots))
        upper = PiecewiseLinearCdf(tuple(upper_knots)) if upper_knots else lower
        a = min(lower.domain[0], upper.domain[0])
        b = max(lower.domain[1], upper.domain[1])
        return cls((a, b), lower, upper)

    @classmethod
    def point_mass(cls, c: float) -> "RealLinePBox":
        cdf = PiecewiseLinearCdf(((c, 1.0),))
        return cls((c, c), cdf, cdf)


class _WarpedCdf:
    """A CDF pushed through a strictly increasing coordinate change.

    Mapping a coordinate back through the warp can land a few ulps away
    from a knot of the base CDF, which would silently misread a jump there;
    backward-mapped coordinates are therefore snapped onto base knots within
    a tight relative tolerance before evaluation.
    """

    _SNAP = 1e-13

    def __init__(self, base, forward, backward):
        self.base = base
        self.forward = forward
        self.backward = backward
        self._knots = np.asarray(base.knot_xs, dtype=float)

    def _back(self, v):
        x = np.asarray(self.backward(v), dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if self._knots.size:
            idx = np.searchsorted(self._knots, x)
            for cand in (np.clip(idx - 1, 0, self._knots.size - 1),
                         np.clip(idx, 0, self._knots.size - 1)):
                knot = self._knots[cand]
                close = np.abs(x - knot) <= self._SNAP * np.maximum(1.0, np.abs(knot))
                x = np.where(close, knot, x)
        return float(x[0]) if scalar else x

    def __call__(self, v):
        return self.base(self._back(v))

    def left_limit(self, v):
        return self.base.left_limit(self._back(v))

    @property
    def knot_xs(self):
        return tuple(self.forward(x) for x in self.base.knot_xs)


class _ReflectedCdf:
    """The CDF of the negated variable; swaps the roles of value and left limit."""

    def __init__(self, base):
        self.base = base

    def __call__(self, v):
        return 1.0 - self.base.left_limit(np.negative(v))

    def left_limit(self, v):
        return 1.0 - self.base(np.negative(v))

    @property
    def knot_xs(self):
        return tuple(sorted(-x for x in self.base.knot_xs))


_SEGMENT_GRID = 1024


def _segment_candidates(lo: float, hi: float, corners) -> np.ndarray:
    pts = [np.linspace(lo, hi, _SEGMENT_GRID + 1)]
    inside = [c for c in corners if lo <= c <= hi]
    if inside:
        width = max(hi - lo, 1e-30)
        arr = np.asarray(inside, dtype=float)
        pts.append(arr)
        # nudge around corners: guards against evaluating exactly on a kink
        pts.append(np.clip(arr - 1e-12 * width, lo, hi))
        pts.append(np.clip(arr + 1e-12 * width, lo, hi))
    return np.unique(np.concatenate(pts))


def _refine(fun, lo: float, hi: float, maximize: bool) -> float:
    if hi - lo <= 0:
        return fun(lo)
    sign = -1.0 if maximize else 1.0
    res = _opt.minimize_scalar(lambda x: sign * float(fun(x)), bounds=(lo, hi),
                               method="bounded", options={"xatol": 1e-12})
    return sign * res.fun


def _optimize_segment(fun, lo: float, hi: float, corners, maximize: bool) -> float:
    """Optimize a piecewise-monotone objective over [lo, hi].

    Evaluates a dense grid plus all corner candidates, then polishes with a
    bounded golden-style search inside the best cell and inside every
    corner-delimited cell (the objective is smooth between corners).
    """
    if hi < lo:
        raise ValidationError("empty optimisation segment")
    pts = _segment_candidates(lo, hi, corners)
    vals = np.asarray(fun(pts), dtype=float)
    best = float(vals.max() if maximize else vals.min())
    i = int(vals.argmax() if maximize else vals.argmin())
    cell_lo = pts[max(i - 1, 0)]
    cell_hi = pts[min(i + 1, len(pts) - 1)]
    refined = [_refine(fun, float(cell_lo), float(cell_hi), maximize)]
    cell_edges = np.unique(np.concatenate(
        [[lo, hi], [c for c in corners if lo <= c <= hi]]))
    if len(cell_edges) <= 129:
        for a, b in zip(cell_edges, cell_edges[1:]):
            refined.append(_refine(fun, float(a), float(b), maximize))
    cand = max(refined) if maximize else min(refined)
    return max(best, cand) if maximize else min(best, cand)


def _sum_segment(s1, s2, y):
    lo = max(s1[0], y - s2[1])
    hi = min(s1[1], y - s2[0])
    return lo, hi


def _clamped(y, support_bottom):
    # an empty segment means y fell off one end of the sum support
    return 0.0 if y < support_bottom else 1.0


def _add_lower(l1, l2, s1, s2, y: float) -> float:
    lo, hi = _sum_segment(s1, s2, y)
    if hi < lo:
        return _clamped(y, s1[0] + s2[0])

    def objective(x):
        return np.maximum(0.0, np.asarray(l1(x), dtype=float)
                          + np.asarray(l2(y - np.asarray(x)), dtype=float) - 1.0)

    corners = list(l1.knot_xs) + [y - k for k in l2.knot_xs]
    value = _optimize_segment(objective, lo, hi, corners, maximize=True)
    return min(max(value, 0.0), 1.0)


def _add_upper(u1, u2, s1, s2, y: float) -> float:
    lo, hi = _sum_segment(s1, s2, y)
    if hi < lo:
        return _clamped(y, s1[0] + s2[0])

    def objective(x):
        return np.minimum(1.0, np.asarray(u1(x), dtype=float)
                          + np.asarray(u2(y - np.asarray(x)), dtype=float))

    corners = [c for c in list(u1.knot_xs) + [y - k for k in u2.knot_xs]
               if lo <= c <= hi] + [lo, hi]
    value = _optimize_segment(objective, lo, hi, corners, maximize=False)
    # an infimum can live in a one-sided limit at a discontinuity, so also
    # evaluate the limit combinations at every corner
    for c in corners:
        from_left = float(u1.left_limit(c)) + float(u2(y - c))
        from_right = float(u1(c)) + float(u2.left_limit(y - c))
        value = min(value, min(1.0, from_left), min(1.0, from_right))
    return min(max(value, 0.0), 1.0)


def prob_arith_add_lower(x1: RealLinePBox, x2: RealLinePBox, y: float) -> float:
    """Lower CDF of ``X1 + X2`` at y under unknown dependence.

    Maximizes ``max(0, F1(x) + F2(y - x) - 1)`` over the feasible segment of
    the constraint ``x1 + x2 = y``; values of y outside the sum support clamp
    to 0 or 1.
    """
    return _add_lower(x1.lower, x2.lower, x1.support, x2.support, y)


def prob_arith_add_upper(x1: RealLinePBox, x2: RealLinePBox, y: float) -> float:
    """Upper CDF of ``X1 + X2`` at y, by minimizing ``min(1, F1 + F2)``.

    The formula is the conjugate segment optimisation; it is validated
    against an independent fine-grid evaluation in the test suite rather
    than quoted from a closed form.
    """
    return _add_upper(x1.upper, x2.upper, x1.support, x2.support, y)


def _ln_parts(x: RealLinePBox):
    if x.support[0] <= 0.0:
        raise ValidationError("multiplication and division need strictly positive supports")
    warp = lambda cdf: _WarpedCdf(cdf, math.log, np.exp)
    support = (math.log(x.support[0]), math.log(x.support[1]))
    return warp(x.lower), warp(x.upper), support


def _negated_parts(x: RealLinePBox):
    support = (-x.support[1], -x.support[0])
    return _ReflectedCdf(x.upper), _ReflectedCdf(x.lower), support


def prob_arith_transform(op: str, x1: RealLinePBox, x2: RealLinePBox, y: float) -> tuple:
    """CDF bounds at y for ``X1 - X2``, ``X1 * X2``, or ``X1 / X2``.

    Each case reduces to the addition machinery through a monotone transform
    of the second variable (negation, logarithms, or both), with the
    transformed CDF pair swapped and left-limited as the transform requires.
    Returns the ``(lower, upper)`` pair.
    """
    if op == "add":
        return (prob_arith_add_lower(x1, x2, y), prob_arith_add_upper(x1, x2, y))
    if op == "subtract":
        l2, u2, s2 = _negated_parts(x2)
        return (_add_lower(x1.lower, l2, x1.support, s2, y),
                _add_upper(x1.upper, u2, x1.support, s2, y))
    if op == "multiply":
        l1, u1, s1 = _ln_parts(x1)
        l2, u2, s2 = _ln_parts(x2)
        if y <= 0.0:
            return (0.0, 0.0 if y < x1.support[0] * x2.support[0] else 1.0)
        target = math.log(y)
        return (_add_lower(l1, l2, s1, s2, target),
                _add_upper(u1, u2, s1, s2, target))
    if op == "divide":
        l1, u1, s1 = _ln_parts(x1)
        wl2, wu2, ws2 = _ln_parts(x2)
        l2, u2 = _ReflectedCdf(wu2), _ReflectedCdf(wl2)
        s2 = (-ws2[1], -ws2[0])
        if y <= 0.0:
            return (0.0, 0.0 if y < x1.support[0] / x2.support[1] else 1.0)
        target = math.log(y)
        return (_add_lower(l1, l2, s1, s2, target),
                _add_upper(u1, u2, s1, s2, target))
    raise ValidationError(f"unknown arithmetic operation {op!r}")

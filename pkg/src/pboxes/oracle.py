"""Independent brute-force verification of the closed-form machinery.

Everything here recomputes inferences at small finite scale without touching
the formula modules: expectations come from exact optimisation over the
credal polytope ``{p >= 0, sum p = 1, lower_cum <= cumsum(p) <= upper_cum}``,
and the structural checkers (complete monotonicity, additivity on components,
p-box representability) enumerate their defining conditions directly.

For up to 8 classes the polytope is optimised in exact rational arithmetic
by sweeping every candidate vertex: each vertex of the cumulative-chain
polytope takes its coordinates from the finite grid of cumulative bounds, so
a monotone dynamic sweep over that grid visits every vertex.  Larger
instances (up to 20 classes) fall back to a small self-contained simplex
with Bland's rule on dense rational tableaus; no external solver is used.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import ValidationError

__all__ = [
    "FiniteCredalInstance",
    "FiniteLowerProbability",
    "MonotonicityReport",
    "RepresentabilityReport",
    "AdditivityReport",
    "lp_lower_expectation",
    "envelope_sample_bound",
    "natural_extension_table",
    "complete_monotonicity_check",
    "pbox_representability_check",
    "additivity_check",
    "random_credal_instance",
]

_EXACT_LIMIT = 8
_SIMPLEX_LIMIT = 20


def _fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class FiniteCredalInstance:
    """Cumulative probability bounds over n ordered classes, held exactly."""

    lower_cum: tuple
    upper_cum: tuple

    def __post_init__(self):
        lo = tuple(_fraction(v) for v in self.lower_cum)
        hi = tuple(_fraction(v) for v in self.upper_cum)
        object.__setattr__(self, "lower_cum", lo)
        object.__setattr__(self, "upper_cum", hi)
        n = len(lo)
        if n == 0 or len(hi) != n:
            raise ValidationError("cumulative bound vectors must share a positive length")
        for vec, name in ((lo, "lower"), (hi, "upper")):
            if any(v < 0 or v > 1 for v in vec):
                raise ValidationError(f"{name} cumulative bounds must lie in [0, 1]")
            if any(b < a for a, b in zip(vec, vec[1:])):
                raise ValidationError(f"{name} cumulative bounds must be non-decreasing")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValidationError("lower cumulative bounds exceed upper ones")
        if lo[-1] != 1 or hi[-1] != 1:
            raise ValidationError("cumulative bounds must reach 1 at the top class")

    @property
    def n(self) -> int:
        return len(self.lower_cum)


def _chain_vertex_min(instance: FiniteCredalInstance, gamble: Sequence[Fraction]) -> Fraction:
    """Exact minimum of the expectation over the credal polytope, n <= 8.

    Rewrites ``sum p_i g_i`` as ``g_{n-1} + sum_i (g_i - g_{i+1}) s_i`` in the
    cumulative coordinates ``s`` and sweeps all monotone assignments of the
    candidate vertex values (the cumulative bounds themselves).  Every
    polytope vertex appears in the sweep and every swept point is feasible,
    so the sweep minimum is the exact linear-programming minimum.
    """
    n = instance.n
    lo, hi = instance.lower_cum, instance.upper_cum
    if n == 1:
        return gamble[0]
    grid = sorted(set(lo) | set(hi))
    costs = [gamble[i] - gamble[i + 1] for i in range(n - 1)]
    best: list = [None] * len(grid)
    for j, v in enumerate(grid):
        if lo[0] <= v <= hi[0]:
            best[j] = costs[0] * v
    for i in range(1, n - 1):
        nxt: list = [None] * len(grid)
        prefix = None
        for j, v in enumerate(grid):
            if best[j] is not None and (prefix is None or best[j] < prefix):
                prefix = best[j]
            if prefix is not None and lo[i] <= v <= hi[i]:
                nxt[j] = prefix + costs[i] * v
        best = nxt
    feasible = [b for b in best if b is not None]
    if not feasible:
        raise ValidationError("internal consistency error: empty credal polytope")
    return gamble[n - 1] + min(feasible)


def _simplex_min(c: Sequence[Fraction], a_ub, b_ub, a_eq, b_eq) -> Fraction:
    """Minimal two-phase dense simplex in exact rationals with Bland's rule."""
    n = len(c)
    rows = []
    rhs = []
    kinds = []  # "ub" or "eq" after sign normalisation
    for row, b in zip(a_ub, b_ub):
        if b < 0:
            rows.append([-x for x in row]); rhs.append(-b); kinds.append("lb")
        else:
            rows.append(list(row)); rhs.append(b); kinds.append("ub")
    for row, b in zip(a_eq, b_eq):
        if b < 0:
            rows.append([-x for x in row]); rhs.append(-b); kinds.append("eq")
        else:
            rows.append(list(row)); rhs.append(b); kinds.append("eq")
    m = len(rows)
    slack_cols = sum(1 for k in kinds if k in ("ub", "lb"))
    art_cols = sum(1 for k in kinds if k in ("lb", "eq"))
    total = n + slack_cols + art_cols
    tableau = [[Fraction(0)] * (total + 1) for _ in range(m)]
    basis = [0] * m
    s_at = n
    a_at = n + slack_cols
    art_idx = []
    for i, (row, b, kind) in enumerate(zip(rows, rhs, kinds)):
        for j, v in enumerate(row):
            tableau[i][j] = Fraction(v)
        tableau[i][total] = Fraction(b)
        if kind == "ub":
            tableau[i][s_at] = Fraction(1); basis[i] = s_at; s_at += 1
        elif kind == "lb":
            tableau[i][s_at] = Fraction(-1); s_at += 1
            tableau[i][a_at] = Fraction(1); basis[i] = a_at
            art_idx.append(a_at); a_at += 1
        else:
            tableau[i][a_at] = Fraction(1); basis[i] = a_at
            art_idx.append(a_at); a_at += 1

    def pivot(row_i, col_j):
        piv = tableau[row_i][col_j]
        tableau[row_i] = [v / piv for v in tableau[row_i]]
        for r in range(m):
            if r != row_i and tableau[r][col_j] != 0:
                factor = tableau[r][col_j]
                tableau[r] = [v - factor * w for v, w in zip(tableau[r], tableau[row_i])]
        basis[row_i] = col_j

    def solve_phase(costs):
        while True:
            reduced = list(costs)
            for r, bcol in enumerate(basis):
                if costs[bcol] != 0:
                    cb = costs[bcol]
                    reduced = [rc - cb * tv for rc, tv in zip(reduced, tableau[r])]
            entering = next((j for j in range(total) if reduced[j] < 0), None)
            if entering is None:
                return
            ratio, leave = None, None
            for r in range(m):
                if tableau[r][entering] > 0:
                    cand = tableau[r][total] / tableau[r][entering]
                    if ratio is None or cand < ratio or (cand == ratio and basis[r] < basis[leave]):
                        ratio, leave = cand, r
            if leave is None:
                raise ValidationError("unbounded linear program")
            pivot(leave, entering)

    if art_idx:
        phase1 = [Fraction(0)] * (total + 1)
        for j in art_idx:
            phase1[j] = Fraction(1)
        solve_phase(phase1)
        obj = sum(tableau[r][total] for r in range(m) if basis[r] in art_idx)
        if obj != 0:
            raise ValidationError("internal consistency error: infeasible credal polytope")
        # drive any residual artificial out of the basis
        for r in range(m):
            if basis[r] in art_idx:
                col = next((j for j in range(n + slack_cols) if tableau[r][j] != 0), None)
                if col is not None:
                    pivot(r, col)
    phase2 = [Fraction(0)] * (total + 1)
    for j in range(n):
        phase2[j] = Fraction(c[j])
    for j in art_idx:
        phase2[j] = Fraction(10**9)  # keep artificials parked at zero
    solve_phase(phase2)
    value = Fraction(0)
    for r, bcol in enumerate(basis):
        if bcol < n:
            value += c[bcol] * tableau[r][total]
    return value


def _credal_lp(instance: FiniteCredalInstance, gamble: Sequence[Fraction]) -> Fraction:
    n = instance.n
    a_ub, b_ub = [], []
    for k in range(n - 1):
        prefix = [Fraction(1)] * (k + 1) + [Fraction(0)] * (n - k - 1)
        a_ub.append(prefix); b_ub.append(instance.upper_cum[k])
        a_ub.append([-v for v in prefix]); b_ub.append(-instance.lower_cum[k])
    a_eq = [[Fraction(1)] * n]
    b_eq = [Fraction(1)]
    return _simplex_min(gamble, a_ub, b_ub, a_eq, b_eq)


def lp_lower_expectation(instance: FiniteCredalInstance, gamble: Sequence) -> float:
    """Exact minimum expectation of a gamble over the credal polytope.

    Uses the rational vertex sweep for up to 8 classes and the rational
    simplex beyond that, up to 20 classes.
    """
    if len(gamble) != instance.n:
        raise ValidationError("gamble length must match the number of classes")
    exact = [_fraction(g) for g in gamble]
    if instance.n <= _EXACT_LIMIT:
        return float(_chain_vertex_min(instance, exact))
    if instance.n <= _SIMPLEX_LIMIT:
        return float(_credal_lp(instance, exact))
    raise ValidationError(f"oracle limited to {_SIMPLEX_LIMIT} classes")


def envelope_sample_bound(instance: FiniteCredalInstance, gamble: Sequence,
                          samples: int, seed: int = 0) -> float:
    """Upper bound on the minimum expectation from sampled feasible CDFs.

    Draws uniform cumulative candidates, sorts them, and clamps left to
    right into the cumulative bands, preserving monotonicity.  The minimum
    sampled expectation dominates the exact value; it is reproducible for a
    fixed seed and never used for equality claims.
    """
    if samples < 1:
        raise ValidationError("at least one sample is required")
    n = instance.n
    lo = [float(v) for v in instance.lower_cum]
    hi = [float(v) for v in instance.upper_cum]
    g = [float(v) for v in gamble]
    rng = random.Random(seed)
    best = None
    for _ in range(samples):
        draws = sorted(rng.random() for _ in range(n))
        s_prev = 0.0
        expectation = 0.0
        for i in range(n):
            v = min(max(draws[i], lo[i], s_prev), hi[i])
            if i == n - 1:
                v = 1.0
            expectation += (v - s_prev) * g[i]
            s_prev = v
        if best is None or expectation < best:
            best = expectation
    return best


def random_credal_instance(rng: random.Random, n: int,
                           denominator: int = 1000) -> FiniteCredalInstance:
    """A random valid instance with bounds on a rational lattice.

    Drawing both cumulative vectors as sorted uniforms and taking their
    pointwise minimum and maximum keeps each vector sorted; snapping to
    multiples of ``1/denominator`` keeps the exact arithmetic cheap and
    makes ties (active constraints) common, which is what the vertex sweep
    needs exercised.
    """
    if n < 1:
        raise ValidationError("instances need at least one class")
    a = sorted(Fraction(rng.randrange(denominator + 1), denominator)
               for _ in range(n - 1))
    b = sorted(Fraction(rng.randrange(denominator + 1), denominator)
               for _ in range(n - 1))
    lower = tuple(min(x, y) for x, y in zip(a, b)) + (Fraction(1),)
    upper = tuple(max(x, y) for x, y in zip(a, b)) + (Fraction(1),)
    return FiniteCredalInstance(lower, upper)


@dataclass(frozen=True)
class FiniteLowerProbability:
    """A lower probability on all subsets of ``{0, ..., n-1}``, keyed by bitmask."""

    n: int
    values: Mapping

    def __post_init__(self):
        if not 1 <= self.n <= 16:
            raise ValidationError("subset tables support 1 to 16 classes")
        full = (1 << self.n) - 1
        vals = dict(self.values)
        if set(vals) != set(range(full + 1)):
            raise ValidationError("a value is required for every subset bitmask")
        object.__setattr__(self, "values", vals)
        if abs(vals[0]) > 1e-12 or abs(vals[full] - 1.0) > 1e-12:
            raise ValidationError("the empty set maps to 0 and the full set to 1")
        for mask in range(full + 1):
            for bit in range(self.n):
                ext = mask | (1 << bit)
                if ext != mask and vals[mask] > vals[ext] + 1e-12:
                    raise ValidationError("lower probability must be monotone under inclusion")

    @classmethod
    def from_sets(cls, n: int, assignments: Mapping) -> "FiniteLowerProbability":
        vals = {}
        for key, v in assignments.items():
            mask = 0
            for i in key:
                mask |= 1 << i
            vals[mask] = float(v)
        return cls(n, vals)

    def __getitem__(self, mask: int) -> float:
        return self.values[mask]

    def event(self, mask: int) -> frozenset:
        return frozenset(i for i in range(self.n) if mask & (1 << i))


def natural_extension_table(instance: FiniteCredalInstance) -> FiniteLowerProbability:
    """Lower probability of every subset, each computed by the exact LP."""
    n = instance.n
    table = {}
    for mask in range(1 << n):
        gamble = [1 if mask & (1 << i) else 0 for i in range(n)]
        table[mask] = lp_lower_expectation(instance, gamble)
    return FiniteLowerProbability(n, table)


@dataclass(frozen=True)
class MonotonicityViolation:
    order: int
    event: frozenset
    parts: tuple
    defect: float


@dataclass(frozen=True)
class MonotonicityReport:
    passed: bool
    checked: int
    violations: tuple = ()


def complete_monotonicity_check(lp: FiniteLowerProbability, p_max: int,
                                tol: float = 1e-12,
                                max_violations: int = 1) -> MonotonicityReport:
    """Verify p-monotonicity for all orders up to ``p_max`` by enumeration.

    For every event A and every family of 2 to ``p_max`` distinct nonempty
    proper subsets of A, the signed inclusion-exclusion sum of the lower
    probability over all intersections must be non-negative (within ``tol``).
    Restricting the family to distinct proper subsets of A is exact: repeats
    and parts not below A reduce to smaller families.

    Returns the violations in deterministic enumeration order, at most
    ``max_violations`` of them (pass ``None`` to collect every violation).
    """
    if p_max < 2:
        raise ValidationError("p_max must be at least 2")
    if lp.n > 5 or p_max > 4:
        raise ValidationError("enumeration limited to 5 classes and order 4")
    limit = max_violations if max_violations is not None else -1
    violations = []
    checked = 0

    def descend(a_mask, candidates, start, terms, total, chosen):
        nonlocal checked
        for idx in range(start, len(candidates)):
            part = candidates[idx]
            new_terms = [(m & part, -s) for (m, s) in terms]
            new_total = total + sum(s * lp.values[m] for (m, s) in new_terms)
            all_terms = terms + new_terms
            depth = len(chosen) + 1
            if depth >= 2:
                checked += 1
                if new_total < -tol:
                    violations.append(MonotonicityViolation(
                        order=depth, event=lp.event(a_mask),
                        parts=tuple(lp.event(p) for p in chosen + [part]),
                        defect=new_total))
                    if limit >= 0 and len(violations) >= limit:
                        return True
            if depth < p_max:
                if descend(a_mask, candidates, idx + 1, all_terms, new_total,
                           chosen + [part]):
                    return True
        return False

    full = (1 << lp.n) - 1
    for a_mask in range(1, full + 1):
        candidates = [m for m in range(1, a_mask) if (m & a_mask) == m]
        stop = descend(a_mask, candidates, 0, [(a_mask, 1)], lp.values[a_mask], [])
        if stop:
            break
    return MonotonicityReport(not violations, checked, tuple(violations))


def _formula_value(instance: FiniteCredalInstance, positions: Sequence[int]) -> float:
    """Interval-sum value of a subset given by its sorted rank positions."""
    lo = [float(v) for v in instance.lower_cum]
    hi = [float(v) for v in instance.upper_cum]
    total = 0.0
    i = 0
    positions = sorted(positions)
    while i < len(positions):
        j = i
        while j + 1 < len(positions) and positions[j + 1] == positions[j] + 1:
            j += 1
        a, b = positions[i], positions[j]
        below = hi[a - 1] if a > 0 else 0.0
        total += max(0.0, lo[b] - below)
        i = j + 1
    return min(total, 1.0)


@dataclass(frozen=True)
class RepresentabilityMismatch:
    event: frozenset
    formula_value: float
    stored_value: float


@dataclass(frozen=True)
class RepresentabilityReport:
    matches: bool
    mismatches: tuple
    instance: FiniteCredalInstance


def pbox_representability_check(lp: FiniteLowerProbability,
                                ordering: Sequence[int] | None = None,
                                tol: float = 1e-9) -> RepresentabilityReport:
    """Test whether a lower probability is exactly a p-box extension.

    Derives the tightest cumulative bounds under the given total order
    (prefix values and one minus suffix values), recomputes every subset
    through the interval-sum formula, and reports each subset where the
    stored value differs.  An empty report means the lower probability is
    exactly the extension of the derived p-box.
    """
    n = lp.n
    order = list(ordering) if ordering is not None else list(range(n))
    if sorted(order) != list(range(n)):
        raise ValidationError("ordering must be a permutation of the class indices")
    prefix_masks = []
    mask = 0
    for cls in order:
        mask |= 1 << cls
        prefix_masks.append(mask)
    full = (1 << n) - 1
    lower_cum = tuple(Fraction(lp.values[m]).limit_denominator(10**12)
                      for m in prefix_masks)
    upper_cum = tuple(Fraction(1) - Fraction(lp.values[full ^ m]).limit_denominator(10**12)
                      for m in prefix_masks)
    instance = FiniteCredalInstance(lower_cum, upper_cum)
    rank_of = {cls: r for r, cls in enumerate(order)}
    mismatches = []
    for m in range(full + 1):
        positions = [rank_of[i] for i in range(n) if m & (1 << i)]
        value = _formula_value(instance, positions)
        if abs(value - lp.values[m]) > tol:
            mismatches.append(RepresentabilityMismatch(lp.event(m), value, lp.values[m]))
    return RepresentabilityReport(not mismatches, tuple(mismatches), instance)


@dataclass(frozen=True)
class AdditivityViolation:
    event: frozenset
    whole: float
    component_sum: float


@dataclass(frozen=True)
class AdditivityReport:
    passed: bool
    trials: int
    violations: tuple = ()


def additivity_check(instance: FiniteCredalInstance, trials: int,
                     seed: int = 0, tol: float = 1e-9) -> AdditivityReport:
    """Check additivity over runs of consecutive classes on random subsets.

    Both sides of each identity come from the exact LP: the value of the
    whole subset must equal the sum of the values of its maximal consecutive
    runs.
    """
    n = instance.n
    rng = random.Random(seed)
    violations = []
    for _ in range(trials):
        members = [i for i in range(n) if rng.random() < 0.5]
        if not members:
            continue
        whole = lp_lower_expectation(
            instance, [1 if i in members else 0 for i in range(n)])
        runs = []
        for i in members:
            if runs and i == runs[-1][1] + 1:
                runs[-1] = (runs[-1][0], i)
            else:
                runs.append((i, i))
        parts = 0.0
        for a, b in runs:
            parts += lp_lower_expectation(
                instance, [1 if a <= i <= b else 0 for i in range(n)])
        if abs(whole - parts) > tol:
            violations.append(AdditivityViolation(frozenset(members), whole, parts))
    return AdditivityReport(not violations, trials, tuple(violations))

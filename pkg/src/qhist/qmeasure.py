"""
q-measures, interference terms and the identities they satisfy.

``mu(A) = D(A, A)`` is nonnegative and grade-2 additive but not additive:
for disjoint ``A, B`` the defect ``mu(A | B) - mu(A) - mu(B)`` is the
interference term. The ``check_*`` functions evaluate both sides of an
identity and return residuals; they never assert on their own.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from . import linalg
from .decoherence import DecoherenceMatrix, decoherence_matrix
from .linalg import DEFAULT_TOL
from .pipeline import Path, Pipeline, check_homogeneous, event_mask, expand_homogeneous


class InternalConsistencyError(ArithmeticError):
    """A quantity that is mathematically guaranteed failed numerically."""


class PreconditionError(ValueError):
    """Arguments violate an operation's precondition (e.g. overlapping events)."""


@dataclass(frozen=True, eq=False)
class QMeasureContext:
    pipeline: Pipeline
    matrix: DecoherenceMatrix
    tolerance: float = DEFAULT_TOL

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    @classmethod
    def from_pipeline(cls, p: Pipeline, tolerance: float = DEFAULT_TOL) -> QMeasureContext:
        return cls(p, decoherence_matrix(p), tolerance)

    @property
    def paths(self) -> tuple[Path, ...]:
        return self.matrix.paths

    def mask(self, event: Iterable[Path]) -> np.ndarray:
        return event_mask(self.pipeline, event)

    def measure_mask(self, mask: np.ndarray) -> float:
        """``mu`` of the event selected by a boolean mask (or 0/1 weights) over paths."""
        x = np.asarray(mask, dtype=np.float64)
        if not x.any():
            return 0.0
        value = complex(x @ self.matrix.entries @ x)
        return _real_nonneg(value, self.tolerance)


def _real_nonneg(value: complex, tol: float) -> float:
    if abs(value.imag) > tol:
        raise InternalConsistencyError(f"q-measure has imaginary part {value.imag:.3g}")
    re = value.real
    if re < 0:
        if re < -tol:
            raise InternalConsistencyError(f"q-measure is negative ({re:.3g})")
        return 0.0
    return re


def _disjoint(events: Sequence[frozenset]) -> bool:
    seen: set = set()
    for e in events:
        if seen & e:
            return False
        seen |= e
    return True


def measure(ctx: QMeasureContext, a: Iterable[Path]) -> float:
    return ctx.measure_mask(ctx.mask(a))


def path_measures(ctx: QMeasureContext) -> np.ndarray:
    """``mu({w})`` for every path, in path order."""
    diag = np.diag(ctx.matrix.entries)
    return np.array([_real_nonneg(complex(z), ctx.tolerance) for z in diag])


def measure_homogeneous(ctx: QMeasureContext, factors: Sequence[Iterable[str]]) -> float:
    """
    ``mu(A_1 x ... x A_n)``.

    For a pure initial state this is the squared norm of a single chain with
    the summed projectors ``P_i(A_i)``; mixed states expand the product and sum
    over the decoherence matrix instead.
    """
    p = ctx.pipeline
    checked = check_homogeneous(p, factors)
    if not p.is_pure:
        return measure(ctx, expand_homogeneous(p, checked))
    v = p.pure
    for step, labels in zip(p.steps, checked):
        v = step.pvm.sum_of(labels) @ (step.gate @ v)
    return float(np.vdot(v, v).real)


def interference(ctx: QMeasureContext, a: Iterable[Path], b: Iterable[Path]) -> float:
    """``mu(A | B) - mu(A) - mu(B) - mu(A & B)``."""
    a, b = frozenset(a), frozenset(b)
    return measure(ctx, a | b) - measure(ctx, a) - measure(ctx, b) - measure(ctx, a & b)


def interference_matrix(ctx: QMeasureContext) -> np.ndarray:
    """
    Pairwise path interference ``I[j, k] = 2 Re D(w_j, w_k)``, zero on the diagonal.

    Equal to ``mu({w_j, w_k}) - mu(w_j) - mu(w_k)`` for ``j != k``.
    """
    out = 2.0 * np.real(ctx.matrix.entries)
    np.fill_diagonal(out, 0.0)
    return out


def total_interference(ctx: QMeasureContext) -> float:
    """Sum of path-pair interference over unordered distinct pairs; vanishes in theory."""
    return float(np.triu(interference_matrix(ctx), k=1).sum())


def decomposition_residual(ctx: QMeasureContext, a: Iterable[Path]) -> float:
    """``|mu(A) - (sum of mu(w) over A + sum of I over path pairs in A)|``."""
    mask = ctx.mask(a)
    idx = np.flatnonzero(mask)
    diag = path_measures(ctx)[idx].sum()
    inter = np.triu(interference_matrix(ctx)[np.ix_(idx, idx)], k=1).sum()
    return abs(ctx.measure_mask(mask) - diag - inter)


def check_grade2(
    ctx: QMeasureContext, a: Iterable[Path], b: Iterable[Path], c: Iterable[Path]
) -> float:
    """Residual of grade-2 additivity on mutually disjoint ``a, b, c``."""
    a, b, c = frozenset(a), frozenset(b), frozenset(c)
    if not _disjoint([a, b, c]):
        raise PreconditionError("grade-2 additivity needs mutually disjoint events")
    m = lambda e: measure(ctx, e)  # noqa: E731
    lhs = m(a | b | c)
    rhs = m(a | b) + m(a | c) + m(b | c) - m(a) - m(b) - m(c)
    return abs(lhs - rhs)


def check_union_identities(ctx: QMeasureContext, parts: Sequence[Iterable[Path]]) -> tuple[float, float]:
    """
    Residuals of the union expansion and the difference identity for disjoint parts.

    Returns
    -------
    (residual_union, residual_difference)
        ``mu(U A_i) - sum mu(A_i) - sum_{i<j} I(A_i, A_j)`` and
        ``mu(U_{i>=1} A_i) - mu(U_{i>=2} A_i) - mu(A_1) - sum_{i>=2} I(A_1, A_i)``,
        both in absolute value.
    """
    parts = [frozenset(x) for x in parts]
    if not parts:
        return 0.0, 0.0
    if not _disjoint(parts):
        raise PreconditionError("parts must be mutually disjoint")
    union = frozenset().union(*parts)
    mus = [measure(ctx, x) for x in parts]
    pair_terms = {
        (i, j): interference(ctx, parts[i], parts[j])
        for i, j in itertools.combinations(range(len(parts)), 2)
    }
    r_union = abs(measure(ctx, union) - sum(mus) - sum(pair_terms.values()))
    tail = frozenset().union(*parts[1:])
    r_diff = abs(
        measure(ctx, union)
        - measure(ctx, tail)
        - mus[0]
        - sum(pair_terms[(0, j)] for j in range(1, len(parts)))
    )
    return r_union, r_diff


@dataclass(frozen=True)
class RegularityReport:
    """
    Outcome of the two regularity implications for a disjoint pair ``(A, B)``.

    ``null_a_fired``: ``mu(A) <= tol``, so ``mu(A | B)`` should equal ``mu(B)``.
    ``null_union_fired``: ``mu(A | B) <= tol``, so ``mu(A)`` should equal ``mu(B)``.
    A residual is 0.0 when its branch did not fire.
    """

    null_a_fired: bool
    null_a_residual: float
    null_union_fired: bool
    null_union_residual: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.null_a_residual <= self.bound and self.null_union_residual <= self.bound


def regularity_bound(tol: float, mu_b: float) -> float:
    return 2.0 * math.sqrt(tol) * math.sqrt(1.0 + mu_b)


def check_regularity(
    ctx: QMeasureContext, a: Iterable[Path], b: Iterable[Path]
) -> RegularityReport:
    a, b = frozenset(a), frozenset(b)
    if a & b:
        raise PreconditionError("regularity is stated for disjoint events")
    tol = ctx.tolerance
    mu_a, mu_b, mu_ab = measure(ctx, a), measure(ctx, b), measure(ctx, a | b)
    bound = regularity_bound(tol, mu_b)
    fire_a = mu_a <= tol
    fire_ab = mu_ab <= tol
    return RegularityReport(
        null_a_fired=fire_a,
        null_a_residual=abs(mu_ab - mu_b) if fire_a else 0.0,
        null_union_fired=fire_ab,
        null_union_residual=abs(mu_a - mu_b) if fire_ab else 0.0,
        bound=bound,
    )


@dataclass(frozen=True)
class PairBoundsReport:
    mu_pair: float
    lower: float
    upper: float
    lower_violation: float
    upper_violation: float

    @property
    def residual(self) -> float:
        return max(self.lower_violation, self.upper_violation)


def check_pair_bounds(ctx: QMeasureContext, w1: Path, w2: Path) -> PairBoundsReport:
    """``(sqrt mu(w) - sqrt mu(w'))^2 <= mu({w, w'}) <= (sqrt mu(w) + sqrt mu(w'))^2``."""
    w1, w2 = tuple(w1), tuple(w2)
    if w1 == w2:
        raise PreconditionError("pair bounds need two distinct paths")
    r1 = math.sqrt(measure(ctx, [w1]))
    r2 = math.sqrt(measure(ctx, [w2]))
    mu = measure(ctx, [w1, w2])
    lower, upper = (r1 - r2) ** 2, (r1 + r2) ** 2
    return PairBoundsReport(mu, lower, upper, max(0.0, lower - mu), max(0.0, mu - upper))


def check_last_slot_additivity(
    ctx: QMeasureContext,
    prefix: Sequence[Iterable[str]],
    parts: Sequence[Iterable[str]],
) -> float:
    """
    Residual of ``mu(A_1 x ... x A_{n-1} x (U B_i)) = sum_i mu(A_1 x ... x B_i)``.

    ``prefix`` holds the first ``n - 1`` factors; ``parts`` are disjoint
    nonempty subsets of the last step's outcomes.
    """
    parts = [frozenset(x) for x in parts]
    if not _disjoint(parts):
        raise PreconditionError("last-slot parts must be mutually disjoint")
    prefix = [list(x) for x in prefix]
    whole = measure(ctx, expand_homogeneous(ctx.pipeline, prefix + [frozenset().union(*parts)]))
    pieces = sum(measure(ctx, expand_homogeneous(ctx.pipeline, prefix + [b])) for b in parts)
    return abs(whole - pieces)


def homogeneous_residual(ctx: QMeasureContext, factors: Sequence[Iterable[str]]) -> float:
    """``|single-chain fast path - expand-and-sum|`` for a homogeneous event."""
    fast = measure_homogeneous(ctx, factors)
    slow = measure(ctx, expand_homogeneous(ctx.pipeline, factors))
    return abs(fast - slow)


def is_classical(ctx: QMeasureContext, tol: float = 1e-12) -> bool:
    """True when every path-pair interference is within ``tol`` of zero."""
    return linalg.max_abs(interference_matrix(ctx)) <= tol


"""
Quantum integration of real functions over the finite path space.

Two independent routes are provided:

* :func:`integrate_level_set` evaluates ``int_0^inf mu({f > t}) dt`` exactly as a
  finite sum over the distinct values of ``f`` (the integrand is piecewise
  constant in ``t``);
* :func:`integrate_pairwise` uses the path expansion
  ``sum f(w) mu(w) + sum_{pairs} I(w, w') min(f(w), f(w'))``.

Signed functions are split canonically into ``f+ = max(f, 0)`` and
``f- = max(-f, 0)`` and integrated as ``int f+ - int f-``.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .linalg import ValidationError
from .pipeline import FunctionTable
from .qmeasure import (
    InternalConsistencyError,
    PreconditionError,
    QMeasureContext,
    interference,
    interference_matrix,
    measure,
    path_measures,
)


def _values(f: FunctionTable | np.ndarray) -> np.ndarray:
    values = np.asarray(f.values if isinstance(f, FunctionTable) else f, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValidationError("function values must be finite")
    return values


def split(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Canonical ``(f+, f-)`` with ``f = f+ - f-`` and ``f+ * f- = 0``."""
    values = np.asarray(values, dtype=np.float64)
    return np.maximum(values, 0.0), np.maximum(-values, 0.0)


def _level_set_nonneg(ctx: QMeasureContext, values: np.ndarray) -> float:
    # on [t_{j-1}, t_j) the set {f > t} is {f >= t_j}
    total = 0.0
    prev = 0.0
    for t in np.unique(values[values > 0.0]):
        total += (t - prev) * ctx.measure_mask(values >= t)
        prev = t
    return total


def integrate_level_set(ctx: QMeasureContext, f) -> float:
    plus, minus = split(_values(f))
    return _level_set_nonneg(ctx, plus) - _level_set_nonneg(ctx, minus)


def pairwise_terms(ctx: QMeasureContext, f) -> tuple[float, float]:
    """
    The two sums of the path expansion for a nonnegative ``f``.

    Returns ``(sum f(w) mu(w), sum over unordered pairs I(w, w') min(f(w), f(w')))``.
    """
    values = _values(f)
    if np.any(values < 0):
        raise PreconditionError(
            "pairwise integration needs a nonnegative function; split signed functions first"
        )
    diag = float(values @ path_measures(ctx))
    mins = np.minimum(values[:, None], values[None, :])
    inter = float(np.triu(interference_matrix(ctx) * mins, k=1).sum())
    return diag, inter


def integrate_pairwise(ctx: QMeasureContext, f) -> float:
    diag, inter = pairwise_terms(ctx, f)
    return diag + inter


@dataclass(frozen=True)
class IntegralResult:
    value: float
    by_level_set: float
    by_pairwise: float
    agreement_residual: float


def integrate(ctx: QMeasureContext, f) -> IntegralResult:
    """
    Integrate with both algorithms and check that they agree.

    Raises
    ------
    InternalConsistencyError
        If the two values differ by more than the context tolerance.
    """
    values = _values(f)
    by_level = integrate_level_set(ctx, values)
    plus, minus = split(values)
    by_pair = integrate_pairwise(ctx, plus) - integrate_pairwise(ctx, minus)
    residual = abs(by_level - by_pair)
    if residual > ctx.tolerance:
        raise InternalConsistencyError(
            f"level-set and pairwise integrals disagree by {residual:.3g}"
        )
    return IntegralResult(by_level, by_level, by_pair, residual)


# -- functional properties ---------------------------------------------------


@dataclass
class FunctionalReport:
    """Max residual per functional condition over all trials."""

    trials: int
    two_step_simple: float = 0.0
    grade2: float = 0.0
    homogeneity: float = 0.0
    signed_split: float = 0.0
    simple_expansion: float = 0.0

    def max_residual(self) -> float:
        return max(
            self.two_step_simple,
            self.grade2,
            self.homogeneity,
            self.signed_split,
            self.simple_expansion,
        )

    def as_dict(self) -> dict[str, float]:
        return {
            "two_step_simple": self.two_step_simple,
            "grade2": self.grade2,
            "homogeneity": self.homogeneity,
            "signed_split": self.signed_split,
            "simple_expansion": self.simple_expansion,
        }


HOMOGENEITY_FACTORS = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)


def simple_function(n_paths: int, parts: Sequence[np.ndarray], coeffs: Sequence[float]) -> np.ndarray:
    """``sum_i coeffs[i] * chi(parts[i])`` as a value array."""
    out = np.zeros(n_paths)
    for mask, c in zip(parts, coeffs):
        out = out + c * np.asarray(mask, dtype=np.float64)
    return out


def two_step_residual(ctx: QMeasureContext, a, b, alpha: float, beta: float) -> float:
    """
    ``|int(alpha chi_A + beta chi_B) - alpha mu(A) - beta mu(B) - min(alpha, beta) I(A, B)|``.

    ``a`` and ``b`` are disjoint path sets, ``alpha, beta >= 0``.
    """
    ma, mb = ctx.mask(a), ctx.mask(b)
    if np.any(ma & mb):
        raise PreconditionError("events must be disjoint")
    lhs = integrate_level_set(ctx, alpha * ma + beta * mb)
    rhs = alpha * measure(ctx, a) + beta * measure(ctx, b) + min(alpha, beta) * interference(ctx, a, b)
    return abs(lhs - rhs)


def simple_expansion_residual(ctx: QMeasureContext, parts, coeffs) -> float:
    """
    ``|int(sum a_i chi_{A_i}) - sum a_i mu(A_i) - sum_{i<j} a_i I(A_i, A_j)|``.

    ``coeffs`` must be nondecreasing and nonnegative; ``parts`` mutually disjoint.
    """
    coeffs = list(coeffs)
    if any(c < 0 for c in coeffs) or any(x > y for x, y in zip(coeffs, coeffs[1:])):
        raise PreconditionError("coefficients must satisfy 0 <= a_1 <= ... <= a_n")
    masks = [ctx.mask(x) for x in parts]
    if np.any(np.sum(masks, axis=0) > 1):
        raise PreconditionError("parts must be mutually disjoint")
    lhs = integrate_level_set(ctx, simple_function(len(ctx.paths), masks, coeffs))
    rhs = sum(c * measure(ctx, x) for c, x in zip(coeffs, parts))
    rhs += sum(
        coeffs[i] * interference(ctx, parts[i], parts[j])
        for i, j in itertools.combinations(range(len(parts)), 2)
    )
    return abs(lhs - rhs)


def _random_partition(rng: np.random.Generator, n: int, k: int) -> list[np.ndarray]:
    """``k`` disjoint masks over ``n`` paths (some may be empty; leftover paths unused)."""
    labels = rng.integers(0, k + 1, size=n)
    return [labels == i for i in range(k)]


def _events(ctx: QMeasureContext, masks) -> list[frozenset]:
    return [frozenset(w for w, m in zip(ctx.paths, mask) if m) for mask in masks]


def check_functional_conditions(ctx: QMeasureContext, trials: int, seed: int) -> FunctionalReport:
    """
    Evaluate the functional conditions of the quantum integral on random instances.

    Covers the two-step simple-function form (min form), grade-2 additivity for
    functions of disjoint support, homogeneity for positive and negative factors,
    consistency of the signed split, and the n-term simple-function expansion.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    n = len(ctx.paths)
    report = FunctionalReport(trials=trials)
    for _ in range(trials):
        # two-step simple form
        a, b = _events(ctx, _random_partition(rng, n, 2))
        alpha, beta = rng.uniform(0.0, 3.0, size=2)
        report.two_step_simple = max(report.two_step_simple, two_step_residual(ctx, a, b, alpha, beta))

        # grade-2 additivity for disjoint supports
        masks = _random_partition(rng, n, 3)
        f, g, h = (rng.uniform(0.0, 2.0, size=n) * m for m in masks)
        F = lambda v: integrate_level_set(ctx, v)  # noqa: E731
        lhs = F(f + g + h)
        rhs = F(f + g) + F(f + h) + F(g + h) - F(f) - F(g) - F(h)
        report.grade2 = max(report.grade2, abs(lhs - rhs))

        # homogeneity, signed f
        signed = rng.normal(size=n)
        base = integrate_level_set(ctx, signed)
        for c in HOMOGENEITY_FACTORS:
            report.homogeneity = max(
                report.homogeneity, abs(integrate_level_set(ctx, c * signed) - c * base)
            )

        # signed split, cross-checked through the pairwise route
        plus, minus = split(signed)
        report.signed_split = max(
            report.signed_split,
            abs(base - (integrate_pairwise(ctx, plus) - integrate_pairwise(ctx, minus))),
        )

        # n-term expansion with sorted coefficients
        k = int(rng.integers(1, min(n, 5) + 1))
        parts = _events(ctx, _random_partition(rng, n, k))
        coeffs = np.sort(rng.uniform(0.0, 3.0, size=k))
        report.simple_expansion = max(
            report.simple_expansion, simple_expansion_residual(ctx, parts, coeffs)
        )
    return report


def monotone_chain_residuals(ctx: QMeasureContext, f, length: int = 20) -> list[float]:
    """
    ``|int f_k - int f|`` along the increasing chain ``f_k = (1 - 2^-k) f+``.

    On a finite path space the chain converges pointwise and the residuals go to 0.
    """
    plus, _ = split(_values(f))
    target = integrate_level_set(ctx, plus)
    return [
        abs(integrate_level_set(ctx, (1.0 - 2.0**-k) * plus) - target)
        for k in range(1, length + 1)
    ]


# -- nonlinearity ------------------------------------------------------------


@dataclass(frozen=True)
class NonlinearityWitness:
    f: np.ndarray
    g: np.ndarray
    integral_f: IntegralResult
    integral_g: IntegralResult
    integral_sum: IntegralResult

    @property
    def defect(self) -> float:
        return self.integral_sum.value - self.integral_f.value - self.integral_g.value


NONLINEARITY_THRESHOLD = 1e-6


def demonstrate_nonlinearity(
    ctx: QMeasureContext,
    grid: Sequence[float] = (0.0, 1.0, 2.0),
    max_exhaustive: int = 729,
    samples: int = 5000,
    seed: int = 0,
) -> NonlinearityWitness | None:
    """
    Search for nonnegative ``f, g`` with ``int(f + g) != int f + int g``.

    All grid-valued functions are enumerated when there are at most
    ``max_exhaustive`` of them, otherwise ``samples`` random pairs are drawn.
    Returns ``None`` when no pair exceeds :data:`NONLINEARITY_THRESHOLD`; this is
    always the case for a classical (interference-free) measure.
    """
    n = len(ctx.paths)
    grid = np.asarray(grid, dtype=np.float64)
    if len(grid) ** n <= max_exhaustive:
        funcs = np.array(list(itertools.product(grid, repeat=n)))
        ints = np.array([integrate_pairwise(ctx, v) for v in funcs])
        pairs = itertools.combinations_with_replacement(range(len(funcs)), 2)
        candidates = ((funcs[i], funcs[j], ints[i], ints[j]) for i, j in pairs)
    else:
        rng = np.random.default_rng(seed)

        def draw():
            for _ in range(samples):
                f, g = rng.choice(grid, size=(2, n))
                yield f, g, integrate_pairwise(ctx, f), integrate_pairwise(ctx, g)

        candidates = draw()
    for f, g, int_f, int_g in candidates:
        if abs(integrate_pairwise(ctx, f + g) - int_f - int_g) > NONLINEARITY_THRESHOLD:
            witness = NonlinearityWitness(
                f.copy(), g.copy(), integrate(ctx, f), integrate(ctx, g), integrate(ctx, f + g)
            )
            if abs(witness.defect) > NONLINEARITY_THRESHOLD:
                return witness
    return None

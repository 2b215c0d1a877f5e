"""
Random pipeline generation and the property-suite runner.

Every trial draws a pipeline from its own generator, seeded from
``(config seed, trial index)``; the seed is reported with any failure so that
``random_pipeline(cfg, make_rng(seed))`` replays it exactly.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import decoherence as dec
from . import integral, linalg, qmeasure
from .fixtures import two_slit
from .linalg import DEFAULT_TOL
from .pipeline import PVM, Pipeline, enumerate_paths, expand_homogeneous, make_pipeline
from .qmeasure import QMeasureContext

log = logging.getLogger(__name__)

DIM_LIMITS = (2, 8)
STEP_LIMITS = (1, 4)
MAX_EVENT_SIZE = 8
FIXTURE_STREAM = 2**40  # seed-sequence key offset for fixture trials


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    trials: int = 200
    dim_min: int = 2
    dim_max: int = 8
    steps_min: int = 1
    steps_max: int = 4
    max_outcomes_per_step: int | None = None  # None: up to the dimension
    mixed_state_fraction: float = 0.3
    # pure states confined to one first-step outcome, so some paths are null
    null_state_fraction: float = 0.2
    max_paths: int = 64
    event_pairs: int = 100
    include_fixtures: bool = True

    def validate(self) -> None:
        lo, hi = DIM_LIMITS
        if not lo <= self.dim_min <= self.dim_max <= hi:
            raise ConfigError(f"dimension range must lie within [{lo}, {hi}]")
        lo, hi = STEP_LIMITS
        if not lo <= self.steps_min <= self.steps_max <= hi:
            raise ConfigError(f"step range must lie within [{lo}, {hi}]")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.max_outcomes_per_step is not None and self.max_outcomes_per_step < 1:
            raise ConfigError("max outcomes per step must be >= 1")
        if not 0.0 <= self.mixed_state_fraction <= 1.0:
            raise ConfigError("mixed state fraction must be in [0, 1]")
        if not 0.0 <= self.null_state_fraction <= 1.0:
            raise ConfigError("null state fraction must be in [0, 1]")
        if self.max_paths < 1:
            raise ConfigError("max paths must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")


# -- randomness --------------------------------------------------------------


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def trial_seed(seed: int, trial: int) -> int:
    """Independent 64-bit seed for one trial."""
    return int(np.random.SeedSequence([seed, trial]).generate_state(1, np.uint64)[0])


def gaussian(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normals by the Box-Muller transform on uniform draws."""
    half = (size + 1) // 2
    u1 = 1.0 - rng.random(half)  # (0, 1]
    u2 = rng.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:size]


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    n = int(np.prod(shape))
    z = gaussian(rng, 2 * n)
    return ((z[:n] + 1j * z[n:]) / np.sqrt(2.0)).reshape(shape)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix with phase fix."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    q, r = np.linalg.qr(complex_gaussian(rng, (d, d)))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases[None, :]


def random_state(rng: np.random.Generator, d: int) -> np.ndarray:
    v = complex_gaussian(rng, (d,))
    return v / np.linalg.norm(v)


def random_pvm(rng: np.random.Generator, d: int, k: int) -> PVM:
    """
    ``k`` orthogonal projectors summing to the identity.

    A random orthonormal basis is split into ``k`` nonempty groups; each
    projector is the sum of its group's rank-one projectors.
    """
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    basis = random_unitary(rng, d)
    order = rng.permutation(d)
    cuts = np.sort(rng.choice(np.arange(1, d), size=k - 1, replace=False)) if k > 1 else []
    groups = np.split(order, cuts)
    projectors = []
    for g in groups:
        cols = basis[:, g]
        projectors.append(cols @ np.conj(cols).T)
    return PVM(tuple(str(i) for i in range(k)), tuple(projectors))


@dataclass(frozen=True, eq=False)
class RandomInstance:
    pipeline: Pipeline
    # (weight, pure state) pairs the mixed initial state was built from; empty if pure
    mixture: tuple[tuple[float, np.ndarray], ...] = ()


def _random_instance(cfg: GeneratorConfig, rng: np.random.Generator) -> RandomInstance:
    d = int(rng.integers(cfg.dim_min, cfg.dim_max + 1))
    n = int(rng.integers(cfg.steps_min, cfg.steps_max + 1))
    kmax = d if cfg.max_outcomes_per_step is None else min(d, cfg.max_outcomes_per_step)
    steps = []
    n_paths = 1
    for _ in range(n):
        k = int(rng.integers(1, kmax + 1))
        k = max(1, min(k, cfg.max_paths // n_paths))
        n_paths *= k
        pvm = random_pvm(rng, d, k)
        steps.append((random_unitary(rng, d), list(zip(pvm.labels, pvm.projectors))))

    if rng.random() < cfg.mixed_state_fraction:
        r = int(rng.integers(1, d + 1))
        weights = rng.random(r) + 1e-3
        weights /= weights.sum()
        vecs = [random_state(rng, d) for _ in range(r)]
        rho = sum(w * linalg.outer(v) for w, v in zip(weights, vecs))
        p = make_pipeline(steps, mixed=rho)
        return RandomInstance(p, tuple(zip(map(float, weights), vecs)))
    psi = random_state(rng, d)
    if rng.random() < cfg.null_state_fraction:
        # psi = U_1^* P_1(first) z: every path not starting with the first outcome is null
        gate, outcomes = steps[0]
        v = np.conj(gate).T @ (outcomes[0][1] @ psi)
        psi = v / np.linalg.norm(v)
    return RandomInstance(make_pipeline(steps, pure=psi))


def random_pipeline(cfg: GeneratorConfig, rng: np.random.Generator) -> Pipeline:
    cfg.validate()
    return _random_instance(cfg, rng).pipeline


# -- suite -------------------------------------------------------------------


@dataclass
class PropertyResult:
    name: str
    trials: int = 0
    max_residual: float = 0.0
    failures: list[tuple[str, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class SuiteReport:
    config: GeneratorConfig
    properties: dict[str, PropertyResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.properties.values())

    def as_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "passed": self.passed,
            "properties": [
                {
                    "name": r.name,
                    "trials": r.trials,
                    "max_residual": r.max_residual,
                    "passed": r.passed,
                    "failures": [{"trial": t, "residual": x} for t, x in r.failures],
                }
                for r in self.properties.values()
            ],
        }


PROPERTIES = (
    "linalg.unitary",
    "linalg.projector",
    "linalg.trace_gram_real_nonneg",
    "linalg.eig_reconstruction",
    "pipeline.path_count",
    "pipeline.homogeneous_size",
    "decoherence.hermiticity",
    "decoherence.bilinearity",
    "decoherence.nonneg_diagonal",
    "decoherence.cauchy_schwarz",
    "decoherence.final_outcome_orthogonality",
    "decoherence.normalization",
    "decoherence.trace_oracle",
    "decoherence.mixed_consistency",
    "qmeasure.empty_and_total",
    "qmeasure.path_sum",
    "qmeasure.total_interference",
    "qmeasure.decomposition",
    "qmeasure.grade2",
    "qmeasure.union_identities",
    "qmeasure.regularity",
    "qmeasure.pair_bounds",
    "qmeasure.homogeneous_fast_path",
    "qmeasure.last_slot_additivity",
    "integral.cross_algorithm",
    "integral.lebesgue_reduction",
    "integral.homogeneity",
    "integral.indicator",
    "integral.monotone_convergence",
    "integral.two_step_simple",
    "integral.grade2",
    "integral.signed_split",
    "integral.simple_expansion",
)


class _Recorder:
    def __init__(self):
        self.results = {name: PropertyResult(name) for name in PROPERTIES}

    def record(self, trial: str, name: str, residual: float, limit: float = DEFAULT_TOL) -> None:
        r = self.results[name]
        r.trials += 1
        residual = float(residual)
        if not residual <= r.max_residual:
            r.max_residual = residual
        if not residual <= limit:  # NaN counts as failure
            r.failures.append((trial, residual))


def _random_event(rng, paths, size_cap=MAX_EVENT_SIZE) -> frozenset:
    size = int(rng.integers(0, min(size_cap, len(paths)) + 1))
    idx = rng.choice(len(paths), size=size, replace=False)
    return frozenset(paths[i] for i in idx)


def _disjoint_events(rng, paths, k: int) -> list[frozenset]:
    order = rng.permutation(len(paths))
    labels = rng.integers(0, k + 1, size=len(paths))
    out = []
    for i in range(k):
        members = [paths[j] for j, lab in zip(order, labels) if lab == i]
        out.append(frozenset(members[:MAX_EVENT_SIZE]))
    return out


def _random_homogeneous(rng, p: Pipeline) -> list[list[str]]:
    factors = []
    for labels in p.outcomes:
        size = int(rng.integers(1, len(labels) + 1))
        factors.append([labels[i] for i in sorted(rng.choice(len(labels), size, replace=False))])
    return factors


def _D(ctx: QMeasureContext, a, b) -> complex:
    return dec.decoherence_event(ctx.pipeline, ctx.matrix, a, b)


def check_pipeline(
    rec: _Recorder,
    trial: str,
    inst: RandomInstance,
    rng: np.random.Generator,
    event_pairs: int = 100,
    tol: float = DEFAULT_TOL,
) -> None:
    """Run every property on one pipeline, recording residuals under ``trial``."""
    p = inst.pipeline
    ctx = QMeasureContext.from_pipeline(p, tol)
    paths = list(ctx.paths)
    n = len(paths)
    D = ctx.matrix.entries

    # linear algebra on the pipeline's own objects
    for step in p.steps:
        rec.record(trial, "linalg.unitary", linalg.unitarity_residual(step.gate), tol)
        for proj in step.pvm.projectors:
            res = max(linalg.hermiticity_residual(proj), linalg.max_abs(proj @ proj - proj))
            rec.record(trial, "linalg.projector", res, tol)
        gram = linalg.trace(linalg.adjoint(step.gate) @ step.gate)
        rec.record(trial, "linalg.trace_gram_real_nonneg", max(abs(gram.imag), -gram.real), 1e-12)
    herm = complex_gaussian(rng, (p.dim, p.dim))
    herm = herm + linalg.adjoint(herm)
    for m in (herm, p.density):
        vals, vecs = linalg.hermitian_eig(m)
        recon = (vecs * vals[None, :]) @ linalg.adjoint(vecs)
        rec.record(trial, "linalg.eig_reconstruction", linalg.max_abs(recon - m), tol)

    # pipeline combinatorics
    rec.record(trial, "pipeline.path_count", abs(n - math.prod(p.outcome_counts)), 0)
    factors = _random_homogeneous(rng, p)
    size = len(expand_homogeneous(p, factors))
    rec.record(trial, "pipeline.homogeneous_size", abs(size - math.prod(map(len, factors))), 0)

    # decoherence functional
    rec.record(trial, "decoherence.hermiticity", linalg.hermiticity_residual(D), tol)
    rec.record(
        trial,
        "decoherence.final_outcome_orthogonality",
        dec.final_outcome_orthogonality_residual(p, ctx.matrix),
        tol,
    )
    rec.record(trial, "decoherence.normalization", abs(D.sum() - 1.0), tol)

    if p.dim <= 4:
        pairs = itertools.product(range(n), repeat=2)
    else:
        pairs = [tuple(rng.integers(0, n, size=2)) for _ in range(20)]
    oracle = max(
        abs(D[j, k] - dec.decoherence_pair_trace(p, paths[j], paths[k])) for j, k in pairs
    )
    rec.record(trial, "decoherence.trace_oracle", oracle, tol)

    if inst.mixture:
        combo = np.zeros_like(D)
        for weight, v in inst.mixture:
            pure = Pipeline(p.dim, p.steps, pure=linalg.as_vector(v), _index=p._index)
            amps = dec.all_amplitudes(pure, pure.pure)
            combo += weight * (np.conj(amps) @ amps.T)
        rec.record(trial, "decoherence.mixed_consistency", linalg.max_abs(D - combo), tol)

    corner = [frozenset(), frozenset(paths)] + [frozenset([w]) for w in paths[:MAX_EVENT_SIZE]]
    for i in range(event_pairs):
        a = corner[i] if i < len(corner) else _random_event(rng, paths)
        b = _random_event(rng, paths)
        daa, dbb, dab = _D(ctx, a, a), _D(ctx, b, b), _D(ctx, a, b)
        rec.record(trial, "decoherence.nonneg_diagonal", max(0.0, -daa.real, abs(daa.imag)), tol)
        rec.record(
            trial, "decoherence.cauchy_schwarz", max(0.0, abs(dab) ** 2 - daa.real * dbb.real), tol
        )
        rec.record(trial, "qmeasure.decomposition", qmeasure.decomposition_residual(ctx, a), tol)
        rec.record(
            trial,
            "integral.indicator",
            abs(integral.integrate_level_set(ctx, ctx.mask(a)) - qmeasure.measure(ctx, a)),
            tol,
        )

    for _ in range(10):
        a, b, c = _disjoint_events(rng, paths, 3)
        bil = _D(ctx, a | b, c) - _D(ctx, a, c) - _D(ctx, b, c)
        rec.record(trial, "decoherence.bilinearity", abs(bil), tol)
        rec.record(trial, "qmeasure.grade2", qmeasure.check_grade2(ctx, a, b, c), tol)
        reg = qmeasure.check_regularity(ctx, a, b)
        rec.record(trial, "qmeasure.regularity", max(reg.null_a_residual, reg.null_union_residual), reg.bound)
        parts = _disjoint_events(rng, paths, int(rng.integers(1, 5)))
        rec.record(trial, "qmeasure.union_identities", max(qmeasure.check_union_identities(ctx, parts)), tol)

    # q-measure totals
    empty = qmeasure.measure(ctx, frozenset())
    rec.record(trial, "qmeasure.empty_and_total", max(abs(empty), abs(qmeasure.measure(ctx, paths) - 1.0)), tol)
    rec.record(trial, "qmeasure.path_sum", abs(qmeasure.path_measures(ctx).sum() - 1.0), tol)
    rec.record(trial, "qmeasure.total_interference", abs(qmeasure.total_interference(ctx)), tol)

    for _ in range(10):
        if n >= 2:
            j, k = rng.choice(n, size=2, replace=False)
            rec.record(trial, "qmeasure.pair_bounds", qmeasure.check_pair_bounds(ctx, paths[j], paths[k]).residual, tol)
        factors = _random_homogeneous(rng, p)
        rec.record(trial, "qmeasure.homogeneous_fast_path", qmeasure.homogeneous_residual(ctx, factors), tol)
        last = list(p.outcomes[-1])
        rng.shuffle(last)
        cuts = sorted(rng.choice(np.arange(1, len(last)), size=min(2, len(last) - 1), replace=False)) if len(last) > 1 else []
        slot_parts = [x for x in np.split(np.array(last, dtype=object), cuts) if len(x)]
        rec.record(
            trial,
            "qmeasure.last_slot_additivity",
            qmeasure.check_last_slot_additivity(ctx, factors[:-1], [list(x) for x in slot_parts]),
            tol,
        )

    # integrals
    classical = linalg.max_abs(qmeasure.interference_matrix(ctx)) <= 1e-12
    for _ in range(5):
        f = gaussian(rng, n) * 2.0
        lv = integral.integrate_level_set(ctx, f)
        plus, minus = integral.split(f)
        pw = integral.integrate_pairwise(ctx, plus) - integral.integrate_pairwise(ctx, minus)
        rec.record(trial, "integral.cross_algorithm", abs(lv - pw), tol)
        if classical:
            expectation = float(f @ qmeasure.path_measures(ctx))
            rec.record(trial, "integral.lebesgue_reduction", abs(lv - expectation), tol)
        chain = integral.monotone_chain_residuals(ctx, np.abs(f), length=30)
        scale = abs(integral.integrate_level_set(ctx, np.abs(f)))
        # residual k must not exceed 2^-k times the limit; the last one is ~0
        excess = max(r - 2.0**-k * scale for k, r in enumerate(chain, start=1))
        rec.record(trial, "integral.monotone_convergence", max(excess, chain[-1] - 2.0**-30 * scale), tol)

    functional = integral.check_functional_conditions(ctx, trials=3, seed=int(rng.integers(2**63)))
    for key, value in functional.as_dict().items():
        name = "integral.homogeneity" if key == "homogeneity" else f"integral.{key}"
        rec.record(trial, name, value, tol)


def fixture_instances() -> list[tuple[str, RandomInstance]]:
    return [
        (f"fixture:two-slit-{state}", RandomInstance(two_slit(state)))
        for state in ("zero", "uniform")
    ]


def run_suite(cfg: GeneratorConfig) -> SuiteReport:
    """
    Run all properties over ``cfg.trials`` random pipelines (and the two-slit fixtures).

    Failures are collected, never raised. The report depends only on ``cfg``.
    """
    cfg.validate()
    rec = _Recorder()
    if cfg.include_fixtures:
        for i, (label, inst) in enumerate(fixture_instances()):
            rng = make_rng(trial_seed(cfg.seed, FIXTURE_STREAM + i))
            check_pipeline(rec, label, inst, rng, cfg.event_pairs)
    for t in range(cfg.trials):
        seed = trial_seed(cfg.seed, t)
        rng = make_rng(seed)
        inst = _random_instance(cfg, rng)
        check_pipeline(rec, f"seed:{seed}", inst, rng, cfg.event_pairs)
    report = SuiteReport(cfg, rec.results)
    log.info("suite finished: %s", "pass" if report.passed else "FAIL")
    return report

"""
Acceptance gate. Each test checks one criterion at its stated tolerance and
prints a single PASS/FAIL line.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from qhist import harness
from qhist.cli import main
from qhist.decoherence import decoherence_matrix, decoherence_pair_trace
from qhist.fixtures import EXPECTED, NONCLASSICAL_G, PATH_LENGTH, events_by_name, two_slit
from qhist.integral import (
    integrate_level_set,
    integrate_pairwise,
    demonstrate_nonlinearity,
    split,
)
from qhist.qmeasure import (
    QMeasureContext,
    interference,
    interference_matrix,
    measure,
    path_measures,
    total_interference,
)

E = events_by_name
NAMES = ("00", "01", "10", "11")


@pytest.fixture
def report(capsys):
    def _report(number, title, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
        assert ok, detail

    return _report


def _random_contexts(n, seed, **overrides):
    cfg = harness.GeneratorConfig(seed=seed, **overrides)
    cfg.validate()
    out = []
    for t in range(n):
        inst = harness._random_instance(cfg, harness.make_rng(harness.trial_seed(seed, t)))
        out.append(QMeasureContext.from_pipeline(inst.pipeline))
    return out


def test_criterion_1_two_slit_zero_state(report):
    start = time.perf_counter()
    ctx = QMeasureContext.from_pipeline(two_slit("zero"))
    mus = [measure(ctx, E(n)) for n in NAMES]
    inter = [interference(ctx, E(a), E(b)) for a, b in itertools.combinations(NAMES, 2)]
    elapsed = time.perf_counter() - start
    err_mu = max(abs(m - r) for m, r in zip(mus, (0.5, 0.5, 0.0, 0.0)))
    err_i = max(abs(x) for x in inter)
    ok = err_mu <= 1e-12 and err_i <= 1e-12 and elapsed < 0.1
    report(1, "two-slit |0>", ok, f"mu err {err_mu:.1e}, max |I| {err_i:.1e}, {elapsed * 1e3:.1f} ms")


def test_criterion_2_two_slit_uniform(report):
    start = time.perf_counter()
    ctx = QMeasureContext.from_pipeline(two_slit("uniform"))
    exp = EXPECTED["uniform"]
    errs = [abs(measure(ctx, E(n)) - exp["paths"][n]) for n in NAMES]
    errs += [abs(interference(ctx, E(a), E(b)) - r) for (a, b), r in exp["interference"].items()]
    errs += [abs(measure(ctx, E(*s)) - r) for s, r in {**exp["doubletons"], **exp["tripletons"]}.items()]
    for values, key in ((PATH_LENGTH, "integral_f"), (NONCLASSICAL_G, "integral_g")):
        f = np.array(values)
        errs.append(abs(integrate_level_set(ctx, f) - exp[key]))
        errs.append(abs(integrate_pairwise(ctx, f) - exp[key]))
    elapsed = time.perf_counter() - start
    # the literal reference values, independent of the fixtures table
    literal = [
        (interference(ctx, E("00"), E("10")), 0.5),
        (interference(ctx, E("01"), E("11")), -0.5),
        (measure(ctx, E("00", "10")), 1.0),
        (measure(ctx, E("01", "11")), 0.0),
        (measure(ctx, E("00", "01", "10")), 1.25),
        (measure(ctx, E("00", "01", "11")), 0.25),
        (measure(ctx, E("00", "10", "11")), 1.25),
        (measure(ctx, E("01", "10", "11")), 0.25),
        (integrate_level_set(ctx, np.array(PATH_LENGTH)), (2 + 2 * math.sqrt(2)) / 4),
        (integrate_level_set(ctx, np.array(NONCLASSICAL_G)), 0.5),
    ]
    errs += [abs(v - r) for v, r in literal]
    worst = max(errs)
    ok = worst <= 1e-12 and elapsed < 0.1
    report(2, "two-slit uniform", ok, f"{len(errs)} values, max err {worst:.1e}, {elapsed * 1e3:.1f} ms")


def test_criterion_3_normalization_at_scale(report):
    start = time.perf_counter()
    ctxs = _random_contexts(200, seed=3, mixed_state_fraction=0.3)
    worst_sum = max(abs(path_measures(c).sum() - 1.0) for c in ctxs)
    worst_int = max(abs(total_interference(c)) for c in ctxs)
    elapsed = time.perf_counter() - start
    n_mixed = sum(not c.pipeline.is_pure for c in ctxs)
    dims = {c.pipeline.dim for c in ctxs}
    steps = {len(c.pipeline.steps) for c in ctxs}
    ok = (
        worst_sum <= 1e-9
        and worst_int <= 1e-9
        and elapsed < 30
        and 0 < n_mixed < len(ctxs)
        and max(dims) <= 8
        and max(steps) <= 4
    )
    report(
        3,
        "sum of mu = 1, total interference = 0",
        ok,
        f"200 pipelines ({n_mixed} mixed), |sum-1| {worst_sum:.1e}, |sum I| {worst_int:.1e}, {elapsed:.1f} s",
    )


def test_criterion_4_cross_algorithm(report):
    start = time.perf_counter()
    ctxs = _random_contexts(200, seed=4, mixed_state_fraction=0.3)
    rng = np.random.default_rng(4)
    worst = 0.0
    for ctx in ctxs:
        f = rng.normal(size=len(ctx.paths)) * 3.0
        plus, minus = split(f)
        by_pairs = integrate_pairwise(ctx, plus) - integrate_pairwise(ctx, minus)
        worst = max(worst, abs(integrate_level_set(ctx, f) - by_pairs))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 30
    report(4, "level-set vs pairwise integral", ok, f"200 pairs, max diff {worst:.1e}, {elapsed:.1f} s")


def test_criterion_5_axiom_suite(report, capsys):
    code = main(["verify", "--format", "structured"])
    doc = json.loads(capsys.readouterr().out)
    props = {r["name"]: r for r in doc["properties"]}
    # regularity is judged against its tolerance-scaled bound, everything else at 1e-9
    strict = {k: v for k, v in props.items() if k != "qmeasure.regularity"}
    worst_name = max(strict, key=lambda k: strict[k]["max_residual"])
    worst = strict[worst_name]["max_residual"]
    required = {
        "decoherence.hermiticity",
        "decoherence.bilinearity",
        "decoherence.nonneg_diagonal",
        "decoherence.cauchy_schwarz",
        "qmeasure.grade2",
        "qmeasure.union_identities",
        "qmeasure.regularity",
        "qmeasure.pair_bounds",
        "qmeasure.homogeneous_fast_path",
        "qmeasure.last_slot_additivity",
        "integral.two_step_simple",
        "integral.grade2",
        "integral.homogeneity",
        "integral.simple_expansion",
    }
    covered = all(props[k]["trials"] > 0 for k in required)
    ok = code == 0 and doc["passed"] and worst <= 1e-9 and props["qmeasure.regularity"]["passed"] and covered
    report(
        5,
        "axiom suite via verify",
        ok,
        f"exit {code}, {len(props)} properties, {doc['config']['trials']} trials, "
        f"max residual {worst:.1e} ({worst_name})",
    )


def test_criterion_6_trace_oracle(report):
    ctxs = _random_contexts(50, seed=6, dim_max=4, mixed_state_fraction=0.5)
    worst = 0.0
    entries = 0
    for ctx in ctxs:
        p = ctx.pipeline
        m = decoherence_matrix(p)
        for j, w1 in enumerate(m.paths):
            for k, w2 in enumerate(m.paths):
                worst = max(worst, abs(m.entries[j, k] - decoherence_pair_trace(p, w1, w2)))
                entries += 1
    ok = worst <= 1e-9 and all(c.pipeline.dim <= 4 for c in ctxs)
    report(6, "amplitude chain vs trace formula", ok, f"50 pipelines, {entries} entries, max diff {worst:.1e}")


def test_criterion_7_nonlinearity_witness(report):
    ctx = QMeasureContext.from_pipeline(two_slit("uniform"))
    w = demonstrate_nonlinearity(ctx)
    ok = w is not None
    detail = "no witness found"
    if w is not None:
        defects = [
            route(ctx, w.f + w.g) - route(ctx, w.f) - route(ctx, w.g)
            for route in (integrate_level_set, integrate_pairwise)
        ]
        ok = all(abs(d) > 1e-6 for d in defects)
        detail = f"f={w.f.tolist()}, g={w.g.tolist()}, defect {defects[0]:+.6g} / {defects[1]:+.6g}"
    report(7, "nonlinearity witness", ok, detail)
    # sanity: the witness is explained by interference
    assert np.any(interference_matrix(ctx) != 0)

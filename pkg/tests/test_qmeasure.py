import itertools

import numpy as np
import pytest

from conftest import random_instances
from qhist import harness
from qhist.fixtures import EXPECTED, events_by_name, two_slit
from qhist.pipeline import enumerate_paths, make_pipeline
from qhist.qmeasure import (
    InternalConsistencyError,
    PreconditionError,
    QMeasureContext,
    _real_nonneg,
    check_grade2,
    check_union_identities,
    check_last_slot_additivity,
    check_pair_bounds,
    check_regularity,
    decomposition_residual,
    homogeneous_residual,
    interference,
    interference_matrix,
    is_classical,
    measure,
    measure_homogeneous,
    path_measures,
    regularity_bound,
    total_interference,
)

E = events_by_name


@pytest.mark.parametrize("state", ["zero", "uniform"])
def test_golden_path_measures(state, request):
    ctx = request.getfixturevalue(f"{state}_ctx")
    for name, ref in EXPECTED[state]["paths"].items():
        assert abs(measure(ctx, E(name)) - ref) <= 1e-12


def test_golden_interference(uniform_ctx):
    for (a, b), ref in EXPECTED["uniform"]["interference"].items():
        assert abs(interference(uniform_ctx, E(a), E(b)) - ref) <= 1e-12


def test_golden_doubletons_tripletons(uniform_ctx):
    exp = EXPECTED["uniform"]
    for names, ref in {**exp["doubletons"], **exp["tripletons"]}.items():
        assert abs(measure(uniform_ctx, E(*names)) - ref) <= 1e-12


def test_interference_matrix_matches_four_term_form(uniform_ctx):
    im = interference_matrix(uniform_ctx)
    for j, k in itertools.combinations(range(4), 2):
        a, b = [uniform_ctx.paths[j]], [uniform_ctx.paths[k]]
        assert abs(im[j, k] - interference(uniform_ctx, a, b)) <= 1e-12


def test_zero_state_is_classical(zero_ctx, uniform_ctx):
    assert is_classical(zero_ctx)
    assert not is_classical(uniform_ctx)


def test_empty_and_total(uniform_ctx):
    assert measure(uniform_ctx, []) == 0.0
    assert abs(measure(uniform_ctx, uniform_ctx.paths) - 1) <= 1e-12


def test_self_interference_is_minus_two_mu(uniform_ctx):
    # with A = B the four-term form gives mu(A) - 3 mu(A)
    a = E("00", "10")
    assert abs(interference(uniform_ctx, a, a) + 2 * measure(uniform_ctx, a)) <= 1e-12


def test_homogeneous_fast_path(uniform_ctx):
    assert abs(measure_homogeneous(uniform_ctx, [["a1"], ["b1", "b2"]]) - 0.5) <= 1e-12
    assert abs(measure_homogeneous(uniform_ctx, [["a1", "a2"], ["b1"]]) - 1.0) <= 1e-12
    assert homogeneous_residual(uniform_ctx, [["a1", "a2"], ["b2"]]) <= 1e-12


def test_last_slot_additivity_example(uniform_ctx):
    assert check_last_slot_additivity(uniform_ctx, [["a1", "a2"]], [["b1"], ["b2"]]) <= 1e-12


def test_grade2_and_union_examples(uniform_ctx):
    assert check_grade2(uniform_ctx, E("00"), E("01"), E("10")) <= 1e-12
    r_union, r_diff = check_union_identities(uniform_ctx, [E("00"), E("01"), E("10"), E("11")])
    assert r_union <= 1e-12 and r_diff <= 1e-12
    with pytest.raises(PreconditionError):
        check_grade2(uniform_ctx, E("00"), E("00"), E("10"))
    with pytest.raises(PreconditionError):
        check_union_identities(uniform_ctx, [E("00", "01"), E("01")])


def test_regularity_null_union(uniform_ctx):
    # mu({01, 11}) = 0, so mu({01}) must equal mu({11})
    rep = check_regularity(uniform_ctx, E("01"), E("11"))
    assert rep.null_union_fired and not rep.null_a_fired
    assert rep.passed and rep.null_union_residual <= 1e-12


def test_regularity_null_set(zero_ctx):
    rep = check_regularity(zero_ctx, E("10"), E("00", "01"))
    assert rep.null_a_fired and rep.passed


def test_regularity_bound_and_overlap(uniform_ctx):
    assert regularity_bound(1e-9, 0.0) == pytest.approx(2 * np.sqrt(1e-9))
    with pytest.raises(PreconditionError):
        check_regularity(uniform_ctx, E("00"), E("00"))


def test_pair_bounds_tight_cases(uniform_ctx):
    # {00, 10} reaches the upper bound, {01, 11} the lower
    up = check_pair_bounds(uniform_ctx, *E("00", "10"))
    assert abs(up.mu_pair - up.upper) <= 1e-12 and up.residual == 0
    lo = check_pair_bounds(uniform_ctx, ("a1", "b2"), ("a2", "b2"))
    assert abs(lo.mu_pair - lo.lower) <= 1e-12
    with pytest.raises(PreconditionError):
        check_pair_bounds(uniform_ctx, ("a1", "b1"), ("a1", "b1"))


def test_clamping():
    assert _real_nonneg(complex(-1e-12, 0), 1e-9) == 0.0
    with pytest.raises(InternalConsistencyError):
        _real_nonneg(complex(-1e-3, 0), 1e-9)
    with pytest.raises(InternalConsistencyError):
        _real_nonneg(complex(0.5, 1e-3), 1e-9)


def test_context_rejects_nonpositive_tolerance():
    with pytest.raises(ValueError):
        QMeasureContext.from_pipeline(two_slit(), tolerance=0.0)


def test_mixed_homogeneous_uses_expansion():
    p = make_pipeline(
        [(np.eye(2), [("x", np.diag([1.0, 0])), ("y", np.diag([0, 1.0]))])],
        mixed=np.diag([0.3, 0.7]),
    )
    ctx = QMeasureContext.from_pipeline(p)
    assert abs(measure_homogeneous(ctx, [["y"]]) - 0.7) <= 1e-12


def test_random_identities(random_contexts):
    rng = np.random.default_rng(3)
    for ctx in random_contexts:
        paths = list(ctx.paths)
        assert abs(path_measures(ctx).sum() - 1) <= 1e-9
        assert abs(total_interference(ctx)) <= 1e-9
        for _ in range(10):
            parts = harness._disjoint_events(rng, paths, 3)
            assert check_grade2(ctx, *parts) <= 1e-9
            assert max(check_union_identities(ctx, parts)) <= 1e-9
            assert decomposition_residual(ctx, parts[0] | parts[1]) <= 1e-9
            a, b = parts[0], parts[1]
            assert check_regularity(ctx, a, b).passed
            if len(paths) > 1:
                j, k = rng.choice(len(paths), size=2, replace=False)
                assert check_pair_bounds(ctx, paths[j], paths[k]).residual <= 1e-9
            assert homogeneous_residual(ctx, harness._random_homogeneous(rng, ctx.pipeline)) <= 1e-9


def test_last_slot_random():
    for inst in random_instances(15, seed=11):
        ctx = QMeasureContext.from_pipeline(inst.pipeline)
        p = ctx.pipeline
        prefix = [list(o[:1]) for o in p.outcomes[:-1]]
        last = [[x] for x in p.outcomes[-1]]
        assert check_last_slot_additivity(ctx, prefix, last) <= 1e-9


def test_regularity_fires_on_null_paths():
    fired = 0
    for inst in random_instances(30, seed=5, null_state_fraction=1.0, mixed_state_fraction=0.0):
        ctx = QMeasureContext.from_pipeline(inst.pipeline)
        mus = path_measures(ctx)
        nulls = [w for w, m in zip(ctx.paths, mus) if m <= ctx.tolerance]
        others = [w for w, m in zip(ctx.paths, mus) if m > ctx.tolerance]
        if nulls and others:
            rep = check_regularity(ctx, [nulls[0]], [others[0]])
            assert rep.null_a_fired and rep.passed
            fired += 1
    assert fired > 0

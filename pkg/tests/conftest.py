from pathlib import Path

import numpy as np
import pytest

from qhist import harness
from qhist.fixtures import two_slit
from qhist.qmeasure import QMeasureContext

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def uniform_ctx() -> QMeasureContext:
    return QMeasureContext.from_pipeline(two_slit("uniform"))


@pytest.fixture(scope="session")
def zero_ctx() -> QMeasureContext:
    return QMeasureContext.from_pipeline(two_slit("zero"))


def random_instances(n, seed=1234, **overrides):
    cfg = harness.GeneratorConfig(max_paths=64, **overrides)
    out = []
    for t in range(n):
        rng = harness.make_rng(harness.trial_seed(seed, t))
        out.append(harness._random_instance(cfg, rng))
    return out


@pytest.fixture(scope="session")
def random_contexts():
    """A fixed batch of random pipelines (d <= 8, <= 4 steps, pure and mixed)."""
    insts = random_instances(25, mixed_state_fraction=0.4)
    return [QMeasureContext.from_pipeline(i.pipeline) for i in insts]


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)

"""Decoherence functionals, q-measures and quantum integrals for measurement pipelines."""

from .decoherence import (
    DecoherenceMatrix,
    decoherence_event,
    decoherence_matrix,
    decoherence_pair,
    path_amplitude,
)
from .fixtures import two_slit
from .integral import IntegralResult, integrate, integrate_level_set, integrate_pairwise
from .linalg import ShapeError, ValidationError
from .pipeline import (
    Pipeline,
    PipelineFormatError,
    ResourceError,
    enumerate_paths,
    expand_homogeneous,
    indicator,
    load_pipeline,
    load_pipeline_file,
)
from .qmeasure import QMeasureContext, interference, measure, measure_homogeneous

__version__ = "0.1.0"

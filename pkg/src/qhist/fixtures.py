"""Built-in pipelines: the simplified two-slit experiment."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .linalg import HADAMARD, basis_projector
from .pipeline import Pipeline, make_pipeline

TWO_SLIT_STATES = ("zero", "uniform")

# binary path names used when reporting the two-slit example
BINARY_NAMES = {
    ("a1", "b1"): "00",
    ("a1", "b2"): "01",
    ("a2", "b1"): "10",
    ("a2", "b2"): "11",
}
PATHS_BY_NAME = {v: k for k, v in BINARY_NAMES.items()}


def two_slit(state: str = "uniform") -> Pipeline:
    """
    Two-level two-slit pipeline.

    Step 1 measures the slit (``a1``/``a2``) in the computational basis with no
    gate before it, step 2 applies a Hadamard and measures the detector
    (``b1``/``b2``). ``state`` is ``"zero"`` for |0> or ``"uniform"`` for
    (|0> + |1>)/sqrt(2).
    """
    if state == "zero":
        psi = np.array([1.0, 0.0])
    elif state == "uniform":
        psi = np.array([1.0, 1.0]) / np.sqrt(2.0)
    else:
        raise ValueError(f"unknown two-slit state {state!r}; expected one of {TWO_SLIT_STATES}")
    p0, p1 = basis_projector(2, 0), basis_projector(2, 1)
    return make_pipeline(
        [
            (np.eye(2), [("a1", p0), ("a2", p1)]),
            (HADAMARD, [("b1", p0), ("b2", p1)]),
        ],
        pure=psi,
    )


def events_by_name(*names: str) -> frozenset:
    """``events_by_name("00", "10")`` -> the event {(a1, b1), (a2, b1)}."""
    return frozenset(PATHS_BY_NAME[n] for n in names)


_SQRT2 = math.sqrt(2.0)

# function values in path order 00, 01, 10, 11
PATH_LENGTH = (1.0, _SQRT2, _SQRT2, 1.0)
NONCLASSICAL_G = (0.0, 1.0, 1.0, 2.0)

DOUBLETONS = (("00", "01"), ("00", "10"), ("00", "11"), ("01", "10"), ("01", "11"), ("10", "11"))
TRIPLETONS = (("00", "01", "10"), ("00", "01", "11"), ("00", "10", "11"), ("01", "10", "11"))


def _classical_expectations(mu: dict[str, float]) -> dict:
    names = ("00", "01", "10", "11")
    return {
        "paths": mu,
        "interference": {pair: 0.0 for pair in itertools.combinations(names, 2)},
        "doubletons": {s: sum(mu[n] for n in s) for s in DOUBLETONS},
        "tripletons": {s: sum(mu[n] for n in s) for s in TRIPLETONS},
        "integral_f": sum(v * mu[n] for v, n in zip(PATH_LENGTH, names)),
        "integral_g": sum(v * mu[n] for v, n in zip(NONCLASSICAL_G, names)),
    }


# reference values for the two-slit example; the uniform-state numbers are the
# published ones, the zero state is classical so its sets add up
EXPECTED = {
    "zero": _classical_expectations({"00": 0.5, "01": 0.5, "10": 0.0, "11": 0.0}),
    "uniform": {
        "paths": {"00": 0.25, "01": 0.25, "10": 0.25, "11": 0.25},
        "interference": {
            ("00", "01"): 0.0,
            ("00", "10"): 0.5,
            ("00", "11"): 0.0,
            ("01", "10"): 0.0,
            ("01", "11"): -0.5,
            ("10", "11"): 0.0,
        },
        "doubletons": {
            ("00", "01"): 0.5,
            ("00", "10"): 1.0,
            ("00", "11"): 0.5,
            ("01", "10"): 0.5,
            ("01", "11"): 0.0,
            ("10", "11"): 0.5,
        },
        "tripletons": {
            ("00", "01", "10"): 1.25,
            ("00", "01", "11"): 0.25,
            ("00", "10", "11"): 1.25,
            ("01", "10", "11"): 0.25,
        },
        "integral_f": (2.0 + 2.0 * _SQRT2) / 4.0,
        "integral_g": 0.5,
    },
}

"""
Measurement pipelines, their paths and events.

A pipeline is an initial state followed by ``n`` steps, each a unitary gate
and a projection-valued measure (PVM) with labelled outcomes. A path picks one
outcome label per step; an event is any set of paths.

Pipelines are loaded from JSON documents of the form::

    {"dim": 2,
     "initial": {"pure": [[re, im], ...]}          # or {"mixed": [[[re, im], ...], ...]}
     "steps": [{"gate": [[[re, im], ...], ...],
                "pvm": [{"label": "a1", "projector": [[[re, im], ...], ...]}, ...]},
               ...]}
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Any

import numpy as np

from . import linalg
from .linalg import DEFAULT_TOL, ComplexMatrix, ComplexVector, ValidationError

Path = tuple[str, ...]
Event = frozenset  # frozenset[Path]

DEFAULT_PATH_CAP = 2**20


class PipelineFormatError(ValueError):
    """The document is not shaped like a pipeline / function / event file."""


class ResourceError(RuntimeError):
    """A requested enumeration exceeds the configured size cap."""


@dataclass(frozen=True, eq=False)
class PVM:
    labels: tuple[str, ...]
    projectors: tuple[ComplexMatrix, ...]

    def __len__(self) -> int:
        return len(self.labels)

    def projector(self, label: str) -> ComplexMatrix:
        return self.projectors[self.labels.index(label)]

    def sum_of(self, labels: Iterable[str]) -> ComplexMatrix:
        """``P(A) = sum of P(a) for a in A``."""
        d = self.projectors[0].shape[0]
        total = np.zeros((d, d), dtype=np.complex128)
        for label in labels:
            total = total + self.projector(label)
        return total


@dataclass(frozen=True, eq=False)
class Step:
    gate: ComplexMatrix
    pvm: PVM


@dataclass(frozen=True, eq=False)
class Pipeline:
    """
    Validated pipeline ``W -> U_1 -> M_1 -> ... -> U_n -> M_n``.

    Exactly one of ``pure`` (unit vector) and ``mixed`` (density matrix) is set.
    Construct through :func:`make_pipeline` or :func:`load_pipeline` so that the
    invariants are checked.
    """

    dim: int
    steps: tuple[Step, ...]
    pure: ComplexVector | None = None
    mixed: ComplexMatrix | None = None
    _index: tuple[dict[str, int], ...] = field(default=(), repr=False, compare=False)

    @property
    def is_pure(self) -> bool:
        return self.pure is not None

    @property
    def density(self) -> ComplexMatrix:
        if self.pure is not None:
            return linalg.outer(self.pure)
        return self.mixed

    @property
    def outcomes(self) -> tuple[tuple[str, ...], ...]:
        return tuple(step.pvm.labels for step in self.steps)

    @property
    def outcome_counts(self) -> tuple[int, ...]:
        return tuple(len(step.pvm) for step in self.steps)

    @property
    def n_paths(self) -> int:
        return math.prod(self.outcome_counts)

    def outcome_index(self, step: int, label: str) -> int:
        try:
            return self._index[step][label]
        except KeyError:
            raise ValidationError(
                f"unknown outcome label {label!r} at step {step + 1}"
            ) from None

    def path_index(self, path: Path) -> int:
        """Position of ``path`` in :func:`enumerate_paths` order."""
        if len(path) != len(self.steps):
            raise ValidationError(
                f"path {format_path(path)!r} has {len(path)} labels, "
                f"pipeline has {len(self.steps)} steps"
            )
        idx = 0
        for i, (label, m) in enumerate(zip(path, self.outcome_counts)):
            idx = idx * m + self.outcome_index(i, label)
        return idx


def make_pipeline(
    steps: Sequence[tuple[Any, Sequence[tuple[str, Any]]]],
    pure=None,
    mixed=None,
    tol: float = DEFAULT_TOL,
) -> Pipeline:
    """
    Build and validate a pipeline from raw arrays.

    ``steps`` is a sequence of ``(gate, [(label, projector), ...])``.
    """
    if (pure is None) == (mixed is None):
        raise ValidationError("initial state must be exactly one of pure or mixed")
    if not steps:
        raise ValidationError("pipeline needs at least one step")

    if pure is not None:
        psi = linalg.as_vector(pure)
        dim = psi.shape[0]
        norm = float(np.linalg.norm(psi))
        if abs(norm - 1.0) > tol:
            raise ValidationError(f"initial pure state norm {norm:.12g} is not 1")
        rho = None
    else:
        rho = linalg.as_matrix(mixed)
        dim = rho.shape[0]
        psi = None
        if rho.shape != (dim, dim):
            raise ValidationError(f"initial density matrix has shape {rho.shape}")
        if not linalg.is_density(rho, tol):
            raise ValidationError("initial mixed state is not a density matrix")
    if dim < 1:
        raise ValidationError("dimension must be positive")

    built: list[Step] = []
    index: list[dict[str, int]] = []
    eye = np.eye(dim)
    for i, (gate, outcomes) in enumerate(steps, start=1):
        u = linalg.as_matrix(gate)
        if u.shape != (dim, dim):
            raise ValidationError(f"step {i} gate has shape {u.shape}, expected ({dim}, {dim})")
        res = linalg.unitarity_residual(u)
        if res > tol:
            raise ValidationError(f"step {i} gate unitarity residual {res:.3g}")
        if not outcomes:
            raise ValidationError(f"step {i} PVM has no outcomes")
        labels = []
        projs = []
        for label, proj in outcomes:
            if not isinstance(label, str) or not label:
                raise ValidationError(f"step {i} outcome label must be a nonempty string")
            if "," in label:
                raise ValidationError(f"step {i} outcome label {label!r} contains a comma")
            if label in labels:
                raise ValidationError(f"step {i} duplicate outcome label {label!r}")
            p = linalg.as_matrix(proj)
            if p.shape != (dim, dim):
                raise ValidationError(
                    f"step {i} projector {label!r} has shape {p.shape}, expected ({dim}, {dim})"
                )
            labels.append(label)
            projs.append(p)
        res = linalg.max_abs(sum(projs) - eye)
        if res > tol:
            raise ValidationError(f"step {i} PVM completeness residual {res:.3g}")
        for label, p in zip(labels, projs):
            if not linalg.is_projector(p, tol):
                raise ValidationError(f"step {i} outcome {label!r} is not a projector")
        for (la, pa), (lb, pb) in itertools.combinations(zip(labels, projs), 2):
            res = linalg.max_abs(pa @ pb)
            if res > tol:
                raise ValidationError(
                    f"step {i} PVM orthogonality residual {res:.3g} for {la!r},{lb!r}"
                )
        built.append(Step(u, PVM(tuple(labels), tuple(projs))))
        index.append({label: k for k, label in enumerate(labels)})

    return Pipeline(dim=dim, steps=tuple(built), pure=psi, mixed=rho, _index=tuple(index))


# -- file format -------------------------------------------------------------


def _complex(x, where: str) -> complex:
    if (
        not isinstance(x, (list, tuple))
        or len(x) != 2
        or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in x)
    ):
        raise PipelineFormatError(f"{where}: complex scalar must be [re, im], got {x!r}")
    return complex(x[0], x[1])


def _vector(rows, where: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise PipelineFormatError(f"{where}: expected a nonempty list of [re, im]")
    return np.array([_complex(x, where) for x in rows], dtype=np.complex128)


def _matrix(rows, where: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise PipelineFormatError(f"{where}: expected a nonempty list of rows")
    out = [_vector(r, where) for r in rows]
    if len({len(r) for r in out}) != 1:
        raise PipelineFormatError(f"{where}: ragged matrix rows")
    return np.array(out)


def _parse_document(document) -> Any:
    if isinstance(document, (str, bytes)):
        try:
            return json.loads(document)
        except json.JSONDecodeError as exc:
            raise PipelineFormatError(f"malformed JSON: {exc}") from exc
    return document


def load_pipeline(document, tol: float = DEFAULT_TOL) -> Pipeline:
    """
    Parse and validate a pipeline document (JSON text or already-decoded mapping).

    Raises
    ------
    PipelineFormatError
        If the document is malformed.
    ValidationError
        If a pipeline invariant fails; the message names it and the step.
    """
    doc = _parse_document(document)
    if not isinstance(doc, Mapping):
        raise PipelineFormatError("pipeline document must be an object")
    for key in ("dim", "initial", "steps"):
        if key not in doc:
            raise PipelineFormatError(f"missing key {key!r}")
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise PipelineFormatError(f"'dim' must be a positive integer, got {dim!r}")

    initial = doc["initial"]
    if not isinstance(initial, Mapping) or len(initial) != 1 or not (
        set(initial) <= {"pure", "mixed"}
    ):
        raise PipelineFormatError("'initial' must be {'pure': ...} or {'mixed': ...}")
    pure = mixed = None
    if "pure" in initial:
        pure = _vector(initial["pure"], "initial.pure")
        if pure.shape[0] != dim:
            raise ValidationError(f"initial state has length {pure.shape[0]}, dim is {dim}")
    else:
        mixed = _matrix(initial["mixed"], "initial.mixed")
        if mixed.shape != (dim, dim):
            raise ValidationError(f"initial density matrix has shape {mixed.shape}, dim is {dim}")

    raw_steps = doc["steps"]
    if not isinstance(raw_steps, list):
        raise PipelineFormatError("'steps' must be a list")
    steps = []
    for i, s in enumerate(raw_steps, start=1):
        if not isinstance(s, Mapping) or "gate" not in s or "pvm" not in s:
            raise PipelineFormatError(f"step {i}: needs 'gate' and 'pvm'")
        gate = _matrix(s["gate"], f"step {i} gate")
        if not isinstance(s["pvm"], list):
            raise PipelineFormatError(f"step {i}: 'pvm' must be a list")
        outcomes = []
        for o in s["pvm"]:
            if not isinstance(o, Mapping) or "label" not in o or "projector" not in o:
                raise PipelineFormatError(f"step {i}: each outcome needs 'label' and 'projector'")
            outcomes.append((o["label"], _matrix(o["projector"], f"step {i} projector")))
        steps.append((gate, outcomes))
    return make_pipeline(steps, pure=pure, mixed=mixed, tol=tol)


def load_pipeline_file(path, tol: float = DEFAULT_TOL) -> Pipeline:
    return load_pipeline(FsPath(path).read_text(), tol=tol)


def _encode_vector(v) -> list:
    return [[float(z.real), float(z.imag)] for z in v]


def _encode_matrix(m) -> list:
    return [_encode_vector(row) for row in m]


def dump_pipeline(p: Pipeline) -> dict:
    """Inverse of :func:`load_pipeline`."""
    initial = (
        {"pure": _encode_vector(p.pure)} if p.is_pure else {"mixed": _encode_matrix(p.mixed)}
    )
    return {
        "dim": p.dim,
        "initial": initial,
        "steps": [
            {
                "gate": _encode_matrix(s.gate),
                "pvm": [
                    {"label": lab, "projector": _encode_matrix(proj)}
                    for lab, proj in zip(s.pvm.labels, s.pvm.projectors)
                ],
            }
            for s in p.steps
        ],
    }


# -- paths and events --------------------------------------------------------


def format_path(path: Path) -> str:
    return ",".join(path)


def parse_path(p: Pipeline, text: str) -> Path:
    path = tuple(label.strip() for label in text.split(","))
    p.path_index(path)  # validates labels
    return path


def enumerate_paths(p: Pipeline, cap: int = DEFAULT_PATH_CAP) -> list[Path]:
    """All paths, lexicographic in per-step outcome index."""
    n = p.n_paths
    if n > cap:
        raise ResourceError(f"pipeline has {n} paths, above the cap of {cap}")
    return list(itertools.product(*p.outcomes))


def make_event(p: Pipeline, paths: Iterable[Sequence[str]]) -> Event:
    """Validated event from an iterable of paths. Duplicates are rejected."""
    out = []
    for path in paths:
        path = tuple(path)
        p.path_index(path)
        out.append(path)
    event = frozenset(out)
    if len(event) != len(out):
        raise ValidationError("event lists a path more than once")
    return event


def check_homogeneous(p: Pipeline, factors: Sequence[Iterable[str]]) -> tuple[frozenset, ...]:
    if len(factors) != len(p.steps):
        raise ValidationError(
            f"homogeneous event has {len(factors)} factors, pipeline has {len(p.steps)} steps"
        )
    out = []
    for i, factor in enumerate(factors):
        fs = frozenset(factor)
        if not fs:
            raise ValidationError(f"homogeneous factor {i + 1} is empty")
        for label in fs:
            p.outcome_index(i, label)
        out.append(fs)
    return tuple(out)


def expand_homogeneous(p: Pipeline, factors: Sequence[Iterable[str]]) -> Event:
    """The Cartesian product ``A_1 x ... x A_n`` as an explicit path set."""
    checked = check_homogeneous(p, factors)
    ordered = [[lab for lab in p.outcomes[i] if lab in fs] for i, fs in enumerate(checked)]
    return frozenset(itertools.product(*ordered))


def event_mask(p: Pipeline, event: Iterable[Path]) -> np.ndarray:
    """Boolean mask over :func:`enumerate_paths` order."""
    mask = np.zeros(p.n_paths, dtype=bool)
    for path in event:
        mask[p.path_index(path)] = True
    return mask


def parse_event(p: Pipeline, spec) -> Event:
    """Event from ``{"paths": ["a1,b1", ...]}`` or ``{"homogeneous": [["a1"], ...]}``."""
    spec = _parse_document(spec)
    if not isinstance(spec, Mapping) or len(spec) != 1:
        raise PipelineFormatError("event must be {'paths': [...]} or {'homogeneous': [...]}")
    if "paths" in spec:
        items = spec["paths"]
        if not isinstance(items, list) or not all(isinstance(s, str) for s in items):
            raise PipelineFormatError("'paths' must be a list of comma-joined label strings")
        return make_event(p, (parse_path(p, s) for s in items))
    if "homogeneous" in spec:
        factors = spec["homogeneous"]
        if not isinstance(factors, list) or not all(isinstance(f, list) for f in factors):
            raise PipelineFormatError("'homogeneous' must be a list of label lists")
        return expand_homogeneous(p, factors)
    raise PipelineFormatError("event must be {'paths': [...]} or {'homogeneous': [...]}")


# -- function tables ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FunctionTable:
    """Real value per path, stored in :func:`enumerate_paths` order."""

    paths: tuple[Path, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.paths),):
            raise ValidationError(
                f"function table has {values.shape} values for {len(self.paths)} paths"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("function table contains non-finite values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __getitem__(self, path: Path) -> float:
        return float(self.values[self.paths.index(tuple(path))])

    def with_values(self, values) -> FunctionTable:
        return FunctionTable(self.paths, values)

    def as_dict(self) -> dict[str, float]:
        return {format_path(w): float(v) for w, v in zip(self.paths, self.values)}


def function_table(p: Pipeline, values) -> FunctionTable:
    """Table from values given in path order, or from a ``{path: value}`` mapping."""
    paths = tuple(enumerate_paths(p))
    if isinstance(values, Mapping):
        values = [values[w] for w in paths]
    return FunctionTable(paths, values)


def indicator(p: Pipeline, event: Iterable[Path]) -> FunctionTable:
    return FunctionTable(tuple(enumerate_paths(p)), event_mask(p, event).astype(float))


def parse_function_table(p: Pipeline, document) -> FunctionTable:
    """
    Load ``{"values": {"a1,b1": 0.5, ...}}``; every path must appear exactly once.

    Key order and surrounding whitespace in keys are not significant.
    """
    doc = _parse_document(document)
    if not isinstance(doc, Mapping) or not isinstance(doc.get("values"), Mapping):
        raise PipelineFormatError("function document must be {'values': {path: value}}")
    paths = enumerate_paths(p)
    known = {format_path(w): w for w in paths}
    given: dict[str, float] = {}
    for key, value in doc["values"].items():
        norm = ",".join(s.strip() for s in key.split(","))
        if norm in given:
            raise ValidationError(f"path {norm!r} appears more than once")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise PipelineFormatError(f"value for {key!r} must be a number")
        given[norm] = float(value)
    missing = [k for k in known if k not in given]
    extra = [k for k in given if k not in known]
    if missing or extra:
        parts = []
        if missing:
            parts.append("missing paths: " + "; ".join(missing))
        if extra:
            parts.append("unknown paths: " + "; ".join(extra))
        raise ValidationError(", ".join(parts))
    return FunctionTable(tuple(paths), [given[k] for k in known])

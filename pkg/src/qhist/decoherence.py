"""
Path amplitudes and the decoherence functional.

For a pure initial state ``psi`` and a path ``w = (a_1, ..., a_n)`` the path
amplitude is the chain-applied vector ``P_n(a_n) U_n ... P_1(a_1) U_1 psi``.
The decoherence functional between two paths is the inner product of their
amplitudes, conjugate-linear in the first argument, so that the diagonal is
the (nonnegative) squared norm. Mixed states are reduced to pure ones through
their spectral decomposition.

:func:`decoherence_pair_trace` evaluates the operator-product trace formula
directly and is kept as an independent cross-check.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from . import linalg
from .linalg import ComplexMatrix, ComplexVector, ShapeError
from .pipeline import Path, Pipeline, ResourceError, enumerate_paths, event_mask

EIGENVALUE_CUTOFF = 1e-12
DEFAULT_MATRIX_CAP = 2**12


def pure_components(p: Pipeline) -> list[tuple[float, ComplexVector]]:
    """
    ``(weight, unit vector)`` pairs whose weighted projectors sum to the initial state.

    Eigenvalues at or below ``EIGENVALUE_CUTOFF`` are dropped.
    """
    if p.is_pure:
        return [(1.0, p.pure)]
    values, vectors = linalg.hermitian_eig(p.mixed)
    return [
        (float(lam), vectors[:, k])
        for k, lam in enumerate(values)
        if lam > EIGENVALUE_CUTOFF
    ]


def path_amplitude(p: Pipeline, psi: ComplexVector, w: Path) -> ComplexVector:
    if psi.shape != (p.dim,):
        raise ShapeError(f"state has shape {psi.shape}, pipeline dimension is {p.dim}")
    if len(w) != len(p.steps):
        raise ShapeError(f"path has {len(w)} labels, pipeline has {len(p.steps)} steps")
    v = psi
    for step, label in zip(p.steps, w):
        v = linalg.apply(step.pvm.projector(label), linalg.apply(step.gate, v))
    return v


def all_amplitudes(p: Pipeline, psi: ComplexVector) -> np.ndarray:
    """
    Amplitudes of every path, shape ``(n_paths, dim)``, in path order.

    Walks the prefix tree over steps so that each partial product
    ``P_i(a_i) U_i ... P_1(a_1) U_1 psi`` is computed once.
    """
    states = np.asarray(psi, dtype=np.complex128)[None, :]
    for step in p.steps:
        evolved = states @ step.gate.T
        projs = np.stack(step.pvm.projectors)  # (m, d, d)
        # row k*m + a holds P(a) U state_k, keeping lexicographic order
        states = np.einsum("aef,kf->kae", projs, evolved).reshape(-1, p.dim)
    return states


def decoherence_pair(p: Pipeline, w1: Path, w2: Path) -> complex:
    total = 0j
    for weight, v in pure_components(p):
        a = path_amplitude(p, v, w1)
        b = path_amplitude(p, v, w2)
        total += weight * complex(np.vdot(a, b))
    return total


def decoherence_pair_trace(p: Pipeline, w1: Path, w2: Path) -> complex:
    """
    Literal trace ``tr[W L_{w1}^* L_{w2}]`` with both chains built as operator products.

    ``L_w = P_n(a_n) U_n ... P_1(a_1) U_1``. Cost is O(n d^3) per pair.
    """
    left = np.eye(p.dim, dtype=np.complex128)
    right = np.eye(p.dim, dtype=np.complex128)
    # left = U_1^* P_1(a_1) ... U_n^* P_n(a_n), right = P_n(b_n) U_n ... P_1(b_1) U_1
    for step, a, b in zip(p.steps, w1, w2):
        left = linalg.matmul(left, linalg.matmul(linalg.adjoint(step.gate), step.pvm.projector(a)))
        right = linalg.matmul(linalg.matmul(step.pvm.projector(b), step.gate), right)
    return linalg.trace(linalg.matmul(p.density, linalg.matmul(left, right)))


@dataclass(frozen=True, eq=False)
class DecoherenceMatrix:
    """``entries[j, k] = D(paths[j], paths[k])``."""

    paths: tuple[Path, ...]
    entries: ComplexMatrix

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.entries))

    def __getitem__(self, pair: tuple[Path, Path]) -> complex:
        j = self.paths.index(tuple(pair[0]))
        k = self.paths.index(tuple(pair[1]))
        return complex(self.entries[j, k])


def decoherence_matrix(p: Pipeline, cap: int = DEFAULT_MATRIX_CAP) -> DecoherenceMatrix:
    if p.n_paths > cap:
        raise ResourceError(
            f"decoherence matrix needs {p.n_paths}^2 entries; the cap is {cap} paths. "
            "Query individual path pairs instead."
        )
    paths = tuple(enumerate_paths(p))
    d = np.zeros((len(paths), len(paths)), dtype=np.complex128)
    for weight, v in pure_components(p):
        amps = all_amplitudes(p, v)
        d += weight * (np.conj(amps) @ amps.T)
    d.setflags(write=False)
    return DecoherenceMatrix(paths, d)


def decoherence_event(
    p: Pipeline, m: DecoherenceMatrix, a: Iterable[Path], b: Iterable[Path]
) -> complex:
    """Bilinear extension ``D(A, B) = sum of D(w, w') over w in A, w' in B``."""
    ma = event_mask(p, a)
    mb = event_mask(p, b)
    return complex(m.entries[np.ix_(ma, mb)].sum())


def final_outcome_orthogonality_residual(p: Pipeline, m: DecoherenceMatrix) -> float:
    """Max ``|D(w, w')|`` over pairs whose last labels differ."""
    last = np.array([w[-1] for w in m.paths])
    differ = last[:, None] != last[None, :]
    return linalg.max_abs(m.entries[differ])

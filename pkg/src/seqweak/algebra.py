"""Dense complex linear algebra for small dimensions (d <= ~16).

Vectors and operators are plain numpy arrays of dtype complex; the helpers
here add the structure checks and the degeneracy-merged Hermitian
eigendecomposition that branch enumeration relies on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, NotHermitian

DEFAULT_TOL = 1e-10


def as_operator(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def as_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise DimMismatch(f"expected a vector, got shape {v.shape}")
    return v


def is_unitary(m, tol: float = DEFAULT_TOL) -> bool:
    m = as_operator(m)
    dev = m.conj().T @ m - np.eye(m.shape[0])
    return bool(np.max(np.abs(dev)) <= tol)


def is_hermitian(m, tol: float = DEFAULT_TOL) -> bool:
    m = as_operator(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_projector(m, tol: float = DEFAULT_TOL) -> bool:
    m = as_operator(m)
    return is_hermitian(m, tol) and bool(np.max(np.abs(m @ m - m)) <= tol)


def apply(m, v) -> np.ndarray:
    m, v = as_operator(m), as_vector(v)
    if m.shape[1] != v.shape[0]:
        raise DimMismatch(f"operator dim {m.shape[1]} vs vector dim {v.shape[0]}")
    return m @ v


def inner(u, v) -> complex:
    """<u|v>, conjugate-linear in the first argument."""
    u, v = as_vector(u), as_vector(v)
    if u.shape != v.shape:
        raise DimMismatch(f"vector dims {u.shape[0]} vs {v.shape[0]}")
    return complex(np.vdot(u, v))


def compose(m, n) -> np.ndarray:
    m, n = as_operator(m), as_operator(n)
    if m.shape[1] != n.shape[0]:
        raise DimMismatch(f"operator dims {m.shape} vs {n.shape}")
    return m @ n


@dataclass(frozen=True)
class EigenSystem:
    """Spectral decomposition with degenerate eigenvalues merged.

    Projectors are Hermitian, idempotent, mutually orthogonal and sum to
    the identity; eigenvalues are strictly increasing.
    """

    eigenvalues: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]

    def reconstruct(self) -> np.ndarray:
        return sum(a * p for a, p in zip(self.eigenvalues, self.projectors))


def eig_hermitian(a, degeneracy_tol: float | None = None) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix with degeneracy merging.

    Eigenvalues closer than ``degeneracy_tol`` (default
    ``1e-8 * (spectral range + 1)``) are merged into a single branch whose
    projector spans the combined eigenspace.
    """
    a = as_operator(a)
    if not is_hermitian(a, 1e-10):
        raise NotHermitian(f"max deviation {np.max(np.abs(a - a.conj().T)):.3e}")
    vals, vecs = np.linalg.eigh((a + a.conj().T) / 2)
    if degeneracy_tol is None:
        spread = float(vals[-1] - vals[0]) if len(vals) else 0.0
        degeneracy_tol = 1e-8 * (spread + 1.0)

    eigenvalues: list[float] = []
    projectors: list[np.ndarray] = []
    i = 0
    while i < len(vals):
        j = i + 1
        while j < len(vals) and vals[j] - vals[j - 1] <= degeneracy_tol:
            j += 1
        block = vecs[:, i:j]
        projectors.append(block @ block.conj().T)
        eigenvalues.append(float(np.mean(vals[i:j])))
        i = j
    return EigenSystem(tuple(eigenvalues), tuple(projectors))

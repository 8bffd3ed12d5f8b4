"""Dense symmetric/Hermitian eigen-extremes and diagonal congruences.

Smallest eigenvalues are computed with cyclic Jacobi rotations; the complex
Hermitian case goes through the standard 2n x 2n real embedding
[[Re, -Im], [Im, Re]], which has the same spectrum with doubled multiplicity.
Order is capped at 64, which is ample for rank-level matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_ORDER = 64
_SYM_TOL = 1e-12
_MAX_SWEEPS = 60


class JacobiConvergenceError(ArithmeticError):
    """Off-diagonal mass failed to vanish within the sweep budget."""


@dataclass(frozen=True)
class SymMatrix:
    """Real symmetric matrix, symmetrized and validated on construction."""

    entries: np.ndarray

    def __init__(self, entries):
        m = np.asarray(entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        scale = 1.0 + np.max(np.abs(m)) if m.size else 1.0
        asym = np.max(np.abs(m - m.T)) if m.size else 0.0
        if asym > _SYM_TOL * scale:
            raise ValueError(f"asymmetry {asym:.3e} exceeds tolerance")
        object.__setattr__(self, "entries", 0.5 * (m + m.T))

    @property
    def order(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class HermMatrix:
    """Complex Hermitian matrix, hermitized and validated on construction."""

    entries: np.ndarray

    def __init__(self, entries):
        m = np.asarray(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        scale = 1.0 + np.max(np.abs(m)) if m.size else 1.0
        asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if asym > _SYM_TOL * scale:
            raise ValueError(f"deviation from Hermitian {asym:.3e} exceeds tolerance")
        object.__setattr__(self, "entries", 0.5 * (m + m.conj().T))

    @property
    def order(self) -> int:
        return self.entries.shape[0]


def _jacobi_eigenvalues(A: np.ndarray) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi sweeps."""
    A = A.copy()
    n = A.shape[0]
    if n == 1:
        return A[0:1, 0].copy()
    norm = math.sqrt(float(np.sum(A * A))) + 1.0
    for _ in range(_MAX_SWEEPS):
        off_entries = A - np.diag(np.diag(A))
        off = math.sqrt(float(np.sum(off_entries * off_entries)))
        if off <= 1e-13 * norm:
            return np.sort(np.diag(A))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                A[p, q] = 0.0
                A[q, p] = 0.0
    raise JacobiConvergenceError(
        f"no convergence after {_MAX_SWEEPS} sweeps (order {n})"
    )


def eigenvalues(M) -> np.ndarray:
    """Sorted eigenvalues of a real symmetric or complex Hermitian matrix."""
    if isinstance(M, SymMatrix):
        A = M.entries
    elif isinstance(M, HermMatrix):
        A = M.entries
    else:
        arr = np.asarray(M)
        M = HermMatrix(arr) if np.iscomplexobj(arr) else SymMatrix(arr)
        A = M.entries
    n = A.shape[0]
    if n > MAX_ORDER:
        raise ValueError(f"order {n} exceeds cap {MAX_ORDER}")
    if np.iscomplexobj(A):
        re, im = A.real, A.imag
        embedded = np.block([[re, -im], [im, re]])
        vals = _jacobi_eigenvalues(embedded)
        return vals[::2]  # each eigenvalue appears twice
    return _jacobi_eigenvalues(A)


def min_eig(M) -> float:
    """Smallest eigenvalue; accepts arrays or the validated wrappers."""
    return float(eigenvalues(M)[0])


def congruence(c: np.ndarray, M) -> HermMatrix:
    """Congruence C M C* with C = diag(c); entrywise c_j M_jl conj(c_l)."""
    c = np.asarray(c, dtype=complex).reshape(-1)
    A = M.entries if isinstance(M, (SymMatrix, HermMatrix)) else np.asarray(M)
    if A.shape != (c.size, c.size):
        raise ValueError(f"dimension mismatch: diag {c.size} vs matrix {A.shape}")
    return HermMatrix(np.outer(c, np.conj(c)) * A)

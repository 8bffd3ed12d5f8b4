"""Block assembly of the invariant Hermitian form at a slice point.

For a smooth invariant function with slice restriction f~, the form at a
chamber point a is block diagonal: an r x r block over the chamber directions
with entries d2f~/da_j da_l + delta_jl 2 coth(2 a_j) df~/da_j, one scalar
coefficient shared by the two medium-root blocks of each index pair j < l, and
(non-tube only) one scalar per short root.  Each formula degenerates on a
coordinate hyperplane or on the walls a_j = a_l; the analytic limit values are
used inside a small threshold and the event is recorded as a flag.

The complex side: for a torus-invariant function of the moduli, the complex
Hessian in z-coordinates is assembled from the modulus-chart jet, and the two
computations are linked by a diagonal congruence with entries cosh^2(a_j)
e^{i theta_j}; ``congruence_check`` evaluates both sides independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .funcspace import Chart, InvariantFunction, Jet2, to_slice
from .model import SpaceKind, SymmetricSpaceModel, weyl_reduce

DEGENERACY_EPS = 1e-6


@dataclass
class LeviBlockForm:
    """Assembled block data of the form at a chamber-reduced point.

    ``medium`` maps 0-based index pairs (j, l) with j < l to the shared
    coefficient of both medium-root blocks; ``short`` maps 0-based indices to
    the short-root coefficient (empty for tube models).  ``flags`` records
    which entries were produced by a hyperplane-limit formula.
    """

    point: np.ndarray
    a_block: np.ndarray
    medium: dict
    short: dict
    flags: list

    def min_medium(self) -> float:
        return min(self.medium.values()) if self.medium else math.inf

    def min_short(self) -> float:
        return min(self.short.values()) if self.short else math.inf

    def to_json(self) -> dict:
        return {
            "point": [float(x) for x in self.point],
            "a_block": [float(x) for x in self.a_block.reshape(-1)],
            "medium_coeff": [
                {"j": j + 1, "l": l + 1, "value": float(v)}
                for (j, l), v in sorted(self.medium.items())
            ],
            "short_coeff": [
                {"j": j + 1, "value": float(v)} for j, v in sorted(self.short.items())
            ],
            "flags": sorted(self.flags),
        }


# -- generic and limit formulas, exposed separately so the limit-continuity
# suite can evaluate the generic branch arbitrarily close to a hyperplane.


def a_diag_generic(jet: Jet2, H: np.ndarray, j: int) -> float:
    return jet.hess[j, j] + 2.0 / math.tanh(2.0 * H[j]) * jet.grad[j]


def a_diag_limit(jet: Jet2, j: int) -> float:
    return 2.0 * jet.hess[j, j]


def medium_generic(jet: Jet2, H: np.ndarray, j: int, l: int) -> float:
    num = math.sinh(2.0 * H[j]) * jet.grad[j] - math.sinh(2.0 * H[l]) * jet.grad[l]
    den = math.sinh(H[j] + H[l]) * math.sinh(H[j] - H[l])
    return num / den


def medium_limit_equal(jet: Jet2, H: np.ndarray, j: int, l: int) -> float:
    """Closed form of the limit on the wall a_j = a_l = a > 0 (no numerical limiting)."""
    a = 0.5 * (abs(H[j]) + abs(H[l]))
    return 2.0 / math.tanh(2.0 * a) * jet.grad[j] + 0.5 * (
        jet.hess[j, j] - 2.0 * jet.hess[j, l] + jet.hess[l, l]
    )


def medium_limit_origin(jet: Jet2, j: int) -> float:
    return 2.0 * jet.hess[j, j]


def short_generic(jet: Jet2, H: np.ndarray, j: int, factor: float = 2.0) -> float:
    return factor / math.tanh(H[j]) * jet.grad[j]


def short_limit(jet: Jet2, j: int, factor: float = 2.0) -> float:
    return factor * jet.hess[j, j]


# -- public block operations ------------------------------------------------


def a_block(f: InvariantFunction, H: Sequence[float],
            flags: Optional[list] = None) -> np.ndarray:
    """The r x r chamber block at H, with the diagonal limit at a_j = 0.

    Well defined entrywise at any H; degenerate-limit bookkeeping assumes a
    chamber-reduced point (use ``assemble`` for arbitrary input).
    """
    H = np.asarray(H, dtype=float)
    jet = to_slice(f, H)
    return a_block_from_jet(jet, H, flags)


def a_block_from_jet(jet: Jet2, H: np.ndarray, flags: Optional[list] = None) -> np.ndarray:
    M = jet.hess.copy()
    for j in range(H.shape[0]):
        if abs(H[j]) > DEGENERACY_EPS:
            M[j, j] = a_diag_generic(jet, H, j)
        else:
            M[j, j] = a_diag_limit(jet, j)
            if flags is not None:
                flags.append(f"limit:a{j + 1}")
    return M


def medium_coeff(f: InvariantFunction, H: Sequence[float], j: int, l: int,
                 flags: Optional[list] = None) -> float:
    """Shared coefficient of the medium-root blocks for the pair j < l.

    Expects a chamber-reduced H.  On the wall a_j = a_l the closed limit form
    is used (avoiding the cancellation of the generic quotient); at
    a_j = a_l = 0 the value is twice the diagonal Hessian entry.
    """
    H = np.asarray(H, dtype=float)
    if j == l:
        raise ValueError(f"medium coefficient needs distinct indices, got j = l = {j}")
    if j > l:
        j, l = l, j
    jet = to_slice(f, H)
    return medium_coeff_from_jet(jet, H, j, l, flags)


def medium_coeff_from_jet(jet: Jet2, H: np.ndarray, j: int, l: int,
                          flags: Optional[list] = None) -> float:
    aj, al = abs(H[j]), abs(H[l])
    if aj <= DEGENERACY_EPS and al <= DEGENERACY_EPS:
        if flags is not None:
            flags.append(f"limit:m{j + 1},{l + 1}:origin")
        return medium_limit_origin(jet, j)
    if abs(aj - al) <= DEGENERACY_EPS:
        if flags is not None:
            flags.append(f"limit:m{j + 1},{l + 1}:equal")
        return medium_limit_equal(jet, H, j, l)
    return medium_generic(jet, H, j, l)


def short_coeff(f: InvariantFunction, H: Sequence[float], j: int,
                model: Optional[SymmetricSpaceModel] = None,
                factor: float = 2.0,
                flags: Optional[list] = None) -> float:
    """Short-root coefficient at index j; only meaningful for non-tube models."""
    if model is not None and model.kind is SpaceKind.TUBE:
        raise ValueError("short-root coefficient requested on a tube-type model")
    H = np.asarray(H, dtype=float)
    jet = to_slice(f, H)
    return short_coeff_from_jet(jet, H, j, factor, flags)


def short_coeff_from_jet(jet: Jet2, H: np.ndarray, j: int, factor: float = 2.0,
                         flags: Optional[list] = None) -> float:
    if abs(H[j]) > DEGENERACY_EPS:
        return short_generic(jet, H, j, factor)
    if flags is not None:
        flags.append(f"limit:s{j + 1}")
    return short_limit(jet, j, factor)


def assemble(model: SymmetricSpaceModel, f: InvariantFunction, H: Sequence[float],
             short_coeff_factor: float = 2.0) -> LeviBlockForm:
    """Chamber-reduce H and compute every block of the form there."""
    if f.rank != model.rank:
        raise ValueError(f"function rank {f.rank} != model rank {model.rank}")
    dominant, _ = weyl_reduce(H)
    jet = to_slice(f, dominant)
    flags: list = []
    M = a_block_from_jet(jet, dominant, flags)
    medium = {}
    for j in range(model.rank):
        for l in range(j + 1, model.rank):
            medium[(j, l)] = medium_coeff_from_jet(jet, dominant, j, l, flags)
    short = {}
    if model.kind is SpaceKind.NON_TUBE:
        for j in range(model.rank):
            short[j] = short_coeff_from_jet(jet, dominant, j, short_coeff_factor, flags)
    return LeviBlockForm(point=dominant, a_block=M, medium=medium, short=short,
                         flags=flags)


# -- complex side -------------------------------------------------------------


def reinhardt_levi(f: InvariantFunction, z: Sequence[complex]) -> np.ndarray:
    """Complex Hessian (d^2 f / dzbar_j dz_l) of a modulus-chart function at z.

    One quarter of the polar-coordinate expression
    (1/rho_j) df/drho_j delta_jl + e^{i(theta_j - theta_l)} d^2 f/drho_j drho_l;
    off-diagonal entries vanish when z_j z_l = 0 and the diagonal extends
    through rho_j = 0 with value (1/2) d^2 f/drho_j^2.
    """
    if f.chart is not Chart.MODULUS:
        raise ValueError("complex Hessian requires a modulus-chart function")
    z = np.asarray(z, dtype=complex)
    if z.shape != (f.rank,):
        raise ValueError(f"point has shape {z.shape}, expected ({f.rank},)")
    rho = np.abs(z)
    theta = np.angle(z)
    jet = f(rho)
    r = f.rank
    L4 = np.zeros((r, r), dtype=complex)
    for j in range(r):
        if rho[j] > 0.0:
            diag = jet.grad[j] / rho[j] + jet.hess[j, j]
        else:
            diag = 2.0 * jet.hess[j, j]
        if not math.isfinite(diag):
            raise ArithmeticError(
                f"complex Hessian diagonal not finite at rho_{j + 1} = {rho[j]}"
            )
        L4[j, j] = diag
        for l in range(j + 1, r):
            if rho[j] > 0.0 and rho[l] > 0.0:
                val = np.exp(1j * (theta[j] - theta[l])) * jet.hess[j, l]
            else:
                val = 0.0
            L4[j, l] = val
            L4[l, j] = np.conj(val)
    return 0.25 * L4


@dataclass
class CongruenceReport:
    """Both sides of the diagonal-congruence identity and their worst mismatch."""

    point: np.ndarray
    discrepancy: float
    complex_side: np.ndarray
    slice_side: np.ndarray

    def to_json(self) -> dict:
        return {
            "point": [[float(z.real), float(z.imag)] for z in self.point],
            "discrepancy": float(self.discrepancy),
        }


def congruence_check(f: InvariantFunction, z: Sequence[complex]) -> CongruenceReport:
    """Compare 4 d^2f/dzbar dz against C (a-block) C* with c_jj = cosh^2(a_j) e^{i theta_j}.

    Both sides are computed independently (the left from the modulus-chart jet
    in z-coordinates, the right from the slice-chart block); the discrepancy is
    data, not an error.
    """
    z = np.asarray(z, dtype=complex)
    rho = np.abs(z)
    if np.any(rho >= 1.0):
        raise ValueError("points must lie in the open unit polydisk")
    H = np.arctanh(rho)
    jet = to_slice(f, H)
    M = a_block_from_jet(jet, H)
    c = np.cosh(H) ** 2 * np.exp(1j * np.angle(z))
    right = np.outer(c, np.conj(c)) * M
    left = 4.0 * reinhardt_levi(f, z)
    discrepancy = float(np.max(np.abs(left - right)))
    return CongruenceReport(point=z, discrepancy=discrepancy,
                            complex_side=left, slice_side=right)

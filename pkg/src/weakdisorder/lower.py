"""Decoupled single-cell problem and the lower bound for the spectral edge (order m = 1).

Cutting the line at every cell face and adding the boundary term
``b1 |u|^2`` at each endpoint gives a cell operator whose form domain contains
the periodic one, with ``psi0`` still an eigenfunction.  Its ground energy
under ``L(eps s)`` bounds the bottom of the almost-sure spectrum from below.

Conventions on the closed cell ``[0, L]`` with outward normal ``nu`` (``-1`` at
0, ``+1`` at ``L``) and ``D = d/dx + i theta0``::

    B0 u = u(x_b),    B1 u = -nu (A11 D u + A10 u)(x_b)

With these signs the cell form equals ``(Op u, v) + sum_b (B1 u)(x_b) conj(v(x_b))``
and ``b1 = B1 psi0 / B0 psi0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .disorder import DisorderSpec
from .errors import A1Violated, AssumptionFailed, EpsOutOfRange, UnsupportedOrder, ValidationError
from .expansion import EdgeExpansion, corrector, lambda2, pair
from .grid import (
    Discretization,
    FormTerm,
    GridFunction,
    QuadraticForm,
    build_hat_grid,
    trig_interpolate,
)
from .linalg import golden_section, lowest_eigenpairs, refined_ground_energy, ritz_refine
from .operators import PerturbationFamily, PeriodicOperatorSpec, bloch_form, family_form, perturbation_form
from .bands import fix_phase

_ZERO_TRACE = 1e-10
_IMAG_TOL = 1e-8
_ANTISYM_TOL = 1e-8


# ---------------------------------------------------------------------------
# boundary operators


def periodic_trace(psi: GridFunction, x, derivative: int = 0) -> np.ndarray:
    """Values (or first derivative) of the periodic interpolant of ``psi`` at ``x``."""
    disc = psi.disc
    L = disc.cell_length
    if not disc.periodic:
        raise ValidationError("periodic_trace needs a periodic grid function")
    if disc.scheme == "fourier":
        return trig_interpolate(psi.values, L, x, derivative)
    xs = np.append(disc.nodes, L)
    ys = np.append(psi.values, psi.values[0])
    spline = CubicSpline(xs, ys, bc_type="periodic")
    return spline(np.mod(np.asarray(x, dtype=float), L), derivative)


@dataclass(frozen=True)
class BoundaryOperatorSet:
    """``B0`` and ``B1`` at the two endpoints of the cell for an order-1 operator."""

    op: PeriodicOperatorSpec
    theta0: float

    def __post_init__(self):
        if self.op.order != 1:
            raise UnsupportedOrder("boundary operators are implemented for order m = 1 only")

    @property
    def endpoints(self) -> tuple[tuple[float, int], tuple[float, int]]:
        return (0.0, -1), (self.op.cell_length, 1)

    def B0(self, value: complex) -> complex:
        return value

    def B1(self, value: complex, derivative: complex, x_b: float, nu: int) -> complex:
        L = self.op.cell_length
        c = self.op.coefficients
        a11 = float(c[(1, 1)](np.array([x_b]), L)[0])
        a10 = float(c[(1, 0)](np.array([x_b]), L)[0]) if (1, 0) in c else 0.0
        return -nu * (a11 * (derivative + 1j * self.theta0 * value) + a10 * value)

    def traces(self, psi: GridFunction) -> list[tuple[complex, complex]]:
        """``(B0 psi, B1 psi)`` at the left and right endpoints."""
        out = []
        for x_b, nu in self.endpoints:
            val = complex(periodic_trace(psi, [x_b])[0])
            der = complex(periodic_trace(psi, [x_b], 1)[0])
            out.append((self.B0(val), self.B1(val, der, x_b, nu)))
        return out


@dataclass(frozen=True)
class BoundaryCoefficients:
    b1_left: float
    b1_right: float
    antisymmetry_defect: float
    zero_trace: tuple[bool, bool]


def compute_bj(psi0: GridFunction, bset: BoundaryOperatorSet) -> BoundaryCoefficients:
    """``b1 = B1 psi0 / B0 psi0`` at each endpoint, zero where the trace vanishes."""
    b = []
    zero = []
    for b0, b1 in bset.traces(psi0):
        if abs(b0) <= _ZERO_TRACE:
            b.append(0.0)
            zero.append(True)
            continue
        ratio = b1 / b0
        if abs(ratio.imag) > _IMAG_TOL:
            raise A1Violated(f"boundary ratio B1 psi0 / B0 psi0 = {ratio:.6g} is not real")
        b.append(float(ratio.real))
        zero.append(False)
    defect = abs(b[0] + b[1])
    if defect > _ANTISYM_TOL * max(1.0, abs(b[0])):
        raise A1Violated(f"b1 at the two endpoints are not opposite (defect {defect:.3g})")
    return BoundaryCoefficients(b[0], b[1], defect, tuple(zero))


# ---------------------------------------------------------------------------
# the decoupled cell operator


def hat_form(op: PeriodicOperatorSpec, disc: Discretization, theta0: float, b1: tuple[float, float]) -> QuadraticForm:
    """Cell form with the boundary terms ``b1_left |u(0)|^2 + b1_right |u(L)|^2``."""
    if op.order != 1:
        raise UnsupportedOrder("the decoupled cell problem is implemented for order m = 1 only")
    if disc.periodic:
        raise ValidationError("the decoupled cell problem needs a non-periodic cell grid")
    base = bloch_form(op, disc, theta0)
    c = np.zeros(disc.size)
    c[0], c[-1] = b1
    return base + QuadraticForm((FormTerm(None, c, None),), disc.weights)


def assemble_hat_operator(op: PeriodicOperatorSpec, disc: Discretization, theta0: float, b1: tuple[float, float]) -> np.ndarray:
    """Hermitian matrix (in weighted coordinates) of the decoupled cell operator."""
    M = hat_form(op, disc, theta0, b1).matrix()
    if theta0 == 0 and np.abs(M.imag).max() <= 1e-12 * max(1.0, np.abs(M).max()):
        return M.real.copy()
    return M


@dataclass(frozen=True)
class A2Report:
    holds: bool
    hat_Lambda0: float
    gap: float
    tol: float


def verify_A2(hat, Lambda0: float, tol: float) -> A2Report:
    """Is the bottom of the cell operator a simple eigenvalue equal to ``Lambda0``?

    ``hat`` is a matrix or a :class:`QuadraticForm` (the latter gives Ritz-refined values).
    """
    if isinstance(hat, QuadraticForm):
        vals, vecs = lowest_eigenpairs(hat.matrix(), 3)
        vals = ritz_refine(hat, vecs)[0]
    else:
        vals = lowest_eigenpairs(hat, 2)[0]
    gap = float(vals[1] - vals[0])
    holds = abs(vals[0] - Lambda0) <= tol and gap > 10 * tol
    return A2Report(bool(holds), float(vals[0]), gap, tol)


@dataclass(frozen=True, eq=False)
class HatCellProblem:
    op: PeriodicOperatorSpec
    disc: Discretization
    theta0: float
    b1_left: float
    b1_right: float
    form: QuadraticForm
    Lambda0: float  # periodic band minimum
    hat_Lambda0: float
    hat_gap: float
    hat_simple: bool
    psi0: GridFunction  # discrete ground state of the cell operator
    eigen_residual: float  # |(hat - Lambda0) psi0_resampled| / scale
    hat_Lambda1: float
    hat_psi1: GridFunction
    hat_Lambda2: float
    a2: A2Report

    @property
    def matrix(self) -> np.ndarray:
        return self.form.matrix()


def solve_hat_psi1_and_lambda2(hat_matrix: np.ndarray, hat_Lambda0: float, psi0: GridFunction, L1, L2, Lambda1: float):
    """Corrector of the cell operator (orthogonal to ``psi0``) and the matching ``Lambda2``."""
    psi1, _ = corrector(hat_matrix, hat_Lambda0, [psi0], psi0, L1, Lambda1)
    return psi1, lambda2(psi0, psi1, L1, L2)


def _resample(psi0: GridFunction, disc: Discretization) -> GridFunction:
    return GridFunction(periodic_trace(psi0, disc.nodes), disc)


def build_hat_problem(
    op: PeriodicOperatorSpec,
    fam: PerturbationFamily,
    exp: EdgeExpansion,
    N: int = 128,
    order: int = 2,
    a2_tol: Optional[float] = None,
) -> HatCellProblem:
    """Boundary coefficients, cell operator, A2 check, corrector and ``hat Lambda2``.

    ``a2_tol`` defaults to ten times the change of the cell ground energy
    between ``N / 2`` and ``N`` (a discretization error estimate), floored at
    ``1e-8 * max(1, |Lambda0|)``.
    """
    if op.order != 1:
        raise UnsupportedOrder("the lower bound is implemented for order m = 1 only")
    theta0 = exp.triple.theta0
    bset = BoundaryOperatorSet(op, theta0)
    bc = compute_bj(exp.psi0, bset)
    b1 = (bc.b1_left, bc.b1_right)
    disc = build_hat_grid(op.geometry, N, order)
    form = hat_form(op, disc, theta0, b1)
    H = form.matrix()

    if a2_tol is None:
        coarse = build_hat_grid(op.geometry, N // 2, order)
        e_coarse = refined_ground_energy(hat_form(op, coarse, theta0, b1))[0]
        e_fine = refined_ground_energy(form, H)[0]
        a2_tol = max(10 * abs(e_fine - e_coarse), 1e-8 * max(1.0, abs(exp.Lambda0)))
    a2 = verify_A2(form, exp.Lambda0, a2_tol)

    _, vecs = lowest_eigenpairs(H, 3)
    vals, vecs = ritz_refine(form, vecs)
    psi0 = fix_phase(GridFunction.from_coords(vecs[:, 0], disc))
    hat_L0 = float(vals[0])

    ref = _resample(exp.psi0, disc)
    ref = ref * (1.0 / math.sqrt(ref.norm_sq()))
    res = H @ ref.coords() - exp.Lambda0 * ref.coords()
    scale = max(1.0, float(np.abs(H).max()))
    eigen_residual = float(np.linalg.norm(res)) / scale

    L1 = perturbation_form(fam.L1, disc, theta0) if fam.L1 is not None else QuadraticForm.zero(disc.weights)
    L2 = perturbation_form(fam.L2, disc, theta0) if fam.L2 is not None else None
    hat_L1 = float(pair(L1, psi0, psi0).real)
    psi1, hat_L2 = solve_hat_psi1_and_lambda2(H, hat_L0, psi0, L1, L2, hat_L1)
    return HatCellProblem(
        op, disc, theta0, b1[0], b1[1], form, exp.Lambda0, hat_L0, float(vals[1] - vals[0]),
        a2.holds, psi0, eigen_residual, hat_L1, psi1, hat_L2, a2,
    )


# ---------------------------------------------------------------------------
# lambda_eps(s) and the bound


def lambda_eps_of_s(hat: HatCellProblem, fam: PerturbationFamily, eps: float, s: float) -> float:
    """Ground energy of the cell operator perturbed by ``L(eps s)``."""
    t = eps * s
    if abs(t) > fam.t_max:
        raise EpsOutOfRange(f"|eps * s| = {abs(t):.3g} exceeds t_max = {fam.t_max}")
    if t == 0:
        return hat.hat_Lambda0
    form = hat.form + family_form(fam, hat.disc, hat.theta0, t)
    return refined_ground_energy(form, k=3)[0]


@dataclass(frozen=True)
class LowerBoundRow:
    eps: float
    s_min_at: float
    bound_value: float
    expansion_value: float

    @property
    def deficit(self) -> float:
        return self.expansion_value - self.bound_value

    @property
    def C_eps(self) -> float:
        return max(0.0, self.deficit / self.eps**3) if self.eps > 0 else 0.0


def lower_bound(
    hat: HatCellProblem,
    fam: PerturbationFamily,
    disorder: DisorderSpec,
    s_star: float,
    eps: float,
    s_grid_size: int = 33,
    refine: bool = True,
) -> LowerBoundRow:
    """``min_s lambda_eps(s)`` over ``[s_minus, s_plus]`` and the cell expansion at ``s_star``.

    The expansion uses the discrete cell values ``hat Lambda0 + t hat Lambda1 +
    t^2 hat Lambda2`` so that discretization bias does not enter the deficit.
    """
    if not hat.a2.holds:
        raise AssumptionFailed(
            f"A2 fails: cell ground energy {hat.a2.hat_Lambda0:.6g} vs Lambda0 {hat.Lambda0:.6g}, gap {hat.a2.gap:.3g}"
        )
    if s_grid_size < 33:
        raise ValidationError(f"s_grid_size must be at least 33, got {s_grid_size}")
    if eps < 0:
        raise EpsOutOfRange("eps must be non-negative")
    t_star = eps * s_star
    expansion = hat.hat_Lambda0 + t_star * hat.hat_Lambda1 + t_star**2 * hat.hat_Lambda2
    if eps == 0:
        return LowerBoundRow(0.0, s_star, hat.hat_Lambda0, hat.hat_Lambda0)
    grid = np.linspace(disorder.s_minus, disorder.s_plus, s_grid_size)
    vals = np.array([lambda_eps_of_s(hat, fam, eps, s) for s in grid])
    j = int(np.argmin(vals))
    best_s, best = float(grid[j]), float(vals[j])
    if refine:
        a = grid[max(j - 1, 0)]
        b = grid[min(j + 1, len(grid) - 1)]
        scale = max(1.0, abs(best))
        x, fx = golden_section(lambda s: lambda_eps_of_s(hat, fam, eps, s), a, b, 1e-8 * (b - a))
        if fx < best - 1e-15 * scale:
            best_s, best = float(x), float(fx)
    return LowerBoundRow(float(eps), best_s, best, float(expansion))


@dataclass(frozen=True)
class LowerBoundSweep:
    rows: tuple[LowerBoundRow, ...]

    @property
    def inferred_C(self) -> float:
        return max((r.C_eps for r in self.rows), default=0.0)

    def csv_rows(self):
        C = self.inferred_C
        for r in self.rows:
            yield {
                "eps": r.eps,
                "s_min_at": r.s_min_at,
                "lambda_min": r.bound_value,
                "expansion": r.expansion_value,
                "deficit": r.deficit,
                "inferred_C": C,
            }


def lower_bound_sweep(
    hat: HatCellProblem,
    fam: PerturbationFamily,
    disorder: DisorderSpec,
    s_star: float,
    eps_list: Sequence[float],
    s_grid_size: int = 33,
) -> LowerBoundSweep:
    rows = tuple(lower_bound(hat, fam, disorder, s_star, e, s_grid_size) for e in sorted(eps_list))
    return LowerBoundSweep(rows)

"""Low-order coefficients of the spectral edge under weak disorder.

For the family ``Op0 + L(eps*s)`` the bottom of the almost-sure spectrum is
expanded as ``Lambda0 + t Lambda1 + t^2 Lambda2 + t^3 Lambda3(t)/(1 + t^2 |psi1|^2)``
with ``t = eps * s_star``.  All inner products are taken in the modulated
picture ``exp(-i theta0 x) L exp(i theta0 x)``, so quantities live on one cell.

Operators passed to the coefficient routines may be either Hermitian matrices
acting on :meth:`GridFunction.coords` or :class:`QuadraticForm` objects; forms
are evaluated directly and avoid the round-off of the scaled matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .bands import BandData, analyze_bands, fix_phase
from .disorder import DisorderSpec
from .errors import (
    EpsOutOfRange,
    IllConditionedSolve,
    NonRealCoefficient,
    PreconditionNotMet,
    ValidationError,
)
from .grid import Discretization, GridFunction, QuadraticForm, inner_product
from .linalg import DeflatedSolution, deflated_solve
from .operators import (
    PerturbationFamily,
    PeriodicOperatorSpec,
    bloch_form,
    family_form,
    perturbation_form,
)

OperatorLike = Union[np.ndarray, QuadraticForm]

_TIE = 1e-12
_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class MinimizingTriple:
    theta0: float
    i0: int  # 0-based index into the rotated ground basis
    s_star: float
    Lambda1: float

    @property
    def first_order(self) -> float:
        return self.s_star * self.Lambda1


@dataclass(frozen=True, eq=False)
class EdgeExpansion:
    triple: MinimizingTriple
    Lambda0: float
    psi0: GridFunction
    psi1: GridFunction
    psi1_norm_sq: float
    Lambda2: float
    lambda3_coeffs: tuple[float, float, float, float]
    gap_at_theta0: float
    t_max: float
    ground_basis: tuple[GridFunction, ...] = ()
    d_values: tuple[float, ...] = ()
    psi1_residual: float = 0.0

    @property
    def s_star(self) -> float:
        return self.triple.s_star

    @property
    def Lambda1(self) -> float:
        return self.triple.Lambda1

    @property
    def multiplicity(self) -> int:
        return len(self.ground_basis) or 1

    def lambda3(self, t: float) -> float:
        return lambda3(t, self.lambda3_coeffs)

    def record(self) -> dict:
        return {
            "theta0": self.triple.theta0,
            "Lambda0": self.Lambda0,
            "n": self.multiplicity,
            "i0": self.triple.i0,
            "s_star": self.s_star,
            "Lambda1": self.Lambda1,
            "Lambda2": self.Lambda2,
            "Lambda3_poly_coeffs": list(self.lambda3_coeffs),
            "psi1_norm_sq": self.psi1_norm_sq,
            "gap_at_theta0": self.gap_at_theta0,
        }


# ---------------------------------------------------------------------------
# helpers


def pair(M: OperatorLike, u: GridFunction, v: GridFunction) -> complex:
    """``(M u, v)`` in the quadrature inner product."""
    if isinstance(M, QuadraticForm):
        return M.value(u.values, v.values)
    return complex(np.vdot(v.coords(), M @ u.coords()))


def _apply(M: OperatorLike, u: GridFunction) -> np.ndarray:
    """``M u`` in coordinates."""
    H = M.matrix() if isinstance(M, QuadraticForm) else M
    return H @ u.coords()


def _real(value: complex, name: str, scale: float = 1.0) -> float:
    if abs(value.imag) > _IMAG_TOL * max(1.0, scale, abs(value.real)):
        raise NonRealCoefficient(f"{name} has imaginary part {value.imag:.3g}")
    return float(value.real)


# ---------------------------------------------------------------------------
# eigenspace and triple


def diagonalize_in_eigenspace(psi0s: Sequence[GridFunction], L1: OperatorLike):
    """Rotate the ground eigenspace so that ``(L1 psi_i, psi_j)`` is diagonal.

    Returns ``(rotated_basis, d)`` with ``d`` ascending.  Each rotated vector
    has its largest-modulus entry real and positive.
    """
    psi0s = list(psi0s)
    if not psi0s:
        raise ValidationError("the ground eigenspace is empty")
    n = len(psi0s)
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            G[j, i] = pair(L1, psi0s[i], psi0s[j])
    if n == 1:
        return psi0s, np.array([_real(G[0, 0], "Lambda1")])
    G = 0.5 * (G + G.conj().T)
    d, U = np.linalg.eigh(G)
    disc = psi0s[0].disc
    B = np.stack([p.values for p in psi0s], axis=1) @ U
    rotated = [fix_phase(GridFunction(B[:, k], disc)) for k in range(n)]
    return rotated, d


def select_minimizing_triple(
    d: Sequence[float],
    disorder: DisorderSpec,
    tie_breaker: Optional[Callable[[int], float]] = None,
    theta0: float = 0.0,
) -> MinimizingTriple:
    """Minimise ``s * d_i`` over ``s`` in ``{s_minus, s_plus}`` and ``i``.

    Ties (within ``1e-12`` of the scale) are broken by the smaller
    ``s^2 Lambda2(i)`` where ``tie_breaker(i)`` returns ``Lambda2`` for
    candidate ``i``; then by the smaller index and finally by ``s_plus``.
    """
    d = [float(x) for x in d]
    if not d:
        raise ValidationError("no diagonal values given")
    cands = [(s * di, i, s) for i, di in enumerate(d) for s in (disorder.s_minus, disorder.s_plus)]
    best = min(c[0] for c in cands)
    scale = max(1.0, max(abs(c[0]) for c in cands))
    ties = [c for c in cands if c[0] <= best + _TIE * scale]
    if len(ties) > 1 and tie_breaker is not None:
        lam2 = {i: tie_breaker(i) for i in sorted({c[1] for c in ties})}
        keys = [c[2] ** 2 * lam2[c[1]] for c in ties]
        low = min(keys)
        kscale = max(1.0, max(abs(k) for k in keys))
        ties = [c for c, k in zip(ties, keys) if k <= low + _TIE * kscale]
    # smaller index first, then s_plus before s_minus
    _, i0, s = min(ties, key=lambda c: (c[1], -c[2]))
    return MinimizingTriple(float(theta0), int(i0), float(s), float(d[i0]))


# ---------------------------------------------------------------------------
# corrector and coefficients


def corrector(
    H: np.ndarray,
    Lambda0: float,
    psi0s: Sequence[GridFunction],
    psi0: GridFunction,
    L1: OperatorLike,
    Lambda1: float,
    gap: Optional[float] = None,
) -> tuple[GridFunction, DeflatedSolution]:
    """Solve ``(H - Lambda0) psi1 = -L1 psi0 + Lambda1 psi0`` with ``psi1`` orthogonal to ``psi0s``."""
    disc = psi0.disc
    if gap is not None and gap <= 1e-8 * max(1.0, abs(Lambda0)):
        raise IllConditionedSolve(f"gap at theta0 is {gap:.3g}; corrector equation is ill-posed")
    V = np.stack([p.coords() for p in psi0s], axis=1)
    rhs = -_apply(L1, psi0) + Lambda1 * psi0.coords()
    sol = deflated_solve(H, Lambda0, V, rhs)
    scale = max(1.0, float(np.abs(H).max()))
    if sol.residual > 1e-8 * scale:
        raise IllConditionedSolve(f"corrector residual {sol.residual:.3g} exceeds 1e-8 * {scale:.3g}")
    return GridFunction.from_coords(sol.x, disc), sol


def solve_psi1(
    op: PeriodicOperatorSpec,
    disc: Discretization,
    theta0: float,
    Lambda0: float,
    psi0s: Sequence[GridFunction],
    psi0: GridFunction,
    L1: OperatorLike,
    Lambda1: float,
    gap: Optional[float] = None,
) -> GridFunction:
    H = bloch_form(op, disc, theta0).matrix()
    return corrector(H, Lambda0, psi0s, psi0, L1, Lambda1, gap)[0]


def lambda2(psi0: GridFunction, psi1: GridFunction, L1: OperatorLike, L2: Optional[OperatorLike] = None) -> float:
    val = pair(L1, psi1, psi0)
    if L2 is not None:
        val += pair(L2, psi0, psi0)
    return _real(val, "Lambda2")


def lambda3_coefficients(
    psi0: GridFunction,
    psi1: GridFunction,
    Lambda1: float,
    Lambda2: float,
    L1: OperatorLike,
    L2: Optional[OperatorLike] = None,
    L3a: Optional[OperatorLike] = None,
    L3b: Optional[OperatorLike] = None,
) -> tuple[float, float, float, float]:
    """Coefficients ``(c0, c1, c2, c3)`` of the cubic ``Lambda3(t)``.

    ``Lambda3(t) = -(Lambda1 + t Lambda2)|psi1|^2 + 2 Re(L2 psi0, psi1)
    + ((L1 + t L2) psi1, psi1) + (L3(t) phi, phi)`` with ``phi = psi0 + t psi1``
    and ``L3(t) = L3a + t L3b``.
    """
    n1 = psi1.norm_sq()
    zero = 0j

    def p(M, u, v):
        return zero if M is None else pair(M, u, v)

    c0 = -Lambda1 * n1 + 2 * p(L2, psi0, psi1).real + p(L1, psi1, psi1) + p(L3a, psi0, psi0)
    c1 = -Lambda2 * n1 + p(L2, psi1, psi1) + 2 * p(L3a, psi0, psi1).real + p(L3b, psi0, psi0)
    c2 = p(L3a, psi1, psi1) + 2 * p(L3b, psi0, psi1).real
    c3 = p(L3b, psi1, psi1)
    return tuple(_real(complex(c), f"Lambda3 coefficient {k}") for k, c in enumerate((c0, c1, c2, c3)))


def lambda3(t: float, coeffs: Sequence[float]) -> float:
    c0, c1, c2, c3 = coeffs
    return c0 + t * (c1 + t * (c2 + t * c3))


def _check_eps(exp: EdgeExpansion, eps: float, s: float) -> float:
    if eps < 0:
        raise EpsOutOfRange(f"eps must be non-negative, got {eps}")
    t = eps * s
    if abs(t) > exp.t_max:
        raise EpsOutOfRange(f"|eps * s| = {abs(t):.3g} exceeds t_max = {exp.t_max}")
    return t


def upper_bound(exp: EdgeExpansion, eps: float) -> float:
    """Upper bound for the bottom of the almost-sure spectrum at coupling ``eps``."""
    t = _check_eps(exp, eps, exp.s_star)
    if t == 0:
        return exp.Lambda0
    return (
        exp.Lambda0
        + t * exp.Lambda1
        + t * t * exp.Lambda2
        + t**3 * exp.lambda3(t) / (1.0 + t * t * exp.psi1_norm_sq)
    )


def rayleigh_cross_check(
    exp: EdgeExpansion,
    op: PeriodicOperatorSpec,
    disc: Discretization,
    fam: PerturbationFamily,
    eps: float,
    s: Optional[float] = None,
) -> float:
    """Rayleigh quotient of ``psi0 + eps s psi1`` for ``Op0(theta0) + L(eps s)``, from the forms."""
    s = exp.s_star if s is None else s
    t = _check_eps(exp, eps, s)
    theta0 = exp.triple.theta0
    form = bloch_form(op, disc, theta0) + family_form(fam, disc, theta0, t)
    phi = exp.psi0 + exp.psi1 * t
    return form.rayleigh(phi.values)


# ---------------------------------------------------------------------------
# Second-order inequality


@dataclass(frozen=True)
class SecondOrderReport:
    holds: bool
    Lambda2: float
    bound: float  # -gap * |psi1|^2
    margin: float  # Lambda2 + gap * |psi1|^2, non-positive when the inequality holds
    tolerance: float

    @property
    def slack(self) -> float:
        return -self.margin


def second_order_check(
    exp: EdgeExpansion,
    band: BandData,
    L2: Optional[OperatorLike] = None,
    tolerance: float = 1e-9,
) -> SecondOrderReport:
    """Check ``Lambda2 <= -gap * |psi1|^2`` when ``Lambda1 = 0`` and ``L2 <= 0``."""
    scale = max(1.0, abs(exp.Lambda0))
    if abs(exp.Lambda1) > 1e-10 * scale:
        raise PreconditionNotMet(f"Lambda1 = {exp.Lambda1:.3g} is not zero")
    if L2 is not None:
        M = L2.matrix() if isinstance(L2, QuadraticForm) else L2
        top = float(np.linalg.eigvalsh(0.5 * (M + M.conj().T))[-1])
        if top > 1e-10:
            raise PreconditionNotMet(f"L2 has a positive eigenvalue {top:.3g}")
    gap = band.gap_at_theta0 if band.gap_at_theta0 is not None else exp.gap_at_theta0
    bound = -gap * exp.psi1_norm_sq
    margin = exp.Lambda2 - bound
    return SecondOrderReport(margin <= tolerance, exp.Lambda2, bound, margin, tolerance)


# ---------------------------------------------------------------------------
# pipeline


def perturbation_forms(fam: PerturbationFamily, disc: Discretization, theta0: float) -> dict[str, Optional[QuadraticForm]]:
    out: dict[str, Optional[QuadraticForm]] = {"L1": None, "L2": None, "L3a": None, "L3b": None}
    for name, _, p in fam.components():
        out[name] = perturbation_form(p, disc, theta0)
    if out["L1"] is None:
        out["L1"] = QuadraticForm.zero(disc.weights)
    return out


def expand_edge(
    op: PeriodicOperatorSpec,
    fam: PerturbationFamily,
    disorder: DisorderSpec,
    disc: Discretization,
    band: Optional[BandData] = None,
    n_theta: int = 64,
    n_bands: int = 4,
) -> EdgeExpansion:
    """Band analysis, triple selection, corrector and all coefficients."""
    if band is None or not band.refined:
        band = analyze_bands(op, disc, n_theta, n_bands)
    theta0 = band.theta0
    bform = bloch_form(op, disc, theta0)
    H = bform.matrix()
    forms = perturbation_forms(fam, disc, theta0)
    basis, d = diagonalize_in_eigenspace(band.ground_vectors, forms["L1"])

    cache: dict[int, tuple] = {}

    def solve(i):
        if i not in cache:
            psi0 = basis[i]
            psi1, sol = corrector(H, band.Lambda0, basis, psi0, forms["L1"], float(d[i]), band.gap_at_theta0)
            cache[i] = (psi1, sol, lambda2(psi0, psi1, forms["L1"], forms["L2"]))
        return cache[i]

    triple = select_minimizing_triple(d, disorder, lambda i: solve(i)[2], theta0)
    psi0 = basis[triple.i0]
    psi1, sol, lam2 = solve(triple.i0)
    lam1 = _real(complex(pair(forms["L1"], psi0, psi0)), "Lambda1")
    coeffs = lambda3_coefficients(psi0, psi1, lam1, lam2, forms["L1"], forms["L2"], forms["L3a"], forms["L3b"])
    return EdgeExpansion(
        triple=MinimizingTriple(theta0, triple.i0, triple.s_star, lam1),
        # the quotient of the chosen vector, so that eps = 0 reproduces it exactly
        Lambda0=bform.rayleigh(psi0.values),
        psi0=psi0,
        psi1=psi1,
        psi1_norm_sq=psi1.norm_sq(),
        Lambda2=lam2,
        lambda3_coeffs=coeffs,
        gap_at_theta0=float(band.gap_at_theta0),
        t_max=fam.t_max,
        ground_basis=tuple(basis),
        d_values=tuple(float(x) for x in d),
        psi1_residual=sol.residual,
    )


def orthogonality_defect(exp: EdgeExpansion) -> float:
    return max(abs(inner_product(exp.psi1, p)) for p in (exp.ground_basis or (exp.psi0,)))

"""Periodic differential operators, cell perturbations and their assembly.

Four form builders share one calling convention (coefficient callables,
a grid, a quasi-momentum):

* ``fourier``  - collocation with spectral differentiation on a periodic grid;
* ``fd``       - staggered finite differences of order 2 or 4 on a periodic grid;
* ``sem``      - continuous Gauss-Lobatto-Legendre spectral elements (m = 1),
  spectrally accurate even when a coefficient jumps at element faces, which
  is what supercells of non-constant configurations need;
* non-periodic ``fd`` grids - lumped Lagrange elements (P1 for order 2, P2 for
  order 4) on the closed cell, used for the decoupled cell problem where the
  endpoint values are genuine unknowns and boundary terms enter the form.

All of them return :class:`~weakdisorder.grid.QuadraticForm` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .errors import (
    EllipticityViolated,
    NonSymmetricPerturbation,
    UnsupportedOrder,
    ValidationError,
)
from .grid import (
    CellGeometry,
    Discretization,
    FormTerm,
    PeriodicFunction,
    QuadraticForm,
    fourier_wavenumbers,
    gll_rule,
)

Coefficients = Mapping[tuple[int, int], PeriodicFunction]
CoeffFn = Callable[[np.ndarray], np.ndarray]


def _symmetrized(coefficients: Coefficients, m: int) -> dict[tuple[int, int], PeriodicFunction]:
    out: dict[tuple[int, int], PeriodicFunction] = {}
    for (a, b), f in coefficients.items():
        if not (0 <= a <= m and 0 <= b <= m):
            raise ValidationError(f"coefficient index ({a}, {b}) outside 0..{m}")
        out[(a, b)] = f
    for (a, b), f in list(out.items()):
        if (b, a) in out:
            if out[(b, a)] != f:
                g = out[(b, a)]
                x = np.linspace(0.0, 1.0, 97, endpoint=False)
                if not np.allclose(f(x), g(x), atol=1e-13, rtol=0):
                    raise ValidationError(f"A[{a}][{b}] and A[{b}][{a}] differ; coefficients must be symmetric")
        else:
            out[(b, a)] = f
    return {k: v for k, v in sorted(out.items()) if not v.is_zero}


@dataclass(frozen=True)
class PeriodicOperatorSpec:
    """``sum_{a,b<=m} (-1)^a d^a A_ab d^b`` with real, cell-periodic ``A_ab``."""

    order: int
    coefficients: Coefficients
    geometry: CellGeometry = field(default_factory=CellGeometry)
    ellipticity: float = 1e-9

    def __post_init__(self):
        if self.order not in (1, 2):
            raise UnsupportedOrder(f"order m must be 1 or 2, got {self.order}")
        if not self.ellipticity > 0:
            raise ValidationError("ellipticity constant must be positive")
        coeffs = _symmetrized(dict(self.coefficients), self.order)
        if (self.order, self.order) not in coeffs:
            raise EllipticityViolated("leading coefficient A[m][m] is identically zero")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def schrodinger(
        cls,
        potential: Optional[PeriodicFunction] = None,
        stiffness: Optional[PeriodicFunction] = None,
        cell_length: float = 1.0,
    ) -> "PeriodicOperatorSpec":
        """``-(a u')' + v u``; the free operator when both arguments are omitted."""
        coeffs = {(1, 1): stiffness or PeriodicFunction.constant(1.0)}
        if potential is not None:
            coeffs[(0, 0)] = potential
        return cls(1, coeffs, CellGeometry(cell_length))

    @classmethod
    def free(cls, order: int = 1, cell_length: float = 1.0) -> "PeriodicOperatorSpec":
        return cls(order, {(order, order): PeriodicFunction.constant(1.0)}, CellGeometry(cell_length))

    @property
    def cell_length(self) -> float:
        return self.geometry.cell_length

    def coefficient_fns(self) -> dict[tuple[int, int], CoeffFn]:
        L = self.cell_length
        return {k: (lambda x, f=f: f(x, L)) for k, f in self.coefficients.items()}

    def check_ellipticity(self, x: np.ndarray) -> None:
        lead = self.coefficients[(self.order, self.order)](x, self.cell_length)
        worst = float(np.min(lead))
        if worst < self.ellipticity:
            raise EllipticityViolated(
                f"A[{self.order}][{self.order}] drops to {worst:.3g} < c0 = {self.ellipticity:.3g}"
            )


# ---------------------------------------------------------------------------
# perturbations


@dataclass(frozen=True)
class Multiplication:
    potential: PeriodicFunction


@dataclass(frozen=True)
class IntegralKernel:
    """Cell-confined integral operator ``u -> int K(x, y) u(y) dy``.

    Give the kernel either as 2D Fourier terms ``(p, q, c)`` meaning
    ``c exp(2 pi i (p x - q y) / L)``, or as a vectorised callable ``K(x, y)``.
    """

    terms: tuple[tuple[int, int, complex], ...] = ()
    func: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((int(p), int(q), complex(c)) for p, q, c in self.terms))

    @classmethod
    def cosine(cls, k: int = 1, amplitude: float = 1.0) -> "IntegralKernel":
        """``amplitude * cos(2 pi k (x - y) / L)``."""
        return cls(((k, k, amplitude / 2), (-k, -k, amplitude / 2)))

    def values(self, x: np.ndarray, y: np.ndarray, period: float) -> np.ndarray:
        X, Y = np.meshgrid(x, y, indexing="ij")
        if self.func is not None:
            return np.asarray(self.func(X, Y), dtype=complex)
        out = np.zeros(X.shape, dtype=complex)
        for p, q, c in self.terms:
            out += c * np.exp(2j * math.pi * (p * X - q * Y) / period)
        return out


@dataclass(frozen=True)
class DifferentialTerm:
    coefficients: Coefficients

    def __post_init__(self):
        m = max(max(k) for k in self.coefficients) if self.coefficients else 0
        object.__setattr__(self, "coefficients", _symmetrized(dict(self.coefficients), max(m, 0)))


PerturbationOp = Union[Multiplication, IntegralKernel, DifferentialTerm]

FAMILY_POWERS = (("L1", 1), ("L2", 2), ("L3a", 3), ("L3b", 4))


@dataclass(frozen=True)
class PerturbationFamily:
    """``L(t) = t L1 + t^2 L2 + t^3 (L3a + t L3b)``; ``None`` components are zero."""

    L1: Optional[PerturbationOp] = None
    L2: Optional[PerturbationOp] = None
    L3a: Optional[PerturbationOp] = None
    L3b: Optional[PerturbationOp] = None
    t_max: float = 1.0

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValidationError("t_max must be positive")

    def components(self):
        for name, power in FAMILY_POWERS:
            p = getattr(self, name)
            if p is not None:
                yield name, power, p


# ---------------------------------------------------------------------------
# form builders


def _fourier_derivative(N: int, length: float, theta: float, alpha: int, nyquist_sign: int) -> np.ndarray:
    k = fourier_wavenumbers(N, length)
    k[N // 2] = nyquist_sign * math.pi * N / length
    sym = (1j * (k + theta)) ** alpha
    F = np.fft.fft(np.eye(N), axis=0)
    return np.fft.ifft(sym[:, None] * F, axis=0)


def _fourier_form(coeffs: Mapping[tuple[int, int], CoeffFn], disc: Discretization, theta: float) -> QuadraticForm:
    # The unpaired Nyquist mode is treated as the average of the +N/2 and -N/2
    # harmonics, which keeps theta=0 matrices real and all resolved modes exact.
    N, x, w = disc.N, disc.nodes, disc.weights
    cache: dict[tuple[int, int], np.ndarray] = {}

    def G(alpha, sign):
        if alpha == 0:
            return None
        if (alpha, sign) not in cache:
            cache[(alpha, sign)] = _fourier_derivative(N, disc.cell_length, theta, alpha, sign)
        return cache[(alpha, sign)]

    terms = []
    for (a, b), f in coeffs.items():
        c = f(x) * w
        if a == 0 and b == 0:
            terms.append(FormTerm(None, c, None))
            continue
        for sign in (1, -1):
            terms.append(FormTerm(G(a, sign), 0.5 * c, G(b, sign)))
    return QuadraticForm(tuple(terms), w)


def _staggered_stencils(N: int, h: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Node-to-midpoint derivative and interpolation matrices (periodic)."""
    S = np.zeros((N, N))
    Q = np.zeros((N, N))
    rows = np.arange(N)
    if order == 2:
        offsets = {0: (-1.0, 0.5), 1: (1.0, 0.5)}
        scale_d, scale_q = 1.0 / h, 1.0
    else:
        offsets = {-1: (1.0, -1.0), 0: (-27.0, 9.0), 1: (27.0, 9.0), 2: (-1.0, -1.0)}
        scale_d, scale_q = 1.0 / (24.0 * h), 1.0 / 16.0
    for off, (d, q) in offsets.items():
        cols = (rows + off) % N
        S[rows, cols] += d * scale_d
        Q[rows, cols] += q * scale_q
    return S, Q


def _staggered_form(coeffs: Mapping[tuple[int, int], CoeffFn], disc: Discretization, theta: float, m: int) -> QuadraticForm:
    N, h, x, w = disc.N, disc.h, disc.nodes, disc.weights
    S, Q = _staggered_stencils(N, h, disc.order)
    terms = []
    if m == 1:
        mid = x + 0.5 * h
        G = {0: Q, 1: S + 1j * theta * Q}
        for (a, b), f in coeffs.items():
            if a == 0 and b == 0:
                terms.append(FormTerm(None, f(x) * w, None))
            else:
                terms.append(FormTerm(G[a], f(mid) * h, G[b]))
        return QuadraticForm(tuple(terms), w)
    D1 = -S.T @ Q
    D2 = -S.T @ S
    I = np.eye(N)
    G = {0: None, 1: D1 + 1j * theta * I, 2: D2 + 2j * theta * D1 - theta**2 * I}
    for (a, b), f in coeffs.items():
        terms.append(FormTerm(G[a], f(x) * w, G[b]))
    return QuadraticForm(tuple(terms), w)


_GAUSS3 = (np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)]), np.array([5.0, 8.0, 5.0]) / 9.0)


def _element_operators(disc: Discretization, theta: float):
    """Quadrature points, weights, value and (d + i theta) matrices on the closed cell."""
    N, h = disc.N, disc.h
    n = N + 1
    if disc.order == 2:
        q = np.arange(N) * h + 0.5 * h
        qw = np.full(N, h)
        V = np.zeros((N, n))
        D = np.zeros((N, n))
        r = np.arange(N)
        V[r, r] = V[r, r + 1] = 0.5
        D[r, r] = -1.0 / h
        D[r, r + 1] = 1.0 / h
    else:
        xi, gw = _GAUSS3
        n_el = N // 2
        shape = np.stack([xi * (xi - 1) / 2, 1 - xi**2, xi * (xi + 1) / 2], axis=1)
        dshape = np.stack([xi - 0.5, -2 * xi, xi + 0.5], axis=1) / h
        V = np.zeros((3 * n_el, n))
        D = np.zeros((3 * n_el, n))
        q = np.zeros(3 * n_el)
        qw = np.zeros(3 * n_el)
        for e in range(n_el):
            rows = slice(3 * e, 3 * e + 3)
            cols = slice(2 * e, 2 * e + 3)
            V[rows, cols] = shape
            D[rows, cols] = dshape
            q[rows] = (2 * e + 1 + xi) * h
            qw[rows] = gw * h
    return q, qw, V, D + 1j * theta * V


def _element_form(coeffs: Mapping[tuple[int, int], CoeffFn], disc: Discretization, theta: float, m: int) -> QuadraticForm:
    if m > 1:
        raise UnsupportedOrder("the closed-cell discretization supports order m = 1 only")
    x, w = disc.nodes, disc.weights
    q, qw, V, G1 = _element_operators(disc, theta)
    G = {0: V, 1: G1}
    terms = []
    for (a, b), f in coeffs.items():
        if a == 0 and b == 0:
            terms.append(FormTerm(None, f(x) * w, None))
        else:
            terms.append(FormTerm(G[a], f(q) * qw, G[b]))
    return QuadraticForm(tuple(terms), w)


def _sem_operators(disc: Discretization, theta: float):
    """Element-local GLL points and weights, gather and (d + i theta) matrices (periodic)."""
    x, w, D = gll_rule(disc.order)
    p, E, N = disc.order, disc.elements, disc.N
    he = disc.cell_length / E
    nq = E * (p + 1)
    V = np.zeros((nq, N))
    G = np.zeros((nq, N))
    q = np.zeros(nq)
    inward = np.zeros(nq)
    qw = np.zeros(nq)
    for e in range(E):
        rows = slice(e * (p + 1), (e + 1) * (p + 1))
        cols = (e * p + np.arange(p + 1)) % N
        V[rows, cols] = np.eye(p + 1)
        G[rows, cols] = D * (2.0 / he)
        q[rows] = e * he + (x + 1.0) * 0.5 * he
        qw[rows] = 0.5 * he * w
        inward[rows] = -x * 1e-12 * he
    return q, qw, V, G + 1j * theta * V, inward


def _sem_form(coeffs: Mapping[tuple[int, int], CoeffFn], disc: Discretization, theta: float, m: int) -> QuadraticForm:
    if m > 1:
        raise UnsupportedOrder("continuous spectral elements support order m = 1 only")
    x, w = disc.nodes, disc.weights
    q, qw, V, G1, inward = _sem_operators(disc, theta)
    # element end points are nudged inside their element so that coefficients
    # that jump across a cell face are sampled from the correct side
    qe = q + inward
    terms = []
    for (a, b), f in coeffs.items():
        if a == 0 and b == 0:
            terms.append(FormTerm(None, f(x) * w, None))
        else:
            G = {0: V, 1: G1}
            terms.append(FormTerm(G[a], f(qe) * qw, G[b]))
    return QuadraticForm(tuple(terms), w)


def differential_form(
    coeffs: Mapping[tuple[int, int], CoeffFn], disc: Discretization, theta: float, m: int
) -> QuadraticForm:
    """Form of ``sum (-1)^a (d + i theta)^a A_ab (d + i theta)^b`` on ``disc``."""
    if not disc.periodic:
        return _element_form(coeffs, disc, theta, m)
    if disc.scheme == "fourier":
        return _fourier_form(coeffs, disc, theta)
    if disc.scheme == "sem":
        return _sem_form(coeffs, disc, theta, m)
    return _staggered_form(coeffs, disc, theta, m)


def _quadrature_points(disc: Discretization) -> np.ndarray:
    if not disc.periodic:
        return _element_operators(disc, 0.0)[0]
    if disc.scheme == "sem":
        return _sem_operators(disc, 0.0)[0]
    if disc.scheme == "fd" and disc.order is not None:
        return disc.nodes + 0.5 * disc.h
    return disc.nodes


def bloch_form(op: PeriodicOperatorSpec, disc: Discretization, theta: float) -> QuadraticForm:
    op.check_ellipticity(disc.nodes)
    op.check_ellipticity(_quadrature_points(disc))
    return differential_form(op.coefficient_fns(), disc, theta, op.order)


def assemble_bloch(op: PeriodicOperatorSpec, disc: Discretization, theta: float) -> np.ndarray:
    """Hermitian matrix of ``Op0(theta)`` with periodic cell conditions.

    Real coefficients at ``theta = 0`` give a real-symmetric matrix; the
    imaginary FFT round-off is dropped in that case.
    """
    M = bloch_form(op, disc, theta).matrix()
    if theta == 0 and np.abs(M.imag).max() <= 1e-10 * max(1.0, np.abs(M).max()):
        return M.real.copy()
    return M


# ---------------------------------------------------------------------------
# perturbation assembly

_KERNEL_SYM_TOL = 1e-10


def _cell_scale_fn(cell_length: float, cell_scale: Optional[np.ndarray]):
    if cell_scale is None:
        return lambda x: 1.0
    cell_scale = np.asarray(cell_scale)
    P = len(cell_scale)

    def scale(x):
        # nodes on a cell face take the mean of the two adjacent cells (trapezoid rule per cell)
        r = np.asarray(x) / cell_length
        idx = np.floor(r + 1e-12).astype(int)
        out = cell_scale[idx % P]
        face = np.abs(r - np.round(r)) <= 1e-12
        return np.where(face, 0.5 * (out + cell_scale[(idx - 1) % P]), out)

    return scale


def _kernel_block(p: IntegralKernel, x_local: np.ndarray, theta: float, cell_length: float) -> np.ndarray:
    K = p.values(x_local, x_local, cell_length)
    K = K * np.exp(-1j * theta * (x_local[:, None] - x_local[None, :]))
    scale = float(np.abs(K).max()) if K.size else 0.0
    defect = float(np.abs(K - K.conj().T).max())
    if defect > _KERNEL_SYM_TOL * max(scale, 1.0):
        raise NonSymmetricPerturbation(f"kernel asymmetry {defect:.3g} exceeds tolerance")
    return 0.5 * (K + K.conj().T)


def perturbation_form(
    p: PerturbationOp,
    disc: Discretization,
    theta: float = 0.0,
    cell_length: Optional[float] = None,
    cell_scale: Optional[np.ndarray] = None,
) -> QuadraticForm:
    """Form of ``exp(-i theta x) L exp(i theta x)`` on ``disc``.

    With ``cell_scale`` of length ``P`` the grid is read as ``P`` consecutive
    cells of length ``cell_length`` and cell ``k`` receives ``cell_scale[k] * L``.
    """
    L = disc.cell_length if cell_length is None else cell_length
    scale = _cell_scale_fn(L, cell_scale)
    x, w = disc.nodes, disc.weights
    if isinstance(p, Multiplication):
        return QuadraticForm((FormTerm(None, p.potential(x, L) * scale(x) * w, None),), w)
    if isinstance(p, IntegralKernel):
        P = max(1, round(disc.cell_length / L)) if cell_scale is None else len(cell_scale)
        n = disc.size
        if n % P:
            raise ValidationError("grid does not split into whole cells")
        nc = n // P
        block = _kernel_block(p, x[:nc], theta, L)
        K = np.zeros((n, n), dtype=complex)
        factors = np.ones(P) if cell_scale is None else np.asarray(cell_scale)
        for k in range(P):
            sl = slice(k * nc, (k + 1) * nc)
            K[sl, sl] = factors[k] * block
        return QuadraticForm((FormTerm(None, w.astype(complex), K * w[None, :]),), w)
    if isinstance(p, DifferentialTerm):
        m = max(max(k) for k in p.coefficients) if p.coefficients else 0
        fns = {k: (lambda xx, f=f: f(xx, L) * scale(xx)) for k, f in p.coefficients.items()}
        if not fns:
            return QuadraticForm.zero(w)
        return differential_form(fns, disc, theta, max(m, 1) if not disc.periodic else m)
    raise ValidationError(f"unknown perturbation type {type(p).__name__}")


def assemble_perturbation(p: PerturbationOp, disc: Discretization, theta0: float = 0.0) -> np.ndarray:
    """Hermitian matrix of the modulated perturbation on one cell."""
    return perturbation_form(p, disc, theta0).matrix()


def family_form(
    fam: PerturbationFamily,
    disc: Discretization,
    theta: float,
    t,
    cell_length: Optional[float] = None,
) -> QuadraticForm:
    """Form of ``L(t)``.  ``t`` may be a scalar or one value per cell."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    per_cell = np.ndim(t) > 0
    total = QuadraticForm.zero(disc.weights)
    for _, power, p in fam.components():
        if per_cell:
            total = total + perturbation_form(p, disc, theta, cell_length, t_arr**power)
        else:
            total = total + perturbation_form(p, disc, theta, cell_length).scaled(float(t_arr[0]) ** power)
    return total


def family_matrices(fam: PerturbationFamily, disc: Discretization, theta: float) -> dict[str, np.ndarray]:
    """Matrices of the individual components; missing ones are zero."""
    n = disc.size
    out = {name: np.zeros((n, n), dtype=complex) for name, _ in FAMILY_POWERS}
    for name, _, p in fam.components():
        out[name] = assemble_perturbation(p, disc, theta)
    return out


def operator_norm_estimate(
    fam: PerturbationFamily, op: Optional[PeriodicOperatorSpec], disc: Discretization, t: float
) -> float:
    """Spectral norm of the assembled ``L(t)`` (modulation does not change it)."""
    M = family_form(fam, disc, 0.0, t).matrix()
    if not np.any(M):
        return 0.0
    return float(np.linalg.norm(M, 2))

"""Cell geometry, grids, grid functions and quadratic forms.

Every discrete operator in the package is stored as a :class:`QuadraticForm`:
a sum of terms ``sum_q c_q (G_r u)_q conj((G_l v)_q)`` plus the nodal
quadrature weights.  The Hermitian matrix used by the eigensolvers is derived
from it, and Rayleigh quotients are evaluated from the factored terms, which
keeps them accurate to a few ulps of the *energy* rather than of the matrix
norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np
from numpy.polynomial import legendre

from .errors import DiscretizationMismatch, GridTooSmall, OddGridSize, ValidationError

SCHEME_ALIASES = {
    "fourier": "fourier",
    "fourier_spectral": "fourier",
    "spectral": "fourier",
    "fd": "fd",
    "finite_difference": "fd",
    "sem": "sem",
    "spectral_element": "sem",
}


@lru_cache(maxsize=None)
def gll_rule(p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Lobatto-Legendre nodes, weights and differentiation matrix of degree ``p`` on [-1, 1]."""
    c = np.zeros(p + 1)
    c[p] = 1.0
    interior = np.sort(legendre.legroots(legendre.legder(c)).real)
    x = np.concatenate([[-1.0], interior, [1.0]])
    Pp = legendre.legval(x, c)
    w = 2.0 / (p * (p + 1) * Pp**2)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    D = Pp[:, None] / (Pp[None, :] * diff)
    np.fill_diagonal(D, 0.0)
    D[0, 0] = -p * (p + 1) / 4.0
    D[p, p] = p * (p + 1) / 4.0
    return x, w, D


@dataclass(frozen=True)
class CellGeometry:
    """One-dimensional periodicity cell ``[0, L)``."""

    cell_length: float = 1.0

    def __post_init__(self):
        if not self.cell_length > 0:
            raise ValidationError(f"cell length must be positive, got {self.cell_length}")

    @property
    def lattice_generator(self) -> float:
        return self.cell_length

    @property
    def dual_generator(self) -> float:
        return 2.0 * math.pi / self.cell_length

    @property
    def brillouin_zone(self) -> tuple[float, float]:
        return (0.0, self.dual_generator)


@dataclass(frozen=True)
class PeriodicFunction:
    """Finite real Fourier series ``sum_k a_k cos(2 pi k x / L) + b_k sin(2 pi k x / L)``.

    ``terms`` holds ``(k, a_k, b_k)`` triples; the period is supplied at
    evaluation time so the same series can be resampled on cells and
    supercells alike.
    """

    terms: tuple[tuple[int, float, float], ...] = ()

    def __post_init__(self):
        clean = []
        for term in self.terms:
            k, a, b = term
            if int(k) != k or k < 0:
                raise ValidationError(f"harmonic index must be a non-negative integer, got {k}")
            clean.append((int(k), float(a), float(b)))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def constant(cls, value: float) -> "PeriodicFunction":
        return cls(((0, value, 0.0),))

    @classmethod
    def cos(cls, k: int = 1, amplitude: float = 1.0) -> "PeriodicFunction":
        return cls(((k, amplitude, 0.0),))

    @classmethod
    def sin(cls, k: int = 1, amplitude: float = 1.0) -> "PeriodicFunction":
        return cls(((k, 0.0, amplitude),))

    def __add__(self, other: "PeriodicFunction") -> "PeriodicFunction":
        return PeriodicFunction(self.terms + other.terms)

    def scaled(self, c: float) -> "PeriodicFunction":
        return PeriodicFunction(tuple((k, c * a, c * b) for k, a, b in self.terms))

    @property
    def max_harmonic(self) -> int:
        return max((k for k, a, b in self.terms if a or b), default=0)

    @property
    def is_zero(self) -> bool:
        return all(a == 0 and b == 0 for _, a, b in self.terms)

    def __call__(self, x, period: float = 1.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for k, a, b in self.terms:
            if k == 0:
                out = out + a
                continue
            phase = 2.0 * math.pi * k * x / period
            if a:
                out = out + a * np.cos(phase)
            if b:
                out = out + b * np.sin(phase)
        return out

    def mean(self) -> float:
        return sum(a for k, a, _ in self.terms if k == 0)

    def sup_bound(self) -> float:
        """Cheap upper bound on ``max |f|``."""
        return sum(abs(a) if k == 0 else math.hypot(a, b) for k, a, b in self.terms)


@dataclass(frozen=True)
class Discretization:
    """Uniform grid on a cell.

    Periodic grids have ``N`` nodes ``x_j = j L / N`` and uniform weights.
    Non-periodic grids (used for the decoupled cell problem) have ``N + 1``
    nodes including both endpoints and lumped weights of the element rule of
    the requested order.
    """

    geometry: CellGeometry
    N: int
    scheme: str = "fourier"
    order: Optional[int] = None
    periodic: bool = True

    @property
    def cell_length(self) -> float:
        return self.geometry.cell_length

    @property
    def h(self) -> float:
        return self.cell_length / self.N

    @property
    def size(self) -> int:
        return self.N if self.periodic else self.N + 1

    @property
    def elements(self) -> int:
        """Number of spectral elements (``sem`` grids only)."""
        return self.N // self.order

    @cached_property
    def nodes(self) -> np.ndarray:
        if self.scheme == "sem":
            x, _, _ = gll_rule(self.order)
            he = self.cell_length / self.elements
            local = (x[:-1] + 1.0) * 0.5 * he
            return (np.arange(self.elements)[:, None] * he + local[None, :]).ravel()
        return np.arange(self.size) * self.h

    @cached_property
    def weights(self) -> np.ndarray:
        if self.scheme == "sem":
            _, w, _ = gll_rule(self.order)
            he = self.cell_length / self.elements
            p = self.order
            out = np.zeros(self.N)
            for e in range(self.elements):
                idx = (e * p + np.arange(p + 1)) % self.N
                np.add.at(out, idx, 0.5 * he * w)
            return out
        h = self.h
        if self.periodic:
            return np.full(self.N, h)
        w = np.full(self.N + 1, h)
        if self.order == 4:
            w[1::2] = 4.0 * h / 3.0
            w[2:-1:2] = 2.0 * h / 3.0
            w[0] = w[-1] = h / 3.0
        else:
            w[0] = w[-1] = h / 2.0
        return w

    def __eq__(self, other):
        if not isinstance(other, Discretization):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.N == other.N
            and self.scheme == other.scheme
            and self.order == other.order
            and self.periodic == other.periodic
        )

    def __hash__(self):
        return hash((self.geometry, self.N, self.scheme, self.order, self.periodic))


def build_grid(geometry: CellGeometry, N: int, scheme: str = "fourier", order: int = 2, degree: int = 8) -> Discretization:
    """Periodic cell grid.

    ``order`` is the accuracy order of finite differences; ``degree`` the
    polynomial degree of spectral elements, for which ``N`` (nodes per cell)
    must be a multiple of ``degree``.
    """
    scheme = SCHEME_ALIASES.get(scheme, scheme)
    if scheme not in ("fourier", "fd", "sem"):
        raise ValidationError(f"unknown scheme {scheme!r}")
    if N < 8:
        raise GridTooSmall(f"N must be at least 8, got {N}")
    if scheme == "sem":
        if degree < 2 or N % degree:
            raise ValidationError(f"spectral elements need degree >= 2 dividing N, got N={N}, degree={degree}")
        return Discretization(geometry, int(N), "sem", int(degree), True)
    if scheme == "fourier":
        if N % 2:
            raise OddGridSize(f"fourier grids need even N, got {N}")
        return Discretization(geometry, int(N), "fourier", None, True)
    if order not in (2, 4):
        raise ValidationError(f"finite-difference order must be 2 or 4, got {order}")
    return Discretization(geometry, int(N), "fd", int(order), True)


def build_hat_grid(geometry: CellGeometry, N: int, order: int = 2) -> Discretization:
    """Non-periodic grid with ``N + 1`` nodes on the closed cell ``[0, L]``."""
    if N < 8:
        raise GridTooSmall(f"N must be at least 8, got {N}")
    if order not in (2, 4):
        raise ValidationError(f"finite-difference order must be 2 or 4, got {order}")
    if order == 4 and N % 2:
        raise OddGridSize("fourth-order cell grids pair intervals into elements; N must be even")
    return Discretization(geometry, int(N), "fd", int(order), False)


@dataclass(frozen=True, eq=False)
class GridFunction:
    values: np.ndarray
    disc: Discretization

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.disc.size,):
            raise DiscretizationMismatch(
                f"expected {self.disc.size} values, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, f, disc: Discretization) -> "GridFunction":
        return cls(np.asarray(f(disc.nodes), dtype=complex), disc)

    @classmethod
    def from_coords(cls, coords, disc: Discretization) -> "GridFunction":
        """Inverse of :meth:`coords` (eigenvectors come out in these coordinates)."""
        return cls(np.asarray(coords) / np.sqrt(disc.weights), disc)

    def coords(self) -> np.ndarray:
        """Values scaled by ``sqrt(w)``: Euclidean products of coords are L2 products."""
        return self.values * np.sqrt(self.disc.weights)

    def norm_sq(self) -> float:
        return float(np.sum(self.disc.weights * np.abs(self.values) ** 2))

    def __add__(self, other):
        _check_same(self, other)
        return GridFunction(self.values + other.values, self.disc)

    def __sub__(self, other):
        _check_same(self, other)
        return GridFunction(self.values - other.values, self.disc)

    def __mul__(self, c):
        return GridFunction(self.values * c, self.disc)

    __rmul__ = __mul__


def _check_same(u: GridFunction, v: GridFunction):
    if u.disc != v.disc:
        raise DiscretizationMismatch("grid functions live on different discretizations")


def inner_product(u: GridFunction, v: GridFunction) -> complex:
    """Quadrature L2 product ``sum_j w_j u_j conj(v_j)``."""
    _check_same(u, v)
    return complex(np.sum(u.disc.weights * u.values * np.conj(v.values)))


# ---------------------------------------------------------------------------
# quadratic forms


@dataclass(frozen=True, eq=False)
class FormTerm:
    """``sum_q coeff_q (right @ u)_q conj((left @ v)_q)``; ``None`` stands for identity."""

    left: Optional[np.ndarray]
    coeff: np.ndarray
    right: Optional[np.ndarray]

    def stiffness(self, n: int) -> np.ndarray:
        c = np.asarray(self.coeff)
        right = np.eye(n) if self.right is None else self.right
        if self.left is None:
            return c[:, None] * right
        return self.left.conj().T @ (c[:, None] * right)

    def value(self, u: np.ndarray, v: np.ndarray) -> complex:
        ru = u if self.right is None else self.right @ u
        lv = v if self.left is None else self.left @ v
        return np.sum(self.coeff * ru * np.conj(lv))


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    terms: tuple[FormTerm, ...]
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.weights)

    @classmethod
    def zero(cls, weights) -> "QuadraticForm":
        return cls((), np.asarray(weights))

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        if other.size != self.size:
            raise DiscretizationMismatch("cannot add forms of different sizes")
        return QuadraticForm(self.terms + other.terms, self.weights)

    def scaled(self, c: complex) -> "QuadraticForm":
        return QuadraticForm(
            tuple(FormTerm(t.left, c * np.asarray(t.coeff), t.right) for t in self.terms),
            self.weights,
        )

    def stiffness(self) -> np.ndarray:
        n = self.size
        K = np.zeros((n, n), dtype=complex)
        for t in self.terms:
            K += t.stiffness(n)
        return 0.5 * (K + K.conj().T)

    def matrix(self) -> np.ndarray:
        """Hermitian matrix ``W^{-1/2} K W^{-1/2}`` acting on :meth:`GridFunction.coords`.

        On uniform grids this is exactly the nodal operator matrix.
        """
        s = 1.0 / np.sqrt(self.weights)
        return s[:, None] * self.stiffness() * s[None, :]

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Nodal values of the operator applied to ``u``, term by term."""
        out = np.zeros(self.size, dtype=complex)
        for t in self.terms:
            ru = u if t.right is None else t.right @ u
            cr = np.asarray(t.coeff) * ru
            out += cr if t.left is None else t.left.conj().T @ cr
        return out / self.weights

    def value(self, u: np.ndarray, v: Optional[np.ndarray] = None) -> complex:
        v = u if v is None else v
        return complex(sum((t.value(u, v) for t in self.terms), 0.0))

    def rayleigh(self, u: np.ndarray) -> float:
        num = self.value(u).real
        den = float(np.sum(self.weights * np.abs(u) ** 2))
        return num / den


def hermiticity_defect(M: np.ndarray) -> float:
    """``max |M - M^H| / max |M|`` (0 for the zero matrix)."""
    scale = float(np.abs(M).max()) if M.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.abs(M - M.conj().T).max()) / scale


def fourier_wavenumbers(N: int, length: float) -> np.ndarray:
    return 2.0 * math.pi * np.fft.fftfreq(N, d=1.0 / N) / length


def trig_interpolate(values: np.ndarray, length: float, x, derivative: int = 0) -> np.ndarray:
    """Evaluate the trigonometric interpolant of periodic samples (or a derivative) at ``x``.

    The Nyquist coefficient is split evenly between ``+-N/2`` so the
    interpolant of real data is real.
    """
    values = np.asarray(values)
    N = len(values)
    coeffs = np.fft.fft(values) / N
    n = np.fft.fftfreq(N, d=1.0 / N)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = 2.0 * math.pi * n / length
    phase = np.exp(1j * np.outer(x, k))
    sym = (1j * k) ** derivative
    if N % 2 == 0:
        ny = N // 2
        k_ny = math.pi * N / length
        c = coeffs[ny]
        coeffs = coeffs.copy()
        coeffs[ny] = 0.0
        extra = 0.5 * c * ((1j * k_ny) ** derivative * np.exp(1j * k_ny * x)
                           + (-1j * k_ny) ** derivative * np.exp(-1j * k_ny * x))
    else:
        extra = 0.0
    return phase @ (sym * coeffs) + extra


def as_pairs(values: Iterable[Sequence[float]]) -> tuple:
    return tuple(tuple(v) for v in values)

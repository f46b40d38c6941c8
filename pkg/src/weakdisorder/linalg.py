"""Dense Hermitian helpers: refined eigenpairs, constrained solves, 1D minimisation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import IllConditionedSolve
from .grid import QuadraticForm

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def lowest_eigenpairs(H: np.ndarray, k: int = 1):
    """Lowest ``k`` eigenpairs of a Hermitian matrix, ascending."""
    k = min(k, H.shape[0])
    return sla.eigh(H, subset_by_index=[0, k - 1])


def projected_form(form: QuadraticForm, U: np.ndarray) -> np.ndarray:
    """``A_ij = form(U[:, j], U[:, i])`` evaluated term by term (nodal columns)."""
    A = np.zeros((U.shape[1], U.shape[1]), dtype=complex)
    for t in form.terms:
        R = U if t.right is None else t.right @ U
        Lv = U if t.left is None else t.left @ U
        A += Lv.conj().T @ (np.asarray(t.coeff)[:, None] * R)
    return 0.5 * (A + A.conj().T)


def ritz_refine(form: QuadraticForm, coords: np.ndarray):
    """Rayleigh-Ritz on the span of computed eigenvectors (columns, in coords).

    The projected matrix comes from the factored form, so the Ritz values
    are accurate to round-off in the form itself rather than ``eps * ||H||``.
    Returns ``(values, coords)``.
    """
    U = coords / np.sqrt(form.weights)[:, None]
    A = projected_form(form, U)
    B = coords.conj().T @ coords
    vals, C = sla.eigh(A, 0.5 * (B + B.conj().T))
    return vals, coords @ C


def refined_ground_energy(form: QuadraticForm, H: np.ndarray | None = None, k: int = 2):
    """Lowest eigenvalue refined by Rayleigh-Ritz on the lowest ``k`` eigenvectors.

    Returns ``(energy, nodal_vector, raw_eigenvalue)``.
    """
    H = form.matrix() if H is None else H
    vals, vecs = lowest_eigenpairs(H, k)
    rv, rc = ritz_refine(form, vecs)
    u = rc[:, 0] / np.sqrt(form.weights)
    return float(rv[0]), u, float(vals[0])


def golden_section(f, a: float, b: float, tol: float, max_iter: int = 200):
    """Minimise a continuous unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


@dataclass(frozen=True)
class DeflatedSolution:
    x: np.ndarray
    residual: float
    kernel_component: float


def deflated_solve(H: np.ndarray, shift: float, basis: np.ndarray, rhs: np.ndarray, gap: float | None = None,
                   gap_threshold: float = 1e-8) -> DeflatedSolution:
    """Solve ``(H - shift) x = P rhs`` with ``x`` orthogonal to ``basis``.

    ``basis`` has orthonormal columns spanning the kernel of ``H - shift``
    and ``P`` projects onto their orthogonal complement.  The system is
    bordered with one Lagrange multiplier per kernel vector.
    """
    n = H.shape[0]
    V = np.atleast_2d(basis.T).T if basis.ndim == 1 else basis
    scale = max(1.0, float(np.abs(H).max()))
    if gap is not None and gap <= gap_threshold * scale:
        raise IllConditionedSolve(f"spectral gap {gap:.3g} too small for a deflated solve")
    kern = V.conj().T @ rhs
    r = rhs - V @ kern
    kernel_component = float(np.linalg.norm(kern))
    if kernel_component > 1e-8 * max(1.0, float(np.linalg.norm(rhs))):
        warnings.warn(f"right-hand side has kernel component {kernel_component:.3g}; projected out",
                      RuntimeWarning, stacklevel=2)
    k = V.shape[1]
    A = np.zeros((n + k, n + k), dtype=complex)
    A[:n, :n] = H - shift * np.eye(n)
    A[:n, n:] = V
    A[n:, :n] = V.conj().T
    b = np.concatenate([r, np.zeros(k, dtype=complex)])
    sol = sla.solve(A, b)
    x = sol[:n]
    x = x - V @ (V.conj().T @ x)
    resid = float(np.linalg.norm(H @ x - shift * x - r))
    return DeflatedSolution(x, resid, kernel_component)

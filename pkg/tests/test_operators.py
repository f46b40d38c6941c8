import math

import numpy as np
import pytest
from scipy.special import mathieu_a

from weakdisorder.errors import (
    EllipticityViolated,
    NonSymmetricPerturbation,
    UnsupportedOrder,
    ValidationError,
)
from weakdisorder.grid import CellGeometry, PeriodicFunction, build_grid, hermiticity_defect
from weakdisorder.linalg import refined_ground_energy
from weakdisorder.operators import (
    DifferentialTerm,
    IntegralKernel,
    Multiplication,
    PerturbationFamily,
    PeriodicOperatorSpec,
    assemble_bloch,
    assemble_perturbation,
    bloch_form,
    family_form,
    operator_norm_estimate,
)

GEOM = CellGeometry(1.0)
PI = math.pi


def mathieu_ground(V0, L=1.0):
    """Lowest periodic eigenvalue of -u'' + V0 cos(2 pi x / L) on a cell of length L."""
    q = V0 * L**2 / (2 * PI**2)
    return (PI / L) ** 2 * mathieu_a(0, q)


@pytest.mark.parametrize("theta", [0.0, 0.9, PI])
def test_free_fourier_symbol(theta):
    disc = build_grid(GEOM, 32)
    ev = np.linalg.eigvalsh(assemble_bloch(PeriodicOperatorSpec.free(), disc, theta))
    k = 2 * PI * np.arange(-15, 16)
    exact = np.sort((k + theta) ** 2)[:8]
    assert np.allclose(ev[:8], exact, rtol=1e-12, atol=1e-10)


@pytest.mark.parametrize("scheme,order,N", [("fourier", 2, 32), ("sem", 8, 32)])
def test_mathieu_ground_energy(scheme, order, N):
    op = PeriodicOperatorSpec.schrodinger(PeriodicFunction.cos(1, 3.0))
    form = bloch_form(op, build_grid(GEOM, N, scheme, order, degree=8), 0.0)
    assert refined_ground_energy(form)[0] == pytest.approx(mathieu_ground(3.0), abs=1e-11)


def test_sem_handles_a_cell_length():
    op = PeriodicOperatorSpec.schrodinger(PeriodicFunction.cos(1, 3.0), cell_length=2.0)
    form = bloch_form(op, build_grid(CellGeometry(2.0), 32, "sem", degree=8), 0.0)
    assert refined_ground_energy(form)[0] == pytest.approx(mathieu_ground(3.0, 2.0), abs=1e-11)


@pytest.mark.parametrize("order,expected", [(2, 2.0), (4, 4.0)])
def test_finite_difference_convergence_order(order, expected):
    op = PeriodicOperatorSpec.schrodinger(PeriodicFunction.cos(1, 3.0))
    exact = mathieu_ground(3.0)
    errs = [abs(refined_ground_energy(bloch_form(op, build_grid(GEOM, N, "fd", order), 0.0))[0] - exact) for N in (32, 64)]
    assert math.log2(errs[0] / errs[1]) == pytest.approx(expected, abs=0.15)


@pytest.mark.parametrize("scheme", ["fourier", "fd", "sem"])
def test_assembled_matrices_are_hermitian(scheme):
    disc = build_grid(GEOM, 32, scheme, 4, degree=8)
    op = PeriodicOperatorSpec.schrodinger(PeriodicFunction.sin(1, 1.5), PeriodicFunction(((0, 2.0, 0.0), (2, 0.4, 0.0))))
    assert hermiticity_defect(assemble_bloch(op, disc, 1.3)) <= 1e-13
    for p in (
        Multiplication(PeriodicFunction.cos(2)),
        IntegralKernel.cosine(1, 0.7),
        DifferentialTerm({(1, 1): PeriodicFunction.constant(0.5), (0, 0): PeriodicFunction.sin(1)}),
    ):
        assert hermiticity_defect(assemble_perturbation(p, disc, 1.3)) <= 1e-13


def test_order_two_operator_symbol():
    op = PeriodicOperatorSpec(2, {(2, 2): PeriodicFunction.constant(1.0), (1, 1): PeriodicFunction.constant(-2 * PI**2)})
    disc = build_grid(GEOM, 32)
    # raw eigensolver accuracy is eps * ||H|| with ||H|| ~ (N pi)^4
    ev = np.linalg.eigvalsh(assemble_bloch(op, disc, PI))
    assert ev[0] == pytest.approx(-(PI**4), rel=1e-9)
    assert ev[1] == pytest.approx(ev[0], rel=1e-9)


def test_operator_validation():
    with pytest.raises(UnsupportedOrder):
        PeriodicOperatorSpec(3, {(3, 3): PeriodicFunction.constant(1.0)})
    with pytest.raises(EllipticityViolated):
        PeriodicOperatorSpec(1, {(0, 0): PeriodicFunction.constant(1.0)})
    with pytest.raises(ValidationError):
        PeriodicOperatorSpec(1, {(1, 1): PeriodicFunction.constant(1.0), (1, 0): PeriodicFunction.cos(1), (0, 1): PeriodicFunction.sin(1)})
    weak = PeriodicOperatorSpec(1, {(1, 1): PeriodicFunction(((0, 1.0, 0.0), (1, 1.0, 0.0)))}, ellipticity=0.1)
    with pytest.raises(EllipticityViolated):
        weak.check_ellipticity(np.linspace(0, 1, 65))
    with pytest.raises(ValidationError):
        PerturbationFamily(t_max=0.0)


def test_non_hermitian_kernel_is_rejected():
    bad = IntegralKernel(((1, 0, 1.0),))
    with pytest.raises(NonSymmetricPerturbation):
        assemble_perturbation(bad, build_grid(GEOM, 16))


def test_family_scales_with_powers_of_t():
    disc = build_grid(GEOM, 16)
    fam = PerturbationFamily(
        L1=Multiplication(PeriodicFunction.cos(1)),
        L2=Multiplication(PeriodicFunction.constant(1.0)),
        L3b=Multiplication(PeriodicFunction.constant(1.0)),
    )
    t = 0.3
    M = family_form(fam, disc, 0.0, t).matrix()
    x = disc.nodes
    expected = np.diag(t * np.cos(2 * PI * x) + t**2 + t**4)
    assert np.allclose(M, expected, atol=1e-15)
    assert operator_norm_estimate(fam, None, disc, t) == pytest.approx(np.abs(np.diag(expected)).max())


def test_per_cell_scaling_matches_scalar_for_constant_configurations():
    disc = build_grid(CellGeometry(3.0), 48)
    fam = PerturbationFamily(L1=Multiplication(PeriodicFunction.cos(1)), L2=IntegralKernel.cosine(1, 0.5))
    a = family_form(fam, disc, 0.2, 0.1, cell_length=1.0).matrix()
    b = family_form(fam, disc, 0.2, [0.1, 0.1, 0.1], cell_length=1.0).matrix()
    assert np.allclose(a, b, atol=1e-15)

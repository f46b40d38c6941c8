import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weakdisorder.errors import GridTooSmall, OddGridSize, ValidationError
from weakdisorder.grid import (
    CellGeometry,
    GridFunction,
    PeriodicFunction,
    build_grid,
    build_hat_grid,
    gll_rule,
    inner_product,
    trig_interpolate,
)
from weakdisorder.operators import PeriodicOperatorSpec, bloch_form

GEOM = CellGeometry(1.0)


@pytest.mark.parametrize("scheme,order", [("fourier", 2), ("fd", 2), ("fd", 4), ("sem", 8)])
def test_weights_integrate_the_cell(scheme, order):
    disc = build_grid(CellGeometry(2.5), 32, scheme, order, degree=8)
    assert disc.weights.sum() == pytest.approx(2.5, rel=1e-14)
    assert disc.nodes.min() >= 0 and disc.nodes.max() < 2.5


@pytest.mark.parametrize("p", [2, 4, 8])
def test_gll_rule_is_exact_to_degree_2p_minus_1(p):
    x, w, D = gll_rule(p)
    for k in range(2 * p):
        exact = (1 - (-1) ** (k + 1)) / (k + 1)
        assert np.dot(w, x**k) == pytest.approx(exact, abs=1e-13)
    # the differentiation matrix is exact on degree-p polynomials
    assert np.allclose(D @ x**p, p * x ** (p - 1), atol=1e-11)


def test_grid_validation():
    with pytest.raises(GridTooSmall):
        build_grid(GEOM, 4)
    with pytest.raises(OddGridSize):
        build_grid(GEOM, 33)
    with pytest.raises(ValidationError):
        build_grid(GEOM, 30, "sem", degree=8)
    with pytest.raises(ValidationError):
        build_grid(GEOM, 32, "fd", 3)
    with pytest.raises(ValidationError):
        build_grid(GEOM, 32, "chebyshev")
    with pytest.raises(OddGridSize):
        build_hat_grid(GEOM, 33, 4)


def test_hat_grid_closes_the_cell():
    disc = build_hat_grid(GEOM, 16, 2)
    assert disc.size == 17
    assert disc.nodes[0] == 0 and disc.nodes[-1] == 1
    assert disc.weights.sum() == pytest.approx(1.0, rel=1e-14)


@given(
    st.lists(st.tuples(st.integers(0, 5), st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=4),
    st.floats(0.5, 3.0),
)
def test_periodic_function_mean_and_bound(terms, L):
    f = PeriodicFunction(tuple(terms))
    x = np.linspace(0, L, 257)[:-1]
    vals = f(x, L)
    assert abs(vals.mean() - f.mean()) <= 1e-12 * (1 + f.sup_bound())
    assert np.max(np.abs(vals)) <= f.sup_bound() + 1e-12
    assert np.allclose(f(x + L, L), vals, atol=1e-10)


def test_periodic_function_rejects_negative_harmonic():
    with pytest.raises(ValidationError):
        PeriodicFunction(((-1, 1.0, 0.0),))


def test_trig_interpolation_is_exact_for_resolved_harmonics():
    disc = build_grid(GEOM, 16)
    f = PeriodicFunction(((1, 0.3, 0.0), (3, 0.0, -1.2)))
    y = np.array([0.123, 0.77])
    assert np.allclose(trig_interpolate(f(disc.nodes), 1.0, y), f(y), atol=1e-13)
    dy = 2 * math.pi * (-0.3 * np.sin(2 * math.pi * y) - 3 * 1.2 * np.cos(6 * math.pi * y))
    assert np.allclose(trig_interpolate(f(disc.nodes), 1.0, y, 1), dy, atol=1e-11)


@pytest.mark.parametrize("scheme,order", [("fourier", 2), ("fd", 4), ("sem", 8)])
def test_form_apply_matches_matrix(scheme, order):
    disc = build_grid(GEOM, 32, scheme, order, degree=8)
    op = PeriodicOperatorSpec.schrodinger(PeriodicFunction.cos(1, 2.0), PeriodicFunction(((0, 1.0, 0.0), (1, 0.2, 0.1))))
    form = bloch_form(op, disc, 0.4)
    rng = np.random.default_rng(1)
    u = rng.normal(size=disc.size) + 1j * rng.normal(size=disc.size)
    s = np.sqrt(disc.weights)
    assert np.allclose(s * form.apply(u), form.matrix() @ (s * u), atol=1e-9)
    v = rng.normal(size=disc.size)
    assert form.value(u, v) == pytest.approx(np.vdot(s * v, form.matrix() @ (s * u)), rel=1e-12)


def test_inner_product_is_conjugate_symmetric():
    disc = build_grid(GEOM, 16, "sem", degree=4)
    rng = np.random.default_rng(0)
    u = GridFunction(rng.normal(size=16) + 1j * rng.normal(size=16), disc)
    v = GridFunction(rng.normal(size=16), disc)
    assert inner_product(u, v) == pytest.approx(np.conj(inner_product(v, u)))
    assert inner_product(u, u).real == pytest.approx(u.norm_sq())

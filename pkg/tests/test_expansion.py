import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weakdisorder.disorder import DisorderSpec
from weakdisorder.errors import EpsOutOfRange, IllConditionedSolve, PreconditionNotMet
from weakdisorder.expansion import (
    second_order_check,
    corrector,
    lambda3,
    orthogonality_defect,
    rayleigh_cross_check,
    select_minimizing_triple,
    upper_bound,
)
from weakdisorder.grid import PeriodicFunction
from weakdisorder.operators import IntegralKernel, Multiplication

from conftest import edge

PI = math.pi


def test_cosine_coefficients(cosine_edge):
    cfg, disc, band, exp = cosine_edge
    n1 = 1 / (32 * PI**4)
    assert exp.psi1_norm_sq == pytest.approx(n1, rel=1e-12)
    assert exp.Lambda2 == pytest.approx(-1 / (8 * PI**2), abs=1e-12)
    c0, c1, c2, c3 = exp.lambda3_coeffs
    # only -Lambda2 |psi1|^2 survives for a pure first-order perturbation
    assert c1 == pytest.approx(1 / (256 * PI**6), rel=1e-10)
    assert abs(c0) < 1e-14 and c2 == 0 and c3 == 0
    assert orthogonality_defect(exp) < 1e-12


def test_upper_bound_closed_form(cosine_edge):
    cfg, disc, band, exp = cosine_edge
    n1 = 1 / (32 * PI**4)
    for eps in (0.05, 0.1, 0.3):
        t = eps * exp.s_star
        exact = -(t**2) / (8 * PI**2) + t**4 / (256 * PI**6) / (1 + t**2 * n1)
        assert upper_bound(exp, eps) == pytest.approx(exact, rel=1e-10)
    assert upper_bound(exp, 0.0) == exp.Lambda0


def test_eps_range_is_enforced(cosine_edge):
    exp = cosine_edge[3]
    with pytest.raises(EpsOutOfRange):
        upper_bound(exp, 1.5)
    with pytest.raises(EpsOutOfRange):
        upper_bound(exp, -0.1)


def test_constant_shift(shift_edge):
    cfg, disc, band, exp = shift_edge
    assert exp.s_star == -1.0
    assert exp.Lambda1 == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(exp.psi1.values)) < 1e-14
    assert upper_bound(exp, 0.05) == pytest.approx(exp.Lambda0 - 0.05, abs=1e-15)


def test_nonnegative_disorder_chooses_the_small_endpoint():
    cfg, disc, band, exp = edge("constant_shift")
    from weakdisorder.expansion import expand_edge

    e2 = expand_edge(cfg.operator, cfg.family, DisorderSpec(0.5, 2.0), disc, band)
    assert e2.s_star == 0.5


def test_rayleigh_identity_with_every_component():
    cfg, disc, band, exp = edge("cosine")
    from weakdisorder.expansion import expand_edge
    from weakdisorder.operators import DifferentialTerm, PerturbationFamily

    fam = PerturbationFamily(
        L1=Multiplication(PeriodicFunction(((1, 1.0, 0.5),))),
        L2=IntegralKernel.cosine(2, 0.3),
        L3a=DifferentialTerm({(1, 1): PeriodicFunction.constant(0.1)}),
        L3b=Multiplication(PeriodicFunction.sin(2, 0.4)),
    )
    e = expand_edge(cfg.operator, fam, cfg.disorder, disc, band)
    for eps in np.linspace(0.01, 0.9, 7):
        u = upper_bound(e, eps)
        assert u == pytest.approx(rayleigh_cross_check(e, cfg.operator, disc, fam, eps), rel=1e-10)


def test_degenerate_edge_expansion():
    cfg, disc, band, exp = edge("fourth_order")
    assert exp.triple.theta0 == pytest.approx(PI, abs=1e-12)
    assert exp.multiplicity == 2
    assert np.allclose(exp.d_values, (-0.5, 0.5), atol=1e-12)
    assert exp.s_star * exp.Lambda1 == pytest.approx(-0.5, abs=1e-12)
    assert orthogonality_defect(exp) < 1e-9
    for eps in (0.01, 0.1):
        assert upper_bound(exp, eps) == pytest.approx(
            rayleigh_cross_check(exp, cfg.operator, disc, cfg.family, eps), rel=1e-10
        )


@given(
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=4),
    st.sampled_from([(-1.0, 1.0), (-2.0, 0.5), (0.0, 1.0), (0.5, 3.0)]),
)
def test_triple_minimises_the_first_order_shift(d, ends):
    disorder = DisorderSpec(*ends)
    tr = select_minimizing_triple(d, disorder)
    best = min(s * x for x in d for s in ends)
    assert tr.s_star * tr.Lambda1 == pytest.approx(best, abs=1e-9)
    assert tr.s_star in ends


def test_ties_are_broken_by_the_second_order_term():
    disorder = DisorderSpec(-1.0, 1.0)
    lam2 = {0: 0.3, 1: -0.2}
    tr = select_minimizing_triple([-1.0, 1.0], disorder, lambda i: lam2[i])
    assert tr.i0 == 1 and tr.s_star == -1.0
    # with no tie breaker the smaller index and then s_plus win
    tr = select_minimizing_triple([0.0], disorder)
    assert tr.i0 == 0 and tr.s_star == 1.0


@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4), st.floats(-1, 1))
def test_lambda3_is_the_cubic(coeffs, t):
    expected = sum(c * t**k for k, c in enumerate(coeffs))
    assert lambda3(t, coeffs) == pytest.approx(expected, abs=1e-9)


def test_second_order_inequality(cosine_edge):
    cfg, disc, band, exp = cosine_edge
    rep = second_order_check(exp, band)
    assert rep.holds and abs(rep.margin) < 1e-12
    shift = edge("constant_shift")
    with pytest.raises(PreconditionNotMet):
        second_order_check(shift[3], shift[2])
    with pytest.raises(PreconditionNotMet):
        second_order_check(exp, band, np.eye(disc.size))


def test_corrector_refuses_a_closed_gap(cosine_edge):
    cfg, disc, band, exp = cosine_edge
    H = np.eye(disc.size)
    with pytest.raises(IllConditionedSolve):
        corrector(H, 1.0, [exp.psi0], exp.psi0, H, 1.0, gap=0.0)

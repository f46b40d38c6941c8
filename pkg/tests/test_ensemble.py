import math

import numpy as np
import pytest

from weakdisorder.bands import analyze_bands
from weakdisorder.disorder import Configuration, DisorderSpec
from weakdisorder.ensemble import (
    THREADS_ENV,
    check_inclusion,
    distance_to_bands,
    enumerate_configurations,
    inclusion_stability,
    InclusionReport,
    periodic_spectrum,
    periodization_diagnostic,
    sigma_eps_bottom,
    supercell_assemble,
    supercell_grid,
)
from weakdisorder.errors import CombinatorialBlowup, EpsOutOfRange, SupercellTooLarge, ValidationError
from weakdisorder.expansion import upper_bound
from weakdisorder.grid import CellGeometry, build_grid, hermiticity_defect
from weakdisorder.operators import bloch_form, family_form

from conftest import edge

PI = math.pi


@pytest.fixture(scope="module")
def cos_cfg():
    return edge("cosine")[0]


def test_single_cell_supercell_matches_the_cell_problem(cos_cfg):
    cfg = cos_cfg
    disc = build_grid(CellGeometry(1.0), 64)
    M = supercell_assemble(cfg.operator, cfg.family, Configuration((1.0,)), 0.1, disc, 0.4)
    ref = (bloch_form(cfg.operator, disc, 0.4) + family_form(cfg.family, disc, 0.4, 0.1)).matrix()
    assert np.array_equal(M, ref)


def test_supercell_of_a_constant_configuration_folds_the_bands(cos_cfg):
    cfg = cos_cfg
    disc = cfg.supercell_grid()
    one = periodic_spectrum(cfg.operator, cfg.family, Configuration((1.0,)), 0.1, disc)
    two = periodic_spectrum(cfg.operator, cfg.family, Configuration((1.0, 1.0)), 0.1, disc)
    assert two.inf_value == pytest.approx(one.inf_value, abs=1e-14)
    assert hermiticity_defect(supercell_assemble(cfg.operator, cfg.family, Configuration((1.0, -1.0)), 0.1, disc, 0.3)) < 1e-13


def test_alternating_configuration_has_the_same_bottom(cos_cfg):
    # Neumann ground states of the two cell problems glue at the faces
    cfg = cos_cfg
    disc = cfg.supercell_grid()
    a = periodic_spectrum(cfg.operator, cfg.family, Configuration((1.0,)), 0.05, disc).inf_value
    b = periodic_spectrum(cfg.operator, cfg.family, Configuration((-1.0, 1.0)), 0.05, disc).inf_value
    assert b == pytest.approx(a, abs=1e-14)


def test_enumeration_counts():
    assert len(enumerate_configurations((-1.0, 1.0), 1)) == 2
    # primitive necklaces: 2 + 1 + 2 + 3
    assert len(enumerate_configurations((-1.0, 1.0), 4)) == 8
    assert len(enumerate_configurations((-1.0, 0.0, 1.0), 2)) == 6
    with pytest.raises(CombinatorialBlowup):
        enumerate_configurations(tuple(range(10)), 4, cap=100)
    with pytest.raises(ValidationError):
        enumerate_configurations((-1.0, 1.0), 5)


def test_enumerated_bottom_is_in_the_sandwich(cos_cfg):
    cfg, disc, band, exp = edge("cosine")
    est = sigma_eps_bottom(cfg.operator, cfg.family, cfg.disorder, 0.1, 2, cfg.supercell_grid())
    assert est.inf_estimate <= upper_bound(exp, 0.1)
    assert len(est.table()) == 3
    assert est.inf_estimate == min(v for _, v in est.table())


def test_thread_count_does_not_change_the_result(cos_cfg, monkeypatch):
    cfg = cos_cfg
    d = DisorderSpec(-1.0, 1.0, (-1.0, 0.0, 1.0))
    monkeypatch.setenv(THREADS_ENV, "1")
    a = sigma_eps_bottom(cfg.operator, cfg.family, d, 0.1, 2, cfg.supercell_grid(), 4)
    monkeypatch.setenv(THREADS_ENV, "4")
    b = sigma_eps_bottom(cfg.operator, cfg.family, d, 0.1, 2, cfg.supercell_grid(), 4)
    assert a.inf_estimate == b.inf_estimate
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ValidationError):
        sigma_eps_bottom(cfg.operator, cfg.family, d, 0.1, 1, cfg.supercell_grid(), 4)


def test_exact_shift_in_a_supercell():
    cfg = edge("constant_shift")[0]
    spec = periodic_spectrum(cfg.operator, cfg.family, Configuration((-1.0, -1.0, -1.0)), 0.1, cfg.supercell_grid())
    assert spec.inf_value == pytest.approx(-0.1, abs=1e-12)


def test_supercell_limits(cos_cfg):
    cfg = cos_cfg
    with pytest.raises(SupercellTooLarge):
        supercell_grid(build_grid(CellGeometry(1.0), 4096), 4)
    with pytest.raises(EpsOutOfRange):
        periodic_spectrum(cfg.operator, cfg.family, Configuration((1.0,)), 2.0, cfg.supercell_grid())


def test_periodization_diagnostic(cos_cfg):
    cfg = cos_cfg
    sample = [1.0, -1.0, -1.0, 1.0]
    out = periodization_diagnostic(cfg.operator, cfg.family, sample, 0.1, cfg.supercell_grid(), 2, 4)
    assert [n for n, _ in out] == [1, 2]
    assert all(np.isfinite(v) for _, v in out)


def test_inclusion_report(cos_cfg):
    cfg = cos_cfg
    band = analyze_bands(cfg.operator, cfg.grid(64), 32, 6)
    spectra = [periodic_spectrum(cfg.operator, cfg.family, Configuration((1.0, -1.0, -1.0, 1.0)), e, cfg.supercell_grid(), 16, 16, False) for e in (0.1, 0.05)]
    reps = [check_inclusion([s], band, s.eps) for s in spectra]
    assert all(r.n_eigenvalues > 0 for r in reps)
    # eigenvalues only leave [0, inf) below zero, by O(eps^2)
    assert reps[1].max_distance < reps[0].max_distance
    assert inclusion_stability(reps) <= 2.0
    with pytest.raises(ValidationError):
        check_inclusion(spectra[:1], band, 0.1, cap=1e4)


def test_distance_to_bands():
    d = distance_to_bands(np.array([-1.0, 0.5, 3.0, 7.0]), [(0.0, 1.0), (2.0, 5.0)])
    assert np.array_equal(d, [1.0, 0.0, 0.0, 2.0])
    assert inclusion_stability([InclusionReport(0.1, 1, 0.0, 0.0), InclusionReport(0.05, 1, 0.0, 0.0)]) == 1.0

"""One test per acceptance criterion, each at its stated tolerance."""

from weakdisorder import acceptance as A

from conftest import ACCEPTANCE_LINES


def _record(result, limit_seconds):
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line
    assert result.seconds < limit_seconds, f"took {result.seconds:.1f} s"


def test_criterion_1_free_operator_baseline():
    _record(A.free_baseline(), 1.0)


def test_criterion_2_cosine_coefficients():
    _record(A.cosine_oracle(), 5.0)


def test_criterion_3_sandwich_and_order():
    result, report = A.sandwich_and_order()
    if report is not None:
        print(report.summary())
    _record(result, 60.0)


def test_criterion_4_exact_shift():
    _record(A.exact_shift(), 5.0)


def test_criterion_5_rayleigh_identity():
    _record(A.rayleigh_identity(), 2.0)


def test_criterion_6_second_order_inequality():
    _record(A.second_order_inequality(), 5.0)


def test_criterion_7_resolvent_inclusion():
    _record(A.resolvent_inclusion(), 90.0)


def test_criterion_8_structural_invariants():
    _record(A.structural_invariants(), 30.0)

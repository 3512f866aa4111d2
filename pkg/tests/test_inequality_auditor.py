"""
Inequality audit: individual checks, dimension guards, the report schema and its serializations.
"""

import json

import pytest

from reduction_tools.errors import DomainError
from reduction_tools.inequality_auditor import (AUDIT_LABELS, CheckStatus, InequalityCheck, Relation, ReportFormat,
                                                VerificationReport, audit_dimension, audit_range, emit_report,
                                                make_check, parse_report, report_to_dict)


@pytest.fixture(scope="module")
def report_n3():
    return audit_dimension(3, mesh=400)


@pytest.fixture(scope="module")
def report_n6():
    return audit_dimension(6, mesh=400)


class TestMakeCheck:

    def test_strict_relations(self):
        assert make_check("x", 3, 1.0, 2.0, Relation.LT).passed
        assert not make_check("x", 3, 2.0, 2.0, Relation.LT).passed
        assert make_check("x", 3, 2.0, 1.0, Relation.GT).margin == pytest.approx(1.0)

    def test_non_strict_relations_allow_round_off(self):
        check = make_check("x", 3, 1.0 + 1e-15, 1.0, Relation.LE)
        assert check.passed
        assert check.status is CheckStatus.PASSED
        assert not make_check("x", 3, 1.0 + 1e-10, 1.0, Relation.LE).passed

    def test_non_finite_values_fail(self):
        check = make_check("x", 3, float("nan"), 1.0, Relation.GE)
        assert not check.passed
        assert check.margin is None
        assert check.note == "non-finite value"
        assert check.lhs is None and check.rhs == 1.0
        assert check.status is CheckStatus.FAILED

    def test_infinite_side_fails_and_serializes_as_null(self):
        check = make_check("x", 3, float("inf"), 1.0, Relation.LT)
        assert not check.passed
        payload = json.loads(emit_report(VerificationReport((3, 3), [check]), ReportFormat.JSON))
        item = payload["checks"][0]
        assert item["lhs"] is None and item["margin"] is None
        assert item["rhs"] == 1.0
        assert item["passed"] is False and item["status"] == "FAILED"
        assert payload["all_passed"] is False
        assert parse_report(emit_report(VerificationReport((3, 3), [check]))).checks[0] == check

    def test_dict_conversion(self):
        check = make_check("x", 5, 1.0, 2.0, Relation.LT, witness=0.5)
        assert InequalityCheck.from_dict(check.to_dict()) == check
        assert "note" not in check.to_dict()


class TestAuditDimension:

    def test_labels_are_in_order(self, report_n3):
        assert [check.name for check in report_n3.checks] == list(AUDIT_LABELS)
        assert report_n3.dimension_range == (3, 3)

    def test_three_dimensions_pass(self, report_n3):
        assert report_n3.all_passed, [check.to_dict() for check in report_n3.failed()]

    def test_guarded_checks_are_skipped_in_three_dimensions(self, report_n3):
        for name in ("first", "sob", "sob_tail", "mum_auxiliary", "two_bound", "an1", "an3", "two_tail_term"):
            check = report_n3.by_name(name)
            assert check.status is CheckStatus.SKIPPED
            assert check.passed

    def test_explicit_rational_check_agrees_with_chi(self, report_n3):
        assert report_n3.by_name("one").passed
        assert report_n3.by_name("one_explicit").passed
        assert report_n3.by_name("one").lhs == pytest.approx(-2.2714, abs=1e-4)

    def test_boundary_signs_at_reference_radii(self, report_n3):
        assert report_n3.by_name("mum").lhs == pytest.approx(0.39716, abs=1e-5)
        assert report_n3.by_name("m_golden").lhs == pytest.approx(-0.206114, abs=1e-6)
        assert report_n3.by_name("big_m_rho2").margin > 0

    def test_emme_formula_matches_direct_value(self, report_n3):
        for index in (1, 2):
            direct = report_n3.by_name(f"emme_direct_rho{index}").lhs
            formula = report_n3.by_name(f"emme_formula_rho{index}").lhs
            assert formula == pytest.approx(direct, rel=1e-8)

    def test_divergence_rates(self, report_n3):
        assert report_n3.by_name("limiti_rho0_rate").lhs == pytest.approx(0.5, abs=0.05)
        assert report_n3.by_name("limiti_one_rate").lhs == pytest.approx(1.0, abs=0.1)

    def test_six_dimensions(self, report_n6):
        assert report_n6.all_passed, [check.to_dict() for check in report_n6.failed()]
        assert report_n6.by_name("an3").lhs == pytest.approx(0.782, abs=1e-3)
        an1 = report_n6.by_name("an1")
        assert an1.lhs == pytest.approx(0.9803, abs=1e-3)
        assert an1.rhs == pytest.approx(0.652, abs=1e-3)
        assert report_n6.by_name("two_tail_term").status is CheckStatus.SKIPPED

    def test_four_dimensions_reduced_bound(self):
        report = audit_dimension(4, mesh=200)
        assert report.by_name("sob_tail").lhs == pytest.approx(-0.678, abs=1e-3)
        assert report.by_name("sob_reduced").passed

    @pytest.mark.parametrize("N", [4, 5, 7, 8, 12, 20])
    def test_dimension_passes(self, N):
        report = audit_dimension(N, mesh=200)
        assert report.all_passed, [check.to_dict() for check in report.failed()]

    def test_dimension_below_three(self):
        with pytest.raises(DomainError):
            audit_dimension(2)


class TestAuditRange:

    def test_range_concatenates_dimensions(self):
        report = audit_range(3, 5, mesh=200)
        assert report.dimension_range == (3, 5)
        assert len(report.checks) == 3 * len(AUDIT_LABELS)
        assert {check.dimension for check in report.checks} == {3, 4, 5}

    def test_parallel_range_matches_serial(self):
        serial = audit_range(3, 4, mesh=200)
        parallel = audit_range(3, 4, mesh=200, workers=2)
        assert [c.to_dict() for c in parallel.checks] == [c.to_dict() for c in serial.checks]

    def test_invalid_range(self):
        with pytest.raises(DomainError):
            audit_range(5, 4)


class TestReportFormats:

    def test_json_schema(self, report_n3):
        payload = json.loads(emit_report(report_n3, ReportFormat.JSON))
        assert list(payload) == ["dimension_range", "all_passed", "checks", "runtime_ms"]
        assert payload["dimension_range"] == [3, 3]
        first = payload["checks"][0]
        assert {"name", "dimension", "lhs", "rhs", "relation", "margin", "passed", "status"} <= set(first)

    def test_json_is_parsed_back(self, report_n3):
        parsed = parse_report(emit_report(report_n3))
        assert report_to_dict(parsed) == report_to_dict(report_n3)

    def test_json_floats_carry_seventeen_digits(self):
        check = make_check("x", 3, 0.1, 0.3, Relation.LT)
        text = emit_report(VerificationReport((3, 3), [check])).decode("utf-8")
        assert '"lhs": 0.10000000000000001' in text
        assert '"rhs": 0.29999999999999999' in text
        assert parse_report(text.encode("utf-8")).checks[0] == check

    def test_text_table(self, report_n3):
        text = emit_report(report_n3, ReportFormat.TEXT).decode("utf-8")
        lines = text.strip().splitlines()
        assert len(lines) == len(AUDIT_LABELS) + 2
        assert "one_explicit" in text
        assert lines[-1].startswith("dimensions 3..3:")

    def test_failed_checks_are_listed(self):
        report = VerificationReport(dimension_range=(3, 3), checks=[
            make_check("a", 3, 1.0, 2.0, Relation.LT),
            make_check("b", 3, 3.0, 2.0, Relation.LT),
        ])
        assert not report.all_passed
        assert [check.name for check in report.failed()] == ["b"]
        assert "FAILED" in emit_report(report, ReportFormat.TEXT).decode("utf-8")

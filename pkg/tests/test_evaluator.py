"""Tests for coverage parsing and the JSON artifact round trip."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covloop.errors import ParseError
from covloop.evaluator import (
    emit_artifact,
    parse_dynamic_coverage,
    parse_gcov,
    read_artifact,
    render_artifact,
)
from covloop.model import BranchGap, CoverageReport

# Hand-built gcov text: 10 executable lines, 8 executed; 4 branch arms, 3
# taken. Expected: line 80.00, branch 75.00.
GCOV_FIXTURE = """\
        -:    0:Source:fixture.c
        -:    0:Runs:2
        -:    1:#include <stdio.h>
        2:    2:int main(void) {
        2:    3:    int x = 0;
        2:    4:    scanf("%d", &x);
call    0 returned 2
        2:    5:    if (x > 0) {
branch  0 taken 1 (fallthrough)
branch  1 taken 1
        1:    6:        x = x + 1;
        -:    7:    }
        2:    8:    if (x > 5) {
branch  0 taken 0 (fallthrough)
branch  1 taken 2
    #####:    9:        x = 0;
        -:   10:    }
        2:   11:    printf("%d", x);
        2:   12:    x = x - 1;
    #####:   13:    return x;
        -:   14:}
"""


class TestParseGcov:
    def test_hand_computed_percentages(self):
        report = parse_gcov(GCOV_FIXTURE)
        assert report.executed_lines == frozenset({2, 3, 4, 5, 6, 8, 11, 12})
        assert report.missing_lines == frozenset({9, 13})
        assert report.line_coverage == 80.0
        assert report.total_branches == 4
        assert report.taken_branches == 3
        assert report.branch_coverage == 75.0
        assert report.missing_branches == (BranchGap(line=8, branch_id=0),)

    def test_no_branch_annotations_means_full_branch_coverage(self):
        text = "        1:    1:int x = 0;\n"
        report = parse_gcov(text)
        assert report.branch_coverage == 100.0
        assert report.total_branches == 0

    def test_all_lines_unexecuted(self):
        text = "    #####:    1:a;\n    #####:    2:b;\n"
        report = parse_gcov(text)
        assert report.line_coverage == 0.0
        assert report.executed_lines == frozenset()

    def test_never_executed_branch_is_a_gap(self):
        text = "        1:    4:if (x) {\nbranch  0 never executed\n"
        report = parse_gcov(text)
        assert report.missing_branches == (BranchGap(line=4, branch_id=0),)

    def test_percentage_style_branch_counts(self):
        text = (
            "        3:    4:if (x) {\n"
            "branch  0 taken 60%\n"
            "branch  1 taken 0%\n"
        )
        report = parse_gcov(text)
        assert report.taken_branches == 1
        assert report.total_branches == 2

    def test_exceptional_marker_counts_as_missing(self):
        text = "    =====:    3:throw_helper();\n"
        assert parse_gcov(text).missing_lines == frozenset({3})

    def test_unrecognizable_count_column_raises(self):
        junk = "    ??%%x:   12:    something();\n"
        with pytest.raises(ParseError) as exc:
            parse_gcov(junk)
        assert junk[:50].rstrip("\n") in str(exc.value) or "??%%x" in str(exc.value)

    def test_tool_chatter_ignored(self):
        text = (
            "function main called 2 returned 100% blocks executed 83%\n"
            "        2:    3:int main(void) {\n"
            "call    0 returned 2\n"
            "Creating 'fixture.c.gcov'\n"
        )
        report = parse_gcov(text)
        assert report.executed_lines == frozenset({3})

    def test_asterisk_suffix_on_counts(self):
        text = "        4*:    7:partial();\n"
        assert parse_gcov(text).executed_lines == frozenset({7})


class TestParseDynamicCoverage:
    def export(self, executed, missing, total, covered, gaps):
        return {
            "format": "covloop-pytrace-v1",
            "executed_lines": executed,
            "missing_lines": missing,
            "branches": {"total": total, "covered": covered, "missing": gaps},
        }

    def test_line_percent_from_arrays(self):
        report = parse_dynamic_coverage(self.export([1, 2, 4], [3], 0, 0, []))
        assert report.line_coverage == 75.0

    def test_all_branches_covered(self):
        report = parse_dynamic_coverage(self.export([1], [], 6, 6, []))
        assert report.branch_coverage == 100.0
        assert report.missing_branches == ()

    def test_single_missing_arm(self):
        report = parse_dynamic_coverage(
            self.export([1, 2], [], 2, 1, [{"line": 1, "branch_id": 1}])
        )
        assert report.branch_coverage == 50.0
        assert report.missing_branches == (BranchGap(line=1, branch_id=1),)

    def test_schema_mismatch_raises(self):
        with pytest.raises(ParseError):
            parse_dynamic_coverage({"lines": [1]})

    def test_inconsistent_counters_raise(self):
        with pytest.raises(ParseError):
            parse_dynamic_coverage(self.export([1], [], 4, 1, []))

    def test_overlapping_lines_raise(self):
        with pytest.raises(ParseError):
            parse_dynamic_coverage(self.export([1], [1], 0, 0, []))


def report_of(executed, missing, total, taken, gaps=()):
    return CoverageReport(
        executed_lines=frozenset(executed),
        missing_lines=frozenset(missing),
        total_branches=total,
        taken_branches=taken,
        missing_branches=tuple(gaps),
    )


class TestArtifact:
    def test_two_decimal_rendering(self, tmp_path):
        report = report_of({1, 2, 3, 4}, {5}, 4, 3, [BranchGap(2, 1)])
        path = emit_artifact(report, tmp_path / "cov.json")
        text = path.read_text()
        assert '"line_coverage": 80.00' in text
        assert '"branch_coverage": 75.00' in text
        assert '"total_coverage": 77.50' in text

    def test_degenerate_report_is_all_full(self, tmp_path):
        path = emit_artifact(report_of((), (), 0, 0), tmp_path / "cov.json")
        text = path.read_text()
        assert '"executed_lines": []' in text
        assert '"total_coverage": 100.00' in text

    def test_round_trip_identity(self, tmp_path):
        report = report_of({1, 3}, {2}, 2, 1, [BranchGap(3, 0)])
        path = emit_artifact(report, tmp_path / "cov.json")
        assert read_artifact(path) == report

    def test_gap_entries_carry_taken_flag(self):
        text = render_artifact(report_of({1}, (), 1, 0, [BranchGap(1, 0)]))
        assert '"taken": false' in text


reports = st.builds(
    lambda executed, missing_extra, gaps: CoverageReport(
        executed_lines=frozenset(executed),
        missing_lines=frozenset(n + 1000 for n in missing_extra),
        total_branches=len(gaps) + len(executed),
        taken_branches=len(executed),
        missing_branches=tuple(
            BranchGap(line=line, branch_id=arm) for line, arm in sorted(set(gaps))
        ),
    ),
    st.sets(st.integers(1, 500), max_size=40),
    st.sets(st.integers(1, 500), max_size=40),
    st.sets(
        st.tuples(st.integers(1, 500), st.integers(0, 3)), max_size=20
    ),
)


@settings(max_examples=100)
@given(reports)
def test_artifact_round_trip_for_randomized_reports(tmp_path_factory, report):
    path = tmp_path_factory.mktemp("artifacts") / "cov.json"
    emit_artifact(report, path)
    assert read_artifact(path) == report

"""Normalization of raw coverage outputs into CoverageReport, plus the JSON
coverage artifact consumed by the feedback agents and report generator."""

from __future__ import annotations

import json
import re
from pathlib import Path

from .errors import ParseError, PersistError
from .model import BranchGap, CoverageReport, format_pct

_GCOV_SOURCE_LINE = re.compile(r"^\s*(\S+):\s*(\d+):(.*)$")
_GCOV_BRANCH = re.compile(
    r"^branch\s+(\d+)\s+(?:taken\s+(\d+)%?(?:\s.*)?|never executed.*)$"
)


def parse_gcov(report_text: str) -> CoverageReport:
    """Parse branch-annotated gcov text (`gcov -b -c` style output).

    Executable lines with a positive count are executed; `#####`/`=====`
    markers are missing; `-` lines carry no code. Each `branch N ...`
    annotation is one outcome arm of the most recent source line, covered
    as soon as its taken count is positive.
    """
    executed: set[int] = set()
    missing: set[int] = set()
    gaps: list[BranchGap] = []
    total_branches = 0
    taken_branches = 0
    current_line = 0

    for raw in report_text.splitlines():
        m = _GCOV_SOURCE_LINE.match(raw)
        if m:
            count_token, lineno_text = m.group(1), m.group(2)
            lineno = int(lineno_text)
            if lineno == 0:  # preamble: Source/Graph/Data/Runs headers
                continue
            current_line = lineno
            count_token = count_token.rstrip("*")
            if count_token == "-":
                continue
            if count_token in ("#####", "====="):
                missing.add(lineno)
            elif count_token.isdigit() or (
                count_token.startswith("-") and count_token[1:].isdigit()
            ):
                if int(count_token) > 0:
                    executed.add(lineno)
                else:
                    missing.add(lineno)
            else:
                raise ParseError(
                    f"unrecognizable line-count column in gcov output: {raw[:50]!r}"
                )
            continue
        b = _GCOV_BRANCH.match(raw)
        if b:
            total_branches += 1
            count = b.group(2)
            if count is not None and int(count) > 0:
                taken_branches += 1
            else:
                gaps.append(BranchGap(line=current_line, branch_id=int(b.group(1))))
            continue
        # anything else: call/function annotations and tool chatter

    return CoverageReport(
        executed_lines=frozenset(executed),
        missing_lines=frozenset(missing),
        total_branches=total_branches,
        taken_branches=taken_branches,
        missing_branches=tuple(gaps),
    )


def parse_dynamic_coverage(export: dict) -> CoverageReport:
    """Normalize the tracer's machine-readable export for Python targets."""
    try:
        executed = frozenset(int(l) for l in export["executed_lines"])
        missing = frozenset(int(l) for l in export["missing_lines"])
        branches = export["branches"]
        total = int(branches["total"])
        covered = int(branches["covered"])
        gaps = tuple(
            BranchGap(line=int(g["line"]), branch_id=int(g["branch_id"]))
            for g in branches["missing"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"coverage export does not match expected schema: {exc}") from exc
    if executed & missing:
        raise ParseError("coverage export lists lines as both executed and missing")
    if len(gaps) != total - covered:
        raise ParseError(
            f"coverage export branch counters disagree: total {total}, "
            f"covered {covered}, missing arms {len(gaps)}"
        )
    return CoverageReport(
        executed_lines=executed,
        missing_lines=missing,
        total_branches=total,
        taken_branches=covered,
        missing_branches=gaps,
    )


def artifact_dict(report: CoverageReport) -> dict:
    """The coverage artifact as a plain dict (percentages still floats)."""
    return {
        "executed_lines": sorted(report.executed_lines),
        "missing_lines": sorted(report.missing_lines),
        "missing_branches": [
            {"line": g.line, "branch_id": g.branch_id, "taken": g.taken}
            for g in report.missing_branches
        ],
        "total_branches": report.total_branches,
        "taken_branches": report.taken_branches,
        "line_coverage": report.line_coverage,
        "branch_coverage": report.branch_coverage,
        "total_coverage": report.total_coverage,
    }


def render_artifact(report: CoverageReport) -> str:
    """Artifact JSON text with percentage fields rendered to two decimals."""
    data = artifact_dict(report)
    parts = []
    for key, value in data.items():
        if key.endswith("_coverage"):
            rendered = format_pct(value)
        else:
            rendered = json.dumps(value, separators=(", ", ": "))
        parts.append(f'  "{key}": {rendered}')
    return "{\n" + ",\n".join(parts) + "\n}\n"


def emit_artifact(report: CoverageReport, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.write_text(render_artifact(report), encoding="utf-8")
    except OSError as exc:
        raise PersistError(f"cannot write coverage artifact {path}: {exc}") from exc
    return path


def read_artifact(path: str | Path) -> CoverageReport:
    """Inverse of emit_artifact; percentages are recomputed from raw fields."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise PersistError(f"cannot read coverage artifact {path}: {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"coverage artifact {path} is not valid JSON: {exc}") from exc
    try:
        return CoverageReport(
            executed_lines=frozenset(data["executed_lines"]),
            missing_lines=frozenset(data["missing_lines"]),
            total_branches=int(data["total_branches"]),
            taken_branches=int(data["taken_branches"]),
            missing_branches=tuple(
                BranchGap(line=g["line"], branch_id=g["branch_id"])
                for g in data["missing_branches"]
            ),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"coverage artifact {path} is missing fields: {exc}") from exc

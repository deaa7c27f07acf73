"""The bounded generate/execute/evaluate/refine loop for one target.

Per iteration: render the prompt (baseline plus the latest focus section and
cache summary), ask the generator for candidates, keep only novel ones,
persist and execute them against the cumulative instrumented target, evaluate
coverage, and stop once the combined line/branch percentage reaches the
threshold or the iteration cap runs out. Otherwise both gap analysts run (in
parallel, each only when its gap set is non-empty) and their refinements
replace the focus section for the next round.

Only newly added cases are executed each iteration: instrumentation counters
accumulate, so re-running the whole suite would change nothing except cost.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import agents, evaluator, harness
from .analyzer import detect_language, extract_input_signature
from .backends import CompletionBackend, SchemaId, make_backend
from .cache import TestSuiteCache
from .errors import BackendError
from .model import (
    CoverageReport,
    FeedbackRefinement,
    IterationRecord,
    Language,
    RunConfig,
    Termination,
    format_pct,
)
from .prompts import build_baseline_prompt, merge_refinements

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    final_report: CoverageReport
    iterations: list[IterationRecord]
    termination: Termination
    total_duration: float
    executed_processes: int
    stagnated: bool
    cache: TestSuiteCache
    workdir: Path


def run_loop(
    config: RunConfig,
    source_path: str | Path,
    backend: CompletionBackend | None = None,
) -> RunResult:
    """Run the feedback loop over one target source file.

    A backend instance may be injected (tests rely on this); otherwise one is
    built from the config. Backend failures terminate the loop with the
    coverage observed so far rather than raising.
    """
    started = time.monotonic()
    source_path = Path(source_path)
    language = detect_language(source_path)
    source = source_path.read_text(encoding="utf-8")
    signature, warnings = extract_input_signature(source, language)
    for warning in warnings:
        log.info("analyzer: %s (line %s)", warning.message, warning.line)

    backend = backend or make_backend(config)
    target = harness.prepare_target(source_path, language, config.workdir)
    prompts_dir = target.workdir / "prompts"
    prompts_dir.mkdir(parents=True, exist_ok=True)

    cache = TestSuiteCache()
    line_fb: FeedbackRefinement | None = None
    branch_fb: FeedbackRefinement | None = None
    records: list[IterationRecord] = []
    report = _evaluate(target)
    termination = Termination.K_MAX_REACHED
    executed = 0
    zero_novel_streak = 0
    stagnated = False
    previous_gaps: tuple[frozenset[int], tuple] | None = None

    for k in range(config.k_max):
        iter_started = time.monotonic()
        bundle = build_baseline_prompt(
            signature, cache.summary_for_prompt(config.cache_prompt_limit)
        )
        bundle = merge_refinements(bundle, line_fb, branch_fb)
        prompt_text = bundle.render()
        (prompts_dir / f"iter_{k}.txt").write_text(prompt_text, encoding="utf-8")

        try:
            response = agents.complete(backend, prompt_text, SchemaId.TEST_CASES)
        except BackendError as exc:
            log.error("generation backend failed at iteration %d: %s", k, exc)
            termination = Termination.BACKEND_FAILURE
            break

        novel = agents.parse_and_filter(response, cache, signature.count)
        since = len(cache)
        for tc in novel:
            cache.insert_if_novel(tc)
        cache.persist_novel(target.testcases_dir, since)

        for tc in novel:
            outcome = harness.run_test(target, tc, config.per_test_timeout)
            executed += 1
            if outcome.timed_out:
                log.info("iteration %d: test timed out after %.1fs", k, outcome.duration)
            elif outcome.exit_status:
                log.info("iteration %d: test exited with %s", k, outcome.exit_status)

        report = _evaluate(target)
        evaluator.emit_artifact(report, target.coverage_dir / f"iter_{k}.json")
        records.append(
            IterationRecord(
                k=k,
                novel_tests=len(novel),
                line_coverage=report.line_coverage,
                branch_coverage=report.branch_coverage,
                total_coverage=report.total_coverage,
                duration=time.monotonic() - iter_started,
            )
        )
        log.info(
            "iteration %d: %d novel cases, line %s%%, branch %s%%",
            k, len(novel), format_pct(report.line_coverage),
            format_pct(report.branch_coverage),
        )

        gaps_now = (report.missing_lines, report.missing_branches)
        zero_novel_streak = zero_novel_streak + 1 if not novel else 0
        if zero_novel_streak >= 2 and gaps_now == previous_gaps:
            stagnated = True
        previous_gaps = gaps_now

        if report.total_coverage >= config.threshold:
            termination = Termination.THRESHOLD_MET
            break

        try:
            line_fb, branch_fb = _gather_feedback(
                config, backend, source, report, prompt_text
            )
        except BackendError as exc:
            log.error("feedback backend failed at iteration %d: %s", k, exc)
            termination = Termination.BACKEND_FAILURE
            break

    result = RunResult(
        final_report=report,
        iterations=records,
        termination=termination,
        total_duration=time.monotonic() - started,
        executed_processes=executed,
        stagnated=stagnated,
        cache=cache,
        workdir=target.workdir,
    )
    _write_result(result)
    return result


def _evaluate(target: harness.PreparedTarget) -> CoverageReport:
    raw = harness.collect_raw_coverage(target)
    if target.language is Language.C:
        return evaluator.parse_gcov(raw)
    return evaluator.parse_dynamic_coverage(raw)


def _gather_feedback(
    config: RunConfig,
    backend: CompletionBackend,
    source: str,
    report: CoverageReport,
    prompt_text: str,
) -> tuple[FeedbackRefinement | None, FeedbackRefinement | None]:
    """Run both analysts for this iteration's gaps, concurrently when both apply."""
    want_line = config.line_feedback_enabled and bool(report.missing_lines)
    want_branch = config.branch_feedback_enabled and bool(report.missing_branches)
    if want_line and want_branch:
        with ThreadPoolExecutor(max_workers=2) as pool:
            line_future = pool.submit(
                agents.line_feedback, backend, source,
                report.missing_lines, prompt_text,
            )
            branch_future = pool.submit(
                agents.branch_feedback, backend, source,
                list(report.missing_branches), prompt_text,
            )
            return line_future.result(), branch_future.result()
    line_fb = (
        agents.line_feedback(backend, source, report.missing_lines, prompt_text)
        if want_line else None
    )
    branch_fb = (
        agents.branch_feedback(
            backend, source, list(report.missing_branches), prompt_text
        )
        if want_branch else None
    )
    return line_fb, branch_fb


def result_dict(result: RunResult) -> dict:
    return {
        "termination": result.termination.value,
        "total_duration_sec": round(result.total_duration, 3),
        "executed_processes": result.executed_processes,
        "stagnated": result.stagnated,
        "test_cases": len(result.cache),
        "final_coverage": {
            "line_coverage": float(format_pct(result.final_report.line_coverage)),
            "branch_coverage": float(format_pct(result.final_report.branch_coverage)),
            "total_coverage": float(format_pct(result.final_report.total_coverage)),
        },
        "iterations": [
            {
                "k": r.k,
                "novel_tests": r.novel_tests,
                "line_coverage": float(format_pct(r.line_coverage)),
                "branch_coverage": float(format_pct(r.branch_coverage)),
                "total_coverage": float(format_pct(r.total_coverage)),
                "duration_sec": round(r.duration, 3),
            }
            for r in result.iterations
        ],
    }


def _write_result(result: RunResult) -> None:
    path = result.workdir / "result.json"
    path.write_text(
        json.dumps(result_dict(result), indent=2) + "\n", encoding="utf-8"
    )

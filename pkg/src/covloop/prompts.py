"""Generation-prompt construction and refinement merging.

The baseline prompt states exactly how many stdin values the target reads and
of which kinds, demands a strict JSON reply, and echoes already-generated
values. Feedback from the two gap analysts is merged into a single
"Additional Focus Areas" section that replaces (never accumulates on top of)
the previous iteration's section, keeping prompts bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .model import FeedbackRefinement, InputSignature

OPENING = "Generate diverse test values for the following program."
DIVERSITY_INSTRUCTION = (
    "Include diverse cases: boundary chars, negative integers, large extremes."
)
OUTPUT_FORMAT_INSTRUCTION = (
    'Output format must be a JSON object with a "test_cases" key '
    "containing a list of lists."
)
CACHE_HEADER = "Previously generated values:"
FOCUS_HEADER = "Additional Focus Areas:"


@dataclass(frozen=True)
class FocusEntry:
    """One agent's contribution to the focus section."""

    label: str
    gap_explanation: str
    refinements: tuple[str, ...]


@dataclass(frozen=True)
class PromptBundle:
    """The structured generation prompt for one iteration."""

    base_text: str
    input_section: str
    cache_section: str
    focus_section: str | None
    signature: InputSignature

    def render(self) -> str:
        parts = [
            self.base_text,
            self.input_section,
            DIVERSITY_INSTRUCTION,
            OUTPUT_FORMAT_INSTRUCTION,
            self.cache_section,
        ]
        if self.focus_section is not None:
            parts.append(self.focus_section)
        return "\n".join(parts)


def build_baseline_prompt(sig: InputSignature, cache_summary: str) -> PromptBundle:
    """Render the iteration-0 prompt for a signature and cache summary."""
    lines = [f"IMPORTANT: This program calls input exactly {sig.count} times."]
    lines.append("Detailed input types (in order):")
    for i, kind in enumerate(sig.kinds, start=1):
        lines.append(f"  Input #{i}: expects {kind.value}")
    cache_section = f"{CACHE_HEADER} {cache_summary}" if cache_summary else CACHE_HEADER
    return PromptBundle(
        base_text=OPENING,
        input_section="\n".join(lines),
        cache_section=cache_section,
        focus_section=None,
        signature=sig,
    )


def merge_refinements(
    base: PromptBundle,
    line_fb: FeedbackRefinement | None = None,
    branch_fb: FeedbackRefinement | None = None,
) -> PromptBundle:
    """Attach both agents' refinements as one focus section, line before branch.

    The section replaces whatever focus the bundle had: refinements are
    assigned per iteration, not appended across iterations. With no feedback
    at all the bundle renders identically to the baseline.
    """
    entries = []
    if line_fb is not None:
        entries.append(
            FocusEntry("line coverage", line_fb.gap_explanation,
                       tuple(line_fb.prompt_refinements))
        )
    if branch_fb is not None:
        entries.append(
            FocusEntry("branch coverage", branch_fb.gap_explanation,
                       tuple(branch_fb.prompt_refinements))
        )
    if not entries:
        return replace(base, focus_section=None)

    lines = [FOCUS_HEADER]
    for entry in entries:
        explanation = " ".join(entry.gap_explanation.split()) or "coverage gap"
        lines.append(f"- [{entry.label}] {explanation}")
        for refinement in entry.refinements:
            lines.append(f"- {refinement}")
    return replace(base, focus_section="\n".join(lines))

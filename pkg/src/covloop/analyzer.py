"""Input-signature extraction from target source text.

The scan is lexical, not a full parse: comments and string-literal contents
are blanked out first (placeholders keep offsets stable), then read sites are
matched by pattern. Reads inside loops are counted once per textual site and
flagged with a warning, since their runtime repetition count is not statically
known here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import UnsupportedLanguage
from .model import InputKind, InputSignature, Language


@dataclass(frozen=True)
class AnalyzerWarning:
    message: str
    line: int | None = None


_EXTENSIONS = {".c": Language.C, ".py": Language.PYTHON}


def detect_language(path: str | Path) -> Language:
    suffix = Path(path).suffix
    try:
        return _EXTENSIONS[suffix]
    except KeyError:
        raise UnsupportedLanguage(
            f"unsupported extension {suffix!r} for {path} (expected .c or .py)"
        ) from None


def extract_input_signature(
    source: str, language: Language
) -> tuple[InputSignature, list[AnalyzerWarning]]:
    """Count stdin reads and classify each one, in source order."""
    if language is Language.PYTHON:
        kinds, warnings = _scan_python(source)
    else:
        kinds, warnings = _scan_c(source)
    sig = InputSignature(
        count=len(kinds), kinds=tuple(kinds), target_language=language
    )
    return sig, warnings


# --- Python scanning ---

_PY_READ = re.compile(r"(?:\b(int|float)\s*\(\s*)?\binput\s*\(")
_PY_LOOP_HEADER = re.compile(r"^\s*(?:while|for)\b")
_PY_BLOCK_HEADER = re.compile(r"^\s*(?:def|class|if|elif|else|try|except|finally|with)\b")


def _scan_python(source: str) -> tuple[list[InputKind], list[AnalyzerWarning]]:
    blanked = _blank_python(source)
    kinds: list[InputKind] = []
    warnings: list[AnalyzerWarning] = []
    for m in _PY_READ.finditer(blanked):
        lineno = blanked.count("\n", 0, m.start()) + 1
        cast = m.group(1)
        if cast == "int":
            kinds.append(InputKind.INTEGER)
        elif cast == "float":
            kinds.append(InputKind.FLOAT)
        else:
            kinds.append(InputKind.STRING)
        if _python_line_in_loop(blanked, lineno):
            warnings.append(
                AnalyzerWarning(
                    "stdin read inside a loop; counted once per textual site",
                    line=lineno,
                )
            )
    if re.search(r"\bsys\s*\.\s*stdin\b", blanked):
        warnings.append(AnalyzerWarning("direct sys.stdin access is not classified"))
    return kinds, warnings


def _python_line_in_loop(blanked: str, lineno: int) -> bool:
    """Climb enclosing blocks by indentation; true when any is a loop header."""
    lines = blanked.split("\n")
    indent = _indent_of(lines[lineno - 1])
    for i in range(lineno - 2, -1, -1):
        line = lines[i]
        if not line.strip():
            continue
        this_indent = _indent_of(line)
        if this_indent < indent:
            if _PY_LOOP_HEADER.match(line):
                return True
            if not _PY_BLOCK_HEADER.match(line):
                return False
            indent = this_indent
            if indent == 0:
                return False
    return False


def _indent_of(line: str) -> int:
    return len(line) - len(line.lstrip(" \t"))


def _blank_python(source: str) -> str:
    """Replace comment and string-literal contents with spaces, same length."""
    out = list(source)
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "#":
            while i < n and source[i] != "\n":
                out[i] = " "
                i += 1
        elif ch in "\"'":
            quote = source[i : i + 3] if source[i : i + 3] in ('"""', "'''") else ch
            i += len(quote)
            while i < n:
                if source[i] == "\\":
                    out[i] = " "
                    if i + 1 < n:
                        out[i + 1] = " "
                    i += 2
                    continue
                if source.startswith(quote, i):
                    i += len(quote)
                    break
                if source[i] != "\n":
                    out[i] = " "
                i += 1
        else:
            i += 1
    return "".join(out)


# --- C scanning ---

# Conversion classification: only d/i/u, f, c, s are recognized; everything
# else is a read we cannot type, so it degrades to string with a warning.
_C_KIND_BY_CONV = {
    "d": InputKind.INTEGER,
    "i": InputKind.INTEGER,
    "u": InputKind.INTEGER,
    "f": InputKind.FLOAT,
    "c": InputKind.CHAR,
    "s": InputKind.STRING,
}
_C_LENGTH_MODIFIERS = set("hlLjzt")
_C_UNCOUNTED_READS = re.compile(r"\b(?:getchar|gets)\s*\(|\bfgets\s*\([^)]*\bstdin\b")


def _scan_c(source: str) -> tuple[list[InputKind], list[AnalyzerWarning]]:
    decommented = _strip_c_comments(source)
    blanked, strings = _blank_c_strings(decommented)
    kinds: list[InputKind] = []
    warnings: list[AnalyzerWarning] = []
    loop_lines = _c_loop_lines(blanked)

    for m in re.finditer(r"\b(?:scanf|fscanf)\s*\(", blanked):
        lineno = blanked.count("\n", 0, m.start()) + 1
        call = m.group(0)
        fmt = _format_string_for_call(blanked, strings, m.end(), call)
        if fmt is None:
            warnings.append(
                AnalyzerWarning("stdin read without a literal format string", lineno)
            )
            continue
        specs, unknown = _parse_conversions(fmt)
        kinds.extend(specs)
        for conv in unknown:
            warnings.append(
                AnalyzerWarning(
                    f"unclassified conversion %{conv}; treated as string", lineno
                )
            )
        if lineno in loop_lines and specs:
            warnings.append(
                AnalyzerWarning(
                    "stdin read inside a loop; counted once per textual site", lineno
                )
            )
    if _C_UNCOUNTED_READS.search(blanked):
        warnings.append(
            AnalyzerWarning("character/line read functions present but not counted")
        )
    return kinds, warnings


def _format_string_for_call(
    blanked: str, strings: dict[int, str], call_end: int, call_text: str
) -> str | None:
    """Find the format-string literal of a scanf-family call.

    For fscanf the first argument must be stdin for the call to count as a
    stdin read at all.
    """
    if "fscanf" in call_text:
        rest = blanked[call_end : call_end + 80]
        if not re.match(r"\s*stdin\s*,", rest):
            return None
    for pos in sorted(strings):
        if pos >= call_end:
            # Must be within this call's argument list, not a later statement.
            between = blanked[call_end:pos]
            if ";" in between or ")" in between:
                return None
            return strings[pos]
    return None


def _parse_conversions(fmt: str) -> tuple[list[InputKind], list[str]]:
    """Walk one format string, yielding a kind per conversion specifier."""
    kinds: list[InputKind] = []
    unknown: list[str] = []
    i, n = 0, len(fmt)
    while i < n:
        if fmt[i] != "%":
            i += 1
            continue
        i += 1
        if i < n and fmt[i] == "%":  # literal percent, not a conversion
            i += 1
            continue
        if i < n and fmt[i] == "*":  # assignment-suppressed, still consumes input
            i += 1
        while i < n and fmt[i].isdigit():  # field width
            i += 1
        while i < n and fmt[i] in _C_LENGTH_MODIFIERS:
            i += 1
        if i >= n:
            break
        conv = fmt[i]
        if conv == "[":  # scanset reads a string; skip to closing bracket
            j = i + 1
            if j < n and fmt[j] == "^":
                j += 1
            if j < n and fmt[j] == "]":
                j += 1
            while j < n and fmt[j] != "]":
                j += 1
            kinds.append(InputKind.STRING)
            unknown.append(fmt[i : min(j + 1, n)])
            i = j + 1
            continue
        kind = _C_KIND_BY_CONV.get(conv)
        if kind is None:
            kinds.append(InputKind.STRING)
            unknown.append(conv)
        else:
            kinds.append(kind)
        i += 1
    return kinds, unknown


def _strip_c_comments(source: str) -> str:
    out = list(source)
    i, n = 0, len(source)
    in_string: str | None = None
    while i < n:
        ch = source[i]
        if in_string:
            if ch == "\\":
                i += 2
                continue
            if ch == in_string:
                in_string = None
            i += 1
        elif ch in "\"'":
            in_string = ch
            i += 1
        elif source.startswith("//", i):
            while i < n and source[i] != "\n":
                out[i] = " "
                i += 1
        elif source.startswith("/*", i):
            end = source.find("*/", i + 2)
            end = n if end == -1 else end + 2
            for j in range(i, end):
                if source[j] != "\n":
                    out[j] = " "
            i = end
        else:
            i += 1
    return "".join(out)


def _blank_c_strings(source: str) -> tuple[str, dict[int, str]]:
    """Blank string/char literal contents; return {literal_start: content}."""
    out = list(source)
    strings: dict[int, str] = {}
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch in "\"'":
            start = i
            i += 1
            content: list[str] = []
            while i < n and source[i] != ch:
                if source[i] == "\\" and i + 1 < n:
                    content.append(source[i : i + 2])
                    out[i] = out[i + 1] = " "
                    i += 2
                    continue
                content.append(source[i])
                if source[i] != "\n":
                    out[i] = " "
                i += 1
            i += 1  # closing quote
            if ch == '"':
                strings[start] = "".join(content)
        else:
            i += 1
    return "".join(out), strings


def _c_loop_lines(blanked: str) -> set[int]:
    """Line numbers inside any brace-delimited loop body (best effort).

    Loop bodies without braces are not detected; the warning this feeds is
    advisory only.
    """
    loop_lines: set[int] = set()
    stack: list[bool] = []
    pending_loop = False
    paren_depth = 0
    lineno = 1
    for m in re.finditer(r"\n|[{}();]|[A-Za-z_]\w*", blanked):
        tok = m.group(0)
        if tok == "\n":
            lineno += 1
            continue
        if any(stack):
            loop_lines.add(lineno)
        if tok == "(":
            paren_depth += 1
        elif tok == ")":
            paren_depth = max(0, paren_depth - 1)
        elif tok == "{":
            stack.append(pending_loop)
            pending_loop = False
        elif tok == "}":
            if stack:
                stack.pop()
        elif tok == ";":
            if paren_depth == 0:
                pending_loop = False
        elif tok in ("for", "while", "do"):
            pending_loop = True
    return loop_lines

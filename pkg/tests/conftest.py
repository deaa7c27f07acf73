"""Shared fixture programs and scripted backends for the test suite."""

from __future__ import annotations

import json

import pytest

from covloop.backends import CompletionBackend, SchemaId, StubBackend
from covloop.model import BackendKind, RunConfig


# C target: one comparison-guarded branch pair, reachable only with 42.
GUARD_C = """\
#include <stdio.h>

int main(void) {
    int x = 0;
    scanf("%d", &x);
    if (x == 42) {
        printf("hit\\n");
    } else {
        printf("miss\\n");
    }
    return 0;
}
"""

# Python twin of the guard target.
GUARD_PY = """\
x = int(input())
if x == 42:
    print("hit")
else:
    print("miss")
"""

# Three nested guards whose bodies always run under boundary inputs, so all
# lines execute but the skip arms need the exact constants. Line feedback has
# nothing to say about this program; branch feedback is the only way in.
NESTED_GUARDS_C = """\
#include <stdio.h>

int main(void) {
    int a = 0, b = 0, c = 0;
    int t = 0;
    scanf("%d %d %d", &a, &b, &c);
    if (a != 701) {
        t += 1;
        if (b != 809) {
            t += 2;
            if (c != 911) {
                t += 3;
            }
        }
    }
    printf("%d\\n", t);
    return 0;
}
"""

# Straight-line program used where branching would only add noise.
ECHO_C = """\
#include <stdio.h>

int main(void) {
    int x = 0;
    scanf("%d", &x);
    printf("%d\\n", x);
    return 0;
}
"""

# One practically unreachable arm keeps total coverage below any threshold.
UNREACHABLE_ARM_C = """\
#include <stdio.h>

int main(void) {
    int x = 0;
    scanf("%d", &x);
    if (x == 123456789) {
        printf("secret\\n");
    }
    printf("%d\\n", x);
    return 0;
}
"""

SPIN_FOREVER_C = """\
#include <stdio.h>

int main(void) {
    int x = 0;
    scanf("%d", &x);
    while (1) {
        x = x + 1;
    }
    return 0;
}
"""

CRASH_ON_NEGATIVE_C = """\
#include <stdio.h>
#include <stdlib.h>

int main(void) {
    int x = 0;
    scanf("%d", &x);
    if (x < 0) {
        abort();
    }
    printf("%d\\n", x);
    return 0;
}
"""


@pytest.fixture
def guard_c(tmp_path):
    path = tmp_path / "guard.c"
    path.write_text(GUARD_C)
    return path


@pytest.fixture
def guard_py(tmp_path):
    path = tmp_path / "guard.py"
    path.write_text(GUARD_PY)
    return path


@pytest.fixture
def nested_guards_c(tmp_path):
    path = tmp_path / "nested.c"
    path.write_text(NESTED_GUARDS_C)
    return path


@pytest.fixture
def echo_c(tmp_path):
    path = tmp_path / "echo.c"
    path.write_text(ECHO_C)
    return path


def make_config(tmp_path, **overrides) -> RunConfig:
    defaults = dict(workdir=tmp_path / "out", backend=BackendKind.STUB)
    defaults.update(overrides)
    return RunConfig(**defaults)


class ScriptedBackend(CompletionBackend):
    """Replays a fixed list of raw completions, then repeats the last one."""

    kind = BackendKind.STUB

    def __init__(self, replies: list[str], max_retries: int = 3):
        self.model_id = "scripted"
        self.max_retries = max_retries
        self.replies = replies
        self.calls = 0

    def raw_complete(self, prompt: str, schema_id: SchemaId) -> str:
        reply = self.replies[min(self.calls, len(self.replies) - 1)]
        self.calls += 1
        return reply


class ConstantPayloadBackend(CompletionBackend):
    """Adversarial generator: the same test_cases payload forever."""

    kind = BackendKind.STUB

    def __init__(self, cases: list[list[str]], max_retries: int = 3):
        self.model_id = "constant"
        self.max_retries = max_retries
        self._generated = json.dumps({"test_cases": cases})
        self._stub = StubBackend()

    def raw_complete(self, prompt: str, schema_id: SchemaId) -> str:
        if schema_id is SchemaId.TEST_CASES:
            return self._generated
        return self._stub.raw_complete(prompt, schema_id)


class SequentialCasesBackend(CompletionBackend):
    """Emits `fresh` brand-new single-int cases per call, plus optional repeats."""

    kind = BackendKind.STUB

    def __init__(self, fresh: int, duplicate_fraction: float = 0.0,
                 max_retries: int = 3):
        self.model_id = "sequential"
        self.max_retries = max_retries
        self.fresh = fresh
        self.duplicate_fraction = duplicate_fraction
        self._next = 0
        self._stub = StubBackend()

    def raw_complete(self, prompt: str, schema_id: SchemaId) -> str:
        if schema_id is SchemaId.REFINEMENT:
            return self._stub.raw_complete(prompt, schema_id)
        cases = [[str(self._next + i)] for i in range(self.fresh)]
        self._next += self.fresh
        repeats = int(len(cases) * self.duplicate_fraction)
        cases.extend([[str(i)] for i in range(repeats)])
        return json.dumps({"test_cases": cases})

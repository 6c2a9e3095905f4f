"""Prompt rendering for every ordered pair, and boxed-answer parsing back into assertions."""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .relmodel import (
    Context,
    Domain,
    RelationAssertion,
    Source,
    VOCABULARY,
    make_assertion,
)

INCONSISTENT = "INCONSISTENT"


class TemplateId(str, Enum):
    TEMPORAL_COMPARE = "temporal_compare"
    SPATIAL_COMPARE = "spatial_compare"
    SPATIAL_WITH_CONTEXT = "spatial_with_context"
    KINSHIP_INFER = "kinship_infer"
    INCONSISTENCY_DETECT = "inconsistency_detect"


TEMPLATE_DOMAIN: Mapping[TemplateId, Domain] = {
    TemplateId.TEMPORAL_COMPARE: Domain.TEMPORAL,
    TemplateId.SPATIAL_COMPARE: Domain.SPATIAL,
    TemplateId.SPATIAL_WITH_CONTEXT: Domain.SPATIAL,
    TemplateId.KINSHIP_INFER: Domain.KINSHIP,
    TemplateId.INCONSISTENCY_DETECT: Domain.SPATIAL,
}

DEFAULT_TITLES = {
    "art": "Art Work Release Date Comparison",
    "ancient": "Historical Figures Birth Date Comparison",
    "recent": "Historical Figures Birth Date Comparison",
    "us_city": "US Locations Relative Position",
    "us_state": "US Locations Relative Position",
    "plane": "Fictional Places Relative Position",
    "kinship": "Family Relationship Analysis",
}
_FALLBACK_TITLES = {
    TemplateId.TEMPORAL_COMPARE: "Event Date Comparison",
    TemplateId.SPATIAL_COMPARE: "Relative Position",
    TemplateId.SPATIAL_WITH_CONTEXT: "Fictional Places Relative Position",
    TemplateId.KINSHIP_INFER: "Family Relationship Analysis",
    TemplateId.INCONSISTENCY_DETECT: "Inconsistent Information Relative Position",
}

_TEMPORAL = """# Task: {title}
Analyze the dates of {A} and {B}, then decide whether {A} is before or after {B}.

# Example Format:
## Step-by-step analysis:
... (detailed reasoning here) ...
## Answer:
{A} is \\boxed{...} {B}.

# Important Notes:
- The answer should end with the sentence: '{A} is \\boxed{...} {B}.'
- The value inside the \\boxed{...} should be one of the following: {labels}.
- The reasoning should be clear and consistent, with no conflicting statements.
"""

_SPATIAL = """# Task: {title}
{context}Analyze the relative position of {A} with respect to {B}.

# Example Format:
## Step-by-step analysis:
... (detailed reasoning here) ...

## Answer:
{A} is \\boxed{...} of {B}.

# Important Notes:
- Answer format: '{A} is \\boxed{...} of {B}.'
- Use only: {labels}.
{extra}- The reasoning should be clear and consistent, with no conflicting statements.
"""

_KINSHIP = """# Task: {title}

{context}
Analyze the family relationship between {A} and {B}.

# Example Format:
## Step-by-step analysis:
... (detailed reasoning here) ...

## Answer:
{A} is the \\boxed{...} of {B}.

# Important Notes:
- The answer should end with the sentence: '{A} is the \\boxed{...} of {B}.'
- The value inside the \\boxed{...} should be one of the following: {labels}.
- The reasoning should be clear and consistent, with no conflicting statements.
"""

_INCONSISTENT_NOTE = (
    "- If the given information is contradictory, answer '{A} is \\boxed{INCONSISTENT} of {B}.'\n"
)

# display order of compass labels in the spatial prompt
_SPATIAL_PROMPT_ORDER = ("southeast", "southwest", "northeast", "northwest")


@dataclass(frozen=True)
class PromptTask:
    task_id: str
    dataset: str
    domain: Domain
    pair: tuple[str, str]
    template_id: TemplateId
    context_lines: tuple[str, ...] = ()
    title: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", Domain(self.domain))
        object.__setattr__(self, "template_id", TemplateId(self.template_id))
        object.__setattr__(self, "pair", tuple(self.pair))
        object.__setattr__(self, "context_lines", tuple(self.context_lines))
        if self.pair[0] == self.pair[1]:
            raise ValueError("task pair must be two distinct objects")
        if TEMPLATE_DOMAIN[self.template_id] is not self.domain:
            raise ValueError(f"template {self.template_id.value} does not fit {self.domain.value}")

    @property
    def vocabulary(self) -> tuple[str, ...]:
        vocab = VOCABULARY[self.domain]
        if self.template_id is TemplateId.INCONSISTENCY_DETECT:
            return vocab + (INCONSISTENT,)
        return vocab

    def to_record(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id, "dataset": self.dataset, "domain": self.domain.value,
            "pair": list(self.pair), "template_id": self.template_id.value,
            "context_lines": list(self.context_lines), "title": self.title,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> PromptTask:
        return cls(rec["task_id"], rec["dataset"], Domain(rec["domain"]), tuple(rec["pair"]),
                   TemplateId(rec["template_id"]), tuple(rec.get("context_lines", ())), rec.get("title", ""))


def context_lines(context: Context | None) -> tuple[str, ...]:
    """Human-readable lines for a ground-truth context (numbered seeds for kinship)."""
    if context is None:
        return ()
    if context.domain is Domain.KINSHIP:
        return tuple(f"{k}. {a.subject} is the {a.label.label} of {a.object}."
                     for k, a in enumerate(context.assertions, start=1))
    from .datagen import describe_fact

    lines = [describe_fact(f) for f in context.facts]
    for a in context.assertions:
        lines.append(f"{a.subject} is {a.label.label} of {a.object}.")
    return tuple(lines)


def render_prompt(task: PromptTask) -> str:
    a, b = task.pair
    title = task.title or _FALLBACK_TITLES[task.template_id]
    tid = task.template_id
    if tid is TemplateId.TEMPORAL_COMPARE:
        text = _TEMPORAL
        labels = ", ".join(VOCABULARY[Domain.TEMPORAL])
        ctx = extra = ""
    elif tid is TemplateId.KINSHIP_INFER:
        text = _KINSHIP
        labels = ", ".join(VOCABULARY[Domain.KINSHIP])
        ctx = "".join(line + "\n" for line in task.context_lines)
        extra = ""
    else:
        text = _SPATIAL
        labels = ", ".join(_SPATIAL_PROMPT_ORDER)
        ctx = "".join(line + "\n" for line in task.context_lines)
        extra = _INCONSISTENT_NOTE if tid is TemplateId.INCONSISTENCY_DETECT else ""
    # plain replacement; object names may contain braces
    for key, val in (("{title}", title), ("{context}", ctx), ("{extra}", extra), ("{labels}", labels)):
        text = text.replace(key, val)
    return text.replace("{A}", "\x00A").replace("{B}", "\x00B").replace("\x00A", a).replace("\x00B", b)


def make_tasks(
    dataset: str,
    domain: Domain | str,
    objects: Sequence[str],
    template_id: TemplateId | str | None = None,
    context: Context | None = None,
    *,
    extra_context: Iterable[str] = (),
    title: str | None = None,
) -> list[PromptTask]:
    """One task per ordered pair, ids ``dataset:template:iii:jjj``."""
    domain = Domain(domain)
    if template_id is None:
        template_id = {
            Domain.TEMPORAL: TemplateId.TEMPORAL_COMPARE,
            Domain.SPATIAL: TemplateId.SPATIAL_WITH_CONTEXT if context else TemplateId.SPATIAL_COMPARE,
            Domain.KINSHIP: TemplateId.KINSHIP_INFER,
        }[domain]
    template_id = TemplateId(template_id)
    lines = context_lines(context) + tuple(extra_context)
    title = title if title is not None else DEFAULT_TITLES.get(dataset, _FALLBACK_TITLES[template_id])
    out = []
    for i, a in enumerate(objects):
        for j, b in enumerate(objects):
            if i != j:
                out.append(PromptTask(f"{dataset}:{template_id.value}:{i:03d}:{j:03d}", dataset, domain,
                                      (a, b), template_id, lines, title))
    return out


# --- parsing ---------------------------------------------------------------

class FailureKind(str, Enum):
    NO_BOXED_ANSWER = "no_boxed_answer"
    LABEL_OUT_OF_VOCABULARY = "label_out_of_vocabulary"


@dataclass(frozen=True)
class ParseResult:
    task_id: str
    assertion: RelationAssertion | None = None
    failure: FailureKind | None = None
    token: str | None = None
    inconsistent: bool = False
    reversed_sentence: bool = False

    @property
    def ok(self) -> bool:
        return self.failure is None

    def to_record(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "ok": self.ok,
            "failure": self.failure.value if self.failure else None,
            "token": self.token,
            "inconsistent": self.inconsistent,
            "reversed_sentence": self.reversed_sentence,
            "assertion": self.assertion.to_record() if self.assertion else None,
        }


@dataclass
class IngestStats:
    total: int = 0
    parsed: int = 0
    inconsistent: int = 0
    reversed_sentence: int = 0
    failures: dict[str, int] = field(default_factory=lambda: {k.value: 0 for k in FailureKind})

    def add(self, r: ParseResult) -> None:
        self.total += 1
        if r.failure is not None:
            self.failures[r.failure.value] += 1
            return
        self.parsed += 1
        self.inconsistent += r.inconsistent
        self.reversed_sentence += r.reversed_sentence

    def to_dict(self) -> dict[str, Any]:
        return {"total": self.total, "parsed": self.parsed, "inconsistent": self.inconsistent,
                "reversed_sentence": self.reversed_sentence, "failures": dict(self.failures)}


_BOXED = re.compile(r"\\+boxed\s*\{")
_WRAPPER = re.compile(r"^\\+(?:text|textbf|textit|mathrm|mathbf|texttt)\s*\{(.*)\}$", re.S)


def boxed_spans(text: str) -> list[tuple[int, int, str]]:
    """(start, end, content) of every brace-balanced ``\\boxed{...}``."""
    out = []
    for m in _BOXED.finditer(text):
        depth = 1
        k = m.end()
        while k < len(text) and depth:
            if text[k] == "{":
                depth += 1
            elif text[k] == "}":
                depth -= 1
            k += 1
        if depth == 0:
            out.append((m.start(), k, text[m.end():k - 1]))
    return out


def _clean_token(token: str) -> str:
    t = token.strip()
    while True:
        m = _WRAPPER.match(t)
        if not m:
            break
        t = m.group(1).strip()
    return t.strip().strip("'\"`*.,;:").strip()


def extract_last_boxed(text: str) -> str | None:
    spans = boxed_spans(text)
    return _clean_token(spans[-1][2]) if spans else None


def _adjacent_objects(text: str, start: int, end: int, pair: tuple[str, str]) -> tuple[str | None, str | None]:
    before = re.sub(r"\s+is(?:\s+the)?\s*$", "", text[:start])
    after = re.sub(r"^\s*(?:of\s+)?", "", text[end:])
    cands = sorted(pair, key=len, reverse=True)
    left = next((o for o in cands if before.endswith(o)), None)
    right = next((o for o in cands if after.startswith(o)), None)
    return left, right


def parse_response(raw: str | bytes, task: PromptTask) -> ParseResult:
    """Last boxed token, checked against the task vocabulary; never raises on bad input."""
    if isinstance(raw, (bytes, bytearray)):
        raw = bytes(raw).decode("utf-8", errors="replace")
    elif not isinstance(raw, str):
        raw = str(raw)
    spans = boxed_spans(raw)
    if not spans:
        return ParseResult(task.task_id, failure=FailureKind.NO_BOXED_ANSWER)
    start, end, content = spans[-1]
    token = _clean_token(content)
    vocab = {v.lower(): v for v in task.vocabulary}
    label = vocab.get(token.lower())
    if label is None:
        return ParseResult(task.task_id, failure=FailureKind.LABEL_OUT_OF_VOCABULARY, token=token)
    if label == INCONSISTENT:
        return ParseResult(task.task_id, token=token, inconsistent=True)
    a, b = task.pair
    left, right = _adjacent_objects(raw, start, end, task.pair)
    flipped = left == b and right == a
    if flipped:
        a, b = b, a
    assertion = make_assertion(a, label, b, raw_text=raw, source=Source.MODEL, dataset=task.dataset)
    return ParseResult(task.task_id, assertion, token=token, reversed_sentence=flipped)


def answer_sentence(task: PromptTask, label: str) -> str:
    """The answer line a compliant response ends with."""
    a, b = task.pair
    if task.template_id is TemplateId.TEMPORAL_COMPARE:
        return f"{a} is \\boxed{{{label}}} {b}."
    if task.template_id is TemplateId.KINSHIP_INFER:
        return f"{a} is the \\boxed{{{label}}} of {b}."
    return f"{a} is \\boxed{{{label}}} of {b}."


def synthetic_response(task: PromptTask, label: str) -> str:
    return ("## Step-by-step analysis:\nComparing the two objects directly.\n\n## Answer:\n"
            + answer_sentence(task, label) + "\n")


def parse_records(
    records: Iterable[Mapping[str, Any]], tasks: Mapping[str, PromptTask], stats: IngestStats | None = None,
) -> Iterator[ParseResult]:
    """Parse ``{task_id, raw}`` records; unknown task ids raise KeyError."""
    for rec in records:
        task = tasks[rec["task_id"]]
        r = parse_response(rec.get("raw", ""), task)
        if stats is not None:
            stats.add(r)
        yield r


__all__ = [
    "INCONSISTENT", "TemplateId", "PromptTask", "render_prompt", "make_tasks", "context_lines",
    "FailureKind", "ParseResult", "IngestStats", "parse_response", "extract_last_boxed",
    "boxed_spans", "answer_sentence", "synthetic_response", "parse_records",
]

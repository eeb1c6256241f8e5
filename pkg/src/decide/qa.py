"""Relation extraction by asking a compatibility oracle yes/no questions.

For each unordered pair of versioned components found in a paragraph, a set
of question templates is instantiated and sent to the oracle together with
the paragraph as context. Each template has a polarity; a "yes" on a
negative-polarity question ("Is A not compatible with B?") means incompatible.
The answer with the lowest loss wins.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .model import Relation, VersionedComponent, canonical_pair

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class QuestionTemplate:
    id: str
    pattern: str  # with {a} and {b} placeholders
    polarity: str

    def render(self, a: VersionedComponent, b: VersionedComponent) -> str:
        return self.pattern.format(a=a, b=b)


TEMPLATES: dict[str, QuestionTemplate] = {
    t.id: t
    for t in [
        QuestionTemplate("Q1", "Is {a} compatible with {b}?", POSITIVE),
        QuestionTemplate("Q2", "Is {a} not compatible with {b}?", NEGATIVE),
        QuestionTemplate("Q3", "Does {a} support {b}?", POSITIVE),
        QuestionTemplate("Q4", "Does {a} not support {b}?", NEGATIVE),
        QuestionTemplate("Q5", "Does {a} require {b}?", POSITIVE),
        QuestionTemplate("Q6", "Does {a} not require {b}?", NEGATIVE),
        QuestionTemplate("Q7", "Does {a} work with {b}?", POSITIVE),
        QuestionTemplate("Q8", "Does {a} not work with {b}?", NEGATIVE),
    ]
}

DEFAULT_STRATEGY = ("Q1", "Q2")


def parse_strategy(spec: str) -> tuple[str, ...]:
    """Parse a template-strategy selector such as "Q1+Q2", "Q7" or "all"."""
    spec = spec.strip()
    named = {
        "positive": ("Q1", "Q3", "Q5", "Q7"),
        "negative": ("Q2", "Q4", "Q6", "Q8"),
        "all": tuple(f"Q{i}" for i in range(1, 9)),
    }
    if spec.lower() in named:
        return named[spec.lower()]
    ids = tuple(part.strip().upper() for part in spec.split("+") if part.strip())
    for tid in ids:
        if tid not in TEMPLATES:
            raise ValueError(f"unknown question template: {tid}")
    if not ids:
        raise ValueError("empty template strategy")
    return ids


@dataclass(frozen=True)
class OracleRequest:
    context: str
    question: str
    # Metadata for scripted oracles; the HTTP client sends only the two
    # fields above on the wire.
    post_id: int | None = None
    pair_key: tuple[str, str] | None = None
    template_id: str | None = None


@dataclass(frozen=True)
class OracleResponse:
    answer: str  # "yes" | "no"
    loss: float


@dataclass(frozen=True)
class Evidence:
    post_id: int
    pair: tuple[VersionedComponent, VersionedComponent]  # canonical order
    relation: Relation
    loss: float
    template_used: str


class ExtractionError(Exception):
    """Oracle transport failure; carries the post being processed."""

    def __init__(self, message: str, post_id: int | None = None):
        super().__init__(message)
        self.post_id = post_id


class OracleProtocolError(Exception):
    """Malformed oracle reply."""


class CompatibilityOracle(Protocol):
    def answer(self, request: OracleRequest) -> OracleResponse: ...


def normalize_answer(text: str) -> str:
    lowered = text.strip().lower()
    if lowered.startswith("yes"):
        return "yes"
    if lowered.startswith("no"):
        return "no"
    raise OracleProtocolError(f"oracle reply must start with yes/no, got {text!r}")


def relation_for(polarity: str, answer: str) -> Relation:
    """Map (template polarity, yes/no) to a relation.

    Flipping both the polarity and the answer leaves the relation unchanged.
    """
    if polarity == POSITIVE:
        return Relation.COMPATIBLE if answer == "yes" else Relation.INCOMPATIBLE
    return Relation.INCOMPATIBLE if answer == "yes" else Relation.COMPATIBLE


def instantiate_questions(
    a: VersionedComponent,
    b: VersionedComponent,
    templates: tuple[str, ...] = DEFAULT_STRATEGY,
    context: str = "",
    post_id: int | None = None,
) -> list[OracleRequest]:
    """One request per template, operands rendered in the order given."""
    pair_key = (str(a), str(b))
    return [
        OracleRequest(
            context=context,
            question=TEMPLATES[tid].render(a, b),
            post_id=post_id,
            pair_key=pair_key,
            template_id=tid,
        )
        for tid in templates
    ]


def infer_relation(
    context_text: str,
    post_id: int,
    pair: tuple[VersionedComponent, VersionedComponent],
    oracle: CompatibilityOracle,
    templates: tuple[str, ...] = DEFAULT_STRATEGY,
    max_loss: float | None = None,
) -> Evidence | None:
    """Ask every template once and keep the lowest-loss answer's relation.

    Ties go to the template listed first. With ``max_loss`` set, evidence
    whose winning loss exceeds it is dropped (returns None).
    """
    a, b = canonical_pair(*pair)
    requests = instantiate_questions(a, b, templates, context=context_text, post_id=post_id)
    answered: list[tuple[float, int, str, str]] = []
    for order, req in enumerate(requests):
        resp = oracle.answer(req)
        answer = normalize_answer(resp.answer)
        if not (math.isfinite(resp.loss) and resp.loss >= 0):
            raise OracleProtocolError(f"oracle loss must be finite and >= 0, got {resp.loss!r}")
        answered.append((resp.loss, order, req.template_id or "", answer))
    loss, _order, template_id, answer = min(answered)
    if max_loss is not None and loss > max_loss:
        return None
    relation = relation_for(TEMPLATES[template_id].polarity, answer)
    return Evidence(post_id=post_id, pair=(a, b), relation=relation, loss=loss, template_used=template_id)


class FixtureOracle:
    """Deterministic oracle replaying a scripted table.

    The script keys on (post id, canonical pair, template); lookups fall back
    from the most specific key to a wildcard post id, so one row can serve
    many posts. Rows live in a TSV with columns:
    ``post_id  a  b  template  answer  loss`` where ``a``/``b`` are rendered
    operands like ``tensorflow 1.13`` (order-insensitive) and post_id may be
    ``*``.
    """

    def __init__(self, table: dict[tuple, tuple[str, float]] | None = None):
        self.table = dict(table or {})

    @staticmethod
    def _key(post_id, pair_key: tuple[str, str], template: str) -> tuple:
        return (post_id, tuple(sorted(pair_key)), template.upper())

    def script(self, post_id, a: str, b: str, template: str, answer: str, loss: float) -> None:
        self.table[self._key(post_id, (a, b), template)] = (answer, loss)

    def answer(self, request: OracleRequest) -> OracleResponse:
        if request.pair_key is None or request.template_id is None:
            raise OracleProtocolError("fixture oracle needs pair/template metadata")
        for key in (
            self._key(request.post_id, request.pair_key, request.template_id),
            self._key("*", request.pair_key, request.template_id),
        ):
            if key in self.table:
                answer, loss = self.table[key]
                return OracleResponse(answer=answer, loss=float(loss))
        raise OracleProtocolError(
            f"no scripted answer for post={request.post_id} pair={request.pair_key} "
            f"template={request.template_id}"
        )

    @classmethod
    def from_tsv(cls, path: str | Path) -> FixtureOracle:
        oracle = cls()
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.reader(fh, delimiter="\t"):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                if len(row) != 6:
                    raise OracleProtocolError(f"fixture row needs 6 columns: {row!r}")
                post_id, a, b, template, answer, loss = (c.strip() for c in row)
                pid: int | str = "*" if post_id == "*" else int(post_id)
                oracle.script(pid, a, b, template, answer, float(loss))
        return oracle


class HttpOracle:
    """Client for an oracle service speaking the JSON wire protocol."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def answer(self, request: OracleRequest) -> OracleResponse:
        import requests

        try:
            resp = requests.post(
                f"{self.base_url}/v1/answer",
                json={"context": request.context, "question": request.question},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ExtractionError(f"oracle unreachable: {exc}", post_id=request.post_id) from exc
        if resp.status_code != 200:
            raise ExtractionError(
                f"oracle returned HTTP {resp.status_code}: {resp.text[:200]}",
                post_id=request.post_id,
            )
        try:
            body = resp.json()
            answer = normalize_answer(str(body["answer"]))
            loss = float(body["loss"])
        except (KeyError, TypeError, ValueError) as exc:
            raise OracleProtocolError(f"malformed oracle reply: {resp.text[:200]}") from exc
        return OracleResponse(answer=answer, loss=loss)

    def health(self) -> dict:
        import requests

        resp = requests.get(f"{self.base_url}/v1/health", timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()


def enumerate_pairs(
    versioned: list[VersionedComponent],
) -> list[tuple[VersionedComponent, VersionedComponent]]:
    """All unordered pairs, canonically ordered; k components give k(k-1)/2."""
    pairs = []
    for i in range(len(versioned)):
        for j in range(i + 1, len(versioned)):
            pairs.append(canonical_pair(versioned[i], versioned[j]))
    return pairs


@dataclass
class ExtractionCounters:
    pairs_queried: int = 0
    pairs_failed: int = 0
    dropped_low_confidence: int = 0
    failures: list[tuple[int, str]] = field(default_factory=list)

"""Streaming ingestion of Q&A dump posts and paragraph extraction.

Reads the Stack Exchange ``Posts.xml`` row format or an equivalent JSONL
file, joins answer posts with their question's tags and accepted-answer
marker, filters to relevant posts, and splits bodies into plain-text
paragraphs with block code removed and inline code kept.
"""

from __future__ import annotations

import html
import json
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from html.parser import HTMLParser
from importlib import resources
from pathlib import Path
from typing import Iterator

log = logging.getLogger(__name__)

_TAG_SPLIT_RE = re.compile(r"<([^<>]+)>|\|([^|]+)\|")


class IngestError(Exception):
    """Unreadable source or unknown format tag."""


@dataclass
class RawPost:
    post_id: int
    post_type: str  # "question" | "answer"
    parent_id: int | None
    score: int
    accepted: bool
    body_html: str
    tags: frozenset[str] = field(default_factory=frozenset)

    @property
    def is_answer(self) -> bool:
        return self.post_type == "answer"


@dataclass(frozen=True)
class Paragraph:
    post_id: int
    index: int
    text: str


@dataclass
class StreamStats:
    posts: int = 0
    skipped_rows: int = 0


def _parse_tags(raw: str | None) -> frozenset[str]:
    if not raw:
        return frozenset()
    found = [a or b for a, b in _TAG_SPLIT_RE.findall(raw)]
    if found:
        return frozenset(t.strip().lower() for t in found if t.strip())
    return frozenset(t.strip().lower() for t in raw.split() if t.strip())


def _rows_from_xml(path: Path) -> Iterator[dict]:
    for _event, elem in ET.iterparse(str(path), events=("end",)):
        if elem.tag != "row":
            continue
        yield dict(elem.attrib)
        elem.clear()


def _row_to_post(attrs: dict) -> RawPost | None:
    try:
        post_id = int(attrs["Id"])
        type_id = int(attrs["PostTypeId"])
        body = attrs["Body"]
    except (KeyError, ValueError):
        return None
    if type_id == 1:
        post_type = "question"
    elif type_id == 2:
        post_type = "answer"
    else:
        return None
    parent = attrs.get("ParentId")
    return RawPost(
        post_id=post_id,
        post_type=post_type,
        parent_id=int(parent) if parent else None,
        score=int(attrs.get("Score", 0)),
        accepted=False,  # resolved during the question join
        body_html=body,
        tags=_parse_tags(attrs.get("Tags")),
    )


def _jsonl_to_post(line: str) -> RawPost | None:
    try:
        obj = json.loads(line)
        post_id = int(obj["post_id"])
        post_type = obj["post_type"]
        body = obj["body_html"]
    except (KeyError, TypeError, ValueError):
        return None
    if post_type not in ("question", "answer"):
        return None
    return RawPost(
        post_id=post_id,
        post_type=post_type,
        parent_id=obj.get("parent_id"),
        score=int(obj.get("score", 0)),
        accepted=bool(obj.get("accepted", False)),
        body_html=body,
        tags=frozenset(str(t).lower() for t in obj.get("tags", [])),
    )


def parse_post_stream(
    source: str | Path, format: str = "xml", stats: StreamStats | None = None
) -> Iterator[RawPost]:
    """Stream posts from a dump file in input order.

    Malformed rows are skipped with a counted warning. Answers inherit their
    question's tags and accepted-answer flag when the question appears in the
    same file (resolved with a first pass over question rows).
    """
    path = Path(source)
    if not path.exists():
        raise IngestError(f"posts file not found: {path}")
    if format not in ("xml", "jsonl"):
        raise IngestError(f"unknown posts format: {format!r}")
    stats = stats if stats is not None else StreamStats()

    # Pass 1: question metadata for the answer join.
    question_tags: dict[int, frozenset[str]] = {}
    accepted_ids: set[int] = set()
    if format == "xml":
        for attrs in _rows_from_xml(path):
            if attrs.get("PostTypeId") == "1" and "Id" in attrs:
                try:
                    qid = int(attrs["Id"])
                except ValueError:
                    continue
                question_tags[qid] = _parse_tags(attrs.get("Tags"))
                if attrs.get("AcceptedAnswerId"):
                    try:
                        accepted_ids.add(int(attrs["AcceptedAnswerId"]))
                    except ValueError:
                        pass
    else:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                post = _jsonl_to_post(line)
                if post is not None and post.post_type == "question":
                    question_tags[post.post_id] = post.tags

    # Pass 2: emission in input order.
    if format == "xml":
        rows: Iterator[RawPost | None] = (_row_to_post(a) for a in _rows_from_xml(path))
    else:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh if ln.strip()]
        rows = (_jsonl_to_post(ln) for ln in lines)

    for post in rows:
        if post is None:
            stats.skipped_rows += 1
            log.warning("skipping malformed post row (%d so far)", stats.skipped_rows)
            continue
        if post.is_answer:
            if post.parent_id in question_tags:
                post.tags = post.tags | question_tags[post.parent_id]
            if format == "xml":
                post.accepted = post.post_id in accepted_ids
        stats.posts += 1
        yield post


class _TextExtractor(HTMLParser):
    """Tag-level scan: drop <pre> blocks, keep inline <code> text, split on blocks."""

    _BREAKERS = {"p", "li", "br", "div", "tr", "ul", "ol", "blockquote", "h1", "h2", "h3"}

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = [""]
        self._pre_depth = 0

    def _break(self) -> None:
        if self.chunks[-1].strip():
            self.chunks.append("")

    def handle_starttag(self, tag: str, attrs) -> None:
        if tag == "pre":
            self._pre_depth += 1
        elif tag in self._BREAKERS:
            self._break()

    def handle_endtag(self, tag: str) -> None:
        if tag == "pre":
            self._pre_depth = max(0, self._pre_depth - 1)
        elif tag in self._BREAKERS:
            self._break()

    def handle_data(self, data: str) -> None:
        if self._pre_depth == 0:
            self.chunks[-1] += data


def extract_paragraphs(post: RawPost) -> list[Paragraph]:
    """Plain-text paragraphs of a post body.

    ``<pre>`` blocks disappear entirely, ``<code>`` markers are stripped with
    their text kept inline, HTML entities are decoded, and the remaining text
    splits on block tags and line breaks. Empty paragraphs are dropped.
    """
    parser = _TextExtractor()
    parser.feed(post.body_html)
    parser.close()
    paragraphs: list[Paragraph] = []
    for chunk in parser.chunks:
        for piece in chunk.splitlines():
            text = re.sub(r"\s+", " ", piece).strip()
            if text:
                paragraphs.append(Paragraph(post.post_id, len(paragraphs), text))
    return paragraphs


def strip_html(body_html: str) -> str:
    """All text of a body with tags removed and entities decoded (pre kept)."""
    no_tags = re.sub(r"<[^<>]+>", " ", body_html)
    return re.sub(r"\s+", " ", html.unescape(no_tags)).strip()


def load_lines(path: str | Path) -> list[str]:
    """Non-empty, non-comment lines of a config file."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def default_dl_tags() -> frozenset[str]:
    text = resources.files("decide.data").joinpath("dl_tags.txt").read_text("utf-8")
    return frozenset(
        ln.strip().lower() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")
    )


def default_patterns() -> list[re.Pattern]:
    text = resources.files("decide.data").joinpath("patterns.txt").read_text("utf-8")
    return compile_patterns(
        ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")
    )


def compile_patterns(lines) -> list[re.Pattern]:
    return [re.compile(ln, re.IGNORECASE) for ln in lines]


def filter_relevant(post: RawPost, dl_tags: frozenset[str], patterns: list[re.Pattern]) -> bool:
    """Tag gate, phrasing gate, and quality gate, all of which must pass.

    Quality means the post is an accepted answer or its vote score is above
    one. The predicate is pure; callers decide whether questions are eligible.
    """
    if not (post.tags & dl_tags):
        return False
    if not (post.accepted or post.score > 1):
        return False
    text = strip_html(post.body_html)
    return any(p.search(text) for p in patterns)

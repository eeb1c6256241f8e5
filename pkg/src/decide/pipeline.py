"""The extraction pipeline: posts in, knowledge graph out.

Answer posts pass the relevance filter, their paragraphs are scanned for
component/version mentions, mentions are paired up (using dependency parses
when a sidecar directory provides them), qualifying paragraphs have each
unordered component pair sent to the oracle, and the resulting evidence is
consolidated into the graph. Paragraph processing can fan out over worker
threads; evidence is sorted canonically before consolidation, so the output
is independent of scheduling.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .ingest import Paragraph, StreamStats, extract_paragraphs, filter_relevant, parse_post_stream
from .kg import ConsolidationStats, ConsolidationStrategy, KnowledgeGraph, consolidate
from .matching import DepTree, match_paragraph, parse_conllu
from .qa import (
    CompatibilityOracle,
    Evidence,
    ExtractionCounters,
    ExtractionError,
    enumerate_pairs,
    infer_relation,
)
from .recognize import Lexicon, paragraph_qualifies, qualifying_components, recognize

log = logging.getLogger(__name__)


@dataclass
class PipelineCounters:
    posts_read: int = 0
    relevant: int = 0
    paragraphs: int = 0
    paragraphs_qualified: int = 0
    pairs_queried: int = 0
    pairs_failed: int = 0
    edges_written: int = 0
    stream: StreamStats = field(default_factory=StreamStats)
    consolidation: ConsolidationStats = field(default_factory=ConsolidationStats)

    def summary(self) -> str:
        return (
            f"posts={self.posts_read} relevant={self.relevant} "
            f"paragraphs_qualified={self.paragraphs_qualified} "
            f"pairs_queried={self.pairs_queried} edges={self.edges_written}"
        )


def load_sidecar_trees(parses_dir: str | Path | None, post_id: int) -> list[DepTree] | None:
    if parses_dir is None:
        return None
    path = Path(parses_dir) / f"{post_id}.conllu"
    if not path.exists():
        return None
    return parse_conllu(path.read_text(encoding="utf-8"))


def _paragraph_evidence(
    paragraph: Paragraph,
    lexicon: Lexicon,
    trees: list[DepTree] | None,
    oracle: CompatibilityOracle,
    templates: tuple[str, ...],
    max_loss: float | None,
) -> tuple[bool, list[Evidence], ExtractionCounters]:
    counters = ExtractionCounters()
    components, versions = recognize(paragraph.text, lexicon)
    if not components:
        return False, [], counters
    pairs = match_paragraph(paragraph.text, components, versions, trees)
    if pairs and log.isEnabledFor(logging.DEBUG):
        modes = ", ".join(sorted({p.mode for p in pairs}))
        log.debug("post %d paragraph %d matched via %s", paragraph.post_id, paragraph.index, modes)
    if not paragraph_qualifies(pairs, lexicon):
        return False, [], counters
    versioned = qualifying_components(pairs, lexicon)
    evidence: list[Evidence] = []
    for a, b in enumerate_pairs(versioned):
        counters.pairs_queried += 1
        try:
            ev = infer_relation(paragraph.text, paragraph.post_id, (a, b), oracle, templates, max_loss)
        except ExtractionError as exc:
            counters.pairs_failed += 1
            counters.failures.append((paragraph.post_id, str(exc)))
            log.warning("oracle failure on post %s: %s", paragraph.post_id, exc)
            continue
        if ev is None:
            counters.dropped_low_confidence += 1
            continue
        evidence.append(ev)
    return True, evidence, counters


def extract_knowledge(
    posts_path: str | Path,
    oracle: CompatibilityOracle,
    format: str = "xml",
    lexicon: Lexicon | None = None,
    dl_tags: frozenset[str] | None = None,
    patterns: list[re.Pattern] | None = None,
    parses_dir: str | Path | None = None,
    templates: tuple[str, ...] = ("Q1", "Q2"),
    strategy: ConsolidationStrategy = ConsolidationStrategy.MAJORITY_VOTE,
    max_loss: float | None = None,
    jobs: int = 1,
    counters: PipelineCounters | None = None,
) -> KnowledgeGraph:
    """Run the full extraction over a posts dump and return the graph."""
    from .ingest import default_dl_tags, default_patterns

    lexicon = lexicon or Lexicon.default()
    dl_tags = dl_tags if dl_tags is not None else default_dl_tags()
    patterns = patterns if patterns is not None else default_patterns()
    counters = counters if counters is not None else PipelineCounters()

    post_scores: dict[int, int] = {}
    work: list[tuple[Paragraph, list[DepTree] | None]] = []
    for post in parse_post_stream(posts_path, format=format, stats=counters.stream):
        counters.posts_read += 1
        post_scores[post.post_id] = post.score
        if not post.is_answer:
            continue
        if not filter_relevant(post, dl_tags, patterns):
            continue
        counters.relevant += 1
        trees = load_sidecar_trees(parses_dir, post.post_id)
        for paragraph in extract_paragraphs(post):
            counters.paragraphs += 1
            work.append((paragraph, trees))

    evidence: list[Evidence] = []

    def process(item: tuple[Paragraph, list[DepTree] | None]):
        paragraph, trees = item
        return _paragraph_evidence(paragraph, lexicon, trees, oracle, templates, max_loss)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(process, work))
    else:
        results = [process(item) for item in work]

    for qualified, para_evidence, para_counters in results:
        if qualified:
            counters.paragraphs_qualified += 1
        evidence.extend(para_evidence)
        counters.pairs_queried += para_counters.pairs_queried
        counters.pairs_failed += para_counters.pairs_failed

    kg = consolidate(
        evidence,
        post_scores=post_scores,
        strategy=strategy,
        lexicon=lexicon,
        stats=counters.consolidation,
    )
    counters.edges_written = len(kg.edges)
    return kg

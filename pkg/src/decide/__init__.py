"""Version-incompatibility detection backed by a knowledge graph of Q&A evidence."""

__version__ = "0.1.0"

from .model import (
    KGEdge,
    KnowledgeGraph,
    Relation,
    StackLayer,
    Version,
    VersionConstraint,
    VersionedComponent,
    VersionParseError,
    compare_versions,
    parse_version,
    version_satisfies,
    version_unifies,
)
from .recognize import Lexicon, paragraph_qualifies, recognize
from .matching import DepTree, MatchedPair, lca_depth, match_pairs, parse_conllu
from .ingest import Paragraph, RawPost, extract_paragraphs, filter_relevant, parse_post_stream
from .qa import (
    Evidence,
    FixtureOracle,
    HttpOracle,
    infer_relation,
    instantiate_questions,
)
from .kg import (
    ConsolidationStrategy,
    candidate_versions,
    consolidate,
    load_kg,
    relation_between,
    save_kg,
)
from .project import RequiredEntry, RequiredStack, build_required_stack, parse_requirements, scan_imports
from .envprobe import (
    EnvSnapshot,
    SystemRunner,
    TranscriptRunner,
    detect_environment,
    load_snapshot,
    probe_local_stack,
    save_snapshot,
)
from .detect import IncompatibilityReport, Issue, detect, render_report
from .pipeline import extract_knowledge

__all__ = [
    "KGEdge", "KnowledgeGraph", "Relation", "StackLayer", "Version",
    "VersionConstraint", "VersionedComponent", "VersionParseError",
    "compare_versions", "parse_version", "version_satisfies", "version_unifies",
    "Lexicon", "paragraph_qualifies", "recognize",
    "DepTree", "MatchedPair", "lca_depth", "match_pairs", "parse_conllu",
    "Paragraph", "RawPost", "extract_paragraphs", "filter_relevant", "parse_post_stream",
    "Evidence", "FixtureOracle", "HttpOracle", "infer_relation", "instantiate_questions",
    "ConsolidationStrategy", "candidate_versions", "consolidate", "load_kg",
    "relation_between", "save_kg",
    "RequiredEntry", "RequiredStack", "build_required_stack", "parse_requirements", "scan_imports",
    "EnvSnapshot", "SystemRunner", "TranscriptRunner", "detect_environment",
    "load_snapshot", "probe_local_stack", "save_snapshot",
    "IncompatibilityReport", "Issue", "detect", "render_report",
    "extract_knowledge",
]

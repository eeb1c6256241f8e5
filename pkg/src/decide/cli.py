"""Command-line entry point.

Subcommands: ``extract`` (posts to knowledge graph), ``detect`` (project +
environment + graph to report), ``query`` (graph lookups) and ``probe``
(environment snapshot). Progress and summaries go to stderr, data to stdout.
Detection exit status: 0 no issues, 2 issues found, 3 no solution, 1 error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .detect import ORDER_ALPHA, ORDER_FILE, detect, render_report
from .envprobe import (
    SnapshotLoadError,
    SystemRunner,
    TranscriptRunner,
    load_snapshot,
    probe_local_stack,
    save_snapshot,
)
from .ingest import IngestError, compile_patterns, default_dl_tags, default_patterns, load_lines
from .kg import (
    ConsolidationStrategy,
    KGLoadError,
    candidate_versions,
    load_kg,
    relation_between,
    save_kg,
)
from .matching import ConlluFormatError
from .model import VersionParseError, VersionedComponent, parse_version
from .pipeline import PipelineCounters, extract_knowledge
from .qa import FixtureOracle, HttpOracle, OracleProtocolError, parse_strategy
from .recognize import Lexicon

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ISSUES = 2
EXIT_NO_SOLUTION = 3

_STRATEGIES = {
    "majority": ConsolidationStrategy.MAJORITY_VOTE,
    "weighted": ConsolidationStrategy.WEIGHTED_MAJORITY_VOTE,
    "loss": ConsolidationStrategy.VOTE_BY_LOSS,
}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Bad flags print usage and exit 1 instead of argparse's default 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise CliError(message)


def _load_config_defaults() -> dict:
    path = os.environ.get("DECIDE_CONFIG")
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read DECIDE_CONFIG file {path}: {exc}") from exc


def _build_oracle(spec: str | None):
    if spec is None:
        spec = os.environ.get("DECIDE_ORACLE_URL")
    if spec is None:
        raise CliError("no oracle configured: pass --oracle or set DECIDE_ORACLE_URL")
    if spec.startswith("fixture:"):
        path = spec[len("fixture:"):]
        if not Path(path).exists():
            raise CliError(f"fixture oracle file not found: {path}")
        return FixtureOracle.from_tsv(path)
    if spec.startswith(("http://", "https://")):
        return HttpOracle(spec)
    raise CliError(f"oracle must be an http(s) URL or fixture:<path>, got {spec!r}")


def _lexicon(args) -> Lexicon:
    if getattr(args, "lexicon", None):
        if not Path(args.lexicon).exists():
            raise CliError(f"lexicon file not found: {args.lexicon}")
        return Lexicon.from_json(args.lexicon)
    return Lexicon.default()


def _parse_operand(text: str) -> VersionedComponent:
    parts = text.strip().rsplit(" ", 1)
    if len(parts) == 2:
        try:
            return VersionedComponent(parts[0].strip().lower(), parse_version(parts[1]))
        except VersionParseError:
            pass
    return VersionedComponent(text.strip().lower())


def _cmd_extract(args) -> int:
    fmt = args.format
    if fmt is None:
        suffix = Path(args.posts).suffix.lower()
        fmt = {"": "xml", ".xml": "xml", ".jsonl": "jsonl", ".json": "jsonl"}.get(suffix)
        if fmt is None:
            raise CliError(f"cannot infer --format from {args.posts!r}")
    lexicon = _lexicon(args)
    dl_tags = frozenset(t.lower() for t in load_lines(args.tags)) if args.tags else default_dl_tags()
    patterns = compile_patterns(load_lines(args.patterns)) if args.patterns else default_patterns()
    oracle = _build_oracle(args.oracle or args.oracle_url)
    counters = PipelineCounters()
    kg = extract_knowledge(
        args.posts,
        oracle,
        format=fmt,
        lexicon=lexicon,
        dl_tags=dl_tags,
        patterns=patterns,
        parses_dir=args.parses,
        templates=parse_strategy(args.templates),
        strategy=_STRATEGIES[args.consolidate],
        max_loss=args.max_loss,
        jobs=args.jobs,
        counters=counters,
    )
    save_kg(kg, args.out)
    if counters.pairs_failed:
        print(f"warning: {counters.pairs_failed} pair queries failed (oracle errors)", file=sys.stderr)
    print(counters.summary(), file=sys.stderr)
    return EXIT_OK


def _load_env(args, lexicon: Lexicon):
    if args.env:
        return load_snapshot(args.env)
    print("probing local environment (pass --env to use a snapshot)", file=sys.stderr)
    return probe_local_stack(SystemRunner(), lexicon)


def _cmd_detect(args) -> int:
    from .project import analyze_project

    lexicon = _lexicon(args)
    kg = load_kg(args.kg)
    snapshot = _load_env(args, lexicon)
    warnings: list[str] = []
    required = analyze_project(args.project_dir, lexicon, args.requirements, warnings)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    report = detect(required, snapshot, kg, order=args.order)
    sys.stdout.write(render_report(report, args.format))
    if not report.satisfiable:
        return EXIT_NO_SOLUTION
    if report.has_issues:
        return EXIT_ISSUES
    return EXIT_OK


def _cmd_query(args) -> int:
    kg = load_kg(args.kg)
    if args.pair:
        a, b = (_parse_operand(t) for t in args.pair)
        answer = relation_between(kg, a, b)
        if answer is None:
            print("Unknown")
        else:
            posts = len(answer.evidence_posts)
            label = answer.relation.value.capitalize()
            print(f"{label} conf={answer.conf:.2f} ({posts} post{'s' if posts != 1 else ''})")
        return EXIT_OK
    if args.candidates:
        for version in candidate_versions(kg, args.candidates.strip().lower()):
            print(version.text)
        return EXIT_OK
    raise CliError("query needs --pair A B or --candidates NAME")


def _cmd_probe(args) -> int:
    lexicon = _lexicon(args)
    runner = TranscriptRunner.from_json(args.transcript) if args.transcript else SystemRunner()
    snapshot = probe_local_stack(runner, lexicon)
    save_snapshot(snapshot, args.out)
    print(
        f"captured {len(snapshot.components)} components ({snapshot.environment_kind})",
        file=sys.stderr,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="decide",
        description="Detect version incompatibilities in deep-learning stacks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="build a knowledge graph from a posts dump")
    p.add_argument("--posts", required=True, help="Posts.xml or JSONL dump")
    p.add_argument("--format", choices=["xml", "jsonl"], default=None)
    p.add_argument("--tags", help="tag list file (one per line)")
    p.add_argument("--patterns", help="pattern list file (one regex per line)")
    p.add_argument("--lexicon", help="components.json lexicon file")
    p.add_argument("--parses", help="directory of <post_id>.conllu dependency parses")
    p.add_argument("--oracle", help="oracle URL or fixture:<path> (or DECIDE_ORACLE_URL)")
    p.add_argument("--oracle-url", help="oracle service URL (same as --oracle with a URL)")
    p.add_argument("--templates", default="Q1+Q2", help="question strategy, e.g. Q1+Q2, Q7, all")
    p.add_argument("--consolidate", choices=sorted(_STRATEGIES), default="majority")
    p.add_argument("--max-loss", type=float, default=None, help="drop answers above this loss")
    p.add_argument("--jobs", type=int, default=1, help="paragraph-level worker threads")
    p.add_argument("--out", required=True, help="knowledge-graph JSON output path")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("detect", help="detect incompatibilities for a project")
    p.add_argument("project_dir")
    p.add_argument("--kg", required=True, help="knowledge-graph JSON file")
    p.add_argument("--env", help="environment snapshot JSON (default: probe this machine)")
    p.add_argument("--requirements", help="requirements file (default: <project>/requirements.txt)")
    p.add_argument("--lexicon", help="components.json lexicon file")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--order", choices=[ORDER_FILE, ORDER_ALPHA], default=ORDER_FILE)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("query", help="query a knowledge graph")
    p.add_argument("kg")
    p.add_argument("--pair", nargs=2, metavar=("A", "B"), help='operands like "tensorflow 1.15"')
    p.add_argument("--candidates", metavar="NAME", help="list stored versions of a component")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("probe", help="snapshot the local environment")
    p.add_argument("--out", required=True, help="snapshot JSON output path")
    p.add_argument("--lexicon", help="components.json lexicon file")
    p.add_argument("--transcript", help="replay a recorded command transcript instead of running")
    p.set_defaults(func=_cmd_probe)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        defaults = _load_config_defaults()
        args = parser.parse_args(argv)
        for key, value in defaults.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr) and getattr(args, attr) in (None, parser.get_default(attr)):
                setattr(args, attr, value)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (IngestError, KGLoadError, SnapshotLoadError, ConlluFormatError,
            OracleProtocolError, VersionParseError, ValueError) as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())

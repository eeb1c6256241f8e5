"""Assigning version mentions to component mentions.

The assignment maximizes, over one-to-one pairings, the depth of the lowest
common ancestor of the paired mentions in the sentence's dependency tree.
Without a tree the weight degrades to negative token distance, so nearest
mentions pair up. Ties are broken by smaller token distance, then by giving
leftmost components leftmost versions, which makes the result deterministic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import permutations

from .recognize import ComponentMention, VersionMention, tokenize

_EXHAUSTIVE_LIMIT = 6  # beyond this, fall back to the Hungarian solver


class ConlluFormatError(ValueError):
    """Raised for malformed dependency-tree input."""


@dataclass(frozen=True)
class DepToken:
    surface: str
    head: int  # index into the tree's token list, -1 for the root
    deprel: str


class DepTree:
    """One parsed sentence: tokens with head links forming a tree."""

    def __init__(self, tokens: list[DepToken], sentence_index: int = 0, text: str | None = None):
        self.tokens = tokens
        self.sentence_index = sentence_index
        self.text = text
        self._depths = self._validate()

    def _validate(self) -> list[int]:
        roots = [i for i, t in enumerate(self.tokens) if t.head == -1]
        if len(roots) != 1:
            raise ConlluFormatError(
                f"sentence {self.sentence_index}: expected one root, found {len(roots)}"
            )
        depths = [-1] * len(self.tokens)
        for i in range(len(self.tokens)):
            seen = set()
            j, steps = i, 0
            while j != -1:
                if j in seen or not 0 <= j < len(self.tokens):
                    raise ConlluFormatError(
                        f"sentence {self.sentence_index}: head cycle at token {i + 1}"
                    )
                seen.add(j)
                j = self.tokens[j].head
                steps += 1
            depths[i] = steps - 1
        return depths

    def depth(self, i: int) -> int:
        return self._depths[i]

    def root_path(self, i: int) -> list[int]:
        path = []
        while i != -1:
            path.append(i)
            i = self.tokens[i].head
        return path


def parse_conllu(text: str) -> list[DepTree]:
    """Parse CoNLL-U content into one tree per sentence.

    Multiword-token ranges (IDs like ``1-2``) and empty nodes (``1.1``) are
    skipped; comment lines are honored for the ``# text =`` sentence metadata.
    """
    trees: list[DepTree] = []
    rows: list[tuple[int, str, int, str]] = []
    sent_text: str | None = None

    def flush() -> None:
        nonlocal rows, sent_text
        if not rows:
            sent_text = None
            return
        index = {tid: pos for pos, (tid, _, _, _) in enumerate(rows)}
        tokens = []
        for tid, form, head, deprel in rows:
            if head == 0:
                mapped = -1
            else:
                if head not in index:
                    raise ConlluFormatError(
                        f"sentence {len(trees)}: head {head} of token {tid} missing"
                    )
                mapped = index[head]
            tokens.append(DepToken(surface=form, head=mapped, deprel=deprel))
        trees.append(DepTree(tokens, sentence_index=len(trees), text=sent_text))
        rows = []
        sent_text = None

    for line in text.splitlines():
        line = line.strip("\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            m = re.match(r"#\s*text\s*=\s*(.*)$", line)
            if m:
                sent_text = m.group(1).strip()
            continue
        cols = line.split("\t")
        if len(cols) < 8:
            raise ConlluFormatError(f"sentence {len(trees)}: row has {len(cols)} columns: {line!r}")
        tid = cols[0]
        if "-" in tid or "." in tid:
            continue
        try:
            token_id = int(tid)
            head = int(cols[6])
        except ValueError as exc:
            raise ConlluFormatError(f"sentence {len(trees)}: bad ID/HEAD in {line!r}") from exc
        if head == token_id:
            raise ConlluFormatError(f"sentence {len(trees)}: token {token_id} heads itself")
        rows.append((token_id, cols[1], head, cols[7]))
    flush()
    return trees


def lca_depth(tree: DepTree, i: int, j: int) -> int:
    """Depth (root = 0) of the deepest node on both root paths."""
    n = len(tree.tokens)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"token index out of range: {i}, {j} (size {n})")
    on_i = set(tree.root_path(i))
    for node in tree.root_path(j):
        if node in on_i:
            return tree.depth(node)
    raise ConlluFormatError("disconnected tree")  # unreachable on validated trees


@dataclass(frozen=True)
class MatchedPair:
    component: ComponentMention
    version: VersionMention | None
    lca_depth: int = 0
    mode: str = "lca"  # "lca" or "distance"


def _token_distance(c: ComponentMention, v: VersionMention) -> int:
    (cs, ce), (vs, ve) = c.token_span, v.token_span
    if vs >= ce:
        return vs - (ce - 1)
    if cs >= ve:
        return cs - (ve - 1)
    return 0  # overlapping spans, e.g. the combined "cuda-8" pattern


def _assign(weights: list[list[float]]) -> list[int | None]:
    """Max-weight one-to-one assignment of rows (components) to columns.

    Rows may stay unassigned when columns run out. Weight ties resolve to
    the lexicographically smallest column choice for the earliest rows.
    Small instances are solved exhaustively; larger ones go to scipy's
    Hungarian solver.
    """
    n_rows = len(weights)
    n_cols = len(weights[0]) if weights else 0
    if n_rows == 0 or n_cols == 0:
        return [None] * n_rows

    if min(n_rows, n_cols) > _EXHAUSTIVE_LIMIT:
        import numpy as np
        from scipy.optimize import linear_sum_assignment

        cost = np.array(weights, dtype=float)
        rows, cols = linear_sum_assignment(cost, maximize=True)
        out: list[int | None] = [None] * n_rows
        for r, c in zip(rows, cols):
            out[int(r)] = int(c)
        return out

    best: tuple | None = None
    best_assign: list[int | None] | None = None
    cols = list(range(n_cols))
    # Enumerate injections from the smaller side into the larger.
    if n_rows <= n_cols:
        candidates = (
            dict(zip(range(n_rows), combo)) for combo in permutations(cols, n_rows)
        )
    else:
        candidates = (
            {r: c for c, r in zip(range(n_cols), combo)}
            for combo in permutations(range(n_rows), n_cols)
        )
    for mapping in candidates:
        total = sum(weights[r][c] for r, c in mapping.items())
        signature = tuple(mapping.get(r, n_cols) for r in range(n_rows))
        key = (-total, signature)
        if best is None or key < best:
            best = key
            best_assign = [mapping.get(r) for r in range(n_rows)]
    assert best_assign is not None
    return best_assign


def match_pairs(
    components: list[ComponentMention],
    versions: list[VersionMention],
    tree: DepTree | None = None,
    token_map: dict[int, int] | None = None,
) -> list[MatchedPair]:
    """One-to-one matching of components to versions within one sentence.

    With a tree, the pair weight is the LCA depth of the two mentions (each
    multi-token mention is represented by its token nearest the root); without
    one, the weight is the negated token distance. Components that receive no
    version come back with ``version=None``.
    """
    mode = "lca" if tree is not None else "distance"

    def tree_index(mention) -> int | None:
        if tree is None:
            return None
        span = range(*mention.token_span)
        mapped = [token_map[k] for k in span if token_map and k in token_map]
        if not mapped:
            return None
        return min(mapped, key=tree.depth)

    weights: list[list[float]] = []
    depths: list[list[int]] = []
    for c in components:
        row: list[float] = []
        drow: list[int] = []
        ci = tree_index(c)
        for v in versions:
            vi = tree_index(v)
            if tree is not None and ci is not None and vi is not None:
                d = lca_depth(tree, ci, vi)
                # Scale so LCA depth dominates and distance only breaks ties.
                row.append(d * 10_000 - _token_distance(c, v))
                drow.append(d)
            else:
                row.append(-_token_distance(c, v) * 1.0)
                drow.append(0)
        weights.append(row)
        depths.append(drow)

    assignment = _assign(weights)
    taken: list[MatchedPair] = []
    for r, c in enumerate(assignment):
        if c is None:
            taken.append(MatchedPair(components[r], None, 0, mode))
        else:
            taken.append(MatchedPair(components[r], versions[c], depths[r][c], mode))
    return taken


def total_lca_depth(pairs: list[MatchedPair]) -> int:
    return sum(p.lca_depth for p in pairs if p.version is not None)


def _anchor_tree(text: str, tree: DepTree, cursor: int) -> list[tuple[int, int, int]]:
    """Locate tree tokens in the paragraph text from ``cursor`` onward.

    Returns (tree_token_index, char_start, char_end) for every token found;
    tokens that cannot be anchored are skipped.
    """
    anchors = []
    pos = cursor
    for i, tok in enumerate(tree.tokens):
        form = tok.surface
        if re.fullmatch(r"\w+(?:\.\w+)*", form):
            rx = re.compile(rf"(?<!\w){re.escape(form)}(?!\w)", re.IGNORECASE)
        else:
            rx = re.compile(re.escape(form), re.IGNORECASE)
        m = rx.search(text, pos)
        if m is None:
            continue
        anchors.append((i, m.start(), m.end()))
        pos = m.end()
    return anchors


def match_paragraph(
    text: str,
    components: list[ComponentMention],
    versions: list[VersionMention],
    trees: list[DepTree] | None = None,
) -> list[MatchedPair]:
    """Sentence-aware matching over a whole paragraph.

    Trees are anchored into the paragraph in order; mentions falling inside an
    anchored sentence are matched with LCA weights, everything else falls back
    to token-distance matching. Versions never pair across sentences.
    """
    if not trees:
        return match_pairs(components, versions, None)

    para_tokens = tokenize(text)
    groups: list[tuple[DepTree, dict[int, int], tuple[int, int]]] = []
    cursor = 0
    for tree in trees:
        anchors = _anchor_tree(text, tree, cursor)
        if len(anchors) < max(2, len(tree.tokens) // 2):
            continue  # tree does not belong to (the rest of) this paragraph
        span = (anchors[0][1], anchors[-1][2])
        token_map: dict[int, int] = {}
        for tree_idx, cs, ce in anchors:
            for k, t in enumerate(para_tokens):
                if t.start < ce and t.end > cs:
                    token_map.setdefault(k, tree_idx)
        groups.append((tree, token_map, span))
        cursor = span[1]

    def group_of(mention) -> int | None:
        mid = (mention.char_span[0] + mention.char_span[1]) // 2
        for gi, (_, _, (s, e)) in enumerate(groups):
            if s <= mid < e:
                return gi
        return None

    results: list[MatchedPair] = []
    leftover_c: list[ComponentMention] = []
    leftover_v: list[VersionMention] = []
    by_group_c: dict[int, list[ComponentMention]] = {}
    by_group_v: dict[int, list[VersionMention]] = {}
    for c in components:
        gi = group_of(c)
        (by_group_c.setdefault(gi, []) if gi is not None else leftover_c).append(c)
    for v in versions:
        gi = group_of(v)
        (by_group_v.setdefault(gi, []) if gi is not None else leftover_v).append(v)

    for gi, (tree, token_map, _) in enumerate(groups):
        results.extend(
            match_pairs(by_group_c.get(gi, []), by_group_v.get(gi, []), tree, token_map)
        )
    if leftover_c or leftover_v:
        results.extend(match_pairs(leftover_c, leftover_v, None))
    results.sort(key=lambda p: p.component.char_span)
    return results

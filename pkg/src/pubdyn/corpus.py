"""Typed corpus: container hierarchy, parent resolution, relation graphs.

Structural elements are modeled as a five-level container hierarchy
(environment > platform > account > message > block).  Each container
decomposes into contents and metadata constituents whose payloads stay
opaque here: message content is out of scope, so blocks are represented in
the type system but never instantiated.

A built corpus is immutable and safe for concurrent reads; building is
single-writer.  Comment parent chains are resolved transitively to a root
post with a vectorized pointer-chase; the few chains that survive the
depth cap are classified one by one (orphan / cycle / depth_exceeded) and
quarantined with their reason, never dropped.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .ingest import CommentRecord, CommentTable, PostTable

__all__ = [
    "ContainerKind",
    "ContainerNode",
    "HierarchyError",
    "RelationError",
    "RelationEdge",
    "RelationGraph",
    "ResolvedComment",
    "Corpus",
    "build_corpus",
    "resolve_parent_chain",
    "add_relation",
    "collapse_multi_edges",
    "commentator_author_graph",
    "export_edge_list",
    "export_key_value",
]

DEFAULT_DEPTH_LIMIT = 64


class HierarchyError(ValueError):
    """Container parent/child kinds violate the hierarchy order."""


class RelationError(ValueError):
    def __init__(self, reason: str, message: str | None = None):
        super().__init__(message or reason)
        self.reason = reason


class ContainerKind(enum.IntEnum):
    """Hierarchy levels, top to bottom."""

    ENVIRONMENT = 0
    PLATFORM = 1
    ACCOUNT = 2
    MESSAGE = 3
    BLOCK = 4

    @property
    def parent_kind(self) -> "ContainerKind | None":
        if self is ContainerKind.ENVIRONMENT:
            return None
        return ContainerKind(self.value - 1)


@dataclass(frozen=True)
class ContainerNode:
    """One container with opaque contents/metadata payloads.

    Payloads are split into explicit and implicit data per constituent;
    they are carried, not interpreted.
    """

    kind: ContainerKind
    id: int
    parent: "ContainerNode | None" = None
    contents_explicit: Any = None
    contents_implicit: Any = None
    metadata_explicit: Any = None
    metadata_implicit: Any = None

    def __post_init__(self):
        if self.kind is ContainerKind.ENVIRONMENT:
            if self.parent is not None:
                raise HierarchyError("environment nodes have no parent")
        elif self.parent is not None:
            if self.parent.kind is not self.kind.parent_kind:
                raise HierarchyError(
                    f"{self.kind.name} node cannot have a "
                    f"{self.parent.kind.name} parent")

    @property
    def key(self) -> tuple[int, int]:
        return (self.kind.value, self.id)


NodeKey = tuple[int, int]


def _node_key(node) -> NodeKey:
    if isinstance(node, ContainerNode):
        return node.key
    kind, ident = node
    return (int(kind), int(ident))


@dataclass
class RelationEdge:
    a: NodeKey
    b: NodeKey
    weight: float = 1.0
    multiplicity: int = 1
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.weights:
            self.weights = (self.weight,)


@dataclass
class RelationGraph:
    """Edges of one target identity; directed or not, never mixed.

    Relations are elementary (one target identity per graph), two-point,
    horizontal (same hierarchy level) and homogeneous (same constituent,
    carried as a label).
    """

    target_identity: str
    directed: bool = False
    constituent: str = "contents"
    edges: list[RelationEdge] = field(default_factory=list)
    collapsed: bool = False

    def edge_count(self) -> int:
        return len(self.edges)

    def multiplicity_total(self) -> int:
        return sum(e.multiplicity for e in self.edges)


def add_relation(graph: RelationGraph, a, b, weight: float = 1.0,
                 directed: bool | None = None) -> RelationGraph:
    """Record one elementary relation; parallel edges allowed pre-collapse."""
    key_a, key_b = _node_key(a), _node_key(b)
    if key_a[0] != key_b[0]:
        raise RelationError("not_horizontal",
                            "relation endpoints must be at the same level")
    if directed is not None and directed != graph.directed:
        raise RelationError("mixed_directionality",
                            "edge directedness must match the graph")
    graph.edges.append(RelationEdge(key_a, key_b, float(weight)))
    return graph


def collapse_multi_edges(graph: RelationGraph) -> RelationGraph:
    """Replace parallel edges by one edge per pair.

    The merged edge records the multiplicity, the summed weight, and keeps
    the original weight list as an attribute.  Returns a new graph; the
    input is left untouched.
    """
    merged: dict[tuple[NodeKey, NodeKey], list[float]] = {}
    for edge in graph.edges:
        pair = (edge.a, edge.b)
        if not graph.directed and edge.b < edge.a:
            pair = (edge.b, edge.a)
        weights = merged.setdefault(pair, [])
        if edge.weights and len(edge.weights) == edge.multiplicity:
            weights.extend(edge.weights)
        else:
            weights.extend([edge.weight / edge.multiplicity] * edge.multiplicity)
    out = RelationGraph(graph.target_identity, graph.directed,
                        graph.constituent, collapsed=True)
    for (key_a, key_b), weights in sorted(merged.items()):
        out.edges.append(RelationEdge(key_a, key_b, weight=sum(weights),
                                      multiplicity=len(weights),
                                      weights=tuple(weights)))
    return out


@dataclass(frozen=True)
class ResolvedComment:
    comment: CommentRecord
    root_post_id: int
    depth: int


class _IdIndex:
    """Binary-search lookup from 64-bit ids to row positions."""

    def __init__(self, ids: np.ndarray):
        self._order = np.argsort(ids, kind="stable")
        self._sorted = ids[self._order]

    def find(self, ids: np.ndarray) -> np.ndarray:
        """Row position per id, or -1 where absent."""
        if len(self._sorted) == 0:
            return np.full(len(ids), -1, dtype=np.int64)
        pos = np.searchsorted(self._sorted, ids)
        pos = np.minimum(pos, len(self._sorted) - 1)
        hit = self._sorted[pos] == ids
        out = np.where(hit, self._order[pos], -1).astype(np.int64)
        return out


class Corpus:
    """Immutable joined view over accepted posts and comments.

    ``root_index[i]`` is the posts-row of comment i's root post, or -1 when
    the parent chain could not be resolved; ``depth[i]`` counts parent hops
    (1 for a direct comment on a post).  Unresolved comments are kept with
    a reason, and excluded from resolution-dependent statistics downstream.
    """

    def __init__(self, posts: PostTable, comments: CommentTable,
                 root_index: np.ndarray, depth: np.ndarray,
                 unresolved: list[tuple[int, str]],
                 depth_limit: int = DEFAULT_DEPTH_LIMIT):
        self.posts = posts
        self.comments = comments
        self.root_index = root_index
        self.depth = depth
        self.unresolved = unresolved
        self.depth_limit = depth_limit
        self.unresolved_reasons = Counter(reason for _, reason in unresolved)
        self.environment = ContainerNode(ContainerKind.ENVIRONMENT, 0)
        self.platform = ContainerNode(ContainerKind.PLATFORM, 1,
                                      parent=self.environment)
        self._post_ids = _IdIndex(posts.message_id)
        self._comment_ids = _IdIndex(comments.message_id)

    # -- basic counts -------------------------------------------------

    @property
    def n_posts(self) -> int:
        return len(self.posts)

    @property
    def n_comments(self) -> int:
        return len(self.comments)

    @property
    def resolved_mask(self) -> np.ndarray:
        return self.root_index >= 0

    @property
    def n_resolved_comments(self) -> int:
        return int(self.resolved_mask.sum())

    # -- node builders ------------------------------------------------

    def account_node(self, account_id: int) -> ContainerNode:
        return ContainerNode(ContainerKind.ACCOUNT, int(account_id),
                             parent=self.platform)

    def message_node(self, message_id: int) -> ContainerNode:
        post_row = self._post_ids.find(np.array([message_id], np.uint64))[0]
        if post_row >= 0:
            author = int(self.posts.author_id[post_row])
        else:
            comment_row = self._comment_ids.find(
                np.array([message_id], np.uint64))[0]
            if comment_row < 0:
                raise KeyError(message_id)
            author = int(self.comments.author_id[comment_row])
        return ContainerNode(ContainerKind.MESSAGE, int(message_id),
                             parent=self.account_node(author))

    # -- index lookups ------------------------------------------------

    def post_rows_by_author(self, author_id: int) -> np.ndarray:
        return np.flatnonzero(self.posts.author_id == np.uint64(author_id))

    def comment_rows_by_author(self, author_id: int) -> np.ndarray:
        return np.flatnonzero(self.comments.author_id == np.uint64(author_id))

    def comment_rows_by_root(self, post_id: int) -> np.ndarray:
        post_row = self._post_ids.find(np.array([post_id], np.uint64))[0]
        if post_row < 0:
            return np.empty(0, dtype=np.int64)
        return np.flatnonzero(self.root_index == post_row)

    def resolved_comment(self, row: int) -> ResolvedComment:
        post_row = self.root_index[row]
        if post_row < 0:
            raise ValueError(f"comment row {row} is unresolved")
        return ResolvedComment(self.comments[row],
                               int(self.posts.message_id[post_row]),
                               int(self.depth[row]))

    def post_row_of_id(self, message_id: int) -> int:
        return int(self._post_ids.find(np.array([message_id], np.uint64))[0])

    def comment_row_of_id(self, message_id: int) -> int:
        return int(self._comment_ids.find(np.array([message_id], np.uint64))[0])


def _classify_chain(comments: CommentTable, post_index: _IdIndex,
                    comment_index: _IdIndex, start_row: int,
                    depth_limit: int) -> tuple[int, int] | str:
    """Scalar parent chase; returns (post_row, depth) or a reason code."""
    seen_rows = {start_row}
    parent = int(comments.parent_id[start_row])
    depth = 1
    while depth <= depth_limit:
        post_row = post_index.find(np.array([parent], np.uint64))[0]
        if post_row >= 0:
            return int(post_row), depth
        comment_row = comment_index.find(np.array([parent], np.uint64))[0]
        if comment_row < 0:
            return "orphan"
        if int(comment_row) in seen_rows:
            return "cycle"
        seen_rows.add(int(comment_row))
        parent = int(comments.parent_id[comment_row])
        depth += 1
    # Distinguish a genuine cycle from a merely deep chain by walking on
    # without the depth cap until a repeat or an end is found.
    return "cycle" if _has_cycle(comments, post_index, comment_index,
                                 start_row) else "depth_exceeded"


def _has_cycle(comments, post_index, comment_index, start_row: int) -> bool:
    seen = {start_row}
    parent = int(comments.parent_id[start_row])
    while True:
        if post_index.find(np.array([parent], np.uint64))[0] >= 0:
            return False
        row = comment_index.find(np.array([parent], np.uint64))[0]
        if row < 0:
            return False
        if int(row) in seen:
            return True
        seen.add(int(row))
        parent = int(comments.parent_id[row])


def build_corpus(posts: PostTable, comments: CommentTable,
                 depth_limit: int = DEFAULT_DEPTH_LIMIT) -> Corpus:
    """Join posts and comments, resolving every parent chain to a root post.

    Accepts the columnar tables from ingest, or any record iterables (they
    are converted).  If a message id exists both as a post and as a
    comment, resolution prefers the post.
    """
    if not isinstance(posts, PostTable):
        posts = PostTable.from_records(posts)
    if not isinstance(comments, CommentTable):
        comments = CommentTable.from_records(comments)

    n = len(comments)
    post_index = _IdIndex(posts.message_id)
    comment_index = _IdIndex(comments.message_id)
    root = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int32)
    unresolved: list[tuple[int, str]] = []

    if n:
        current = comments.parent_id.copy()
        active = np.arange(n, dtype=np.int64)
        reason_orphan: list[int] = []
        for step in range(1, depth_limit + 1):
            if len(active) == 0:
                break
            post_rows = post_index.find(current[active])
            hit = post_rows >= 0
            root[active[hit]] = post_rows[hit]
            depth[active[hit]] = step
            active = active[~hit]
            if len(active) == 0:
                break
            comment_rows = comment_index.find(current[active])
            missing = comment_rows < 0
            reason_orphan.extend(active[missing].tolist())
            active = active[~missing]
            comment_rows = comment_rows[~missing]
            current[active] = comments.parent_id[comment_rows]
        for row in reason_orphan:
            unresolved.append((int(row), "orphan"))
        for row in active.tolist():
            outcome = _classify_chain(comments, post_index, comment_index,
                                      row, depth_limit)
            if isinstance(outcome, str):
                unresolved.append((row, outcome))
            else:
                root[row], depth[row] = outcome
        unresolved.sort()

    return Corpus(posts, comments, root, depth, unresolved, depth_limit)


def resolve_parent_chain(comment_id: int, corpus: Corpus,
                         depth_limit: int | None = None
                         ) -> ResolvedComment | str:
    """Resolve one comment by id; returns the record or a reason code.

    Reason codes: ``orphan`` (parent missing from both tables), ``cycle``,
    ``depth_exceeded`` (chain longer than the configured limit).
    """
    row = corpus.comment_row_of_id(comment_id)
    if row < 0:
        raise KeyError(f"comment id {comment_id} not in corpus")
    limit = corpus.depth_limit if depth_limit is None else depth_limit
    outcome = _classify_chain(corpus.comments, corpus._post_ids,
                              corpus._comment_ids, row, limit)
    if isinstance(outcome, str):
        return outcome
    post_row, depth = outcome
    return ResolvedComment(corpus.comments[row],
                           int(corpus.posts.message_id[post_row]), depth)


def commentator_author_graph(corpus: Corpus) -> RelationGraph:
    """Directed account graph: one collapsed edge commentator -> post author.

    Edge multiplicity counts the comments on that pair; self-loops are
    retained because author self-comments are analyzed in their own right.
    """
    graph = RelationGraph("commentator->post_author", directed=True,
                          constituent="metadata")
    mask = corpus.resolved_mask
    commentators = corpus.comments.author_id[mask]
    authors = corpus.posts.author_id[corpus.root_index[mask]]
    if len(commentators):
        pairs = np.stack([commentators, authors], axis=1)
        uniq, counts = np.unique(pairs, axis=0, return_counts=True)
        level = ContainerKind.ACCOUNT.value
        for (src, dst), mult in zip(uniq.tolist(), counts.tolist()):
            graph.edges.append(RelationEdge(
                (level, int(src)), (level, int(dst)),
                weight=float(mult), multiplicity=int(mult),
                weights=(1.0,) * int(mult)))
    graph.collapsed = True
    return graph


def export_edge_list(graph: RelationGraph, path: str | Path,
                     delimiter: str = "\t") -> None:
    """Write edges as: a_kind:a_id, b_kind:b_id, multiplicity, total weight."""
    with open(path, "w", encoding="utf-8") as out:
        for edge in graph.edges:
            out.write(delimiter.join([
                f"{ContainerKind(edge.a[0]).name}:{edge.a[1]}",
                f"{ContainerKind(edge.b[0]).name}:{edge.b[1]}",
                str(edge.multiplicity),
                repr(edge.weight),
            ]) + "\n")


def export_key_value(graph: RelationGraph, path: str | Path) -> None:
    """Write edges as key=value pairs keyed by the endpoint pair."""
    with open(path, "w", encoding="utf-8") as out:
        for edge in graph.edges:
            key = (f"{edge.a[0]}:{edge.a[1]}"
                   f"{'->' if graph.directed else '--'}"
                   f"{edge.b[0]}:{edge.b[1]}")
            out.write(f"{key}={edge.multiplicity},{edge.weight!r}\n")

"""Activity distributions and summary statistics over a built corpus.

Sixteen metric kinds cover account performance, per-post and per-author
comment aggregation, distinct-counterparty counts, first-comment delays,
and pooled inter-event intervals.  Supports are exact integers (counts or
seconds); no binning or smoothing happens here.

Scoping rule: commenter-side metrics (comments_per_account, its mass
counterpart, comment_interevent) cover every accepted comment, including
comments whose parent chain never resolves to a post.  Post-side and
author-side metrics cover resolved comments only; unresolved ones are
tallied separately by the corpus.

Medians use pure integer arithmetic (smallest support whose doubled
cumulative count reaches the total) so results are reproducible bit for
bit across platforms.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import Corpus

__all__ = [
    "SparseHistogram",
    "CumulativeCurve",
    "MetricKind",
    "DistributionResult",
    "SummaryStats",
    "POST_KINDS",
    "COMMENT_KINDS",
    "compute_summary",
    "compute_distribution",
    "compute_all",
    "median_by_population",
    "median_by_mass",
    "negative_delay_stats",
]


@dataclass(frozen=True)
class SparseHistogram:
    """Exact frequency map: support value -> number of items at that value."""

    bins: Mapping[int, int]
    total_weight: int

    def __post_init__(self):
        total = 0
        for support, count in self.bins.items():
            if count < 1:
                raise ValueError(f"bin {support} holds count {count}")
            total += count
        if total != self.total_weight:
            raise ValueError(
                f"total_weight {self.total_weight} != sum of counts {total}")

    @classmethod
    def from_bins(cls, bins: Mapping[int, int]) -> "SparseHistogram":
        """Build from a support->count mapping, dropping empty bins."""
        clean = {int(s): int(c) for s, c in bins.items() if c > 0}
        return cls(clean, sum(clean.values()))

    def is_empty(self) -> bool:
        return not self.bins

    def sorted_supports(self) -> list[int]:
        return sorted(self.bins)

    def mass_total(self) -> int:
        return sum(s * c for s, c in self.bins.items())


@dataclass(frozen=True)
class CumulativeCurve:
    support: tuple[int, ...]
    cumulative_fraction: tuple[float, ...]

    def __post_init__(self):
        fracs = self.cumulative_fraction
        if any(b < a for a, b in zip(fracs, fracs[1:])):
            raise ValueError("cumulative fractions must be non-decreasing")
        if fracs and fracs[-1] != 1.0:
            raise ValueError("cumulative curve must end at 1")

    @classmethod
    def from_histogram(cls, hist: SparseHistogram) -> "CumulativeCurve":
        supports = sorted(hist.bins)
        fractions = []
        running = 0
        for s in supports:
            running += hist.bins[s]
            fractions.append(running / hist.total_weight)
        if fractions:
            fractions[-1] = 1.0
        return cls(tuple(supports), tuple(fractions))


class MetricKind(str, enum.Enum):
    posts_per_account = "posts_per_account"
    post_share_by_performance = "post_share_by_performance"
    post_interevent = "post_interevent"
    comments_per_account = "comments_per_account"
    comment_mass_by_commenter_performance = "comment_mass_by_commenter_performance"
    comments_per_commented_post = "comments_per_commented_post"
    comment_mass_by_post_aggregation = "comment_mass_by_post_aggregation"
    self_comments_per_commented_post = "self_comments_per_commented_post"
    comments_received_per_post_author = "comments_received_per_post_author"
    comment_mass_by_author_aggregation = "comment_mass_by_author_aggregation"
    commentators_per_commented_post = "commentators_per_commented_post"
    commentators_per_post_author = "commentators_per_post_author"
    commented_posts_per_commentator = "commented_posts_per_commentator"
    post_authors_per_commentator = "post_authors_per_commentator"
    first_comment_delay = "first_comment_delay"
    comment_interevent = "comment_interevent"


POST_KINDS = frozenset({
    MetricKind.posts_per_account,
    MetricKind.post_share_by_performance,
    MetricKind.post_interevent,
})
COMMENT_KINDS = frozenset(MetricKind) - POST_KINDS


@dataclass(frozen=True)
class DistributionResult:
    kind: MetricKind
    histogram: SparseHistogram
    cumulative: CumulativeCurve
    median_by_population: Optional[int]
    median_by_mass: Optional[int]
    max_support: Optional[int]
    min_support: Optional[int]
    zero_count: int
    negative_count: int


@dataclass(frozen=True)
class SummaryStats:
    """Corpus-level counts and the mean-performance ratios derived from them.

    Means are plain ratios of the integer counts; they are None, never 0,
    when the denominator is empty.  The two per-commented means use the
    resolved comment count as numerator, which equals n_comments whenever
    every comment's parent chain resolves.
    """

    first_time: Optional[int]
    last_time: Optional[int]
    span_days: Optional[float]
    n_posts: int
    n_post_accounts: int
    n_comments: int
    n_commenters: int
    n_comments_resolved: int
    n_commented_posts: int
    n_commented_post_authors: int
    mean_post_performance: Optional[float]
    mean_comment_performance: Optional[float]
    mean_comments_per_commented_post: Optional[float]
    mean_comments_per_commented_author: Optional[float]

    @classmethod
    def from_counts(cls, n_posts: int, n_post_accounts: int, n_comments: int,
                    n_commenters: int, n_commented_posts: int,
                    n_commented_post_authors: int,
                    n_comments_resolved: Optional[int] = None,
                    first_time: Optional[int] = None,
                    last_time: Optional[int] = None) -> "SummaryStats":
        resolved = n_comments if n_comments_resolved is None else n_comments_resolved
        span = None
        if first_time is not None and last_time is not None:
            span = (last_time - first_time) / 86400.0
        return cls(
            first_time=first_time,
            last_time=last_time,
            span_days=span,
            n_posts=n_posts,
            n_post_accounts=n_post_accounts,
            n_comments=n_comments,
            n_commenters=n_commenters,
            n_comments_resolved=resolved,
            n_commented_posts=n_commented_posts,
            n_commented_post_authors=n_commented_post_authors,
            mean_post_performance=_ratio(n_posts, n_post_accounts),
            mean_comment_performance=_ratio(n_comments, n_commenters),
            mean_comments_per_commented_post=_ratio(resolved, n_commented_posts),
            mean_comments_per_commented_author=_ratio(
                resolved, n_commented_post_authors),
        )


def _ratio(num: int, den: int) -> Optional[float]:
    return None if den == 0 else num / den


# -- median arithmetic ---------------------------------------------------

def _bins_of(obj) -> Mapping[int, int]:
    if isinstance(obj, DistributionResult):
        return obj.histogram.bins
    if isinstance(obj, SparseHistogram):
        return obj.bins
    return obj


def median_by_population(obj) -> Optional[int]:
    """Smallest support whose doubled cumulative count reaches the total."""
    bins = _bins_of(obj)
    if not bins:
        return None
    total = sum(bins.values())
    running = 0
    for s in sorted(bins):
        running += bins[s]
        if 2 * running >= total:
            return s
    raise AssertionError("unreachable: cumulative never reached total")


def median_by_mass(obj) -> Optional[int]:
    """Smallest support where doubled cumulative support*count reaches the
    total mass.  Undefined (None) when any support is negative."""
    bins = _bins_of(obj)
    if not bins:
        return None
    if min(bins) < 0:
        return None
    total = sum(s * c for s, c in bins.items())
    running = 0
    for s in sorted(bins):
        running += s * bins[s]
        if 2 * running >= total:
            return s
    raise AssertionError("unreachable: cumulative never reached total")


# -- numpy helpers -------------------------------------------------------

def _count_histogram(values: np.ndarray) -> dict[int, int]:
    if len(values) == 0:
        return {}
    uniq, counts = np.unique(values, return_counts=True)
    return dict(zip(uniq.tolist(), counts.tolist()))


def _per_key_counts(keys: np.ndarray) -> np.ndarray:
    if len(keys) == 0:
        return np.empty(0, dtype=np.int64)
    return np.unique(keys, return_counts=True)[1]


def _distinct_counts(primary: np.ndarray, secondary: np.ndarray) -> np.ndarray:
    """Per distinct primary key, the number of distinct secondary values."""
    if len(primary) == 0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((secondary, primary))
    p = primary[order]
    s = secondary[order]
    fresh = np.empty(len(p), dtype=bool)
    fresh[0] = True
    fresh[1:] = (p[1:] != p[:-1]) | (s[1:] != s[:-1])
    return _per_key_counts(p[fresh])


def _pooled_intervals(keys: np.ndarray, times: np.ndarray) -> dict[int, int]:
    """Per key, differences of sorted timestamps, pooled into one histogram."""
    if len(keys) == 0:
        return {}
    order = np.lexsort((times, keys))
    k = keys[order]
    t = times[order]
    same = k[1:] == k[:-1]
    gaps = (t[1:] - t[:-1])[same]
    return _count_histogram(gaps)


def _mass_bins(bins: Mapping[int, int]) -> dict[int, int]:
    return {s: s * c for s, c in bins.items() if s > 0}


# -- per-kind computation ------------------------------------------------

def _resolved_views(corpus: Corpus):
    mask = corpus.resolved_mask
    roots = corpus.root_index[mask]
    commentators = corpus.comments.author_id[mask]
    created = corpus.comments.created[mask]
    post_authors = corpus.posts.author_id[roots] if len(roots) else \
        np.empty(0, dtype=np.uint64)
    return roots, commentators, created, post_authors


def _bins_for(corpus: Corpus, kind: MetricKind) -> dict[int, int]:
    if kind is MetricKind.posts_per_account:
        return _count_histogram(_per_key_counts(corpus.posts.author_id))
    if kind is MetricKind.post_share_by_performance:
        return _mass_bins(_bins_for(corpus, MetricKind.posts_per_account))
    if kind is MetricKind.post_interevent:
        return _pooled_intervals(corpus.posts.author_id, corpus.posts.created)
    if kind is MetricKind.comments_per_account:
        return _count_histogram(_per_key_counts(corpus.comments.author_id))
    if kind is MetricKind.comment_mass_by_commenter_performance:
        return _mass_bins(_bins_for(corpus, MetricKind.comments_per_account))
    if kind is MetricKind.comment_interevent:
        return _pooled_intervals(corpus.comments.author_id,
                                 corpus.comments.created)

    roots, commentators, created, post_authors = _resolved_views(corpus)
    if kind is MetricKind.comments_per_commented_post:
        return _count_histogram(_per_key_counts(roots))
    if kind is MetricKind.comment_mass_by_post_aggregation:
        return _mass_bins(
            _bins_for(corpus, MetricKind.comments_per_commented_post))
    if kind is MetricKind.self_comments_per_commented_post:
        if len(roots) == 0:
            return {}
        commented = np.unique(roots)
        self_rows = roots[commentators == post_authors]
        per_post = np.bincount(self_rows, minlength=corpus.n_posts)
        return _count_histogram(per_post[commented])
    if kind is MetricKind.comments_received_per_post_author:
        return _count_histogram(_per_key_counts(post_authors))
    if kind is MetricKind.comment_mass_by_author_aggregation:
        return _mass_bins(
            _bins_for(corpus, MetricKind.comments_received_per_post_author))
    if kind is MetricKind.commentators_per_commented_post:
        return _count_histogram(_distinct_counts(roots, commentators))
    if kind is MetricKind.commentators_per_post_author:
        return _count_histogram(_distinct_counts(post_authors, commentators))
    if kind is MetricKind.commented_posts_per_commentator:
        return _count_histogram(_distinct_counts(commentators, roots))
    if kind is MetricKind.post_authors_per_commentator:
        return _count_histogram(_distinct_counts(commentators, post_authors))
    if kind is MetricKind.first_comment_delay:
        return _count_histogram(_first_delays(corpus, roots, created))
    raise ValueError(f"unknown metric kind: {kind!r}")


def _first_delays(corpus: Corpus, roots: np.ndarray,
                  created: np.ndarray) -> np.ndarray:
    if len(roots) == 0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((created, roots))
    r = roots[order]
    t = created[order]
    first = np.empty(len(r), dtype=bool)
    first[0] = True
    first[1:] = r[1:] != r[:-1]
    return t[first] - corpus.posts.created[r[first]]


def _make_result(kind: MetricKind, bins: dict[int, int]) -> DistributionResult:
    hist = SparseHistogram.from_bins(bins)
    curve = CumulativeCurve.from_histogram(hist)
    if hist.is_empty():
        return DistributionResult(kind, hist, curve, None, None, None, None,
                                  0, 0)
    supports = hist.bins
    return DistributionResult(
        kind=kind,
        histogram=hist,
        cumulative=curve,
        median_by_population=median_by_population(hist),
        median_by_mass=median_by_mass(hist),
        max_support=max(supports),
        min_support=min(supports),
        zero_count=supports.get(0, 0),
        negative_count=sum(c for s, c in supports.items() if s < 0),
    )


def compute_distribution(corpus: Corpus, kind: MetricKind) -> DistributionResult:
    """One metric over the corpus; empty population gives an empty result."""
    kind = MetricKind(kind)
    return _make_result(kind, _bins_for(corpus, kind))


def compute_all(corpus: Corpus, kinds: Optional[Sequence[MetricKind]] = None,
                threads: int = 1) -> dict[MetricKind, DistributionResult]:
    """All (or selected) metrics; per-kind computation may run on a thread
    pool and is bit-identical to the sequential result."""
    wanted = list(MetricKind) if kinds is None else [MetricKind(k) for k in kinds]
    if threads <= 1 or len(wanted) <= 1:
        return {k: compute_distribution(corpus, k) for k in wanted}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = pool.map(lambda k: compute_distribution(corpus, k), wanted)
        return dict(zip(wanted, results))


def compute_summary(corpus: Corpus) -> SummaryStats:
    times = []
    if corpus.n_posts:
        times.append((int(corpus.posts.created.min()),
                      int(corpus.posts.created.max())))
    if corpus.n_comments:
        times.append((int(corpus.comments.created.min()),
                      int(corpus.comments.created.max())))
    first_time = min(t[0] for t in times) if times else None
    last_time = max(t[1] for t in times) if times else None

    roots, _, _, post_authors = _resolved_views(corpus)
    return SummaryStats.from_counts(
        n_posts=corpus.n_posts,
        n_post_accounts=int(len(np.unique(corpus.posts.author_id))),
        n_comments=corpus.n_comments,
        n_commenters=int(len(np.unique(corpus.comments.author_id))),
        n_commented_posts=int(len(np.unique(roots))),
        n_commented_post_authors=int(len(np.unique(post_authors))),
        n_comments_resolved=int(len(roots)),
        first_time=first_time,
        last_time=last_time,
    )


def negative_delay_stats(corpus: Corpus) -> DistributionResult:
    """First-comment delay restricted to its negative support values."""
    full = compute_distribution(corpus, MetricKind.first_comment_delay)
    neg = {s: c for s, c in full.histogram.bins.items() if s < 0}
    return _make_result(MetricKind.first_comment_delay, neg)

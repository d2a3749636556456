"""Seeded synthetic corpus generator with recorded ground truth.

Generates post/comment/reference tables in the exact ingest file formats.
Per-account post counts are drawn proportional to a decay model over
supports 1..max_performance, an optional bump injects extra accounts with
counts uniform over a region, timestamps come from a lognormal inter-event
mixture quantized to whole seconds (so zero gaps occur, as they do in real
1-second-resolution logs), and comments attach to uniformly random posts.

Everything is driven by the deterministic counter-based streams in
``rng``: the same seed gives byte-identical files on any platform or
thread count.  Each sampling phase draws from its own spawned child
stream, so phases cannot disturb each other's sequences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .fitkit import FitModel, evaluate_model
from .ingest import CommentTable, PostTable, RefEntry
from .rng import Stream, scramble

__all__ = [
    "SynthError",
    "MixtureComponent",
    "AnomalyBump",
    "SynthConfig",
    "GroundTruth",
    "SynthData",
    "SynthOutput",
    "generate_records",
    "generate",
    "verify_against_ground_truth",
]

# Account counters live above 2**33 so scrambled account ids can never
# collide with scrambled message ids (the scramble is a bijection).
_ACCOUNT_COUNTER_BASE = 1 << 33
_MAX_RESAMPLE_ROUNDS = 100


class SynthError(ValueError):
    """Config cannot be realized (e.g. window too short for the counts)."""


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    median_seconds: float
    sigma: float

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("component weight must be positive")
        if self.median_seconds <= 0:
            raise ValueError("component median must be positive")
        if self.sigma < 0:
            raise ValueError("component sigma must be non-negative")


@dataclass(frozen=True)
class AnomalyBump:
    lo: int
    hi: int
    accounts: int

    def __post_init__(self):
        if not 1 <= self.lo <= self.hi:
            raise ValueError("bump region must satisfy 1 <= lo <= hi")
        if self.accounts < 0:
            raise ValueError("bump account count must be non-negative")


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_accounts: int
    performance_model: FitModel
    window: tuple[int, int]
    interevent_profile: tuple[MixtureComponent, ...] = ()
    anomaly_bump: Optional[AnomalyBump] = None
    comment_rate: float = 0.0
    self_comment_probability: float = 0.0
    max_performance: int = 300
    comment_delay_median: float = 3000.0
    comment_delay_sigma: float = 1.5
    negative_delay_probability: float = 0.0
    nest_probability: float = 0.0

    def __post_init__(self):
        if self.n_accounts < 1:
            raise ValueError("n_accounts must be at least 1")
        if self.window[1] <= self.window[0]:
            raise ValueError("window must be a non-empty [start, end]")
        for name in ("self_comment_probability", "negative_delay_probability",
                     "nest_probability"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be within [0, 1]")
        if self.comment_rate < 0:
            raise ValueError("comment_rate must be non-negative")
        if self.max_performance < 1:
            raise ValueError("max_performance must be at least 1")
        if self.comment_delay_median <= 0 or self.comment_delay_sigma < 0:
            raise ValueError("comment delay parameters out of range")
        if self.anomaly_bump and self.anomaly_bump.hi > self.max_performance:
            raise ValueError("bump region exceeds max_performance")


@dataclass
class GroundTruth:
    """Every sampled quantity the tests may want to check against."""

    seed: int
    n_accounts: int
    n_posts: int
    n_comments: int
    bump_accounts: int
    bump_region: Optional[tuple[int, int]]
    per_account_counts: dict[int, int]
    performance_histogram: dict[int, int]
    comments_per_post_histogram: dict[int, int] = field(default_factory=dict)
    first_delay_histogram: dict[int, int] = field(default_factory=dict)
    negative_first_delay_count: int = 0
    comment_delay_histogram: dict[int, int] = field(default_factory=dict)

    def to_json(self) -> str:
        def keyed(mapping):
            return {str(k): v for k, v in sorted(mapping.items())}

        payload = {
            "seed": self.seed,
            "n_accounts": self.n_accounts,
            "n_posts": self.n_posts,
            "n_comments": self.n_comments,
            "bump_accounts": self.bump_accounts,
            "bump_region": list(self.bump_region) if self.bump_region else None,
            "per_account_counts": keyed(self.per_account_counts),
            "performance_histogram": keyed(self.performance_histogram),
            "comments_per_post_histogram": keyed(self.comments_per_post_histogram),
            "first_delay_histogram": keyed(self.first_delay_histogram),
            "negative_first_delay_count": self.negative_first_delay_count,
            "comment_delay_histogram": keyed(self.comment_delay_histogram),
        }
        return json.dumps(payload, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        raw = json.loads(text)

        def unkeyed(mapping):
            return {int(k): v for k, v in mapping.items()}

        region = raw.get("bump_region")
        return cls(
            seed=raw["seed"],
            n_accounts=raw["n_accounts"],
            n_posts=raw["n_posts"],
            n_comments=raw["n_comments"],
            bump_accounts=raw["bump_accounts"],
            bump_region=tuple(region) if region else None,
            per_account_counts=unkeyed(raw["per_account_counts"]),
            performance_histogram=unkeyed(raw["performance_histogram"]),
            comments_per_post_histogram=unkeyed(
                raw["comments_per_post_histogram"]),
            first_delay_histogram=unkeyed(raw["first_delay_histogram"]),
            negative_first_delay_count=raw["negative_first_delay_count"],
            comment_delay_histogram=unkeyed(raw["comment_delay_histogram"]),
        )


@dataclass
class SynthData:
    posts: PostTable
    comments: CommentTable
    references: list[RefEntry]
    ground_truth: GroundTruth


@dataclass
class SynthOutput:
    posts_path: Path
    comments_path: Path
    reference_paths: list[Path]
    ground_truth_path: Path
    ground_truth: GroundTruth


# -- sampling helpers -------------------------------------------------------

def _lognormal_seconds(stream: Stream, n: int, median: np.ndarray,
                       sigma: np.ndarray) -> np.ndarray:
    """Lognormal draws rounded to whole non-negative seconds."""
    if n == 0:
        return np.empty(0, dtype=np.int64)
    z = stream.normal(n)
    values = np.exp(z * sigma + np.log(median))
    return np.rint(values).astype(np.int64)


def _sample_mixture(stream: Stream, profile: tuple[MixtureComponent, ...],
                    n: int) -> np.ndarray:
    if n == 0:
        return np.empty(0, dtype=np.int64)
    if not profile:
        raise SynthError("interevent_profile is required when any account "
                         "publishes more than one post")
    weights = np.array([c.weight for c in profile], dtype=np.float64)
    cdf = np.cumsum(weights) / weights.sum()
    cdf[-1] = 1.0
    component = np.searchsorted(cdf, stream.uniform(n), side="left")
    medians = np.array([c.median_seconds for c in profile])[component]
    sigmas = np.array([c.sigma for c in profile])[component]
    return _lognormal_seconds(stream, n, medians, sigmas)


def _pick_index(stream: Stream, n: int, size: int) -> np.ndarray:
    """n uniform indexes into range(size), from uniforms on (0, 1]."""
    u = stream.uniform(n)
    return np.ceil(u * size).astype(np.int64) - 1


def _histogram_dict(values: np.ndarray) -> dict[int, int]:
    if len(values) == 0:
        return {}
    uniq, counts = np.unique(values, return_counts=True)
    return dict(zip(uniq.tolist(), counts.tolist()))


# -- generation -------------------------------------------------------------

def _sample_counts(config: SynthConfig, stream: Stream) -> np.ndarray:
    supports = np.arange(1, config.max_performance + 1, dtype=np.int64)
    weights = np.asarray(evaluate_model(config.performance_model, supports),
                         dtype=np.float64)
    cdf = np.cumsum(weights) / weights.sum()
    cdf[-1] = 1.0
    base = 1 + np.searchsorted(cdf, stream.uniform(config.n_accounts),
                               side="left")
    bump = config.anomaly_bump
    if bump is None or bump.accounts == 0:
        return base.astype(np.int64)
    extra = stream.integers(bump.accounts, bump.lo, bump.hi)
    return np.concatenate([base.astype(np.int64), extra])


def _sample_post_times(config: SynthConfig, counts: np.ndarray,
                       gap_stream: Stream, start_stream: Stream):
    """Per-post timestamps: per account a start plus cumulative gaps.

    Accounts whose sampled gaps do not fit in the window are redrawn; a
    config that keeps overflowing is reported as infeasible rather than
    silently clipped.
    """
    w_start, w_end = config.window
    span = w_end - w_start
    gap_counts = counts - 1
    seg_end = np.cumsum(gap_counts)
    seg_start = seg_end - gap_counts
    total_gaps = int(seg_end[-1]) if len(seg_end) else 0

    gaps = _sample_mixture(gap_stream, config.interevent_profile, total_gaps) \
        if total_gaps else np.empty(0, dtype=np.int64)

    def segment_totals(indexes) -> np.ndarray:
        prefix = np.concatenate(([0], np.cumsum(gaps)))
        return prefix[seg_end[indexes]] - prefix[seg_start[indexes]]

    all_idx = np.arange(len(counts))
    totals = segment_totals(all_idx)
    bad = np.flatnonzero(totals > span)
    rounds = 0
    while len(bad) and rounds < _MAX_RESAMPLE_ROUNDS:
        rounds += 1
        positions = np.concatenate(
            [np.arange(seg_start[i], seg_end[i]) for i in bad])
        gaps[positions] = _sample_mixture(gap_stream,
                                          config.interevent_profile,
                                          len(positions))
        totals = segment_totals(all_idx)
        bad = np.flatnonzero(totals > span)
    if len(bad):
        raise SynthError(
            f"window of {span} s cannot hold {int(counts[bad[0]])} posts "
            f"with the configured inter-event profile")

    choices = span - totals + 1
    u = start_stream.uniform(len(counts))
    starts = w_start + (np.ceil(u * choices).astype(np.int64) - 1)

    prefix = np.concatenate(([0], np.cumsum(gaps)))
    post_offsets = np.cumsum(counts) - counts
    within = np.arange(int(counts.sum())) - np.repeat(post_offsets, counts)
    gather = np.repeat(seg_start, counts) + within
    times = np.repeat(starts, counts) + (prefix[gather]
                                         - np.repeat(prefix[seg_start], counts))
    return times.astype(np.int64)


def generate_records(config: SynthConfig) -> SynthData:
    """Generate the corpus in memory; see module docstring for the model."""
    root = Stream(config.seed)
    counts_stream = root.spawn(1)
    gap_stream = root.spawn(2)
    start_stream = root.spawn(3)
    attach_stream = root.spawn(4)
    self_stream = root.spawn(5)
    author_stream = root.spawn(6)
    negative_stream = root.spawn(7)
    delay_stream = root.spawn(8)
    nest_stream = root.spawn(9)

    counts = _sample_counts(config, counts_stream)
    n_total = len(counts)
    account_ids = scramble(_ACCOUNT_COUNTER_BASE
                           + np.arange(1, n_total + 1, dtype=np.uint64))
    references = [RefEntry(int(aid), _account_url(i))
                  for i, aid in enumerate(account_ids.tolist(), start=1)]

    times = _sample_post_times(config, counts, gap_stream, start_stream)
    n_posts = int(counts.sum())
    post_mids = scramble(np.arange(1, n_posts + 1, dtype=np.uint64))
    post_authors = np.repeat(account_ids, counts)

    order = np.lexsort((post_mids, times))
    post_mids = post_mids[order]
    post_authors = post_authors[order]
    times = times[order]
    posts = PostTable(post_mids, post_authors, times)

    truth = GroundTruth(
        seed=config.seed,
        n_accounts=n_total,
        n_posts=n_posts,
        n_comments=0,
        bump_accounts=config.anomaly_bump.accounts if config.anomaly_bump else 0,
        bump_region=(config.anomaly_bump.lo, config.anomaly_bump.hi)
        if config.anomaly_bump else None,
        per_account_counts=dict(zip(account_ids.tolist(), counts.tolist())),
        performance_histogram=_histogram_dict(counts),
    )

    n_comments = int(round(config.comment_rate * n_posts))
    if n_comments == 0:
        comments = CommentTable(np.empty(0, np.uint64), np.empty(0, np.uint64),
                                np.empty(0, np.int64), np.empty(0, np.uint64))
        return SynthData(posts, comments, references, truth)

    target = _pick_index(attach_stream, n_comments, n_posts)
    target_mid = post_mids[target]
    target_time = times[target]
    target_author = post_authors[target]

    is_self = self_stream.chance(n_comments, config.self_comment_probability)
    other_idx = _pick_index(author_stream, n_comments, n_total)
    collide = account_ids[other_idx] == target_author
    other_idx[collide] = (other_idx[collide] + 1) % n_total
    comment_author = np.where(is_self, target_author, account_ids[other_idx])

    is_negative = negative_stream.chance(n_comments,
                                         config.negative_delay_probability)
    magnitude = _lognormal_seconds(
        delay_stream, n_comments,
        np.full(n_comments, config.comment_delay_median),
        np.full(n_comments, config.comment_delay_sigma))
    delays = np.where(is_negative, -(magnitude + 1), magnitude)
    comment_time = target_time + delays
    comment_mids = scramble(np.arange(n_posts + 1, n_posts + n_comments + 1,
                                      dtype=np.uint64))
    nests = nest_stream.chance(n_comments, config.nest_probability)

    # Group by target post; within a group a nesting comment parents the
    # previous comment of the same group, everything else parents the post.
    grp = np.lexsort((comment_mids, comment_time, target))
    tgt_g = target[grp]
    mid_g = comment_mids[grp]
    first = np.empty(n_comments, dtype=bool)
    first[0] = True
    first[1:] = tgt_g[1:] != tgt_g[:-1]
    parent = target_mid[grp].copy()
    nested = ~first & nests[grp]
    prev_mid = np.concatenate(([np.uint64(0)], mid_g[:-1]))
    parent[nested] = prev_mid[nested]

    time_g = comment_time[grp]
    author_g = comment_author[grp]
    out_order = np.lexsort((mid_g, time_g))
    comments = CommentTable(mid_g[out_order], author_g[out_order],
                            time_g[out_order], parent[out_order])

    per_post = np.bincount(target, minlength=n_posts)
    truth.n_comments = n_comments
    truth.comments_per_post_histogram = _histogram_dict(per_post)
    first_delays = time_g[first] - target_time[grp][first]
    truth.first_delay_histogram = _histogram_dict(first_delays)
    truth.negative_first_delay_count = int((first_delays < 0).sum())
    truth.comment_delay_histogram = _histogram_dict(delays)
    return SynthData(posts, comments, references, truth)


def _account_url(index: int) -> str:
    return f"https://platform.example/profile/u{index:07d}"


def _write_rows(path: Path, parts: list[np.ndarray]) -> None:
    """Write aligned columns as row#<TAB>col1<TAB>... in 64k-row chunks."""
    n = len(parts[0])
    with open(path, "w", encoding="utf-8") as out:
        for lo in range(0, n, 65536):
            hi = min(lo + 65536, n)
            cols = [p[lo:hi].tolist() for p in parts]
            rows = [
                "\t".join([str(lo + 1 + i)] + [str(c[i]) for c in cols])
                for i in range(hi - lo)
            ]
            out.write("\n".join(rows))
            out.write("\n")


def generate(config: SynthConfig, out_dir) -> SynthOutput:
    """Generate and write posts/comments/reference files plus ground truth."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = generate_records(config)

    posts_path = out / "posts.tsv"
    comments_path = out / "comments.tsv"
    accounts_path = out / "accounts.ref.tsv"
    truth_path = out / "ground_truth.json"

    _write_rows(posts_path, [data.posts.message_id, data.posts.author_id,
                             data.posts.created])
    _write_rows(comments_path, [data.comments.message_id,
                                data.comments.author_id,
                                data.comments.created,
                                data.comments.parent_id])
    with open(accounts_path, "w", encoding="utf-8") as handle:
        for row, entry in enumerate(data.references, start=1):
            handle.write(f"{row}\t{entry.id}\t{entry.url}\n")
    truth_path.write_text(data.ground_truth.to_json(), encoding="utf-8")

    return SynthOutput(posts_path, comments_path, [accounts_path],
                       truth_path, data.ground_truth)


# -- verification -------------------------------------------------------

def _median_of(bins: dict[int, int]) -> Optional[int]:
    if not bins:
        return None
    total = sum(bins.values())
    running = 0
    for s in sorted(bins):
        running += bins[s]
        if 2 * running >= total:
            return s
    return None


def verify_against_ground_truth(report: dict, truth: GroundTruth,
                                bump_tolerance: float = 0.10
                                ) -> list[tuple[str, bool, str]]:
    """Check an analysis report against recorded ground truth.

    Count checks are exact; the anomaly bump is allowed the given relative
    tolerance.  Returns (check name, passed, detail) triples and never
    raises on failures.
    """
    checks: list[tuple[str, bool, str]] = []

    def check(name: str, got, want) -> None:
        checks.append((name, got == want, f"got {got!r}, want {want!r}"))

    summary = report.get("summary", {})
    check("n_posts", summary.get("n_posts"), truth.n_posts)
    check("n_post_accounts", summary.get("n_post_accounts"), truth.n_accounts)
    check("n_comments", summary.get("n_comments"), truth.n_comments)

    dists = report.get("distributions", {})
    perf = dists.get("posts_per_account", {})
    check("posts_per_account.total_weight", perf.get("total_weight"),
          truth.n_accounts)
    check("posts_per_account.max_support", perf.get("max_support"),
          max(truth.performance_histogram, default=None))
    check("posts_per_account.median", perf.get("median_by_population"),
          _median_of(truth.performance_histogram))

    commented = {k: v for k, v in truth.comments_per_post_histogram.items()
                 if k >= 1}
    per_post = dists.get("comments_per_commented_post", {})
    check("comments_per_commented_post.total_weight",
          per_post.get("total_weight"), sum(commented.values()))
    check("comments_per_commented_post.median",
          per_post.get("median_by_population"), _median_of(commented))

    conclusions = report.get("conclusions", {})
    check("negative_delay_count", conclusions.get("negative_delay_count"),
          truth.negative_first_delay_count)

    anomaly = report.get("anomaly")
    if truth.bump_accounts:
        if not anomaly:
            checks.append(("anomaly_bump", False,
                           f"no anomaly reported, want ≈{truth.bump_accounts}"))
        else:
            got = anomaly.get("excess_estimate", 0.0)
            ok = abs(got - truth.bump_accounts) <= \
                bump_tolerance * truth.bump_accounts
            checks.append(("anomaly_bump", ok,
                           f"excess {got:.1f}, want {truth.bump_accounts} "
                           f"±{bump_tolerance:.0%}"))
    else:
        checks.append(("anomaly_absent", anomaly is None,
                       f"anomaly block: {anomaly!r}"))
    return checks

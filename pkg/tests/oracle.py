"""Naive reference implementations used to cross-check the engine.

Everything here is deliberately written the slow, obvious way with plain
dicts and loops, and never imports the package's metric machinery.  Inputs
are plain record tuples: posts (message_id, author_id, created), comments
(message_id, author_id, created, parent_id).  Message ids are assumed
unique per table, which is what ingest guarantees.
"""

from collections import Counter, defaultdict

DEPTH_LIMIT = 64

KIND_NAMES = [
    "posts_per_account",
    "post_share_by_performance",
    "post_interevent",
    "comments_per_account",
    "comment_mass_by_commenter_performance",
    "comments_per_commented_post",
    "comment_mass_by_post_aggregation",
    "self_comments_per_commented_post",
    "comments_received_per_post_author",
    "comment_mass_by_author_aggregation",
    "commentators_per_commented_post",
    "commentators_per_post_author",
    "commented_posts_per_commentator",
    "post_authors_per_commentator",
    "first_comment_delay",
    "comment_interevent",
]


def resolve_comments(posts, comments, depth_limit=DEPTH_LIMIT):
    """Walk each comment's parent chain to a root post.

    Returns (resolved, unresolved): resolved maps comment row ->
    (post row, depth); unresolved is a sorted list of (row, reason) with
    reason in {orphan, cycle, depth_exceeded}.  A parent id present in
    both tables counts as the post.
    """
    post_row = {p[0]: i for i, p in enumerate(posts)}
    comment_row = {c[0]: i for i, c in enumerate(comments)}
    resolved = {}
    unresolved = []
    for row, comment in enumerate(comments):
        seen = {row}
        parent = comment[3]
        depth = 1
        outcome = None
        while depth <= depth_limit:
            if parent in post_row:
                outcome = (post_row[parent], depth)
                break
            nxt = comment_row.get(parent)
            if nxt is None:
                outcome = "orphan"
                break
            if nxt in seen:
                outcome = "cycle"
                break
            seen.add(nxt)
            parent = comments[nxt][3]
            depth += 1
        if outcome is None:
            # Past the cap: walk on without it; a revisit means a true
            # cycle, anything else is just a too-deep chain.
            outcome = "depth_exceeded"
            while True:
                if parent in post_row:
                    break
                nxt = comment_row.get(parent)
                if nxt is None:
                    break
                if nxt in seen:
                    outcome = "cycle"
                    break
                seen.add(nxt)
                parent = comments[nxt][3]
        if isinstance(outcome, tuple):
            resolved[row] = outcome
        else:
            unresolved.append((row, outcome))
    return resolved, sorted(unresolved)


def median_pop(bins):
    if not bins:
        return None
    total = sum(bins.values())
    running = 0
    for s in sorted(bins):
        running += bins[s]
        if 2 * running >= total:
            return s


def median_mass(bins):
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


def curve_of(bins):
    supports = sorted(bins)
    total = sum(bins.values())
    fractions = []
    running = 0
    for s in supports:
        running += bins[s]
        fractions.append(running / total)
    if fractions:
        fractions[-1] = 1.0
    return tuple(supports), tuple(fractions)


def result_of(bins):
    """Scalar summary mirroring the engine's DistributionResult fields."""
    bins = {s: c for s, c in bins.items() if c > 0}
    out = {
        "bins": bins,
        "total_weight": sum(bins.values()),
        "curve": curve_of(bins) if bins else ((), ()),
    }
    if not bins:
        out.update(median_by_population=None, median_by_mass=None,
                   max_support=None, min_support=None,
                   zero_count=0, negative_count=0)
        return out
    out.update(
        median_by_population=median_pop(bins),
        median_by_mass=median_mass(bins),
        max_support=max(bins),
        min_support=min(bins),
        zero_count=bins.get(0, 0),
        negative_count=sum(c for s, c in bins.items() if s < 0),
    )
    return out


def _mass(bins):
    return {s: s * c for s, c in bins.items() if s > 0}


def _pooled_gaps(times_by_key):
    gaps = Counter()
    for times in times_by_key.values():
        ordered = sorted(times)
        for a, b in zip(ordered, ordered[1:]):
            gaps[b - a] += 1
    return dict(gaps)


def compute_bins(posts, comments, depth_limit=DEPTH_LIMIT):
    """All 16 metric histograms as plain {support: count} dicts."""
    resolved, _ = resolve_comments(posts, comments, depth_limit)

    posts_by_author = defaultdict(list)
    for mid, aid, created in posts:
        posts_by_author[aid].append(created)
    comments_by_author = defaultdict(list)
    for mid, aid, created, pid in comments:
        comments_by_author[aid].append(created)

    # per resolved comment: root post row and derived views
    by_root = defaultdict(list)          # post row -> comment rows
    for row, (root, _depth) in resolved.items():
        by_root[root].append(row)

    out = {}
    per_account = Counter(len(v) for v in posts_by_author.values())
    out["posts_per_account"] = dict(per_account)
    out["post_share_by_performance"] = _mass(per_account)
    out["post_interevent"] = _pooled_gaps(posts_by_author)

    per_commenter = Counter(len(v) for v in comments_by_author.values())
    out["comments_per_account"] = dict(per_commenter)
    out["comment_mass_by_commenter_performance"] = _mass(per_commenter)
    out["comment_interevent"] = _pooled_gaps(comments_by_author)

    out["comments_per_commented_post"] = dict(
        Counter(len(rows) for rows in by_root.values()))
    out["comment_mass_by_post_aggregation"] = _mass(
        Counter(len(rows) for rows in by_root.values()))

    self_counts = Counter()
    for root, rows in by_root.items():
        author = posts[root][1]
        self_counts[sum(1 for r in rows if comments[r][1] == author)] += 1
    out["self_comments_per_commented_post"] = dict(self_counts)

    received = Counter()                 # post author -> resolved comments
    commentators_of_author = defaultdict(set)
    commented_posts_of_author = defaultdict(set)
    for root, rows in by_root.items():
        author = posts[root][1]
        received[author] += len(rows)
        commented_posts_of_author[author].add(root)
        for r in rows:
            commentators_of_author[author].add(comments[r][1])
    out["comments_received_per_post_author"] = dict(
        Counter(received.values()))
    out["comment_mass_by_author_aggregation"] = _mass(
        Counter(received.values()))
    out["commentators_per_commented_post"] = dict(Counter(
        len({comments[r][1] for r in rows}) for rows in by_root.values()))
    out["commentators_per_post_author"] = dict(Counter(
        len(s) for s in commentators_of_author.values()))

    roots_of_commentator = defaultdict(set)
    authors_of_commentator = defaultdict(set)
    for row, (root, _depth) in resolved.items():
        commentator = comments[row][1]
        roots_of_commentator[commentator].add(root)
        authors_of_commentator[commentator].add(posts[root][1])
    out["commented_posts_per_commentator"] = dict(Counter(
        len(s) for s in roots_of_commentator.values()))
    out["post_authors_per_commentator"] = dict(Counter(
        len(s) for s in authors_of_commentator.values()))

    delays = Counter()
    for root, rows in by_root.items():
        first = min(comments[r][2] for r in rows)
        delays[first - posts[root][2]] += 1
    out["first_comment_delay"] = dict(delays)
    return out


def compute_results(posts, comments, depth_limit=DEPTH_LIMIT):
    """All 16 metrics as full scalar summaries keyed by kind name."""
    return {name: result_of(bins)
            for name, bins in compute_bins(posts, comments,
                                           depth_limit).items()}


def compute_summary(posts, comments, depth_limit=DEPTH_LIMIT):
    resolved, _ = resolve_comments(posts, comments, depth_limit)
    times = [p[2] for p in posts] + [c[2] for c in comments]
    commented_posts = {root for root, _ in resolved.values()}
    commented_authors = {posts[root][1] for root in commented_posts}
    return {
        "first_time": min(times) if times else None,
        "last_time": max(times) if times else None,
        "n_posts": len(posts),
        "n_post_accounts": len({p[1] for p in posts}),
        "n_comments": len(comments),
        "n_commenters": len({c[1] for c in comments}),
        "n_comments_resolved": len(resolved),
        "n_commented_posts": len(commented_posts),
        "n_commented_post_authors": len(commented_authors),
    }


def negative_delay_result(posts, comments, depth_limit=DEPTH_LIMIT):
    bins = compute_bins(posts, comments, depth_limit)["first_comment_delay"]
    return result_of({s: c for s, c in bins.items() if s < 0})

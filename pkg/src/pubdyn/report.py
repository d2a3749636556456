"""Analysis report assembly and byte-stable serialization.

The JSON report carries summary counts, per-distribution scalars (medians,
extremes, zero/negative counters), the fitted model, the anomaly block and
the derived conclusion fields.  Histogram series themselves go to one CSV
per metric kind, named <metric_kind>.csv, with (support,count) rows.

Serialization is deterministic: keys are emitted in sorted order, floats
with 17 significant digits, integers exactly.  The same analysis therefore
produces byte-identical files regardless of thread count or platform.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .fitkit import AnomalyReport, FitDiagnostics, FitModel, evaluate_model
from .metrics import DistributionResult, MetricKind, SummaryStats

__all__ = [
    "build_report",
    "stable_json",
    "write_distribution_csv",
    "write_residuals_csv",
    "read_histogram_csv",
]


def _mode_support(bins: Mapping[int, int]) -> Optional[int]:
    """Smallest support holding the largest count."""
    if not bins:
        return None
    top = max(bins.values())
    return min(s for s, c in bins.items() if c == top)


def _fraction_at(result: DistributionResult,
                 support: Optional[int]) -> Optional[float]:
    if support is None:
        return None
    curve = result.cumulative
    for s, f in zip(curve.support, curve.cumulative_fraction):
        if s == support:
            return f
    return None


def summary_block(summary: SummaryStats) -> dict:
    return {
        "first_time": summary.first_time,
        "last_time": summary.last_time,
        "span_days": summary.span_days,
        "n_posts": summary.n_posts,
        "n_post_accounts": summary.n_post_accounts,
        "n_comments": summary.n_comments,
        "n_commenters": summary.n_commenters,
        "n_comments_resolved": summary.n_comments_resolved,
        "n_commented_posts": summary.n_commented_posts,
        "n_commented_post_authors": summary.n_commented_post_authors,
        "mean_post_performance": summary.mean_post_performance,
        "mean_comment_performance": summary.mean_comment_performance,
        "mean_comments_per_commented_post":
            summary.mean_comments_per_commented_post,
        "mean_comments_per_commented_author":
            summary.mean_comments_per_commented_author,
    }


def distribution_block(result: DistributionResult) -> dict:
    return {
        "total_weight": result.histogram.total_weight,
        "n_bins": len(result.histogram.bins),
        "median_by_population": result.median_by_population,
        "median_by_mass": result.median_by_mass,
        "max_support": result.max_support,
        "min_support": result.min_support,
        "zero_count": result.zero_count,
        "negative_count": result.negative_count,
    }


def fit_block(model: FitModel, diagnostics: FitDiagnostics) -> dict:
    return {
        "model": model.as_dict(),
        "diagnostics": {
            "max_relative_error": diagnostics.max_relative_error,
            "interval": list(diagnostics.interval),
            "excluded_region": list(diagnostics.excluded_region)
            if diagnostics.excluded_region else None,
            "iterations": diagnostics.iterations,
            "converged": diagnostics.converged,
        },
    }


def anomaly_block(report: AnomalyReport) -> dict:
    return {
        "region": list(report.region) if report.region else None,
        "excess_estimate": report.excess_estimate,
        "lower_bound": report.lower_bound,
        "upper_bound": report.upper_bound,
        "residuals": dict(report.residuals),
    }


def conclusions_block(results: Mapping[MetricKind, DistributionResult],
                      anomaly: Optional[AnomalyReport],
                      negative: Optional[DistributionResult]) -> dict:
    """Derived headline numbers, each recomputed from the distributions."""

    def res(kind: MetricKind) -> Optional[DistributionResult]:
        return results.get(kind)

    def med(kind: MetricKind) -> Optional[int]:
        r = res(kind)
        return r.median_by_population if r else None

    def mass_med(kind: MetricKind) -> Optional[int]:
        r = res(kind)
        return r.median_by_mass if r else None

    def mode(kind: MetricKind) -> Optional[int]:
        r = res(kind)
        return _mode_support(r.histogram.bins) if r else None

    perf = res(MetricKind.posts_per_account)
    share = res(MetricKind.post_share_by_performance)
    selfc = res(MetricKind.self_comments_per_commented_post)
    delay = res(MetricKind.first_comment_delay)

    share_below = None
    if share is not None and perf is not None:
        share_below = _fraction_at(share, perf.median_by_mass)
    no_self_share = None
    if selfc is not None and selfc.histogram.total_weight:
        no_self_share = selfc.zero_count / selfc.histogram.total_weight

    return {
        "anomalous_account_excess":
            anomaly.excess_estimate if anomaly else None,
        "post_mass_median": mass_med(MetricKind.posts_per_account),
        "share_posts_below_mass_median": share_below,
        "median_post_interval_seconds": med(MetricKind.post_interevent),
        "comment_mass_median_per_commenter":
            mass_med(MetricKind.comments_per_account),
        "median_comments_per_commented_post":
            med(MetricKind.comments_per_commented_post),
        "comment_mass_median_per_commented_post":
            mass_med(MetricKind.comments_per_commented_post),
        "share_commented_posts_without_self_comments": no_self_share,
        "median_comments_received_per_commented_author":
            med(MetricKind.comments_received_per_post_author),
        "comment_mass_median_per_commented_author":
            mass_med(MetricKind.comments_received_per_post_author),
        "median_commentators_per_commented_post":
            med(MetricKind.commentators_per_commented_post),
        "median_commentators_per_post_author":
            med(MetricKind.commentators_per_post_author),
        "median_commented_posts_per_commentator":
            med(MetricKind.commented_posts_per_commentator),
        "median_post_authors_per_commentator":
            med(MetricKind.post_authors_per_commentator),
        "median_first_comment_delay_seconds":
            med(MetricKind.first_comment_delay),
        "most_probable_first_comment_delay_seconds":
            mode(MetricKind.first_comment_delay),
        "max_first_comment_delay_seconds":
            delay.max_support if delay else None,
        "negative_delay_count": delay.negative_count if delay else None,
        "median_negative_delay_seconds":
            negative.median_by_population if negative else None,
        "min_negative_delay_seconds":
            negative.min_support if negative else None,
        "median_comment_interval_seconds": med(MetricKind.comment_interevent),
        "most_probable_comment_interval_seconds":
            mode(MetricKind.comment_interevent),
    }


def build_report(summary: SummaryStats,
                 results: Mapping[MetricKind, DistributionResult],
                 fit_model: Optional[FitModel] = None,
                 fit_diagnostics: Optional[FitDiagnostics] = None,
                 anomaly: Optional[AnomalyReport] = None,
                 negative: Optional[DistributionResult] = None,
                 ingest: Optional[dict] = None) -> dict:
    report = {
        "schema_version": 1,
        "summary": summary_block(summary),
        "distributions": {kind.value: distribution_block(result)
                          for kind, result in results.items()},
        "fit": fit_block(fit_model, fit_diagnostics)
        if fit_model is not None else None,
        "anomaly": anomaly_block(anomaly) if anomaly is not None else None,
        "conclusions": conclusions_block(results, anomaly, negative),
    }
    if negative is not None:
        report["negative_first_comment_delay"] = distribution_block(negative)
    if ingest is not None:
        report["ingest"] = ingest
    return report


# -- stable serialization -------------------------------------------------

def _format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite float {value!r}")
    return format(value, ".17g")


def _emit(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, Mapping):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def stable_json(obj) -> str:
    """Deterministic JSON text: sorted keys, 17-significant-digit floats."""
    out: list[str] = []
    _emit(obj, out)
    out.append("\n")
    return "".join(out)


# -- CSV series -------------------------------------------------------------

def write_distribution_csv(path, result: DistributionResult) -> None:
    with open(path, "w", encoding="utf-8") as out:
        out.write("support,count\n")
        for s in sorted(result.histogram.bins):
            out.write(f"{s},{result.histogram.bins[s]}\n")


def write_residuals_csv(path, histogram, model: FitModel) -> None:
    bins = histogram.bins if hasattr(histogram, "bins") else histogram
    with open(path, "w", encoding="utf-8") as out:
        out.write("support,observed,predicted,residual\n")
        for s in sorted(bins):
            if s < 1:
                continue
            predicted = evaluate_model(model, s)
            observed = float(bins[s])
            out.write(f"{s},{_format_float(observed)},"
                      f"{_format_float(predicted)},"
                      f"{_format_float(observed - predicted)}\n")


def read_histogram_csv(path) -> dict[int, float]:
    """Read a (support,count) CSV into a support -> value mapping.

    A single header line is tolerated; any other malformed content raises
    ValueError with the offending line number.
    """
    bins: dict[int, float] = {}
    text = Path(path).read_text(encoding="utf-8")
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise ValueError(f"{path}:{number}: expected 2 fields, "
                             f"got {len(fields)}")
        try:
            support = int(fields[0])
            value = float(fields[1])
        except ValueError:
            if number == 1:
                continue
            raise ValueError(f"{path}:{number}: non-numeric row "
                             f"{line!r}") from None
        if support in bins:
            raise ValueError(f"{path}:{number}: duplicate support {support}")
        bins[support] = value
    if not bins:
        raise ValueError(f"{path}: no usable histogram rows")
    return bins

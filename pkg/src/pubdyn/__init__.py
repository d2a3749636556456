"""Publishing dynamics analytics for post/comment event logs."""

from .corpus import (ContainerKind, ContainerNode, Corpus, RelationEdge,
                     RelationGraph, ResolvedComment, add_relation,
                     build_corpus, collapse_multi_edges,
                     commentator_author_graph, resolve_parent_chain)
from .fitkit import (AnomalyReport, FitConvergenceError, FitDiagnostics,
                     FitError, FitModel, analyze_performance_histogram,
                     detect_anomaly_region, estimate_excess, evaluate_model,
                     fit)
from .ingest import (CommentRecord, CommentTable, IngestError, IngestReport,
                     InternTable, PostRecord, PostTable, RefEntry,
                     TableFormat, parse_comments, parse_posts,
                     parse_references, write_quarantine)
from .metrics import (COMMENT_KINDS, POST_KINDS, CumulativeCurve,
                      DistributionResult, MetricKind, SparseHistogram,
                      SummaryStats, compute_all, compute_distribution,
                      compute_summary, median_by_mass, median_by_population,
                      negative_delay_stats)
from .report import (build_report, read_histogram_csv, stable_json,
                     write_distribution_csv, write_residuals_csv)
from .rng import Stream, mix64, scramble
from .synth import (AnomalyBump, GroundTruth, MixtureComponent, SynthConfig,
                    SynthError, generate, generate_records,
                    verify_against_ground_truth)

__version__ = "0.1.0"

__all__ = [
    "AnomalyBump", "AnomalyReport", "COMMENT_KINDS", "CommentRecord",
    "CommentTable", "ContainerKind", "ContainerNode", "Corpus",
    "CumulativeCurve", "DistributionResult", "FitConvergenceError",
    "FitDiagnostics", "FitError", "FitModel", "GroundTruth", "IngestError",
    "IngestReport", "InternTable", "MetricKind", "MixtureComponent",
    "POST_KINDS", "PostRecord", "PostTable", "RefEntry", "RelationEdge",
    "RelationGraph", "ResolvedComment", "SparseHistogram", "Stream",
    "SummaryStats", "SynthConfig", "SynthError", "TableFormat",
    "add_relation", "analyze_performance_histogram", "build_corpus",
    "build_report", "collapse_multi_edges", "commentator_author_graph",
    "compute_all", "compute_distribution", "compute_summary",
    "detect_anomaly_region", "estimate_excess", "evaluate_model", "fit",
    "generate", "generate_records", "median_by_mass",
    "median_by_population", "mix64", "negative_delay_stats",
    "parse_comments", "parse_posts", "parse_references",
    "read_histogram_csv", "resolve_parent_chain", "scramble", "stable_json",
    "verify_against_ground_truth", "write_distribution_csv",
    "write_quarantine", "write_residuals_csv",
]

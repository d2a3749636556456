"""Command-line front end.

Subcommands:

  analyze   parse raw post/comment tables, compute every distribution,
            fit the performance decay model and write a report directory
  fit       fit the decay model to a (support,count) CSV histogram
  synth     generate a synthetic corpus from a config file
  verify    compare an analysis report against synthetic ground truth

Exit codes: 0 success, 1 usage error, 2 ingest or data failure,
3 fit failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Mapping, Optional

from .corpus import build_corpus
from .fitkit import FitError, FitModel, analyze_performance_histogram
from .ingest import (CommentTable, IngestError, TableFormat, parse_comments,
                     parse_posts, write_quarantine)
from .metrics import (COMMENT_KINDS, POST_KINDS, MetricKind, compute_all,
                      compute_summary, negative_delay_stats)
from .report import (anomaly_block, build_report, fit_block,
                     read_histogram_csv, stable_json, write_distribution_csv,
                     write_residuals_csv)
from .synth import (AnomalyBump, GroundTruth, MixtureComponent, SynthConfig,
                    SynthError, generate, verify_against_ground_truth)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_FIT = 3


class UsageError(Exception):
    pass


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_region(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise ValueError(f"expected LO:HI, got {text!r}")
    try:
        region = (int(lo), int(hi))
    except ValueError:
        raise ValueError(f"region bounds must be integers, got {text!r}") \
            from None
    if region[0] > region[1]:
        raise ValueError(f"region lower bound exceeds upper in {text!r}")
    return region


def _region_arg(text: str) -> tuple[int, int]:
    try:
        return parse_region(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# -- config files ---------------------------------------------------------

def read_config(path) -> dict[str, str]:
    """Flat key = value file; '#' starts a comment, blank lines ignored."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    mapping: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{number}: expected key = value")
        mapping[key] = value
    return mapping


def _cfg_int(cfg: Mapping[str, str], key: str, default: int) -> int:
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"config key {key!r} must be an integer, "
                          f"got {cfg[key]!r}") from None


def _cfg_float(cfg: Mapping[str, str], key: str, default: float) -> float:
    if key not in cfg:
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"config key {key!r} must be a number, "
                          f"got {cfg[key]!r}") from None


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _cfg_bool(cfg: Mapping[str, str], key: str, default: bool) -> bool:
    if key not in cfg:
        return default
    value = cfg[key].lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ConfigError(f"config key {key!r} must be a boolean, "
                      f"got {cfg[key]!r}")


def _cfg_region(cfg: Mapping[str, str], key: str) -> Optional[tuple[int, int]]:
    if key not in cfg:
        return None
    try:
        return parse_region(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from None


def _required(cfg: Mapping[str, str], key: str) -> str:
    if key not in cfg:
        raise ConfigError(f"missing config key {key!r}")
    return cfg[key]


def _float_list(cfg: Mapping[str, str], key: str) -> list[float]:
    try:
        return [float(part) for part in _required(cfg, key).split(",")
                if part.strip()]
    except ValueError:
        raise ConfigError(f"config key {key!r} must be a comma-separated "
                          "list of numbers") from None


def synth_config_from_mapping(cfg: Mapping[str, str],
                              seed_override: Optional[int] = None
                              ) -> SynthConfig:
    model = FitModel(
        amplitude=float(_required(cfg, "amplitude")),
        tail_coef=float(_required(cfg, "tail_coef")),
        tail_exp=float(_required(cfg, "tail_exp")),
        mid_coef=float(_required(cfg, "mid_coef")),
        mid_exp=float(_required(cfg, "mid_exp")),
    )
    window = (int(_required(cfg, "window_start")),
              int(_required(cfg, "window_end")))

    profile: tuple[MixtureComponent, ...] = ()
    if "interevent_medians" in cfg:
        medians = _float_list(cfg, "interevent_medians")
        weights = _float_list(cfg, "interevent_weights")
        sigmas = _float_list(cfg, "interevent_sigmas")
        if not len(medians) == len(weights) == len(sigmas):
            raise ConfigError("interevent_weights, interevent_medians and "
                              "interevent_sigmas must have equal lengths")
        profile = tuple(MixtureComponent(w, m, s)
                        for w, m, s in zip(weights, medians, sigmas))

    bump = None
    if _cfg_int(cfg, "bump_accounts", 0) > 0:
        bump = AnomalyBump(lo=int(_required(cfg, "bump_lo")),
                           hi=int(_required(cfg, "bump_hi")),
                           accounts=_cfg_int(cfg, "bump_accounts", 0))

    seed = seed_override if seed_override is not None \
        else int(_required(cfg, "seed"))
    return SynthConfig(
        seed=seed,
        n_accounts=int(_required(cfg, "n_accounts")),
        performance_model=model,
        window=window,
        interevent_profile=profile,
        anomaly_bump=bump,
        comment_rate=_cfg_float(cfg, "comment_rate", 0.0),
        self_comment_probability=_cfg_float(cfg, "self_comment_probability",
                                            0.0),
        max_performance=_cfg_int(cfg, "max_performance", 300),
        comment_delay_median=_cfg_float(cfg, "comment_delay_median", 3000.0),
        comment_delay_sigma=_cfg_float(cfg, "comment_delay_sigma", 1.5),
        negative_delay_probability=_cfg_float(cfg,
                                              "negative_delay_probability",
                                              0.0),
        nest_probability=_cfg_float(cfg, "nest_probability", 0.0),
    )


# -- subcommands -------------------------------------------------------

def cmd_analyze(args) -> int:
    cfg = read_config(args.config) if args.config else {}

    posts_only = args.posts_only or _cfg_bool(cfg, "posts_only", False)
    comments_only = args.comments_only or _cfg_bool(cfg, "comments_only",
                                                    False)
    if posts_only and comments_only:
        raise UsageError("--posts-only and --comments-only are mutually "
                         "exclusive")
    threads = args.threads if args.threads is not None \
        else _cfg_int(cfg, "threads", 1)
    if threads < 1:
        raise UsageError("--threads must be at least 1")
    fmt_name = args.format or cfg.get("format", "tsv")
    if fmt_name not in ("tsv", "csv"):
        raise ConfigError(f"format must be tsv or csv, got {fmt_name!r}")
    fmt = TableFormat(delimiter="\t" if fmt_name == "tsv" else ",")

    exclude = args.exclude_region if args.exclude_region is not None \
        else _cfg_region(cfg, "exclude_region")
    interval = args.fit_interval if args.fit_interval is not None \
        else _cfg_region(cfg, "fit_interval")
    window = None
    if "window_start" in cfg or "window_end" in cfg:
        window = (_cfg_int(cfg, "window_start", 0),
                  _cfg_int(cfg, "window_end", 2**62))
    threshold = _cfg_float(cfg, "anomaly_threshold", 0.2)
    min_run = _cfg_int(cfg, "anomaly_min_run", 5)
    smoothing = _cfg_int(cfg, "smoothing_window", 5)
    depth_limit = _cfg_int(cfg, "depth_limit", 64)

    posts, post_report = parse_posts(args.posts, fmt, window)
    if len(posts) == 0:
        print("error: empty corpus: no post rows accepted", file=sys.stderr)
        return EXIT_DATA
    comment_report = None
    if posts_only:
        comments = CommentTable.from_records([])
    else:
        if args.comments is None:
            raise UsageError("--comments is required unless --posts-only "
                             "is given")
        comments, comment_report = parse_comments(args.comments, fmt, window)
        if comments_only and len(comments) == 0:
            print("error: empty corpus: no comment rows accepted",
                  file=sys.stderr)
            return EXIT_DATA

    corpus = build_corpus(posts, comments, depth_limit=depth_limit)
    kinds = None
    if posts_only:
        kinds = [k for k in MetricKind if k in POST_KINDS]
    elif comments_only:
        kinds = [k for k in MetricKind if k in COMMENT_KINDS]
    results = compute_all(corpus, kinds=kinds, threads=threads)
    summary = compute_summary(corpus)
    negative = negative_delay_stats(corpus) if not posts_only else None

    fit_model = fit_diag = anomaly = None
    if not comments_only:
        hist = results[MetricKind.posts_per_account].histogram
        if len(hist.bins) >= 6:
            fit_model, fit_diag, anomaly = analyze_performance_histogram(
                hist, exclude=exclude, interval=interval,
                threshold=threshold, min_run=min_run,
                smoothing_window=smoothing)

    ingest = {"posts": post_report.as_dict()}
    if comment_report is not None:
        ingest["comments"] = comment_report.as_dict()
    report = build_report(summary, results, fit_model, fit_diag, anomaly,
                          negative, ingest)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    report_path.write_text(stable_json(report), encoding="utf-8")
    for kind, result in results.items():
        write_distribution_csv(out / f"{kind.value}.csv", result)
    if fit_model is not None:
        write_residuals_csv(out / "fit_residuals.csv",
                            results[MetricKind.posts_per_account].histogram,
                            fit_model)
    if post_report.rows_quarantined:
        write_quarantine(out / "posts.quarantine.tsv", post_report)
    if comment_report is not None and comment_report.rows_quarantined:
        write_quarantine(out / "comments.quarantine.tsv", comment_report)
    print(f"wrote {report_path}")
    return EXIT_OK


def cmd_fit(args) -> int:
    bins = read_histogram_csv(args.histogram)
    model, diagnostics, anomaly = analyze_performance_histogram(
        bins, exclude=args.exclude_region, interval=args.fit_interval,
        threshold=args.threshold, min_run=args.min_run,
        smoothing_window=args.smoothing_window)
    payload = {
        "fit": fit_block(model, diagnostics),
        "anomaly": anomaly_block(anomaly) if anomaly is not None else None,
    }
    text = stable_json(payload)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = read_config(args.config)
    config = synth_config_from_mapping(cfg, seed_override=args.seed)
    output = generate(config, args.out)
    print(f"wrote {output.posts_path}")
    print(f"wrote {output.comments_path}")
    for path in output.reference_paths:
        print(f"wrote {path}")
    print(f"wrote {output.ground_truth_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    truth = GroundTruth.from_json(Path(args.truth).read_text(encoding="utf-8"))
    checks = verify_against_ground_truth(report, truth,
                                         bump_tolerance=args.tolerance)
    failures = 0
    for name, ok, detail in checks:
        if not ok:
            failures += 1
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_DATA


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pubdyn",
                     description="Publishing dynamics analytics")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="command")

    pa = sub.add_parser("analyze",
                        help="analyze post/comment tables into a report")
    pa.add_argument("--posts", required=True, help="posts table path")
    pa.add_argument("--comments", help="comments table path")
    pa.add_argument("--config", help="flat key = value config file")
    pa.add_argument("--out", required=True, help="output directory")
    side = pa.add_mutually_exclusive_group()
    side.add_argument("--posts-only", action="store_true",
                      help="compute post metrics only")
    side.add_argument("--comments-only", action="store_true",
                      help="compute comment metrics only")
    pa.add_argument("--exclude-region", type=_region_arg, metavar="LO:HI",
                    help="exclude a support region from the fit")
    pa.add_argument("--fit-interval", type=_region_arg, metavar="LO:HI",
                    help="restrict the fit to a support interval")
    pa.add_argument("--threads", type=int, help="worker threads (default 1)")
    pa.add_argument("--format", choices=("tsv", "csv"),
                    help="input table format (default tsv)")
    pa.set_defaults(func=cmd_analyze)

    pf = sub.add_parser("fit", help="fit the decay model to a histogram CSV")
    pf.add_argument("histogram", help="CSV of support,count rows")
    pf.add_argument("--out", help="output JSON path (default stdout)")
    pf.add_argument("--exclude-region", type=_region_arg, metavar="LO:HI")
    pf.add_argument("--fit-interval", type=_region_arg, metavar="LO:HI")
    pf.add_argument("--threshold", type=float, default=0.2,
                    help="anomaly detection threshold (default 0.2)")
    pf.add_argument("--min-run", type=int, default=5,
                    help="minimum anomalous run length (default 5)")
    pf.add_argument("--smoothing-window", type=int, default=5,
                    help="residual smoothing window (default 5)")
    pf.set_defaults(func=cmd_fit)

    ps = sub.add_parser("synth", help="generate a synthetic corpus")
    ps.add_argument("--config", required=True,
                    help="flat key = value config file")
    ps.add_argument("--out", required=True, help="output directory")
    ps.add_argument("--seed", type=int, help="override the config seed")
    ps.set_defaults(func=cmd_synth)

    pv = sub.add_parser("verify",
                        help="check a report against synthetic ground truth")
    pv.add_argument("--report", required=True, help="report.json path")
    pv.add_argument("--truth", required=True, help="ground_truth.json path")
    pv.add_argument("--tolerance", type=float, default=0.10,
                    help="relative tolerance for the bump excess")
    pv.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (IngestError, SynthError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())

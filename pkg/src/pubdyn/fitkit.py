"""Rational power-law fitting and anomaly analysis for performance histograms.

The model is  predicted(s) = amplitude / (tail_coef*(s-1)^tail_exp +
mid_coef*(s-1)^mid_exp + 1)  with tail_exp > mid_exp > 0, so the value at
s=1 is exactly the amplitude and the curve decays monotonically.

Fitting minimizes the sum of squared residuals between log observed and
log predicted counts; the data spans several orders of magnitude, so raw
residuals would be dominated by the head of the distribution.  The solver
is a damped Gauss-Newton iteration with an analytic Jacobian.

Anomaly handling is a two-pass pipeline: fit, scan the smoothed relative
residual for a sustained positive run, refit with that region excluded,
then integrate the positive residual over the region into an excess-count
estimate with an error envelope from the refit's max relative error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

__all__ = [
    "FitModel",
    "FitDiagnostics",
    "AnomalyReport",
    "FitError",
    "FitConvergenceError",
    "evaluate_model",
    "fit",
    "detect_anomaly_region",
    "estimate_excess",
    "analyze_performance_histogram",
]

Region = tuple[int, int]


@dataclass(frozen=True)
class FitModel:
    amplitude: float
    tail_coef: float
    tail_exp: float
    mid_coef: float
    mid_exp: float

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.tail_coef < 0 or self.mid_coef < 0:
            raise ValueError("coefficients must be non-negative")
        if not (self.tail_exp > self.mid_exp > 0):
            raise ValueError("exponents must satisfy tail_exp > mid_exp > 0")

    def as_dict(self) -> dict[str, float]:
        return {
            "amplitude": self.amplitude,
            "tail_coef": self.tail_coef,
            "tail_exp": self.tail_exp,
            "mid_coef": self.mid_coef,
            "mid_exp": self.mid_exp,
        }


@dataclass(frozen=True)
class FitDiagnostics:
    max_relative_error: float
    interval: Region
    excluded_region: Optional[Region] = None
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        if self.max_relative_error < 0:
            raise ValueError("max_relative_error must be non-negative")


@dataclass(frozen=True)
class AnomalyReport:
    region: Optional[Region]
    residuals: Mapping[int, float]
    excess_estimate: float
    lower_bound: float
    upper_bound: float

    def __post_init__(self):
        if not self.lower_bound <= self.excess_estimate <= self.upper_bound:
            raise ValueError("bounds must bracket the excess estimate")


class FitError(Exception):
    pass


class FitConvergenceError(FitError):
    """Iteration cap reached; carries the best model found so far."""

    def __init__(self, message: str, model: FitModel,
                 diagnostics: FitDiagnostics):
        super().__init__(message)
        self.model = model
        self.diagnostics = diagnostics


def evaluate_model(model: FitModel, s):
    """Model value at support s (scalar or array); domain is s >= 1."""
    arr = np.asarray(s, dtype=np.float64)
    if np.any(arr < 1):
        raise ValueError("model support starts at 1")
    x = arr - 1.0
    denom = (model.tail_coef * x ** model.tail_exp
             + model.mid_coef * x ** model.mid_exp + 1.0)
    out = model.amplitude / denom
    if np.isscalar(s) or arr.ndim == 0:
        return float(out)
    return out


# -- fitting ---------------------------------------------------------------

def _normalize_exclusions(exclude) -> list[Region]:
    if exclude is None:
        return []
    if isinstance(exclude, tuple) and len(exclude) == 2 and \
            all(isinstance(v, (int, np.integer)) for v in exclude):
        return [(int(exclude[0]), int(exclude[1]))]
    return [(int(lo), int(hi)) for lo, hi in exclude]


def _select_bins(histogram, exclude: list[Region],
                 interval: Optional[Region]):
    bins = histogram.bins if hasattr(histogram, "bins") else histogram
    supports = []
    values = []
    for s in sorted(bins):
        v = bins[s]
        if v <= 0:
            continue
        if interval is not None and not interval[0] <= s <= interval[1]:
            continue
        if any(lo <= s <= hi for lo, hi in exclude):
            continue
        supports.append(int(s))
        values.append(float(v))
    if supports and supports[0] < 1:
        raise FitError("model domain starts at support 1; "
                       f"got support {supports[0]}")
    return np.array(supports, dtype=np.float64), np.array(values)


def _theta_of(model: FitModel) -> np.ndarray:
    return np.array([math.log(model.amplitude),
                     math.log(max(model.tail_coef, 1e-300)),
                     model.tail_exp,
                     math.log(max(model.mid_coef, 1e-300)),
                     model.mid_exp])


def _model_of(theta: np.ndarray) -> FitModel:
    return FitModel(math.exp(theta[0]), math.exp(theta[1]), float(theta[2]),
                    math.exp(theta[3]), float(theta[4]))


def _initial_theta(supports: np.ndarray, values: np.ndarray) -> np.ndarray:
    tail_exp0, mid_exp0 = 2.8, 1.5
    amp0 = values[0] if supports[0] == 1 else float(values.max())
    target = math.sqrt(supports[0] * supports[-1])
    mid_i = int(np.argmin(np.abs(supports - target)))
    mid_i = max(mid_i, 1)
    x_mid = max(supports[mid_i] - 1.0, 1.0)
    x_hi = max(supports[-1] - 1.0, 2.0)
    mid_coef0 = max(amp0 / values[mid_i] - 1.0, 1e-9) / x_mid ** mid_exp0
    tail_rest = amp0 / values[-1] - 1.0 - mid_coef0 * x_hi ** mid_exp0
    tail_coef0 = max(tail_rest, 1e-9) / x_hi ** tail_exp0
    return np.array([math.log(amp0), math.log(tail_coef0), tail_exp0,
                     math.log(mid_coef0), mid_exp0])


def _log_residuals(theta: np.ndarray, x: np.ndarray, log_y: np.ndarray,
                   with_jacobian: bool):
    ln_a, ln_b, p, ln_c, q = theta
    b = math.exp(ln_b)
    c = math.exp(ln_c)
    xb = b * x ** p
    xc = c * x ** q
    denom = xb + xc + 1.0
    r = log_y - ln_a + np.log(denom)
    if not with_jacobian:
        return r, None
    logx = np.where(x > 0, np.log(np.maximum(x, 1e-300)), 0.0)
    jac = np.empty((len(x), 5))
    jac[:, 0] = -1.0
    jac[:, 1] = xb / denom
    jac[:, 2] = xb * logx / denom
    jac[:, 3] = xc / denom
    jac[:, 4] = xc * logx / denom
    return r, jac


def fit(histogram, exclude=None, init: Optional[FitModel] = None,
        interval: Optional[Region] = None, max_iterations: int = 500,
        tolerance: float = 1e-9) -> tuple[FitModel, FitDiagnostics]:
    """Fit the decay model to (support -> count) data.

    `histogram` is a SparseHistogram or any support->value mapping; values
    may be non-integer.  Bins with value <= 0 are skipped, `exclude` drops
    one region or a list of regions, and `interval` restricts both the
    fitted bins and the reported max relative error.

    Raises FitError when fewer than 6 usable bins remain, and
    FitConvergenceError (best model attached) when the iteration cap is
    reached without the parameters settling.
    """
    exclusions = _normalize_exclusions(exclude)
    supports, values = _select_bins(histogram, exclusions, interval)
    if len(supports) < 6:
        raise FitError(f"need at least 6 distinct support values to fit "
                       f"5 parameters; got {len(supports)}")

    x = supports - 1.0
    log_y = np.log(values)
    theta = _theta_of(init) if init is not None else \
        _initial_theta(supports, values)

    r, jac = _log_residuals(theta, x, log_y, True)
    ssr = float(r @ r)
    lam = 1e-3
    best_theta, best_ssr = theta.copy(), ssr
    converged = False
    iterations = 0

    for _ in range(max_iterations):
        iterations += 1
        jtj = jac.T @ jac
        grad = jac.T @ r
        step = None
        smallest_try = math.inf
        for _ in range(60):
            damped = jtj + lam * np.diag(np.diag(jtj)) + 1e-12 * np.eye(5)
            try:
                candidate = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            smallest_try = min(smallest_try, float(
                np.max(np.abs(candidate) / (1.0 + np.abs(theta)))))
            trial = theta + candidate
            if not (trial[2] > trial[4] > 0):
                lam *= 10.0
                continue
            r_trial, _ = _log_residuals(trial, x, log_y, False)
            ssr_trial = float(r_trial @ r_trial)
            # Only a measurable improvement counts; accepting flat moves
            # lets unidentifiable parameters wander forever.
            if ssr_trial < ssr * (1.0 - 1e-15):
                step = (candidate, trial, r_trial, ssr_trial)
                break
            lam *= 10.0
        if step is None:
            # Stalled: no damping level yields an acceptable move.  When
            # the proposals themselves have shrunk to nothing, or the
            # gradient has, this is a (possibly constrained) minimum.
            if smallest_try < 100.0 * tolerance or \
                    float(np.max(np.abs(grad))) <= 1e-8 * (1.0 + ssr):
                converged = True
            break
        candidate, theta, r, ssr = step
        r, jac = _log_residuals(theta, x, log_y, True)
        if ssr < best_ssr:
            best_theta, best_ssr = theta.copy(), ssr
        lam = max(lam / 3.0, 1e-12)
        rel_change = float(np.max(np.abs(candidate) / (1.0 + np.abs(theta))))
        if rel_change < tolerance:
            converged = True
            break

    model = _model_of(best_theta)
    predicted = evaluate_model(model, supports)
    max_rel = float(np.max(np.abs(values - predicted) / values))
    diag_interval = interval if interval is not None else \
        (int(supports[0]), int(supports[-1]))
    diagnostics = FitDiagnostics(
        max_relative_error=max_rel,
        interval=diag_interval,
        excluded_region=exclusions[0] if len(exclusions) == 1 else None,
        iterations=iterations,
        converged=converged,
    )
    if not converged:
        raise FitConvergenceError(
            f"no convergence after {iterations} iterations "
            f"(best max relative error {max_rel:.3g})", model, diagnostics)
    return model, diagnostics


# -- anomaly detection ------------------------------------------------------

def _dense_series(histogram, lo: int, hi: int) -> np.ndarray:
    bins = histogram.bins if hasattr(histogram, "bins") else histogram
    out = np.zeros(hi - lo + 1)
    for s, v in bins.items():
        if lo <= s <= hi:
            out[s - lo] = v
    return out


def _centered_moving_average(series: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks near the edges."""
    half = window // 2
    n = len(series)
    prefix = np.concatenate(([0.0], np.cumsum(series)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half, n - 1)
    return (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1)


def detect_anomaly_region(histogram, model: FitModel, threshold: float = 0.2,
                          min_run: int = 5,
                          smoothing_window: int = 5) -> Optional[Region]:
    """Longest contiguous support run whose smoothed relative residual
    (observed - predicted) / predicted stays above the threshold for at
    least min_run consecutive supports; None when no run qualifies."""
    bins = histogram.bins if hasattr(histogram, "bins") else histogram
    if not bins:
        return None
    lo = max(1, min(bins))
    hi = max(bins)
    if hi < lo:
        return None
    grid = np.arange(lo, hi + 1, dtype=np.int64)
    observed = _dense_series(histogram, lo, hi)
    predicted = evaluate_model(model, grid)
    rel = (observed - predicted) / predicted
    smoothed = _centered_moving_average(rel, smoothing_window)

    above = smoothed > threshold
    best: Optional[Region] = None
    best_len = 0
    start = None
    for i, flag in enumerate(np.append(above, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            length = i - start
            if length >= min_run and length > best_len:
                best = (int(grid[start]), int(grid[i - 1]))
                best_len = length
            start = None
    return best


def estimate_excess(histogram, model: FitModel, region: Optional[Region],
                    max_relative_error: float = 0.0) -> AnomalyReport:
    """Integrate positive residuals over the region into an excess count.

    The lower bound subtracts the model mass times the fit's max relative
    error over the region; the upper bound is the raw estimate.
    """
    if region is None:
        return AnomalyReport(None, {}, 0.0, 0.0, 0.0)
    lo, hi = int(region[0]), int(region[1])
    if lo > hi:
        raise ValueError(f"bad region [{lo}, {hi}]")
    grid = np.arange(lo, hi + 1, dtype=np.int64)
    observed = _dense_series(histogram, lo, hi)
    predicted = evaluate_model(model, grid)
    resid = observed - predicted
    excess = float(np.sum(np.maximum(resid, 0.0)))
    envelope = float(max_relative_error * np.sum(predicted))
    residuals = {int(s): float(d) for s, d in zip(grid, resid)}
    return AnomalyReport(region=(lo, hi), residuals=residuals,
                         excess_estimate=excess,
                         lower_bound=excess - envelope, upper_bound=excess)


def analyze_performance_histogram(
        histogram, exclude=None, interval: Optional[Region] = None,
        threshold: float = 0.2, min_run: int = 5, smoothing_window: int = 5,
        max_iterations: int = 500, tolerance: float = 1e-9,
        max_passes: int = 6,
) -> tuple[FitModel, FitDiagnostics, Optional[AnomalyReport]]:
    """Fit, detect and estimate, iterating to a stable anomalous region.

    A single fit absorbs part of any large excess into the baseline, which
    truncates the detected region and understates the estimate.  Each pass
    therefore refits with the current region excluded and re-detects until
    the region stops moving (or max_passes is reached); the excess is then
    estimated against the final clean baseline.  Bump-free data exits
    after the first pass with no anomaly block.
    """
    model, diagnostics = fit(histogram, exclude=exclude, interval=interval,
                             max_iterations=max_iterations,
                             tolerance=tolerance)
    region = detect_anomaly_region(histogram, model, threshold=threshold,
                                   min_run=min_run,
                                   smoothing_window=smoothing_window)
    if region is None:
        return model, diagnostics, None

    base_exclusions = _normalize_exclusions(exclude)
    seen = {region}
    for _ in range(max_passes):
        model, diagnostics = fit(histogram,
                                 exclude=base_exclusions + [region],
                                 interval=interval, init=model,
                                 max_iterations=max_iterations,
                                 tolerance=tolerance)
        detected = detect_anomaly_region(histogram, model,
                                         threshold=threshold,
                                         min_run=min_run,
                                         smoothing_window=smoothing_window)
        if detected is None or detected == region or detected in seen:
            break
        seen.add(detected)
        region = detected

    report = estimate_excess(histogram, model, region,
                             diagnostics.max_relative_error)
    diagnostics = FitDiagnostics(
        max_relative_error=diagnostics.max_relative_error,
        interval=diagnostics.interval,
        excluded_region=region,
        iterations=diagnostics.iterations,
        converged=diagnostics.converged,
    )
    return model, diagnostics, report

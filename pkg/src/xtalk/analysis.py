"""Measurement-analysis pipeline: filtering, ZZ-to-J conversion, decay fits.

Input is a table of per-pair static ZZ rates (kHz) with optional confidence
intervals.  The pipeline

  1. drops rates below the detection threshold, rates whose CI includes
     zero, and explicitly listed outlier pairs (each with a reason code);
  2. converts surviving rates to exchange couplings by inverting the
     leading pair expression, J = sqrt(zeta (D+a1)(D-a2) / (2 (a1+a2)));
  3. fits the exponential-in-Manhattan-distance law <zeta> ~ exp(-D/D0)
     on per-shell means (or on all pairs), and the K0-in-Euclidean law
     J ~ J0 K0(d/d0) for couplings;
  4. applies distance-scaling corrections, either from a law's envelope or
     as a single fitted global factor.

Shell means are conditional on detection: at larger separations most pairs
fall below threshold, so shell averages are closer to upper bounds than to
unbiased means.  That caveat travels with the fit result.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .special import k0
from .zz import PairSpectrum

__all__ = [
    "MeasurementRow",
    "Exclusion",
    "FilterResult",
    "ScalingFit",
    "SignConsistencyError",
    "InsufficientDataError",
    "lattice_positions",
    "manhattan_distance",
    "euclidean_distance_mm",
    "load_measurements_csv",
    "dump_measurements_csv",
    "filter_measurements",
    "zz_to_j_naive",
    "fit_manhattan_decay",
    "fit_k0_euclidean",
    "fit_global_scale",
    "apply_scaling_correction",
    "summary_stats",
]

REASON_BELOW_THRESHOLD = "below-threshold"
REASON_CI_INCLUDES_ZERO = "CI-includes-zero"
REASON_STRADDLING_OUTLIER = "straddling-outlier"


class SignConsistencyError(ValueError):
    """zeta and the pair's pole structure imply J^2 < 0 for this pair."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementRow:
    """One measured pair rate; CI bounds are optional and in kHz."""

    i: int
    j: int
    zz_khz: float
    ci_low_khz: float | None = None
    ci_high_khz: float | None = None

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError(f"pair indices must differ, got ({self.i}, {self.j})")
        if not math.isfinite(self.zz_khz):
            raise ValueError(f"pair ({self.i}, {self.j}): rate must be finite")
        if (self.ci_low_khz is None) != (self.ci_high_khz is None):
            raise ValueError("confidence interval needs both bounds")
        if self.ci_low_khz is not None and self.ci_low_khz > self.ci_high_khz:
            raise ValueError("confidence interval bounds are inverted")

    @property
    def pair(self) -> tuple[int, int]:
        return (min(self.i, self.j), max(self.i, self.j))


@dataclass(frozen=True)
class Exclusion:
    pair: tuple[int, int]
    zz_khz: float
    reason: str


@dataclass
class FilterResult:
    kept: list
    excluded: list

    def report_lines(self) -> list[str]:
        return [f"pair {p[0]}-{p[1]}: {r.zz_khz:g} kHz excluded ({r.reason})"
                for r in self.excluded for p in [r.pair]]


@dataclass
class ScalingFit:
    """Fitted decay law with shell statistics and exclusions carried along."""

    model: str                    # "exp-in-manhattan" | "k0-in-euclidean"
    amplitude: float
    scale: float                  # D0 in sites, or d0 in mm
    residuals: np.ndarray
    shell_distances: np.ndarray
    shell_means: np.ndarray
    shell_stds: np.ndarray
    shell_counts: np.ndarray
    excluded: list = field(default_factory=list)
    conditional_on_detection: bool = True

    @property
    def r_squared(self) -> float:
        y = np.log(self.shell_means) if self.model == "exp-in-manhattan" else None
        if y is None or len(y) < 2:
            return math.nan
        pred = math.log(self.amplitude) - self.shell_distances / self.scale
        ss_res = float(np.sum((y - pred) ** 2))
        ss_tot = float(np.sum((y - np.mean(y)) ** 2))
        return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def lattice_positions(rows: int = 4, cols: int = 4) -> np.ndarray:
    """(row, col) = (i // cols, i mod cols) for every site index i."""
    rr, cc = np.divmod(np.arange(rows * cols), cols)
    return np.stack([rr, cc], axis=1)


def manhattan_distance(positions: np.ndarray, i: int, j: int) -> int:
    _check_index(positions, i), _check_index(positions, j)
    return int(np.abs(positions[i] - positions[j]).sum())


def euclidean_distance_mm(positions: np.ndarray, i: int, j: int,
                          pitch_mm: float = 2.0) -> float:
    _check_index(positions, i), _check_index(positions, j)
    return float(pitch_mm * np.linalg.norm((positions[i] - positions[j]).astype(float)))


def _check_index(positions, i):
    if not 0 <= i < len(positions):
        raise IndexError(f"site index {i} outside 0..{len(positions) - 1}")


def load_measurements_csv(text: str) -> list[MeasurementRow]:
    """Parse the ``i,j,zz_khz,ci_low,ci_high`` schema (CI columns optional)."""
    rows = []
    reader = csv.DictReader(io.StringIO(text))
    for rec in reader:
        lo = rec.get("ci_low")
        hi = rec.get("ci_high")
        rows.append(MeasurementRow(
            i=int(rec["i"]), j=int(rec["j"]), zz_khz=float(rec["zz_khz"]),
            ci_low_khz=float(lo) if lo not in (None, "") else None,
            ci_high_khz=float(hi) if hi not in (None, "") else None))
    return rows


def dump_measurements_csv(rows: list[MeasurementRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["i", "j", "zz_khz", "ci_low", "ci_high"])
    for r in rows:
        writer.writerow([r.i, r.j, repr(r.zz_khz),
                         "" if r.ci_low_khz is None else repr(r.ci_low_khz),
                         "" if r.ci_high_khz is None else repr(r.ci_high_khz)])
    return out.getvalue()


def filter_measurements(rows: list[MeasurementRow], threshold_khz: float = 1.0,
                        outlier_pairs: list[tuple[int, int]] | None = None) -> FilterResult:
    """Detection filtering with explicit reason codes; idempotent.

    Order of precedence per row: named outlier, below threshold, CI
    including zero.
    """
    if threshold_khz < 0:
        raise ValueError("threshold must be nonnegative")
    outliers = {(min(i, j), max(i, j)) for i, j in (outlier_pairs or [])}
    kept, excluded = [], []
    for r in rows:
        if r.pair in outliers:
            excluded.append(Exclusion(r.pair, r.zz_khz, REASON_STRADDLING_OUTLIER))
        elif abs(r.zz_khz) < threshold_khz:
            excluded.append(Exclusion(r.pair, r.zz_khz, REASON_BELOW_THRESHOLD))
        elif (r.ci_low_khz is not None
              and r.ci_low_khz <= 0.0 <= r.ci_high_khz):
            excluded.append(Exclusion(r.pair, r.zz_khz, REASON_CI_INCLUDES_ZERO))
        else:
            kept.append(r)
    return FilterResult(kept=kept, excluded=excluded)


def zz_to_j_naive(zeta_mhz: float, pair: PairSpectrum) -> float:
    """Invert the leading pair expression for J >= 0 (MHz in, MHz out).

    Requires zeta to have the sign the pair's pole structure dictates;
    otherwise the radicand is negative and the pair is reported.
    """
    d = pair.detuning
    radicand = zeta_mhz * (d + pair.alpha1) * (d - pair.alpha2) / (2.0 * (pair.alpha1 + pair.alpha2))
    if radicand < 0.0:
        raise SignConsistencyError(
            f"zeta = {zeta_mhz:g} MHz is inconsistent with the pair's "
            f"denominator signs (radicand {radicand:g})",
            pair=(pair.omega1, pair.omega2))
    return math.sqrt(radicand)


def _shell_stats(distances, values):
    shells: dict[float, list[float]] = {}
    for d, v in zip(distances, values):
        shells.setdefault(round(float(d), 9), []).append(float(v))
    ds = np.array(sorted(shells))
    means = np.array([np.mean(shells[d]) for d in ds])
    stds = np.array([np.std(shells[d]) for d in ds])
    counts = np.array([len(shells[d]) for d in ds])
    return ds, means, stds, counts


def fit_manhattan_decay(rows: list[MeasurementRow], positions: np.ndarray,
                        mode: str = "shell-means") -> ScalingFit:
    """Fit <|zeta|> ~ A exp(-D/D0) in Manhattan distance D.

    ``mode`` selects the fit population: per-shell arithmetic means
    (default, matching shell-averaged reporting) or every detected pair.
    Needs at least two shells with data.
    """
    if mode not in ("shell-means", "pairs"):
        raise ValueError(f"unknown fit mode {mode!r}")
    dist = [manhattan_distance(positions, r.i, r.j) for r in rows]
    vals = [abs(r.zz_khz) for r in rows]
    ds, means, stds, counts = _shell_stats(dist, vals)
    usable = means > 0
    if np.count_nonzero(usable) < 2:
        raise InsufficientDataError(
            f"Manhattan fit needs >= 2 shells with data, got {np.count_nonzero(usable)}")
    if mode == "shell-means":
        x, y = ds[usable], np.log(means[usable])
    else:
        pts = [(d, v) for d, v in zip(dist, vals) if v > 0]
        x = np.array([p[0] for p in pts], dtype=float)
        y = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    if slope >= 0:
        slope = -1e-12  # growing "decay": keep D0 positive and enormous
    fit = ScalingFit(model="exp-in-manhattan", amplitude=math.exp(intercept),
                     scale=-1.0 / slope, residuals=y - (intercept + slope * x),
                     shell_distances=ds[usable], shell_means=means[usable],
                     shell_stds=stds[usable], shell_counts=counts[usable])
    return fit


def fit_k0_euclidean(j_mhz: np.ndarray, d_mm: np.ndarray) -> ScalingFit:
    """Fit |J| ~ J0 K0(d/d0) in Euclidean distance by 1-parameter search.

    The amplitude is closed-form for fixed d0 (log-space least squares);
    d0 is minimized over by a bounded scalar search.
    """
    j = np.abs(np.asarray(j_mhz, dtype=float))
    d = np.asarray(d_mm, dtype=float)
    mask = j > 0
    if np.count_nonzero(mask) < 3:
        raise InsufficientDataError("K0 fit needs >= 3 nonzero couplings")
    j, d = j[mask], d[mask]
    logj = np.log(j)

    def cost(log_d0):
        d0 = math.exp(log_d0)
        basis = np.array([math.log(k0(x / d0)) for x in d])
        resid = logj - basis
        return float(np.sum((resid - resid.mean()) ** 2))

    span = (math.log(np.min(d) / 50.0), math.log(np.max(d) * 50.0))
    res = minimize_scalar(cost, bounds=span, method="bounded",
                          options={"xatol": 1e-10})
    d0 = math.exp(res.x)
    basis = np.array([math.log(k0(x / d0)) for x in d])
    amp = math.exp(float(np.mean(logj - basis)))
    ds, means, stds, counts = _shell_stats(d, j)
    return ScalingFit(model="k0-in-euclidean", amplitude=amp, scale=d0,
                      residuals=logj - (math.log(amp) + basis),
                      shell_distances=ds, shell_means=means,
                      shell_stds=stds, shell_counts=counts)


def fit_global_scale(unscaled: np.ndarray, scaled_target: np.ndarray) -> float:
    """Single factor s minimizing sum (s*u - v)^2 (least squares through 0)."""
    u = np.asarray(unscaled, dtype=float)
    v = np.asarray(scaled_target, dtype=float)
    if u.shape != v.shape or u.size == 0:
        raise ValueError("need matching nonempty columns")
    denom = float(np.dot(u, u))
    if denom == 0.0:
        raise ValueError("unscaled column is all zeros")
    return float(np.dot(u, v)) / denom


def apply_scaling_correction(j_mhz: np.ndarray, distances_mm: np.ndarray | None = None,
                             law=None, global_factor: float | None = None,
                             envelope: str = "exp") -> np.ndarray:
    """Scale a coupling table by a distance envelope or one global factor.

    Law mode evaluates the envelope at each pair's distance, normalized to
    1 at the law's reference (nearest-neighbor) spacing: designed neighbors
    pass through unchanged.  ``envelope`` picks exp(-(d - a)/d0) or
    K0(d/d0)/K0(a/d0).  Global-factor mode multiplies everything by s,
    appropriate for a single-distance shell.
    """
    j = np.asarray(j_mhz, dtype=float)
    if (law is None) == (global_factor is None):
        raise ValueError("provide exactly one of law, global_factor")
    if global_factor is not None:
        return j * float(global_factor)
    if distances_mm is None:
        raise ValueError("law mode needs per-pair distances")
    d = np.asarray(distances_mm, dtype=float)
    a = law.ref_spacing_mm
    if envelope == "exp":
        env = np.exp(-(d - a) / law.d0_mm)
    elif envelope == "k0":
        if a <= 0:
            raise ValueError("k0 envelope needs a positive reference spacing")
        env = np.array([k0(x / law.d0_mm) for x in d]) / k0(a / law.d0_mm)
    else:
        raise ValueError(f"unknown envelope {envelope!r}; use exp|k0")
    return j * env


def summary_stats(values: np.ndarray) -> dict:
    v = np.asarray(values, dtype=float)
    return {"mean": float(np.mean(v)), "std": float(np.std(v)),
            "min": float(np.min(v)), "max": float(np.max(v)), "count": int(v.size)}

"""Fitts'-law effective measures, outlier handling, regression and NASA-TLX scoring."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .records import TrialRecord

__all__ = [
    "HIT", "MISS", "OUTLIER", "EFFECTIVE_WIDTH_FACTOR", "OUTLIER_RADII",
    "SequenceSummary", "FittsFit", "TlxResponse", "TLX_SUBSCALES",
    "classify_trial", "classify_arrays", "project_dx", "sequence_summary",
    "summarize_arrays", "fitts_regression", "tlx_weighted", "tlx_raw",
]

HIT, MISS, OUTLIER = "hit", "miss", "outlier"
# z = +/-2.066 spans 96% of a normal distribution
EFFECTIVE_WIDTH_FACTOR = 4.133
OUTLIER_RADII = 3.0


def classify_trial(selection, target_center, W: float) -> str:
    d = float(np.linalg.norm(np.asarray(selection, float) - np.asarray(target_center, float)))
    r = W / 2.0
    if d <= r:
        return HIT
    if d > OUTLIER_RADII * r:
        return OUTLIER
    return MISS


def classify_arrays(dist: np.ndarray, W) -> np.ndarray:
    """Vectorised :func:`classify_trial` on endpoint distances; returns 0/1/2 codes (hit/miss/outlier)."""
    r = np.asarray(W, float) / 2.0
    codes = np.ones(np.shape(dist), dtype=np.int8)
    codes[dist <= r] = 0
    codes[dist > OUTLIER_RADII * r] = 2
    return codes


def project_dx(from_point, target, select) -> tuple[float, float]:
    """Signed overshoot along the task axis and the trial's effective distance.

    Equivalent to the law-of-cosines form dx = (c^2 - b^2 - a^2) / 2a on the
    triangle from/target/select, written as a projection so that a selection
    exactly on the target gives dx = 0 without round-off. Works in 2D or 3D.
    """
    f, t, s = (np.asarray(p, float)[None] for p in (from_point, target, select))
    dx, de = _project_dx_arrays(f, t, s)
    return float(dx[0]), float(de[0])


def _project_dx_arrays(f, t, s):
    axis = t - f
    a = np.linalg.norm(axis, axis=-1)
    if np.any(a == 0.0):
        raise ValueError("from point coincides with the target; task axis undefined")
    dx = np.sum((s - t) * axis, axis=-1) / a
    return dx, a + dx


@dataclass(frozen=True)
class SequenceSummary:
    mt_mean: float
    error_rate: float
    d_e: float
    sd_x: float
    w_e: float
    id_e: float
    throughput: float
    hand_movement: float
    head_movement: float
    actual_depth: float
    adj_visual_angle: float
    n_used: int
    n_outliers: int

    @property
    def valid(self) -> bool:
        """False when the endpoint spread collapsed to zero (W_e = 0, ID_e infinite)."""
        return self.w_e > 0.0 and math.isfinite(self.id_e)


def summarize_arrays(from_pts, targets, selects, mt, hand, head, depth, angle, W,
                     min_used: int = 3) -> SequenceSummary:
    """Summary of one sequence given per-trial arrays (points shaped (n, 2) or (n, 3))."""
    from_pts, targets, selects = (np.asarray(p, float) for p in (from_pts, targets, selects))
    W = np.broadcast_to(np.asarray(W, float), (len(targets),))
    codes = classify_arrays(np.linalg.norm(selects - targets, axis=-1), W)
    used = codes != 2
    n_used = int(used.sum())
    if n_used < min_used:
        raise ValueError(f"only {n_used} usable trials; need at least {min_used}")
    dx, de = _project_dx_arrays(from_pts[used], targets[used], selects[used])
    sd_x = float(np.std(dx, ddof=1))
    w_e = EFFECTIVE_WIDTH_FACTOR * sd_x
    d_e = float(np.mean(de))
    id_e = math.log2(d_e / w_e + 1.0) if w_e > 0 else math.inf
    mt_mean = float(np.mean(np.asarray(mt, float)[used]))
    return SequenceSummary(
        mt_mean=mt_mean,
        error_rate=100.0 * float(np.mean(codes[used] == 1)),
        d_e=d_e, sd_x=sd_x, w_e=w_e, id_e=id_e,
        throughput=id_e / mt_mean,
        hand_movement=float(np.mean(np.asarray(hand, float)[used])),
        head_movement=float(np.mean(np.asarray(head, float)[used])),
        actual_depth=float(np.mean(np.asarray(depth, float)[used])),
        adj_visual_angle=float(np.mean(np.asarray(angle, float)[used])),
        n_used=n_used,
        n_outliers=int(len(codes) - n_used),
    )


def sequence_summary(trials: Sequence[TrialRecord]) -> SequenceSummary:
    """Effective measures for one sequence; outliers are excluded from every statistic."""
    if not trials:
        raise ValueError("empty sequence")
    col = lambda name: np.array([getattr(t, name) for t in trials], dtype=float)  # noqa: E731
    return summarize_arrays(
        np.array([t.from_point for t in trials]),
        np.array([t.target_center for t in trials]),
        np.array([t.selection_point for t in trials]),
        col("mt"), col("hand_path"), col("head_path"), col("actual_depth"),
        col("adj_visual_angle"), col("target_width"))


@dataclass(frozen=True)
class FittsFit:
    a: float
    b: float
    r_squared: float

    def predict(self, id_bits):
        return self.a + self.b * np.asarray(id_bits, float)


def fitts_regression(points: Iterable[tuple[float, float]]) -> FittsFit:
    """Ordinary least squares of MT on ID."""
    pts = np.asarray(list(points), dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    if len(pts) < 2 or np.ptp(x) == 0.0:
        raise ValueError("need at least two distinct ID values")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    b = float(np.sum((x - xm) * (y - ym)) / sxx)
    a = float(ym - b * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    ss_res = float(np.sum((y - a - b * x) ** 2))
    r2 = 0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FittsFit(a, b, min(max(r2, 0.0), 1.0))


TLX_SUBSCALES = ("mental", "physical", "temporal", "performance", "effort", "frustration")


@dataclass(frozen=True)
class TlxResponse:
    ratings: tuple[float, ...]
    weights: tuple[int, ...]

    def __post_init__(self):
        if len(self.ratings) != 6 or len(self.weights) != 6:
            raise ValueError("NASA-TLX needs six ratings and six weights")
        if any(not 0 <= r <= 100 for r in self.ratings):
            raise ValueError("ratings must lie in [0, 100]")
        if any(not 0 <= w <= 5 for w in self.weights):
            raise ValueError("each subscale weight must lie in [0, 5]")
        if sum(self.weights) != 15:
            raise ValueError(f"weights must sum to 15, got {sum(self.weights)}")


def tlx_weighted(resp: TlxResponse) -> float:
    return sum(w * r for w, r in zip(resp.weights, resp.ratings)) / 15.0


def tlx_raw(resp: TlxResponse) -> float:
    return sum(resp.ratings) / 6.0

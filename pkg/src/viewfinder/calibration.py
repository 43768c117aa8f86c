"""Fit motor-model parameters to published per-condition means.

Each technique is fitted on its own (the objective is a sum over techniques
with no shared parameters). Nelder-Mead searches only the parameters that
act nonlinearly: endpoint noise and its width/amplitude shares as logs, and
zooms through a logistic map that keeps them inside the frustum-feasible
range. Coefficients that enter the condition means linearly (Fitts and
precision terms, path gains and rates) are solved exactly by bounded least
squares at every evaluation. The simulator is driven by frozen
standard-normal draws, so the objective is a deterministic function of the
parameters.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import lsq_linear, minimize

from .metrics import OUTLIER_RADII
from .motorsim import (
    HAND_REST_DISTANCE, PANEL_PLACEMENT, PATH_SIGMA, Draws, MotorParams, build_context,
    max_config_zoom, simulate_block,
)
from .taskgen import (
    DISTANCE_CLASSES, SIZE_CLASSES, Condition, TechniqueKind, layout_targets, make_conditions,
)

__all__ = [
    "METRICS", "CalibrationTargets", "CalibrationResult", "read_targets", "write_targets",
    "condition_means", "calibrate", "calibrate_technique", "ZOOM_MIN",
]

log = logging.getLogger(__name__)

METRICS = ("mt", "error_rate", "hand", "head", "angle")
TARGET_COLUMNS = ("technique", "size_deg", "distance_m", "mt_s", "error_rate_pct",
                  "hand_m", "head_m", "adj_visual_angle_deg")
_SIZE_BY_DEG = {3: "Large", 1: "Small"}
_DIST_BY_M = {1: "Short", 2: "Long"}
ZOOM_MIN = 0.5
# share of endpoint variance attributed to the pinch kick / to touch jitter
HEISENBERG_SHARE = 0.5
TOUCH_JITTER_SHARE = 0.5


@dataclass
class CalibrationTargets:
    """Per-condition target means keyed by ``Condition.key``."""

    means: dict

    def for_technique(self, kind: TechniqueKind) -> dict:
        return {k: v for k, v in self.means.items() if k[0] == TechniqueKind(kind).value}


def read_targets(path) -> CalibrationTargets:
    means = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.DictReader(fh), start=2):
            try:
                tech = TechniqueKind(row["technique"]).value
                size = _SIZE_BY_DEG[int(round(float(row["size_deg"])))]
                dist = _DIST_BY_M[int(round(float(row["distance_m"])))]
                means[(tech, size, dist)] = {
                    "mt": float(row["mt_s"]), "error_rate": float(row["error_rate_pct"]),
                    "hand": float(row["hand_m"]), "head": float(row["head_m"]),
                    "angle": float(row["adj_visual_angle_deg"])}
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}: bad targets row {i}: {exc}") from exc
    missing = [c.key for c in make_conditions() if c.key not in means]
    if missing:
        raise ValueError(f"{path}: targets missing conditions {missing}")
    return CalibrationTargets(means)


def write_targets(targets: CalibrationTargets, path) -> None:
    deg = {v: k for k, v in _SIZE_BY_DEG.items()}
    met = {v: k for k, v in _DIST_BY_M.items()}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TARGET_COLUMNS)
        for (tech, size, dist), m in targets.means.items():
            w.writerow([tech, deg[size], met[dist], m["mt"], m["error_rate"], m["hand"],
                        m["head"], m["angle"]])


def condition_means(out: dict, W: float) -> dict:
    """Condition means the way the analysis computes them: per-sequence values, then averaged."""
    dist = np.linalg.norm(out["select"] - out["target"], axis=-1)
    r = W / 2.0
    used = dist <= OUTLIER_RADII * r
    miss = (dist > r) & used
    n_used = used.sum(axis=1)
    ok = n_used > 0
    per_seq = lambda a: (np.where(used, a, 0.0).sum(axis=1)[ok] / n_used[ok])  # noqa: E731
    return {
        "mt": float(np.mean(per_seq(out["mt"]))),
        "error_rate": float(np.mean(100.0 * miss.sum(axis=1)[ok] / n_used[ok])),
        "hand": float(np.mean(per_seq(out["hand"]))),
        "head": float(np.mean(per_seq(out["head"]))),
        "angle": float(np.mean(per_seq(out["angle"]))),
    }


# -- parameter vector <-> MotorParams ----------------------------------------

def _sigmoid(x):
    return 0.5 * (1.0 + math.tanh(0.5 * x))


def _logit(p):
    p = min(max(p, 1e-9), 1 - 1e-9)
    return math.log(p / (1 - p))


@dataclass
class _Space:
    """Nonlinear search space: endpoint noise, width and amplitude shares, and (viewfinder) zooms."""

    kind: TechniqueKind
    conditions: list
    zoom_max: dict = field(default_factory=dict)

    def decode(self, x, template: MotorParams) -> MotorParams:
        sigma = math.exp(min(x[0], 30.0))
        kw = {"width_sigma_frac": math.exp(min(x[1], 30.0)),
              "amplitude_sigma_frac": math.exp(min(x[2], 30.0))}
        if self.kind is TechniqueKind.ViewfinderTouch:
            # sigma is the on-panel jitter in mm, split between hover aim and touch jitter
            aim_m = sigma * math.sqrt(1 - TOUCH_JITTER_SHARE) / 1000.0
            kw.update(touch_sigma_mm=sigma * math.sqrt(TOUCH_JITTER_SHARE),
                      aim_sigma_deg=math.degrees(math.atan(aim_m / HAND_REST_DISTANCE)),
                      heisenberg_deg=0.0)
        else:
            # sigma is the combined angular SD in degrees
            kw.update(aim_sigma_deg=sigma * math.sqrt(1 - HEISENBERG_SHARE),
                      heisenberg_deg=sigma * math.sqrt(HEISENBERG_SHARE), touch_sigma_mm=0.0)
        if self.kind.is_viewfinder:
            zooms = {}
            for c, v in zip(self.conditions, x[3:]):
                key = _zkey(c)
                zooms[key] = ZOOM_MIN + (self.zoom_max[key] - ZOOM_MIN) * _sigmoid(v)
            kw["config_zoom"] = zooms
        return replace(template, **kw)

    def encode(self, p: MotorParams) -> np.ndarray:
        if self.kind is TechniqueKind.ViewfinderTouch:
            aim_mm = 1000.0 * HAND_REST_DISTANCE * math.tan(math.radians(p.aim_sigma_deg))
            sigma = math.hypot(aim_mm, p.touch_sigma_mm)
        else:
            sigma = math.hypot(p.aim_sigma_deg, p.heisenberg_deg)
        x = [math.log(max(sigma, 1e-6)), math.log(max(p.width_sigma_frac, 1e-6)),
             math.log(max(p.amplitude_sigma_frac, 1e-6))]
        if self.kind.is_viewfinder:
            for c in self.conditions:
                key = _zkey(c)
                z = p.config_zoom.get(key, 1.0)
                x.append(_logit((z - ZOOM_MIN) / (self.zoom_max[key] - ZOOM_MIN)))
        return np.array(x, dtype=float)


def _zkey(c: Condition) -> str:
    return f"{c.size_class}/{c.distance_class}"


def _initial_params(kind: TechniqueKind, conds: list, targets: dict, space: _Space) -> MotorParams:
    """Starting point: moderate noise, a width share of 0.2, and zooms that
    reproduce the target visual angles (clipped to the feasible range).
    Linear coefficients are solved exactly at every evaluation, so their
    starting values do not matter."""
    p = MotorParams(kind, width_sigma_frac=0.2, amplitude_sigma_frac=0.005)
    if kind is TechniqueKind.ViewfinderTouch:
        p = replace(p, touch_sigma_mm=2.0, aim_sigma_deg=1.0)
    else:
        p = replace(p, aim_sigma_deg=0.15, heisenberg_deg=0.15)
    if kind.is_viewfinder:
        dist, _ = PANEL_PLACEMENT[kind]
        zooms = {}
        for c in conds:
            key = _zkey(c)
            w_p = 2.0 * dist * math.tan(math.radians(targets[c.key]["angle"]) / 2.0)
            # at unit zoom the 0.4 m panel shows the full 5 m frustum width, 2 * 5 * tan(30 deg)
            z = w_p * (2.0 * 5.0 * math.tan(math.radians(30.0))) / (0.4 * c.width)
            zooms[key] = float(np.clip(z, ZOOM_MIN * 1.1, 0.95 * space.zoom_max[key]))
        p = replace(p, config_zoom=zooms)
    return p


def _seq_mean(a: np.ndarray, used: np.ndarray) -> float:
    n = used.sum(axis=1)
    ok = n > 0
    return float(np.mean(np.where(used, a, 0.0).sum(axis=1)[ok] / n[ok]))


def _fit_linear(conds, targets, feats, weights) -> tuple[dict, dict]:
    """Exact relative least squares for the coefficients that enter the
    condition means linearly: Fitts/precision terms of MT, then path terms."""
    y = np.array([targets[c.key]["mt"] for c in conds])
    X = np.array([[f["g"], f["g"] * f["id"], f["g"] * f["sr"]] for f in (feats[c.key] for c in conds)])
    res = lsq_linear(X / y[:, None], np.ones(len(y)), bounds=([-np.inf, 1e-3, 0.0], np.inf))
    a, b, prec = res.x
    mt_det = {c.key: a + b * feats[c.key]["id"] + prec * feats[c.key]["sr"] for c in conds}
    pred = {c.key: {"mt": mt_det[c.key] * feats[c.key]["g"]} for c in conds}

    y = np.array([targets[c.key]["hand"] for c in conds])
    X = np.array([[feats[c.key]["amp_h"], mt_det[c.key] * feats[c.key]["g_h"]] for c in conds])
    hand = lsq_linear(X / y[:, None], np.ones(len(y)), bounds=(0.0, np.inf)).x

    y = np.array([targets[c.key]["head"] for c in conds])
    X = np.array([[feats[c.key]["one_k"], feats[c.key]["amp_k"], mt_det[c.key] * feats[c.key]["g_k"],
                   mt_det[c.key] * feats[c.key]["ampg_k"]] for c in conds])
    head = lsq_linear(X / y[:, None], np.ones(len(y)), bounds=(0.0, np.inf)).x
    for c in conds:
        f = feats[c.key]
        pred[c.key]["hand"] = hand[0] * f["amp_h"] + hand[1] * mt_det[c.key] * f["g_h"]
        pred[c.key]["head"] = (head[0] * f["one_k"] + head[1] * f["amp_k"]
                               + mt_det[c.key] * (head[2] * f["g_k"] + head[3] * f["ampg_k"]))
    coef = dict(fitts_a=float(a), fitts_b=float(b), precision_time=float(prec),
                hand_gain=float(hand[0]), hand_rate=float(hand[1]),
                head_base=float(head[0]), head_gain=float(head[1]), head_rate=float(head[2]),
                head_reach_rate=float(head[3]))
    return coef, pred


@dataclass
class CalibrationResult:
    params: dict
    residuals: list            # rows: technique, size, distance, metric, target, simulated, rel_error
    objective: dict
    evaluations: dict
    seconds: float

    def max_abs_rel(self, metric: str) -> float:
        return max(abs(r["rel_error"]) for r in self.residuals if r["metric"] == metric)


def _objective_factory(kind, conds, targets, space, template, draws, weights):
    path_h = np.exp(PATH_SIGMA * draws.hand - 0.5 * PATH_SIGMA ** 2)
    path_k = np.exp(PATH_SIGMA * draws.head - 0.5 * PATH_SIGMA ** 2)
    g = np.exp(template.mt_sigma * draws.mt)

    def evaluate(x):
        p = space.decode(x, template)
        feats, sims = {}, {}
        for c in conds:
            ctx = build_context(c, p)
            out = simulate_block(ctx, p, draws)
            dist = np.linalg.norm(out["select"] - out["target"], axis=-1)
            used = dist <= OUTLIER_RADII * c.width / 2.0
            amp = np.broadcast_to(ctx.amplitude, used.shape)
            feats[c.key] = {
                "id": c.id_nominal, "sr": ctx.sigma_motor / (c.width / 2.0),
                "g": _seq_mean(g, used), "amp_h": _seq_mean(amp * path_h, used),
                "g_h": _seq_mean(g * path_h, used), "one_k": _seq_mean(path_k, used),
                "amp_k": _seq_mean(amp * path_k, used), "g_k": _seq_mean(g * path_k, used),
                "ampg_k": _seq_mean(amp * g * path_k, used)}
            sims[c.key] = condition_means(out, c.width)
        coef, pred = _fit_linear(conds, targets, feats, weights)
        for c in conds:
            sims[c.key].update(pred[c.key])
        return replace(p, **coef), sims

    def f(x):
        try:
            _, sims = evaluate(x)
        except ValueError:
            return 1e6
        total = 0.0
        for c in conds:
            for m in METRICS:
                tgt = targets[c.key][m]
                total += weights.get(m, 1.0) * ((sims[c.key][m] - tgt) / tgt) ** 2
        if not math.isfinite(total):
            raise ArithmeticError("non-finite calibration objective")
        return total

    def simulate(p: MotorParams) -> dict:
        return {c.key: condition_means(simulate_block(build_context(c, p), p, draws), c.width)
                for c in conds}

    return f, evaluate, simulate


def calibrate_technique(kind: TechniqueKind, targets: CalibrationTargets, n_trials: int = 20000,
                        seed: int = 2022, max_evals: int = 2000, stall_iters: int = 50,
                        stall_rtol: float = 1e-4, weights: dict | None = None,
                        initial: MotorParams | None = None):
    kind = TechniqueKind(kind)
    conds = [c for c in make_conditions() if c.technique is kind]
    tmap = targets.for_technique(kind)
    space = _Space(kind, conds)
    for c in conds:
        layout = layout_targets(11, c.distance, c.width, 5.0)
        space.zoom_max[f"{c.size_class}/{c.distance_class}"] = max_config_zoom(layout)
    template = initial or _initial_params(kind, conds, tmap, space)
    n_seq = math.ceil(n_trials / 11)
    draws = Draws.generate(np.random.default_rng(seed), n_seq, 11)
    f, evaluate, simulate = _objective_factory(kind, conds, tmap, space, template, draws, weights or {})

    x = space.encode(template)
    evals = 0
    best = f(x)
    while evals < max_evals:
        history: list[float] = []

        def callback(intermediate_result):
            history.append(float(intermediate_result.fun))
            if len(history) > stall_iters:
                old = history[-stall_iters - 1]
                if old - history[-1] < stall_rtol * abs(old):
                    raise StopIteration

        res = minimize(f, x, method="Nelder-Mead", callback=callback,
                       options={"maxfev": max_evals - evals, "xatol": 1e-8, "fatol": 1e-12,
                                "adaptive": True})
        evals += int(res.nfev)
        improved = best - res.fun
        if res.fun < best:
            x, best = res.x, float(res.fun)
        log.info("%s: restart done, objective %.6g after %d evaluations", kind.value, best, evals)
        # restart the simplex around the best point until a restart stops paying off
        if improved < stall_rtol * abs(best):
            break

    params, _ = evaluate(x)
    sims = simulate(params)
    rows = []
    for c in conds:
        for m in METRICS:
            tgt = tmap[c.key][m]
            rows.append({"technique": kind.value, "size": c.size_class, "distance": c.distance_class,
                         "metric": m, "target": tgt, "simulated": sims[c.key][m],
                         "rel_error": (sims[c.key][m] - tgt) / tgt})
    return params, rows, best, evals


def calibrate(targets: CalibrationTargets, techniques=None, **kw) -> CalibrationResult:
    """Fit :class:`MotorParams` for every technique against ``targets``."""
    techniques = [TechniqueKind(t) for t in (techniques or TechniqueKind)]
    t0 = time.perf_counter()
    params, rows, obj, evals = {}, [], {}, {}
    for kind in techniques:
        p, r, o, n = calibrate_technique(kind, targets, **kw)
        params[kind], obj[kind.value], evals[kind.value] = p, o, n
        rows.extend(r)
    return CalibrationResult(params, rows, obj, evals, time.perf_counter() - t0)

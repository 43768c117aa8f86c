"""Stochastic motor model that synthesizes trial logs.

Endpoints are an isotropic Gaussian around the aimed target centre on the
target plane. Their spread combines a motor part (hand tremor, the pinch
"kick" for pinch-triggered techniques, touch jitter), expressed in the space
where the hand acts and magnified onto the target plane by the panel, a
strategy part proportional to the target width (people aim less carefully
at bigger targets) and a part proportional to the movement amplitude
(longer, faster movements end less precisely).

Movement time follows Fitts' law on the nominal ID plus a precision cost that
grows with motor noise relative to the target radius, with multiplicative
lognormal noise. Hand and head path lengths grow with the motor-space
amplitude of each movement and with its duration; the head additionally
sways in proportion to amplitude x duration (long reaches recruit the
trunk for as long as they last).
"""
from __future__ import annotations

import json
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterator, Optional

import numpy as np

from .geometry import Plane, Pose, Ray, ray_plane_intersect, vec3
from .records import TrialRecord
from .taskgen import (
    Condition, TargetLayout, TechniqueKind, layout_targets, make_conditions, target_order,
)
from .technique import (
    PanelConfig, actual_target_depth, adjusted_visual_angle, placed_panel, proxy_point,
)

__all__ = [
    "MotorParams", "TrialRecord", "SimContext", "Draws",
    "effective_endpoint_sigma", "motor_endpoint_sigma", "max_config_zoom",
    "build_context", "simulate_block", "simulate_sequence", "simulate_experiment",
    "default_params", "params_to_json", "params_from_json", "load_params", "save_params",
    "MIN_MT", "ARM_LEVER", "HAND_PANEL_DISTANCE", "HAND_REST_DISTANCE", "PANEL_PLACEMENT",
    "FRUSTUM_MARGIN", "HEAD_JITTER", "PATH_SIGMA",
]

MIN_MT = 0.15
ARM_LEVER = 0.6            # m, converts angular hand amplitude to hand path
HAND_PANEL_DISTANCE = 0.3  # m, ray origin to panel for ViewfinderRay
HAND_REST_DISTANCE = 0.1   # m, hovering fingertip to panel for ViewfinderTouch
# (distance m, degrees below the head's forward axis) of the configured panel
PANEL_PLACEMENT = {
    TechniqueKind.ViewfinderRay: (0.47, 10.0),
    TechniqueKind.ViewfinderTouch: (0.40, 17.2),
}
FRUSTUM_MARGIN = 1.05
HEAD_JITTER = 0.01         # m, per-axis SD of the head around its capture pose
PATH_SIGMA = 0.3           # lognormal dispersion of path lengths


@dataclass
class MotorParams:
    """Motor-model parameters for one technique.

    ``config_zoom`` maps ``"<size_class>/<distance_class>"`` to the view zoom
    participants settle on; it is ignored for Raycasting.
    """

    technique: TechniqueKind
    fitts_a: float = 0.2
    fitts_b: float = 0.3
    mt_sigma: float = 0.3
    precision_time: float = 0.0
    aim_sigma_deg: float = 0.0
    heisenberg_deg: float = 0.0
    touch_sigma_mm: float = 0.0
    width_sigma_frac: float = 0.0
    amplitude_sigma_frac: float = 0.0
    hand_gain: float = 1.0
    hand_rate: float = 0.0
    head_base: float = 0.0
    head_gain: float = 0.0
    head_rate: float = 0.0
    head_reach_rate: float = 0.0
    config_zoom: dict = field(default_factory=dict)

    def __post_init__(self):
        self.technique = TechniqueKind(self.technique)
        for name in ("mt_sigma", "precision_time", "aim_sigma_deg", "heisenberg_deg",
                     "touch_sigma_mm", "width_sigma_frac", "amplitude_sigma_frac"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.fitts_b <= 0:
            raise ValueError("fitts_b must be positive")

    def zoom_for(self, cond: Condition) -> float:
        return float(self.config_zoom.get(f"{cond.size_class}/{cond.distance_class}", 1.0))


def max_config_zoom(layout: TargetLayout, h_fov: float = 60.0) -> float:
    """Largest zoom that keeps the whole layout inside the frustum with a 5% margin."""
    from .geometry import vertical_fov_for_aspect
    tan_v = math.tan(math.radians(vertical_fov_for_aspect(h_fov)) / 2.0)
    extent = FRUSTUM_MARGIN * (layout.layout_diameter + layout.target_width)
    return 2.0 * layout.depth * tan_v / extent


def _target_plane(layout: TargetLayout) -> Plane:
    return Plane(layout.center, [0.0, 0.0, -1.0])


def _magnification(cfg: PanelConfig, layout: TargetLayout) -> float:
    """Target-plane width of the captured view per metre of physical panel width."""
    view = cfg.view
    hit = ray_plane_intersect(Ray(view.origin, view.forward), _target_plane(layout))
    if hit is None:
        raise ValueError("captured view does not face the target plane")
    depth = float(np.dot(hit - view.origin, view.forward))
    return 2.0 * depth * view.tan_half_h / cfg.panel.scaled_width


def motor_endpoint_sigma(kind: TechniqueKind, params: MotorParams, cfg: Optional[PanelConfig],
                         layout: TargetLayout, head: Pose) -> float:
    """Endpoint SD on the target plane from motor noise only."""
    kind = TechniqueKind(kind)
    total_deg = math.hypot(params.aim_sigma_deg, params.heisenberg_deg)
    if kind is TechniqueKind.Raycasting:
        depth = float(np.linalg.norm(layout.center - head.position))
        return depth * math.tan(math.radians(total_deg))
    if cfg is None or not cfg.configured:
        raise ValueError(f"{kind.value} needs a configured panel")
    if kind is TechniqueKind.ViewfinderRay:
        sigma_panel = HAND_PANEL_DISTANCE * math.tan(math.radians(total_deg))
    else:
        sigma_panel = math.hypot(HAND_REST_DISTANCE * math.tan(math.radians(params.aim_sigma_deg)),
                                 params.touch_sigma_mm / 1000.0)
    return sigma_panel * _magnification(cfg, layout)


def effective_endpoint_sigma(kind: TechniqueKind, params: MotorParams, cfg: Optional[PanelConfig],
                             layout: TargetLayout, head: Pose) -> float:
    """Per-axis SD of selection endpoints on the target plane."""
    motor = motor_endpoint_sigma(kind, params, cfg, layout, head)
    return math.hypot(motor, params.width_sigma_frac * layout.target_width,
                      params.amplitude_sigma_frac * layout.layout_diameter)


@dataclass(frozen=True, eq=False)
class SimContext:
    """Everything about a condition that does not change from trial to trial."""

    condition: Condition
    layout: TargetLayout
    cfg: Optional[PanelConfig]
    head: Pose
    order: np.ndarray          # (n,) target indices in visiting order
    prev: np.ndarray           # (n,) index of the previous target (cyclic for the first)
    sigma: float
    sigma_motor: float
    amplitude: np.ndarray      # (n,) motor-space amplitude per trial
    anchor: np.ndarray         # (3,) point whose distance from the head is the actual depth
    proxy_width: np.ndarray    # (n,) interacted width seen at the capture head distance
    anchor_dist: float
    mt_det: float


def _motor_amplitude(kind: TechniqueKind, cfg, layout: TargetLayout, head: Pose,
                     order, prev) -> np.ndarray:
    c = layout.centers
    if kind is TechniqueKind.Raycasting:
        u = c[order] - head.position
        w = c[prev] - head.position
        cosang = np.sum(u * w, axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1))
        return ARM_LEVER * np.arccos(np.clip(cosang, -1.0, 1.0))
    proxies = np.array([proxy_point(cfg, p) for p in c])
    chord = np.linalg.norm(proxies[order] - proxies[prev], axis=1)
    if kind is TechniqueKind.ViewfinderRay:
        return ARM_LEVER * 2.0 * np.arctan(chord / (2.0 * HAND_PANEL_DISTANCE))
    return chord


def build_context(cond: Condition, params: MotorParams, n_targets: int = 11, depth: float = 5.0,
                  h_fov: float = 60.0, head: Optional[Pose] = None) -> SimContext:
    kind = cond.technique
    head = head or Pose([0.0, 0.0, 0.0])
    layout = layout_targets(n_targets, cond.distance, cond.width, depth)
    cfg = None
    if kind.is_viewfinder:
        dist, dep = PANEL_PLACEMENT[kind]
        cfg = placed_panel(head, dist, dep, zoom=params.zoom_for(cond), h_fov=h_fov)
    order = np.array(target_order(n_targets))
    prev = np.roll(order, 1)
    sigma_motor = motor_endpoint_sigma(kind, params, cfg, layout, head)
    sigma = effective_endpoint_sigma(kind, params, cfg, layout, head)
    amp = _motor_amplitude(kind, cfg, layout, head, order, prev)
    anchor = layout.center if cfg is None else cfg.panel.center
    anchor_dist = actual_target_depth(kind, cfg, head, layout)
    angles = np.array([adjusted_visual_angle(kind, cfg, layout.target_width, layout.centers[k], head)
                       for k in order])
    if kind is TechniqueKind.Raycasting:
        ref = np.linalg.norm(layout.centers[order] - head.position, axis=1)
    else:
        ref = np.full(len(order), anchor_dist)
    proxy_width = 2.0 * ref * np.tan(np.radians(angles) / 2.0)
    mt_det = (params.fitts_a + params.fitts_b * cond.id_nominal
              + params.precision_time * sigma_motor / (layout.target_width / 2.0))
    return SimContext(cond, layout, cfg, head, order, prev, sigma, sigma_motor, amp,
                      np.asarray(anchor, float), proxy_width, anchor_dist, mt_det)


@dataclass(frozen=True)
class Draws:
    """Standard-normal draws for ``n_seq`` sequences of ``n`` trials."""

    endpoint: np.ndarray   # (s, n, 2)
    mt: np.ndarray         # (s, n)
    hand: np.ndarray       # (s, n)
    head: np.ndarray       # (s, n)
    head_pos: np.ndarray   # (s, n, 3)

    @classmethod
    def generate(cls, rng: np.random.Generator, n_seq: int, n: int) -> "Draws":
        return cls(rng.standard_normal((n_seq, n, 2)),
                   rng.standard_normal((n_seq, n)),
                   rng.standard_normal((n_seq, n)),
                   rng.standard_normal((n_seq, n)),
                   rng.standard_normal((n_seq, n, 3)))


def simulate_block(ctx: SimContext, params: MotorParams, draws: Draws) -> dict:
    """Vectorised simulation of many sequences of one condition.

    Returns arrays shaped (n_seq, n): 2D points are in the target-plane frame
    with the origin at the layout centre.
    """
    c2 = ctx.layout.centers_2d()
    targets = np.broadcast_to(c2[ctx.order], draws.endpoint.shape)
    selects = targets + ctx.sigma * draws.endpoint
    froms = np.empty_like(selects)
    froms[:, 0] = c2[ctx.prev[0]]
    froms[:, 1:] = selects[:, :-1]

    mt = np.maximum(MIN_MT, ctx.mt_det * np.exp(params.mt_sigma * draws.mt))
    # mean-one lognormal path noise
    path_h = np.exp(PATH_SIGMA * draws.hand - 0.5 * PATH_SIGMA ** 2)
    path_k = np.exp(PATH_SIGMA * draws.head - 0.5 * PATH_SIGMA ** 2)
    hand = (params.hand_gain * ctx.amplitude + params.hand_rate * mt) * path_h
    head = (params.head_base + params.head_gain * ctx.amplitude
            + (params.head_rate + params.head_reach_rate * ctx.amplitude) * mt) * path_k

    head_pos = ctx.head.position + HEAD_JITTER * draws.head_pos
    if ctx.condition.technique is TechniqueKind.Raycasting:
        tgt3 = ctx.layout.centers[ctx.order]
        depth = np.linalg.norm(ctx.anchor - head_pos, axis=-1)
        view_dist = np.linalg.norm(tgt3 - head_pos, axis=-1)
    else:
        depth = np.linalg.norm(ctx.anchor - head_pos, axis=-1)
        view_dist = depth
    angle = np.degrees(2.0 * np.arctan(ctx.proxy_width / (2.0 * view_dist)))
    return {"from": froms, "target": np.array(targets), "select": selects, "mt": mt,
            "hand": hand, "head": head, "depth": depth, "angle": angle}


def _technique_index(kind: TechniqueKind) -> int:
    return list(TechniqueKind).index(TechniqueKind(kind))


def stream_seed(seed: int, participant: int, cond: Condition, sequence_idx: int) -> np.random.SeedSequence:
    """Independent RNG stream keyed by the sequence's identity."""
    key = zlib.crc32(cond.label.encode())
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, participant, key, sequence_idx])


def _records_from_block(out: dict, ctx: SimContext, participant: int, sequence_idx: int,
                        s: int = 0) -> list[TrialRecord]:
    z = ctx.layout.depth
    lift = lambda p: np.array([p[0], p[1], z])  # noqa: E731
    recs = []
    for k in range(len(ctx.order)):
        recs.append(TrialRecord(
            participant=participant, condition=ctx.condition, sequence_idx=sequence_idx,
            trial_idx=k, target_index=int(ctx.order[k]),
            from_point=lift(out["from"][s, k]), target_center=lift(out["target"][s, k]),
            selection_point=lift(out["select"][s, k]),
            mt=float(out["mt"][s, k]), hand_path=float(out["hand"][s, k]),
            head_path=float(out["head"][s, k]), actual_depth=float(out["depth"][s, k]),
            adj_visual_angle=float(out["angle"][s, k]),
            layout_diameter=ctx.layout.layout_diameter, depth=z))
    return recs


def simulate_sequence(participant: int, condition: Condition, params: MotorParams, seed: int,
                      sequence_idx: int = 0, ctx: Optional[SimContext] = None,
                      n_targets: int = 11, depth: float = 5.0, h_fov: float = 60.0) -> list[TrialRecord]:
    """One circle of selections; a pure function of (seed, participant, condition, sequence_idx)."""
    ctx = ctx or build_context(condition, params, n_targets, depth, h_fov)
    rng = np.random.default_rng(stream_seed(seed, participant, condition, sequence_idx))
    out = simulate_block(ctx, params, Draws.generate(rng, 1, len(ctx.order)))
    return _records_from_block(out, ctx, participant, sequence_idx)


def simulate_experiment(params: dict, seed: int, participants: int = 20, sequences: int = 3,
                        conditions: Optional[list[Condition]] = None, n_targets: int = 11,
                        depth: float = 5.0, h_fov: float = 60.0,
                        workers: int = 1) -> list[TrialRecord]:
    """All trials of a full within-subject run, ordered participant, condition, sequence, trial.

    ``params`` maps technique to :class:`MotorParams`. The output does not
    depend on ``workers``.
    """
    conditions = conditions or make_conditions()
    ctxs = {c.key: build_context(c, params[c.technique], n_targets, depth, h_fov) for c in conditions}
    jobs = [(p, c, s) for p in range(participants) for c in conditions for s in range(sequences)]

    def run(job):
        p, c, s = job
        return simulate_sequence(p, c, params[c.technique], seed, s, ctx=ctxs[c.key])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(run, jobs))
    else:
        chunks = [run(j) for j in jobs]
    return [r for chunk in chunks for r in chunk]


# -- parameter persistence ---------------------------------------------------

def params_to_json(params: dict) -> dict:
    out = {}
    for kind, p in params.items():
        d = asdict(p)
        d["technique"] = TechniqueKind(kind).value
        out[TechniqueKind(kind).value] = d
    return out


def params_from_json(data: dict) -> dict:
    out = {}
    for key, d in data.items():
        d = dict(d)
        d.setdefault("technique", key)
        out[TechniqueKind(key)] = MotorParams(**d)
    return out


def save_params(params: dict, path, extra: Optional[dict] = None) -> None:
    from .io import atomic_write_text
    doc = {"params": params_to_json(params)}
    if extra:
        doc.update(extra)
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_params(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return params_from_json(doc.get("params", doc))


def default_params() -> dict:
    """Parameters fitted to the published per-condition means (shipped with the package)."""
    from importlib.resources import files
    with files("viewfinder.data").joinpath("calibrated_params.json").open(encoding="utf-8") as fh:
        doc = json.load(fh)
    return params_from_json(doc["params"])

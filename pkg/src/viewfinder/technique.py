"""Selection techniques: plain raycasting and the two viewfinder-panel variants.

A viewfinder panel starts head-attached with a live view. Grabbing it freezes
the view (a :class:`~viewfinder.geometry.CapturedView` at the head pose) and
lets the panel be placed anywhere; afterwards a cursor on the panel maps to a
world ray from the frozen view origin through the matching point of the
frustum's control plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .geometry import (
    CapturedView, Panel, Plane, Pose, Ray, normalize, panel_uv_to_world,
    quat_from_axis_angle, quat_look, quat_multiply, ray_panel_uv,
    ray_plane_intersect, rotate, touch_panel_uv, uv_to_world_ray, vec3,
    visual_angle, world_to_view_uv,
)
from .taskgen import TargetLayout, TechniqueKind

__all__ = [
    "PanelConfig", "Grab", "SetViewZoom", "SetPanelScale", "Reset", "ConfigCommand",
    "default_panel", "configure", "selection_point", "proxy_uv", "proxy_point",
    "adjusted_visual_angle", "actual_target_depth", "placed_panel",
    "DEFAULT_OFFSET", "DEFAULT_INCLINATION", "DEFAULT_H_FOV",
]

# panel centre relative to the head, in the head frame
DEFAULT_OFFSET = np.array([0.0, -0.15, 0.4])
DEFAULT_INCLINATION = 30.0
DEFAULT_H_FOV = 60.0
ZOOM_FACTOR_BOUNDS = (0.1, 20.0)
SCALE_FACTOR_BOUNDS = (0.1, 10.0)


@dataclass(frozen=True, eq=False)
class PanelConfig:
    panel: Panel
    head_pose_at_capture: Optional[Pose]
    placement_offset: np.ndarray
    inclination: float
    h_fov: float = DEFAULT_H_FOV

    @property
    def configured(self) -> bool:
        return self.panel.state == "Configured"

    @property
    def view(self) -> Optional[CapturedView]:
        return self.panel.view

    def same_as(self, other: "PanelConfig", atol: float = 1e-12) -> bool:
        a, b = self.panel, other.panel
        if (a.state, a.width, a.height, a.thickness, a.panel_scale) != \
                (b.state, b.width, b.height, b.thickness, b.panel_scale):
            return False
        if (a.view is None) != (b.view is None):
            return False
        if a.view is not None:
            va, vb = a.view, b.view
            if not (va.pose.allclose(vb.pose, atol) and
                    math.isclose(va.h_fov, vb.h_fov) and math.isclose(va.zoom, vb.zoom)):
                return False
        if (self.head_pose_at_capture is None) != (other.head_pose_at_capture is None):
            return False
        if self.head_pose_at_capture is not None and \
                not self.head_pose_at_capture.allclose(other.head_pose_at_capture, atol):
            return False
        return (a.pose.allclose(b.pose, atol)
                and np.allclose(self.placement_offset, other.placement_offset, atol=atol)
                and self.inclination == other.inclination and self.h_fov == other.h_fov)


@dataclass(frozen=True)
class Grab:
    target_pose: Pose


@dataclass(frozen=True)
class SetViewZoom:
    factor: float


@dataclass(frozen=True)
class SetPanelScale:
    factor: float


@dataclass(frozen=True)
class Reset:
    pass


ConfigCommand = Union[Grab, SetViewZoom, SetPanelScale, Reset]


def default_panel(head: Pose, h_fov: float = DEFAULT_H_FOV) -> PanelConfig:
    """Head-attached panel before configuration: 0.4 m ahead, 0.15 m down, top tilted 30 deg away."""
    center = head.position + rotate(head.orientation, DEFAULT_OFFSET)
    tilt = quat_from_axis_angle([1.0, 0.0, 0.0], DEFAULT_INCLINATION)
    pose = Pose(center, quat_multiply(head.orientation, tilt))
    return PanelConfig(Panel(pose), None, DEFAULT_OFFSET.copy(), DEFAULT_INCLINATION, h_fov)


def configure(cfg: PanelConfig, cmd: ConfigCommand, head: Pose) -> PanelConfig:
    if isinstance(cmd, Reset):
        return default_panel(head, cfg.h_fov)

    panel = cfg.panel
    if isinstance(cmd, Grab):
        if panel.state == "PreConfig":
            view = CapturedView(head.position, head.orientation, cfg.h_fov)
            capture = head
        else:
            view, capture = panel.view, cfg.head_pose_at_capture
        new_panel = replace(panel, pose=cmd.target_pose, view=view, state="Configured")
        offset = cmd.target_pose.position - capture.position
        incl = _inclination(cmd.target_pose)
        return PanelConfig(new_panel, capture, offset, incl, cfg.h_fov)

    if panel.state != "Configured":
        raise ValueError(f"{type(cmd).__name__} requires a configured panel")
    if isinstance(cmd, SetViewZoom):
        lo, hi = ZOOM_FACTOR_BOUNDS
        if not lo <= cmd.factor <= hi:
            raise ValueError(f"zoom factor {cmd.factor} outside [{lo}, {hi}]")
        new_panel = replace(panel, view=panel.view.with_zoom(panel.view.zoom * cmd.factor))
    elif isinstance(cmd, SetPanelScale):
        lo, hi = SCALE_FACTOR_BOUNDS
        if not lo <= cmd.factor <= hi:
            raise ValueError(f"panel scale factor {cmd.factor} outside [{lo}, {hi}]")
        new_panel = replace(panel, panel_scale=panel.panel_scale * cmd.factor)
    else:
        raise TypeError(f"unknown command {cmd!r}")
    return replace(cfg, panel=new_panel)


def _inclination(pose: Pose) -> float:
    """Tilt of the panel's up axis away from world vertical, in degrees."""
    return math.degrees(math.acos(np.clip(pose.up[1], -1.0, 1.0)))


def placed_panel(head: Pose, distance: float, depression: float, zoom: float = 1.0,
                 panel_scale: float = 1.0, h_fov: float = DEFAULT_H_FOV) -> PanelConfig:
    """Configure a panel the way a participant would: capture facing ahead, then
    put the panel ``distance`` metres away, ``depression`` degrees below the
    head's forward axis, facing the head."""
    cfg = default_panel(head, h_fov)
    pitch = quat_from_axis_angle(head.right, depression)
    direction = rotate(pitch, head.forward)
    pose = Pose(head.position + distance * direction, quat_look(direction, head.up))
    cfg = configure(cfg, Grab(pose), head)
    if zoom != 1.0:
        cfg = configure(cfg, SetViewZoom(zoom), head)
    if panel_scale != 1.0:
        cfg = configure(cfg, SetPanelScale(panel_scale), head)
    return cfg


def _require_configured(kind: TechniqueKind, cfg: Optional[PanelConfig]) -> PanelConfig:
    if cfg is None or not cfg.configured:
        raise ValueError(f"{kind.value} needs a configured panel")
    return cfg


def selection_point(kind: TechniqueKind, cfg: Optional[PanelConfig], input_,
                    target_plane: Plane) -> Optional[np.ndarray]:
    """Where the selection cursor lands on ``target_plane``.

    ``input_`` is the hand ray for the ray techniques and the index fingertip
    position for ViewfinderTouch. Returns ``None`` when nothing is hit, and
    for touch input that has not reached the panel surface.
    """
    kind = TechniqueKind(kind)
    if kind is TechniqueKind.Raycasting:
        return ray_plane_intersect(input_, target_plane)
    cfg = _require_configured(kind, cfg)
    if kind is TechniqueKind.ViewfinderRay:
        uv = ray_panel_uv(input_, cfg.panel)
        if uv is None:
            return None
    else:
        touch = touch_panel_uv(input_, cfg.panel)
        if not (touch.triggered and touch.in_bounds):
            return None
        uv = (touch.u, touch.v)
    return ray_plane_intersect(uv_to_world_ray(cfg.view, *uv), target_plane)


def proxy_uv(cfg: PanelConfig, point) -> Optional[tuple[float, float]]:
    """Panel UV at which a world point is shown; ``None`` if outside the captured frustum."""
    uv = world_to_view_uv(cfg.view, point)
    if uv is None or not (0.0 <= uv[0] <= 1.0 and 0.0 <= uv[1] <= 1.0):
        return None
    return uv


def proxy_point(cfg: PanelConfig, point) -> np.ndarray:
    """World position of a point's proxy on the panel surface."""
    uv = proxy_uv(cfg, point)
    if uv is None:
        raise ValueError("point is outside the captured frustum")
    return panel_uv_to_world(cfg.panel, *uv)


def _in_plane_horizontal(view: CapturedView, normal: np.ndarray) -> np.ndarray:
    right = rotate(view.orientation, [1.0, 0.0, 0.0])
    return normalize(right - np.dot(right, normal) * normal)


def adjusted_visual_angle(kind: TechniqueKind, cfg: Optional[PanelConfig], target_width: float,
                          target_center, head: Pose,
                          target_normal=(0.0, 0.0, -1.0)) -> float:
    """Visual angle of the target as the participant interacts with it.

    For the viewfinder techniques this is the angle of the target's proxy on
    the (scaled) panel, seen from the head.
    """
    kind = TechniqueKind(kind)
    center = vec3(target_center)
    if kind is TechniqueKind.Raycasting:
        return visual_angle(target_width, float(np.linalg.norm(center - head.position)))
    cfg = _require_configured(kind, cfg)
    e = _in_plane_horizontal(cfg.view, normalize(target_normal))
    ends = [center - 0.5 * target_width * e, center + 0.5 * target_width * e]
    uvs = [proxy_uv(cfg, p) for p in ends]
    if any(uv is None for uv in uvs):
        raise ValueError("target lies outside the captured frustum")
    a, b = (panel_uv_to_world(cfg.panel, *uv) for uv in uvs)
    w_p = float(np.linalg.norm(b - a))
    return visual_angle(w_p, float(np.linalg.norm(cfg.panel.center - head.position)))


def actual_target_depth(kind: TechniqueKind, cfg: Optional[PanelConfig], head: Pose,
                        layout: TargetLayout) -> float:
    kind = TechniqueKind(kind)
    if kind is TechniqueKind.Raycasting:
        return float(np.linalg.norm(layout.center - head.position))
    return float(np.linalg.norm(cfg.panel.center - head.position))

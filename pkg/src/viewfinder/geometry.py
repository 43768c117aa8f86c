"""3D primitives for panel-mediated selection.

World frame: x right, y up, z forward from the participant's initial head
position. Orientations are unit quaternions stored scalar-last ``(x, y, z, w)``,
the same convention as :class:`scipy.spatial.transform.Rotation`.

Local axes of any posed object: +x right, +y up, +z forward. A panel's front
face looks back along its local -z, i.e. towards a viewer standing behind it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.spatial.transform import Rotation

__all__ = [
    "Pose", "Ray", "Plane", "CapturedView", "Panel", "TouchSample",
    "vec3", "normalize", "quat_identity", "quat_from_axis_angle",
    "quat_multiply", "quat_look", "rotate",
    "ray_plane_intersect", "ray_panel_uv", "touch_panel_uv",
    "panel_uv_to_world", "uv_to_world_ray", "world_to_view_uv",
    "visual_angle", "vertical_fov_for_aspect",
    "PANEL_ASPECT", "PARALLEL_EPS",
]

PARALLEL_EPS = 1e-12
UNIT_TOL = 1e-9
PANEL_ASPECT = 4.0 / 3.0


def vec3(x, y=None, z=None) -> np.ndarray:
    """Return a float array of shape (3,), accepting ``vec3(x, y, z)`` or ``vec3(seq)``."""
    if y is None and z is None:
        v = np.asarray(x, dtype=float).reshape(3)
    else:
        v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector {v}")
    return v


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def quat_identity() -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, 1.0])


def quat_from_axis_angle(axis, degrees: float) -> np.ndarray:
    return Rotation.from_rotvec(normalize(axis) * math.radians(degrees)).as_quat()


def quat_multiply(q1, q2) -> np.ndarray:
    """Compose rotations: the result applies ``q2`` first, then ``q1``."""
    return (Rotation.from_quat(q1) * Rotation.from_quat(q2)).as_quat()


def quat_look(forward, up=(0.0, 1.0, 0.0)) -> np.ndarray:
    """Orientation whose local +z is ``forward`` and local +y is as close to ``up`` as possible."""
    f = normalize(forward)
    r = np.cross(np.asarray(up, dtype=float), f)
    if np.linalg.norm(r) < 1e-12:
        raise ValueError("forward is parallel to up")
    r = normalize(r)
    u = np.cross(f, r)
    return Rotation.from_matrix(np.column_stack([r, u, f])).as_quat()


def rotate(q, v) -> np.ndarray:
    return Rotation.from_quat(q).apply(np.asarray(v, dtype=float))


def _check_unit(v, what: str) -> None:
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise ValueError(f"{what} must be unit length, got |v|={np.linalg.norm(v)!r}")


@dataclass(frozen=True, eq=False)
class Pose:
    position: np.ndarray
    orientation: np.ndarray = field(default_factory=quat_identity)

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        q = np.asarray(self.orientation, dtype=float).reshape(4)
        _check_unit(q, "orientation quaternion")
        object.__setattr__(self, "orientation", q)

    @property
    def right(self) -> np.ndarray:
        return rotate(self.orientation, [1.0, 0.0, 0.0])

    @property
    def up(self) -> np.ndarray:
        return rotate(self.orientation, [0.0, 1.0, 0.0])

    @property
    def forward(self) -> np.ndarray:
        return rotate(self.orientation, [0.0, 0.0, 1.0])

    def translated(self, t) -> "Pose":
        return Pose(self.position + vec3(t), self.orientation)

    def allclose(self, other: "Pose", atol: float = 1e-12) -> bool:
        # q and -q are the same rotation
        same_q = (np.allclose(self.orientation, other.orientation, atol=atol)
                  or np.allclose(self.orientation, -other.orientation, atol=atol))
        return bool(np.allclose(self.position, other.position, atol=atol) and same_q)


@dataclass(frozen=True, eq=False)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", vec3(self.origin))
        d = vec3(self.direction)
        _check_unit(d, "ray direction")
        object.__setattr__(self, "direction", d)

    @classmethod
    def through(cls, origin, point) -> "Ray":
        """Ray from ``origin`` towards ``point``."""
        return cls(origin, normalize(vec3(point) - vec3(origin)))

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


@dataclass(frozen=True, eq=False)
class Plane:
    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", vec3(self.point))
        n = vec3(self.normal)
        _check_unit(n, "plane normal")
        object.__setattr__(self, "normal", n)

    def signed_distance(self, p) -> float:
        return float(np.dot(vec3(p) - self.point, self.normal))


def vertical_fov_for_aspect(h_fov: float, aspect: float = PANEL_ASPECT) -> float:
    """Vertical field of view (degrees) sharing the image aspect ``aspect`` = width/height."""
    return math.degrees(2.0 * math.atan(math.tan(math.radians(h_fov) / 2.0) / aspect))


@dataclass(frozen=True, eq=False)
class CapturedView:
    """A camera frustum frozen at capture time.

    ``zoom`` divides the frustum tangents (optical zoom); ``v_fov`` defaults to
    the value matching the panel's 4:3 aspect.
    """

    origin: np.ndarray
    orientation: np.ndarray
    h_fov: float = 60.0
    v_fov: Optional[float] = None
    zoom: float = 1.0

    ZOOM_MIN = 0.05
    ZOOM_MAX = 20.0

    def __post_init__(self):
        object.__setattr__(self, "origin", vec3(self.origin))
        q = np.asarray(self.orientation, dtype=float).reshape(4)
        _check_unit(q, "view orientation")
        object.__setattr__(self, "orientation", q)
        if self.v_fov is None:
            object.__setattr__(self, "v_fov", vertical_fov_for_aspect(self.h_fov))
        if not (0.0 < self.h_fov < 180.0 and 0.0 < self.v_fov < 180.0):
            raise ValueError("field of view must lie in (0, 180) degrees")
        aspect = math.tan(math.radians(self.h_fov) / 2) / math.tan(math.radians(self.v_fov) / 2)
        if abs(aspect - PANEL_ASPECT) > 1e-6:
            raise ValueError(f"view aspect {aspect:.6f} does not match the panel's 4:3")
        if not (self.ZOOM_MIN <= self.zoom <= self.ZOOM_MAX):
            raise ValueError(f"zoom {self.zoom} outside [{self.ZOOM_MIN}, {self.ZOOM_MAX}]")

    @property
    def pose(self) -> Pose:
        return Pose(self.origin, self.orientation)

    @property
    def forward(self) -> np.ndarray:
        return rotate(self.orientation, [0.0, 0.0, 1.0])

    @property
    def tan_half_h(self) -> float:
        return math.tan(math.radians(self.h_fov) / 2.0) / self.zoom

    @property
    def tan_half_v(self) -> float:
        return math.tan(math.radians(self.v_fov) / 2.0) / self.zoom

    def with_zoom(self, zoom: float) -> "CapturedView":
        return CapturedView(self.origin, self.orientation, self.h_fov, self.v_fov, zoom)


@dataclass(frozen=True, eq=False)
class Panel:
    """Physical viewfinder panel; ``view`` is ``None`` while the view is live."""

    pose: Pose
    width: float = 0.4
    height: float = 0.3
    thickness: float = 0.01
    panel_scale: float = 1.0
    view: Optional[CapturedView] = None
    state: str = "PreConfig"

    SCALE_MIN = 0.1
    SCALE_MAX = 10.0
    STATES = ("PreConfig", "Configured")

    def __post_init__(self):
        if abs(self.width / self.height - PANEL_ASPECT) > 1e-9:
            raise ValueError("panel width/height must be 4/3")
        if self.thickness <= 0:
            raise ValueError("panel thickness must be positive")
        if not (self.SCALE_MIN <= self.panel_scale <= self.SCALE_MAX):
            raise ValueError(f"panel_scale {self.panel_scale} outside [0.1, 10]")
        if self.state not in self.STATES:
            raise ValueError(f"unknown panel state {self.state!r}")

    @property
    def scaled_width(self) -> float:
        return self.width * self.panel_scale

    @property
    def scaled_height(self) -> float:
        return self.height * self.panel_scale

    @property
    def center(self) -> np.ndarray:
        return self.pose.position

    @property
    def front_normal(self) -> np.ndarray:
        return rotate(self.pose.orientation, [0.0, 0.0, -1.0])

    @property
    def plane(self) -> Plane:
        return Plane(self.center, self.front_normal)

    @property
    def live(self) -> bool:
        return self.view is None


class TouchSample(NamedTuple):
    u: float
    v: float
    depth: float
    in_bounds: bool

    @property
    def triggered(self) -> bool:
        return self.depth <= 0.0


def ray_plane_intersect(ray: Ray, plane: Plane) -> Optional[np.ndarray]:
    denom = float(np.dot(ray.direction, plane.normal))
    if abs(denom) < PARALLEL_EPS:
        return None
    t = float(np.dot(plane.point - ray.origin, plane.normal)) / denom
    if t <= 0.0:
        return None
    return ray.at(t)


def _panel_uv(panel: Panel, p: np.ndarray) -> tuple[float, float]:
    d = p - panel.center
    u = 0.5 + float(np.dot(d, panel.pose.right)) / panel.scaled_width
    v = 0.5 + float(np.dot(d, panel.pose.up)) / panel.scaled_height
    return u, v


def ray_panel_uv(ray: Ray, panel: Panel) -> Optional[tuple[float, float]]:
    """UV of the ray's hit on the panel front face, ``(0, 0)`` bottom-left; ``None`` on a miss."""
    p = ray_plane_intersect(ray, panel.plane)
    if p is None:
        return None
    u, v = _panel_uv(panel, p)
    if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
        return None
    return u, v


def touch_panel_uv(fingertip, panel: Panel) -> TouchSample:
    """Perpendicular projection of a fingertip onto the panel.

    ``depth`` is signed along the front normal: positive in front of the
    surface, zero on it, negative once the fingertip has gone through.
    """
    tip = vec3(fingertip)
    depth = panel.plane.signed_distance(tip)
    u, v = _panel_uv(panel, tip - depth * panel.front_normal)
    inside = 0.0 <= u <= 1.0 and 0.0 <= v <= 1.0
    return TouchSample(min(max(u, 0.0), 1.0), min(max(v, 0.0), 1.0), depth, inside)


def panel_uv_to_world(panel: Panel, u: float, v: float) -> np.ndarray:
    """Point on the panel front face at normalized coordinates (u, v)."""
    return (panel.center
            + (u - 0.5) * panel.scaled_width * panel.pose.right
            + (v - 0.5) * panel.scaled_height * panel.pose.up)


def uv_to_world_ray(view: Optional[CapturedView], u: float, v: float) -> Ray:
    """World ray from the view origin through the control cursor at (u, v)."""
    if view is None:
        raise ValueError("panel view is live; capture it before reconstructing rays")
    local = np.array([(2.0 * u - 1.0) * view.tan_half_h,
                      (2.0 * v - 1.0) * view.tan_half_v,
                      1.0])
    return Ray(view.origin, normalize(rotate(view.orientation, local)))


def world_to_view_uv(view: CapturedView, point) -> Optional[tuple[float, float]]:
    """Inverse of :func:`uv_to_world_ray`; ``None`` if the point is behind the view."""
    local = Rotation.from_quat(view.orientation).inv().apply(vec3(point) - view.origin)
    if local[2] <= 0.0:
        return None
    u = 0.5 + 0.5 * (local[0] / local[2]) / view.tan_half_h
    v = 0.5 + 0.5 * (local[1] / local[2]) / view.tan_half_v
    return float(u), float(v)


def visual_angle(width: float, distance: float) -> float:
    """Angle in degrees subtended by ``width`` seen face-on from ``distance``."""
    if width <= 0 or distance <= 0:
        raise ValueError("width and distance must be positive")
    return math.degrees(2.0 * math.atan(width / (2.0 * distance)))

"""ISO 9241-9 multidirectional tapping layouts and the experimental design."""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TechniqueKind", "TargetLayout", "Condition", "Design",
    "layout_targets", "target_order", "index_of_difficulty",
    "make_conditions", "SIZE_CLASSES", "DISTANCE_CLASSES", "DEFAULT_DEPTH",
]

DEFAULT_DEPTH = 5.0
# metres; 3 and 1 degrees of visual angle at 5 m
SIZE_CLASSES = {"Large": 0.2619, "Small": 0.0873}
DISTANCE_CLASSES = {"Short": 1.0, "Long": 2.0}


class TechniqueKind(str, enum.Enum):
    Raycasting = "Raycasting"
    ViewfinderRay = "ViewfinderRay"
    ViewfinderTouch = "ViewfinderTouch"

    @property
    def is_viewfinder(self) -> bool:
        return self is not TechniqueKind.Raycasting

    @property
    def pinch_triggered(self) -> bool:
        return self is not TechniqueKind.ViewfinderTouch


def _check_odd(n: int) -> None:
    if n < 5 or n % 2 == 0:
        raise ValueError(f"target count must be odd and >= 5, got {n}")


@dataclass(frozen=True, eq=False)
class TargetLayout:
    n_targets: int
    layout_diameter: float
    target_width: float
    depth: float
    centers: np.ndarray  # (n, 3)

    @property
    def center(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.depth])

    @property
    def radius(self) -> float:
        return self.layout_diameter / 2.0

    def centers_2d(self) -> np.ndarray:
        """Centers in the target-plane frame (origin at the layout center)."""
        return self.centers[:, :2] - self.center[:2]

    @property
    def step_length(self) -> float:
        """Chord between consecutive targets in the visiting order."""
        n = self.n_targets
        return self.layout_diameter * math.sin(math.pi * ((n + 1) // 2) / n)


def layout_targets(n: int = 11, diameter: float = 1.0, width: float = 0.2619,
                   depth: float = DEFAULT_DEPTH) -> TargetLayout:
    """Targets evenly spaced on a circle at ``z = depth``; target 0 at 12 o'clock, clockwise."""
    _check_odd(n)
    if diameter <= 0 or width <= 0 or depth <= 0:
        raise ValueError("diameter, width and depth must be positive")
    angles = np.radians(90.0 - np.arange(n) * (360.0 / n))
    r = diameter / 2.0
    centers = np.column_stack([r * np.cos(angles), r * np.sin(angles), np.full(n, float(depth))])
    return TargetLayout(n, float(diameter), float(width), float(depth), centers)


def target_order(n: int) -> list[int]:
    """Alternating visiting order across the circle."""
    _check_odd(n)
    step = (n + 1) // 2
    return [(k * step) % n for k in range(n)]


def index_of_difficulty(D: float, W: float) -> float:
    if D <= 0 or W <= 0:
        raise ValueError("D and W must be positive")
    return math.log2(D / W + 1.0)


@dataclass(frozen=True)
class Condition:
    technique: TechniqueKind
    size_class: str
    distance_class: str
    width: float
    distance: float
    id_nominal: float

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.technique.value, self.size_class, self.distance_class)

    @property
    def label(self) -> str:
        return f"{self.technique.value}/{self.size_class}/{self.distance_class}"


@dataclass
class Design:
    techniques: tuple = tuple(TechniqueKind)
    sizes: dict = field(default_factory=lambda: dict(SIZE_CLASSES))
    distances: dict = field(default_factory=lambda: dict(DISTANCE_CLASSES))


def make_conditions(design: Design | None = None) -> list[Condition]:
    """Full technique x size x distance cross, technique-major."""
    design = design or Design()
    out = []
    for tech, (s_name, w), (d_name, d) in itertools.product(
            design.techniques, design.sizes.items(), design.distances.items()):
        out.append(Condition(TechniqueKind(tech), s_name, d_name, float(w), float(d),
                             index_of_difficulty(d, w)))
    return out

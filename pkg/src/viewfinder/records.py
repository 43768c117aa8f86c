"""The per-selection record shared by the simulator, the metrics and the log I/O."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .taskgen import Condition

__all__ = ["TrialRecord", "OUTCOMES"]

OUTCOMES = ("hit", "miss", "outlier")


@dataclass(frozen=True, eq=False)
class TrialRecord:
    """One selection attempt. Points are 3D and lie on the target plane."""

    participant: int
    condition: Condition
    sequence_idx: int
    trial_idx: int
    target_index: int
    from_point: np.ndarray
    target_center: np.ndarray
    selection_point: np.ndarray
    mt: float
    hand_path: float
    head_path: float
    actual_depth: float
    adj_visual_angle: float
    layout_diameter: float
    depth: float
    outcome: str | None = None

    @property
    def target_width(self) -> float:
        return self.condition.width

    def with_outcome(self, outcome: str) -> "TrialRecord":
        return replace(self, outcome=outcome)

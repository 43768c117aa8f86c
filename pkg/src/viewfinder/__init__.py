"""Headless simulation and analysis of distant-object selection with a
through-the-lens viewfinder panel, evaluated with Fitts'-law effective
measures and participant-blocked ANOVA."""

from . import geometry, taskgen, technique, metrics, stats, motorsim
from .geometry import CapturedView, Panel, Plane, Pose, Ray, visual_angle
from .metrics import SequenceSummary, fitts_regression, sequence_summary
from .motorsim import MotorParams, simulate_experiment, simulate_sequence
from .records import TrialRecord
from .stats import anova_blocked, f_p_value
from .taskgen import Condition, TechniqueKind, index_of_difficulty, layout_targets, make_conditions

__version__ = "0.1.0"

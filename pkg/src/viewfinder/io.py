"""Experiment config, trial-log CSV, and report tables."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .metrics import SequenceSummary, classify_trial, fitts_regression, sequence_summary
from .records import OUTCOMES, TrialRecord
from .stats import TREATMENT_TERMS, AnovaTable, anova_blocked, format_p
from .taskgen import (
    DISTANCE_CLASSES, SIZE_CLASSES, Condition, Design, TechniqueKind, index_of_difficulty,
    make_conditions,
)

__all__ = [
    "ExperimentConfig", "LOG_COLUMNS", "SUMMARY_COLUMNS", "atomic_write_text",
    "load_config", "config_hash", "write_log", "read_log", "log_to_text",
    "summaries_by_sequence", "write_summaries", "read_summary_rows", "condition_table",
    "technique_table", "fitts_table", "scatter_rows", "anova_report_rows", "rows_to_csv",
    "anova_from_rows",
]

LOG_COLUMNS = (
    "participant_id", "technique", "target_width_m", "layout_diameter_m", "depth_m",
    "sequence_idx", "trial_idx", "target_index", "from_x", "from_y", "target_x", "target_y",
    "select_x", "select_y", "mt_s", "hand_path_m", "head_path_m", "actual_depth_m",
    "adj_visual_angle_deg", "outcome",
)

SUMMARY_FIELDS = {
    "mt_mean_s": "mt_mean", "error_rate_pct": "error_rate", "d_e_m": "d_e", "sd_x_m": "sd_x",
    "w_e_m": "w_e", "id_e_bits": "id_e", "throughput_bps": "throughput",
    "hand_movement_m": "hand_movement", "head_movement_m": "head_movement",
    "actual_depth_m": "actual_depth", "adj_visual_angle_deg": "adj_visual_angle",
}
SUMMARY_COLUMNS = (("participant_id", "technique", "size_class", "distance_class",
                    "target_width_m", "layout_diameter_m", "id_nominal_bits", "sequence_idx")
                   + tuple(SUMMARY_FIELDS) + ("n_used", "n_outliers", "valid"))

# measures reported in the descriptive tables, in display order
TABLE_MEASURES = (
    ("Movement time (s)", "mt_mean_s"), ("Error rate (%)", "error_rate_pct"),
    ("Throughput (bit/s)", "throughput_bps"), ("Hand movement (m)", "hand_movement_m"),
    ("Head movement (m)", "head_movement_m"), ("Actual target depth (m)", "actual_depth_m"),
    ("Adjusted target visual angle (deg)", "adj_visual_angle_deg"),
)


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# -- config -------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    participants: int = 20
    techniques: list = field(default_factory=lambda: [t.value for t in TechniqueKind])
    sizes: dict = field(default_factory=lambda: dict(SIZE_CLASSES))
    distances: dict = field(default_factory=lambda: dict(DISTANCE_CLASSES))
    depth: float = 5.0
    sequences: int = 3
    targets_per_sequence: int = 11
    master_seed: int = 20220101
    params: Optional[str] = None   # path to fitted params; None = shipped defaults
    h_fov: float = 60.0
    workers: int = 1

    def __post_init__(self):
        for name in ("participants", "sequences", "targets_per_sequence", "workers"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.techniques:
            raise ValueError("at least one technique is required")
        self.techniques = [TechniqueKind(t).value for t in self.techniques]
        for d in (self.sizes, self.distances):
            if not d or any(float(v) <= 0 for v in d.values()):
                raise ValueError("sizes and distances must be non-empty and positive")
        if self.depth <= 0:
            raise ValueError("depth must be positive")

    def conditions(self) -> list[Condition]:
        return make_conditions(Design(tuple(self.techniques), dict(self.sizes), dict(self.distances)))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def load_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    unknown = set(data) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(**data)
    if cfg.params and not os.path.isabs(cfg.params):
        cfg.params = os.path.join(os.path.dirname(os.path.abspath(path)), cfg.params)
    return cfg


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(cfg.to_json().encode()).hexdigest()


# -- trial log ----------------------------------------------------------------

def _log_row(r: TrialRecord) -> list:
    c = np.array([0.0, 0.0])  # layouts are centred on the view axis
    outcome = r.outcome or classify_trial(r.selection_point, r.target_center, r.target_width)
    return [r.participant, r.condition.technique.value, r.condition.width, r.layout_diameter,
            r.depth, r.sequence_idx, r.trial_idx, r.target_index,
            r.from_point[0] - c[0], r.from_point[1] - c[1],
            r.target_center[0] - c[0], r.target_center[1] - c[1],
            r.selection_point[0] - c[0], r.selection_point[1] - c[1],
            r.mt, r.hand_path, r.head_path, r.actual_depth, r.adj_visual_angle, outcome]


def log_to_text(records: Iterable[TrialRecord]) -> str:
    return rows_to_csv(LOG_COLUMNS, (_log_row(r) for r in records))


def write_log(records: Iterable[TrialRecord], path) -> int:
    records = list(records)
    atomic_write_text(path, log_to_text(records))
    return len(records)


def _class_name(value: float, classes: dict, prefix: str) -> str:
    for name, v in classes.items():
        if math.isclose(value, v, rel_tol=1e-9, abs_tol=1e-12):
            return name
    return f"{prefix}{value:g}"


def _condition_for(tech: str, width: float, diameter: float) -> Condition:
    return Condition(TechniqueKind(tech), _class_name(width, SIZE_CLASSES, "W="),
                     _class_name(diameter, DISTANCE_CLASSES, "D="), width, diameter,
                     index_of_difficulty(diameter, width))


def read_log(path) -> list[TrialRecord]:
    """Parse a trial log; raises ``ValueError`` naming the first malformed row."""
    out = []
    conds: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != LOG_COLUMNS:
            raise ValueError(f"{path}: header does not match the trial-log schema")
        for lineno, row in enumerate(reader, start=2):
            try:
                if len(row) != len(LOG_COLUMNS):
                    raise ValueError(f"expected {len(LOG_COLUMNS)} fields, got {len(row)}")
                d = dict(zip(LOG_COLUMNS, row))
                nums = {k: float(d[k]) for k in LOG_COLUMNS
                        if k not in ("technique", "outcome", "participant_id")}
                if not all(math.isfinite(v) for v in nums.values()):
                    raise ValueError("non-finite value")
                outcome = d["outcome"].strip().lower()
                if outcome not in OUTCOMES:
                    raise ValueError(f"unknown outcome {d['outcome']!r}")
                key = (d["technique"], nums["target_width_m"], nums["layout_diameter_m"])
                if key not in conds:
                    conds[key] = _condition_for(*key)
                z = nums["depth_m"]
                pt = lambda x, y: np.array([nums[x], nums[y], z])  # noqa: E731
                out.append(TrialRecord(
                    participant=int(d["participant_id"]), condition=conds[key],
                    sequence_idx=int(nums["sequence_idx"]), trial_idx=int(nums["trial_idx"]),
                    target_index=int(nums["target_index"]),
                    from_point=pt("from_x", "from_y"), target_center=pt("target_x", "target_y"),
                    selection_point=pt("select_x", "select_y"), mt=nums["mt_s"],
                    hand_path=nums["hand_path_m"], head_path=nums["head_path_m"],
                    actual_depth=nums["actual_depth_m"],
                    adj_visual_angle=nums["adj_visual_angle_deg"],
                    layout_diameter=nums["layout_diameter_m"], depth=z, outcome=outcome))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}: malformed row {lineno}: {exc}") from None
    return out


# -- summaries and tables ---------------------------------------------------------

def summaries_by_sequence(records: Sequence[TrialRecord]) -> list[tuple[tuple, Condition, SequenceSummary]]:
    groups: dict = defaultdict(list)
    for r in records:
        groups[(r.participant, r.condition.key, r.sequence_idx)].append(r)
    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2])):
        trials = sorted(groups[key], key=lambda t: t.trial_idx)
        out.append((key, trials[0].condition, sequence_summary(trials)))
    return out


def _summary_row(key, cond: Condition, s: SequenceSummary) -> list:
    return ([key[0], cond.technique.value, cond.size_class, cond.distance_class, cond.width,
             cond.distance, cond.id_nominal, key[2]]
            + [getattr(s, f) for f in SUMMARY_FIELDS.values()]
            + [s.n_used, s.n_outliers, s.valid])


def write_summaries(summaries, path) -> None:
    atomic_write_text(path, rows_to_csv(SUMMARY_COLUMNS, (_summary_row(*x) for x in summaries)))


def read_summary_rows(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _mean_sd(values) -> tuple[float, float]:
    """Mean and SD, skipping degenerate sequences (infinite ID_e and throughput)."""
    v = np.asarray(values, float)
    v = v[np.isfinite(v)]
    if len(v) == 0:
        return math.nan, math.nan
    return float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0


def technique_table(rows: list[dict]) -> tuple[list[str], list[list]]:
    """Mean and SD of each measure by technique (sequence-level values)."""
    techs = [t.value for t in TechniqueKind if any(r["technique"] == t.value for r in rows)]
    header = ["measure"] + [f"{t} {s}" for t in techs for s in ("M", "SD")]
    out = []
    for label, col in TABLE_MEASURES:
        line = [label]
        for t in techs:
            line.extend(_mean_sd([float(r[col]) for r in rows if r["technique"] == t]))
        out.append(line)
    return header, out


def condition_table(rows: list[dict]) -> tuple[list[str], list[list]]:
    """Mean and SD by technique x distance for each measure and size class."""
    techs = [t.value for t in TechniqueKind if any(r["technique"] == t.value for r in rows)]
    sizes = sorted({r["size_class"] for r in rows}, key=lambda s: -float(
        next(r["target_width_m"] for r in rows if r["size_class"] == s)))
    dists = sorted({r["distance_class"] for r in rows}, key=lambda d: float(
        next(r["layout_diameter_m"] for r in rows if r["distance_class"] == d)))
    header = ["measure", "size"] + [f"{t} {d} {s}" for t in techs for d in dists for s in ("M", "SD")]
    out = []
    for label, col in TABLE_MEASURES:
        for size in sizes:
            line = [label, size]
            for t in techs:
                for d in dists:
                    vals = [float(r[col]) for r in rows if r["technique"] == t
                            and r["size_class"] == size and r["distance_class"] == d]
                    line.extend(_mean_sd(vals) if vals else (math.nan, math.nan))
            out.append(line)
    return header, out


def fitts_table(rows: list[dict]) -> tuple[list[str], list[list]]:
    """Fitts regression of condition-mean MT on nominal ID, per technique."""
    cells: dict = defaultdict(list)
    for r in rows:
        cells[(r["technique"], float(r["id_nominal_bits"]))].append(float(r["mt_mean_s"]))
    out = []
    for t in TechniqueKind:
        pts = [(idb, float(np.mean(v))) for (tech, idb), v in sorted(cells.items()) if tech == t.value]
        if len({p[0] for p in pts}) >= 2:
            fit = fitts_regression(pts)
            out.append([t.value, fit.a, fit.b, fit.r_squared, len(pts)])
    return ["technique", "a_s", "b_s_per_bit", "r_squared", "n_points"], out


def scatter_rows(records: Sequence[TrialRecord]) -> tuple[list[str], list[list]]:
    header = ["technique", "size_class", "distance_class", "select_x", "select_y",
              "offset_x", "offset_y", "outcome"]
    out = []
    for r in records:
        out.append([r.condition.technique.value, r.condition.size_class, r.condition.distance_class,
                    r.selection_point[0], r.selection_point[1],
                    r.selection_point[0] - r.target_center[0],
                    r.selection_point[1] - r.target_center[1], r.outcome])
    return header, out


# -- ANOVA reports --------------------------------------------------------------

def anova_from_rows(rows: list[dict], measure: str, aggregate: str = "sequence") -> AnovaTable:
    """Blocked ANOVA of ``measure`` over summary rows.

    ``aggregate="condition"`` first averages replicates within each
    participant x condition (one value per cell, as for questionnaire data).
    """
    if not rows:
        raise ValueError("no summary rows")
    if measure not in rows[0]:
        raise ValueError(f"unknown measure {measure!r}; columns are {sorted(rows[0])}")
    data = [(r["participant_id"], r["technique"], r["size_class"], r["distance_class"],
             float(r[measure])) for r in rows]
    if aggregate == "condition":
        cells: dict = defaultdict(list)
        for p, q, s, d, y in data:
            cells[(p, q, s, d)].append(y)
        data = [k + (float(np.mean(v)),) for k, v in cells.items()]
    elif aggregate != "sequence":
        raise ValueError("aggregate must be 'sequence' or 'condition'")
    return anova_blocked(data)


def anova_report_rows(table: AnovaTable, measure: str) -> tuple[list[str], list[list]]:
    """Rows shaped like a term-by-statistic table: df, F, p, eta-squared across terms."""
    header = ["measure", "value", *TREATMENT_TERMS, "df_error"]
    rows_by = [table[t] for t in TREATMENT_TERMS]
    df_e = table.error.df
    return header, [
        [measure, "df"] + [r.df for r in rows_by] + [df_e],
        [measure, "F"] + [round(r.F, 2) if math.isfinite(r.F) else "" for r in rows_by] + [df_e],
        [measure, "p"] + [format_p(r.p) for r in rows_by] + [df_e],
        [measure, "eta_squared"] + [("<0.001" if r.eta_squared < 0.001 else f"{r.eta_squared:.3f}")
                                    if math.isfinite(r.eta_squared) else "" for r in rows_by] + [df_e],
    ]

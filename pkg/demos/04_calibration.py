"""
Fitting the motor model to published condition means
====================================================

Calibrates the Raycasting model against the bundled per-condition targets
with a reduced trial budget, then prints the residual report. The shipped
parameters were produced the same way with the full budget
(``viewfinder calibrate``).
"""

from importlib.resources import files

from viewfinder.calibration import calibrate_technique, read_targets
from viewfinder.taskgen import TechniqueKind

targets = read_targets(files("viewfinder.data").joinpath("table3_targets.csv"))
params, residuals, objective, evals = calibrate_technique(
    TechniqueKind.Raycasting, targets, n_trials=5000, max_evals=300)

print(f"objective {objective:.4f} after {evals} evaluations")
print(f"aim sigma {params.aim_sigma_deg:.3f} deg + pinch kick {params.heisenberg_deg:.3f} deg, "
      f"MT = {params.fitts_a:.2f} + {params.fitts_b:.2f} ID + {params.precision_time:.2f} sigma/r")
print(f"\n{'size':6s} {'dist':6s} {'metric':11s} {'target':>8s} {'model':>8s}")
for r in residuals:
    print(f"{r['size']:6s} {r['distance']:6s} {r['metric']:11s} {r['target']:8.3f} {r['simulated']:8.3f}")

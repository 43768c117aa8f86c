"""
Effective width and throughput of one sequence
==============================================

Simulates one circle of 11 selections with the calibrated Raycasting model,
then computes the effective measures by hand and with the library to show
they agree.
"""

import math

import numpy as np

from viewfinder.metrics import EFFECTIVE_WIDTH_FACTOR, project_dx, sequence_summary
from viewfinder.motorsim import default_params, simulate_sequence
from viewfinder.taskgen import make_conditions

params = default_params()
cond = next(c for c in make_conditions() if c.label == "Raycasting/Small/Long")
trials = simulate_sequence(participant=0, condition=cond, params=params[cond.technique], seed=7)

for t in trials[:4]:
    d = np.linalg.norm(t.selection_point - t.target_center)
    print(f"trial {t.trial_idx}: target {t.target_index:2d}  miss distance {d * 100:5.2f} cm  MT {t.mt:.2f} s")

# Each selection is projected onto its task axis (previous selection to
# current target). The spread of those projections gives the effective width.
dx, de = zip(*(project_dx(t.from_point, t.target_center, t.selection_point) for t in trials))
w_e = EFFECTIVE_WIDTH_FACTOR * np.std(dx, ddof=1)
id_e = math.log2(np.mean(de) / w_e + 1)
print(f"\nby hand:  W_e = {w_e:.4f} m, ID_e = {id_e:.3f} bits, "
      f"TP = {id_e / np.mean([t.mt for t in trials]):.3f} bit/s")

s = sequence_summary(trials)
print(f"library:  W_e = {s.w_e:.4f} m, ID_e = {s.id_e:.3f} bits, TP = {s.throughput:.3f} bit/s")
print(f"nominal ID = {cond.id_nominal:.2f} bits, error rate = {s.error_rate:.1f} %")

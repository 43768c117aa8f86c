"""
A simulated 20-participant study
================================

Runs the full within-subject design (3 techniques x 2 sizes x 2 distances,
3 sequences of 11 selections each), summarises every sequence and runs the
participant-blocked ANOVA with post hoc grouping on throughput.
"""

from collections import defaultdict

import numpy as np

from viewfinder.io import summaries_by_sequence
from viewfinder.motorsim import default_params, simulate_experiment
from viewfinder.stats import anova_blocked, format_p, posthoc_groups

records = simulate_experiment(default_params(), seed=20220101)
print(f"{len(records)} selections simulated")

summaries = summaries_by_sequence(records)
by_tech = defaultdict(list)
for _, cond, s in summaries:
    by_tech[cond.technique.value].append((s.mt_mean, s.error_rate, s.throughput))
print(f"\n{'technique':16s} {'MT (s)':>8s} {'error %':>8s} {'TP (bit/s)':>11s}")
for tech, vals in by_tech.items():
    mt, err, tp = np.mean(vals, axis=0)
    print(f"{tech:16s} {mt:8.2f} {err:8.2f} {tp:11.2f}")

# One row per sequence; participants are a block, so Error df = 720 - 1 - 19 - 11.
rows = [(key[0], cond.technique.value, cond.size_class, cond.distance_class, s.throughput)
        for key, cond, s in summaries]
table = anova_blocked(rows)
print(f"\nthroughput ANOVA (error df {table.error.df})")
for r in table.rows[1:8]:
    print(f"  {r.term:10s} F({r.df},{table.error.df}) = {r.F:8.2f}  p = {format_p(r.p):>6s}  eta2 = {r.eta_squared:.3f}")

means = table.marginal_means(0)
letters = posthoc_groups(means, table.error.ms, table.error.df, n_per_cell=240)
print("\npost hoc groups:", {k: f"{means[k]:.2f} {v}" for k, v in letters.items()})

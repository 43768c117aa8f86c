import itertools
import math

import numpy as np
import pytest
import scipy.special
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from viewfinder.stats import (
    TREATMENT_TERMS, anova_blocked, betainc_regularized, f_p_value, format_p, posthoc_groups,
    t_two_sided_p,
)

TQ = ("Raycasting", "ViewfinderRay", "ViewfinderTouch")


def random_rows(rng, participants=20, reps=3, levels=(TQ, ("Large", "Small"), ("Short", "Long"))):
    rows = []
    for p in range(participants):
        bias = rng.normal()
        for q, s, d in itertools.product(*levels):
            effect = 0.5 * levels[0].index(q) + 0.3 * (s == "Small") * (1 + levels[0].index(q))
            for _ in range(reps):
                rows.append((p, q, s, d, bias + effect + rng.normal()))
    return rows


def brute_force_ss(rows):
    """Sum over observations of squared mean-decomposition effects."""
    y = np.array([r[4] for r in rows])
    g = y.mean()

    def mean_by(*idx):
        groups = {}
        for r in rows:
            groups.setdefault(tuple(r[i] for i in idx), []).append(r[4])
        return {k: np.mean(v) for k, v in groups.items()}

    m = {idx: mean_by(*idx) for idx in [(0,), (1,), (2,), (3,), (1, 2), (1, 3), (2, 3), (1, 2, 3)]}
    ss = dict.fromkeys(["Participant", *TREATMENT_TERMS], 0.0)
    for r in rows:
        a, b, c = m[(1,)][(r[1],)], m[(2,)][(r[2],)], m[(3,)][(r[3],)]
        ab, ac, bc = m[(1, 2)][(r[1], r[2])], m[(1, 3)][(r[1], r[3])], m[(2, 3)][(r[2], r[3])]
        abc = m[(1, 2, 3)][(r[1], r[2], r[3])]
        ss["Participant"] += (m[(0,)][(r[0],)] - g) ** 2
        ss["TQ"] += (a - g) ** 2
        ss["TS"] += (b - g) ** 2
        ss["TD"] += (c - g) ** 2
        ss["TQ×TS"] += (ab - a - b + g) ** 2
        ss["TQ×TD"] += (ac - a - c + g) ** 2
        ss["TS×TD"] += (bc - b - c + g) ** 2
        ss["TQ×TS×TD"] += (abc - ab - ac - bc + a + b + c - g) ** 2
    ss["Total"] = float(np.sum((y - g) ** 2))
    ss["Error"] = ss["Total"] - sum(v for k, v in ss.items() if k != "Total")
    return ss


class TestAnovaStructure:
    def test_sequence_level_dfs(self, rng):
        t = anova_blocked(random_rows(rng))
        expect = {"TQ": 2, "TS": 1, "TD": 1, "TQ×TS": 2, "TQ×TD": 2, "TS×TD": 1, "TQ×TS×TD": 2,
                  "Participant": 19, "Error": 689, "Total": 719}
        assert {k: t[k].df for k in expect} == expect

    def test_condition_level_error_df(self, rng):
        assert anova_blocked(random_rows(rng, reps=1)).error.df == 209

    def test_constant_response(self):
        rows = [(p, q, s, d, 3.0) for p in range(3) for q in TQ for s in "LS" for d in "AB"]
        t = anova_blocked(rows)
        for term in TREATMENT_TERMS:
            assert t[term].ss == 0.0 and math.isnan(t[term].F) and t[term].p == 1.0

    def test_unbalanced_rejected(self, rng):
        rows = random_rows(rng, participants=3)
        with pytest.raises(ValueError):
            anova_blocked(rows[:-1])

    def test_single_level_rejected(self, rng):
        rows = [r for r in random_rows(rng, participants=3) if r[2] == "Large"]
        with pytest.raises(ValueError):
            anova_blocked(rows)

    def test_cell_means(self, rng):
        rows = random_rows(rng, participants=4)
        t = anova_blocked(rows)
        key = ("ViewfinderRay", "Small", "Long")
        expect = np.mean([r[4] for r in rows if r[1:4] == key])
        assert t.cell_means[key] == pytest.approx(expect, abs=1e-12)
        assert t.n_per_cell == 12


class TestAnovaOracle:
    def test_tiny_design_matches_brute_force(self, rng):
        levels = (("a", "b"), ("s", "l"), ("n", "f"))
        rows = random_rows(rng, participants=2, reps=1, levels=levels)
        t = anova_blocked(rows)
        oracle = brute_force_ss(rows)
        for term, ss in oracle.items():
            assert t[term].ss == pytest.approx(ss, abs=1e-10)
            assert t[term].eta_squared == pytest.approx(ss / oracle["Total"], abs=1e-10)
        assert t.error.df == 16 - 1 - 1 - 7

    def test_replicated_design_matches_brute_force(self, rng):
        rows = random_rows(rng, participants=4, reps=3)
        t = anova_blocked(rows)
        for term, ss in brute_force_ss(rows).items():
            assert t[term].ss == pytest.approx(ss, rel=1e-10, abs=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_additivity(self, seed):
        rng = np.random.default_rng(seed)
        t = anova_blocked(random_rows(rng, participants=3, reps=2))
        parts = [t[k] for k in ("Participant", *TREATMENT_TERMS, "Error")]
        assert sum(r.ss for r in parts) == pytest.approx(t["Total"].ss, rel=1e-8)
        assert sum(r.df for r in parts) == t["Total"].df
        assert sum(r.eta_squared for r in parts) == pytest.approx(1.0, abs=1e-8)

    def test_row_order_irrelevant(self, rng):
        rows = random_rows(rng, participants=3)
        a = anova_blocked(rows)
        b = anova_blocked([rows[i] for i in rng.permutation(len(rows))])
        for ra, rb in zip(a.rows, b.rows):
            assert ra.term == rb.term
            assert ra.ss == pytest.approx(rb.ss, rel=1e-12, abs=1e-12)
            assert ra.p == pytest.approx(rb.p, rel=1e-9, abs=1e-15) or math.isnan(ra.p)

    def test_p_values_match_scipy(self, rng):
        t = anova_blocked(random_rows(rng))
        for term in TREATMENT_TERMS:
            r = t[term]
            assert r.p == pytest.approx(scipy.stats.f.sf(r.F, r.df, t.error.df), rel=1e-9, abs=1e-300)


class TestDistributions:
    def test_f_zero(self):
        assert f_p_value(0.0, 2, 689) == 1.0

    @pytest.mark.parametrize("df", [1, 2, 5, 30, 689])
    def test_f_unity_equal_df(self, df):
        assert f_p_value(1.0, df, df) == pytest.approx(0.5, abs=1e-12)

    def test_published_interaction(self):
        assert f_p_value(3.37, 2, 689) == pytest.approx(0.035, abs=0.0005)

    def test_head_movement_typo(self):
        # F = 23.13 at these dfs cannot give p = 0.035
        assert f_p_value(23.13, 2, 689) < 1e-9

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-3, 200), st.integers(1, 50), st.integers(1, 1000))
    def test_f_matches_scipy(self, F, df1, df2):
        assert f_p_value(F, df1, df2) == pytest.approx(scipy.stats.f.sf(F, df1, df2), rel=1e-8, abs=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.01, 500), st.floats(0.01, 500), st.floats(0.0, 1.0))
    def test_betainc_matches_scipy(self, a, b, x):
        assert betainc_regularized(a, b, x) == pytest.approx(scipy.special.betainc(a, b, x),
                                                             rel=1e-8, abs=1e-13)

    @given(st.floats(-20, 20), st.integers(1, 700))
    def test_t_matches_scipy(self, t, df):
        assert t_two_sided_p(t, df) == pytest.approx(2 * scipy.stats.t.sf(abs(t), df), rel=1e-8, abs=1e-14)

    def test_monotone_in_f(self):
        ps = [f_p_value(F, 2, 689) for F in np.linspace(0, 50, 200)]
        assert all(a > b for a, b in zip(ps, ps[1:]) if b > 0)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            f_p_value(-1.0, 2, 10)
        with pytest.raises(ValueError):
            betainc_regularized(1.0, 1.0, 1.5)


class TestPosthoc:
    def test_well_separated(self):
        letters = posthoc_groups({"x": 10.0, "y": 20.0, "z": 30.0}, 1.0, 100, 50)
        assert letters == {"z": "A", "y": "B", "x": "C"}

    def test_identical_means(self):
        letters = posthoc_groups({"x": 5.0, "y": 5.0}, 1.0, 100, 10)
        assert letters["x"] == letters["y"]

    def test_published_error_rates(self):
        means = dict(zip(TQ, (17.08, 9.30, 10.36)))
        # pooled error variance implied by the reported technique F (34.20 on 2 and 689 df)
        grand = np.mean(list(means.values()))
        ms_treat = 240 * sum((m - grand) ** 2 for m in means.values()) / 2
        ms_error = ms_treat / 34.20
        assert ms_error == pytest.approx(124.9, abs=0.1)
        letters = posthoc_groups(means, ms_error, 689, 240)
        assert letters["Raycasting"] == "A"
        assert letters["ViewfinderRay"] == letters["ViewfinderTouch"] == "B"

    def test_needs_two_levels(self):
        with pytest.raises(ValueError):
            posthoc_groups({"x": 1.0}, 1.0, 10, 5)

    def test_format_p(self):
        assert format_p(0.0004) == "<0.001"
        assert format_p(0.0351) == "0.035"
        assert format_p(float("nan")) == ""

"""Participant-blocked three-factor ANOVA with eta-squared, F/t tail
probabilities and Bonferroni post hoc grouping letters."""
from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

__all__ = [
    "betainc_regularized", "f_p_value", "t_two_sided_p",
    "AnovaRow", "AnovaTable", "anova_blocked", "posthoc_groups",
    "format_p", "TERMS", "TREATMENT_TERMS",
]

TREATMENT_TERMS = ("TQ", "TS", "TD", "TQ×TS", "TQ×TD", "TS×TD", "TQ×TS×TD")
TERMS = ("Participant",) + TREATMENT_TERMS + ("Error", "Total")

_EPS = 1e-16
_TINY = 1e-300


def _betacf(a: float, b: float, x: float, max_iter: int = 20000) -> float:
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def _betainc(a: float, b: float, x: float, y: float) -> float:
    """I_x(a, b) given both x and y = 1 - x, each computed without cancellation."""
    if x == 0.0:
        return 0.0
    if y == 0.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log(y))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, y) / b


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    return _betainc(a, b, x, 1.0 - x)


def f_p_value(F: float, df1: float, df2: float) -> float:
    """Upper-tail probability of the F distribution, P(X > F)."""
    if df1 < 1 or df2 < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if math.isnan(F) or F < 0:
        raise ValueError(f"F must be a non-negative number, got {F}")
    if F == 0.0:
        return 1.0
    if math.isinf(F):
        return 0.0
    # P(X > F) = I_{df2/(df2 + df1 F)}(df2/2, df1/2)
    denom = df2 + df1 * F
    return _betainc(df2 / 2.0, df1 / 2.0, df2 / denom, df1 * F / denom)


def t_two_sided_p(t: float, df: float) -> float:
    if df < 1:
        raise ValueError("df must be >= 1")
    if t == 0.0:
        return 1.0
    denom = df + t * t
    return _betainc(df / 2.0, 0.5, df / denom, t * t / denom)


@dataclass(frozen=True)
class AnovaRow:
    term: str
    ss: float
    df: int
    ms: float
    F: float
    p: float
    eta_squared: float


@dataclass(frozen=True)
class AnovaTable:
    rows: tuple[AnovaRow, ...]
    cell_means: dict
    n_per_cell: int

    def __getitem__(self, term: str) -> AnovaRow:
        for row in self.rows:
            if row.term == term:
                return row
        raise KeyError(term)

    @property
    def error(self) -> AnovaRow:
        return self["Error"]

    def marginal_means(self, factor: int) -> dict:
        """Means by level of factor 0 (TQ), 1 (TS) or 2 (TD)."""
        groups: dict = {}
        for key, m in self.cell_means.items():
            groups.setdefault(key[factor], []).append(m)
        return {k: float(np.mean(v)) for k, v in groups.items()}


def _levels(values) -> list:
    seen: dict = {}
    for v in values:
        seen.setdefault(v, None)
    return sorted(seen, key=repr)


def anova_blocked(rows: Iterable[tuple[Hashable, Hashable, Hashable, Hashable, float]]) -> AnovaTable:
    """Fixed-effects ANOVA on (participant, TQ, TS, TD, response) rows.

    Participants enter as a block with no participant x treatment terms, so
    Error df = N - 1 - (P - 1) - (cells - 1). The design must be balanced.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no data")
    facs = [_levels(r[i] for r in rows) for i in range(4)]
    shape = tuple(len(f) for f in facs)
    if any(s < 2 for s in shape):
        raise ValueError(f"every factor needs at least two levels, got {shape}")
    index = [{lv: i for i, lv in enumerate(f)} for f in facs]
    counts = np.zeros(shape, dtype=int)
    sums = np.zeros(shape)
    y_all = np.empty(len(rows))
    for k, r in enumerate(rows):
        ix = tuple(index[i][r[i]] for i in range(4))
        y = float(r[4])
        if not math.isfinite(y):
            raise ValueError(f"non-finite response in row {k}")
        counts[ix] += 1
        sums[ix] += y
        y_all[k] = y
    n = int(counts.flat[0])
    if n < 1 or np.any(counts != n):
        raise ValueError("unbalanced design: every participant x cell needs the same number of rows")

    N = len(rows)
    grand = y_all.mean()
    ss_total = float(np.sum((y_all - grand) ** 2))
    pc = sums / n                             # participant x cell means
    cell = pc.mean(axis=0)                    # (TQ, TS, TD)
    n_cell = n * shape[0]                     # observations per treatment cell

    # cell effects by inclusion-exclusion of marginal means
    m_q = cell.mean(axis=(1, 2), keepdims=True)
    m_s = cell.mean(axis=(0, 2), keepdims=True)
    m_d = cell.mean(axis=(0, 1), keepdims=True)
    m_qs = cell.mean(axis=2, keepdims=True)
    m_qd = cell.mean(axis=1, keepdims=True)
    m_sd = cell.mean(axis=0, keepdims=True)
    effects = {
        "TQ": m_q - grand,
        "TS": m_s - grand,
        "TD": m_d - grand,
        "TQ×TS": m_qs - m_q - m_s + grand,
        "TQ×TD": m_qd - m_q - m_d + grand,
        "TS×TD": m_sd - m_s - m_d + grand,
        "TQ×TS×TD": cell - m_qs - m_qd - m_sd + m_q + m_s + m_d - grand,
    }
    _, a, b, c = shape
    dfs = {"TQ": a - 1, "TS": b - 1, "TD": c - 1,
           "TQ×TS": (a - 1) * (b - 1), "TQ×TD": (a - 1) * (c - 1), "TS×TD": (b - 1) * (c - 1),
           "TQ×TS×TD": (a - 1) * (b - 1) * (c - 1)}
    ss = {t: float(n_cell * np.sum(np.broadcast_to(e, cell.shape) ** 2)) for t, e in effects.items()}
    part_means = pc.mean(axis=(1, 2, 3))
    ss["Participant"] = float(n * a * b * c * np.sum((part_means - grand) ** 2))
    dfs["Participant"] = shape[0] - 1
    ss_err = ss_total - sum(ss.values())
    df_err = N - 1 - sum(dfs.values())
    if df_err < 1:
        raise ValueError("no degrees of freedom left for error")
    ss_err = max(ss_err, 0.0)
    ms_err = ss_err / df_err

    out = []
    for term in ("Participant",) + TREATMENT_TERMS:
        ms = ss[term] / dfs[term]
        if ms_err > 0:
            F = ms / ms_err
            p = f_p_value(F, dfs[term], df_err)
        else:
            F, p = math.nan, 1.0
        eta = ss[term] / ss_total if ss_total > 0 else math.nan
        out.append(AnovaRow(term, ss[term], dfs[term], ms, F, p, eta))
    out.append(AnovaRow("Error", ss_err, df_err, ms_err, math.nan, math.nan,
                        ss_err / ss_total if ss_total > 0 else math.nan))
    out.append(AnovaRow("Total", ss_total, N - 1, ss_total / (N - 1), math.nan, math.nan,
                        1.0 if ss_total > 0 else math.nan))
    means = {(facs[1][i], facs[2][j], facs[3][k]): float(cell[i, j, k])
             for i, j, k in itertools.product(range(a), range(b), range(c))}
    return AnovaTable(tuple(out), means, n_cell)


def posthoc_groups(cell_means: dict, ms_error: float, df_error: int, n_per_cell,
                   alpha: float = 0.05) -> dict:
    """Grouping letters from Bonferroni-adjusted pairwise t tests on pooled error.

    Levels joined by a chain of non-significant differences share a letter;
    letters are handed out from the highest mean down. ``n_per_cell`` is an int
    or a mapping from level to its observation count.
    """
    levels = list(cell_means)
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    n_of = (lambda k: n_per_cell[k]) if isinstance(n_per_cell, dict) else (lambda k: n_per_cell)
    pairs = list(itertools.combinations(levels, 2))
    alpha_adj = alpha / len(pairs)
    adj = {k: set() for k in levels}
    for i, j in pairs:
        se = math.sqrt(ms_error * (1.0 / n_of(i) + 1.0 / n_of(j)))
        diff = abs(cell_means[i] - cell_means[j])
        if se == 0.0:
            significant = diff > 0.0
        else:
            significant = t_two_sided_p(diff / se, df_error) < alpha_adj
        if not significant:
            adj[i].add(j)
            adj[j].add(i)

    order = sorted(levels, key=lambda k: -cell_means[k])
    letters: dict = {}
    next_letter = iter(string.ascii_uppercase)
    for start in order:
        if start in letters:
            continue
        letter = next(next_letter)
        stack = [start]
        while stack:
            k = stack.pop()
            if k in letters:
                continue
            letters[k] = letter
            stack.extend(adj[k] - letters.keys())
    return letters


def format_p(p: float) -> str:
    if math.isnan(p):
        return ""
    return "<0.001" if p < 0.001 else f"{p:.3f}"

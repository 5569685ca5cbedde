"""Doubling diagnostics for the classes D-hat and D-check, and dyadic radii.

Class membership is asymptotic and cannot be decided on a finite grid; the
reports here classify the trend of the relevant ratios as the grid approaches
r = 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, RangeError
from .grids import GradedGrid, dyadic_band

GROW = 1.05
SHRINK = 0.95


@dataclass
class DoublingReport:
    class_tag: str  # "Dhat" or "Dcheck"
    sup_estimate: float
    argmax_radius: float
    trend: str  # stable | growing | inconclusive
    verdict: str  # member | fail | inconclusive
    grid_meta: dict
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "class_tag": self.class_tag,
            "sup_estimate": self.sup_estimate,
            "argmax_radius": self.argmax_radius,
            "trend": self.trend,
            "verdict": self.verdict,
            "grid": self.grid_meta,
            "details": self.details,
        }


def _log_ratio(w, t, k):
    """``log(w.tail_c(t) / w.tail_c(t / k))`` with infinities for underflow."""
    a = w.log_tail_c(t)
    b = w.log_tail_c(t / k)
    with np.errstate(invalid="ignore"):
        out = a - b
    return np.where(np.isneginf(b) & np.isfinite(a), np.inf, out)


def dhat_profile(w, grid=None):
    """Upper doubling ratio ``w.tail(r) / w.tail((1 + r) / 2)`` along a graded grid.

    The trend compares the largest ratio on the last dyadic band
    ``t in [eps, 2 eps]`` with the band before it.
    """
    grid = grid or GradedGrid()
    t = grid.t
    with np.errstate(over="ignore"):
        ratio = np.exp(_log_ratio(w, t, 2.0))
    finite = np.isfinite(ratio)
    eps = grid.t_min
    last = ratio[dyadic_band(t, eps)]
    prev = ratio[dyadic_band(t, 2 * eps)]
    details = {"underflow": bool(not finite.all())}
    if not finite.all():
        trend = "growing"
        idx = int(np.flatnonzero(finite)[-1]) if finite.any() else 0
        sup, arg = math.inf, float(grid.radii[idx])
        details["last_finite_ratio"] = float(ratio[idx]) if finite.any() else None
    else:
        idx = int(np.argmax(ratio))
        sup, arg = float(ratio[idx]), float(grid.radii[idx])
        q = last.max() / prev.max()
        details["band_ratio"] = float(q)
        # log-scale growth also counts: ratios like exp(c / t) explode across bands
        if q > GROW:
            trend = "growing"
        elif q > SHRINK:
            trend = "stable"
        else:
            trend = "inconclusive"
    verdict = {"stable": "member", "growing": "fail"}.get(trend, "inconclusive")
    return DoublingReport("Dhat", sup, arg, trend, verdict, grid.meta(), details)


def dcheck_search(w, K_candidates=(2.0, 4.0, 8.0), grid=None):
    """Lower doubling constants ``C(K) = inf w.tail(r) / w.tail(1 - (1 - r) / K)``.

    ``C(K)`` is taken over each refinement level of the grid.  Membership is
    declared when some ``C(K)`` exceeds 1 with a 5% margin on every level and
    its excess over 1 does not shrink; failure when the excess shrinks by more
    than 5% per level for every K (``C(K) -> 1``).
    """
    grid = grid or GradedGrid()
    ks = [float(k) for k in K_candidates]
    if not ks or any(not k > 1 for k in ks):
        raise ParameterError("every K must exceed 1")
    t = grid.t
    per_k = {}
    member = fail = False
    shrinking_all = True
    best, best_arg = -math.inf, 0.0
    trends = []
    for k in ks:
        with np.errstate(over="ignore"):
            c = np.exp(_log_ratio(w, t, k))
        hist = []
        for lev in range(grid.levels):
            cut = grid.level_cut(lev)
            hist.append(float(np.min(c[:cut])))
        idx = int(np.argmin(c))
        cmin = float(c[idx])
        excess = np.array(hist) - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            steps = excess[1:] / excess[:-1]
        if np.all(np.isinf(excess)):
            steps = np.ones(len(hist) - 1)
        shrinking = bool(len(steps) and np.all(steps < SHRINK))
        growing = bool(len(steps) and np.all(steps > GROW))
        shrinking_all &= shrinking
        if min(hist) > GROW and not shrinking:
            member = True
        trends.append("growing" if growing else "stable" if not shrinking else "inconclusive")
        per_k[repr(k)] = {"C": cmin, "history": hist, "argmin_radius": float(grid.radii[idx])}
        if cmin > best:
            best, best_arg = cmin, float(grid.radii[idx])
    if shrinking_all:
        fail = True
    verdict = "member" if member else "fail" if fail else "inconclusive"
    trend = "growing" if "growing" in trends else "stable" if "stable" in trends else "inconclusive"
    return DoublingReport("Dcheck", best, best_arg, trend, verdict, grid.meta(), {"K": per_k})


# -- dyadic radii -------------------------------------------------------------

def inverse_tail1_c(w, log_target, rel_tol=1e-15, max_iter=200):
    """Complements ``t`` with ``log w.tail1_c(t) = log_target`` by bisection in ``log t``.

    Targets below ``w.tail1_c(1e-300)`` return NaN.
    """
    lt = np.atleast_1d(np.asarray(log_target, dtype=float))
    lo = np.full(lt.shape, math.log(1e-300))
    hi = np.zeros(lt.shape)
    reach = w.log_tail1_c(np.exp(lo))
    top = w.log_tail1_c(np.ones(1))[0]
    bad = lt < reach
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        up = w.log_tail1_c(np.exp(mid)) < lt
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
        if np.all(hi - lo <= rel_tol):
            break
    t = np.exp(hi)
    t = np.where(lt >= top, 1.0, t)
    return np.where(bad, np.nan, t)


@dataclass
class DyadicDecomposition:
    n: np.ndarray
    t: np.ndarray  # complements 1 - rho_n
    M: list
    blocks: list  # (n, lo, hi) with I(n) = [lo, hi)
    empty_blocks: list
    truncated: bool

    @property
    def rho(self):
        return 1.0 - self.t

    @property
    def top(self):
        return self.blocks[-1][2] if self.blocks else 0

    def to_dict(self):
        return {
            "rho": [float(x) for x in self.rho], "t": [float(x) for x in self.t],
            "M": list(self.M), "blocks": [list(b) for b in self.blocks],
            "empty_blocks": list(self.empty_blocks), "truncated": self.truncated,
        }


def _floor_recip(t, rel=4e-14):
    """``floor(1 / t)``; a value within bisection rounding above an integer,
    but not exactly integral, resolves to the smaller integer."""
    x = 1.0 / t
    m = math.floor(x)
    if x != m and m >= 1 and (x - m) <= rel * x:
        return m - 1
    return int(m)


def rho_sequence(w, n_max):
    """Radii with ``w.tail1(rho_n) = 2**-n * w.tail1(0)`` for ``n = 0..n_max``.

    ``M_n = floor(1 / (1 - rho_n))`` and the blocks are ``I(0) = [0, M_1)``,
    ``I(n) = [M_n, M_{n+1})``.  Levels below the representable range of the
    tail are dropped with a warning.
    """
    n_max = int(n_max)
    if n_max < 1:
        raise ParameterError("n_max must be >= 1")
    n = np.arange(n_max + 1)
    log0 = float(w.log_tail1_c(np.ones(1))[0])
    t = inverse_tail1_c(w, log0 - n * math.log(2.0))
    t[0] = 1.0
    ok = np.isfinite(t)
    truncated = not ok.all()
    if truncated:
        last = int(np.flatnonzero(~ok)[0])
        warnings.warn(f"dyadic radii truncated at n={last - 1}: tail below representable range")
        n, t = n[:last], t[:last]
    M = [_floor_recip(x) for x in t]
    blocks, empty = [], []
    for i in range(len(M) - 1):
        lo = 0 if i == 0 else M[i]
        hi = M[i + 1]
        if hi <= lo:
            empty.append(int(i))
            continue
        blocks.append((int(i), int(lo), int(hi)))
    return DyadicDecomposition(n, t, M, blocks, empty, truncated)


def block_of_index(d, k):
    """Index ``n`` of the block ``I(n)`` containing ``k``."""
    k = int(k)
    if k < 0 or k >= d.top:
        raise RangeError(f"index {k} outside computed block range [0, {d.top})")
    los = np.array([b[1] for b in d.blocks])
    j = int(np.searchsorted(los, k, side="right") - 1)
    return d.blocks[j][0]

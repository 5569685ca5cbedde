"""Condition profiles r -> A_p(omega, nu)(r) and r -> M_p(omega, nu)(r).

Both profiles are evaluated in log-space on a common graded grid.  The sup
over [0, 1) is replaced by the sup over nested refinement levels, and the
growth of that sup from level to level drives the diagnosis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import GradedGrid
from .quadrature import integrate_panels
from .weights import as_pair, power, product, sigma_weight

DIVERGE_STEP = 1.05
BOUNDED_STEP = 1.01


@dataclass
class ConstantProfile:
    name: str
    radii: np.ndarray
    t: np.ndarray
    values: np.ndarray
    sup_estimate: float
    argmax: float
    diagnosis: str
    refinement_history: list
    grid_meta: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self, with_values=True):
        out = {
            "name": self.name,
            "sup_estimate": self.sup_estimate,
            "argmax": self.argmax,
            "diagnosis": self.diagnosis,
            "refinement_history": list(self.refinement_history),
            "grid": self.grid_meta,
            "notes": list(self.notes),
        }
        if with_values:
            out["radii"] = [float(x) for x in self.radii]
            out["values"] = [float(x) for x in self.values]
        return out


def diagnose(history):
    """bounded / diverging / inconclusive from sup estimates per refinement level."""
    h = np.asarray(history, dtype=float)
    if np.any(np.isinf(h)):
        return "diverging"
    if h.size < 2:
        return "inconclusive"
    steps = h[1:] / h[:-1]
    if h.size >= 3 and np.all(steps[-2:] > DIVERGE_STEP):
        return "diverging"
    if steps[-1] < BOUNDED_STEP:
        return "bounded"
    return "inconclusive"


def _assemble(name, grid, values, notes):
    finite = np.isfinite(values)
    hist = []
    for lev in range(grid.levels):
        cut = grid.level_cut(lev)
        v = values[:cut]
        hist.append(float(np.max(v)))
    if finite.all():
        idx = int(np.argmax(values))
        sup = float(values[idx])
    else:
        idx = int(np.flatnonzero(~finite)[0])
        sup = math.inf
    return ConstantProfile(name, grid.radii, grid.t, values, sup, float(grid.radii[idx]),
                           diagnose(hist), hist, grid.meta(), notes)


def _sigma(omega, nu, pair, simplify):
    s = sigma_weight(omega, nu, pair, simplify=simplify)
    return s


def ap_log_values(omega, nu, p, t, simplify=True):
    """``log A_p(r)`` at complements ``t``; ``+inf`` where the sigma tail diverges."""
    pair = as_pair(p)
    sigma = _sigma(omega, nu, pair, simplify)
    ls = sigma.log_tail1_c(t)
    ln = nu.log_tail1_c(t)
    lw = omega.log_tail1_c(t)
    with np.errstate(invalid="ignore"):
        out = ln / pair.p + ls / pair.p_conj - lw
    return np.where(np.isposinf(ls), np.inf, out)


def ap_profile(omega, nu, p, grid=None, simplify=True):
    """``A_p(r) = nu.tail1(r)**(1/p) * sigma.tail1(r)**(1/p') / omega.tail1(r)``."""
    grid = grid or GradedGrid()
    with np.errstate(over="ignore"):
        vals = np.exp(ap_log_values(omega, nu, p, grid.t, simplify))
    notes = ["sigma is set to 0 where omega and nu both vanish",
             "the grid includes r = 0"]
    return _assemble("A_p", grid, vals, notes)


def mp_inner_log(omega, nu, p, t, rtol=1e-12):
    """``log int_0^r nu_1(s) / omega.tail1(s)**p ds`` at descending complements ``t``.

    One panel per grid interval, integrated after factoring out the integrand's
    value at the panel end closest to r = 1, then accumulated with logaddexp.
    """
    pair = as_pair(p)
    t = np.asarray(t, dtype=float)
    if t.size and t[0] != 1.0:
        t = np.concatenate([[1.0], t])
        drop = True
    else:
        drop = False
    a, b = t[1:], t[:-1]  # panel [a, b] in the complement, a < b

    def log_g(u):
        with np.errstate(divide="ignore"):
            return np.log1p(-u) + nu.log_density_c(u) - pair.p * omega.log_tail1_c(u)

    shift = log_g(a)

    def g(u, sh):
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.exp(log_g(u) - sh)
        return np.nan_to_num(v, nan=0.0)

    vals, _ = integrate_panels(g, a, b, params=(shift,), rtol=rtol)
    with np.errstate(divide="ignore"):
        logs = np.log(vals) + shift
    cum = np.concatenate([[-np.inf], np.logaddexp.accumulate(logs)])
    return cum[1:] if drop else cum


def mp_profile(omega, nu, p, grid=None, simplify=True):
    """``M_p(r) = (int_0^r nu_1 / omega.tail1**p + 1)**(1/p) * sigma.tail1(r)**(1/p')``."""
    grid = grid or GradedGrid()
    pair = as_pair(p)
    t = grid.t
    inner = mp_inner_log(omega, nu, pair, t)
    sigma = _sigma(omega, nu, pair, simplify)
    ls = sigma.log_tail1_c(t)
    with np.errstate(invalid="ignore", over="ignore"):
        logv = np.logaddexp(inner, 0.0) / pair.p + ls / pair.p_conj
        vals = np.exp(logv)
    vals = np.where(np.isposinf(ls), np.inf, vals)
    notes = ["the inner integral is accumulated panel by panel in log-space",
             "the grid includes r = 0, where the inner integral vanishes"]
    return _assemble("M_p", grid, vals, notes)


def dual_pair(omega, factor, p, simplify=True):
    """``(omega * factor, omega * factor**(-p'/p))`` for the duality check."""
    pair = as_pair(p)
    nu = product(omega, factor, simplify=simplify)
    nu_dual = product(omega, power(factor, -pair.p_conj / pair.p, simplify=simplify), simplify=simplify)
    return nu, nu_dual


def ap_duality_check(omega, nu_factor, p, grid=None, simplify=False):
    """Pointwise ratio ``A_p(omega, omega f)(r) / A_p'(omega, omega f**(-p'/p))(r)``.

    ``nu_factor`` is the weight ``f``.  With ``simplify=False`` both sides are
    computed by independent quadrature.  Where both sides are infinite the
    ratio is reported as 1.
    """
    grid = grid or GradedGrid()
    pair = as_pair(p)
    nu, nu_dual = dual_pair(omega, nu_factor, pair, simplify)
    la = ap_log_values(omega, nu, pair, grid.t, simplify)
    lb = ap_log_values(omega, nu_dual, pair.conjugate(), grid.t, simplify)
    both = np.isposinf(la) & np.isposinf(lb)
    with np.errstate(invalid="ignore", over="ignore"):
        q = np.exp(la - lb)
    return grid.radii, np.where(both, 1.0, q)

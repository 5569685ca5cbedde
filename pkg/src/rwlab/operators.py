"""Radial operators H, H*, the Stieltjes transform S and the maximal function M.

All four act on a :class:`Profile` per ray.  Integrals are taken by product
integration in the variable ``u = w.tail1(r)``: with ``omega_1(s) ds = -du``,

    H f(r)  = (1/u(r)) int_0^{u(r)} f du
    H* f(r) = int_{u(r)}^{u(0)} f / u du
    S f(r)  = int_0^{u(0)} f / (u + u(r)) du

The profile is reconstructed as piecewise linear in ``u`` between nodes and as
``f_n (t / t_n)**theta`` beyond the last node, and every cell integral of
that reconstruction is exact.  Consequently the pointwise chains
``M f <= 2 S f`` and ``(H f + H* f) / 2 <= S f <= H f + H* f`` hold up to
rounding for every nonnegative profile.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from . import _backend
from .classes import inverse_tail1_c
from .errors import DegeneracyError, ParameterError
from .grids import operator_grid


class Profile:
    """Samples of a radial function on nodes ``r_i = 1 - t_i``.

    ``tail_exponent`` describes the behaviour beyond the last node:
    ``f(r) ~ f_n ((1 - r) / t_n)**tail_exponent``.
    """

    def __init__(self, radii=None, values=None, tail_exponent=0.0, t=None):
        if t is None:
            if radii is None:
                raise ParameterError("profile needs radii or complements")
            t = 1.0 - np.asarray(radii, dtype=float)
        t = np.asarray(t, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or v.shape[:1] != t.shape:
            raise ParameterError("profile radii and values must have matching length")
        if np.any(t <= 0) or np.any(t > 1) or np.any(np.diff(t) >= 0):
            raise ParameterError("profile radii must increase strictly within [0, 1)")
        self.t = t
        self.values = v
        self.tail_exponent = float(tail_exponent)

    @property
    def radii(self):
        return 1.0 - self.t

    def __len__(self):
        return self.t.size

    @classmethod
    def from_function(cls, func, t=None, complement=False):
        """Sample ``func(r)`` (or ``func(t)`` with ``complement=True``) on the nodes.

        The tail exponent is estimated from the values at ``t_n`` and ``t_n / 2``.
        """
        t = operator_grid() if t is None else np.asarray(t, dtype=float)
        ev = (lambda x: func(x)) if complement else (lambda x: func(1.0 - x))
        v = np.asarray(ev(t), dtype=float) * np.ones(t.shape)
        a = float(np.asarray(ev(np.array([t[-1]]))).ravel()[0])
        b = float(np.asarray(ev(np.array([t[-1] / 2]))).ravel()[0])
        theta = 0.0
        if a > 0 and b > 0:
            theta = math.log(a / b) / math.log(2.0)
        return cls(values=v, t=t, tail_exponent=theta)

    def __call__(self, r):
        """Linear interpolation in ``r``; power-law continuation beyond the last node."""
        r = np.asarray(r, dtype=float)
        inside = np.interp(r, self.radii, self.values)
        tt = 1.0 - r
        with np.errstate(divide="ignore", invalid="ignore"):
            beyond = self.values[-1] * (tt / self.t[-1]) ** self.tail_exponent
        return np.where(tt < self.t[-1], beyond, inside)

    def with_values(self, values, tail_exponent=None):
        te = self.tail_exponent if tail_exponent is None else tail_exponent
        return Profile(values=values, t=self.t, tail_exponent=te)

    def to_dict(self):
        return {"radii": [float(x) for x in self.radii],
                "values": [float(x) for x in self.values],
                "tail_exponent": self.tail_exponent}


class PolynomialProfile:
    """``g(s) = sum_j c_j s**j``; used for mode projections."""

    def __init__(self, coeffs):
        self.coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))

    def __call__(self, r):
        return np.polynomial.polynomial.polyval(np.asarray(r, dtype=float), self.coeffs)


def parse_profile(text, base_dir=None):
    """Profile-spec: ``const:<v>``, ``poly:<c0,c1,...>``, ``table:<path.csv>``."""
    from pathlib import Path

    from .weights import read_table

    if ":" not in text:
        raise ParameterError(f"profile spec {text!r} lacks a kind prefix")
    kind, body = text.split(":", 1)
    try:
        if kind == "const":
            return PolynomialProfile([float(body)])
        if kind == "poly":
            return PolynomialProfile([float(x) for x in body.split(",") if x.strip()])
    except ValueError:
        raise ParameterError(f"bad number in profile spec {text!r}") from None
    if kind == "table":
        path = Path(body)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        r, v = read_table(path)
        return Profile(radii=r, values=v)
    raise ParameterError(f"unknown profile kind {kind!r}")


# -- discretization ---------------------------------------------------------------

@dataclass
class Nodes:
    """Operator nodes: complements ``t``, tail values ``u = w.tail1`` and the
    local log-slope ``kappa`` of ``u`` against ``t`` beyond the last node."""

    t: np.ndarray
    u: np.ndarray
    kappa: float
    dropped: int = 0

    @property
    def radii(self):
        return 1.0 - self.t


def make_nodes(w, t):
    t = np.asarray(t, dtype=float)
    u = w.tail1_c(t)
    keep = u > 0
    dropped = int(t.size - keep.sum())
    if dropped:
        warnings.warn(f"dropping {dropped} nodes where the tail underflows")
        t, u = t[keep], u[keep]
    lu = w.log_tail1_c(np.array([t[-1], t[-1] / 2]))
    kappa = float((lu[0] - lu[1]) / math.log(2.0))
    if not (kappa > 0 and math.isfinite(kappa)):
        kappa = 1.0
    return Nodes(t, u, kappa, dropped)


def _align(w, f):
    nodes = make_nodes(w, f.t)
    vals = f.values[: nodes.t.size] if nodes.dropped else f.values
    return nodes, vals


def _theta_u(f, nodes):
    th = f.tail_exponent / nodes.kappa
    if not th > -1:
        raise ParameterError("profile tail is not integrable against the weight")
    return th


def _cumulative(u, f, theta):
    """``F_i = int_0^{u_i} f du`` (last axis over nodes for 1-d ``f``)."""
    cells = (u[:-1] - u[1:]) * (f[:-1] + f[1:]) / 2.0
    tail = u[-1] * f[-1] / (1.0 + theta)
    suf = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
    return suf + tail


def _stieltjes_tail(u, theta):
    """``int_0^{u_n} (u / u_n)**theta / (u + u_i) du`` for every node ``i``."""
    z = u[-1] / u
    if theta == 0.0:
        return np.log1p(z)
    return z / (theta + 1.0) * special.hyp2f1(1.0, theta + 1.0, theta + 2.0, -z)


def apply_H(w, f):
    nodes, v = _align(w, f)
    th = _theta_u(f, nodes)
    F = _cumulative(nodes.u, v, th)
    return Profile(values=F / nodes.u, t=nodes.t, tail_exponent=f.tail_exponent)


def apply_Hstar(w, f):
    nodes, v = _align(w, f)
    u = nodes.u
    wa, wb = _backend.cell_weights(u[1:], u[:-1], np.zeros(u.size - 1))
    cells = wb * v[:-1] + wa * v[1:]
    out = np.concatenate([[0.0], np.cumsum(cells)])
    return Profile(values=out, t=nodes.t, tail_exponent=0.0)


def apply_S(w, f):
    nodes, v = _align(w, f)
    th = _theta_u(f, nodes)
    tail = _stieltjes_tail(nodes.u, th)
    out = _backend.stieltjes_apply(nodes.u, v, tail)
    return Profile(values=out, t=nodes.t, tail_exponent=0.0)


def apply_calderon(w, f):
    h = apply_H(w, f)
    hs = apply_Hstar(w, f)
    return Profile(values=h.values + hs.values, t=h.t, tail_exponent=0.0)


def apply_Mmax(w, f):
    """Running maximum over ``b <= r`` of ``int_b^1 |f| omega_1 / w.tail1(b)``."""
    g = f.with_values(np.abs(f.values))
    h = apply_H(w, g)
    return Profile(values=np.maximum.accumulate(h.values), t=h.t, tail_exponent=h.tail_exponent)


OPERATORS = {
    "h": apply_H,
    "hstar": apply_Hstar,
    "stieltjes": apply_S,
    "maximal": apply_Mmax,
    "calderon": apply_calderon,
}


def operator_matrix(op, w, t):
    """Matrix of a linear operator on node values; the tail is taken constant."""
    nodes = make_nodes(w, t)
    u = nodes.u
    n = u.size
    if op == "h":
        du = u[:-1] - u[1:]
        m = np.zeros((n, n))
        # F_i = sum_{j >= i} du_j (f_j + f_{j+1}) / 2 + u_n f_n
        for i in range(n - 1):
            m[i, i:-1] += du[i:] / 2
            m[i, i + 1:] += du[i:] / 2
        m[:, -1] += u[-1]
        return nodes, m / u[:, None]
    if op == "hstar":
        wa, wb = _backend.cell_weights(u[1:], u[:-1], np.zeros(n - 1))
        m = np.zeros((n, n))
        for i in range(1, n):
            m[i, : i] += wb[:i]
            m[i, 1: i + 1] += wa[:i]
        return nodes, m
    if op == "stieltjes":
        return nodes, _backend.stieltjes_matrix(u, np.log1p(u[-1] / u))
    if op == "calderon":
        _, a = operator_matrix("h", w, t)
        _, b = operator_matrix("hstar", w, t)
        return nodes, a + b
    raise ParameterError(f"no matrix for operator {op!r}")


def chain_violations(w, f):
    """Largest violations of ``M f <= 2 S f`` and ``(H f + H* f) / 2 <= S f <= H f + H* f``,
    each divided by ``max(1, max |S f|)``.  Nonpositive means the chain holds."""
    h = apply_H(w, f).values
    hs = apply_Hstar(w, f).values
    s = apply_S(w, f).values
    m = np.maximum.accumulate(apply_H(w, f.with_values(np.abs(f.values))).values)
    scale = max(1.0, float(np.max(np.abs(s))))
    return {
        "maximal_stieltjes": float(np.max(m - 2.0 * s)) / scale,
        "calderon_lower": float(np.max((h + hs) / 2.0 - s)) / scale,
        "calderon_upper": float(np.max(s - h - hs)) / scale,
        # informational: the stronger 2 S <= H + H* is not claimed and can fail
        "double_stieltjes_excess": float(np.max(2.0 * s - h - hs)) / scale,
    }


# -- norms --------------------------------------------------------------------------

def norm_weights(nu, t):
    """Weights ``d`` with ``||f||_p**p ~ sum d_i |f_i|**p`` for a constant tail."""
    v = nu.tail1_c(np.asarray(t, dtype=float))
    dv = v[:-1] - v[1:]
    d = np.zeros(v.size)
    d[:-1] += dv / 2
    d[1:] += dv / 2
    d[-1] += v[-1]
    return 2.0 * d


def lp_norm(nu, f, p):
    """``(2 int_0^1 |f(s)|**p s nu(s) ds)**(1/p)``, trapezoid in ``v = nu.tail1``."""
    p = float(p)
    if not p >= 1:
        raise ParameterError("p must be >= 1")
    nodes = make_nodes(nu, f.t)
    v = nodes.u
    g = np.abs(f.values[: v.size]) ** p
    th = p * f.tail_exponent / nodes.kappa
    if not th > -1:
        return math.inf
    total = np.sum((v[:-1] - v[1:]) * (g[:-1] + g[1:]) / 2.0) + v[-1] * g[-1] / (1.0 + th)
    return float((2.0 * total) ** (1.0 / p))


# -- level points and weak type ------------------------------------------------------

def _ratio_parts(w, f):
    nodes, v = _align(w, f)
    if np.any(v < 0):
        raise ParameterError("profile must be nonnegative")
    th = _theta_u(f, nodes)
    F = _cumulative(nodes.u, v, th)
    return nodes, v, th, F


def _cell_F(U, j, u, v, F):
    """``int_0^U f du`` for ``U`` in the cell [u_{j+1}, u_j]."""
    a, b = u[j + 1], u[j]
    fa, fb = v[j + 1], v[j]
    fU = fa + (fb - fa) * (U - a) / (b - a)
    return F[j + 1] + (U - a) * (fa + fU) / 2.0


def _crossing(lam, nodes, v, th, F):
    """Largest ``U`` with ``F(U) / U = lam`` scanning from r = 0, or None."""
    u = nodes.u
    R = F / u
    above = np.flatnonzero(R > lam)
    if above.size:
        j = int(above[0])
        if j == 0:
            return u[0]
        g = lambda U: _cell_F(U, j - 1, u, v, F) - lam * U
        return optimize.brentq(g, u[j], u[j - 1], xtol=1e-300, rtol=1e-15, maxiter=200)
    fn = v[-1]
    if th < 0 and fn > 0:
        # R(U) = fn (U / u_n)**th / (1 + th) on the tail cell
        with np.errstate(over="ignore", under="ignore"):
            U = u[-1] * (lam * (1.0 + th) / fn) ** (1.0 / th)
        # levels whose crossing underflows are treated as unattained
        return U if 0.0 < U < u[-1] else None
    return None


@dataclass
class LevelPoints:
    k_range: tuple
    b: dict
    u: dict
    bk1: dict = field(default_factory=dict)
    bk2: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)

    def to_dict(self):
        return {"k_range": list(self.k_range),
                "b": {str(k): v for k, v in self.b.items()},
                "tail1_at_b": {str(k): v for k, v in self.u.items()},
                "bk1_ratio": {str(k): v for k, v in self.bk1.items()},
                "bk2_factor": {str(k): v for k, v in self.bk2.items()},
                "skipped": self.skipped}


def _radius_of_u(w, U):
    t = inverse_tail1_c(w, np.log(np.atleast_1d(U)))
    return 1.0 - t


def level_points(w, f, k_min, k_max):
    """Points with ``int_{b_k}^1 f omega_1 / w.tail1(b_k) = 2**k``.

    The ratio must increase strictly along the grid.  Levels that are not
    attained (below the ratio at r = 0 or above its supremum) are skipped and
    the reported ``k_range`` is the attained range.
    """
    nodes, v, th, F = _ratio_parts(w, f)
    R = F / nodes.u
    flat = np.flatnonzero(np.diff(R) <= 1e-12 * np.abs(R[:-1]))
    if flat.size:
        i = int(flat[0])
        raise DegeneracyError(
            f"tail ratio is not strictly increasing on [{nodes.radii[i]:.6g}, {nodes.radii[i + 1]:.6g}]")
    bs, us, skipped = {}, {}, []
    for k in range(int(k_min), int(k_max) + 1):
        lam = 2.0 ** k
        if lam <= R[0]:
            skipped.append(k)
            continue
        U = _crossing(lam, nodes, v, th, F)
        if U is None:
            skipped.append(k)
            continue
        us[k] = float(U)
    if us:
        ks = sorted(us)
        rad = _radius_of_u(w, np.array([us[k] for k in ks]))
        bs = {k: float(r) for k, r in zip(ks, rad)}
    ks = sorted(us)
    bk1 = {k: us[k + 1] / us[k] for k in ks if k + 1 in us}
    bk2 = {k: us[k] / (us[k] - us[k + 1]) for k in ks if k + 1 in us}
    rng = (ks[0], ks[-1]) if ks else (None, None)
    return LevelPoints(rng, bs, us, bk1, bk2, skipped)


@dataclass
class WeakTypeResult:
    b: float | None
    level_measure: float
    bound: float

    @property
    def holds(self):
        return self.level_measure <= self.bound * (1 + 1e-9)


def weak_type_check(eta_base, f, lam):
    """Level set ``{M f > lam} = (b, 1)`` with its measure ``eta.tail(b)``
    against ``||f||_{L^1(eta)} / lam`` where ``eta = s * eta_base(s)``."""
    lam = float(lam)
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    nodes, v, th, F = _ratio_parts(eta_base, f)
    bound = float(F[0] / lam)
    U = _crossing(lam, nodes, v, th, F)
    if U is None:
        return WeakTypeResult(None, 0.0, bound)
    b = 0.0 if U == nodes.u[0] else float(_radius_of_u(eta_base, np.array([U]))[0])
    return WeakTypeResult(b, float(U), bound)


# -- random test profiles ----------------------------------------------------------

def random_profiles(t, count, seed, knots=(4, 32), tail_range=(0.0, 0.0)):
    """Nonnegative piecewise-linear profiles with heavy-tailed knot values.

    Knots are random grid nodes (always including both ends); values are
    Lomax(1.5) draws and a fraction of knots is set to zero.
    """
    rng = np.random.default_rng(seed)
    t = np.asarray(t, dtype=float)
    n = t.size
    out = []
    lt = np.log(t)
    for _ in range(count):
        k = int(rng.integers(knots[0], knots[1] + 1))
        idx = np.unique(np.concatenate([[0, n - 1], rng.choice(n, size=min(k, n), replace=False)]))
        vals = rng.pareto(1.5, size=idx.size)
        vals[rng.random(idx.size) < 0.2] = 0.0
        v = np.interp(-lt, -lt[idx], vals)
        th = float(rng.uniform(*tail_range)) if tail_range[1] > tail_range[0] else tail_range[0]
        out.append(Profile(values=v, t=t, tail_exponent=th))
    return out


def increasing_profiles(t, count, seed):
    """Profiles ``g(r) t**theta`` with ``g`` positive nondecreasing and ``theta < 0``;
    their tail ratio increases strictly and is unbounded."""
    rng = np.random.default_rng(seed)
    t = np.asarray(t, dtype=float)
    out = []
    for _ in range(count):
        inc = rng.pareto(1.5, size=t.size) * (rng.random(t.size) < 0.3)
        g = 0.1 + rng.pareto(1.5) + np.cumsum(inc) / t.size
        th = -float(rng.uniform(0.05, 0.9))
        out.append(Profile(values=g * t ** th, t=t, tail_exponent=th))
    return out

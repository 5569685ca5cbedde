"""Operator-norm estimates for H, H*, S, H + H* and M on L^p_nu.

Operators are discretized as matrices on node values (constant tail beyond
the last node) and the norm ``||f||_p**p = sum d_i |f_i|**p`` uses the
trapezoid weights of :func:`operators.norm_weights`.  Two numbers are
reported: a lower bound realized by explicit test profiles, and a heuristic
estimate from Boyd's nonlinear power iteration, which converges to the
global maximizer for matrices with nonnegative entries.  No upper bound is
claimed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .grids import operator_grid
from .operators import Profile, make_nodes, norm_weights, operator_matrix, random_profiles
from .weights import as_pair

OP_ALIASES = {"h": "h", "hstar": "hstar", "stieltjes": "stieltjes", "s": "stieltjes",
              "maximal": "maximal", "mmax": "maximal", "calderon": "calderon"}


@dataclass
class OpNormEstimate:
    op: str
    lower_bound: float
    heuristic_estimate: float
    witness: Profile | None
    grid_meta: dict
    converged: bool
    history: list = field(default_factory=list)
    iterations: int = 0

    def to_dict(self):
        return {
            "op": self.op,
            "lower_bound": self.lower_bound,
            "heuristic_estimate": self.heuristic_estimate,
            "converged": self.converged,
            "refinement_history": list(self.history),
            "iterations": self.iterations,
            "grid": self.grid_meta,
        }


def _psi(y, p):
    return np.sign(y) * np.abs(y) ** (p - 1.0)


def _pnorm(x, p):
    return float(np.sum(np.abs(x) ** p) ** (1.0 / p))


class Discretization:
    """Matrix model of one operator on one grid."""

    def __init__(self, op, omega, nu, p, t):
        op = OP_ALIASES.get(op)
        if op is None:
            raise ParameterError("operator must be one of h, hstar, stieltjes, maximal, calderon")
        self.op = op
        self.pair = as_pair(p)
        self.omega, self.nu = omega, nu
        base = "h" if op == "maximal" else op
        nodes, self.T = operator_matrix(base, omega, t)
        self.t = nodes.t
        nn = make_nodes(nu, self.t)
        if nn.dropped:
            raise ParameterError("nu tail underflows on the operator grid")
        self.d = norm_weights(nu, self.t)
        p = self.pair.p
        self.dp = self.d ** (1.0 / p)

    def apply(self, f):
        if self.op == "maximal":
            return np.maximum.accumulate(self.T @ np.abs(f), axis=0)
        return self.T @ f

    def ratio(self, f):
        p = self.pair.p
        den = _pnorm(self.dp * f, p)
        if den == 0:
            return None
        return _pnorm(self.dp * self.apply(f), p) / den

    def _linearized(self, f):
        """Matrix agreeing with M at ``f``: row i copies the row of H attaining the running max."""
        h = self.T @ np.abs(f)
        idx = np.arange(h.size)
        arg = np.maximum.accumulate(np.where(h == np.maximum.accumulate(h), idx, 0))
        return self.T[arg]

    def boyd(self, x0, max_iter=3000, tol=1e-10):
        """Nonlinear power iteration for ``max ||A x||_p / ||x||_p`` with
        ``A = D**(1/p) T D**(-1/p)``, started from ``x0`` (node values)."""
        p = self.pair.p
        q = self.pair.p_conj
        x = np.abs(self.dp * x0)
        x = x / _pnorm(x, p)
        A = (self.dp[:, None] * self.T) / self.dp[None, :]
        best = _pnorm(A @ x, p)
        best_x = x
        converged = False
        it = 0
        for it in range(1, max_iter + 1):
            if self.op == "maximal":
                lin = self._linearized(x / self.dp)
                A = (self.dp[:, None] * lin) / self.dp[None, :]
            y = A @ x
            z = A.T @ _psi(y, p)
            x = _psi(z, q)
            nx = _pnorm(x, p)
            if nx == 0:
                break
            x = x / nx
            val = _pnorm(A @ x, p) if self.op != "maximal" else self.ratio(x / self.dp)
            if val > best:
                improved = (val - best) / val
                best, best_x = val, x
                if improved < tol:
                    converged = True
                    break
            else:
                converged = self.op != "maximal" or it > 1
                break
        return best, best_x / self.dp, converged, it


def extremal_family(omega, nu, p, t, stride=4):
    """Profiles ``(sigma / omega) * chi_[a, 1)`` with ``sigma / omega = (nu / omega)**(-p'/p)``."""
    pair = as_pair(p)
    t = np.asarray(t, dtype=float)
    e = -pair.p_conj / pair.p
    with np.errstate(invalid="ignore", over="ignore"):
        base = np.exp(e * (nu.log_density_c(t) - omega.log_density_c(t)))
        tn = np.array([t[-1], t[-1] / 2])
        lb = e * (nu.log_density_c(tn) - omega.log_density_c(tn))
    theta = float((lb[0] - lb[1]) / math.log(2.0)) if np.all(np.isfinite(lb)) else 0.0
    base = np.nan_to_num(base, nan=0.0, posinf=0.0)
    out = []
    for a in range(0, t.size - 1, stride):
        v = np.where(np.arange(t.size) >= a, base, 0.0)
        out.append(Profile(values=v, t=t, tail_exponent=theta))
    return out


def opnorm_lower(op, omega, nu, p, t=None, family=None, seed=0, n_random=64):
    """Best ratio ``||T f|| / ||f||`` over a test family and its maximizing witness."""
    t = operator_grid() if t is None else np.asarray(t, dtype=float)
    disc = Discretization(op, omega, nu, p, t)
    if family is None:
        family = extremal_family(omega, nu, p, disc.t) + random_profiles(disc.t, n_random, seed)
    best, wit = -math.inf, None
    for f in family:
        v = f.values[: disc.t.size]
        r = disc.ratio(v)
        if r is not None and r > best:
            best, wit = r, f
    return best, wit, disc


def _estimate_on(op, omega, nu, p, t, seed, n_random, max_iter):
    lower, wit, disc = opnorm_lower(op, omega, nu, p, t, seed=seed, n_random=n_random)
    est, x, conv, it = disc.boyd(wit.values[: disc.t.size], max_iter=max_iter)
    if op in ("maximal", "mmax"):
        lower = max(lower, est)
    return lower, max(est, lower), conv, it, wit


def opnorm_estimate(op, omega, nu, p, n=256, t_min=1e-8, seed=0, n_random=64,
                    max_iter=3000, refine=True, rel_change=0.02):
    """Lower bound and heuristic norm estimate, with one grid refinement.

    The refinement doubles the node count at fixed ``t_min``; ``converged``
    requires the iteration to converge on both grids and the estimate to
    change by less than ``rel_change``.
    """
    opk = OP_ALIASES.get(op)
    if opk is None:
        raise ParameterError("operator must be one of h, hstar, stieltjes, maximal, calderon")
    sizes = [n, 2 * n] if refine else [n]
    hist = []
    lower = est = None
    conv_all = True
    its = 0
    wit = None
    for m in sizes:
        lo, es, conv, it, w = _estimate_on(opk, omega, nu, p, operator_grid(m, t_min), seed, n_random, max_iter)
        hist.append(es)
        conv_all &= conv
        its += it
        lower, est, wit = lo, es, w
    if refine:
        conv_all &= abs(hist[-1] - hist[-2]) <= rel_change * abs(hist[-1])
    meta = {"n": n, "t_min": t_min, "refined_n": sizes[-1], "seed": seed,
            "n_random": n_random, "tail": "constant beyond the last node"}
    return OpNormEstimate(opk, float(lower), float(est), wit, meta, bool(conv_all), hist, its)

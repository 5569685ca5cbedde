"""Radial weights on [0, 1): densities, tail integrals and moments.

All kinds evaluate internally in the complement variable ``t = 1 - r`` so that
radii within 1e-300 of the boundary stay representable.  Public methods that
take a radius convert with ``t = 1 - r`` (exact for ``r >= 1/2``).

Tail conventions::

    tail(r)   = int_r^1 w(s) ds
    tail1(r)  = int_r^1 s w(s) ds
    moment(x) = int_0^1 s**x w(s) ds
"""

from __future__ import annotations

import copy
import csv
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from .errors import DomainError, ParameterError
from .quadrature import DEFAULT_SPEC, CanonicalTail, integrate_panels, moment_quadrature


@dataclass(frozen=True)
class ExponentPair:
    """A Lebesgue exponent ``p`` in (1, inf) and its conjugate."""

    p: float
    p_conj: float = field(init=False)

    def __post_init__(self):
        p = float(self.p)
        if not (1.0 < p < math.inf):
            raise ParameterError(f"exponent p must lie in (1, inf), got {self.p}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p_conj", p / (p - 1.0))

    def conjugate(self):
        return ExponentPair(self.p_conj)


def as_pair(p):
    return p if isinstance(p, ExponentPair) else ExponentPair(p)


def complement(r):
    """``1 - r`` with a domain check (r must lie in [0, 1))."""
    r = np.asarray(r, dtype=float)
    if np.any(np.isnan(r)) or np.any(r < 0) or np.any(r >= 1):
        raise DomainError("radius must lie in [0, 1)")
    return 1.0 - r


def _x_of_t(t):
    # 1 - r**2 = t (2 - t)
    return t * (2.0 - t)


class RadialWeight:
    """Base class: a nonnegative integrable density on [0, 1).

    Subclasses implement the unscaled hooks ``_density_c`` and optionally
    closed forms ``_tail_c``, ``_tail1_c``, ``_moments``.  The default tails
    come from dyadic-panel quadrature and double as the test oracle for the
    closed forms (see :meth:`quad_tail_c`).
    """

    kind = "abstract"

    def __init__(self, scale=1.0, spec=DEFAULT_SPEC):
        scale = float(scale)
        if not (scale > 0 and math.isfinite(scale)):
            raise ParameterError("weight scale must be positive and finite")
        self.scale = scale
        self.spec = spec
        self._lock = threading.Lock()
        self._moment_cache = {}
        self._integrators = {}

    # -- identity -------------------------------------------------------
    def params(self):
        return {}

    def shape_key(self):
        """Hashable description ignoring the scale factor."""
        return (self.kind,) + tuple(sorted(
            (k, v.key() if isinstance(v, RadialWeight) else
             tuple(x.key() for x in v) if isinstance(v, tuple) and v and isinstance(v[0], RadialWeight) else v)
            for k, v in self.params().items()))

    def key(self):
        return self.shape_key() + (("scale", self.scale),)

    def __eq__(self, other):
        return isinstance(other, RadialWeight) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def _spec_body(self):
        raise NotImplementedError

    def to_spec(self):
        body = self._spec_body()
        if self.scale != 1.0:
            body += f",scale={self.scale!r}"
        return body

    def __repr__(self):
        try:
            return f"RadialWeight({self.to_spec()})"
        except NotImplementedError:
            return f"RadialWeight(kind={self.kind})"

    def scaled(self, c):
        """The weight ``c * w``; shares quadrature caches with ``w``."""
        c = float(c)
        if not (c > 0 and math.isfinite(c)):
            raise ParameterError("scale factor must be positive and finite")
        new = copy.copy(self)
        new.scale = self.scale * c
        return new

    # -- unscaled hooks ---------------------------------------------------
    def _density_c(self, t):
        raise NotImplementedError

    def _log_density_c(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self._density_c(t))

    def _integrator(self, name, g):
        with self._lock:
            integ = self._integrators.get(name)
            if integ is None:
                integ = CanonicalTail(g, self.spec)
                self._integrators[name] = integ
        return integ

    def quad_tail_c(self, t):
        """Unscaled ``int_0^t w(1 - tau) dtau`` by quadrature."""
        return self._integrator("tail", self._density_c)(t)

    def quad_tail1_c(self, t):
        """Unscaled ``int_0^t (1 - tau) w(1 - tau) dtau`` by quadrature."""
        return self._integrator("tail1", lambda u: (1.0 - u) * self._density_c(u))(t)

    def _tail_c(self, t):
        return self.quad_tail_c(t)

    def _tail1_c(self, t):
        return self.quad_tail1_c(t)

    def _log_tail_c(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self._tail_c(t))

    def _log_tail1_c(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self._tail1_c(t))

    def quad_moments(self, xs):
        xs = np.asarray(xs, dtype=float)
        out = np.empty(xs.shape)
        zero = xs == 0
        out[zero] = self.quad_tail_c(np.ones(int(zero.sum())))
        if (~zero).any():
            out[~zero] = moment_quadrature(self._density_c, self.quad_tail_c, xs[~zero], self.spec)
        return out

    def _moments(self, xs):
        return self.quad_moments(xs)

    @property
    def integrable(self):
        return bool(np.isfinite(self._tail_c(np.array([1.0])))[0])

    def _check_positive_tail(self):
        probe = np.array([2.0 ** -40, 2.0 ** -20, 2.0 ** -4])
        v = self._tail_c(probe)
        if not np.all(v > 0):
            raise ParameterError("weight must have a positive tail integral on every [r, 1)")

    # -- public, scaled -------------------------------------------------------
    def density_c(self, t):
        return self.scale * self._density_c(np.asarray(t, dtype=float))

    def log_density_c(self, t):
        """``log w(1 - t)``; stays finite where the density itself underflows."""
        return math.log(self.scale) + self._log_density_c(np.asarray(t, dtype=float))

    def density(self, r):
        return self.density_c(complement(r))

    __call__ = density

    def tail_c(self, t):
        return self.scale * self._tail_c(np.asarray(t, dtype=float))

    def tail1_c(self, t):
        return self.scale * self._tail1_c(np.asarray(t, dtype=float))

    def log_tail_c(self, t):
        return math.log(self.scale) + self._log_tail_c(np.asarray(t, dtype=float))

    def log_tail1_c(self, t):
        return math.log(self.scale) + self._log_tail1_c(np.asarray(t, dtype=float))

    def tail(self, r):
        return self.tail_c(complement(r))

    def tail1(self, r):
        return self.tail1_c(complement(r))

    def moments(self, xs):
        """Cached moments ``int_0^1 s**x w(s) ds`` for an array of ``x >= 0``."""
        xs = np.asarray(xs, dtype=float)
        if np.any(xs < 0) or np.any(np.isnan(xs)):
            raise DomainError("moment exponent must be >= 0")
        flat = xs.ravel()
        with self._lock:
            missing = sorted({float(x) for x in flat if float(x) not in self._moment_cache})
        if missing:
            vals = self._moments(np.array(missing))
            with self._lock:
                for x, v in zip(missing, vals):
                    self._moment_cache.setdefault(x, float(v))
        with self._lock:
            out = np.array([self._moment_cache[float(x)] for x in flat])
        return self.scale * out.reshape(xs.shape)

    def moment(self, x):
        return float(self.moments(np.array([float(x)]))[0])

    def kernel_closed_form(self, u):
        """Closed-form Bergman kernel at ``u = conj(z) zeta`` when known, else None."""
        return None


class StandardWeight(RadialWeight):
    """``(1 - s**2)**gamma`` (unnormalized)."""

    kind = "standard"

    def __init__(self, gamma, scale=1.0, spec=DEFAULT_SPEC, allow_divergent=False):
        super().__init__(scale, spec)
        gamma = float(gamma)
        if not math.isfinite(gamma):
            raise ParameterError("gamma must be finite")
        if gamma <= -1 and not allow_divergent:
            raise ParameterError(f"standard weight needs gamma > -1, got {gamma}")
        self.gamma = gamma
        self.divergent = gamma <= -1

    def params(self):
        return {"gamma": self.gamma}

    def _spec_body(self):
        return f"std:gamma={self.gamma!r}"

    def _density_c(self, t):
        with np.errstate(divide="ignore", over="ignore"):
            return _x_of_t(t) ** self.gamma

    def _log_density_c(self, t):
        with np.errstate(divide="ignore", invalid="ignore"):
            v = self.gamma * np.log(_x_of_t(t))
        return np.where(np.asarray(t) > 0, v, -np.inf if self.gamma > 0 else np.inf if self.gamma < 0 else 0.0)

    def _tail1_c(self, t):
        t = np.asarray(t, dtype=float)
        if self.divergent:
            return np.where(t > 0, np.inf, 0.0)
        g1 = self.gamma + 1.0
        return _x_of_t(t) ** g1 / (2.0 * g1)

    def _log_tail1_c(self, t):
        t = np.asarray(t, dtype=float)
        if self.divergent:
            return np.full(t.shape, np.inf)
        g1 = self.gamma + 1.0
        with np.errstate(divide="ignore"):
            return g1 * np.log(_x_of_t(t)) - math.log(2.0 * g1)

    def _tail_c(self, t):
        t = np.asarray(t, dtype=float)
        if self.divergent:
            return np.where(t > 0, np.inf, 0.0)
        g1 = self.gamma + 1.0
        return 0.5 * special.beta(0.5, g1) * special.betainc(g1, 0.5, _x_of_t(t))

    def _log_tail_c(self, t):
        t = np.asarray(t, dtype=float)
        if self.divergent:
            return np.full(t.shape, np.inf)
        v = self._tail_c(t)
        g1 = self.gamma + 1.0
        x = _x_of_t(t)
        with np.errstate(divide="ignore"):
            small = g1 * np.log(x) - math.log(2.0 * g1)
            return np.where(v > 1e-280, np.log(np.maximum(v, 1e-300)), small)

    def _moments(self, xs):
        if self.divergent:
            return np.full(np.shape(xs), np.inf)
        return 0.5 * np.exp(special.betaln((np.asarray(xs) + 1.0) / 2.0, self.gamma + 1.0))

    def kernel_closed_form(self, u):
        g = self.gamma
        return (g + 1.0) * (1.0 - np.asarray(u, dtype=complex)) ** (-(2.0 + g)) / self.scale


def _log_weight_L(t):
    # log(e / (1 - r**2)) in the complement variable
    return 1.0 - np.log(t) - np.log1p(1.0 - t)


class LogWeight(RadialWeight):
    """``(1 - s**2)**-1 * log(e / (1 - s**2))**-alpha`` with ``alpha > 1``."""

    kind = "log"

    def __init__(self, alpha, scale=1.0, spec=DEFAULT_SPEC):
        super().__init__(scale, spec)
        alpha = float(alpha)
        if not alpha > 1:
            raise ParameterError(f"log weight needs alpha > 1, got {alpha}")
        self.alpha = alpha

    def params(self):
        return {"alpha": self.alpha}

    def _spec_body(self):
        return f"log:alpha={self.alpha!r}"

    def _density_c(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = 1.0 / (_x_of_t(t) * _log_weight_L(t) ** self.alpha)
        return np.where(t > 0, v, np.inf)

    def _log_density_c(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = -np.log(_x_of_t(t)) - self.alpha * np.log(_log_weight_L(t))
        return np.where(t > 0, v, np.inf)

    def _tail1_c(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            v = _log_weight_L(t) ** (1.0 - self.alpha) / (2.0 * (self.alpha - 1.0))
        return np.where(t > 0, v, 0.0)

    def _excess(self, t):
        # int_r^1 (1 - s) w(s) ds, a bounded integrand
        a = self.alpha

        def g(u):
            with np.errstate(divide="ignore", invalid="ignore"):
                v = _log_weight_L(u) ** (-a) / (2.0 - u)
            return np.where(u > 0, v, 0.0)

        return self._integrator("excess", g)(t)

    def _tail_c(self, t):
        return self._tail1_c(t) + self._excess(t)


def _log_upper_gamma(a, x, max_iter=2000):
    """``log Gamma(a, x)`` for real ``a`` and ``x >= 1`` by the Lentz continued fraction."""
    x = np.asarray(x, dtype=float)
    fpmin = 1e-300
    b = x + 1.0 - a
    c = np.full(x.shape, 1.0 / fpmin)
    d = 1.0 / b
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < fpmin, fpmin, d)
        c = b + an / c
        c = np.where(np.abs(c) < fpmin, fpmin, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < 1e-16
        if done.all():
            break
    return -x + a * np.log(x) + np.log(h)


class ExponentialWeight(RadialWeight):
    """``exp(-c / (1 - s)**k)``."""

    kind = "exponential"

    def __init__(self, c, k, scale=1.0, spec=DEFAULT_SPEC):
        super().__init__(scale, spec)
        c, k = float(c), float(k)
        if not (c > 0 and k > 0):
            raise ParameterError("exponential weight needs c > 0 and k > 0")
        self.c, self.k = c, k
        self._t1 = c ** (1.0 / k)  # complement where c / t**k == 1

    def params(self):
        return {"c": self.c, "k": self.k}

    def _spec_body(self):
        return f"exp:c={self.c!r},k={self.k!r}"

    def _density_c(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(t > 0, np.exp(-self.c / t ** self.k), 0.0)

    def _log_density_c(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(t > 0, -self.c / t ** self.k, -np.inf)

    def _log_parts(self, t):
        """(log tail, log of int_0^t tau w) for an array of t."""
        t = np.asarray(t, dtype=float)
        c, k = self.c, self.k
        lt = np.full(t.shape, -np.inf)
        lm = np.full(t.shape, -np.inf)
        pos = t > 0
        far = pos & (t <= self._t1)
        if far.any():
            x = c / t[far] ** k
            lt[far] = math.log(c ** (1.0 / k) / k) + _log_upper_gamma(-1.0 / k, x)
            lm[far] = math.log(c ** (2.0 / k) / k) + _log_upper_gamma(-2.0 / k, x)
        near = pos & ~far
        if near.any():
            t1 = self._t1
            x1 = np.array([1.0])
            base_t = math.exp(math.log(c ** (1.0 / k) / k) + _log_upper_gamma(-1.0 / k, x1)[0])
            base_m = math.exp(math.log(c ** (2.0 / k) / k) + _log_upper_gamma(-2.0 / k, x1)[0])
            tn = t[near]
            lo = np.full(tn.shape, t1)
            dens = lambda u: np.exp(-c / u ** k)
            vt, _ = integrate_panels(dens, lo, tn, rtol=self.spec.relative_tolerance)
            vm, _ = integrate_panels(lambda u: u * dens(u), lo, tn, rtol=self.spec.relative_tolerance)
            lt[near] = np.log(base_t + vt)
            lm[near] = np.log(base_m + vm)
        return lt, lm

    def _log_tail_c(self, t):
        return self._log_parts(t)[0]

    def _log_tail1_c(self, t):
        lt, lm = self._log_parts(t)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(np.isfinite(lt), lt + np.log1p(-np.exp(lm - lt)), -np.inf)

    def _tail_c(self, t):
        return np.exp(self._log_tail_c(t))

    def _tail1_c(self, t):
        return np.exp(self._log_tail1_c(t))


class TabulatedWeight(RadialWeight):
    """Piecewise-linear interpolant of a table ``(r_i, w_i)``.

    Below the first node the first value is held constant.  Beyond the last
    node the value decays linearly to zero at r = 1 (``extension="linear"``)
    or is held constant (``extension="constant"``).  Tails and moments are
    exact integrals of the interpolant.
    """

    kind = "tabulated"

    def __init__(self, r, values, scale=1.0, spec=DEFAULT_SPEC, extension="linear", source=None):
        super().__init__(scale, spec)
        r = np.asarray(r, dtype=float)
        v = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ParameterError("table needs two equal-length columns with at least two rows")
        if np.any(r < 0) or np.any(r >= 1) or np.any(np.diff(r) <= 0):
            raise ParameterError("table radii must satisfy 0 <= r < 1 and increase strictly")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ParameterError("table values must be finite and nonnegative")
        if extension not in ("linear", "constant"):
            raise ParameterError("extension must be 'linear' or 'constant'")
        if v[-1] <= 0:
            raise ParameterError("last table value must be positive (tail integral would vanish)")
        self.extension = extension
        self.source = source
        self._r_in, self._v_in = r, v
        rr, vv = r, v
        if rr[0] > 0:
            rr, vv = np.concatenate([[0.0], rr]), np.concatenate([[vv[0]], vv])
        end = 0.0 if extension == "linear" else vv[-1]
        self._R = np.concatenate([rr, [1.0]])
        self._V = np.concatenate([vv, [end]])
        dr = np.diff(self._R)
        cell0 = dr * (self._V[:-1] + self._V[1:]) / 2.0
        mid = (self._R[:-1] + self._R[1:]) / 2.0
        vmid = (self._V[:-1] + self._V[1:]) / 2.0
        cell1 = dr / 6.0 * (self._R[:-1] * self._V[:-1] + 4 * mid * vmid + self._R[1:] * self._V[1:])
        # suffix sums over cells i..end
        self._suf0 = np.concatenate([np.cumsum(cell0[::-1])[::-1], [0.0]])
        self._suf1 = np.concatenate([np.cumsum(cell1[::-1])[::-1], [0.0]])
        self._T = (1.0 - self._R)[::-1]
        self._VT = self._V[::-1]

    def params(self):
        return {"r": tuple(self._r_in), "values": tuple(self._v_in), "extension": self.extension}

    def _spec_body(self):
        if self.source is None:
            raise NotImplementedError
        return f"table:{self.source}"

    def _interp(self, r):
        return np.interp(r, self._R, self._V)

    def _interp_c(self, t):
        return np.interp(t, self._T, self._VT)

    def _cell_tails(self, t):
        # all arithmetic in the complement variable keeps tiny tails exact
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self._R, 1.0 - t, side="right") - 1, 0, self._R.size - 2)
        tb = 1.0 - self._R[i + 1]
        ft = self._interp_c(t)
        fb = self._V[i + 1]
        h = t - tb
        p0 = h * (ft + fb) / 2.0
        m = (t + tb) / 2.0
        p1 = h / 6.0 * ((1.0 - t) * ft + 4 * (1.0 - m) * self._interp_c(m) + (1.0 - tb) * fb)
        return p0 + self._suf0[i + 1], p1 + self._suf1[i + 1]

    def _density_c(self, t):
        return self._interp_c(np.asarray(t, dtype=float))

    def _tail_c(self, t):
        return self._cell_tails(t)[0]

    def _tail1_c(self, t):
        return self._cell_tails(t)[1]

    def _moments(self, xs):
        xs = np.asarray(xs, dtype=float)[:, None]
        a, b = self._R[:-1], self._R[1:]
        fa, fb = self._V[:-1], self._V[1:]
        beta = (fb - fa) / (b - a)
        alpha = fa - beta * a
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = alpha * (b ** (xs + 1) - a ** (xs + 1)) / (xs + 1)
            t2 = beta * (b ** (xs + 2) - a ** (xs + 2)) / (xs + 2)
        return (t1 + t2).sum(axis=1)


class PowerTailWeight(RadialWeight):
    """``base(s) * base.tail1(s)**alpha``; its ``tail1`` is ``base.tail1**(1+alpha)/(1+alpha)``."""

    kind = "power_tail"

    def __init__(self, base, alpha, scale=1.0, spec=None, allow_divergent=False):
        super().__init__(scale, spec or base.spec)
        alpha = float(alpha)
        if alpha <= -1 and not allow_divergent:
            raise ParameterError(f"power-tail exponent must exceed -1, got {alpha}")
        self.base = base
        self.alpha = alpha
        self.divergent = alpha <= -1

    def params(self):
        return {"base": self.base, "alpha": self.alpha}

    def _spec_body(self):
        return f"powtail:base=({self.base.to_spec()}),alpha={self.alpha!r}"

    def _density_c(self, t):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return self.base.density_c(t) * self.base.tail1_c(t) ** self.alpha

    def _log_density_c(self, t):
        with np.errstate(invalid="ignore"):
            v = self.base.log_density_c(t) + self.alpha * self.base.log_tail1_c(t)
        return np.nan_to_num(v, nan=-np.inf, posinf=np.inf, neginf=-np.inf)

    def _tail1_c(self, t):
        t = np.asarray(t, dtype=float)
        if self.divergent:
            return np.where(t > 0, np.inf, 0.0)
        a1 = 1.0 + self.alpha
        return self.base.tail1_c(t) ** a1 / a1

    def _log_tail1_c(self, t):
        t = np.asarray(t, dtype=float)
        if self.divergent:
            return np.full(t.shape, np.inf)
        a1 = 1.0 + self.alpha
        return a1 * self.base.log_tail1_c(t) - math.log(a1)

    def _tail_c(self, t):
        t = np.asarray(t, dtype=float)
        if self.divergent:
            return np.where(t > 0, np.inf, 0.0)
        return self.quad_tail_c(t)


class ProductWeight(RadialWeight):
    """Pointwise product of weights."""

    kind = "product"

    def __init__(self, factors, scale=1.0, spec=None, check=True):
        factors = tuple(factors)
        if not factors:
            raise ParameterError("product needs at least one factor")
        super().__init__(scale, spec or factors[0].spec)
        self.factors = factors
        if check:
            self._check_positive_tail()

    def params(self):
        return {"factors": self.factors}

    def _spec_body(self):
        return "prod:" + "*".join(f"({f.to_spec()})" for f in self.factors)

    def _log_density_c(self, t):
        out = np.zeros(np.shape(t))
        with np.errstate(invalid="ignore"):
            for f in self.factors:
                out = out + f.log_density_c(t)
        # 0 * inf counts as 0
        return np.nan_to_num(out, nan=-np.inf, posinf=np.inf, neginf=-np.inf)

    def _density_c(self, t):
        with np.errstate(over="ignore"):
            return np.exp(self._log_density_c(t))


class PowerWeight(RadialWeight):
    """``base(s)**exponent``; used for derived weights such as ``f**(-p'/p)``."""

    kind = "power"

    def __init__(self, base, exponent, scale=1.0, spec=None):
        super().__init__(scale, spec or base.spec)
        self.base = base
        self.exponent = float(exponent)

    def params(self):
        return {"base": self.base, "exponent": self.exponent}

    def _spec_body(self):
        raise NotImplementedError

    def _log_density_c(self, t):
        lb = self.base.log_density_c(t)
        with np.errstate(invalid="ignore"):
            v = self.exponent * lb
        return np.where(np.isnan(v), 0.0, v)

    def _density_c(self, t):
        with np.errstate(over="ignore"):
            return np.exp(self._log_density_c(t))


class SigmaWeight(RadialWeight):
    """``(omega / nu**(1/p))**p'`` by direct evaluation.

    Where ``nu`` vanishes and ``omega`` does not the density is ``+inf``; on the
    common zero set of both it is set to 0.
    """

    kind = "sigma"

    def __init__(self, omega, nu, p, scale=1.0, spec=None):
        super().__init__(scale, spec or omega.spec)
        self.omega, self.nu, self.pair = omega, nu, as_pair(p)

    def params(self):
        return {"omega": self.omega, "nu": self.nu, "p": self.pair.p}

    def _spec_body(self):
        raise NotImplementedError

    def _log_density_c(self, t):
        p, q = self.pair.p, self.pair.p_conj
        lw = self.omega.log_density_c(t)
        ln = self.nu.log_density_c(t)
        with np.errstate(invalid="ignore"):
            v = q * lw - (q / p) * ln
        zw, zn = np.isneginf(lw), np.isneginf(ln)
        v = np.where(zw & zn, -np.inf, v)
        v = np.where(~zw & zn, np.inf, v)
        return v

    def _density_c(self, t):
        with np.errstate(over="ignore"):
            return np.exp(self._log_density_c(t))


# -- constructors ------------------------------------------------------------

def standard(gamma, scale=1.0):
    return StandardWeight(gamma, scale)


def log_weight(alpha, scale=1.0):
    return LogWeight(alpha, scale)


def exponential(c=1.0, k=1.0, scale=1.0):
    return ExponentialWeight(c, k, scale)


def tabulated(r, values, scale=1.0, extension="linear", source=None):
    return TabulatedWeight(r, values, scale, extension=extension, source=source)


def power_tail_weight(w, alpha):
    """The weight ``w * w.tail1**alpha`` (requires ``alpha > -1``)."""
    return PowerTailWeight(w, alpha)


def product(*factors, simplify=True):
    """Pointwise product; products of standard weights collapse to one standard weight."""
    if len(factors) == 1 and isinstance(factors[0], (list, tuple)):
        factors = tuple(factors[0])
    if simplify and factors and all(isinstance(f, StandardWeight) for f in factors):
        return StandardWeight(sum(f.gamma for f in factors),
                              scale=math.prod(f.scale for f in factors))
    return ProductWeight(factors)


def power(w, exponent, simplify=True):
    if simplify and isinstance(w, StandardWeight):
        return StandardWeight(w.gamma * exponent, scale=w.scale ** exponent, allow_divergent=True)
    return PowerWeight(w, exponent)


def sigma_weight(omega, nu, p, simplify=True):
    """``sigma = (omega / nu**(1/p))**p'``.

    With ``simplify`` the exponent algebra is done symbolically for equal
    shapes, pairs of standard weights and ``nu = omega * omega.tail1**alpha``;
    the result may then be a non-integrable weight whose tails are ``+inf``.
    """
    pair = as_pair(p)
    p, q = pair.p, pair.p_conj
    if simplify:
        sc = omega.scale ** q * nu.scale ** (-q / p)
        if omega.shape_key() == nu.shape_key():
            return omega.scaled(sc / omega.scale)
        if isinstance(omega, StandardWeight) and isinstance(nu, StandardWeight):
            expo = (p * omega.gamma - nu.gamma) / (p - 1.0)
            return StandardWeight(expo, scale=sc, allow_divergent=True)
        if isinstance(nu, PowerTailWeight) and nu.base == omega:
            return PowerTailWeight(omega, -nu.alpha * q / p, scale=nu.scale ** (-q / p),
                                   allow_divergent=True)
    return SigmaWeight(omega, nu, pair)


def eval_weight(w, r):
    """``w(r)`` for ``r`` in [0, 1); raises DomainError otherwise."""
    return w.density(r)


def tail(w, r):
    return w.tail(r)


def tail1(w, r):
    return w.tail1(r)


def moment(w, x):
    return w.moment(x)


# -- weight-spec mini-language ---------------------------------------------------

def _split_top(s, sep):
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _strip_parens(s):
    s = s.strip()
    while s.startswith("(") and s.endswith(")"):
        depth = 0
        for i, ch in enumerate(s):
            depth += ch == "("
            depth -= ch == ")"
            if depth == 0 and i < len(s) - 1:
                return s
        s = s[1:-1].strip()
    return s


def _kv(body):
    out = {}
    for item in _split_top(body, ","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ParameterError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def read_table(path):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if rows:
                    raise ParameterError(f"malformed table row {row!r} in {path}")
                continue  # header
    if not rows:
        raise ParameterError(f"empty table {path}")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]


def parse_weight(text, base_dir=None):
    """Parse the weight-spec mini-language.

    ``std:gamma=g``, ``log:alpha=a``, ``exp:c=c,k=k``,
    ``powtail:base=<spec>,alpha=a``, ``prod:<spec>*<spec>``, ``table:path.csv``.
    Every kind except ``prod`` and ``table`` accepts an extra ``scale=c``.
    Nested specs may be wrapped in parentheses.
    """
    text = _strip_parens(text)
    if ":" not in text:
        raise ParameterError(f"weight spec {text!r} lacks a kind prefix")
    kind, body = text.split(":", 1)
    kind = kind.strip()
    try:
        if kind == "std":
            kv = _kv(body)
            return StandardWeight(float(kv["gamma"]), float(kv.get("scale", 1.0)))
        if kind == "log":
            kv = _kv(body)
            return LogWeight(float(kv["alpha"]), float(kv.get("scale", 1.0)))
        if kind == "exp":
            kv = _kv(body)
            return ExponentialWeight(float(kv.get("c", 1.0)), float(kv.get("k", 1.0)),
                                     float(kv.get("scale", 1.0)))
        if kind == "powtail":
            kv = _kv(body)
            base = parse_weight(kv["base"], base_dir)
            w = PowerTailWeight(base, float(kv["alpha"]))
            return w.scaled(float(kv["scale"])) if "scale" in kv else w
        if kind == "prod":
            factors = [parse_weight(f, base_dir) for f in _split_top(body, "*")]
            return product(*factors)
        if kind == "table":
            path = Path(body.strip())
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            r, v = read_table(path)
            return TabulatedWeight(r, v, source=body.strip())
    except KeyError as exc:
        raise ParameterError(f"weight spec {text!r} is missing {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"bad number in weight spec {text!r}: {exc}") from None
    raise ParameterError(f"unknown weight kind {kind!r}")

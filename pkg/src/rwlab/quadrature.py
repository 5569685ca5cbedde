"""Gauss-Kronrod panel quadrature graded toward the endpoint r = 1.

Every built-in weight is smooth on [0, 1) and at worst integrably singular at
r = 1, so integrals are written in the complement variable ``t = 1 - r`` and
split into dyadic panels ``[2**-(j+1), 2**-j]``.  On a panel whose endpoints
differ by a factor two a power singularity at ``t = 0`` is far outside the
Bernstein ellipse of the 15-point Kronrod rule, so each panel is accurate to
roughly machine precision before any adaptive bisection.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, ParameterError

# QUADPACK qk15 abscissae and weights on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_FULL = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (x_1, x_3, x_5, x_7 and mirror).
_GAUSS_FULL[[1, 3, 5]] = _WG[:3]
_GAUSS_FULL[7] = _WG[3]
_GAUSS_FULL[[9, 11, 13]] = _WG[2::-1]
GAUSS_WEIGHTS = _GAUSS_FULL

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny

# Bound on simultaneously refined panels; beyond it panels are accepted with their error.
MAX_ACTIVE_PANELS = 1 << 18

# Canonical dyadic panels reach 2**-996 ~ 1.5e-300 in the complement variable.
CANONICAL_DEPTH = 996


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for panel quadrature.

    ``graded_exponent`` is the length ratio between consecutive panels when a
    segment is split geometrically toward its left endpoint (the side nearest
    r = 1 in the complement variable).
    """

    relative_tolerance: float = 1e-12
    absolute_tolerance: float = 1e-300
    graded_exponent: float = 2.0
    max_refinements: int = 30

    def __post_init__(self):
        if not (self.relative_tolerance > 0 and self.absolute_tolerance > 0):
            raise ParameterError("quadrature tolerances must be positive")
        if self.max_refinements < 1:
            raise ParameterError("max_refinements must be >= 1")
        if not self.graded_exponent > 1:
            raise ParameterError("graded_exponent must exceed 1")


DEFAULT_SPEC = QuadratureSpec()


def _gk15(f, a, b, params):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * NODES
    y = np.asarray(f(x, *[p[:, None] for p in params]), dtype=float)
    y = np.broadcast_to(y, x.shape)
    resk = y @ KRONROD_WEIGHTS
    resg = y @ GAUSS_WEIGHTS
    with np.errstate(invalid="ignore", over="ignore"):
        resasc = np.abs(y - 0.5 * resk[:, None]) @ KRONROD_WEIGHTS
        resabs = np.abs(y) @ KRONROD_WEIGHTS
        err = np.abs(resk - resg) * np.abs(h)
        resasc = resasc * np.abs(h)
        scaled = np.where(
            (resasc > 0) & (err > 0),
            resasc * np.minimum(1.0, (200.0 * err / np.where(resasc > 0, resasc, 1.0)) ** 1.5),
            err,
        )
        floor = 50.0 * _EPS * resabs * np.abs(h)
    return resk * h, np.maximum(scaled, floor)


def integrate_panels(f, a, b, params=(), rtol=1e-12, atol=0.0, max_refinements=30):
    """Integrate ``f`` over each panel ``[a[i], b[i]]`` with adaptive GK15.

    ``f(x, *params)`` receives ``x`` of shape (P, 15) and each parameter as a
    (P, 1) column.  ``atol`` may be a scalar or one value per panel.  Returns
    ``(values, errors)`` per input panel.  Panels still failing the tolerance
    after ``max_refinements`` bisections are accepted with their error.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = a.size
    params = tuple(np.broadcast_to(np.asarray(p, dtype=float), (n,)).copy() for p in params)
    atol_arr = np.broadcast_to(np.asarray(atol, dtype=float), (n,)).copy()
    total = np.zeros(n)
    error = np.zeros(n)
    owner = np.arange(n)
    pa, pb, pp, pt = a, b, params, atol_arr
    for level in range(max_refinements + 1):
        if pa.size == 0:
            break
        val, err = _gk15(f, pa, pb, pp)
        with np.errstate(invalid="ignore"):
            ok = (err <= np.maximum(pt, rtol * np.abs(val))) | ~np.isfinite(val)
        if level == max_refinements or pa.size > MAX_ACTIVE_PANELS:
            ok[:] = True
        np.add.at(total, owner[ok], val[ok])
        np.add.at(error, owner[ok], err[ok])
        bad = ~ok
        if not bad.any():
            break
        mid = 0.5 * (pa[bad] + pb[bad])
        pa = np.concatenate([pa[bad], mid])
        pb = np.concatenate([mid, pb[bad]])
        owner = np.concatenate([owner[bad], owner[bad]])
        pp = tuple(np.concatenate([p[bad], p[bad]]) for p in pp)
        pt = np.concatenate([pt[bad], pt[bad]]) * 0.5
    return total, error


def geometric_breaks(lo, hi, ratio=2.0):
    """Breakpoints splitting ``[lo, hi]`` (0 < lo < hi) into panels whose
    endpoint ratio does not exceed ``ratio``."""
    if hi <= lo:
        return np.array([lo, hi])
    if lo <= 0:
        raise ParameterError("geometric_breaks needs a positive left endpoint")
    k = max(1, int(math.ceil(math.log(hi / lo) / math.log(ratio) - 1e-12)))
    pts = lo * (hi / lo) ** (np.arange(k + 1) / k)
    pts[0], pts[-1] = lo, hi
    return pts


def _algebraic_remainder(c, k):
    """Fit ``c_j = A (j + b)**-s`` through panels J-2k, J-k, J and sum the model beyond J."""
    from scipy import optimize, special

    n = c.size
    j = np.array([n - 1 - 2 * k, n - 1 - k, n - 1], dtype=float)
    v = c[j.astype(int)]
    if np.any(v <= 0):
        return None
    r1 = math.log(v[0] / v[1])
    r2 = math.log(v[1] / v[2])

    def mismatch(b):
        return r1 * math.log((j[2] + b) / (j[1] + b)) - r2 * math.log((j[1] + b) / (j[0] + b))

    lo, hi = -j[0] + 1e-3, 1e6
    try:
        b = optimize.brentq(mismatch, lo, hi, xtol=1e-12)
    except ValueError:
        b = 0.0
    s_exp = r1 / math.log((j[1] + b) / (j[0] + b))
    if not s_exp > 1.0 + 1e-6:
        return None
    a = v[2] * (j[2] + b) ** s_exp
    return float(a * special.zeta(s_exp, j[2] + 1.0 + b)), float(s_exp)


class CanonicalTail:
    """Values of ``G(t) = int_0^t g(tau) dtau`` for a density ``g`` on (0, 1].

    The integral over each canonical panel ``[2**-(j+1), 2**-j]`` is computed
    once; a query at ``t`` adds the canonical prefix below the largest power of
    two not exceeding ``t`` and one partial panel.  Results therefore do not
    depend on which other points are queried together.  Contributions below
    ``2**-CANONICAL_DEPTH`` are extrapolated from the geometric decay of the
    last two panels; a decay ratio of one or more marks the integral divergent.
    """

    def __init__(self, g, spec=DEFAULT_SPEC):
        self._g = g
        self._spec = spec
        self._lock = threading.Lock()
        self._built = False

    def _build(self):
        with self._lock:
            if self._built:
                return
            spec = self._spec
            j = np.arange(CANONICAL_DEPTH)
            lo = np.ldexp(1.0, -(j + 1))
            hi = np.ldexp(1.0, -j)
            with np.errstate(all="ignore"):
                c, e = integrate_panels(
                    lambda x: self._g(x), lo, hi,
                    rtol=spec.relative_tolerance, atol=spec.absolute_tolerance,
                    max_refinements=spec.max_refinements,
                )
            divergent = not np.all(np.isfinite(c))
            rem = 0.0
            rem_err = 0.0
            decay = 0.0
            if not divergent:
                last, prev, prev2 = c[-1], c[-2], c[-3]
                if last != 0.0:
                    q = last / prev if prev != 0 else np.inf
                    if not np.isfinite(q) or q >= 1.0 - 1e-9:
                        divergent = True
                    elif q < 0.9:
                        rem = last * q / (1.0 - q)
                        decay = q
                        q2 = prev / prev2 if prev2 != 0 else q
                        if q2 < 1.0:
                            rem_err = abs(rem - last * q2 / (1.0 - q2))
                    else:
                        # logarithmic decay: panel j contributes about A (j + b)**-s
                        fit = _algebraic_remainder(c, 200)
                        fit2 = _algebraic_remainder(c, 100)
                        if fit is None or fit2 is None:
                            divergent = True
                        else:
                            rem, s_exp = fit
                            rem_err = 10.0 * abs(rem - fit2[0])
                            decay = -s_exp
            if divergent:
                prefix = np.full(CANONICAL_DEPTH + 1, np.inf)
                perr = np.zeros(CANONICAL_DEPTH + 1)
            else:
                prefix = np.empty(CANONICAL_DEPTH + 1)
                prefix[-1] = rem
                prefix[:-1] = rem + np.cumsum(c[::-1])[::-1]
                perr = np.empty(CANONICAL_DEPTH + 1)
                perr[-1] = rem_err
                perr[:-1] = perr[-1] + np.cumsum(e[::-1])[::-1]
            self._prefix = prefix
            self._prefix_err = perr
            self._divergent = divergent
            self._decay = decay
            self._built = True

    @property
    def divergent(self):
        self._build()
        return self._divergent

    def total(self):
        """Integral over the whole of (0, 1]."""
        self._build()
        return float(self._prefix[0])

    def __call__(self, t, return_error=False):
        self._build()
        t = np.asarray(t, dtype=float)
        shape = t.shape
        t = t.ravel()
        if np.any((t < 0) | (t > 1)) or np.any(np.isnan(t)):
            raise ParameterError("complement variable must lie in [0, 1]")
        out = np.zeros(t.size)
        err = np.zeros(t.size)
        if self._divergent:
            out[t > 0] = np.inf
            return (out.reshape(shape), err.reshape(shape)) if return_error else out.reshape(shape)
        mant, ex = np.frexp(t)
        m = 1 - ex
        pos = t > 0
        deep = pos & (m > CANONICAL_DEPTH)
        reg = pos & ~deep
        if deep.any():
            # power-law continuation below the canonical depth
            q = self._decay
            if q < 0:
                # algebraic panel decay: remainder ~ (log 1/t)**(1 - s)
                jt = -np.log2(t[deep])
                out[deep] = self._prefix[-1] * (jt / CANONICAL_DEPTH) ** (1.0 + q)
            elif q > 0:
                expo = -math.log2(q)
                out[deep] = self._prefix[-1] * (t[deep] * 2.0 ** CANONICAL_DEPTH) ** expo
            else:
                out[deep] = 0.0
        if reg.any():
            idx = np.flatnonzero(reg)
            lo = np.ldexp(0.5, ex[idx])
            base = self._prefix[m[idx]]
            berr = self._prefix_err[m[idx]]
            partial = np.zeros(idx.size)
            perr = np.zeros(idx.size)
            need = t[idx] > lo
            if need.any():
                spec = self._spec
                with np.errstate(all="ignore"):
                    pv, pe = integrate_panels(
                        lambda x: self._g(x), lo[need], t[idx][need],
                        rtol=spec.relative_tolerance, atol=spec.absolute_tolerance,
                        max_refinements=spec.max_refinements,
                    )
                partial[need] = pv
                perr[need] = pe
            out[idx] = base + partial
            err[idx] = berr + perr
        tol = 1e3 * self._spec.relative_tolerance * np.abs(out) + self._spec.absolute_tolerance
        bad = np.isfinite(out) & (err > tol) & (err > 1e-6 * np.abs(out))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise AccuracyError(
                f"tail quadrature did not converge at t={t[i]:.3e}",
                estimate=float(out[i]), error=float(err[i]),
            )
        if return_error:
            return out.reshape(shape), err.reshape(shape)
        return out.reshape(shape)


def _moment_panels():
    geo = np.ldexp(1.0, np.arange(-56, 3))  # 2**-56 .. 4
    uni = np.arange(4.0, 760.0, 8.0)
    breaks = np.unique(np.concatenate([geo, uni]))
    return breaks[:-1], breaks[1:]


_MOMENT_A, _MOMENT_B = _moment_panels()
_MOMENT_Y0 = _MOMENT_A[0]


def moment_quadrature(density_c, tail_c, xs, spec=DEFAULT_SPEC, chunk=256):
    """``int_0^1 r**x w(r) dr`` for each ``x > 0``.

    Substituting ``r = exp(-y/x)`` turns ``r**x`` into ``exp(-y)``; the part
    ``y < 2**-56`` (where ``r**x == 1`` to machine precision) is the tail
    ``tail_c(1 - r)`` and the rest is integrated on fixed panels in ``y``.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    out = np.empty(xs.size)
    npan = _MOMENT_A.size

    def f(y, x):
        t = -np.expm1(-y / x)
        with np.errstate(all="ignore"):
            v = np.exp(-y * (1.0 + 1.0 / x)) * density_c(t) / x
        return np.where(np.exp(-y) == 0.0, 0.0, v)

    for start in range(0, xs.size, chunk):
        xc = xs[start:start + chunk]
        head = tail_c(-np.expm1(-_MOMENT_Y0 / xc))
        a = np.tile(_MOMENT_A, xc.size)
        b = np.tile(_MOMENT_B, xc.size)
        px = np.repeat(xc, npan)
        # first pass fixes an absolute tolerance relative to the moment size
        rough, _ = integrate_panels(f, a, b, params=(px,), max_refinements=0)
        rough_tot = head + rough.reshape(xc.size, npan).sum(axis=1)
        atol = np.repeat(spec.relative_tolerance * 1e-3 * np.abs(rough_tot), npan)
        vals, _ = integrate_panels(
            f, a, b, params=(px,), rtol=spec.relative_tolerance,
            atol=np.maximum(atol, spec.absolute_tolerance), max_refinements=spec.max_refinements,
        )
        out[start:start + chunk] = head + vals.reshape(xc.size, npan).sum(axis=1)
    return out

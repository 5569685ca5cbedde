"""Bergman kernels via odd moments, mode projections, and dyadic block norms.

The kernel of the weighted Bergman space is

    B(u) = sum_n u**n / (2 omega_{2n+1}),    u = conj(z) zeta.

Moments are log-convex in the exponent, so the coefficient ratios
``a_{n+1} / a_n = omega_{2n+1} / omega_{2n+3}`` decrease in ``n``.  Hence the
tail after ``N`` terms is bounded by the geometric series
``a_{N+1} |u|**(N+1) / (1 - q)`` with ``q = |u| a_{N+2} / a_{N+1}``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import _backend
from .classes import rho_sequence
from .errors import AccuracyError, DegeneracyError, DomainError, ParameterError
from .operators import PolynomialProfile
from .quadrature import CanonicalTail, integrate_panels
from .weights import as_pair, sigma_weight

N_MAX = 1 << 14
U_CAP = 0.999
GRID_CAP = 256
P_PLUS_OVERSAMPLE = 8


class KernelSeries:
    """Truncated odd-moment series of the Bergman kernel of ``w``."""

    def __init__(self, weight, n_max=N_MAX, u_cap=U_CAP):
        self.weight = weight
        self.n_max = int(n_max)
        self.u_cap = float(u_cap)
        self._lock = threading.Lock()
        self._m = np.empty(0)

    def odd_moments(self, count):
        """``omega_{2n+1}`` for ``n < count`` (cached, grown by doubling)."""
        count = int(count)
        if count > self.n_max + 3:
            raise AccuracyError(f"odd moments requested beyond n_max={self.n_max}")
        with self._lock:
            have = self._m.size
            if count > have:
                new = min(max(count, 2 * have, 64), self.n_max + 3)
                xs = 2.0 * np.arange(have, new) + 1.0
                m = self.weight.moments(xs)
                if np.any(~(m > 0)):
                    raise DegeneracyError("odd moments must be positive")
                self._m = np.concatenate([self._m, m])
            return self._m[:count]

    def coefficients(self, count):
        return 0.5 / self.odd_moments(count)

    def tail_bound(self, absu, N):
        """Certified bound on ``sum_{n > N} a_n |u|**n``."""
        a = self.coefficients(N + 3)
        q = absu * a[N + 2] / a[N + 1]
        if q >= 1:
            return math.inf
        with np.errstate(under="ignore"):
            lead = math.exp(math.log(a[N + 1]) + (N + 1) * math.log(absu)) if absu > 0 else 0.0
        return lead / (1.0 - q)

    def evaluate(self, u, tol=1e-12):
        """``B(u)`` with the certified truncation tail at most ``tol``.

        Returns ``(values, N, bounds)``.
        """
        u = np.atleast_1d(np.asarray(u, dtype=complex))
        au = np.abs(u)
        if np.any(au > self.u_cap):
            raise DomainError(f"|u| must not exceed {self.u_cap}")
        out = np.empty(u.shape, dtype=complex)
        Ns = np.empty(u.shape, dtype=int)
        bounds = np.empty(u.shape)
        order = np.argsort(au.ravel())
        N = 16
        for i in order:
            a = float(au.flat[i])
            while True:
                coef = self.coefficients(N + 1)
                val = _backend.series_horner(coef, np.array([u.flat[i]]))[0]
                bnd = self.tail_bound(a, N)
                if bnd <= tol:
                    break
                if N >= self.n_max:
                    raise AccuracyError(
                        f"kernel series needs more than {self.n_max} terms at |u|={a:.6g}",
                        estimate=val, error=bnd)
                N = min(2 * N, self.n_max)
            out.flat[i] = val
            Ns.flat[i] = N
            bounds.flat[i] = bnd
        return out, Ns, bounds


def kernel_eval(K, u, tol=1e-12):
    """Kernel value at ``u = conj(z) zeta``; a scalar for scalar input."""
    scalar = np.ndim(u) == 0
    vals, _, _ = K.evaluate(u, tol)
    return complex(vals[0]) if scalar else vals


# -- mode projections -------------------------------------------------------------

def _radial_integral(g):
    """``int_0^1 g(s) ds`` for integrands singular only at s = 1."""
    return CanonicalTail(lambda t: g(1.0 - t)).total()


def project_mode(w, g, k):
    """Coefficient ``c`` with ``P(g(|z|) e^{ik theta}) = c z**k``.

    ``c = int_0^1 g(s) s**(k+1) w(s) ds / w_{2k+1}``; negative modes are
    annihilated (``c = 0``).  Polynomial ``g`` uses exact moments so that
    ``g(s) = s**k`` gives ``c = 1`` exactly.
    """
    k = int(k)
    if k < 0:
        return 0.0
    den = w.moment(2 * k + 1)
    if isinstance(g, PolynomialProfile):
        xs = np.arange(g.coeffs.size) + k + 1.0
        nz = g.coeffs != 0
        if not nz.any():
            return 0.0
        num = float(np.sum(g.coeffs[nz] * w.moments(xs[nz])))
        return num / den

    # subtracting the value at s = 1 leaves an integrand that vanishes where w
    # is singular; the constant part uses the exact total mass
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        g1 = float(np.asarray(g(np.array([1.0])), dtype=float)[0])
    if not math.isfinite(g1):
        g1 = 0.0

    def integrand(s):
        with np.errstate(invalid="ignore", over="ignore"):
            v = (np.asarray(g(s), dtype=float) * s ** (k + 1) - g1) * w.density(np.clip(s, 0, np.nextafter(1, 0)))
        return np.nan_to_num(v)

    num = _radial_integral(integrand) + g1 * float(w.tail(0.0))
    return num / den


@dataclass
class PolarField:
    """Complex samples on Gauss-Legendre radii times uniform angles.

    ``weights[i]`` are the radial weights for ``dA = r dr dtheta / pi``
    after the angular average, so ``sum_i weights[i] = 1``.
    """

    r: np.ndarray
    theta: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss(cls, nr, ntheta, func=None):
        if nr > GRID_CAP or ntheta > GRID_CAP:
            raise ParameterError(f"field resolution is capped at {GRID_CAP} x {GRID_CAP}")
        x, wx = np.polynomial.legendre.leggauss(int(nr))
        r = 0.5 * (x + 1.0)
        wr = 0.5 * wx * 2.0 * r  # 2 r dr integrates to 1
        th = 2 * np.pi * np.arange(int(ntheta)) / int(ntheta)
        vals = np.zeros((r.size, th.size), dtype=complex)
        if func is not None:
            z = r[:, None] * np.exp(1j * th[None, :])
            vals = np.asarray(func(z), dtype=complex) * np.ones_like(z)
        return cls(r, th, vals, wr)

    def with_values(self, values):
        return PolarField(self.r, self.theta, np.asarray(values, dtype=complex), self.weights)

    @property
    def z(self):
        return self.r[:, None] * np.exp(1j * self.theta[None, :])

    def integral(self):
        """``int f dA`` over the disc."""
        return complex(np.sum(self.weights[:, None] * self.values) / self.theta.size)


def project_grid(w, F, absolute_kernel=False, tol=1e-8):
    """``P f`` (or ``P+ f`` with ``absolute_kernel``) sampled on the field's nodes.

    The kernel depends on ``conj(z) zeta`` only, so the angular integral is a
    circular convolution.  ``P`` is applied mode by mode with quadrature
    moments; ``P+`` samples ``|B|`` on the radial pairs by an aliased FFT of
    the kernel series (closed form for standard weights).
    """
    nr, nt = F.values.shape
    if nr > GRID_CAP or nt > GRID_CAP:
        raise ParameterError(f"field resolution is capped at {GRID_CAP} x {GRID_CAP}")
    s = F.r
    dens = w.density(s)
    # radial measure omega(s) s ds (the factor 2 and 1/pi combine with the angular mean)
    rad = F.weights * dens / 2.0
    if not absolute_kernel:
        modes = np.fft.fft(F.values, axis=1) / nt  # F_k(s)
        kmax = nt // 2
        ks = np.arange(kmax)
        m = w.moments(2.0 * ks + 1.0)
        # c_k = int s**(k+1) omega F_k ds / omega_{2k+1}; rad carries s omega ds
        num = ((rad[:, None] * s[:, None] ** ks[None, :]) * modes[:, :kmax]).sum(axis=0)
        c = num / m
        out_modes = np.zeros((nr, nt), dtype=complex)
        out_modes[:, :kmax] = c[None, :] * s[:, None] ** ks[None, :]
        return F.with_values(np.fft.ifft(out_modes * nt, axis=1))
    rho = s[:, None] * s[None, :]
    m = P_PLUS_OVERSAMPLE * nt
    ker = _abs_kernel_on_circle(w, rho, m, tol)  # (nr, nr, m) in psi = phi - theta
    # Fourier coefficients of |B| on each circle; f is band-limited to nt modes
    kh = np.fft.fft(ker, axis=2).real / m
    freq = np.fft.fftfreq(nt, 1.0 / nt).astype(int)
    kh = kh[:, :, freq % m]
    fh = np.fft.fft(F.values, axis=1) / nt
    # P+ f(r_i, theta) = 2 sum_j rad_j mean_phi f(s_j, phi) |B(r_i s_j e^{i(phi - theta)})|
    conv = np.einsum("j,ijk,jk->ik", rad, kh, fh)
    out = 2.0 * np.fft.ifft(conv * nt, axis=1)
    return F.with_values(out)


def _abs_kernel_on_circle(w, rho, nt, tol):
    psi = 2 * np.pi * np.arange(nt) / nt
    u = rho[..., None] * np.exp(1j * psi)
    closed = w.kernel_closed_form(u)
    if closed is not None:
        return np.abs(closed)
    K = KernelSeries(w)
    flat = rho.ravel()
    out = np.empty((flat.size, nt))
    for i, r0 in enumerate(flat):
        # aliased coefficients: b_k = sum_{n = k mod nt} a_n r0**n
        N = 16
        while True:
            bnd = K.tail_bound(r0, N) if r0 > 0 else 0.0
            if bnd <= tol or N >= K.n_max:
                break
            N = min(2 * N, K.n_max)
        if bnd > tol:
            raise AccuracyError(f"P+ kernel series bound {bnd:.3g} exceeds tolerance at |u|={r0:.6g}",
                                estimate=None, error=bnd)
        terms = K.coefficients(N + 1) * r0 ** np.arange(N + 1)
        pad = (-terms.size) % nt
        b = np.concatenate([terms, np.zeros(pad)]).reshape(-1, nt).sum(axis=0)
        out[i] = np.abs(np.fft.ifft(b) * nt)
    return out.reshape(rho.shape + (nt,))


# -- adjoint identity -------------------------------------------------------------------

@dataclass
class AdjointResult:
    factor: object  # callable s -> radial factor of L(m_n)
    norm_direct: float
    norm_identity: float
    divergent: bool

    @property
    def relative_gap(self):
        if self.divergent:
            return 0.0
        return abs(self.norm_direct - self.norm_identity) / abs(self.norm_identity)


def adjoint_monomial(omega, nu, n, p):
    """Radial factor of ``L(m_n)`` and its ``L^{p'}_nu`` norm, by direct
    quadrature and by the moment identity
    ``norm**p' = 2 (nu_{2n+1} / omega_{2n+1})**p' sigma_{n p' + 1}``."""
    pair = as_pair(p)
    n = int(n)
    if n < 0:
        raise ParameterError("n must be >= 0")
    q = pair.p_conj
    ratio = nu.moment(2 * n + 1) / omega.moment(2 * n + 1)

    def factor(s):
        s = np.asarray(s, dtype=float)
        return ratio * omega.density(s) / nu.density(s) * s ** n

    sigma = sigma_weight(omega, nu, pair)
    if not sigma.integrable:
        return AdjointResult(factor, math.inf, math.inf, True)
    ident = (2.0 * ratio ** q * sigma.moment(n * q + 1)) ** (1.0 / q)

    def integrand(t):
        s = 1.0 - t
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            lg = (math.log(ratio) + omega.log_density_c(t) - nu.log_density_c(t)
                  + n * np.log1p(-t))
            v = np.exp(q * lg + np.log(s) + nu.log_density_c(t))
        return np.nan_to_num(v, nan=0.0, posinf=np.inf)

    tail = CanonicalTail(integrand)
    direct = (2.0 * tail.total()) ** (1.0 / q) if not tail.divergent else math.inf
    return AdjointResult(factor, float(direct), float(ident), False)


# -- coefficient vectors and blocks ------------------------------------------------------

def canonical_coeffs(c):
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    nz = np.flatnonzero(c != 0)
    return c[: nz[-1] + 1] if nz.size else c[:0]


def i_omega(w, g):
    """Coefficientwise product with ``omega_{2k+1}``."""
    g = canonical_coeffs(g)
    if g.size == 0:
        return g
    return g * w.moments(2.0 * np.arange(g.size) + 1.0)


def hardy_norm(coeffs, p, oversample=8):
    """``H^p`` norm of a polynomial from uniform samples on the unit circle."""
    c = canonical_coeffs(coeffs)
    if c.size == 0:
        return 0.0
    m = 1 << int(math.ceil(math.log2(max(2, oversample * c.size))))
    vals = np.fft.ifft(np.concatenate([c, np.zeros(m - c.size)])) * m
    return float(np.mean(np.abs(vals) ** p) ** (1.0 / p))


def decomposition_for(w, degree):
    """Dyadic decomposition whose blocks cover indices ``0..degree``."""
    n_max = 8
    while True:
        d = rho_sequence(w, n_max)
        if d.top > degree or d.truncated:
            return d
        n_max *= 2


def hardy_block_norms(d, f, p):
    """``||Delta_n f||_{H^p}`` for every nonempty block ``I(n)``; returns {n: norm}."""
    p = float(p)
    if not 1 <= p < math.inf:
        raise ParameterError("p must lie in [1, inf)")
    c = canonical_coeffs(f)
    if c.size > d.top:
        raise ParameterError("coefficient vector exceeds the computed block range")
    out = {}
    for n, lo, hi in d.blocks:
        if lo >= c.size:
            out[n] = 0.0
            continue
        blk = np.zeros(min(hi, c.size), dtype=complex)
        blk[lo:] = c[lo:hi]
        out[n] = hardy_norm(blk, p)
    return out


def bergman_norm_p(nu, f, p, oversample=8):
    """``||f||_{A^p_nu}`` for a polynomial: exact modes for p = 2, otherwise
    radial quadrature of circle means of ``|f|**p``."""
    c = canonical_coeffs(f)
    if c.size == 0:
        return 0.0
    p = float(p)
    if p == 2.0:
        m = nu.moments(2.0 * np.arange(c.size) + 1.0)
        return float(math.sqrt(np.sum(np.abs(c) ** 2 * 2.0 * m)))
    mth = 1 << int(math.ceil(math.log2(max(2, oversample * c.size))))
    padded = np.concatenate([c, np.zeros(mth - c.size)])
    k = np.arange(mth)

    def circle_mean(s):
        s = np.asarray(s)
        vals = np.fft.ifft(padded[None, :] * s.ravel()[:, None] ** k[None, :], axis=1) * mth
        return np.mean(np.abs(vals) ** p, axis=1).reshape(s.shape)

    # the boundary mean times the total mass is exact; the rest vanishes at s = 1
    m1 = 2.0 * float(circle_mean(np.array([1.0]))[0])

    def g(t):
        s = 1.0 - t
        return (2.0 * s * circle_mean(s) - m1) * nu.density_c(t)

    lo = np.ldexp(1.0, -np.arange(1, 61))
    hi = np.ldexp(1.0, -np.arange(0, 60))
    mass = m1 * float(nu.tail(0.0))
    vals, _ = integrate_panels(g, lo, hi, rtol=1e-10, atol=1e-14 * mass / lo.size)
    return float((np.sum(vals) + mass) ** (1.0 / p))


def block_norm_equivalence(omega, nu, f, p, d=None):
    """``sum_n nu.tail1(rho_n) ||Delta_n f||_{H^p}**p / ||f||_{A^p_nu}**p``."""
    c = canonical_coeffs(f)
    if c.size == 0:
        raise DegeneracyError("ratio undefined for f = 0")
    d = d or decomposition_for(omega, c.size - 1)
    norms = hardy_block_norms(d, c, p)
    tails = nu.tail1_c(d.t)
    num = sum(tails[n] * v ** p for n, v in norms.items())
    den = bergman_norm_p(nu, c, p) ** p
    return float(num / den)

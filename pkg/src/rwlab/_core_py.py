"""Pure numpy versions of the compiled kernels in ``_core.pyx``."""

import numpy as np

_SERIES_CUT = 1e-2


def cell_weights(a, b, c):
    """Weights ``(w_a, w_b)`` with ``int_a^b f(u) / (u + c) du = w_a f(a) + w_b f(b)``
    for ``f`` linear on [a, b]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    d = (b - a) / (a + c)
    small = d < _SERIES_CUT
    ds = np.where(small, d, 0.0)
    wa_s = ds * (1 / 2 - ds * (1 / 6 - ds * (1 / 12 - ds * (1 / 20 - ds * (1 / 30 - ds * (1 / 42 - ds / 56))))))
    wb_s = ds * (1 / 2 - ds * (1 / 3 - ds * (1 / 4 - ds * (1 / 5 - ds * (1 / 6 - ds * (1 / 7 - ds / 8))))))
    dl = np.where(small, 1.0, d)
    L = np.log1p(dl)
    wa_l = ((1.0 + dl) * L - dl) / dl
    wb_l = (dl - L) / dl
    return np.where(small, wa_s, wa_l), np.where(small, wb_s, wb_l)


def stieltjes_matrix(u, tail):
    """Matrix of ``f -> int_0^{u_0} f(u) / (u + u_i) du`` on nodes ``u`` (descending).

    ``tail[i]`` multiplies ``f_n`` for the cell (0, u_n].
    """
    u = np.asarray(u, dtype=float)
    n = u.size
    a, b = u[1:], u[:-1]
    wa, wb = cell_weights(a[None, :], b[None, :], u[:, None])
    out = np.zeros((n, n))
    out[:, :-1] += wb
    out[:, 1:] += wa
    out[:, -1] += tail
    return out


def stieltjes_apply(u, f, tail):
    """``S @ f`` without forming the matrix; ``f`` may be (n,) or (n, m)."""
    u = np.asarray(u, dtype=float)
    f = np.asarray(f, dtype=float)
    vec = f.ndim == 1
    F = f[:, None] if vec else f
    a, b = u[1:], u[:-1]
    out = np.empty((u.size, F.shape[1]))
    for i in range(u.size):
        wa, wb = cell_weights(a, b, u[i])
        out[i] = wb @ F[:-1] + wa @ F[1:] + tail[i] * F[-1]
    return out[:, 0] if vec else out


def series_horner(coef, z):
    """``sum_n coef[n] z**n`` for complex ``z`` by Horner's rule."""
    z = np.asarray(z, dtype=complex)
    acc = np.zeros(z.shape, dtype=complex)
    for c in coef[::-1]:
        acc = acc * z + c
    return acc

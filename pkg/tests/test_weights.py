import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from rwlab.errors import DomainError, ParameterError
from rwlab.weights import (ExponentPair, eval_weight, exponential, log_weight, moment, parse_weight,
                           power_tail_weight, product, sigma_weight, standard, tabulated, tail, tail1)

# Independent high-precision oracles (mpmath, 40 digits).  Log-weight values
# add the closed tail1 to a bounded remainder integrated by mpmath, since a
# direct quadrature of the 1/log**2 tail misses mass beyond its last node.
ORACLE = {
    "log2_tail_0.5": 0.48068976116495741,
    "log3_tail_0": 0.63833970760380944,
    "log2_moment_3": 0.29817368116159704,
    "exp11_tail_0.5": 0.018767130910245226,
    "exp11_tail1_0.5": 0.011233785960791253,
    "exp11_moment_3": 0.0071528416946034238,
    "exp2h_tail_0.9": 3.9625826160048608e-5,
    "exp2h_tail_0.2": 0.035998580856081397,
    "std2.5_moment_7": 0.005328005328005328,
    "stdm0.5_tail_0.3": 1.2661036727794991,
    "powtail_std1_h_tail_0.3": 0.12542366666666667,
    "prod_std1_log2_tail1_0.7": 0.046946337066844549,
    "prod_std1_log2_moment_5": 0.031357942231870388,
}


# -- documented examples ----------------------------------------------------------

def test_eval_examples():
    assert eval_weight(standard(0), 0.5) == 1.0
    assert eval_weight(log_weight(2), 0.0) == pytest.approx(1.0, rel=1e-15)
    assert eval_weight(exponential(1, 1), 0.5) == pytest.approx(math.exp(-2.0), rel=1e-15)


def test_eval_domain():
    with pytest.raises(DomainError):
        eval_weight(standard(0), 1.0)
    with pytest.raises(DomainError):
        tail(standard(0), -0.1)


def test_tail_examples():
    assert tail(standard(0), 0.5) == pytest.approx(0.5, rel=1e-15)
    assert tail(standard(1), 0.0) == pytest.approx(2.0 / 3.0, rel=1e-15)
    assert tail1(standard(0), 0.6) == pytest.approx(0.32, rel=1e-15)
    assert tail1(standard(1), 0.0) == pytest.approx(0.25, rel=1e-15)
    t = np.array([1.0, 0.7, 0.1, 1e-9])
    np.testing.assert_allclose(log_weight(2).tail1_c(t), 0.5 / np.log(math.e / (t * (2 - t))), rtol=1e-13)


def test_moment_examples():
    assert moment(standard(0), 3) == pytest.approx(0.25, rel=1e-15)
    assert moment(standard(1), 1) == pytest.approx(0.25, rel=1e-15)
    assert moment(standard(0.5), 2) == pytest.approx(0.5 * special.beta(1.5, 1.5), rel=1e-14)


@pytest.mark.parametrize("key,fn,tol", [
    ("log2_tail_0.5", lambda: tail(log_weight(2), 0.5), 1e-12),
    ("log3_tail_0", lambda: tail(log_weight(3), 0.0), 1e-12),
    ("log2_moment_3", lambda: moment(log_weight(2), 3), 1e-8),
    ("exp11_tail_0.5", lambda: tail(exponential(1, 1), 0.5), 1e-13),
    ("exp11_tail1_0.5", lambda: tail1(exponential(1, 1), 0.5), 1e-13),
    ("exp11_moment_3", lambda: moment(exponential(1, 1), 3), 1e-12),
    ("exp2h_tail_0.9", lambda: tail(exponential(2, 0.5), 0.9), 1e-12),
    ("exp2h_tail_0.2", lambda: tail(exponential(2, 0.5), 0.2), 1e-12),
    ("std2.5_moment_7", lambda: moment(standard(2.5), 7), 1e-13),
    ("stdm0.5_tail_0.3", lambda: tail(standard(-0.5), 0.3), 1e-13),
    ("powtail_std1_h_tail_0.3", lambda: tail(power_tail_weight(standard(1), 0.5), 0.3), 1e-12),
    ("prod_std1_log2_tail1_0.7", lambda: tail1(product(standard(1), log_weight(2)), 0.7), 1e-10),
    ("prod_std1_log2_moment_5", lambda: moment(product(standard(1), log_weight(2)), 5), 1e-10),
])
def test_frozen_oracles(key, fn, tol):
    assert float(fn()) == pytest.approx(ORACLE[key], rel=tol)


def test_power_tail_examples():
    w = standard(0)
    nu0 = power_tail_weight(w, 0.0)
    r = np.linspace(0, 0.99, 7)
    np.testing.assert_allclose(nu0.density(r), w.density(r), rtol=1e-15)
    nu1 = power_tail_weight(w, 1.0)
    np.testing.assert_allclose(nu1.density(r), (1 - r ** 2) / 2, rtol=1e-14)
    np.testing.assert_allclose(nu1.tail1(r), ((1 - r ** 2) / 2) ** 2 / 2, rtol=1e-13)
    assert power_tail_weight(w, -0.5).tail1(0.0) == pytest.approx(0.5 ** 0.5 / 0.5, rel=1e-13)
    with pytest.raises(ParameterError):
        power_tail_weight(w, -1.0)


def test_sigma_examples():
    r = np.linspace(0, 0.95, 9)
    s = sigma_weight(standard(1), standard(1), 3.0)
    np.testing.assert_allclose(s.density(r), standard(1).density(r), rtol=1e-14)
    s = sigma_weight(standard(1), standard(0), 2.0)
    np.testing.assert_allclose(s.density(r), (1 - r ** 2) ** 2, rtol=1e-14)
    s = sigma_weight(standard(0), standard(3), 2.0)
    np.testing.assert_allclose(s.density(r), (1 - r ** 2) ** -3.0, rtol=1e-14)
    assert not s.integrable
    assert math.isinf(s.tail1(0.5))


def test_sigma_generic_matches_simplified():
    om, nu = standard(1), standard(0.5)
    t = np.geomspace(1, 1e-6, 9)
    a = sigma_weight(om, nu, 2.5, simplify=True)
    b = sigma_weight(om, nu, 2.5, simplify=False)
    np.testing.assert_allclose(b.density_c(t), a.density_c(t), rtol=1e-13)
    np.testing.assert_allclose(b.tail1_c(t), a.tail1_c(t), rtol=1e-9)


def test_sigma_zero_conventions():
    r = np.array([0.0, 0.2, 0.4, 0.6, 0.8, 0.95])
    om = tabulated(r, [1, 1, 0, 0, 1, 1])
    nu = tabulated(r, [1, 0, 0, 1, 1, 1])
    s = sigma_weight(om, nu, 2.0)
    d = s.density(np.array([0.2, 0.5, 0.9]))
    assert math.isinf(d[0])  # nu = 0 < omega
    assert d[1] == 0.0  # both vanish
    assert np.isfinite(d[2]) and d[2] > 0


def test_exponent_pair():
    e = ExponentPair(3.0)
    assert 1 / e.p + 1 / e.p_conj == pytest.approx(1.0, abs=1e-16)
    assert e.conjugate().p_conj == pytest.approx(3.0)
    with pytest.raises(ParameterError):
        ExponentPair(1.0)


def test_parameter_errors():
    with pytest.raises(ParameterError):
        log_weight(1.0)
    with pytest.raises(ParameterError):
        exponential(0.0, 1.0)
    with pytest.raises(ParameterError):
        standard(-1.0)


def test_tabulated_exact_tails(tmp_path):
    r = np.array([0.0, 0.5, 0.9])
    v = np.array([2.0, 1.0, 1.0])
    w = tabulated(r, v)
    # piecewise linear to 0 at r = 1
    assert w.tail(0.0) == pytest.approx(0.5 * 1.5 + 0.4 * 1.0 + 0.1 * 0.5, rel=1e-15)
    assert w.tail1(0.9) == pytest.approx(10 * (0.5 - 1 / 3 - 0.9 ** 2 / 2 + 0.9 ** 3 / 3), rel=1e-12)
    assert w.moment(0) == pytest.approx(w.tail(0.0), rel=1e-14)
    path = tmp_path / "w.csv"
    path.write_text("r,value\n0,2\n0.5,1\n0.9,1\n")
    w2 = parse_weight(f"table:{path}")
    assert w2.tail(0.3) == pytest.approx(w.tail(0.3), rel=1e-15)


def test_tabulated_rejects_bad_tables():
    with pytest.raises(ParameterError):
        tabulated([0.0, 0.5], [1.0, -1.0])
    with pytest.raises(ParameterError):
        tabulated([0.5, 0.2], [1.0, 1.0])
    with pytest.raises(ParameterError):
        tabulated([0.0, 0.5], [1.0, 0.0])


def test_parse_roundtrip():
    for spec in ["std:gamma=1.5", "log:alpha=2", "exp:c=1,k=2", "powtail:base=(std:gamma=1),alpha=0.5",
                 "prod:(std:gamma=1)*(log:alpha=3)", "std:gamma=0,scale=2"]:
        w = parse_weight(spec)
        assert parse_weight(w.to_spec()) == w
    with pytest.raises(ParameterError):
        parse_weight("nope:x=1")
    with pytest.raises(ParameterError):
        parse_weight("std:beta=1")


def test_product_of_standard_collapses():
    w = product(standard(1), standard(0.5))
    assert w.kind == "standard" and w.gamma == 1.5


# -- properties -------------------------------------------------------------------

WEIGHTS = {
    "std0": standard(0), "std1": standard(1), "std-0.5": standard(-0.5), "log2": log_weight(2),
    "exp": exponential(1, 1), "powtail": power_tail_weight(standard(1), 0.5),
    "prod": product(standard(1), log_weight(2)), "table": tabulated([0, 0.3, 0.8], [1, 3, 2]),
}
radius = st.floats(0.0, 0.999999, allow_nan=False)


@pytest.mark.parametrize("name", sorted(WEIGHTS))
@given(a=radius, b=radius)
def test_tails_nonincreasing(name, a, b):
    w = WEIGHTS[name]
    lo, hi = min(a, b), max(a, b)
    assert w.tail(lo) >= w.tail(hi) * (1 - 1e-12)
    assert w.tail1(lo) >= w.tail1(hi) * (1 - 1e-12)
    assert w.tail1(lo) <= w.tail(lo) * (1 + 1e-12)


@pytest.mark.parametrize("name", sorted(WEIGHTS))
def test_tail_additivity_against_quadrature(name):
    w = WEIGHTS[name]
    t = np.array([0.9, 0.5, 0.1, 1e-3, 1e-6])
    tol = 1e-6 if name in ("log2", "prod") else 1e-10
    np.testing.assert_allclose(w.tail1_c(t), w.quad_tail1_c(t), rtol=tol)
    np.testing.assert_allclose(w.tail_c(t), w.quad_tail_c(t), rtol=tol)


@pytest.mark.parametrize("name", ["std0", "std1", "std-0.5", "log2", "exp", "powtail"])
@given(r=st.floats(0.05, 0.95))
def test_tail1_derivative(name, r):
    w = WEIGHTS[name]
    h = 1e-5
    fd = (w.tail1(r + h) - w.tail1(r - h)) / (2 * h)
    rw = r * w.density(r)
    assert abs(fd + rw) <= 1e-6 * (1 + rw)


@pytest.mark.parametrize("name", sorted(WEIGHTS))
def test_moments_nonincreasing(name):
    w = WEIGHTS[name]
    xs = np.array([0.0, 0.5, 1, 2, 5, 10, 50, 200])
    m = w.moments(xs)
    assert np.all(np.diff(m) <= 0)
    assert m[0] == pytest.approx(w.tail(0.0), rel=1e-9)


@pytest.mark.parametrize("name", ["std0", "std1", "log2", "exp", "table"])
def test_moments_against_quadrature(name):
    w = WEIGHTS[name]
    xs = np.array([1.0, 3.0, 17.0, 301.0])
    tol = 1e-7 if name == "log2" else 1e-10
    np.testing.assert_allclose(w.moments(xs), w.quad_moments(xs), rtol=tol)


@given(alpha=st.floats(-0.9, 4.0), r=st.floats(0, 0.9999999))
def test_power_tail_identity(alpha, r):
    for base in (standard(0), standard(1.5), log_weight(2)):
        nu = power_tail_weight(base, alpha)
        exact = base.tail1(r) ** (1 + alpha) / (1 + alpha)
        assert nu.tail1(r) == pytest.approx(exact, rel=1e-8)


@given(c=st.floats(0.01, 100.0), r=st.floats(0, 0.999))
def test_scaling_homogeneity(c, r):
    for w in (standard(0.5), log_weight(3), exponential(1, 1)):
        ws = w.scaled(c)
        assert ws.tail(r) == pytest.approx(c * w.tail(r), rel=1e-14)
        assert ws.tail1(r) == pytest.approx(c * w.tail1(r), rel=1e-14)
        assert ws.moment(3.0) == pytest.approx(c * w.moment(3.0), rel=1e-14)


def test_moment_cache_concurrent_readers():
    from concurrent.futures import ThreadPoolExecutor

    w = log_weight(2.5)
    xs = np.arange(1.0, 40.0)
    with ThreadPoolExecutor(8) as ex:
        outs = list(ex.map(lambda _: w.moments(xs), range(16)))
    for o in outs:
        np.testing.assert_array_equal(o, outs[0])

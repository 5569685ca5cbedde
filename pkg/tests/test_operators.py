import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rwlab.errors import DegeneracyError, ParameterError
from rwlab.grids import operator_grid
from rwlab.operators import (Profile, apply_calderon, apply_H, apply_Hstar, apply_Mmax, apply_S,
                             chain_violations, increasing_profiles, level_points, lp_norm, operator_matrix,
                             parse_profile, random_profiles, weak_type_check)
from rwlab.weights import log_weight, power_tail_weight, standard

T = operator_grid(256)
W0 = standard(0)

# mpmath oracles (30 digits) for omega = 1 - s**2 and f(s) = s**2
S_AT_05 = 0.41259407453439972
H_AT_03 = 0.39333333333333333
HSTAR_AT_08 = 0.76330249506396273


def ones(t=T):
    return Profile(values=np.ones(t.size), t=t)


def grid_with(points, n):
    return np.unique(np.concatenate([operator_grid(n), points]))[::-1]


def test_profile_validation():
    with pytest.raises(ParameterError):
        Profile(radii=[0.5, 0.2], values=[1, 1])
    with pytest.raises(ParameterError):
        Profile(radii=[0.0, 0.5], values=[1, 1, 1])
    p = Profile(radii=[0.0, 0.5], values=[1.0, 3.0])
    assert p(0.25) == pytest.approx(2.0)


def test_parse_profile(tmp_path):
    assert parse_profile("const:2")(0.3) == pytest.approx(2.0)
    assert parse_profile("poly:1,0,2")(0.5) == pytest.approx(1.5)
    path = tmp_path / "g.csv"
    path.write_text("r,g\n0,1\n0.5,2\n0.9,3\n")
    assert parse_profile(f"table:{path}")(0.7) == pytest.approx(2.5)
    with pytest.raises(ParameterError):
        parse_profile("poly:a")


def test_constant_examples():
    f = ones()
    np.testing.assert_allclose(apply_H(W0, f).values, 1.0, rtol=1e-13)
    np.testing.assert_allclose(apply_Mmax(W0, f).values, 1.0, rtol=1e-13)
    r = 1 - T
    np.testing.assert_allclose(apply_Hstar(W0, f).values, -np.log(T * (2 - T)), rtol=1e-7, atol=1e-12)
    np.testing.assert_allclose(apply_S(W0, f).values, np.log((2 - r ** 2) / (T * (2 - T))), rtol=1e-7)
    assert apply_S(W0, f).values[0] == pytest.approx(math.log(2), rel=1e-12)
    assert apply_Hstar(W0, f).values[0] == 0.0


@pytest.mark.parametrize("w", [log_weight(2), standard(2.5), power_tail_weight(standard(0), 1.0)])
def test_constant_closed_forms_any_weight(w):
    # S 1 = log((u0 + u) / u) and H* 1 = log(u0 / u) with u = w.tail1
    u = w.tail1_c(T)
    f = ones()
    np.testing.assert_allclose(apply_S(w, f).values, np.log((u[0] + u) / u), rtol=1e-7)
    np.testing.assert_allclose(apply_Hstar(w, f).values[1:], np.log(u[0] / u[1:]), rtol=1e-7)


def test_zero_profile():
    f = ones().with_values(np.zeros(T.size))
    for op in (apply_H, apply_Hstar, apply_S, apply_Mmax):
        assert np.all(op(W0, f).values == 0)


def test_nonconstant_oracles():
    t = grid_with([0.5, 0.7, 0.2], 1024)
    f = Profile.from_function(lambda r: r ** 2, t)
    w = standard(1)
    i = {x: int(np.flatnonzero(t == x)[0]) for x in (0.5, 0.7, 0.2)}
    assert apply_S(w, f).values[i[0.5]] == pytest.approx(S_AT_05, rel=5e-5)
    assert apply_H(w, f).values[i[0.7]] == pytest.approx(H_AT_03, rel=5e-5)
    assert apply_Hstar(w, f).values[i[0.2]] == pytest.approx(HSTAR_AT_08, rel=5e-5)


def test_second_order_convergence():
    errs = []
    for n in (256, 1024):
        t = grid_with([0.5], n)
        f = Profile.from_function(lambda r: r ** 2, t)
        errs.append(abs(apply_S(standard(1), f).values[np.flatnonzero(t == 0.5)[0]] / S_AT_05 - 1))
    assert errs[1] < errs[0] / 10


def test_H_of_s_at_zero():
    f = Profile.from_function(lambda r: r, operator_grid(2048))
    assert apply_H(W0, f).values[0] == pytest.approx(2 / 3, rel=1e-4)


def test_maximal_examples():
    # a node just outside the jump keeps the interpolation cell negligible
    t = grid_with([0.75, 0.5, 0.5 + 1e-10], 1024)
    chi = Profile(values=(t <= 0.5).astype(float), t=t)
    m = apply_Mmax(W0, chi)
    i = int(np.flatnonzero(t == 0.75)[0])
    assert m.values[i] == pytest.approx(0.8, rel=1e-6)
    f = Profile.from_function(lambda r: (1 - r ** 2) ** -0.5, T)
    np.testing.assert_allclose(apply_Mmax(W0, f).values, 2 * (T * (2 - T)) ** -0.5, rtol=1e-3)


def test_lp_norm_examples():
    assert lp_norm(W0, ones(), 2) == pytest.approx(1.0, rel=1e-12)
    f = Profile.from_function(lambda r: r, operator_grid(2048))
    assert lp_norm(W0, f, 2) == pytest.approx(math.sqrt(0.5), rel=1e-5)
    assert lp_norm(log_weight(2), ones(), 3) == pytest.approx(1.0, rel=1e-12)


def test_level_points_examples():
    f = Profile.from_function(lambda r: (1 - r ** 2) ** -0.5, operator_grid(1024))
    lp = level_points(W0, f, 2, 8)
    assert lp.b[2] == pytest.approx(math.sqrt(0.75), rel=1e-4)
    for k, v in lp.bk1.items():
        assert v == pytest.approx(0.25, rel=1e-3)
    with pytest.raises(DegeneracyError):
        level_points(W0, ones(), 1, 3)


def test_weak_type_examples():
    res = weak_type_check(W0, ones(), 2.0)
    assert res.b is None and res.level_measure == 0 and res.bound == pytest.approx(0.25)
    f = Profile.from_function(lambda r: (1 - r ** 2) ** -0.5, operator_grid(1024))
    res = weak_type_check(W0, f, 4.0)
    assert res.b == pytest.approx(math.sqrt(3) / 2, rel=1e-3)
    assert res.level_measure == pytest.approx(0.125, rel=1e-3)
    assert res.holds
    z = weak_type_check(W0, ones().with_values(np.zeros(T.size)), 1.0)
    assert z.level_measure == 0 and z.bound == 0


def test_matrices_nonnegative_and_consistent():
    f = random_profiles(T, 1, 3)[0]
    for op, fn in (("h", apply_H), ("hstar", apply_Hstar), ("stieltjes", apply_S), ("calderon", apply_calderon)):
        _, m = operator_matrix(op, standard(1), T)
        assert np.all(m >= 0)
    _, m = operator_matrix("hstar", standard(1), T)
    np.testing.assert_allclose(m @ f.values, apply_Hstar(standard(1), f).values, rtol=1e-12, atol=1e-14)


profile_seeds = st.integers(0, 2 ** 32 - 1)


@pytest.mark.parametrize("w", [standard(0), standard(1), log_weight(2), power_tail_weight(standard(0), 0.5)])
@given(seed=profile_seeds)
def test_pointwise_chains(w, seed):
    f = random_profiles(T, 1, seed, tail_range=(0.0, 1.0))[0]
    v = chain_violations(w, f)
    assert v["maximal_stieltjes"] <= 1e-8
    assert v["calderon_lower"] <= 1e-8
    assert v["calderon_upper"] <= 1e-8


def test_double_stieltjes_can_exceed_calderon():
    # 2 S <= H + H* is not claimed; it fails for f = 1 near r = 1
    assert chain_violations(W0, ones())["double_stieltjes_excess"] > 0


@given(seed=profile_seeds, c=st.floats(0.0, 10.0))
def test_maximal_properties(seed, c):
    f, g = random_profiles(T, 2, seed)
    w = standard(1)
    mf, mg = apply_Mmax(w, f).values, apply_Mmax(w, g).values
    assert np.all(np.diff(mf) >= -1e-12 * mf.max())
    assert np.all(apply_Mmax(w, f.with_values(f.values + g.values)).values <= (mf + mg) * (1 + 1e-12) + 1e-300)
    np.testing.assert_allclose(apply_Mmax(w, f.with_values(c * f.values)).values, c * mf, rtol=1e-12, atol=1e-300)
    assert np.all(mf >= apply_H(w, f).values * (1 - 1e-12))


@given(seed=profile_seeds, a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_linearity(seed, a, b):
    f, g = random_profiles(T, 2, seed)
    w = log_weight(3)
    for op in (apply_H, apply_Hstar, apply_S):
        lhs = op(w, f.with_values(a * f.values + b * g.values)).values
        rhs = a * op(w, f).values + b * op(w, g).values
        scale = abs(a) * op(w, f).values.max() + abs(b) * op(w, g).values.max() + 1e-300
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


@given(seed=profile_seeds)
def test_level_points_inequalities(seed):
    f = increasing_profiles(T, 1, seed)[0]
    for w in (standard(0), standard(1)):
        lp = level_points(w, f, -4, 40)
        ks = sorted(lp.u)
        assert all(lp.u[a] > lp.u[b] for a, b in zip(ks, ks[1:]))
        assert all(lp.b[a] <= lp.b[b] for a, b in zip(ks, ks[1:]))
        assert all(v <= 0.5 + 1e-6 for v in lp.bk1.values())
        assert all(v <= 2 + 1e-6 for v in lp.bk2.values())


@given(seed=profile_seeds, lam=st.floats(1e-3, 1e3))
def test_weak_type_bound(seed, lam):
    f = random_profiles(T, 1, seed)[0]
    for w in (standard(0), standard(1)):
        assert weak_type_check(w, f, lam).holds

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rwlab.errors import AccuracyError
from rwlab.quadrature import CanonicalTail, geometric_breaks, integrate_panels


def test_panels_polynomial_exact():
    a = np.array([0.0, 0.5])
    b = np.array([0.5, 1.0])
    vals, err = integrate_panels(lambda x: x ** 2, a, b)
    assert vals.sum() == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert np.all(err >= 0)


def test_panels_endpoint_singularity():
    vals, _ = integrate_panels(lambda x: np.log(x), np.array([1e-300]), np.array([1.0]), rtol=1e-12)
    assert vals[0] == pytest.approx(-1.0, rel=1e-10)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=20), st.floats(0.05, 3.0))
def test_panels_exact_on_polynomials(coeffs, hi):
    c = np.array(coeffs)
    vals, _ = integrate_panels(lambda x: np.polynomial.polynomial.polyval(x, c), np.array([0.0]), np.array([hi]))
    exact = np.polynomial.polynomial.polyval(hi, np.polynomial.polynomial.polyint(c))
    assert vals[0] == pytest.approx(exact, rel=1e-11, abs=1e-11 * (1 + np.abs(c).sum() * hi ** len(c)))


def test_geometric_breaks_ratio():
    br = geometric_breaks(1e-6, 1.0, 2.0)
    assert br[0] == pytest.approx(1e-6) and br[-1] == pytest.approx(1.0)
    assert np.all(br[1:] / br[:-1] <= 2.0 * (1 + 1e-12))


def test_canonical_tail_sqrt():
    G = CanonicalTail(lambda t: 0.5 / np.sqrt(t))
    t = np.array([1.0, 0.25, 1e-6, 1e-200])
    assert G.total() == pytest.approx(1.0, rel=1e-13)
    np.testing.assert_allclose(G(t), np.sqrt(t), rtol=1e-12)


def test_canonical_tail_logarithmic_decay():
    # G(t) = 1 / log(e / t): panel integrals decay only algebraically
    G = CanonicalTail(lambda t: 1.0 / (t * np.log(math.e / t) ** 2))
    t = np.array([1.0, 1e-3, 1e-12])
    np.testing.assert_allclose(G(t), 1.0 / np.log(math.e / t), rtol=1e-6)


def test_canonical_tail_divergent():
    G = CanonicalTail(lambda t: 1.0 / t)
    assert G.divergent
    assert math.isinf(G.total())


def test_canonical_tail_reports_error():
    G = CanonicalTail(lambda t: 0.5 / np.sqrt(t))
    v, e = G(np.array([0.5]), return_error=True)
    assert e[0] < 1e-12


def test_accuracy_error_carries_estimate():
    err = AccuracyError("x", estimate=1.5, error=0.1)
    assert err.estimate == 1.5 and err.error == 0.1

import math

import numpy as np
import pytest

from mginf_mrp import quadrature as q


def test_gauss_nodes_match_legendre():
    nodes, weights = np.polynomial.legendre.leggauss(7)
    np.testing.assert_allclose(q._NODES[1::2], nodes, atol=1e-15)
    np.testing.assert_allclose(q._GW[1::2], weights, atol=1e-15)


@pytest.mark.parametrize("degree", range(0, 24))
def test_kronrod_rule_exact_for_polynomials(degree):
    # 15-point Kronrod extension of 7-point Gauss integrates degree <= 22 exactly (odd 23 by symmetry)
    exact = 0.0 if degree % 2 else 2.0 / (degree + 1)
    assert q._KW @ q._NODES**degree == pytest.approx(exact, abs=1e-15)


def test_smooth_integral():
    res = q.integrate(lambda t: np.exp(-t), 0.0, 40.0)
    assert res.value == pytest.approx(1.0 - math.exp(-40.0), abs=1e-13)
    assert res.error < 1e-10


def test_kink_at_breakpoint():
    f = lambda t: np.abs(t - 0.3)
    res = q.integrate(f, 0.0, 1.0, points=[0.3])
    assert res.value == pytest.approx(0.5 * (0.3**2 + 0.7**2), abs=1e-14)


def test_kink_without_breakpoint_still_converges():
    res = q.integrate(lambda t: np.sqrt(np.abs(t - 1 / 3)), 0.0, 1.0, abs_tol=1e-9)
    exact = (2 / 3) * ((1 / 3) ** 1.5 + (2 / 3) ** 1.5)
    assert res.value == pytest.approx(exact, abs=1e-8)


def test_reversed_limits_and_empty_interval():
    assert q.integrate(np.cos, 1.0, 0.0).value == pytest.approx(-math.sin(1.0), abs=1e-14)
    assert q.integrate(np.cos, 2.0, 2.0).value == 0.0


def test_budget_exhaustion_raises():
    with pytest.raises(q.QuadratureError):
        q.integrate(lambda t: np.sin(1 / (t + 1e-9)), 0.0, 1.0, abs_tol=1e-14, max_evals=2000)


def test_infinite_limits_rejected():
    with pytest.raises(ValueError):
        q.integrate(np.exp, 0.0, math.inf)

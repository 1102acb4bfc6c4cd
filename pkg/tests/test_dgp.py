"""Simulators checked against their own recursions and unit-root structure."""

import numpy as np
import pytest

from hdcoint import (FactorDgpParams, ParameterError, VecmParams,
                     random_vecm_params, simulate_factor_dgp,
                     simulate_mixed_orders, simulate_vecm)
from hdcoint.dgp import check_i1_conditions


def _white_noise_params(n):
    return VecmParams(a=-np.eye(n), b=np.eye(n), mu=np.zeros(n),
                      tau=np.zeros(n), sigma=np.eye(n))


def test_r_equals_n_identity_design_is_white_noise():
    # dz_t = -z_{t-1} + e_t collapses to z_t = e_t
    params = _white_noise_params(3)
    panel, eps = simulate_vecm(params, 150, seed=4, return_innovations=True)
    assert np.allclose(panel.values, eps[-150:], atol=1e-12)


def test_r_zero_is_pure_random_walk():
    n = 3
    params = VecmParams(a=np.zeros((n, 0)), b=np.zeros((n, 0)),
                        mu=np.zeros(n), tau=np.zeros(n), sigma=np.eye(n))
    panel, eps = simulate_vecm(params, 100, seed=1, return_innovations=True)
    dz = np.diff(panel.values, axis=0)
    assert np.allclose(dz, eps[-99:], atol=1e-12)


def test_recursion_holds_exactly_on_stored_innovations():
    params = random_vecm_params(4, 2, p=1, seed=9)
    panel, eps = simulate_vecm(params, 80, burn_in=50, seed=9,
                               return_innovations=True)
    t_idx = np.arange(1.0, 81.0)[:, None]
    zeta = panel.values - params.mu - params.tau * t_idx
    pi = params.a @ params.b.T
    for t in range(2, 80):
        dz_lag = zeta[t - 1] - zeta[t - 2]
        implied = pi @ zeta[t - 1] + params.phi[0] @ dz_lag + eps[t]
        assert np.allclose(zeta[t] - zeta[t - 1], implied, atol=1e-10)


def test_cointegration_residual_is_stationary_by_variance_ratio():
    b = np.array([[1.0], [-1.0]])
    params = VecmParams(a=-0.3 * b, b=b, mu=np.zeros(2), tau=np.zeros(2),
                        sigma=np.eye(2))
    growth_resid, growth_level = [], []
    for seed in range(20):
        panel = simulate_vecm(params, 400, seed=seed)
        z = panel.values
        resid = z @ b[:, 0]
        # variance of increments over expanding halves: I(1) grows, I(0) flat
        growth_resid.append(resid[200:].var() / resid[:200].var())
        growth_level.append(z[200:, 0].var() / max(z[:200, 0].var(), 1e-12))
    assert np.median(growth_resid) < 3.0
    assert np.median(growth_level) > np.median(growth_resid)


class TestI1Conditions:
    def test_univariate_unit_root(self):
        params = VecmParams(a=np.zeros((1, 0)), b=np.zeros((1, 0)),
                            mu=np.zeros(1), tau=np.zeros(1),
                            sigma=np.eye(1))
        diag = check_i1_conditions(params)
        assert diag.n_unit_roots == 1 and diag.is_i1

    def test_stationary_design_has_no_unit_roots(self):
        diag = check_i1_conditions(_white_noise_params(3))
        assert diag.n_unit_roots == 0

    def test_random_admissible_params_have_n_minus_r_unit_roots(self):
        for seed in range(5):
            params = random_vecm_params(5, 2, p=1, seed=seed)
            diag = check_i1_conditions(params)
            assert diag.n_unit_roots == 3 and diag.is_i1


class TestFactorDgp:
    def test_lambda_zero_is_pure_idiosyncratic(self):
        params = FactorDgpParams(lam=np.zeros((4, 1)),
                                 factor_orders=(1,), idio_orders=(0,) * 4)
        panel, f, u = simulate_factor_dgp(params, 100, seed=2)
        assert np.allclose(panel.values, u, atol=1e-12)

    def test_single_i1_factor_no_idio_cointegrates_pairwise(self):
        lam = np.array([[1.0], [2.0], [-1.5]])
        params = FactorDgpParams(lam=lam, factor_orders=(1,),
                                 idio_orders=(0,) * 3, idio_scale=np.zeros(3))
        panel, f, _ = simulate_factor_dgp(params, 300, seed=3)
        z = panel.values
        spread = z[:, 0] / lam[0, 0] - z[:, 1] / lam[1, 0]
        assert np.allclose(spread, 0.0, atol=1e-8)

    def test_order_rule_both_components(self):
        # series is I(0) only if both its idio part and factor load are I(0)
        lam = np.array([[1.0], [0.0]])
        params = FactorDgpParams(lam=lam, factor_orders=(1,),
                                 idio_orders=(0, 0))
        panel, f, u = simulate_factor_dgp(params, 2000, seed=5)
        z = panel.values
        first_half = slice(0, 1000)
        second_half = slice(1000, 2000)
        # loading on the I(1) factor makes series 0 wander
        assert z[second_half, 0].var() + z[first_half, 0].var() > \
            4 * (u[second_half, 1].var() + u[first_half, 1].var())


def test_mixed_orders_shapes_and_seeding():
    panel, orders = simulate_mixed_orders(2, 3, 1, 120, seed=8)
    assert panel.values.shape == (120, 6)
    assert orders.tolist() == [0, 0, 1, 1, 1, 2]
    panel2, _ = simulate_mixed_orders(2, 3, 1, 120, seed=8)
    assert np.array_equal(panel.values, panel2.values)


def test_invariant_violation_names_condition():
    with pytest.raises(ParameterError, match="rank"):
        VecmParams(a=np.zeros((2, 1)), b=np.ones((2, 1)),
                   mu=np.zeros(2), tau=np.zeros(2), sigma=np.eye(2))

"""Quadrature oracle self-checks against closed forms."""
import numpy as np
import pytest
from scipy import special

from ergolat import channel as ch
from ergolat import quadrature as q

RAY = ch.rayleigh()


def test_rayleigh_inv_one_plus_closed_form():
    # E[1/(1+rho X)] = (1/rho) e^{1/rho} E1(1/rho) for X ~ Exp(1)
    for rho in (0.25, 1.0, 4.0, 16.0):
        cf = np.exp(1 / rho) * special.exp1(1 / rho) / rho
        assert q.expect_inv_one_plus(RAY, rho) == pytest.approx(cf, rel=1e-9)


def test_rayleigh_capacity_closed_form():
    for rho in (1.0, 4.0):
        cf = np.exp(1 / rho) * special.exp1(1 / rho) * np.log2(np.e)
        assert q.expect_log2_one_plus(RAY, rho) == pytest.approx(cf, rel=1e-9)


def test_nakagami_moments():
    nak = ch.nakagami(2.0)
    assert q.expect_inv_power(nak) == pytest.approx(2.0, rel=1e-9)
    assert q.expect_power_sq(nak) == pytest.approx(1.5, rel=1e-9)
    assert q.expect_power_sq(RAY) == pytest.approx(2.0, rel=1e-9)
    assert q.expect_inv_power(RAY) == np.inf


def test_e1_vs_scipy():
    for z in (0.01, 0.25, 1.0, 4.0, 10.0):
        assert q.e1_integral(z) == pytest.approx(special.exp1(z), rel=1e-11)


def test_gamma_coefficients_symmetry_and_degeneracy():
    g1, g2, g3, g4 = q.gamma_coefficients(RAY, 0.25, 0.25)
    assert g1 == pytest.approx(g2, abs=1e-9)
    assert g3 == pytest.approx(g4, abs=1e-9)
    # rho2 = 0 collapses gamma2 and gamma4
    g1b, g2b, g3b, g4b = q.gamma_coefficients(RAY, 0.25, 0.0)
    assert g2b == pytest.approx(0.0, abs=1e-12)
    assert g4b == pytest.approx(0.0, abs=1e-12)
    assert g3b == pytest.approx(g1b, rel=1e-8)  # no interference left


def test_mac_gap_deterministic_is_zero():
    det = ch.fixed([[1.0]])
    assert q.mac_two_user_gap(det, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_siso_gap_positive_for_fading():
    assert q.siso_gap(RAY, 1.0) > 0
    assert q.siso_gap(ch.fixed([[1.0]]), 1.0) == pytest.approx(0.0, abs=1e-12)

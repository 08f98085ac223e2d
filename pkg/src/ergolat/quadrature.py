"""Quadrature oracles for the single-antenna expectations.

Every SISO rate/capacity/gap expression is an expectation over the fading
power X = |h|^2 (Exp(1) for Rayleigh, Gamma(m, 1/m) for Nakagami-m).  These
adaptive Gauss-Kronrod evaluations are the independent cross-check for the
Monte Carlo estimators: they never touch the sampling path.

Integration runs on [0, x_max] with x_max placed where the remaining density
mass is below 1e-13, so the neglected tail of every bounded-integrand
expectation is below 1e-12; the slowly-growing log integrand gets an extra
margin factor.
"""
from __future__ import annotations

import numpy as np
from scipy import integrate, stats

from .channel import FadingModel

LOG2E = np.log2(np.e)
TAIL_MASS = 1e-13


class QuadratureError(ValueError):
    pass


def _power_dist(model: FadingModel):
    """scipy distribution of X = |h|^2 for scalar fading, or None if fixed."""
    if model.kind == "rayleigh":
        return stats.gamma(a=1.0, scale=1.0)
    if model.kind == "nakagami":
        return stats.gamma(a=model.m, scale=1.0 / model.m)
    if model.kind == "fixed":
        h = model.fixed_matrix()
        if h.shape != (1, 1):
            raise QuadratureError("scalar quadrature needs a 1x1 fixed matrix")
        return None
    raise QuadratureError(f"no power density for {model.kind!r}")


def _fixed_power(model: FadingModel) -> float:
    return float(np.abs(model.fixed_matrix()[0, 0]) ** 2)


def expect_power(model: FadingModel, fn, tail_factor: float = 1.0) -> float:
    """E[fn(X)] over the fading power distribution."""
    dist = _power_dist(model)
    if dist is None:
        return float(fn(_fixed_power(model)))
    xmax = dist.isf(TAIL_MASS) * tail_factor
    val, _ = integrate.quad(lambda x: fn(x) * dist.pdf(x), 0.0, xmax,
                            limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


def expect_inv_one_plus(model: FadingModel, rho: float) -> float:
    """E[1 / (1 + rho X)]"""
    return expect_power(model, lambda x: 1.0 / (1.0 + rho * x))


def expect_log2_one_plus(model: FadingModel, rho: float) -> float:
    """E[log2(1 + rho X)]"""
    return expect_power(model, lambda x: np.log1p(rho * x), tail_factor=2.0) * LOG2E


def expect_x_over_one_plus(model: FadingModel, rho: float) -> float:
    """E[X / (1 + rho X)]"""
    return expect_power(model, lambda x: x / (1.0 + rho * x), tail_factor=2.0)


def expect_inv_power(model: FadingModel) -> float:
    """E[1/X]; infinite for Rayleigh and Nakagami m <= 1."""
    if model.kind == "rayleigh" or (model.kind == "nakagami" and model.m <= 1.0):
        return np.inf
    return expect_power(model, lambda x: 1.0 / x)


def expect_power_sq(model: FadingModel) -> float:
    """E[X^2] = E[|h|^4]"""
    return expect_power(model, lambda x: x * x, tail_factor=2.0)


def siso_rate(model: FadingModel, rho: float) -> float:
    """-log2 E[1/(1+rho X)], the complex-channel scheme rate, bits."""
    return -np.log2(expect_inv_one_plus(model, rho))


def siso_capacity(model: FadingModel, rho: float) -> float:
    return expect_log2_one_plus(model, rho)


def siso_gap(model: FadingModel, rho: float) -> float:
    return siso_capacity(model, rho) + np.log2(expect_inv_one_plus(model, rho))


def snr_penalty(model: FadingModel, rho: float) -> float:
    return expect_x_over_one_plus(model, rho) / expect_inv_one_plus(model, rho)


def e1_integral(z: float) -> float:
    """Exponential integral E1(z) = int_z^inf e^-t / t dt, by quadrature."""
    if z <= 0:
        raise QuadratureError("E1 defined for z > 0")
    val, _ = integrate.quad(lambda u: np.exp(-(z + u)) / (z + u), 0.0, np.inf,
                            limit=400, epsabs=1e-300, epsrel=1e-13)
    return val


# -- two-user expectations ---------------------------------------------------

def _sum_power_dist(model: FadingModel):
    """Distribution of X1 + X2 (Gamma families close under i.i.d. sums)."""
    if model.kind == "rayleigh":
        return stats.gamma(a=2.0, scale=1.0)
    if model.kind == "nakagami":
        return stats.gamma(a=2.0 * model.m, scale=1.0 / model.m)
    raise QuadratureError(f"no sum-power density for {model.kind!r}")


def expect_log2_one_plus_sum(model: FadingModel, rho: float) -> float:
    """E[log2(1 + rho X1 + rho X2)] for i.i.d. users."""
    if model.kind == "fixed":
        return np.log2(1.0 + 2.0 * rho * _fixed_power(model))
    dist = _sum_power_dist(model)
    xmax = dist.isf(TAIL_MASS) * 2.0
    val, _ = integrate.quad(lambda s: dist.pdf(s) * np.log1p(rho * s), 0.0, xmax,
                            limit=400, epsabs=1e-13, epsrel=1e-12)
    return val * LOG2E


def _expect_2d(model: FadingModel, fn) -> float:
    """E[fn(X1, X2)] by 2-D quadrature over i.i.d. fading powers."""
    if model.kind == "fixed":
        x = _fixed_power(model)
        return float(fn(x, x))
    dist = _power_dist(model)
    xmax = dist.isf(TAIL_MASS)
    val, _ = integrate.dblquad(
        lambda x2, x1: fn(x1, x2) * dist.pdf(x1) * dist.pdf(x2),
        0.0, xmax, 0.0, xmax, epsabs=1e-11, epsrel=1e-11,
    )
    return val


def expect_interference_frac(model: FadingModel, rho: float) -> float:
    """E[(1 + rho X1) / (1 + rho X1 + rho X2)]"""
    return _expect_2d(model, lambda x1, x2: (1 + rho * x1) / (1 + rho * x1 + rho * x2))


def gamma_coefficients(model: FadingModel, rho1: float, rho2: float):
    """(gamma1, gamma2, gamma3, gamma4) of the two-user SISO region, bits."""
    g1 = np.log2(expect_inv_one_plus(model, rho1))
    g2 = np.log2(expect_inv_one_plus(model, rho2))
    if rho1 == 0:
        g3 = 0.0
    else:
        g3 = np.log2(_expect_2d(model, lambda x1, x2: 1.0 / (1 + rho1 * x1 / (1 + rho2 * x2))))
    if rho2 == 0:
        g4 = 0.0
    else:
        g4 = np.log2(_expect_2d(model, lambda x1, x2: 1.0 / (1 + rho2 * x2 / (1 + rho1 * x1))))
    return g1, g2, g3, g4


def mac_two_user_gap(model: FadingModel, rho: float) -> float:
    """Sum-rate gap of the symmetric two-user SISO MAC, bits."""
    csum = expect_log2_one_plus_sum(model, rho)
    return csum + np.log2(expect_interference_frac(model, rho) * expect_inv_one_plus(model, rho))

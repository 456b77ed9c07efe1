import math

import numpy as np
import pytest
from scipy import integrate, optimize, special

from errors import ConvergenceError, DomainError, PreconditionError
from specfun import (I_P2, SQRT_PI, Fn01, QuadratureSpec, density_delta, er, er_inv, holder_norm, integral_I,
                     integrate_1d, reg_inc_beta, reg_inc_gamma)


def test_er_symmetry_and_midpoint():
  x = np.linspace(-6.0, 6.0, 25)
  assert er(0.0) == 0.5
  assert np.allclose(er(x) + er(-x), 1.0, atol=1e-15)
  assert isinstance(er(1.0), float)


def test_er_inv_centre_and_deep_tail():
  assert abs(er_inv(0.5)) <= 1e-15
  assert er_inv(er(-20.0)) == pytest.approx(-20.0, rel=1e-12)
  assert er_inv(er(1.3)) == pytest.approx(1.3, rel=1e-12)
  assert er_inv(0.75) == pytest.approx(-er_inv(0.25), rel=1e-14)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_er_inv_outside_open_interval(p):
  with pytest.raises(DomainError):
    er_inv(p)


def test_density_delta():
  assert density_delta(0.5) == pytest.approx(SQRT_PI, rel=1e-15)
  t = np.array([1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8])
  scaled = density_delta(t) * 2.0 * t * np.sqrt(np.log(1.0 / t))
  # delta(t) ~ 1 / (2 t sqrt(ln 1/t)) near 0
  assert np.all(np.diff(scaled) < 0.0)
  assert 1.0 < scaled[-1] < 1.1


def test_incomplete_gamma_and_beta():
  x = np.array([0.0, 0.3, 2.0, 10.0])
  assert np.allclose(reg_inc_gamma(1.0, x), -np.expm1(-x), rtol=1e-14, atol=0.0)
  assert reg_inc_beta(0.37, 1.0, 1.0) == pytest.approx(0.37, rel=1e-14)
  # I_x(a, b) = 1 - I_(1-x)(b, a)
  assert reg_inc_beta(0.2, 3.0, 5.0) == pytest.approx(1.0 - reg_inc_beta(0.8, 5.0, 3.0), rel=1e-13)
  with pytest.raises(DomainError):
    reg_inc_gamma(0.0, 1.0)
  with pytest.raises(DomainError):
    reg_inc_beta(1.2, 1.0, 1.0)


@pytest.mark.parametrize("rule", ["adaptive", "gauss", "trapezoid"])
def test_integrate_1d_rules(rule):
  q = QuadratureSpec(rule)
  assert integrate_1d(np.sin, 0.0, math.pi, q) == pytest.approx(2.0, rel=1e-8)


def test_integrate_1d_errors():
  with pytest.raises(DomainError):
    integrate_1d(np.sin, 0.0, math.inf)
  with pytest.raises(ConvergenceError):
    integrate_1d(lambda x: 1.0 / x, 0.0, 1.0, QuadratureSpec(max_refinements=20))
  with pytest.raises(DomainError):
    QuadratureSpec("simpson")
  assert integrate_1d(np.sin, 1.0, 1.0) == 0.0


def test_integral_I_of_variance_polynomial():
  assert I_P2 == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-15)
  assert integral_I(Fn01.g(1)) == pytest.approx(I_P2, rel=1e-9)
  assert integral_I(Fn01.polynomial([0.0, 1.0, -1.0])) == pytest.approx(I_P2, rel=1e-9)


def test_integral_I_reflection_invariant():
  f = Fn01.g(2)
  assert integral_I(f.reflected()) == pytest.approx(integral_I(f), rel=1e-9)


def test_integral_I_entropy_positive_and_finite():
  value = integral_I(Fn01.entropy())
  assert 0.0 < value < 2.0


def test_integral_I_needs_declared_decay():
  with pytest.raises(PreconditionError):
    integral_I(Fn01(lambda t: t))
  with pytest.raises(PreconditionError):
    integral_I(lambda t: t * (1.0 - t))


def test_fn01_validation():
  with pytest.raises(DomainError):
    Fn01(lambda t: t * (1.0 - t), holder_exponent=0.5)
  with pytest.raises(DomainError):
    Fn01(lambda t: t * (1.0 - t), holder_exponent=1.5, vanishes_at_endpoints=True)
  with pytest.raises(DomainError):
    Fn01.g(0.0)
  assert Fn01.polynomial([1.0, 2.0]).holder_exponent is None
  assert Fn01.h(0.3).holder_exponent == 0.3
  assert Fn01.g(3).holder_exponent == 1.0


def test_holder_norm_bounds():
  p = 0.5
  f = Fn01.h(p)
  norm = holder_norm(f, p)
  t = np.linspace(1e-6, 1.0 - 1e-6, 2001)
  values = np.abs(f(t))
  assert np.max(values) <= norm
  assert np.all(values <= 2.0 ** p * norm * (t * (1.0 - t)) ** p + 1e-15)
  with pytest.raises(DomainError):
    holder_norm(f, 0.0)


def test_er_and_er_inv_against_oracles():
  tail, _ = integrate.quad(lambda t: math.exp(-t * t), -math.inf, 1.0, epsabs=1e-15, epsrel=1e-13)
  assert er(1.0) == pytest.approx(tail / SQRT_PI, rel=1e-12)
  root = optimize.bisect(lambda x: float(er(x)) - 0.9999, 0.0, 6.0, xtol=1e-14, maxiter=200)
  assert er_inv(0.9999) == pytest.approx(root, rel=1e-11)


def test_incomplete_functions_against_quadrature():
  lower, _ = integrate.quad(lambda t: t ** 2.5 * math.exp(-t), 0.0, 2.0, epsabs=1e-15, epsrel=1e-13)
  assert reg_inc_gamma(3.5, 2.0) == pytest.approx(lower / math.gamma(3.5), rel=1e-11)
  partial, _ = integrate.quad(lambda t: t ** 2 * (1.0 - t) ** 6, 0.0, 0.4, epsabs=1e-15, epsrel=1e-13)
  assert reg_inc_beta(0.4, 3.0, 7.0) == pytest.approx(partial / special.beta(3.0, 7.0), rel=1e-11)


def test_integral_I_of_entropy_by_both_routes():
  f = Fn01.entropy()
  value = integral_I(f)
  by_x, _ = integrate.quad(lambda x: float(f(er(x))), -math.inf, math.inf, epsabs=1e-13, epsrel=1e-11, limit=200)
  # f(t) delta(t) is symmetric about t = 1/2
  half, _ = integrate.quad(lambda t: float(f(t) * density_delta(t)), 0.0, 0.5, epsabs=1e-13, epsrel=1e-10, limit=400)
  by_t = 2.0 * half
  assert value == pytest.approx(by_x, rel=1e-8)
  assert value == pytest.approx(by_t, rel=1e-6)

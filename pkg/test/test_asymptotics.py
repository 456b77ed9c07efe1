import math
import types

import numpy as np
import pytest

import asymptotics
from asymptotics import ConicDomain, ModelQuadraticForm, PhaseData, TaylorData
from errors import ConvergenceError, DomainError, PreconditionError

ROOT_HALF_PI = math.sqrt(0.5 * math.pi)
# b_0..b_4 of int_0^inf t exp(-k (t^2/2 + t^3/10)) dt in units of k^-1
EXPECTED_B = (1.0, -0.3 * ROOT_HALF_PI, 0.24, -945.0 * ROOT_HALF_PI / 6000.0, 0.192)


@pytest.fixture
def problem():
  remainder = TaylorData({(3, 0): 0.1}, 1, 1)
  phase = PhaseData(np.array([[1.0]]), remainder)
  amplitude = TaylorData({(0, 0): 1.0}, 1, 1)
  domain = ConicDomain(1, 1, np.array([[0.0, 1.0], [1.0, -1.0]]), "0<=s<=t")
  return phase, amplitude, domain


def test_halfline_moments():
  domain = ConicDomain.halfspace(1)
  values, errors = asymptotics.conic_moments([(0,), (1,), (2,), (3,)], np.array([[1.0]]), domain)
  assert np.allclose(values.real, [ROOT_HALF_PI, 1.0, ROOT_HALF_PI, 2.0], rtol=1e-10, atol=0.0)
  assert np.all(values.imag == 0.0)
  assert np.all(errors == 0.0)
  negated, _ = asymptotics.conic_moments([(0,), (1,), (2,), (3,)], np.array([[1.0]]), domain.negated())
  assert np.allclose(negated.real, [ROOT_HALF_PI, -1.0, ROOT_HALF_PI, -2.0], rtol=1e-10, atol=0.0)


def test_sectioned_moment(problem):
  _, _, domain = problem
  value, error = asymptotics.conic_moment((3,), 0, np.array([[1.0]]), domain)
  assert value.real == pytest.approx(3.0 * ROOT_HALF_PI, rel=1e-10)
  assert error == 0.0


def test_series_coefficients(problem):
  phase, amplitude, domain = problem
  series = asymptotics.series_coefficients(phase, amplitude, domain, 4)
  assert series.leading_power == 1.0
  assert np.allclose(series.coefficients.real, EXPECTED_B, rtol=1e-9, atol=0.0)

  flipped = asymptotics.series_coefficients(phase, amplitude, domain.negated(), 4)
  signs = np.array([1.0, -1.0, 1.0, -1.0, 1.0])
  assert np.allclose(flipped.coefficients.real, signs * np.array(EXPECTED_B), rtol=1e-9, atol=0.0)


def test_series_needs_taylor_degree(problem):
  phase, _, domain = problem
  short = TaylorData({(0, 0): 1.0}, 1, 1, degree=5)
  with pytest.raises(PreconditionError):
    asymptotics.series_coefficients(phase, short, domain, 4)
  with pytest.raises(DomainError):
    asymptotics.series_coefficients(phase, TaylorData({(0,): 1.0}, 1), domain, 2)


def test_series_rejects_low_order_remainder(problem):
  _, amplitude, domain = problem
  # bypasses the PhaseData check on r
  phase = types.SimpleNamespace(hessian=np.array([[1.0]]), remainder=TaylorData({(1, 0): 0.1}, 1, 1))
  with pytest.raises(ConvergenceError):
    asymptotics.series_coefficients(phase, amplitude, domain, 2)


def test_phase_data_validation():
  with pytest.raises(DomainError):
    PhaseData(np.array([[1.0]]), TaylorData({(2,): 1.0}, 1))
  with pytest.raises(DomainError):
    PhaseData(np.array([[-1.0]]), TaylorData({(3,): 1.0}, 1))
  with pytest.raises(DomainError):
    PhaseData(np.eye(2), TaylorData({(3,): 1.0}, 1))
  with pytest.raises(DomainError):
    TaylorData({(1, 2): 1.0}, 1)


def test_oracle_matches_series(problem):
  phase, amplitude, domain = problem
  k = 400
  series = asymptotics.series_coefficients(phase, amplitude, domain, 4)
  value = asymptotics.quadrature_oracle(phase, lambda t, s: 1.0, domain, k)
  assert value.real == pytest.approx(series.evaluate(k).real, rel=1e-5)
  assert abs(value.imag) < 1e-12


def test_remainder_decays_with_next_power(problem):
  phase, amplitude, domain = problem
  ks = [100, 200, 400, 800]
  series = asymptotics.series_coefficients(phase, amplitude, domain, 4)
  values = [asymptotics.quadrature_oracle(phase, lambda t, s: 1.0, domain, k).real for k in ks]
  slopes = asymptotics.remainder_slopes(ks, values, series, 2)
  # leading power 1 plus the first dropped half power 3/2
  assert np.all(slopes >= 2.3)
  assert np.all(slopes <= 2.7)


def test_oracle_needs_one_variable():
  domain = ConicDomain.halfspace(2)
  phase = PhaseData(np.eye(2), TaylorData({(3, 0): 0.1}, 2))
  with pytest.raises(PreconditionError):
    asymptotics.quadrature_oracle(phase, lambda t, s: 1.0, domain, 100)


def test_fit_expansion_recovers_coefficients():
  ks = np.array([100.0, 200.0, 400.0, 800.0, 1600.0])
  values = ks ** -1.0 * (1.0 + 0.5 * ks ** -0.5 - 0.25 / ks)
  fit = asymptotics.fit_expansion(ks, values, 1.0, 3)
  assert np.allclose(fit.coefficients.real, [1.0, 0.5, -0.25], atol=1e-8)
  assert fit.residual_norm < 1e-10
  assert fit.to_dict()["powers"] == [0, 1, 2]

  integer = asymptotics.fit_expansion(ks, ks ** -1.0 * (2.0 - 3.0 / ks), 1.0, 2, powers="integer")
  assert integer.powers == (0, 2)
  assert np.allclose(integer.coefficients.real, [2.0, -3.0], atol=1e-8)


def test_fit_expansion_preconditions():
  ks = [100, 200, 400]
  with pytest.raises(PreconditionError):
    asymptotics.fit_expansion(ks, [1.0, 1.0, 1.0], 1.0, 5)
  with pytest.raises(PreconditionError):
    asymptotics.fit_expansion(ks, [1.0, 1.0, 1.0], 1.0, 3)
  # no residual degree of freedom left
  with pytest.raises(PreconditionError):
    asymptotics.fit_expansion(ks, [1.0, 1.0, 1.0], 1.0, 2)
  fit = asymptotics.fit_expansion(ks + [800], [1.0, 1.0, 1.0, 1.0], 0.0, 2)
  assert np.allclose(fit.coefficients.real, [1.0, 0.0], atol=1e-10)
  with pytest.raises(DomainError):
    asymptotics.fit_expansion(ks, [1.0, 1.0, 1.0], 1.0, 1, powers="odd")


def test_model_quadratic_form():
  form = ModelQuadraticForm(3, 1)
  h = form.hessian
  assert h.shape == (6, 6)
  assert np.array_equal(h, h.T)
  assert np.min(np.linalg.eigvalsh(h.real)) > 0.0
  assert h[0, 3] == 0.5j and h[1, 2] == -0.5j
  with pytest.raises(DomainError):
    ModelQuadraticForm(0, 1)


def test_standard_cone():
  domain = ConicDomain.standard(2, 1)
  assert domain.t_dim == 4 and domain.s_dim == 1
  t = np.array([[1.0, 0.0, 2.0, 0.0]])
  assert domain.contains(t, 0.5)[0]
  assert not domain.contains(t, 1.5)[0]
  assert not domain.contains(t, -0.1)[0]
  lo, hi, valid = domain.s_bounds(t)
  assert (lo[0], hi[0], bool(valid[0])) == (0.0, 1.0, True)
  with pytest.raises(PreconditionError):
    ConicDomain(1, 2, np.zeros((1, 3)))


def test_conic_moments_check_hessian():
  with pytest.raises(DomainError):
    asymptotics.conic_moments([(0, 0)], np.eye(3), ConicDomain.halfspace(2))
  with pytest.raises(DomainError):
    asymptotics.conic_moments([(0,)], np.array([[0.0]]), ConicDomain.halfspace(1))


def test_universal_constant_p1():
  constant = asymptotics.universal_constant(1, 1, n_samples=2 ** 16, seed=5)
  closed = (2.0 * math.pi) ** -1.5
  assert constant.route_a == pytest.approx(closed, rel=1e-9)
  assert constant.route_b == pytest.approx(closed, rel=5e-3)
  assert constant.route_b_error < 5e-3 * closed


@pytest.mark.slow
def test_universal_constant_p2():
  constant = asymptotics.universal_constant(2, 1, seed=7, jobs=2)
  assert abs(constant.route_b / constant.route_a - 1.0) < 5e-3

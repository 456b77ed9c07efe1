import math

import numpy as np
import pytest

import models
import spectral
from errors import CutoffError, DivergenceWarning, DomainError, PreconditionError
from models import DomainSpec, Spectrum, TailModel
from specfun import I_P2, Fn01, er, integral_I

# boundary length of the unit disk for mu = 2 dLeb
DISK_BOUNDARY = 2.0 * math.sqrt(2.0) * math.pi


def _rel(actual, predicted):
  return abs(actual - predicted) / abs(predicted)


def test_cylinder_trace_matches_leading_term():
  k = 400
  spec = models.cylinder_spectrum(k)
  actual = spectral.trace_functional(spec, Fn01.g(1))
  assert actual == pytest.approx(math.sqrt(k) * I_P2, rel=1e-8)
  assert spectral.weyl_trace(k, 1, 2.0 * math.pi, Fn01.g(1)) == pytest.approx(math.sqrt(k) * I_P2, rel=1e-9)


def test_trace_without_decay_warns():
  spec = models.bargmann_disk_spectrum(20, 1.0)
  with pytest.warns(DivergenceWarning):
    spectral.trace_functional(spec, Fn01(lambda t: 1.0 - np.asarray(t, dtype=float), name="1-X"))


def test_trace_tail_above_bound():
  values = er(np.arange(-5, 6) / 10.0)
  spec = Spectrum(values, 100, 1, DomainSpec.half_cylinder(), "cylinder", exact=True,
                  tail=TailModel("er", 5, 10.0, ("low", "high")))
  with pytest.raises(CutoffError):
    spectral.trace_functional(spec, Fn01.g(1))


def test_weyl_count_on_disk():
  k, a, b = 800, 0.2, 0.8
  spec = models.bargmann_disk_spectrum(k, 1.0)
  assert spec.domain.boundary_volume == pytest.approx(DISK_BOUNDARY, rel=1e-15)
  actual = spectral.count_eigenvalues(spec, a, b)
  predicted = spectral.weyl_count(k, 1, spec.domain.boundary_volume, a, b)
  assert predicted == pytest.approx(47.61, abs=0.01)
  assert _rel(actual, predicted) < 0.05
  with pytest.raises(DomainError):
    spectral.count_eigenvalues(spec, 0.0, 0.5)


def test_entropy_area_law_on_cylinder():
  k = 400
  spec = models.cylinder_spectrum(k)
  predicted = spectral.weyl_trace(k, 1, 2.0 * math.pi, Fn01.entropy())
  assert spectral.entanglement_entropy(spec) == pytest.approx(predicted, rel=1e-6)


def test_entropy_area_law_on_disk():
  residuals = []
  for k in (200, 400, 800):
    spec = models.bargmann_disk_spectrum(k, 1.0)
    predicted = spectral.weyl_trace(k, 1, spec.domain.boundary_volume, Fn01.entropy())
    residuals.append(_rel(spectral.entanglement_entropy(spec), predicted))
  assert residuals[-1] < 0.02
  assert residuals[-1] < residuals[0]


def test_even_cumulants_on_disk():
  k = 800
  spec = models.bargmann_disk_spectrum(k, 1.0)
  for ell, tolerance in ((2, 0.03), (4, 0.10)):
    predicted = spectral.cumulant_prediction(k, 1, spec.domain.boundary_volume, ell)
    assert _rel(spectral.cumulant(spec, ell), predicted) < tolerance
  assert spectral.cumulant_prediction(k, 1, DISK_BOUNDARY, 2) == pytest.approx(math.sqrt(2.0 * k) * I_P2, rel=1e-9)


def test_odd_cumulants_are_small():
  cylinder = models.cylinder_spectrum(400)
  assert abs(spectral.cumulant(cylinder, 3)) < 1e-10
  disk = models.bargmann_disk_spectrum(400, 1.0)
  ratio = abs(spectral.cumulant(disk, 3)) / spectral.cumulant(disk, 2)
  assert ratio < 400 ** -0.25
  assert spectral.cumulant_prediction(400, 1, DISK_BOUNDARY, 3) == 0.0
  with pytest.raises(DomainError):
    spectral.cumulant_prediction(400, 1, DISK_BOUNDARY, 1)


def test_cumulant_polynomials():
  assert tuple(float(c) for c in spectral.cumulant_polynomial(2).coefficients) == (0.0, 1.0, -1.0)
  assert tuple(float(c) for c in spectral.cumulant_polynomial(3).coefficients) == (0.0, 1.0, -3.0, 2.0)
  p5 = spectral.cumulant_polynomial(5)
  t = np.linspace(0.0, 1.0, 11)
  # P_l(1 - t) = (-1)^l P_l(t)
  assert np.allclose(p5(1.0 - t), -p5(t), atol=1e-14)
  assert spectral.cumulant_polynomial(4).as_fn01().vanishes_at_endpoints
  with pytest.raises(DomainError):
    spectral.cumulant_polynomial(0)


def test_cgf_on_cylinder():
  k = 400
  spec = models.cylinder_spectrum(k)
  for t in (0.5, -1.0, 0.3 + 0.5j):
    actual = spectral.cgf(spec, t)
    predicted = spectral.cgf_prediction(k, 1, 2.0 * math.pi, t)
    assert abs(actual - predicted) <= 1e-6 * abs(predicted)
  assert isinstance(spectral.cgf(spec, 0.5), float)
  assert isinstance(spectral.cgf(spec, 0.5j), complex)


def test_cgf_small_t_expansion():
  spec = models.bargmann_disk_spectrum(400, 1.0)
  kappa = {ell: spectral.cumulant(spec, ell) for ell in (2, 3, 4)}
  t = 0.01
  series = kappa[2] * t ** 2 / 2.0 + kappa[3] * t ** 3 / 6.0 + kappa[4] * t ** 4 / 24.0
  assert spectral.cgf(spec, t) == pytest.approx(series, rel=1e-7)


def test_cgf_strip():
  spec = models.sphere_cap_spectrum(10, 1.0)
  with pytest.raises(DomainError):
    spectral.cgf(spec, 0.1 + 3.2j)
  with pytest.raises(DomainError):
    spectral.cgf_prediction(10, 1, 1.0, math.pi * 1j)


def test_model_variable_cumulant():
  alpha = 0.05
  assert alpha * spectral.model_variable_cumulant(alpha, 2) == pytest.approx(I_P2, rel=1e-9)
  p4 = spectral.cumulant_polynomial(4).as_fn01()
  assert alpha * spectral.model_variable_cumulant(alpha, 4) == pytest.approx(integral_I(p4), rel=1e-8)
  assert spectral.model_variable_cumulant(alpha, 3) == 0.0
  with pytest.raises(DomainError):
    spectral.model_variable_cumulant(0.0, 2)


def test_euler_maclaurin_sum():
  gaussian = lambda x: np.exp(-x ** 2)
  assert spectral.euler_maclaurin_sum(gaussian, 4.0) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
  assert spectral.euler_maclaurin_sum(gaussian, 4.0, offset=0.37) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
  with pytest.raises(DomainError):
    spectral.euler_maclaurin_sum(gaussian, 0.0)


def test_concentration_report_stays_bounded():
  reports = [spectral.concentration_report(models.sphere_cap_spectrum(k, math.pi / 2.0), 0.1) for k in (100, 400)]
  assert reports[0]["d_k"] == 101.0
  for key in ("mid_scaled", "mass_scaled"):
    assert reports[0][key] > 0.0
    assert 1.0 / 1.5 < reports[1][key] / reports[0][key] < 1.5
  with pytest.raises(DomainError):
    spectral.concentration_report(models.sphere_cap_spectrum(10, 1.0), 0.5)


def test_concentration_report_on_disk_with_half_power():
  reports, predictions = [], []
  for k in (100, 400):
    spec = models.bargmann_disk_spectrum(k, 1.0)
    report = spectral.concentration_report(spec, 0.1, p=0.5)
    assert report["d_k"] == pytest.approx(spec.effective_dimension(), rel=1e-15)
    mass = spectral.weyl_trace(k, 1, spec.domain.boundary_volume, Fn01.h(0.5))
    predictions.append(mass / report["d_k"] * math.sqrt(k))
    reports.append(report)
  assert _rel(reports[-1]["mass_scaled"], predictions[-1]) < 0.10
  for key in ("mid_scaled", "mass_scaled"):
    assert reports[0][key] > 0.0
    assert 1.0 / 1.5 < reports[1][key] / reports[0][key] < 1.5


def test_extreme_fractions_of_cap():
  theta0 = 1.2
  nu = math.sin(0.5 * theta0) ** 2
  reports = [spectral.extreme_fractions(models.sphere_cap_spectrum(k, theta0), 1.0) for k in (100, 400, 1600)]
  for report in reports:
    assert report["nu"] == pytest.approx(nu, rel=1e-12)
    assert report["low"] + report["middle"] + report["top"] == pytest.approx(1.0, abs=1e-12)
    assert max(report["low_gap"], report["top_gap"]) <= report["middle"] + 1e-12
  assert reports[0]["threshold"] == pytest.approx(0.01)
  middles = [report["middle"] for report in reports]
  assert middles[0] > middles[1] > middles[2]
  assert reports[-1]["top_gap"] < 0.06


def test_extreme_fractions_of_hemisphere():
  k = 400
  report = spectral.extreme_fractions(models.sphere_cap_spectrum(k, math.pi / 2.0), 2.0)
  assert report["nu"] == pytest.approx(0.5, rel=1e-12)
  assert report["low"] == pytest.approx(report["top"], abs=1.0 / (k + 1) + 1e-12)
  with pytest.raises(PreconditionError):
    spectral.extreme_fractions(models.cylinder_spectrum(16))
  with pytest.raises(PreconditionError):
    spectral.extreme_fractions(models.bargmann_disk_spectrum(16, 1.0))
  with pytest.raises(DomainError):
    spectral.extreme_fractions(models.sphere_cap_spectrum(10, 1.0), 0.0)
  with pytest.raises(DomainError):
    spectral.extreme_fractions(models.sphere_cap_spectrum(2, 1.0), 1.0)


def test_two_term_weyl_on_cap():
  spec = models.sphere_cap_spectrum(400, math.pi / 2.0)
  g = Fn01.polynomial([0.0, 2.0, -1.0], name="2X-X^2")
  actual, predicted = spectral.two_term_weyl(spec, g, spec.domain.volume)
  assert abs(actual - predicted) < 1.0
  assert actual == pytest.approx(401 * 0.5 + spectral.cumulant(spec, 2), rel=1e-12)


def test_two_term_weyl_needs_finite_traces():
  spec = models.bargmann_disk_spectrum(20, 1.0)
  with pytest.raises(PreconditionError):
    spectral.two_term_weyl(spec, Fn01.polynomial([1.0, -1.0]), spec.domain.volume)

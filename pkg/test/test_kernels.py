import math

import numpy as np
import pytest

import kernels
import models
import spectral
from errors import DomainError, PreconditionError
from kernels import BargmannKernel
from specfun import Fn01


def test_cyclic_kernel_on_the_diagonal():
  k, z = 10.0, 0.3 + 0.2j
  for p in (1, 2, 3):
    assert kernels.cyclic_kernel([z] * p, k) == pytest.approx((k / (2.0 * math.pi)) ** p, rel=1e-12)


def test_cyclic_kernel_of_two_points_is_squared_modulus():
  k, z, w = 12.0, 0.1 - 0.4j, -0.2 + 0.3j
  kernel = BargmannKernel(k)
  value = kernels.cyclic_kernel([z, w], k)
  assert value.real == pytest.approx(abs(complex(kernel(z, w))) ** 2, rel=1e-12)
  assert abs(value.imag) < 1e-12 * value.real
  assert math.log(abs(complex(kernel(z, w)))) == pytest.approx(float(kernel.log_abs(z, w)), abs=1e-12)


def test_cyclic_kernel_is_rotation_invariant():
  points = [0.2 + 0.1j, -0.3 + 0.05j, 0.1 - 0.25j]
  rotated = points[1:] + points[:1]
  assert kernels.cyclic_kernel(rotated, 8.0) == pytest.approx(kernels.cyclic_kernel(points, 8.0), rel=1e-12)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_reproducing_property(p):
  rng = np.random.default_rng(p)
  samples = 0.3 * (rng.uniform(-1.0, 1.0, (3, p)) + 1j * rng.uniform(-1.0, 1.0, (3, p)))
  assert kernels.reproducing_check(p, samples, 10.0) < 1e-8


def test_reproducing_window():
  residuals = [kernels.reproducing_check(1, [[0.0]], 10.0, window=w) for w in (1.0, 2.0, 4.0)]
  assert residuals[0] > residuals[1] > residuals[2]
  assert residuals[2] < 1e-6
  with pytest.raises(DomainError):
    kernels.reproducing_check(2, [[0.0]], 10.0)


@pytest.mark.parametrize("k", [50, 100, 200])
def test_trace_gap_by_radial_quadrature(k):
  spec = models.bargmann_disk_spectrum(k, 1.0)
  trace = kernels.trace_gap_via_kernel(1, 1.0, k)
  assert trace.method == "radial_quadrature"
  assert trace.error == 0.0
  assert trace.value == pytest.approx(spectral.trace_functional(spec, Fn01.g(1)), rel=1e-6)


def test_trace_powers():
  k = 100
  spec = models.bargmann_disk_spectrum(k, 1.0)
  closed = kernels.trace_power_via_kernel(1, 1.0, k)
  assert closed.method == "closed_form" and closed.value == k
  squared = kernels.trace_power_via_kernel(2, 1.0, k)
  assert squared.method == "radial_quadrature"
  assert squared.value == pytest.approx(math.fsum(spec.eigenvalues ** 2), rel=1e-6)


def test_kernel_trace_arguments():
  with pytest.raises(DomainError):
    kernels.trace_gap_via_kernel(0, 1.0, 50)
  with pytest.raises(DomainError):
    kernels.trace_gap_via_kernel(1, -1.0, 50)
  with pytest.raises(DomainError):
    BargmannKernel(0.0)


@pytest.mark.slow
def test_trace_gap_by_sampling():
  k = 50
  spec = models.bargmann_disk_spectrum(k, 1.0)
  trace = kernels.trace_gap_via_kernel(2, 1.0, k, seed=3, jobs=2)
  expected = spectral.trace_functional(spec, Fn01.g(2))
  assert trace.method == "monte_carlo"
  assert trace.n_samples > 0
  assert abs(trace.value - expected) <= 0.05 * expected


def test_kernel_decay_profile():
  pairs = [(0.0, 0.3), (0.1j, 0.5 + 0.2j), (-0.2, 0.2 - 0.1j)]
  fit = kernels.kernel_decay_profile([10.0, 20.0, 40.0], pairs)
  assert fit.k_power == pytest.approx(1.0, abs=1e-9)
  assert fit.C == pytest.approx(4.0, rel=1e-9)
  assert fit.log_prefactor == pytest.approx(-math.log(2.0 * math.pi), abs=1e-9)
  assert fit.residual < 1e-10
  with pytest.raises(PreconditionError):
    kernels.kernel_decay_profile([10.0], pairs)

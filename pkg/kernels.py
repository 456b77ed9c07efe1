"""
 DESCRIPTION
   Bargmann kernel and kernel-route traces

   Pi_k(z, w) = (k/2 pi) exp(k z conj(w) - k|z|^2/2 - k|w|^2/2), measure mu = 2 dLeb.
   Cyclic products Pi(x_1, x_2) Pi(x_2, x_3) ... Pi(x_p, x_1) are translation
   invariant in modulus and phase; they are evaluated from offsets to the
   last point, in log-amplitude form.

   Kernel-route traces of powers of T_A for a disk:
   - p = 1 (gap) and p = 2 (power): radial tensor Gauss-Legendre with i0e
   - larger p: importance sampling, the base point uniform in a region and
     the offsets drawn from the Gaussian matching |Pi_(p+1)|

        This program is free software: you can redistribute it and/or modify
        it under the terms of the GNU General Public License as published by
        the Free Software Foundation, either version 3 of the License, or
        (at your option) any later version.

        This program is distributed in the hope that it will be useful,
        but WITHOUT ANY WARRANTY; without even the implied warranty of
        MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
        GNU General Public License for more details.

        You should have received a copy of the GNU General Public License
        along with this program.  If not, see <http://www.gnu.org/licenses/>.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

import config as cfg
import sampling
from errors import ConvergenceError, DomainError, PreconditionError

# Logging
import __main__
import logging
import os
script = os.path.basename(getattr(__main__, "__file__", "toeplitz-lab"))
script = os.path.splitext(script)[0]
logger = logging.getLogger(script + "." + __name__)

# offsets further than sqrt(TUBE_EXPONENT / (k lambda_min)) from A are dropped; exp(-12) ~ 6e-6
TUBE_EXPONENT = 12.0
RADIAL_TOL = 1e-10


@dataclass(frozen=True)
class BargmannKernel:
  """Bergman kernel of the Bargmann plane at parameter k."""
  k: float

  def __post_init__(self):
    if not self.k > 0:
      raise DomainError(f"k must be positive; got {self.k}")

  def __call__(self, z, w):
    z, w = np.asarray(z, dtype=complex), np.asarray(w, dtype=complex)
    k = self.k
    return k / (2.0 * math.pi) * np.exp(k * z * np.conj(w) - 0.5 * k * np.abs(z) ** 2 - 0.5 * k * np.abs(w) ** 2)

  def log_abs(self, z, w):
    """log |Pi_k(z, w)| = log(k/2 pi) - k |z - w|^2 / 2."""
    return math.log(self.k / (2.0 * math.pi)) - 0.5 * self.k * np.abs(np.asarray(z) - np.asarray(w)) ** 2

  def cyclic_log(self, points):
    """
    log of Pi(x_1, x_2) ... Pi(x_p, x_1) for points of shape (..., p)

    The exponent k [sum x_i conj(x_(i+1)) - sum |x_i|^2] is evaluated on the
    offsets to the last point.
    """
    x = np.asarray(points, dtype=complex)
    w = x - x[..., -1:]
    shifted = np.roll(w, -1, axis=-1)
    exponent = self.k * (np.sum(w * np.conj(shifted), axis=-1) - np.sum(np.abs(w) ** 2, axis=-1))
    return x.shape[-1] * math.log(self.k / (2.0 * math.pi)) + exponent

  def cyclic(self, points):
    """Pi_p(x_1, ..., x_p); real and non-negative for p = 2."""
    return np.exp(self.cyclic_log(points))


def cyclic_kernel(points, k):
  """Pi_p(x_1, ..., x_p) at parameter k for one tuple of points."""
  return complex(BargmannKernel(k).cyclic(np.asarray(points, dtype=complex)))


def reproducing_check(p, samples, k, window=8.0, order=64):
  """
  Residual of int Pi_(p+1)(x, x_1, ..., x_p) dmu(x) = Pi_p(x_1, ..., x_p)

  The x-integral uses tensor Gauss-Legendre on a square centred between x_1
  and x_p, of half-width |x_p - x_1|/2 + window/sqrt(k).

  Args:
    :param int p: number of fixed points
    :param samples: array of shape (m, p) of complex points
    :param float k: parameter
    :param float window: half-width in units of 1/sqrt(k)

  Returns:
    float: largest relative residual
  """
  kernel = BargmannKernel(k)
  samples = np.atleast_2d(np.asarray(samples, dtype=complex))
  if samples.shape[1] != p:
    raise DomainError(f"samples must have {p} points each; got shape {samples.shape}")
  g, w = np.polynomial.legendre.leggauss(order)

  worst = 0.0
  for points in samples:
    centre = 0.5 * (points[0] + points[-1])
    half = 0.5 * abs(points[-1] - points[0]) + window / math.sqrt(k)
    x = centre + half * (g[:, None] + 1j * g[None, :])
    weights = half * half * w[:, None] * w[None, :]
    tuples = np.concatenate([x[..., None], np.broadcast_to(points, x.shape + (p,))], axis=-1)
    # mu = 2 dLeb
    value = 2.0 * np.sum(weights * kernel.cyclic(tuples))
    exact = complex(kernel.cyclic(points)) if p > 1 else kernel.k / (2.0 * math.pi)
    worst = max(worst, abs(value - exact) / abs(exact))
  return worst


@dataclass(frozen=True)
class KernelTrace:
  """Kernel-route value with its standard error (zero for quadrature)."""
  value: float
  error: float
  method: str
  n_samples: int = 0


def _check_disk(p, radius, k):
  if isinstance(p, bool) or int(p) != p or p < 1:
    raise DomainError(f"p must be a positive integer; got {p}")
  if not radius > 0.0:
    raise DomainError(f"disk radius must be positive; got {radius}")
  if not k > 0:
    raise DomainError(f"k must be positive; got {k}")


def _radial_double(k, r_range, rho_range, panels):
  """
  4 k^2 int int r rho exp(-k (r - rho)^2) i0e(2 k r rho) dr drho

  This is int int |Pi|^2 dmu dmu over {|z| in r_range} x {|w| in rho_range}
  after both angular integrals.
  """
  def nodes(lo, hi, count, order):
    edges = np.linspace(lo, hi, count + 1)
    g, w = np.polynomial.legendre.leggauss(order)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    return (mid[:, None] + half[:, None] * g).ravel(), (half[:, None] * w).ravel()

  previous = None
  order = 16
  while order <= 128:
    r, wr = nodes(*r_range, panels, order)
    rho, wrho = nodes(*rho_range, panels, order)
    rr, pp = np.meshgrid(r, rho, indexing="ij")
    inner = rr * pp * np.exp(-k * (rr - pp) ** 2) * special.i0e(2.0 * k * rr * pp)
    value = 4.0 * k * k * float(wr @ inner @ wrho)
    if previous is not None and abs(value - previous) <= RADIAL_TOL * abs(value):
      return value
    previous = value
    order *= 2
  raise ConvergenceError(f"radial quadrature k={k} did not settle")


def _chain_matrix(m):
  """tridiag(-1/2, 1, -1/2) of size m: |Pi_(m+1)| = (k/2 pi)^(m+1) exp(-k w^* K w) for offsets w."""
  return np.eye(m) - 0.5 * (np.eye(m, k=1) + np.eye(m, k=-1))


def _sampled_cyclic(points_total, k, radius, base, n_samples, seed, jobs=None):
  """
  int over A^(P-1) x B of Pi_P(x_1, ..., x_P) with x_P the base point

  x_P is uniform in B (disk 'inside' or tube 'outside' of A = {|z| < R});
  offsets w_i = x_i - x_P have density (k^m det K / pi^m) exp(-k w^* K w),
  m = P - 1. Each sample then carries weight |B| k / (pi det K) e^(i phase)
  when all x_1, ..., x_m lie in A.
  """
  m = points_total - 1
  chain = _chain_matrix(m)
  lowest = float(np.min(np.linalg.eigvalsh(chain)))
  factor = linalg.cholesky(chain, lower=True)
  determinant = float(np.prod(np.diag(factor))) ** 2

  if base == "outside":
    reach = radius + math.sqrt(TUBE_EXPONENT / (k * lowest))
    r_lo, r_hi = radius, reach
  else:
    r_lo, r_hi = 0.0, radius
  area = math.pi * (r_hi ** 2 - r_lo ** 2)
  weight = area * k / (math.pi * determinant)
  sizes = sampling.block_sizes(n_samples)

  def block(index):
    rng = sampling.derived_generator(seed, index)
    size = sizes[index]
    r = np.sqrt(r_lo ** 2 + (r_hi ** 2 - r_lo ** 2) * rng.random(size))
    tau = r * np.exp(2j * math.pi * rng.random(size))
    zeta = (rng.standard_normal((size, m)) + 1j * rng.standard_normal((size, m))) / math.sqrt(2.0)
    offsets = linalg.solve_triangular(factor.T, zeta.T, lower=False).T / math.sqrt(k)
    inside = np.all(np.abs(tau[:, None] + offsets) < radius, axis=1)
    phase = k * np.sum(offsets[:, :-1] * np.conj(offsets[:, 1:]), axis=1).imag if m > 1 else np.zeros(size)
    values = weight * np.where(inside, np.cos(phase), 0.0)
    return math.fsum(values), math.fsum(values * values), size

  results = sampling.run_blocks(block, len(sizes), jobs)
  total = sum(r[2] for r in results)
  mean = math.fsum(r[0] for r in results) / total
  second = math.fsum(r[1] for r in results) / total
  error = math.sqrt(max(second - mean * mean, 0.0) / total)
  return mean, error, total


def trace_gap_via_kernel(p, radius, k, n_samples=None, seed=0, tolerance=0.02, jobs=None):
  """
  tr(T_A^p - T_A^(p+1)) = int_(A^p x A^c) Pi_(p+1) for the disk A = {|z| < R}

  Args:
    :param int p: power
    :param float radius: disk radius R
    :param float k: parameter
    :param int n_samples: Monte-Carlo budget (p >= 2)
    :param float tolerance: largest accepted relative standard error

  Returns:
    KernelTrace
  """
  _check_disk(p, radius, k)
  if p == 1:
    # |z - w| beyond 10/sqrt(k) contributes below exp(-100)
    width = 10.0 / math.sqrt(k)
    panels = max(1, math.ceil(width * math.sqrt(k) / 4.0))
    value = _radial_double(k, (max(0.0, radius - width), radius), (radius, radius + width), panels)
    return KernelTrace(value, 0.0, "radial_quadrature")

  value, error, total = _sampled_cyclic(p + 1, k, radius, "outside", n_samples or cfg.MC_SAMPLES, seed, jobs)
  logger.info(f"tr(T^{p} - T^{p + 1}) k={k} R={radius}: {value:.6g} +- {error:.2g}")
  if error > tolerance * abs(value):
    raise ConvergenceError(f"Monte-Carlo error {error:.3g} above {tolerance:g} of {value:.6g}")
  return KernelTrace(value, error, "monte_carlo", total)


def trace_power_via_kernel(p, radius, k, n_samples=None, seed=0, tolerance=0.02, jobs=None):
  """tr T_A^p = int_(A^p) Pi_p for the disk A = {|z| < R}; see trace_gap_via_kernel."""
  _check_disk(p, radius, k)
  if p == 1:
    return KernelTrace(k * radius ** 2, 0.0, "closed_form")
  if p == 2:
    panels = max(1, math.ceil(radius * math.sqrt(k)))
    value = _radial_double(k, (0.0, radius), (0.0, radius), panels)
    return KernelTrace(value, 0.0, "radial_quadrature")

  value, error, total = _sampled_cyclic(p, k, radius, "inside", n_samples or cfg.MC_SAMPLES, seed, jobs)
  if error > tolerance * abs(value):
    raise ConvergenceError(f"Monte-Carlo error {error:.3g} above {tolerance:g} of {value:.6g}")
  return KernelTrace(value, error, "monte_carlo", total)


@dataclass(frozen=True)
class DecayFit:
  """log |Pi_k(x, y)| = log_prefactor + k_power log k - k d(x, y)^2 / C, d the metric distance."""
  log_prefactor: float
  k_power: float
  C: float
  residual: float


def kernel_decay_profile(ks, pairs):
  """
  Fit the off-diagonal decay of |Pi_k| over k-values and point pairs

  Metric distances are sqrt(2) |x - y| for mu = 2 dLeb; the fit recovers
  k_power = n = 1 and C = 4.
  """
  kernel_rows, targets = [], []
  for k in ks:
    kernel = BargmannKernel(k)
    for x, y in pairs:
      distance = math.sqrt(2.0) * abs(complex(x) - complex(y))
      kernel_rows.append([1.0, math.log(k), -k * distance ** 2])
      targets.append(float(kernel.log_abs(x, y)))
  design, targets = np.asarray(kernel_rows), np.asarray(targets)
  if np.linalg.matrix_rank(design) < 3:
    raise PreconditionError("need at least two k-values and a pair at positive distance")
  solution, _, _, _ = np.linalg.lstsq(design, targets, rcond=None)
  residual = float(np.max(np.abs(design @ solution - targets)))
  return DecayFit(float(solution[0]), float(solution[1]), float(1.0 / solution[2]), residual)

"""
 DESCRIPTION
   Free-fermion particle number in a domain A

   For the ground state of the fermions occupying H_k, the number N_A of
   particles in A is a sum of independent Bernoulli(lambda_i) variables over
   the eigenvalues of T_A (a Poisson-binomial law). This module computes the
   exact law, samples it reproducibly, checks the Schmidt frame behind the
   factorization and tests the central limit and tail bounds.

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

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

import config as cfg
import sampling
from errors import DomainError, PreconditionError
from specfun import I_P2

# Logging
import __main__
import logging
import os
script = os.path.basename(getattr(__main__, "__file__", "toeplitz-lab"))
script = os.path.splitext(script)[0]
logger = logging.getLogger(script + "." + __name__)

MAX_CUMULANT_ORDER = 8
MAX_BRUTEFORCE = 20
ORTHONORMAL_TOL = 1e-8

# stream identifier of the continuity-correction jitter
_JITTER_STREAM = 1 << 32


def _parameters(params):
  values = np.asarray(params, dtype=float).ravel()
  if np.any(~((values >= 0.0) & (values <= 1.0))):
    raise DomainError("Bernoulli parameter out of range [0, 1]")
  return values


@dataclass(frozen=True)
class PoissonBinomialDist:
  """
  Law of a sum of independent Bernoulli(lambda_i)

  Attributes:
    params: the lambda_i
    pmf: P(N = j), j = 0..d
  """
  params: np.ndarray
  pmf: np.ndarray

  @property
  def mean(self):
    return math.fsum(self.params)

  @property
  def variance(self):
    return math.fsum(self.params * (1.0 - self.params))

  def cdf(self):
    return np.cumsum(self.pmf)

  def write_csv(self, stream):
    """Two columns j,pmf with 17 significant digits."""
    stream.write("j,pmf\n")
    for j, p in enumerate(self.pmf):
      stream.write(f"{j},{p:.17g}\n")


def poisson_binomial(params):
  """
  Exact PMF by successive convolution with [1 - lambda, lambda]

  Args:
    :param params: Bernoulli parameters in [0, 1]

  Returns:
    PoissonBinomialDist
  """
  values = _parameters(params)
  pmf = np.ones(1)
  for lam in values:
    nxt = np.zeros(pmf.size + 1)
    nxt[:-1] += pmf * (1.0 - lam)
    nxt[1:] += pmf * lam
    pmf = nxt
  return PoissonBinomialDist(values, pmf)


def pmf_cumulant(dist, ell):
  """
  ell-th cumulant of a PMF from its central moments

  Cancellation between moments grows quickly with ell; orders above 8 are refused.
  """
  if isinstance(ell, bool) or int(ell) != ell or ell < 1:
    raise DomainError(f"cumulant order must be a positive integer; got {ell}")
  if ell > MAX_CUMULANT_ORDER:
    raise PreconditionError(f"cumulants from moments are limited to order {MAX_CUMULANT_ORDER}; got {ell}")
  j = np.arange(dist.pmf.size, dtype=float)
  mean = math.fsum(j * dist.pmf)
  if ell == 1:
    return mean

  centred = j - mean
  moments = [1.0, 0.0] + [math.fsum(centred ** r * dist.pmf) for r in range(2, ell + 1)]
  kappa = [0.0, 0.0]
  for order in range(2, ell + 1):
    value = moments[order] - math.fsum(math.comb(order - 1, i - 1) * kappa[i] * moments[order - i]
                                       for i in range(2, order - 1))
    kappa.append(value)
  return kappa[ell]


def sample_count(params, seed, n_samples, jobs=None, block=None):
  """
  Draw n_samples values of N, each a sum of len(params) Bernoulli flips

  Block b of the run uses the stream (seed, b), so the samples are identical
  for any number of worker threads.

  Returns:
    numpy.ndarray of int64
  """
  values = _parameters(params)
  certain = int(np.count_nonzero(values == 1.0))
  random = values[(values > 0.0) & (values < 1.0)]
  sizes = sampling.block_sizes(n_samples, block)

  def draw(index):
    rng = sampling.derived_generator(seed, index)
    flips = rng.random((sizes[index], random.size)) < random
    return certain + np.count_nonzero(flips, axis=1)

  return np.concatenate(sampling.run_blocks(draw, len(sizes), jobs)).astype(np.int64)


@dataclass(frozen=True)
class EntanglementSpectrum:
  """Schmidt weights prod_{i in S} lambda_i prod_{i not in S} (1 - lambda_i), descending."""
  weights: np.ndarray

  def entropy(self):
    return math.fsum(special.entr(self.weights))


def entanglement_spectrum_bruteforce(params):
  """All 2^d Schmidt weights of the ground state across A; d <= 20."""
  values = _parameters(params)
  if values.size > MAX_BRUTEFORCE:
    raise PreconditionError(f"brute force enumeration limited to d <= {MAX_BRUTEFORCE}; got {values.size}")
  weights = np.ones(1)
  for lam in values:
    weights = np.kron(weights, [1.0 - lam, lam])
  return EntanglementSpectrum(np.sort(weights)[::-1])


@dataclass(frozen=True)
class SchmidtReport:
  """Gram matrices of the projected frame against diag(lambda) and diag(1 - lambda)."""
  eigenvalues: np.ndarray
  off_diagonal: float
  complement_error: float
  tolerance: float = ORTHONORMAL_TOL

  @property
  def passed(self):
    return self.off_diagonal <= self.tolerance and self.complement_error <= self.tolerance


def schmidt_overlap_check(frame, inside):
  """
  Check that P_A s_i and (1 - P_A) s_i are orthogonal families

  Args:
    :param numpy.ndarray frame: columns are the vectors s_i, already weighted so the inner product is the dot product
    :param inside: projector P_A as a boolean mask over rows, or as a matrix

  Returns:
    SchmidtReport
  """
  f = np.asarray(frame)
  gram = f.conj().T @ f
  if float(np.max(np.abs(gram - np.eye(gram.shape[0])))) > ORTHONORMAL_TOL:
    raise PreconditionError("frame-not-orthonormal")

  mask = np.asarray(inside)
  projected = f * mask[:, None] if mask.ndim == 1 else mask @ f
  rest = f - projected
  gram_in = projected.conj().T @ projected
  gram_out = rest.conj().T @ rest
  lam = np.real(np.diag(gram_in))

  off = gram_in - np.diag(np.diag(gram_in))
  return SchmidtReport(lam, float(np.max(np.abs(off), initial=0.0)),
                       float(np.max(np.abs(gram_out - np.diag(1.0 - lam)))))


def sphere_cap_frame(k, theta0):
  """
  Eigenframe of T_A for a polar cap, sampled at exact quadrature nodes

  Nodes are Gauss-Legendre in u = sin^2(theta/2) on each side of the cap
  boundary and equispaced in phi, so the products s_i conj(s_j) integrate exactly.

  Returns:
    tuple: (frame, inside mask)
  """
  x = math.sin(0.5 * theta0) ** 2
  order = k // 2 + 2
  g, w = np.polynomial.legendre.leggauss(order)
  u = np.concatenate([0.5 * x * (g + 1.0), x + 0.5 * (1.0 - x) * (g + 1.0)])
  wu = np.concatenate([0.5 * x * w, 0.5 * (1.0 - x) * w])
  n_phi = 2 * k + 2
  phi = 2.0 * math.pi * np.arange(n_phi) / n_phi

  ell = np.arange(k + 1)
  log_norm = 0.5 * (math.log((k + 1) / (2.0 * math.pi)) + special.gammaln(k + 1.0)
                    - special.gammaln(ell + 1.0) - special.gammaln(k - ell + 1.0))
  with np.errstate(divide="ignore"):
    radial = np.exp(log_norm[None, :] + 0.5 * ell[None, :] * np.log(u[:, None])
                    + 0.5 * (k - ell[None, :]) * np.log1p(-u[:, None]))
  weights = np.sqrt(wu[:, None, None] * (2.0 * math.pi / n_phi))
  frame = weights * radial[:, None, :] * np.exp(1j * phi[None, :, None] * ell[None, None, :])
  inside = np.repeat(u < x, n_phi)
  return frame.reshape(u.size * n_phi, k + 1), inside


def _alpha(n):
  return 0.5 * n - 0.25


def predicted_variance(n, boundary_volume):
  """Limit of k^(-2 alpha) Var N_A: (2 pi)^-n vol(dA) I(X(1-X))."""
  return (2.0 * math.pi) ** (-n) * boundary_volume * I_P2


def _exact_ks(dist, mean, scale, sigma):
  """sup |F - Phi| between the continuity-corrected exact law and N(0, sigma^2)."""
  cdf = np.concatenate([[0.0], dist.cdf()])
  knots = np.arange(-0.5, dist.pmf.size)
  fine = np.linspace(0.0, 1.0, 17)[:-1]
  z = (knots[:-1, None] + fine[None, :]).ravel()
  law = (cdf[:-1, None] + fine[None, :] * dist.pmf[:, None]).ravel()
  z = np.append(z, knots[-1])
  law = np.append(law, cdf[-1])
  return float(np.max(np.abs(law - stats.norm.cdf((z - mean) / scale, scale=sigma))))


@dataclass
class CheckReport:
  """Verdict of a statistical check: one row per k plus statistic, bound and pass."""
  name: str
  rows: list = field(default_factory=list)
  statistic: float = math.nan
  bound: float = math.nan
  passed: bool = False

  def to_json(self):
    return json.dumps({"name": self.name, "statistic": self.statistic, "bound": self.bound,
                       "pass": self.passed, "rows": self.rows}, indent=2, default=float)

  def to_text(self):
    lines = [f"{self.name}: statistic={self.statistic:.6g} bound={self.bound:.6g} "
             f"{'PASS' if self.passed else 'FAIL'}"]
    for row in self.rows:
      lines.append("  " + " ".join(f"{key}={value:.6g}" if isinstance(value, float) else f"{key}={value}"
                                   for key, value in row.items()))
    return "\n".join(lines)


def clt_check(spectra, n_samples, seed, tolerance=0.02, jobs=None):
  """
  Central limit check of k^(-alpha) (N_A - E N_A), alpha = n/2 - 1/4

  Each sample gets a uniform jitter on (-1/2, 1/2) before scaling
  (continuity correction). The sampled KS distance is scipy's; the exact one
  compares the jittered Poisson-binomial law with the normal limit
  deterministically and must decrease along the ladder.

  Args:
    :param list spectra: spectra along an increasing k-ladder
    :param int n_samples: samples per k
    :param int seed: run seed
    :param float tolerance: bound for the sampled KS distance at the largest k
  """
  report = CheckReport("clt", bound=tolerance)
  for index, spec in enumerate(spectra):
    variance = math.fsum(spec.eigenvalues * (1.0 - spec.eigenvalues))
    if variance == 0.0:
      report.rows.append({"k": spec.k, "ks_sampled": 0.0, "ks_exact": 0.0, "variance_ratio": 1.0})
      continue

    scale = spec.k ** _alpha(spec.n)
    sigma = math.sqrt(predicted_variance(spec.n, spec.domain.boundary_volume))
    dist = poisson_binomial(spec.eigenvalues)
    counts = sample_count(spec.eigenvalues, seed + index, n_samples, jobs)
    jitter = sampling.derived_generator(seed + index, _JITTER_STREAM).uniform(-0.5, 0.5, counts.size)
    scaled = (counts + jitter - dist.mean) / scale

    row = {"k": spec.k,
           "ks_sampled": float(stats.kstest(scaled, stats.norm(scale=sigma).cdf).statistic),
           "ks_exact": _exact_ks(dist, dist.mean, scale, sigma),
           "variance_ratio": float(np.var(counts)) / variance}
    logger.info(f"clt k={spec.k}: {row}")
    report.rows.append(row)

  exact = [row["ks_exact"] for row in report.rows]
  report.statistic = report.rows[-1]["ks_sampled"] if report.rows else math.nan
  report.passed = bool(report.rows) and report.statistic <= tolerance and all(
    b <= a for a, b in zip(exact, exact[1:]))
  return report


def tail_check(spec, beta, n_samples, seed, c_max=10.0, jobs=None):
  """
  Tail bound P(|N_A - E N_A| >= k^(alpha + beta)) <= exp(-k^min(alpha + beta, 2 beta) / C)

  The reported C_fit is the smallest C consistent with the observed
  frequency (1 when nothing exceeds the threshold); the check passes when
  C_fit <= c_max.
  """
  if not beta > 0.0:
    raise DomainError(f"beta must be positive; got {beta}")
  alpha = _alpha(spec.n)
  counts = sample_count(spec.eigenvalues, seed, n_samples, jobs)
  deviation = np.abs(counts - math.fsum(spec.eigenvalues))
  threshold = spec.k ** (alpha + beta)
  frequency = float(np.count_nonzero(deviation >= threshold)) / counts.size
  exponent = spec.k ** min(alpha + beta, 2.0 * beta)
  c_fit = 1.0 if frequency == 0.0 else max(1.0, exponent / -math.log(frequency))

  report = CheckReport("tails", statistic=frequency, bound=math.exp(-exponent / c_max))
  report.rows.append({"k": spec.k, "beta": float(beta), "threshold": threshold, "frequency": frequency,
                      "C_fit": c_fit})
  report.passed = c_fit <= c_max
  return report

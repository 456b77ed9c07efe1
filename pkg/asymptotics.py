"""
 DESCRIPTION
   Laplace-type expansions of oscillatory integrals over conic domains

   I_k = int_D exp(-k phi(t, s)) a(t, s) dt ds  ~  k^-((n + p)/2) sum_j b_j k^(-j/2)

   phi = q(t) + r(t, s) with q(t) = t^T H t / 2, Re H positive definite, and r
   vanishing to third order; D is a cone with bounded s-sections. b_j collects
   moments int_D exp(-q(t)) t^alpha s^beta of the Taylor data, computed by
   quadrature for one t-variable and by scrambled Sobol samples otherwise.

   The universal constant C_(p,n) of tr(T_A^p - T_A^(p+1)) comes from two
   independent routes: the boundary integral I(g_p), and the conic moment
   of the model quadratic form over D_p = {0 <= s <= t_i^1 for all i}.

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
import warnings
from dataclasses import dataclass

import numpy as np
import scipy
from packaging.version import Version
from scipy import integrate, linalg, special

import config as cfg
import sampling
from errors import ConvergenceError, DomainError, PreconditionError
from specfun import Fn01, QuadratureSpec, integral_I, integrate_1d

# Logging
import __main__
import logging
import os
script = os.path.basename(getattr(__main__, "__file__", "toeplitz-lab"))
script = os.path.splitext(script)[0]
logger = logging.getLogger(script + "." + __name__)

# scipy.stats.qmc appeared in 1.7; 1.15 renamed the Sobol seed keyword to rng
_SCIPY = Version(f"{scipy.__version__}")
HAVE_QMC = _SCIPY >= Version("1.7")
if not HAVE_QMC:
  logger.warning(f"scipy {scipy.__version__} has no scipy.stats.qmc; conic moments use plain Monte-Carlo")

MAX_FIT_TERMS = 4
REPLICATES = 8
MOMENT_RTOL = 1e-3


@dataclass(frozen=True)
class ConicDomain:
  """
  Cone D = {(t, s) : L (t, s) >= 0} in R^t_dim x R^s_dim, s_dim in {0, 1}

  Each row of inequalities is one homogeneous linear constraint.
  """
  t_dim: int
  s_dim: int
  inequalities: np.ndarray
  name: str = "custom"

  def __post_init__(self):
    rows = np.asarray(self.inequalities, dtype=float).reshape(-1, self.t_dim + self.s_dim)
    if self.s_dim not in (0, 1):
      raise PreconditionError(f"only s_dim in {{0, 1}} is supported; got {self.s_dim}")
    if self.t_dim < 1:
      raise DomainError(f"t_dim must be positive; got {self.t_dim}")
    rows.setflags(write=False)
    object.__setattr__(self, "inequalities", rows)

  @classmethod
  def standard(cls, p, n):
    """D_p = {(t, s) : 0 <= s <= t_i^1, i = 1..p}, t = (t_1, ..., t_p), t_i in R^2n."""
    t_dim = 2 * n * p
    rows = np.zeros((p + 1, t_dim + 1))
    rows[0, t_dim] = 1.0
    for i in range(p):
      rows[i + 1, 2 * n * i] = 1.0
      rows[i + 1, t_dim] = -1.0
    return cls(t_dim, 1, rows, f"D_{p}")

  @classmethod
  def halfspace(cls, t_dim, s_dim=0):
    """{t^1 >= 0}, or {|s| <= t^1} when s_dim = 1."""
    if s_dim == 0:
      rows = np.zeros((1, t_dim))
      rows[0, 0] = 1.0
    else:
      rows = np.zeros((2, t_dim + 1))
      rows[:, 0] = 1.0
      rows[0, t_dim], rows[1, t_dim] = 1.0, -1.0
    return cls(t_dim, s_dim, rows, "halfspace")

  @classmethod
  def whole_space(cls, t_dim, s_dim=0):
    return cls(t_dim, s_dim, np.zeros((0, t_dim + s_dim)), "whole_space")

  def negated(self):
    """-D; odd-degree moments change sign."""
    return ConicDomain(self.t_dim, self.s_dim, -self.inequalities, f"-{self.name}")

  def s_bounds(self, t):
    """
    Section of D over each row of t

    Returns:
      tuple: (lo, hi, valid); lo and hi are None when s_dim = 0
    """
    t = np.atleast_2d(np.asarray(t, dtype=float))
    rows = self.inequalities
    linear = t @ rows[:, :self.t_dim].T
    if self.s_dim == 0:
      return None, None, np.all(linear >= 0.0, axis=1)

    c = rows[:, self.t_dim]
    safe = np.where(c == 0.0, 1.0, c)
    cut = -linear / safe
    lo = np.max(np.where(c > 0.0, cut, -np.inf), axis=1, initial=-np.inf)
    hi = np.min(np.where(c < 0.0, cut, np.inf), axis=1, initial=np.inf)
    valid = np.all(np.where(c == 0.0, linear >= 0.0, True), axis=1) & (hi > lo)
    return lo, hi, valid

  def contains(self, t, s=None):
    point = np.atleast_2d(np.asarray(t, dtype=float))
    if self.s_dim:
      point = np.hstack([point, np.reshape(np.asarray(s, dtype=float), (-1, 1))])
    return np.all(point @ self.inequalities.T >= 0.0, axis=1)

  def section_weight(self, t, beta):
    """int over the s-section of s^beta (indicator of D when s_dim = 0)."""
    lo, hi, valid = self.s_bounds(t)
    if self.s_dim == 0:
      return valid.astype(float)
    if np.any(valid & ~(np.isfinite(lo) & np.isfinite(hi))):
      raise PreconditionError(f"{self.name}: s-sections must be bounded")
    lo = np.where(valid, lo, 0.0)
    hi = np.where(valid, hi, 0.0)
    return np.where(valid, (hi ** (beta + 1) - lo ** (beta + 1)) / (beta + 1), 0.0)


@dataclass(frozen=True)
class ModelQuadraticForm:
  """
  q(t) = (1/2) sum <M_ij t_i, t_j> on (R^2n)^p

  M_ii = I_2n, M_(i,i+1) = (1/2)[[-1, i], [-i, -1]] (x) I_n, M_(i+1,i) its transpose.
  Re M = tridiag(-1/2, 1, -1/2) (x) I_2n is positive definite.
  """
  p: int
  n: int

  def __post_init__(self):
    if self.p < 1 or self.n < 1:
      raise DomainError(f"need p, n >= 1; got p={self.p}, n={self.n}")

  @property
  def hessian(self):
    block = 2 * self.n
    coupling = np.kron(0.5 * np.array([[-1.0, 1j], [-1j, -1.0]]), np.eye(self.n))
    h = np.eye(block * self.p, dtype=complex)
    for i in range(self.p - 1):
      h[i * block:(i + 1) * block, (i + 1) * block:(i + 2) * block] = coupling
      h[(i + 1) * block:(i + 2) * block, i * block:(i + 1) * block] = coupling.T
    return h


@dataclass(frozen=True)
class TaylorData:
  """
  Polynomial in (t, s) given by monomial exponents -> coefficient

  degree is the total degree to which the data is exact (math.inf for polynomials).
  """
  coefficients: dict
  t_dim: int
  s_dim: int = 0
  degree: float = math.inf

  def __post_init__(self):
    for mono in self.coefficients:
      if len(mono) != self.t_dim + self.s_dim or min(mono, default=0) < 0:
        raise DomainError(f"monomial {mono} does not match dimensions ({self.t_dim}, {self.s_dim})")

  def __call__(self, t, s=None):
    point = np.concatenate([np.atleast_1d(np.asarray(t, dtype=float)),
                            np.atleast_1d(np.asarray(s, dtype=float)) if self.s_dim else []])
    return sum(c * np.prod(point ** np.asarray(mono)) for mono, c in self.coefficients.items())

  def min_degree(self):
    return min((sum(mono) for mono, c in self.coefficients.items() if c != 0), default=math.inf)


@dataclass(frozen=True)
class PhaseData:
  """phi(t, s) = t^T H t / 2 + r(t, s); H symmetric with Re H > 0, r = O(|(t, s)|^3)."""
  hessian: np.ndarray
  remainder: TaylorData

  def __post_init__(self):
    h = np.atleast_2d(np.asarray(self.hessian, dtype=complex))
    if h.shape != (self.remainder.t_dim, self.remainder.t_dim):
      raise DomainError(f"hessian shape {h.shape} does not match t_dim = {self.remainder.t_dim}")
    if float(np.max(np.abs(h - h.T), initial=0.0)) > 1e-14:
      raise DomainError("hessian must be symmetric")
    if float(np.min(np.linalg.eigvalsh(h.real))) <= 0.0:
      raise DomainError("Re q must be positive definite")
    if self.remainder.min_degree() < 3:
      raise DomainError("r must vanish to third order")
    object.__setattr__(self, "hessian", h)

  def __call__(self, t, s=None):
    t_vec = np.atleast_1d(np.asarray(t, dtype=float))
    return 0.5 * t_vec @ self.hessian @ t_vec + self.remainder(t, s)


def _poly_mul(a, b, max_degree):
  out = {}
  for ma, ca in a.items():
    for mb, cb in b.items():
      mono = tuple(x + y for x, y in zip(ma, mb))
      if sum(mono) <= max_degree:
        out[mono] = out.get(mono, 0.0) + ca * cb
  return out


def _quad_line(func, lo, hi):
  """Complex integral over an interval (possibly infinite) by scipy quad on real and imaginary parts."""
  value = 0.0 + 0.0j
  with warnings.catch_warnings():
    warnings.simplefilter("error", integrate.IntegrationWarning)
    for part in (np.real, np.imag):
      try:
        result, _ = integrate.quad(lambda x: float(part(func(x))), lo, hi, epsabs=1e-14, epsrel=1e-11, limit=400)
      except integrate.IntegrationWarning as e:
        raise ConvergenceError(f"moment quadrature on [{lo}, {hi}]: {e}") from e
      value += result if part is np.real else 1j * result
  return value


def _moments_1d(monomials, hessian, domain):
  h = complex(hessian[0, 0])
  values = []
  for mono in monomials:
    alpha, beta = mono[0], (mono[1] if domain.s_dim else 0)

    def integrand(t):
      weight = float(domain.section_weight(np.array([[t]]), beta)[0])
      return np.exp(-0.5 * h * t * t) * t ** alpha * weight

    values.append(_quad_line(integrand, -np.inf, 0.0) + _quad_line(integrand, 0.0, np.inf))
  return np.asarray(values), np.zeros(len(values))


def _sobol(dim, rng):
  from scipy.stats import qmc
  if _SCIPY >= Version("1.15"):
    return qmc.Sobol(dim, scramble=True, rng=rng)
  return qmc.Sobol(dim, scramble=True, seed=rng)


def _normal_points(dim, log2_size, seed, replicate):
  rng = sampling.derived_generator(seed, replicate)
  if HAVE_QMC:
    u = _sobol(dim, rng).random_base2(log2_size)
    return special.ndtri(np.clip(u, 1e-16, 1.0 - 1e-16))
  return rng.standard_normal((1 << log2_size, dim))


def _integrands(points, monomials, hessian, domain):
  """exp(-i t^T Im(H) t / 2) t^alpha w_beta(t), averaged over t and -t; one column per monomial."""
  phase = np.exp(-0.5j * np.einsum("ij,jk,ik->i", points, hessian.imag, points))
  columns = []
  for mono in monomials:
    alpha = np.asarray(mono[:domain.t_dim])
    beta = mono[domain.t_dim] if domain.s_dim else 0
    plus = np.prod(points ** alpha, axis=1) * domain.section_weight(points, beta)
    minus = np.prod((-points) ** alpha, axis=1) * domain.section_weight(-points, beta)
    columns.append(0.5 * phase * (plus + minus))
  return np.stack(columns, axis=1)


def _sampled_moments(monomials, hessian, domain, n_samples, seed, jobs=None):
  """
  Moments Z E[exp(-i t^T Im(H) t / 2) t^alpha w_beta(t)] with t ~ N(0, (Re H)^-1)

  REPLICATES independent scramblings give the standard error. The estimate
  from the first quarter of each point set must agree with the full one.
  """
  dim = domain.t_dim
  chol = linalg.cholesky(hessian.real, lower=True)
  normalizer = (2.0 * math.pi) ** (0.5 * dim) / float(np.prod(np.diag(chol)))
  log2_size = max(8, math.ceil(math.log2(max(n_samples, 1) / REPLICATES)))

  for _ in range(3):
    def replicate(index):
      z = _normal_points(dim, log2_size, seed, index)
      t = linalg.solve_triangular(chol.T, z.T, lower=False).T
      g = _integrands(t, monomials, hessian, domain)
      quarter = g.shape[0] // 4
      return g.mean(axis=0), g[:quarter].mean(axis=0), np.abs(g).mean(axis=0)

    results = sampling.run_blocks(replicate, REPLICATES, jobs)
    full = np.array([r[0] for r in results])
    quarter = np.array([r[1] for r in results])
    scale = normalizer * np.array([r[2] for r in results]).mean(axis=0)

    value = normalizer * full.mean(axis=0)
    error = normalizer * full.std(axis=0, ddof=1) / math.sqrt(REPLICATES)
    coarse = normalizer * quarter.mean(axis=0)
    coarse_error = normalizer * quarter.std(axis=0, ddof=1) / math.sqrt(REPLICATES)
    allowed = np.maximum(MOMENT_RTOL * scale, 5.0 * coarse_error)
    if np.all(np.abs(value - coarse) <= allowed):
      return value, error
    logger.info(f"conic moments at 2^{log2_size} points per replicate not settled; doubling")
    log2_size += 1

  raise ConvergenceError(f"conic moments did not settle at 2^{log2_size} points per replicate")


def conic_moments(monomials, hessian, domain, n_samples=None, seed=0, jobs=None):
  """
  M(alpha, beta) = int_D exp(-t^T H t / 2) t^alpha s^beta dt ds for each monomial

  Returns:
    tuple: (values, standard errors), complex and real arrays
  """
  h = np.atleast_2d(np.asarray(hessian, dtype=complex))
  if h.shape != (domain.t_dim, domain.t_dim):
    raise DomainError(f"hessian shape {h.shape} does not match t_dim = {domain.t_dim}")
  if float(np.min(np.linalg.eigvalsh(h.real))) <= 0.0:
    raise DomainError("Re q must be positive definite")
  monomials = [tuple(int(e) for e in mono) for mono in monomials]
  if domain.t_dim == 1:
    return _moments_1d(monomials, h, domain)
  return _sampled_moments(monomials, h, domain, n_samples or cfg.MC_SAMPLES, seed, jobs)


def conic_moment(alpha, beta, hessian, domain, n_samples=None, seed=0, jobs=None):
  """Single moment; see conic_moments."""
  mono = tuple(alpha) + ((int(beta),) if domain.s_dim else ())
  values, errors = conic_moments([mono], hessian, domain, n_samples, seed, jobs)
  return complex(values[0]), float(errors[0])


@dataclass(frozen=True)
class AsymptoticSeries:
  """I_k ~ k^-leading_power sum_j coefficients[j] k^(-j/2)"""
  leading_power: float
  coefficients: np.ndarray
  errors: np.ndarray

  def evaluate(self, k, order=None):
    terms = self.coefficients if order is None else self.coefficients[:order + 1]
    return k ** -self.leading_power * sum(b * k ** (-0.5 * j) for j, b in enumerate(terms))


def series_coefficients(phase, amplitude, domain, order, n_samples=None, seed=0, jobs=None):
  """
  b_0..b_order of the expansion of int_D exp(-k phi) a

  exp(-k r) a is expanded as sum over l of (-k r)^l a / l!; a monomial of
  degree d in r^l a contributes to b_j with j = d - 2l.

  Args:
    :param PhaseData phase: q and r
    :param TaylorData amplitude: Taylor data of a
    :param ConicDomain domain: cone D
    :param int order: last coefficient N; Taylor data must be exact to degree N + 3
  """
  if phase.remainder.t_dim != domain.t_dim or amplitude.t_dim != domain.t_dim \
     or phase.remainder.s_dim != domain.s_dim or amplitude.s_dim != domain.s_dim:
    raise DomainError("phase, amplitude and domain dimensions differ")
  if min(phase.remainder.degree, amplitude.degree) < order + 3:
    raise PreconditionError(f"Taylor data must be exact to degree {order + 3}")

  dim = domain.t_dim + domain.s_dim
  zero = (0,) * dim
  terms = {}
  power = {zero: 1.0}
  for ell in range(order + 1):
    product = _poly_mul(power, amplitude.coefficients, order + 2 * ell)
    for mono, c in product.items():
      j = sum(mono) - 2 * ell
      if j < 0:
        raise ConvergenceError(f"negative series index {j} for monomial {mono}; r must vanish to third order")
      if j <= order:
        terms.setdefault(j, []).append((mono, (-1.0) ** ell / math.factorial(ell) * c))
    power = _poly_mul(power, phase.remainder.coefficients, order + 2 * (ell + 1))

  monomials = sorted({mono for entries in terms.values() for mono, _ in entries})
  values, errors = conic_moments(monomials, phase.hessian, domain, n_samples, seed, jobs)
  lookup = {mono: (v, e) for mono, v, e in zip(monomials, values, errors)}

  coefficients = np.zeros(order + 1, dtype=complex)
  spread = np.zeros(order + 1)
  for j, entries in terms.items():
    coefficients[j] = sum(c * lookup[mono][0] for mono, c in entries)
    spread[j] = math.sqrt(math.fsum((abs(c) * lookup[mono][1]) ** 2 for mono, c in entries))
  logger.debug(f"series over {domain.name}: b = {coefficients}")
  return AsymptoticSeries(0.5 * dim, coefficients, spread)


@dataclass(frozen=True)
class UniversalConstant:
  """C_(p,n) by the boundary integral (route A) and the conic moment (route B)."""
  p: int
  n: int
  route_a: float
  route_b: float
  route_b_error: float


def universal_constant(p, n, n_samples=None, seed=0, jobs=None, q=None):
  """
  C_(p,n) = (2 pi)^-n I(g_p), cross-checked against
  (2 pi)^-(n (p + 1)) int_(D_p) exp(-q(t)) dt ds for the model quadratic form

  Raises ConvergenceError when the routes differ beyond the sampling error.
  """
  if p < 1 or n < 1:
    raise DomainError(f"need p, n >= 1; got p={p}, n={n}")
  route_a = (2.0 * math.pi) ** (-n) * integral_I(Fn01.g(p), q)

  form = ModelQuadraticForm(p, n)
  domain = ConicDomain.standard(p, n)
  moment, error = conic_moment((0,) * domain.t_dim, 0, form.hessian, domain, n_samples, seed, jobs)
  norm = (2.0 * math.pi) ** (-n * (p + 1))
  route_b, route_b_error = norm * moment.real, norm * error

  logger.info(f"C_({p},{n}): route A {route_a:.8g}, route B {route_b:.8g} +- {route_b_error:.2g}")
  if abs(route_a - route_b) > max(5.0 * route_b_error, 2e-3 * abs(route_a)):
    raise ConvergenceError(f"C_({p},{n}): routes disagree; A={route_a!r}, B={route_b!r} +- {route_b_error:.2g}")
  return UniversalConstant(p, n, route_a, route_b, route_b_error)


def quadrature_oracle(phase, amplitude, domain, k, radius=1.0, q=None):
  """
  Direct evaluation of int_D exp(-k phi) a over |t|, |s| <= radius (one t-variable)

  Nested adaptive quadrature in the rescaled variables u = sqrt(k) t, w = sqrt(k) s.

  Args:
    :param callable phase: phi(t, s)
    :param callable amplitude: a(t, s), cut off outside |t|, |s| <= radius
    :param ConicDomain domain: cone with t_dim = 1
    :param float k: parameter
  """
  if domain.t_dim != 1:
    raise PreconditionError("the quadrature oracle handles one t-variable")
  q = q or QuadratureSpec("adaptive", abs_tol=1e-15, rel_tol=1e-11, max_refinements=400)
  root = math.sqrt(k)
  reach = radius * root

  def integrand(u, w=None):
    t, s = u / root, (None if w is None else w / root)
    return np.exp(-k * phase(t, s)) * amplitude(t, s)

  def along_u(part):
    def inner(u):
      if domain.s_dim == 0:
        return float(part(integrand(u))) if domain.contains([[u]])[0] else 0.0
      lo, hi, valid = domain.s_bounds([[u]])
      if not valid[0]:
        return 0.0
      lo, hi = max(float(lo[0]), -reach), min(float(hi[0]), reach)
      if hi <= lo:
        return 0.0
      return integrate_1d(lambda w: float(part(integrand(u, w))), lo, hi, q)
    return inner

  value = 0.0 + 0.0j
  for part, unit in ((np.real, 1.0), (np.imag, 1j)):
    inner = along_u(part)
    value += unit * (integrate_1d(inner, -reach, 0.0, q) + integrate_1d(inner, 0.0, reach, q))
  return value / k ** (0.5 * (1 + domain.s_dim))


@dataclass(frozen=True)
class FitReport:
  """Least-squares coefficients of k^leading_power I_k in powers of k^-1/2."""
  leading_power: float
  powers: tuple
  coefficients: np.ndarray
  errors: np.ndarray
  condition_number: float
  residual_norm: float

  def to_dict(self):
    return {"leading_power": self.leading_power, "powers": list(self.powers),
            "coefficients": [complex(c).real if complex(c).imag == 0 else str(complex(c)) for c in self.coefficients],
            "errors": [float(e) for e in self.errors], "condition_number": self.condition_number,
            "residual_norm": self.residual_norm}


def fit_expansion(ks, values, leading_power, n_terms, powers="half"):
  """
  Fit values ~ k^-leading_power sum_l b_l k^(-e_l/2)

  powers 'half' uses e_l = 0, 1, 2, ...; 'integer' uses e_l = 0, 2, 4, ...
  The design matrix is scaled to its largest k^-1/2 before solving.
  """
  if n_terms > MAX_FIT_TERMS:
    raise PreconditionError(f"fits beyond {MAX_FIT_TERMS} terms are ill-conditioned")
  ks = np.asarray(ks, dtype=float)
  values = np.asarray(values)
  if ks.size < n_terms + 2:
    raise PreconditionError(f"{ks.size} points cannot fit {n_terms} coefficients with a residual; need {n_terms + 2}")
  if powers not in ("half", "integer"):
    raise DomainError(f"powers must be 'half' or 'integer'; got {powers}")

  exponents = tuple(range(n_terms)) if powers == "half" else tuple(range(0, 2 * n_terms, 2))
  u = ks ** -0.5
  top = float(np.max(u))
  design = np.stack([(u / top) ** e for e in exponents], axis=1)
  target = values * ks ** leading_power

  solution, _, _, singular = np.linalg.lstsq(design, target, rcond=None)
  residual = target - design @ solution
  dof = ks.size - n_terms
  sigma2 = float(np.sum(np.abs(residual) ** 2)) / dof if dof > 0 else 0.0
  covariance = sigma2 * np.linalg.pinv(design.T @ design)
  unscale = np.array([top ** -e for e in exponents])
  return FitReport(float(leading_power), exponents, solution * unscale,
                   np.sqrt(np.abs(np.diag(covariance))) * unscale,
                   float(singular[0] / singular[-1]), float(np.linalg.norm(residual)))


def remainder_slopes(ks, values, series, order):
  """Local log-log slopes of |I_k - k^-lp sum_(j<=order) b_j k^-j/2| against k (as positive decay rates)."""
  ks = np.asarray(ks, dtype=float)
  remainder = np.abs(np.asarray(values) - np.array([series.evaluate(k, order) for k in ks]))
  return -np.diff(np.log(remainder)) / np.diff(np.log(ks))

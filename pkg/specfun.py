"""
 DESCRIPTION
   Special functions and one-dimensional quadrature

   er(x)      = pi^(-1/2) * int_{-inf}^{x} exp(-s^2) ds, the error-function CDF
   er_inv(p)  inverse of er on (0, 1)
   delta(t)   = sqrt(pi) * exp(er_inv(t)^2), the boundary spectral density
   I(f)       = int_R f(er(x)) dx = int_0^1 f(t) delta(t) dt

   Functions on [0, 1] are wrapped in Fn01 together with their declared
   endpoint behaviour; I(f) refuses functions without decay at 0 and 1.

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
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate, special

import config as cfg
from errors import ConvergenceError, DomainError, PreconditionError

# Logging
import __main__
import logging
import os
script = os.path.basename(getattr(__main__, "__file__", "toeplitz-lab"))
script = os.path.splitext(script)[0]
logger = logging.getLogger(script + "." + __name__)

SQRT_PI = math.sqrt(math.pi)
SQRT_2 = math.sqrt(2.0)

# I(X(1-X)), closed form
I_P2 = 1.0 / math.sqrt(2.0 * math.pi)

RULES = ("adaptive", "gauss", "trapezoid")

_NEWTON_STEPS = 3
_GAUSS_START = 16
_GAUSS_MAX = 1 << 15
_TRAPEZOID_MAX = 1 << 22


def _like(values, x):
  """Return a float for scalar input x, an array otherwise."""
  if np.ndim(x) == 0:
    return float(values)
  return values


@dataclass(frozen=True)
class QuadratureSpec:
  """
  Integration rule and tolerances

  Attributes:
    rule: adaptive (scipy quad), gauss (Gauss-Legendre order doubling) or trapezoid
    abs_tol, rel_tol: target accuracy
    max_refinements: subinterval limit (adaptive) or number of doublings
  """
  rule: str = "adaptive"
  abs_tol: float = cfg.ABS_TOL
  rel_tol: float = cfg.REL_TOL
  max_refinements: int = cfg.MAX_REFINEMENTS

  def __post_init__(self):
    if self.rule not in RULES:
      raise DomainError(f"quadrature rule '{self.rule}' not in {RULES}")
    if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
      raise DomainError(f"tolerances must be positive; abs_tol={self.abs_tol}, rel_tol={self.rel_tol}")
    if self.max_refinements < 1:
      raise DomainError(f"max_refinements = {self.max_refinements}")

  def tolerance(self, value):
    return max(self.abs_tol, self.rel_tol * abs(value))


def _evaluate(func, nodes):
  try:
    values = func(nodes)
  except TypeError:
    values = None
  if values is None or np.shape(values) != np.shape(nodes):
    values = [func(float(x)) for x in nodes]
  return np.asarray(values, dtype=float)


def integrate_1d(func, a, b, q=None, points=None):
  """
  Integrate a real function over a finite interval [a, b]

  Args:
    :param callable func: integrand; gauss and trapezoid rules pass arrays when func accepts them
    :param float a: lower limit
    :param float b: upper limit
    :param QuadratureSpec q: rule and tolerances
    :param list points: interior break points (adaptive rule only)

  Returns:
    float
  """
  q = q or QuadratureSpec()
  if not (math.isfinite(a) and math.isfinite(b)):
    raise DomainError(f"integrate_1d needs finite limits; got [{a}, {b}]")
  if a == b:
    return 0.0

  if q.rule == "adaptive":
    if points is not None:
      lo, hi = min(a, b), max(a, b)
      points = [p for p in points if lo < p < hi] or None
    with warnings.catch_warnings():
      warnings.simplefilter("error", integrate.IntegrationWarning)
      try:
        value, _ = integrate.quad(func, a, b, epsabs=q.abs_tol, epsrel=q.rel_tol,
                                  limit=q.max_refinements, points=points)
      except integrate.IntegrationWarning as e:
        raise ConvergenceError(f"adaptive quadrature on [{a}, {b}]: {e}") from e
    return float(value)

  mid, half = 0.5 * (a + b), 0.5 * (b - a)
  n = _GAUSS_START
  previous = None
  for _ in range(q.max_refinements):
    if q.rule == "gauss":
      x, w = np.polynomial.legendre.leggauss(n)
      value = half * math.fsum(w * _evaluate(func, mid + half * x))
    else:
      x = np.linspace(a, b, n + 1)
      y = _evaluate(func, x)
      value = (b - a) / n * (math.fsum(y) - 0.5 * (y[0] + y[-1]))

    if previous is not None and abs(value - previous) <= q.tolerance(value):
      return value
    previous = value
    n *= 2
    if n > (_GAUSS_MAX if q.rule == "gauss" else _TRAPEZOID_MAX):
      break

  raise ConvergenceError(f"{q.rule} rule on [{a}, {b}] did not reach tolerance {q.abs_tol:g}/{q.rel_tol:g}")


def er(x):
  """er(x) = erfc(-x)/2; vectorised."""
  x = np.asarray(x, dtype=float)
  return _like(0.5 * special.erfc(-x), x)


def _log_er(x):
  # log(erfc(-x)/2) without underflow for x << 0
  return np.log(0.5 * special.erfcx(-x)) - x * x


def er_inv(p):
  """
  Inverse of er on (0, 1)

  Seeded with the normal quantile, refined by Newton steps on log er so the
  relative accuracy holds deep in the tails. For p > 1/2 the value is taken
  as -er_inv(1 - p), where 1 - p is exact.

  Args:
    :param float p: probability in (0, 1); arrays allowed

  Returns:
    float or numpy.ndarray
  """
  arr = np.asarray(p, dtype=float)
  if np.any(~((arr > 0.0) & (arr < 1.0))):
    raise DomainError(f"er_inv is defined on (0, 1); got {p}")

  low = np.minimum(arr, 1.0 - arr)
  x = special.ndtri(low) / SQRT_2
  log_low = np.log(low)
  for _ in range(_NEWTON_STEPS):
    # d/dx log er(x) = 2 / (sqrt(pi) * erfcx(-x))
    x = x - (_log_er(x) - log_low) * (0.5 * SQRT_PI * special.erfcx(-x))
  x = np.where(arr > 0.5, -x, x)
  return _like(x, p)


def density_delta(t):
  """delta(t) = sqrt(pi) * exp(er_inv(t)^2), t in (0, 1)."""
  x = er_inv(t)
  return _like(SQRT_PI * np.exp(np.square(x)), t)


def reg_inc_gamma(a, x):
  """
  Regularized lower incomplete gamma P(a, x)

  P(n + 1, x) is the probability that a Poisson(x) variable is at least n + 1.
  """
  a_arr, x_arr = np.asarray(a, dtype=float), np.asarray(x, dtype=float)
  if np.any(~(a_arr > 0.0)) or np.any(~(x_arr >= 0.0)):
    raise DomainError(f"reg_inc_gamma needs a > 0 and x >= 0; got a={a}, x={x}")
  value = special.gammainc(a_arr, x_arr)
  return value if np.ndim(value) else float(value)


def reg_inc_beta(x, a, b):
  """Regularized incomplete beta I_x(a, b), x in [0, 1], a, b > 0."""
  x_arr = np.asarray(x, dtype=float)
  a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
  if np.any(~((x_arr >= 0.0) & (x_arr <= 1.0))) or np.any(~(a_arr > 0.0)) or np.any(~(b_arr > 0.0)):
    raise DomainError(f"reg_inc_beta needs x in [0, 1], a, b > 0; got x={x}, a={a}, b={b}")
  value = special.betainc(a_arr, b_arr, x_arr)
  return value if np.ndim(value) else float(value)


_HOLDER_GRID = np.logspace(-12.0, math.log10(0.5), 241)


@dataclass(frozen=True)
class Fn01:
  """
  A function on [0, 1] with its declared endpoint behaviour

  Attributes:
    evaluator: vectorised callable on [0, 1]
    holder_exponent: p in (0, 1] with |f(t)| <= K t^p and |f(1-t)| <= K t^p, or None
    vanishes_at_endpoints: f(0) = f(1) = 0
    name: label used in logs and results
  """
  evaluator: Callable
  holder_exponent: Optional[float] = None
  vanishes_at_endpoints: bool = False
  name: str = "f"

  def __post_init__(self):
    p = self.holder_exponent
    if p is not None and not (0.0 < p <= 1.0):
      raise DomainError(f"{self.name}: Hoelder exponent {p} not in (0, 1]")
    if p is not None and not self.vanishes_at_endpoints:
      raise DomainError(f"{self.name}: a Hoelder exponent requires vanishing at both endpoints")

  def __call__(self, t):
    return self.evaluator(t)

  def side_constant(self, side, p):
    """Sampled sup of |f(t)|/t^p (side 'low') or |f(1-t)|/t^p (side 'high') for t in (0, 1/2]."""
    t = _HOLDER_GRID
    points = t if side == "low" else 1.0 - t
    return float(np.max(np.abs(np.asarray(self.evaluator(points), dtype=float)) / t ** p))

  def holder_constant(self):
    """Smallest sampled K with |f(t)| <= K t^p and |f(1-t)| <= K t^p."""
    if self.holder_exponent is None:
      raise PreconditionError(f"{self.name}: no Hoelder exponent declared")
    p = self.holder_exponent
    return max(self.side_constant("low", p), self.side_constant("high", p))

  def reflected(self):
    """t -> f(1 - t); I(f) is invariant under reflection."""
    return Fn01(lambda t: self.evaluator(1.0 - np.asarray(t, dtype=float)),
                self.holder_exponent, self.vanishes_at_endpoints, f"{self.name}(1-t)")

  @classmethod
  def entropy(cls):
    """-t log t - (1-t) log(1-t)"""
    return cls(lambda t: special.entr(t) + special.entr(1.0 - np.asarray(t, dtype=float)),
               holder_exponent=0.5, vanishes_at_endpoints=True, name="entropy")

  @classmethod
  def polynomial(cls, coefficients, name="polynomial"):
    """Polynomial with ascending coefficients; Hoelder exponent 1 when it vanishes at 0 and 1."""
    coefficients = np.asarray([float(c) for c in coefficients])
    vanishes = coefficients[0] == 0.0 and abs(math.fsum(coefficients)) <= 1e-14 * max(1.0, np.max(np.abs(coefficients)))
    return cls(lambda t: npoly.polyval(np.asarray(t, dtype=float), coefficients),
               holder_exponent=1.0 if vanishes else None, vanishes_at_endpoints=bool(vanishes), name=name)

  @classmethod
  def g(cls, p):
    """g_p(t) = t^p - t^(p+1) = t^p (1-t), p > 0"""
    if not p > 0:
      raise DomainError(f"g_p needs p > 0; got {p}")
    return cls(lambda t: np.power(t, p) * (1.0 - np.asarray(t, dtype=float)),
               holder_exponent=min(float(p), 1.0), vanishes_at_endpoints=True, name=f"g_{p:g}")

  @classmethod
  def h(cls, p):
    """h_p(t) = (t(1-t))^p, p > 0"""
    if not p > 0:
      raise DomainError(f"h_p needs p > 0; got {p}")
    return cls(lambda t: np.power(np.asarray(t, dtype=float) * (1.0 - np.asarray(t, dtype=float)), p),
               holder_exponent=min(float(p), 1.0), vanishes_at_endpoints=True, name=f"h_{p:g}")


def holder_norm(f, p):
  """
  Sampled sup over t in (0, 1) of |f(t)| (t^-p + (1-t)^-p)

  Args:
    :param callable f: function on [0, 1]
    :param float p: exponent in (0, 1]
  """
  if not (0.0 < p <= 1.0):
    raise DomainError(f"Hoelder exponent {p} not in (0, 1]")
  t = np.concatenate([_HOLDER_GRID, 1.0 - _HOLDER_GRID[::-1]])
  values = np.abs(np.asarray(f(t), dtype=float))
  return float(np.max(values * (t ** -p + (1.0 - t) ** -p)))


def _window(f, q):
  """Half-width X of the x-window; the neglected tails of int f(er(x)) dx stay below q.abs_tol."""
  base = max(6.0, math.sqrt(math.log(1.0 / q.abs_tol))) + 2.0
  p = f.holder_exponent
  big_k = max(f.holder_constant(), 1.0)
  return max(base, math.sqrt(math.log(big_k / q.abs_tol) / p) + 1.0)


def integral_I(f, q=None):
  """
  I(f) = int_R f(er(x)) dx, evaluated by two routes

  The x-route integrates f(er(x)) on [-X, X]. The t-route integrates
  f(t) delta(t) with t = exp(-y) on each half of (0, 1). The two must agree
  to 10 times the tolerance.

  Args:
    :param Fn01 f: function with declared decay at both endpoints
    :param QuadratureSpec q: rule and tolerances

  Returns:
    float
  """
  q = q or QuadratureSpec()
  if not isinstance(f, Fn01) or f.holder_exponent is None:
    raise PreconditionError("I(f) needs f with declared decay at both endpoints")

  big_x = _window(f, q)

  def in_x(x):
    return f(er(x))

  x_value = integrate_1d(in_x, -big_x, 0.0, q) + integrate_1d(in_x, 0.0, big_x, q)

  big_y = -float(_log_er(-big_x))

  def in_y(y):
    y = np.asarray(y, dtype=float)
    t = np.exp(-y)
    # delta(t) dt = sqrt(pi) exp(er_inv(t)^2 - y) dy
    weight = SQRT_PI * np.exp(np.square(er_inv(t)) - y)
    return (f(t) + f(-np.expm1(-y))) * weight

  t_value = integrate_1d(in_y, math.log(2.0), big_y, q)

  if abs(x_value - t_value) > 10.0 * q.tolerance(x_value):
    raise ConvergenceError(f"I({f.name}): x-route {x_value!r} and t-route {t_value!r} disagree")
  logger.debug(f"I({f.name}) = {x_value!r} (t-route {t_value!r})")
  return x_value

"""
 DESCRIPTION
   Spectral functionals of T_A and their Weyl-type predictions

   tr f(T_A) = sum_i f(lambda_i), with an analytic tail bound for the
   infinite models; eigenvalue counts; two-term Weyl laws; cumulants of the
   free-fermion particle number and their generating function.

   Predictions scale as k^(n - 1/2) (2 pi)^-n vol(dA) I(f).

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
import threading
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly

from errors import CutoffError, DivergenceWarning, DomainError, PreconditionError
from specfun import Fn01, er, er_inv, integral_I

# Logging
import __main__
import logging
import os
script = os.path.basename(getattr(__main__, "__file__", "toeplitz-lab"))
script = os.path.splitext(script)[0]
logger = logging.getLogger(script + "." + __name__)

TAIL_BOUND = 1e-12


def _scale(k, n, boundary_volume):
  return k ** (n - 0.5) * (2.0 * math.pi) ** (-n) * boundary_volume


def _as_fn01(f):
  if isinstance(f, Fn01):
    return f
  return Fn01(f, name=getattr(f, "__name__", "f"))


def _tail_contribution(spec, f):
  """Bound of sum f(lambda) over the eigenvalues beyond the cutoff; warns when f has no decay there."""
  bound = 0.0
  for side in spec.tail.sides:
    end = 0.0 if side == "low" else 1.0
    if abs(float(f(np.asarray([end]))[0])) > 1e-12:
      warnings.warn(f"{f.name} does not vanish at {end:g}; tr f(T_A) diverges on {spec.geometry}",
                    DivergenceWarning, stacklevel=3)
      return None
    p = f.holder_exponent or 1.0
    bound += f.side_constant(side, p) * spec.tail.bound(p)
  return bound


def trace_functional(spec, f):
  """
  tr f(T_A) = sum_i f(lambda_i)

  For infinite models the eigenvalues beyond the cutoff contribute at most
  TAIL_BOUND; a larger analytic bound raises CutoffError.

  Args:
    :param Spectrum spec: spectrum of T_A
    :param Fn01 f: function on [0, 1]

  Returns:
    float
  """
  f = _as_fn01(f)
  total = math.fsum(np.asarray(f(spec.eigenvalues), dtype=float))
  if spec.infinite:
    bound = _tail_contribution(spec, f)
    if bound is not None and bound > TAIL_BOUND:
      raise CutoffError(f"tr {f.name}: tail beyond cutoff {spec.tail.cutoff} bounded by {bound:.3e}")
  return total


def count_eigenvalues(spec, a, b):
  """N_[a,b] = #{i : a <= lambda_i <= b} for 0 < a < b < 1."""
  if not 0.0 < a < b < 1.0:
    raise DomainError(f"need 0 < a < b < 1; got a={a}, b={b}")
  values = spec.eigenvalues
  return int(np.count_nonzero((values >= a) & (values <= b)))


def weyl_count(k, n, boundary_volume, a, b):
  """Leading prediction k^(n-1/2) (2 pi)^-n vol(dA) (er_inv(b) - er_inv(a))."""
  if not 0.0 < a < b < 1.0:
    raise DomainError(f"need 0 < a < b < 1; got a={a}, b={b}")
  return _scale(k, n, boundary_volume) * (er_inv(b) - er_inv(a))


def weyl_trace(k, n, boundary_volume, f, q=None):
  """Leading prediction k^(n-1/2) (2 pi)^-n vol(dA) I(f)."""
  return _scale(k, n, boundary_volume) * integral_I(f, q)


def two_term_weyl(spec, g, mu_a, mu_complement=None, q=None):
  """
  Two-term law for a function g with Hoelder behaviour at 0 and 1

  g = g(0)(1 - X) + g(1) X + f with f(0) = f(1) = 0, so
  tr g(T_A) = g(0) tr T_{M\\A} + g(1) tr T_A + tr f(T_A) and the prediction is
  (k/2 pi)^n (g(0) mu(M\\A) + g(1) mu(A)) + k^(n-1/2) (2 pi)^-n vol(dA) I(f).

  Returns:
    tuple: (actual, predicted)
  """
  g = _as_fn01(g)
  g0, g1 = float(g(np.asarray([0.0]))[0]), float(g(np.asarray([1.0]))[0])
  sides = spec.tail.sides if spec.infinite else ()
  if g0 != 0.0 and ("low" in sides or mu_complement is None):
    raise PreconditionError("g(0) != 0 needs a finite tr T_{M\\A}")
  if g1 != 0.0 and "high" in sides:
    raise PreconditionError("g(1) != 0 needs a finite tr T_A")

  def split(t):
    t = np.asarray(t, dtype=float)
    return np.asarray(g(t), dtype=float) - g0 * (1.0 - t) - g1 * t

  p = g.holder_exponent if g.holder_exponent is not None else 1.0
  f = Fn01(split, holder_exponent=p, vanishes_at_endpoints=True, name=f"{g.name}-linear")

  actual = trace_functional(spec, f)
  if g1 != 0.0:
    actual += g1 * trace_functional(spec, Fn01(lambda t: np.asarray(t, dtype=float), name="X"))
  if g0 != 0.0:
    actual += g0 * math.fsum(1.0 - spec.eigenvalues)

  k, n = spec.k, spec.n
  bulk = g1 * mu_a + (g0 * mu_complement if g0 != 0.0 else 0.0)
  predicted = (k / (2.0 * math.pi)) ** n * bulk + _scale(k, n, spec.domain.boundary_volume) * integral_I(f, q)
  return actual, predicted


@dataclass(frozen=True)
class CumulantPolynomial:
  """
  P_l with P_1 = X and P_(l+1) = X(1 - X) P_l'

  tr P_l(T_A) is the l-th cumulant of the particle number in A.
  Coefficients are exact rationals, ascending powers.
  """
  order: int
  coefficients: tuple

  def __call__(self, t):
    return npoly.polyval(np.asarray(t, dtype=float), [float(c) for c in self.coefficients])

  def as_fn01(self):
    vanishes = self.order >= 2
    return Fn01(self, holder_exponent=1.0 if vanishes else None, vanishes_at_endpoints=vanishes,
                name=f"P_{self.order}")


_cumulant_cache = {1: (Fraction(0), Fraction(1))}
_cumulant_lock = threading.Lock()


def cumulant_polynomial(ell):
  """P_ell, memoized across threads."""
  if isinstance(ell, bool) or int(ell) != ell or ell < 1:
    raise DomainError(f"cumulant order must be a positive integer; got {ell}")
  with _cumulant_lock:
    top = max(_cumulant_cache)
    while top < ell:
      c = _cumulant_cache[top]
      derivative = [c[i] * i for i in range(1, len(c))]
      nxt = [Fraction(0)] * (len(c) + 1)
      # multiply by X - X^2
      for i, d in enumerate(derivative):
        nxt[i + 1] += d
        nxt[i + 2] -= d
      _cumulant_cache[top + 1] = tuple(nxt)
      top += 1
    return CumulantPolynomial(int(ell), _cumulant_cache[int(ell)])


def cumulant(spec, ell):
  """kappa_ell = tr P_ell(T_A)."""
  return trace_functional(spec, cumulant_polynomial(ell).as_fn01())


def cumulant_prediction(k, n, boundary_volume, ell, q=None):
  """Leading law for kappa_ell, ell >= 2: the scale times I(P_ell); zero for odd ell."""
  if ell < 2:
    raise DomainError(f"boundary law holds for ell >= 2; got {ell}")
  if ell % 2:
    return 0.0
  return _scale(k, n, boundary_volume) * integral_I(cumulant_polynomial(ell).as_fn01(), q)


def _cgf_parts(t):
  t = complex(t)
  if abs(t.imag) >= math.pi:
    raise DomainError(f"cgf needs |Im t| < pi; got t={t}")
  # e^t - 1 without cancellation near t = 0
  growth = complex(math.expm1(t.real) * math.cos(t.imag) - 2.0 * math.sin(0.5 * t.imag) ** 2,
                   math.exp(t.real) * math.sin(t.imag))

  def value(lam):
    lam = np.asarray(lam, dtype=float)
    if t.imag == 0.0:
      return (np.log1p(lam * growth.real) - t.real * lam).astype(complex)
    return np.log1p(lam * growth) - t * lam

  real = Fn01(lambda lam: value(lam).real, holder_exponent=1.0, vanishes_at_endpoints=True, name=f"cgf({t}).re")
  imag = Fn01(lambda lam: value(lam).imag, holder_exponent=1.0, vanishes_at_endpoints=True, name=f"cgf({t}).im")
  return t, real, imag


def cgf(spec, t):
  """
  Centred cumulant generating function sum_i [log(1 + lambda_i (e^t - 1)) - t lambda_i]

  Real for real t; complex t needs |Im t| < pi.
  """
  t, real, imag = _cgf_parts(t)
  value = trace_functional(spec, real)
  if t.imag == 0.0:
    return value
  return complex(value, trace_functional(spec, imag))


def cgf_prediction(k, n, boundary_volume, t, q=None):
  """Boundary law for cgf: the scale times I(log(1 + X(e^t - 1)) - tX)."""
  t, real, imag = _cgf_parts(t)
  scale = _scale(k, n, boundary_volume)
  value = scale * integral_I(real, q)
  if t.imag == 0.0:
    return value
  return complex(value, scale * integral_I(imag, q))


def entanglement_entropy(spec):
  """S = tr[-T log T - (1 - T) log(1 - T)]."""
  return trace_functional(spec, Fn01.entropy())


def model_variable_cumulant(alpha, ell):
  """
  sum over m in Z of P_ell(er(alpha m))

  alpha times this sum tends to I(P_ell) as alpha -> 0 (Riemann sum).
  Vanishes for odd ell because P_ell(1 - t) = -P_ell(t).
  """
  if not alpha > 0.0:
    raise DomainError(f"alpha must be positive; got {alpha}")
  if ell < 2:
    raise DomainError(f"cumulant order must be at least 2; got {ell}")
  if ell % 2:
    return 0.0
  p = cumulant_polynomial(ell)
  # er(-x) < 1e-30 beyond x = 8.3
  m = np.arange(1, math.ceil(8.3 / alpha) + 1)
  return float(p(0.5)) + 2.0 * math.fsum(np.asarray(p(er(-alpha * m)), dtype=float))


def euler_maclaurin_sum(f, tau, offset=0.0, window=12.0):
  """
  tau^-1 sum over l of f((l + offset)/tau), for Schwartz-like f

  Terms with |l + offset| > window * tau are dropped. For such f the sum
  approaches int f dx faster than any power of 1/tau.
  """
  if not tau > 0.0:
    raise DomainError(f"tau must be positive; got {tau}")
  lo = math.floor(-window * tau - offset)
  hi = math.ceil(window * tau - offset)
  points = (np.arange(lo, hi + 1) + offset) / tau
  return math.fsum(np.asarray(f(points), dtype=float)) / tau


def concentration_report(spec, eps, p=1.0):
  """
  Concentration of the spectrum at {0, 1}

  Both scaled quantities stay bounded in k:
    mid  = #{eps <= lambda <= 1 - eps} / d_k * sqrt(k)
    mass = tr (T(1 - T))^p / d_k * sqrt(k)
  """
  if not 0.0 < eps < 0.5:
    raise DomainError(f"eps must lie in (0, 1/2); got {eps}")
  d_k = spec.effective_dimension()
  root = math.sqrt(spec.k)
  mid = count_eigenvalues(spec, eps, 1.0 - eps)
  mass = trace_functional(spec, Fn01.h(p))
  return {"k": spec.k, "d_k": d_k, "mid_scaled": mid / d_k * root, "mass_scaled": mass / d_k * root}


def extreme_fractions(spec, N=1.0):
  """
  Spectrum split at k^-N on a compact model

  low = |sp in [0, k^-N]| / d_k tends to nu(A^c), top = |sp in [1 - k^-N, 1]| / d_k
  to nu(A), and the middle fraction carries the rest.

  Returns:
    dict: k, threshold, low, middle, top, nu, nu_complement, low_gap, top_gap
  """
  if spec.infinite or spec.domain.manifold_volume is None:
    raise PreconditionError(f"{spec.geometry}/{spec.domain.kind}: extreme fractions need a compact model")
  if not N > 0.0:
    raise DomainError(f"N must be positive; got {N}")
  threshold = float(spec.k) ** -N
  if not threshold < 0.5:
    raise DomainError(f"k^-N = {threshold} must be below 1/2")
  d_k = spec.effective_dimension()
  values = spec.eigenvalues
  low = float(np.count_nonzero(values <= threshold)) / d_k
  top = float(np.count_nonzero(values >= 1.0 - threshold)) / d_k
  middle = float(values.size) / d_k - low - top
  nu = (spec.domain.volume or 0.0) / spec.domain.manifold_volume
  return {"k": spec.k, "threshold": threshold, "low": low, "middle": middle, "top": top, "nu": nu,
          "nu_complement": 1.0 - nu, "low_gap": abs(low - (1.0 - nu)), "top_gap": abs(top - nu)}

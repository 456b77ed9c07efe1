"""
 DESCRIPTION
   Model Kaehler geometries and spectra of T_A = Pi_k 1_A Pi_k

   Geometries (complex dimension n = 1):
   - cylinder        infinite lattice; half-cylinder domain, lambda_l = er(l/sqrt(k))
   - bargmann_plane  C with mu = 2 dLeb; basis e_n = a_n z^n, a_n^2 = k^(n+1)/(2 pi n!)
   - sphere          CP^1 of area 2 pi; basis s_l ~ u^(l/2) (1-u)^((k-l)/2) e^(i l phi),
                     u = sin^2(theta/2), dim H_k = k + 1

   Closed forms exist for rotation-invariant domains. Shifted disks and
   generic (star-shaped about the north pole) sphere domains assemble the
   Gram matrix <1_A e_j, e_i> by quadrature and diagonalize it.

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

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import linalg, special

from errors import ConvergenceError, CutoffError, DomainError, PreconditionError, SpectrumError
from specfun import QuadratureSpec, er, integrate_1d, reg_inc_beta, reg_inc_gamma

# Logging
import __main__
import logging
import os
script = os.path.basename(getattr(__main__, "__file__", "toeplitz-lab"))
script = os.path.splitext(script)[0]
logger = logging.getLogger(script + "." + __name__)

GEOMETRIES = ("cylinder", "bargmann_plane", "sphere")

# complex dimension of every model geometry
DIMENSION = 1

SPHERE_AREA = 2.0 * math.pi

# kind -> geometries it lives on
_DOMAIN_GEOMETRY = {
  "half_cylinder":  ("cylinder",),
  "disk":           ("bargmann_plane",),
  "annulus":        ("bargmann_plane",),
  "shifted_disk":   ("bargmann_plane",),
  "polar_cap":      ("sphere",),
  "generic_sphere": ("sphere",),
  "empty":          GEOMETRIES,
  "full":           GEOMETRIES,
}

CLAMP_SLACK = 1e-10
MATRIX_TOL = 1e-11
_RESOLUTION = 1024


@dataclass(frozen=True)
class DomainSpec:
  """
  Domain A with smooth boundary and its defining data

  Attributes:
    kind: one of the keys of _DOMAIN_GEOMETRY
    boundary_volume: Riemannian length of the boundary curve
    volume: mu(A), None when infinite
    manifold_volume: mu(M), None for non-compact M
    params: radii, centre, cap angle
    boundary: theta = Theta(phi) for generic sphere domains
    complement: A is the complement of the region the params describe
  """
  kind: str
  boundary_volume: float
  volume: Optional[float] = None
  manifold_volume: Optional[float] = None
  params: dict = field(default_factory=dict)
  boundary: Optional[Callable] = None
  complement: bool = False

  def __post_init__(self):
    if self.kind not in _DOMAIN_GEOMETRY:
      raise DomainError(f"unknown domain kind '{self.kind}'")
    degenerate = self.kind in ("empty", "full")
    if not degenerate and not self.boundary_volume > 0.0:
      raise DomainError(f"{self.kind}: boundary volume must be positive; got {self.boundary_volume}")

  @property
  def degenerate(self):
    return self.kind in ("empty", "full")

  def supports(self, geometry):
    return geometry in _DOMAIN_GEOMETRY[self.kind]

  def defining_function(self, point):
    """
    Signed defining function rho; rho < 0 inside A, rho = 0 on the boundary

    Points are complex z on the plane, (x, y) on the cylinder and (theta, phi)
    on the sphere.
    """
    p = self.params
    if self.kind == "empty":
      value = 1.0
    elif self.kind == "full":
      value = -1.0
    elif self.kind == "half_cylinder":
      value = -point[0]
    elif self.kind == "disk":
      value = abs(point) - p["radius"]
    elif self.kind == "annulus":
      value = max(p["inner"] - abs(point), abs(point) - p["outer"])
    elif self.kind == "shifted_disk":
      value = abs(point - p["center"]) - p["radius"]
    elif self.kind == "polar_cap":
      value = point[0] - p["theta0"]
    else:
      value = point[0] - self.boundary(point[1])
    return -value if self.complement else value

  def contains(self, point):
    return self.defining_function(point) < 0.0

  def complemented(self):
    """The complementary domain M \\ A of a compact geometry."""
    if self.manifold_volume is None:
      raise PreconditionError(f"{self.kind}: complement needs a compact manifold")
    kind = {"empty": "full", "full": "empty"}.get(self.kind, self.kind)
    return DomainSpec(kind, self.boundary_volume, self.manifold_volume - self.volume, self.manifold_volume,
                      dict(self.params), self.boundary, complement=(not self.complement) and kind == self.kind)

  @classmethod
  def half_cylinder(cls):
    """{x >= 0} on R x (R / 2 pi Z); boundary circle of length 2 pi."""
    return cls("half_cylinder", 2.0 * math.pi)

  @classmethod
  def disk(cls, radius):
    if not radius > 0.0:
      raise DomainError(f"disk radius must be positive; got {radius}")
    return cls("disk", 2.0 * math.sqrt(2.0) * math.pi * radius, 2.0 * math.pi * radius ** 2,
               params={"radius": float(radius)})

  @classmethod
  def annulus(cls, inner, outer):
    if not 0.0 < inner < outer:
      raise DomainError(f"annulus needs 0 < inner < outer; got {inner}, {outer}")
    return cls("annulus", 2.0 * math.sqrt(2.0) * math.pi * (inner + outer), 2.0 * math.pi * (outer ** 2 - inner ** 2),
               params={"inner": float(inner), "outer": float(outer)})

  @classmethod
  def shifted_disk(cls, radius, center):
    if not radius > 0.0:
      raise DomainError(f"disk radius must be positive; got {radius}")
    return cls("shifted_disk", 2.0 * math.sqrt(2.0) * math.pi * radius, 2.0 * math.pi * radius ** 2,
               params={"radius": float(radius), "center": complex(center)})

  @classmethod
  def polar_cap(cls, theta0):
    """Cap {theta < theta0} about the north pole of the sphere of area 2 pi."""
    if not 0.0 < theta0 < math.pi:
      raise DomainError(f"cap angle must lie in (0, pi); got {theta0}")
    return cls("polar_cap", math.sqrt(2.0) * math.pi * math.sin(theta0), SPHERE_AREA * math.sin(0.5 * theta0) ** 2,
               SPHERE_AREA, params={"theta0": float(theta0)})

  @classmethod
  def generic_sphere(cls, boundary, complement=False):
    """
    Domain {theta < Theta(phi)} star-shaped about the north pole

    Args:
      :param callable boundary: smooth 2 pi periodic Theta(phi) with values in (0, pi)
      :param bool complement: take the complement instead
    """
    phi = 2.0 * math.pi * np.arange(_RESOLUTION) / _RESOLUTION
    theta = np.asarray(boundary(phi), dtype=float)
    if theta.shape != phi.shape or np.any(~((theta > 0.0) & (theta < math.pi))):
      raise DomainError("boundary Theta(phi) must take values in (0, pi)")

    coefficients = np.fft.rfft(theta)
    modes = np.arange(coefficients.size)
    coefficients = 1j * modes * coefficients
    coefficients[-1] = 0.0
    slope = np.fft.irfft(coefficients, _RESOLUTION)

    step = 2.0 * math.pi / _RESOLUTION
    length = step * math.fsum(np.sqrt(slope ** 2 + np.sin(theta) ** 2)) / math.sqrt(2.0)
    area = step * math.fsum(np.sin(0.5 * theta) ** 2)
    if complement:
      area = SPHERE_AREA - area
    return cls("generic_sphere", length, area, SPHERE_AREA, boundary=boundary, complement=complement)

  @classmethod
  def empty(cls, geometry):
    return cls("empty", 0.0, 0.0, SPHERE_AREA if geometry == "sphere" else None)

  @classmethod
  def full(cls, geometry):
    return cls("full", 0.0, SPHERE_AREA if geometry == "sphere" else None,
               SPHERE_AREA if geometry == "sphere" else None)


def tilted_cap_boundary(theta0, tilt):
  """
  Theta(phi) of the cap of angular radius theta0 centred at polar angle tilt

  The cap contains the north pole when tilt < theta0.
  """
  if not (0.0 <= tilt < theta0 and tilt + theta0 < math.pi):
    raise DomainError(f"tilted cap needs 0 <= tilt < theta0 and tilt + theta0 < pi; got {tilt}, {theta0}")

  def boundary(phi):
    phi = np.asarray(phi, dtype=float)
    rho = np.sqrt(math.cos(tilt) ** 2 + (math.sin(tilt) * np.cos(phi)) ** 2)
    return np.arctan2(math.sin(tilt) * np.cos(phi), math.cos(tilt)) + np.arccos(math.cos(theta0) / rho)

  return boundary


@dataclass(frozen=True)
class TailModel:
  """
  Analytic bound for eigenvalues beyond the basis cutoff of an infinite model

  kind 'er': lambda_l = er(-l/scale) for l > cutoff (cylinder, both sides)
  kind 'poisson': lambda_n <= P(n + 1, scale) for n > cutoff (Bargmann, side 'low')
  """
  kind: str
  cutoff: int
  scale: float
  sides: tuple

  def bound(self, p):
    """Upper bound of the sum over one side of dist(lambda, {0, 1})^p beyond the cutoff."""
    if self.kind == "er":
      first = float(er(-(self.cutoff + 1) / self.scale)) ** p
      ratio = math.exp(-p * (2 * self.cutoff + 3) / self.scale ** 2)
    else:
      m = self.cutoff + 1
      first = float(reg_inc_gamma(m + 1, self.scale)) ** p
      ratio = (self.scale / (m + 2)) ** p
    if ratio >= 1.0:
      return math.inf
    return first / (1.0 - ratio)


@dataclass(frozen=True)
class Spectrum:
  """
  Eigenvalues of T_A, sorted ascending, read-only

  Attributes:
    eigenvalues: values in [0, 1] (clamped within 1e-10)
    k: semiclassical parameter
    n: complex dimension
    domain: the domain A
    geometry: model geometry
    exact: closed form (True) or numerical diagonalization (False)
    tail: analytic tail bound when the model is an infinite lattice
  """
  eigenvalues: np.ndarray
  k: int
  n: int
  domain: DomainSpec
  geometry: str
  exact: bool
  tail: Optional[TailModel] = None

  def __post_init__(self):
    values = np.sort(np.asarray(self.eigenvalues, dtype=float).ravel())
    if values.size and (values[0] < -CLAMP_SLACK or values[-1] > 1.0 + CLAMP_SLACK or np.any(np.isnan(values))):
      raise SpectrumError(f"{self.geometry}/{self.domain.kind} k={self.k}: eigenvalues outside [0, 1]: "
                          f"min={values[0]!r}, max={values[-1]!r}")
    values = np.clip(values, 0.0, 1.0)
    values.setflags(write=False)
    object.__setattr__(self, "eigenvalues", values)

  def __len__(self):
    return self.eigenvalues.size

  @property
  def infinite(self):
    return self.tail is not None

  def effective_dimension(self):
    """d_k: dim H_k on the sphere, (k/2 pi)^n mu(A) on the plane."""
    if self.geometry == "sphere":
      return float(self.k + 1)
    if self.geometry == "bargmann_plane" and self.domain.volume:
      return (self.k / (2.0 * math.pi)) ** self.n * self.domain.volume
    raise PreconditionError(f"{self.geometry}/{self.domain.kind}: no finite dimension")


@dataclass(frozen=True)
class ModelSpec:
  """
  A model run: geometry, domain, k, basis cutoff and quadrature

  truncation is l_max (cylinder) or n_max (plane); None picks the default cutoff.
  """
  geometry: str
  domain: DomainSpec
  k: int
  truncation: Optional[int] = None
  quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

  def __post_init__(self):
    if self.geometry not in GEOMETRIES:
      raise DomainError(f"unknown geometry '{self.geometry}'; use one of {GEOMETRIES}")
    _check_k(self.k)
    if not self.domain.supports(self.geometry):
      raise DomainError(f"domain '{self.domain.kind}' does not live on '{self.geometry}'")

  @property
  def n(self):
    return DIMENSION


def _check_k(k):
  if isinstance(k, bool) or int(k) != k or k < 1:
    raise DomainError(f"k must be a positive integer; got {k}")


def default_cylinder_cutoff(k):
  return math.ceil(10.0 * math.sqrt(k)) + 20


def default_plane_cutoff(k, reach):
  """n_max for a domain inside the disk of radius reach about the origin."""
  return math.ceil(5.0 * k * reach ** 2) + 40


def _plane_reach(domain):
  p = domain.params
  if domain.kind == "disk":
    return p["radius"]
  if domain.kind == "annulus":
    return p["outer"]
  if domain.kind == "shifted_disk":
    return p["radius"] + abs(p["center"])
  return 1.0


def cylinder_spectrum(k, ell_max=None):
  """
  Half-cylinder spectrum er(l/sqrt(k)), |l| <= l_max

  Args:
    :param int k: semiclassical parameter
    :param int ell_max: cutoff, at least 10 sqrt(k); default ceil(10 sqrt(k)) + 20
  """
  _check_k(k)
  if ell_max is None:
    ell_max = default_cylinder_cutoff(k)
  if ell_max < 10.0 * math.sqrt(k):
    raise PreconditionError(f"cylinder cutoff {ell_max} below 10 sqrt(k) = {10.0 * math.sqrt(k):.1f}")
  scale = math.sqrt(k)
  ell = np.arange(-ell_max, ell_max + 1)
  return Spectrum(er(ell / scale), k, DIMENSION, DomainSpec.half_cylinder(), "cylinder", exact=True,
                  tail=TailModel("er", int(ell_max), scale, ("low", "high")))


def _disk_diagonal(k, radius, n_max):
  return reg_inc_gamma(np.arange(n_max + 1) + 1.0, k * radius ** 2)


def bargmann_disk_spectrum(k, radius, n_max=None):
  """
  Disk of radius R in the Bargmann plane: lambda_n = P(n + 1, k R^2), 0 <= n <= n_max

  Eigenvalues beyond n_max are covered by a Poisson tail bound.
  """
  _check_k(k)
  domain = DomainSpec.disk(radius)
  if n_max is None:
    n_max = default_plane_cutoff(k, radius)
  if n_max < 5.0 * k * radius ** 2:
    raise PreconditionError(f"plane cutoff {n_max} below 5 k R^2 = {5.0 * k * radius ** 2:.1f}")
  return Spectrum(_disk_diagonal(k, radius, n_max), k, DIMENSION, domain, "bargmann_plane", exact=True,
                  tail=TailModel("poisson", int(n_max), k * radius ** 2, ("low",)))


def _annulus_diagonal(k, inner, outer, n_max):
  shifted = np.arange(n_max + 1) + 1.0
  return special.gammaincc(shifted, k * inner ** 2) - special.gammaincc(shifted, k * outer ** 2)


def bargmann_annulus_spectrum(k, inner, outer, n_max=None):
  """Annulus inner < |z| < outer: lambda_n = P(n + 1, k outer^2) - P(n + 1, k inner^2)."""
  _check_k(k)
  domain = DomainSpec.annulus(inner, outer)
  if n_max is None:
    n_max = default_plane_cutoff(k, outer)
  if n_max < 5.0 * k * outer ** 2:
    raise PreconditionError(f"plane cutoff {n_max} below 5 k R2^2 = {5.0 * k * outer ** 2:.1f}")
  return Spectrum(_annulus_diagonal(k, inner, outer, n_max), k, DIMENSION, domain, "bargmann_plane", exact=True,
                  tail=TailModel("poisson", int(n_max), k * outer ** 2, ("low",)))


def _cap_diagonal(k, theta0):
  ell = np.arange(k + 1, dtype=float)
  return reg_inc_beta(math.sin(0.5 * theta0) ** 2, ell + 1.0, k - ell + 1.0)


def sphere_cap_spectrum(k, theta0):
  """Polar cap {theta < theta0}: lambda_l = I_x(l + 1, k - l + 1), x = sin^2(theta0/2), 0 <= l <= k."""
  _check_k(k)
  return Spectrum(_cap_diagonal(k, theta0), k, DIMENSION, DomainSpec.polar_cap(theta0), "sphere", exact=True)


def basis_size(model):
  """Number of basis functions kept for the model."""
  if model.geometry == "sphere":
    return model.k + 1
  if model.geometry == "cylinder":
    return 2 * (model.truncation or default_cylinder_cutoff(model.k)) + 1
  return (model.truncation or default_plane_cutoff(model.k, _plane_reach(model.domain))) + 1


def _shifted_disk_matrix(k, radius, center, n_max):
  """
  Gram matrix <1_A e_n, e_m> of the disk |z - c| < R in the monomial basis

  Polar coordinates about the origin split the domain into a full-circle part
  r < R - |c| (diagonal, closed form) and an arc part |R - |c|| < r < R + |c|,
  where the angular integral of e^(i j theta) over the arc is explicit. The
  radial arc integral uses Gauss-Legendre after r = a + (b - a)(1 - cos pi s)/2,
  with order doubling until entries move less than MATRIX_TOL.
  """
  size = n_max + 1
  n = np.arange(size)
  log_a = 0.5 * ((n + 1) * math.log(k) - math.log(2.0 * math.pi) - special.gammaln(n + 1.0))
  offsets = n[None, :] - n[:, None]
  c_abs = abs(center)

  matrix = np.zeros((size, size), dtype=complex)
  inner = radius - c_abs
  if inner > 0.0:
    matrix[n, n] = reg_inc_gamma(n + 1.0, k * inner ** 2)
  if c_abs == 0.0:
    return matrix

  lo, hi = abs(radius - c_abs), radius + c_abs
  rotation = np.exp(1j * offsets * cmath.phase(center))
  safe = np.where(offsets == 0, 1, offsets)

  def arc_part(order):
    s, w = np.polynomial.legendre.leggauss(order)
    s, w = 0.5 * (s + 1.0), 0.5 * w
    r = lo + 0.5 * (hi - lo) * (1.0 - np.cos(math.pi * s))
    jacobian = 0.5 * math.pi * (hi - lo) * np.sin(math.pi * s)
    cos_arc = np.clip((r ** 2 + c_abs ** 2 - radius ** 2) / (2.0 * r * c_abs), -1.0, 1.0)
    half_angle = np.arccos(cos_arc)

    part = np.zeros((size, size))
    for r_q, w_q, theta_q in zip(r, w * jacobian, half_angle):
      u = np.exp(log_a + n * math.log(r_q) - 0.5 * k * r_q ** 2)
      angular = np.where(offsets == 0, 2.0 * theta_q, 2.0 * np.sin(offsets * theta_q) / safe)
      # mu = 2 dLeb, r dr from polar coordinates
      part += (2.0 * w_q * r_q) * np.outer(u, u) * angular
    return part * rotation

  order = 64
  previous = arc_part(order)
  while True:
    order *= 2
    if order > 4096:
      raise ConvergenceError(f"shifted disk k={k}: arc quadrature did not settle")
    current = arc_part(order)
    change = float(np.max(np.abs(current - previous)))
    previous = current
    if change < MATRIX_TOL:
      break
  logger.debug(f"shifted disk k={k} size={size}: arc order {order}, last change {change:.2e}")
  return matrix + previous


def _generic_sphere_matrix(k, boundary, complement):
  """
  Gram matrix <1_A s_j, s_i> for A = {theta < Theta(phi)}

  G[i][j] = N_i N_j B(a, b) int e^(i (j - i) phi) I_x(phi)(a, b) dphi with
  a = (i + j)/2 + 1, b = k - (i + j)/2 + 1 and x(phi) = sin^2(Theta(phi)/2).
  The phi-integral is a periodic trapezoid sum, i.e. an FFT, doubled until
  entries move less than MATRIX_TOL.
  """
  size = k + 1
  ell = np.arange(size)
  log_binom = special.gammaln(k + 1.0) - special.gammaln(ell + 1.0) - special.gammaln(k - ell + 1.0)
  sums = np.arange(2 * k + 1)
  a = 0.5 * sums + 1.0
  b = k - 0.5 * sums + 1.0
  index_sum = ell[:, None] + ell[None, :]
  offsets = ell[None, :] - ell[:, None]
  prefactor = np.exp(0.5 * (log_binom[:, None] + log_binom[None, :]) + math.log((k + 1) / (2.0 * math.pi))
                     + special.betaln(a, b)[index_sum])

  n_phi = max(64, 1 << math.ceil(math.log2(4 * k + 8)))
  previous = None
  while True:
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    x = np.sin(0.5 * np.asarray(boundary(phi), dtype=float)) ** 2
    incomplete = special.betainc(a[:, None], b[:, None], x[None, :])
    fourier = 2.0 * math.pi * np.fft.ifft(incomplete, axis=1)
    current = prefactor * fourier[index_sum, offsets % n_phi]
    if previous is not None and float(np.max(np.abs(current - previous))) < MATRIX_TOL:
      break
    previous = current
    n_phi *= 2
    if n_phi > 1 << 16:
      raise ConvergenceError(f"generic sphere domain k={k}: phi quadrature did not settle")

  logger.debug(f"generic sphere k={k}: {n_phi} phi nodes")
  if complement:
    current = np.eye(size) - current
  return current


def _closed_form_diagonal(model):
  """Eigenvalues of a rotation-invariant model in basis order."""
  d, k = model.domain, model.k
  if d.kind == "half_cylinder":
    ell_max = model.truncation or default_cylinder_cutoff(k)
    return er(np.arange(-ell_max, ell_max + 1) / math.sqrt(k))
  if d.kind == "disk":
    return _disk_diagonal(k, d.params["radius"], basis_size(model) - 1)
  if d.kind == "annulus":
    return _annulus_diagonal(k, d.params["inner"], d.params["outer"], basis_size(model) - 1)
  values = _cap_diagonal(k, d.params["theta0"])
  return 1.0 - values if d.complement else values


def toeplitz_matrix(model):
  """
  Hermitian matrix of T_A in the orthonormal basis of the model

  Returns:
    numpy.ndarray: basis_size(model) x basis_size(model)
  """
  size = basis_size(model)
  d = model.domain
  if d.kind == "empty":
    return np.zeros((size, size))
  if d.kind == "full":
    return np.eye(size)
  if d.kind == "shifted_disk":
    return _shifted_disk_matrix(model.k, d.params["radius"], d.params["center"], size - 1)
  if d.kind == "generic_sphere":
    return _generic_sphere_matrix(model.k, d.boundary, d.complement)
  return np.diag(_closed_form_diagonal(model))


def hermitian_eigenvalues(matrix):
  """
  Eigenvalues of a Hermitian matrix, ascending

  Checks Hermitian symmetry before and a sample of residuals after the solve.
  """
  h = np.asarray(matrix)
  if h.ndim != 2 or h.shape[0] != h.shape[1]:
    raise PreconditionError(f"square matrix expected; got shape {h.shape}")
  if h.size == 0:
    return np.empty(0)
  scale = max(1.0, float(np.max(np.abs(h))))
  asymmetry = float(np.max(np.abs(h - h.conj().T)))
  if asymmetry > 1e-10 * scale:
    raise PreconditionError(f"matrix is not Hermitian; max |H - H^*| = {asymmetry:.3e}")
  h = 0.5 * (h + h.conj().T)

  try:
    values, vectors = linalg.eigh(h)
  except linalg.LinAlgError as e:
    raise ConvergenceError(f"eigensolver failed: {e}") from e

  picks = np.unique(np.linspace(0, values.size - 1, min(8, values.size)).astype(int))
  residual = np.linalg.norm(h @ vectors[:, picks] - vectors[:, picks] * values[picks], axis=0)
  if float(np.max(residual)) > 1e-8 * max(1.0, float(np.max(np.abs(values)))):
    raise ConvergenceError(f"eigenpair residual {float(np.max(residual)):.3e} too large")
  return values


def _tail(model):
  d, k = model.domain, model.k
  if model.geometry == "cylinder" and not d.degenerate:
    return TailModel("er", basis_size(model) // 2, math.sqrt(k), ("low", "high"))
  if model.geometry == "bargmann_plane" and not d.degenerate:
    return TailModel("poisson", basis_size(model) - 1, k * _plane_reach(d) ** 2, ("low",))
  return None


def spectrum(model):
  """
  Spectrum of T_A for a model

  Rotation-invariant domains use closed forms; shifted disks and generic sphere
  domains diagonalize toeplitz_matrix(model).
  """
  d = model.domain
  logger.debug(f"{model.geometry}/{d.kind} k={model.k}")
  if model.geometry == "cylinder" and d.kind == "half_cylinder":
    return cylinder_spectrum(model.k, model.truncation)
  if d.kind == "disk":
    return bargmann_disk_spectrum(model.k, d.params["radius"], model.truncation)
  if d.kind == "annulus":
    return bargmann_annulus_spectrum(model.k, d.params["inner"], d.params["outer"], model.truncation)
  if d.kind == "polar_cap" and not d.complement:
    return sphere_cap_spectrum(model.k, d.params["theta0"])

  exact = d.kind in ("empty", "full", "polar_cap")
  values = np.diag(toeplitz_matrix(model)).real if exact else hermitian_eigenvalues(toeplitz_matrix(model))
  return Spectrum(values, model.k, DIMENSION, d, model.geometry, exact=exact, tail=_tail(model))


def complement(spec):
  """Spectrum of T_{M \\ A} = I - T_A on a compact model."""
  if spec.infinite or spec.domain.manifold_volume is None:
    raise PreconditionError(f"{spec.geometry}: complement needs a compact model")
  return Spectrum(1.0 - spec.eigenvalues, spec.k, spec.n, spec.domain.complemented(), spec.geometry, spec.exact)


def fourier_interval_matrix(k, arcs):
  """
  Truncated Toeplitz matrix of the indicator of a union of arcs of the circle

  M[l][m] = (1/2 pi) int_A e^(i (m - l) x) dx, 0 <= l, m <= k

  Args:
    :param int k: truncation
    :param list arcs: (start, end) pairs with start < end, disjoint modulo 2 pi
  """
  _check_k(k)
  normalized = []
  for start, end in arcs:
    if not end > start:
      raise DomainError(f"arc ({start}, {end}) must have end > start")
    begin = math.fmod(start, 2.0 * math.pi)
    begin = begin + 2.0 * math.pi if begin < 0.0 else begin
    normalized.append((begin, begin + (end - start)))
  normalized.sort()
  total = math.fsum(e - s for s, e in normalized)
  if total > 2.0 * math.pi + 1e-12:
    raise DomainError(f"arcs cover {total:.6f} > 2 pi")
  for (_, e0), (s1, _) in zip(normalized, normalized[1:]):
    if s1 < e0 - 1e-12:
      raise DomainError("arcs overlap")
  if normalized and normalized[-1][1] - 2.0 * math.pi > normalized[0][0] + 1e-12:
    raise DomainError("arcs overlap")

  ell = np.arange(k + 1)
  d = ell[None, :] - ell[:, None]
  safe = np.where(d == 0, 1, d)
  matrix = np.zeros((k + 1, k + 1), dtype=complex)
  for a, b in normalized:
    matrix += np.where(d == 0, (b - a) / (2.0 * math.pi),
                       (np.exp(1j * d * b) - np.exp(1j * d * a)) / (2j * math.pi * safe))
  return matrix


def log_law_count(k, boundary_points, a, b):
  """Predicted eigenvalue count of fourier_interval_matrix in [a, b]: ln k |dA| (logit b - logit a) / (2 pi^2)."""
  if not 0.0 < a < b < 1.0:
    raise DomainError(f"need 0 < a < b < 1; got a={a}, b={b}")
  logit = lambda t: math.log(t / (1.0 - t))
  return math.log(k) * boundary_points / (2.0 * math.pi ** 2) * (logit(b) - logit(a))


def coherent_norm_on_domain(model, x):
  """
  ||1_A e_x|| for the coherent state e_x = Pi_k(., x) of the Bargmann plane

  ||e_x||_A^2 = (k/2 pi)^2 2 int_A exp(-k |z - x|^2) dLeb(z); for disks the
  angular integral is a Bessel function, leaving a radial integral about the
  disk centre.
  """
  d = model.domain
  if model.geometry != "bargmann_plane" or d.kind not in ("disk", "shifted_disk"):
    raise PreconditionError("coherent norms are implemented for disks in the Bargmann plane")
  k = model.k
  radius = d.params["radius"]
  dist = abs(complex(x) - d.params.get("center", 0.0))
  gap = max(dist - radius, 0.0)

  def integrand(r):
    # exp(-k (r - dist)^2) i0e(2 k r dist), rescaled by exp(k gap^2)
    return r * np.exp(-k * ((r - dist) ** 2 - gap ** 2)) * special.i0e(2.0 * k * r * dist)

  q = QuadratureSpec("adaptive", abs_tol=1e-300, rel_tol=1e-10, max_refinements=model.quadrature.max_refinements)
  width = 1.0 / math.sqrt(k)
  points = [p for p in (dist, radius - 12.0 * width) if 0.0 < p < radius]
  scaled = integrate_1d(integrand, 0.0, radius, q, points=points or None)
  if not scaled > 0.0:
    raise ConvergenceError(f"coherent norm at distance {dist} underflowed")
  log_square = math.log(k * k / math.pi) + math.log(scaled) - k * gap ** 2
  return math.exp(0.5 * log_square)


def write_spectrum_csv(spec, stream):
  """
  Write a spectrum as CSV

  Two comment lines (header and values of model,k,n,boundary_volume)
  followed by one eigenvalue per line in 17 significant digits.

  Args:
    :param Spectrum spec: the spectrum
    :param stream: text stream or path
  """
  if isinstance(stream, (str, os.PathLike)):
    with open(stream, "w", encoding="utf-8", newline="") as f:
      write_spectrum_csv(spec, f)
    return
  stream.write("# model,k,n,boundary_volume\n")
  stream.write(f"# {spec.geometry},{spec.k},{spec.n},{spec.domain.boundary_volume:.17g}\n")
  for value in spec.eigenvalues:
    stream.write(f"{value:.17g}\n")

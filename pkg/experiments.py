"""
 DESCRIPTION
   Experiment registry and ladder runner

   Use this table to define the convergence experiments that can be run over
   a k-ladder. Every entry must carry all fields below.

   NAME: [
     ANCHOR,
     DESCRIPTION,
     RUNNER,
     VERDICT,
     MODELS,
     TOLERANCES,
     OPTIONS,
     SAMPLES,
     LADDER
     ]

   A run writes <output_dir>/<experiment>-<timestamp>.csv and .json; the CSV
   body depends only on the configuration (seed included).

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
import queue
import threading
import time
from dataclasses import dataclass, field

import numpy as np

import asymptotics
import config as cfg
import fermion
import kernels
import models
import sampling
import spectral
from errors import ConfigError, DomainError, LabError
from specfun import I_P2, Fn01, er

# Logging
import __main__
import logging
import os
script = os.path.basename(getattr(__main__, "__file__", "toeplitz-lab"))
script = os.path.splitext(script)[0]
logger = logging.getLogger(script + "." + __name__)

SCHEMA = "v1"
BASE_COLUMNS = ("k", "actual", "predicted", "ratio", "residual")

# residuals below this are rounding noise and carry no trend
TREND_FLOOR = 1e-8
# allowed rise of the residual per ladder step, as a fraction of the tolerance
TREND_SLACK = 0.1

# CONSTANTS - DON'T CHANGE
# Used as index for the experiment definition list

# Result the experiment reproduces; written to list output, CSV and JSON
ANCHOR = 0

# One line description
DESCRIPTION = 1

# runner(run, k, index, jobs) -> row; one call per ladder point
RUNNER = 2

# verdict(rows, run) -> list of verdicts; pure function of rows, tolerances and options
VERDICT = 3

# Supported geometries, the first one is the default; None when the experiment takes no model
MODELS = 4

# Default tolerances; a config can override any of them
TOLERANCES = 5

# Default options; a config can override any of them
OPTIONS = 6

# options -> True when the experiment draws random numbers and needs a seed
SAMPLES = 7

# Default ladder; None means config.K_LADDER
LADDER = 8

DEFAULT_DOMAINS = {
  "cylinder": {"domain": "half_cylinder"},
  "bargmann_plane": {"domain": "disk", "radius": 1.0},
  "sphere": {"domain": "polar_cap", "theta0": math.pi / 2.0},
}

MODEL_KEYS = ("geometry", "domain", "radius", "inner", "outer", "center", "theta0", "tilt", "complement",
              "truncation")

CONFIG_KEYS = {
  "experiment": "experiment name, see 'list'",
  "model": f"geometry and domain: {{{', '.join(MODEL_KEYS)}}}",
  "k_ladder": "strictly increasing list of positive integers (p-values for 'constants')",
  "seed": "64-bit integer; required by sampling experiments",
  "output_dir": "directory for the CSV and JSON results",
  "jobs": "worker threads",
  "tolerances": "map of verdict name to tolerance",
  "options": "map of experiment option to value",
}


# ------------------------------------------------------------------------------------
# Rows and verdicts
# ------------------------------------------------------------------------------------
def _row(k, actual, predicted, residual=None, **extras):
  """Row with the base columns; ratio is None when nothing is predicted."""
  ratio = actual / predicted if predicted != 0 else None
  if residual is None:
    residual = abs(1.0 - ratio) if ratio is not None else abs(actual)
  row = {"k": int(k), "actual": float(actual), "predicted": float(predicted),
         "ratio": None if ratio is None else float(ratio), "residual": float(residual)}
  row.update(extras)
  return row


def _verdict(name, value, tolerance, passed):
  return {"name": name, "value": None if value is None else float(value), "tolerance": float(tolerance),
          "pass": bool(passed)}


def _ladder_verdicts(rows, tolerance):
  """
  Residual at the largest k below tolerance, and no step of the ladder raising it

  A step from r to r' passes when r' <= max(r, TREND_FLOOR) + TREND_SLACK * tolerance;
  the trend value is the largest increase between neighbouring k.
  """
  residuals = [row["residual"] for row in rows]
  last = residuals[-1]
  verdicts = [_verdict("final_residual", last, tolerance, last <= tolerance)]
  if len(rows) > 1:
    steps = list(zip(residuals, residuals[1:]))
    worst = max(nxt - prev for prev, nxt in steps)
    passed = all(nxt <= max(prev, TREND_FLOOR) + TREND_SLACK * tolerance for prev, nxt in steps)
    verdicts.append(_verdict("trend", worst, TREND_SLACK * tolerance, passed))
  return verdicts


def _spectrum(run, k):
  return models.spectrum(build_model(run.model, k))


def _trace_function(options):
  name, p = options["function"], options["p"]
  if name == "g":
    return Fn01.g(p)
  if name == "h":
    return Fn01.h(p)
  if name == "entropy":
    return Fn01.entropy()
  raise DomainError(f"unknown trace function '{name}'; use g, h or entropy")


# ------------------------------------------------------------------------------------
# Runners
# ------------------------------------------------------------------------------------
def _run_weyl_count(run, k, index, jobs):
  spec = _spectrum(run, k)
  a, b = run.options["interval"]
  actual = spectral.count_eigenvalues(spec, a, b)
  return _row(k, actual, spectral.weyl_count(k, spec.n, spec.domain.boundary_volume, a, b))


def _run_weyl_trace(run, k, index, jobs):
  spec = _spectrum(run, k)
  f = _trace_function(run.options)
  return _row(k, spectral.trace_functional(spec, f), spectral.weyl_trace(k, spec.n, spec.domain.boundary_volume, f))


def _run_entropy(run, k, index, jobs):
  spec = _spectrum(run, k)
  predicted = spectral.weyl_trace(k, spec.n, spec.domain.boundary_volume, Fn01.entropy())
  return _row(k, spectral.entanglement_entropy(spec), predicted)


def _run_cumulants(run, k, index, jobs):
  spec = _spectrum(run, k)
  ell = run.options["order"]
  kappa = spectral.cumulant(spec, ell)
  kappa2 = spectral.cumulant(spec, 2)
  if ell % 2:
    suppression = abs(kappa) / kappa2
    return _row(k, kappa, 0.0, residual=suppression, kappa2=kappa2, scaled_odd=suppression * k ** 0.25)
  predicted = spectral.cumulant_prediction(k, spec.n, spec.domain.boundary_volume, ell)
  return _row(k, kappa, predicted, kappa2=kappa2, scaled_odd=None)


def _run_cgf(run, k, index, jobs):
  spec = _spectrum(run, k)
  t = run.options["t"]
  return _row(k, spectral.cgf(spec, t), spectral.cgf_prediction(k, spec.n, spec.domain.boundary_volume, t))


def _run_clt(run, k, index, jobs):
  spec = _spectrum(run, k)
  report = fermion.clt_check([spec], run.options["samples"], run.seed + index, run.tolerances["ks"], jobs)
  checked = report.rows[0]
  variance = math.fsum(spec.eigenvalues * (1.0 - spec.eigenvalues)) / k ** (spec.n - 0.5)
  predicted = fermion.predicted_variance(spec.n, spec.domain.boundary_volume)
  return _row(k, variance, predicted, ks_sampled=checked["ks_sampled"], ks_exact=checked["ks_exact"],
              variance_ratio=checked["variance_ratio"])


def _run_tails(run, k, index, jobs):
  spec = _spectrum(run, k)
  c_max = run.tolerances["c_max"]
  report = fermion.tail_check(spec, run.options["beta"], run.options["samples"], run.seed + index, c_max, jobs)
  checked = report.rows[0]
  return _row(k, checked["C_fit"], c_max, residual=checked["frequency"], threshold=checked["threshold"])


def _run_constants(run, p, index, jobs):
  n = run.options["n"]
  constant = asymptotics.universal_constant(p, n, run.options["samples"] or None, run.seed + index, jobs)
  route_a_next = (2.0 * math.pi) ** (-(n + 1)) * spectral.integral_I(Fn01.g(p))
  closed_form = (2.0 * math.pi) ** (-n - 0.5) if p == 1 else None
  return _row(p, constant.route_b, constant.route_a, route_b_error=constant.route_b_error,
              closed_form=closed_form, dimension_ratio=2.0 * math.pi * route_a_next / constant.route_a)


def _laplace_problem(options):
  """Phase t^2/2 + c3 t^3 + c4 t^4 with amplitude 1 over {0 <= s <= t}."""
  remainder = asymptotics.TaylorData({(3, 0): options["cubic"], (4, 0): options["quartic"]}, 1, 1)
  phase = asymptotics.PhaseData(np.array([[1.0]]), remainder)
  amplitude = asymptotics.TaylorData({(0, 0): 1.0}, 1, 1)
  domain = asymptotics.ConicDomain(1, 1, np.array([[0.0, 1.0], [1.0, -1.0]]), "0<=s<=t")
  return phase, amplitude, domain


def _run_laplace(run, k, index, jobs):
  phase, amplitude, domain = _laplace_problem(run.options)
  order = run.options["order"]
  values, series = [], []
  for d in (domain, domain.negated()):
    values.append(asymptotics.quadrature_oracle(phase, lambda t, s: 1.0, d, k).real)
    series.append(asymptotics.series_coefficients(phase, amplitude, d, order))
  scale = k ** series[0].leading_power
  return _row(k, scale * values[0], scale * series[0].evaluate(k).real,
              remainder=abs(values[0] - series[0].evaluate(k, 2).real),
              actual_negated=scale * values[1], predicted_negated=scale * series[1].evaluate(k).real,
              series_b0=series[0].coefficients[0].real, series_b1=series[0].coefficients[1].real,
              leading_power=series[0].leading_power)


def _run_euler_maclaurin(run, k, index, jobs):
  tau = math.sqrt(k)
  p2 = spectral.cumulant_polynomial(2)
  actual = tau * spectral.euler_maclaurin_sum(lambda x: p2(er(x)), tau, run.options["offset"])
  predicted = tau * I_P2
  return _row(k, actual, predicted, residual=abs(actual - predicted))


def _run_fourier_interval(run, k, index, jobs):
  arcs = run.options["arcs"]
  a, b = run.options["interval"]
  values = models.hermitian_eigenvalues(models.fourier_interval_matrix(k, arcs))
  actual = int(np.count_nonzero((values >= a) & (values <= b)))
  return _row(k, actual, models.log_law_count(k, 2 * len(arcs), a, b), dimension=k + 1)


def _run_kernel_xcheck(run, k, index, jobs):
  spec = _spectrum(run, k)
  p = run.options["p"]
  radius = spec.domain.params["radius"]
  kernel = kernels.trace_gap_via_kernel(p, radius, k, run.options["samples"] or None,
                                        0 if run.seed is None else run.seed + index, jobs=jobs)
  return _row(k, kernel.value, spectral.trace_functional(spec, Fn01.g(p)), error=kernel.error,
              method=kernel.method)


# ------------------------------------------------------------------------------------
# Verdicts
# ------------------------------------------------------------------------------------
def _verdict_residual(rows, run):
  return _ladder_verdicts(rows, run.tolerances["residual"])


def _verdict_cumulants(rows, run):
  if run.options["order"] % 2:
    worst = max(row["scaled_odd"] for row in rows)
    bound = run.tolerances["odd_constant"]
    return [_verdict("odd_suppression", worst, bound, worst <= bound)]
  return _ladder_verdicts(rows, run.tolerances["residual"])


def _verdict_clt(rows, run):
  tolerance = run.tolerances["ks"]
  last = rows[-1]["ks_sampled"]
  exact = [row["ks_exact"] for row in rows]
  return [_verdict("ks_sampled", last, tolerance, last <= tolerance),
          _verdict("ks_exact_trend", exact[-1] - exact[0], 0.0, all(b <= a for a, b in zip(exact, exact[1:])))]


def _verdict_tails(rows, run):
  worst = max(row["actual"] for row in rows)
  return [_verdict("c_fit", worst, run.tolerances["c_max"], worst <= run.tolerances["c_max"])]


def _verdict_constants(rows, run):
  tolerance = run.tolerances["route_agreement"]
  worst = max(row["residual"] for row in rows)
  verdicts = [_verdict("route_agreement", worst, tolerance, worst <= tolerance)]
  for row in rows:
    if row["closed_form"] is not None:
      miss = max(abs(row["actual"] / row["closed_form"] - 1.0), abs(row["predicted"] / row["closed_form"] - 1.0))
      verdicts.append(_verdict(f"closed_form_p{row['k']}", miss, run.tolerances["closed_form"],
                               miss <= run.tolerances["closed_form"]))
  spread = max(abs(row["dimension_ratio"] - 1.0) for row in rows)
  verdicts.append(_verdict("dimension_ratio", spread, 1e-10, spread <= 1e-10))
  return verdicts


def _verdict_laplace(rows, run):
  ks = [row["k"] for row in rows]
  power = rows[0]["leading_power"]
  fits = [asymptotics.fit_expansion(ks, [row[key] / row["k"] ** power for row in rows], power, 3)
          for key in ("actual", "actual_negated")]
  b0, b1 = rows[0]["series_b0"], rows[0]["series_b1"]
  fitted_b0, fitted_b1 = fits[0].coefficients[0].real, fits[0].coefficients[1].real
  flipped_b1 = fits[1].coefficients[1].real

  miss_b0 = abs(fitted_b0 - b0) / abs(b0)
  flip = abs(fitted_b1 + flipped_b1) / max(abs(fitted_b1), 1e-300)
  remainder = np.array([row["remainder"] for row in rows])
  slopes = -np.diff(np.log(remainder)) / np.diff(np.log(np.asarray(ks, dtype=float)))
  expected = power + 1.5
  margin = run.tolerances["slope_margin"]
  return [_verdict("b0", miss_b0, run.tolerances["b0"], miss_b0 <= run.tolerances["b0"]),
          _verdict("b1_nonzero", abs(fitted_b1), 0.5 * abs(b1), abs(fitted_b1) >= 0.5 * abs(b1) > 0.0),
          _verdict("b1_flip", flip, run.tolerances["b1_flip"], flip <= run.tolerances["b1_flip"]),
          _verdict("remainder_slope", float(np.min(slopes)), expected - margin,
                   bool(np.min(slopes) >= expected - margin))]


def _verdict_absolute(rows, run):
  worst = max(row["residual"] for row in rows)
  return [_verdict("absolute", worst, run.tolerances["absolute"], worst <= run.tolerances["absolute"])]


def _verdict_kernel(rows, run):
  verdicts = []
  for row in rows:
    tolerance = run.tolerances[row["method"]]
    verdicts.append(_verdict(f"k{row['k']}", row["residual"], tolerance, row["residual"] <= tolerance))
  negative = min(row["actual"] + 3.0 * row["error"] for row in rows)
  verdicts.append(_verdict("nonnegative", negative, 0.0, negative >= 0.0))
  return verdicts


_ALL = ("cylinder", "bargmann_plane", "sphere")


def _never(options):
  return False


def _always(options):
  return True


def _kernel_samples(options):
  return options["p"] >= 2


REGISTRY = {
  "weyl-count": [
    "Thm 1.1",
    "eigenvalue count in [a, b] against the boundary Weyl law",
    _run_weyl_count, _verdict_residual, ("bargmann_plane", "cylinder", "sphere"),
    {"residual": 0.05}, {"interval": (0.2, 0.8)}, _never, None],
  "weyl-trace": [
    "Thm 1.2, Cor 1.3",
    "tr f(T_A) for f vanishing at 0 and 1 against k^(n-1/2) vol(dA) I(f)",
    _run_weyl_trace, _verdict_residual, _ALL,
    {"residual": 0.02}, {"function": "g", "p": 1.0}, _never, None],
  "entropy-arealaw": [
    "§1.2 entropy theorem",
    "entanglement entropy of the Slater state against the area law",
    _run_entropy, _verdict_residual, _ALL,
    {"residual": 0.02}, {}, _never, None],
  "cumulants": [
    "Thm 1.4",
    "particle-number cumulants kappa_l = tr P_l(T_A); odd orders are suppressed",
    _run_cumulants, _verdict_cumulants, _ALL,
    {"residual": 0.03, "odd_constant": 1.0}, {"order": 2}, _never, None],
  "cgf": [
    "Prop 8.1",
    "centred log E exp(t N_A) against its boundary law",
    _run_cgf, _verdict_residual, _ALL,
    {"residual": 0.03}, {"t": 0.5}, _never, None],
  "clt": [
    "Cor 1.5(2)",
    "sampled and exact KS distance of the scaled particle number to its normal limit",
    _run_clt, _verdict_clt, ("cylinder", "bargmann_plane", "sphere"),
    {"ks": 0.02}, {"samples": 100000}, _always, (100, 400, 1600)],
  "tails": [
    "Cor 1.5(1)",
    "large-deviation frequency of the particle number and the fitted constant C",
    _run_tails, _verdict_tails, ("cylinder", "bargmann_plane", "sphere"),
    {"c_max": 10.0}, {"beta": 0.3, "samples": 100000}, _always, (100, 400, 1600)],
  "constants": [
    "Thm 5.4, Lemma 5.5",
    "universal constants C_(p,n) by the boundary integral and by the conic moment (ladder lists p)",
    _run_constants, _verdict_constants, None,
    {"route_agreement": 0.005, "closed_form": 0.005}, {"n": 1, "samples": 0}, _always, (1, 2)],
  "laplace": [
    "Thm 4.1–4.3",
    "conic-domain Laplace expansion against direct quadrature; sign flip of b_1 under D -> -D",
    _run_laplace, _verdict_laplace, None,
    {"b0": 0.01, "b1_flip": 0.1, "slope_margin": 0.2}, {"cubic": 0.1, "quartic": 0.0, "order": 4}, _never,
    None],
  "euler-maclaurin": [
    "Lemma 5.8",
    "cylinder trace sum of X(1-X) at tau = sqrt(k) against sqrt(k) I(X(1-X))",
    _run_euler_maclaurin, _verdict_absolute, None,
    {"absolute": 1e-8}, {"offset": 0.0}, _never, None],
  "fourier-interval": [
    "§1.1 Remark",
    "eigenvalue count of a truncated Fourier Toeplitz matrix against the ln k law",
    _run_fourier_interval, _verdict_residual, None,
    {"residual": 0.25}, {"arcs": ((0.0, math.pi),), "interval": (0.1, 0.9)}, _never, (512,)],
  "kernel-xcheck": [
    "Lemma 5.1",
    "tr(T_A^p - T_A^(p+1)) by kernel integrals against the spectrum (disk)",
    _run_kernel_xcheck, _verdict_kernel, ("bargmann_plane",),
    {"radial_quadrature": 1e-3, "monte_carlo": 0.05}, {"p": 1, "samples": 0},
    _kernel_samples, (50, 100, 200)],
}


def list_experiments():
  """One line per experiment: name, anchor, description."""
  width = max(len(name) for name in REGISTRY)
  return "\n".join(f"{name:<{width}}  {entry[ANCHOR]:<26}  {entry[DESCRIPTION]}" for name, entry in REGISTRY.items())


# ------------------------------------------------------------------------------------
# Configuration
# ------------------------------------------------------------------------------------
@dataclass(frozen=True)
class ExperimentConfig:
  """Validated run configuration; see load_config."""
  experiment: str
  model: dict
  k_ladder: tuple
  seed: int
  output_dir: str
  jobs: int
  tolerances: dict
  options: dict


def _freeze(value, key):
  """Lists of numbers (possibly nested) become tuples of floats."""
  if isinstance(value, (list, tuple)):
    return tuple(_freeze(v, key) for v in value)
  if isinstance(value, bool) or not isinstance(value, (int, float)):
    raise ConfigError(f"{key}: expected numbers; got {value!r}", key=key)
  return float(value)


def _depth(value):
  return 1 + max((_depth(v) for v in value), default=0) if isinstance(value, (list, tuple)) else 0


def _coerce(key, value, default):
  if isinstance(default, bool):
    if not isinstance(value, bool):
      raise ConfigError(f"{key}: expected true or false; got {value!r}", key=key)
    return value
  if isinstance(default, int):
    if isinstance(value, bool) or not isinstance(value, int):
      raise ConfigError(f"{key}: expected an integer; got {value!r}", key=key)
    return value
  if isinstance(default, float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
      raise ConfigError(f"{key}: expected a number; got {value!r}", key=key)
    return float(value)
  if isinstance(default, str):
    if not isinstance(value, str):
      raise ConfigError(f"{key}: expected a string; got {value!r}", key=key)
    return value
  frozen = _freeze(value, key)
  if _depth(frozen) != _depth(default):
    raise ConfigError(f"{key}: expected the shape of {default!r}; got {value!r}", key=key)
  return frozen


def _merge(section, given, defaults):
  if given is None:
    return dict(defaults)
  if not isinstance(given, dict):
    raise ConfigError(f"{section}: expected a map; got {given!r}", key=section)
  merged = dict(defaults)
  for key, value in given.items():
    if key not in defaults:
      raise ConfigError(f"unknown key '{section}.{key}'; known: {sorted(defaults)}", key=f"{section}.{key}")
    merged[key] = _coerce(f"{section}.{key}", value, defaults[key])
  return merged


def _ladder(value, key="k_ladder"):
  if not isinstance(value, (list, tuple)) or not value:
    raise ConfigError(f"{key} must be a non-empty list of integers", key=key)
  for k in value:
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
      raise ConfigError(f"{key}: {k!r} is not a positive integer", key=key)
  if any(b <= a for a, b in zip(value, value[1:])):
    raise ConfigError(f"{key} must be strictly increasing; got {list(value)}", key=key)
  return tuple(value)


def _model(value, geometries):
  if geometries is None:
    if value is not None:
      raise ConfigError("this experiment takes no model", key="model")
    return None
  if value is None:
    value = {}
  if not isinstance(value, dict):
    raise ConfigError(f"model: expected a map; got {value!r}", key="model")
  for key in value:
    if key not in MODEL_KEYS:
      raise ConfigError(f"unknown key 'model.{key}'; known: {list(MODEL_KEYS)}", key=f"model.{key}")
  geometry = value.get("geometry", geometries[0])
  if geometry not in geometries:
    raise ConfigError(f"geometry '{geometry}' is not supported here; use one of {list(geometries)}",
                      key="model.geometry")
  model = {"geometry": geometry}
  if "domain" not in value:
    model.update(DEFAULT_DOMAINS[geometry])
  model.update(value)
  return model


def _domain(model):
  kind = model["domain"]
  try:
    if kind == "half_cylinder":
      return models.DomainSpec.half_cylinder()
    if kind == "disk":
      return models.DomainSpec.disk(float(model["radius"]))
    if kind == "annulus":
      return models.DomainSpec.annulus(float(model["inner"]), float(model["outer"]))
    if kind == "shifted_disk":
      center = model["center"]
      center = complex(*center) if isinstance(center, (list, tuple)) else complex(center)
      return models.DomainSpec.shifted_disk(float(model["radius"]), center)
    if kind in ("polar_cap", "tilted_cap"):
      theta0 = float(model["theta0"])
      if kind == "polar_cap":
        domain = models.DomainSpec.polar_cap(theta0)
        return domain.complemented() if model.get("complement") else domain
      boundary = models.tilted_cap_boundary(theta0, float(model["tilt"]))
      return models.DomainSpec.generic_sphere(boundary, bool(model.get("complement", False)))
  except KeyError as e:
    raise ConfigError(f"domain '{kind}' needs model.{e.args[0]}", key=f"model.{e.args[0]}") from e
  except (TypeError, ValueError) as e:
    raise ConfigError(f"model: {e}", key="model") from e
  raise ConfigError(f"unknown domain '{kind}'", key="model.domain")


def build_model(model, k):
  """ModelSpec for a validated model section at parameter k."""
  try:
    return models.ModelSpec(model["geometry"], _domain(model), k, model.get("truncation"))
  except DomainError as e:
    raise ConfigError(f"model: {e}", key="model.domain") from e


def load_config(source, seed=None, output_dir=None, jobs=None):
  """
  Parse and validate an experiment configuration

  Command line values override the document; environment defaults from
  config fill what neither sets.

  Args:
    :param source: path to a JSON file, JSON text or a mapping
    :param int seed: overrides 'seed'
    :param str output_dir: overrides 'output_dir'
    :param int jobs: overrides 'jobs'

  Returns:
    ExperimentConfig
  """
  if isinstance(source, dict):
    document = source
  else:
    text = source
    if isinstance(source, os.PathLike) or (isinstance(source, str) and not source.lstrip().startswith("{")):
      try:
        with open(source, encoding="utf-8") as f:
          text = f.read()
      except OSError as e:
        raise ConfigError(f"cannot read config {source}: {e}") from e
    try:
      document = json.loads(text)
    except json.JSONDecodeError as e:
      raise ConfigError(f"config is not valid JSON: {e}") from e
  if not isinstance(document, dict):
    raise ConfigError("config must be a JSON object")

  for key in document:
    if key not in CONFIG_KEYS:
      raise ConfigError(f"unknown key '{key}'; known: {sorted(CONFIG_KEYS)}", key=key)
  name = document.get("experiment")
  if name not in REGISTRY:
    raise ConfigError(f"unknown experiment {name!r}; see 'list'", key="experiment")
  entry = REGISTRY[name]

  model = _model(document.get("model"), entry[MODELS])
  ladder = _ladder(document.get("k_ladder", entry[LADDER] or cfg.K_LADDER))
  tolerances = _merge("tolerances", document.get("tolerances"), entry[TOLERANCES])
  for key, value in tolerances.items():
    if not value > 0.0:
      raise ConfigError(f"tolerances.{key} must be positive; got {value}", key=f"tolerances.{key}")
  options = _merge("options", document.get("options"), entry[OPTIONS])

  seed = seed if seed is not None else document.get("seed", cfg.SEED)
  if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 1 << 64):
    raise ConfigError(f"seed must be a 64-bit unsigned integer; got {seed!r}", key="seed")
  if seed is None and entry[SAMPLES](options):
    raise ConfigError(f"experiment '{name}' samples and needs a seed", key="seed")

  jobs = jobs if jobs is not None else document.get("jobs", cfg.JOBS)
  if isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1:
    raise ConfigError(f"jobs must be a positive integer; got {jobs!r}", key="jobs")
  output_dir = output_dir or document.get("output_dir", cfg.OUTPUT_DIR)
  if not isinstance(output_dir, str) or not output_dir:
    raise ConfigError(f"output_dir must be a path; got {output_dir!r}", key="output_dir")

  if name == "laplace" and len(ladder) < 5:
    raise ConfigError("laplace fits three coefficients and needs at least 5 ladder points", key="k_ladder")
  if name == "laplace" and options["order"] < 2:
    raise ConfigError("laplace needs options.order >= 2", key="options.order")
  if name == "kernel-xcheck" and model["domain"] != "disk":
    raise ConfigError("kernel-xcheck supports disks only", key="model.domain")
  if model is not None:
    build_model(model, ladder[0])

  return ExperimentConfig(name, model, ladder, seed, output_dir, jobs, tolerances, options)


# ------------------------------------------------------------------------------------
# Ladder workers
# ------------------------------------------------------------------------------------
class LadderWorker(threading.Thread):
  """
  Pull (index, k) pairs from a queue and store the experiment rows
  """

  def __init__(self, run, tasks, rows, errors, stopper, jobs=1):
    """
    Args:
      :param ExperimentConfig run: the run
      :param queue.Queue tasks: (index, k) pairs
      :param dict rows: index -> row
      :param list errors: exceptions raised by the runner
      :param threading.Event stopper: stop picking up ladder points when set
      :param int jobs: threads for the sampling inside one ladder point
    """
    super().__init__()
    self.__run = run
    self.__runner = REGISTRY[run.experiment][RUNNER]
    self.__tasks = tasks
    self.__rows = rows
    self.__errors = errors
    self.__stopper = stopper
    self.__jobs = jobs

  def run(self):
    logger.debug(">>")
    while not self.__stopper.is_set() and not sampling.STOPPER.is_set():
      try:
        index, k = self.__tasks.get_nowait()
      except queue.Empty:
        break

      try:
        row = self.__runner(self.__run, k, index, self.__jobs)
        logger.info(f"{self.__run.experiment} k={k}: actual={row['actual']:.10g} predicted={row['predicted']:.10g}")
        self.__rows[index] = row
      except LabError as e:
        logger.error(f"{self.__run.experiment} k={k}: {e}")
        self.__errors.append(e)
        self.__stopper.set()
      except Exception as e:
        logger.exception(f"{self.__run.experiment} k={k}: {e}")
        self.__errors.append(e)
        self.__stopper.set()

    logger.debug("<<")


@dataclass
class ResultRecord:
  """Outcome of one run; verdicts can be re-evaluated from rows, tolerances and options."""
  experiment: str
  anchor: str
  parameters: dict
  rows: list = field(default_factory=list)
  verdicts: list = field(default_factory=list)
  passed: bool = False
  wall_time: float = 0.0
  error: str = None
  interrupted: bool = False

  def to_json(self):
    document = {"schema": SCHEMA, "experiment": self.experiment, "anchor": self.anchor,
                "parameters": self.parameters, "rows": self.rows, "verdicts": self.verdicts,
                "pass": self.passed, "wall_time": self.wall_time, "error": self.error,
                "interrupted": self.interrupted}
    return json.dumps(_jsonable(document), indent=2)


def _jsonable(value):
  if isinstance(value, dict):
    return {k: _jsonable(v) for k, v in value.items()}
  if isinstance(value, (list, tuple)):
    return [_jsonable(v) for v in value]
  if isinstance(value, (float, np.floating)):
    return float(value) if math.isfinite(value) else None
  if isinstance(value, np.integer):
    return int(value)
  return value


def _parameters(run):
  return {"experiment": run.experiment, "anchor": REGISTRY[run.experiment][ANCHOR], "model": run.model,
          "k_ladder": list(run.k_ladder), "seed": run.seed, "tolerances": run.tolerances,
          "options": run.options}


def evaluate(rows, run):
  """Verdicts and overall pass of a complete set of rows."""
  if not rows:
    return [], False
  verdicts = REGISTRY[run.experiment][VERDICT](rows, run)
  return verdicts, bool(verdicts) and all(v["pass"] for v in verdicts)


def reevaluate(document):
  """Recompute the verdicts of a result JSON document (or its text)."""
  if isinstance(document, str):
    document = json.loads(document)
  parameters = document["parameters"]
  run = load_config({key: parameters[key] for key in ("experiment", "model", "k_ladder", "seed", "tolerances",
                                                      "options") if parameters[key] is not None})
  return evaluate(document["rows"], run)


def run_experiment(run):
  """
  Run an experiment over its ladder

  Ladder points are spread over run.jobs LadderWorker threads; rows are
  ordered by k whatever the completion order.

  Returns:
    ResultRecord
  """
  logger.debug(">>")
  entry = REGISTRY[run.experiment]
  started = time.perf_counter()

  tasks = queue.Queue()
  for index, k in enumerate(run.k_ladder):
    tasks.put((index, k))
  workers = max(1, min(run.jobs, len(run.k_ladder)))
  inner_jobs = max(1, run.jobs // workers)

  rows = {}
  errors = []
  stopper = threading.Event()
  if workers == 1:
    LadderWorker(run, tasks, rows, errors, stopper, inner_jobs).run()
  else:
    threads = [LadderWorker(run, tasks, rows, errors, stopper, inner_jobs) for _ in range(workers)]
    for thread in threads:
      thread.start()
    for thread in threads:
      thread.join()

  ordered = [rows[index] for index in sorted(rows)]
  record = ResultRecord(run.experiment, entry[ANCHOR], _parameters(run), ordered)
  record.interrupted = sampling.STOPPER.is_set() and len(rows) < len(run.k_ladder)
  if errors:
    record.error = f"{type(errors[0]).__name__}: {errors[0]}"
  elif len(rows) == len(run.k_ladder):
    try:
      record.verdicts, record.passed = evaluate(ordered, run)
    except LabError as e:
      logger.error(f"{run.experiment}: verdicts: {e}")
      record.error = f"{type(e).__name__}: {e}"
  record.wall_time = time.perf_counter() - started

  logger.info(f"{run.experiment}: {'PASS' if record.passed else 'FAIL'} in {record.wall_time:.1f}s")
  logger.debug("<<")
  return record


# ------------------------------------------------------------------------------------
# Output
# ------------------------------------------------------------------------------------
def _format(value):
  if value is None:
    return ""
  if isinstance(value, (bool, np.bool_)):
    return "true" if value else "false"
  if isinstance(value, (int, np.integer)):
    return str(int(value))
  if isinstance(value, (float, np.floating)):
    return f"{float(value):.17g}"
  return str(value)


def write_csv(record, stream):
  """Schema v1 CSV: '#' header comments, then k,actual,predicted,ratio,residual and the extra columns."""
  columns = list(BASE_COLUMNS)
  for row in record.rows[:1]:
    columns += [key for key in row if key not in BASE_COLUMNS]
  stream.write(f"# schema={SCHEMA}\n")
  stream.write(f"# experiment={record.experiment}\n")
  stream.write(f"# anchor={record.anchor}\n")
  stream.write(",".join(columns) + "\n")
  for row in record.rows:
    stream.write(",".join(_format(row.get(column)) for column in columns) + "\n")


def write_record(record, output_dir):
  """
  Write <output_dir>/<experiment>-<timestamp>.csv and .json

  Returns:
    tuple: (csv path, json path)
  """
  os.makedirs(output_dir, exist_ok=True)
  stem = os.path.join(output_dir, f"{record.experiment}-{time.strftime('%Y%m%dT%H%M%S')}")
  suffix, count = "", 0
  while os.path.exists(stem + suffix + ".csv") or os.path.exists(stem + suffix + ".json"):
    count += 1
    suffix = f"-{count}"

  csv_path, json_path = stem + suffix + ".csv", stem + suffix + ".json"
  with open(csv_path, "w", encoding="utf-8", newline="") as f:
    write_csv(record, f)
  with open(json_path, "w", encoding="utf-8") as f:
    f.write(record.to_json() + "\n")
  logger.info(f"results in {csv_path} and {json_path}")
  return csv_path, json_path

"""
  Exceptions and warnings shared by all toeplitz-lab modules

  Library code raises; the entry script and worker threads catch, log and
  translate into exit codes.

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


class LabError(Exception):
  """Base class of every error raised by toeplitz-lab."""


class DomainError(LabError, ValueError):
  """Argument outside the mathematical domain of an operation."""


class PreconditionError(LabError, ValueError):
  """A declared precondition of an operation does not hold."""


class ConvergenceError(LabError, RuntimeError):
  """Quadrature, eigensolver or Monte-Carlo budget exhausted, two routes disagree, or a series leaves its index range."""


class CutoffError(LabError):
  """A basis cutoff leaves a tail contribution above the declared bound."""


class SpectrumError(LabError):
  """Eigenvalue outside [-1e-10, 1 + 1e-10]; clamping would hide a bug."""


class ConfigError(LabError):
  """Experiment configuration error.

  :param str key: the offending configuration key (may be None)
  """

  def __init__(self, message, key=None):
    super().__init__(message)
    self.key = key


class InterruptedRun(LabError):
  """The stopper event was set while work was still pending."""


class DivergenceWarning(UserWarning):
  """Trace functional without endpoint decay on a spectrum with an infinite tail."""

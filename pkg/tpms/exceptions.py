# Copyright 2025 Google LLC.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Base exceptions for tpms."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any

__all__ = [
    "TpmsError",
    "PreconditionError",
    "AdmissibilityError",
    "NumericalError",
    "QuadratureBudgetError",
    "BracketError",
    "ConsistencyError",
    "BranchError",
    "PoleError",
    "SingularityError",
    "ContinuationError",
    "AmbiguityError",
    "GeometryError",
    "GridError",
    "PeriodLeakError",
    "UnsupportedFamilyError",
    "ConfigError",
]


class TpmsError(Exception):
  """Base exception for all tpms errors.

  All exceptions raised by tpms inherit from this class, so callers can catch
  every package-specific failure with a single except clause.
  """


class PreconditionError(TpmsError, ValueError):
  """An operation was called with arguments outside its contract."""


class AdmissibilityError(TpmsError, ValueError):
  """Shape parameters fall outside the admissible region of their family."""

  def __init__(self, message: str, *, constraint: str) -> None:
    """Initialize the admissibility error.

    Args:
      message: Error message.
      constraint: Short name of the violated constraint, e.g. "|x|<1".
    """
    super().__init__(f"{message} [{constraint}]")
    self.constraint = constraint


class NumericalError(TpmsError):
  """Base exception for failures of the numerical layer."""


class QuadratureBudgetError(NumericalError):
  """Quadrature did not reach its tolerance within the evaluation budget."""

  def __init__(
      self, message: str, *, estimate: float, error: float
  ) -> None:
    super().__init__(message)
    self.estimate = estimate
    self.error = error


class BracketError(NumericalError):
  """No sign change was found where one was required."""

  def __init__(
      self,
      message: str,
      *,
      samples: Sequence[tuple[float, float]] = (),
  ) -> None:
    """Initialize the bracket error.

    Args:
      message: Error message.
      samples: (parameter, residual) pairs sampled while searching.
    """
    super().__init__(message)
    self.samples = list(samples)


class ConsistencyError(NumericalError):
  """Two independent computations of the same quantity disagree."""


class BranchError(TpmsError):
  """Base exception for branch selection on the Gauss-map cover."""


class PoleError(BranchError):
  """Evaluation requested at a pole of the Weierstrass data."""

  def __init__(self, message: str, *, location: Any = None) -> None:
    super().__init__(message)
    self.location = location


class SingularityError(BranchError):
  """Evaluation requested at a zero of a denominator."""

  def __init__(self, message: str, *, location: Any = None) -> None:
    super().__init__(message)
    self.location = location


class ContinuationError(BranchError):
  """A continuation step was too large for the local root separation.

  Refine the path (smaller steps or larger clearance) and retry.
  """

  def __init__(self, message: str, *, z: complex | None = None) -> None:
    super().__init__(message)
    self.z = z


class AmbiguityError(BranchError):
  """Several roots satisfy the requested locus and none can be preferred."""

  def __init__(
      self, message: str, *, candidates: Sequence[complex] = ()
  ) -> None:
    super().__init__(message)
    self.candidates = list(candidates)


class GeometryError(TpmsError):
  """Base exception for mesh construction and assembly."""


class GridError(GeometryError):
  """The parameter-domain grid could not be built."""


class PeriodLeakError(GeometryError):
  """Symmetry copies fail to close up within tolerance."""

  def __init__(self, message: str, *, gap: Any = None) -> None:
    """Initialize the period-leak error.

    Args:
      message: Error message.
      gap: The offending gap vector (3-vector).
    """
    super().__init__(message)
    self.gap = gap


class UnsupportedFamilyError(GeometryError):
  """The requested operation is not available for this surface family."""


class ConfigError(TpmsError):
  """A run configuration could not be parsed or validated."""

  def __init__(self, message: str, *, line: int | None = None) -> None:
    if line is not None:
      message = f"line {line}: {message}"
    super().__init__(message)
    self.line = line

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

"""Quadrature, special functions and bracketed root finding.

Integrands of the period problem carry inverse-square-root singularities at
the ends of (0, 1). They are made bounded by substitution (u = t^2 near 0,
u = 1 - s^2 near 1) and then handed to adaptive Gauss-Kronrod quadrature.
"""

from __future__ import annotations

from collections.abc import Callable
import dataclasses
import math

from absl import logging
import numpy as np
from scipy import integrate
from scipy import optimize
from scipy import special

from tpms import data
from tpms import exceptions

DEFAULT_TOL = 1e-10
DEFAULT_BUDGET = 10**6

# Points per Gauss-Kronrod panel used by QUADPACK's qags.
_POINTS_PER_PANEL = 21


@dataclasses.dataclass(frozen=True)
class EndpointSingularity:
  """Which ends of (0, 1) carry an inverse-square-root singularity."""

  at_zero: bool = False
  at_one: bool = True


def _quad(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
    budget: int,
) -> data.QuadratureResult:
  limit = max(50, budget // _POINTS_PER_PANEL)
  out = integrate.quad(
      f, lo, hi, epsabs=tol, epsrel=0.0, limit=limit, full_output=1
  )
  value, error, info = out[0], out[1], out[2]
  evaluations = max(1, int(info.get("neval", 1)))
  if len(out) > 3 and error > tol:
    raise exceptions.QuadratureBudgetError(
        f"Quadrature on [{lo}, {hi}] did not converge: {out[3]}",
        estimate=value,
        error=error,
    )
  if evaluations > budget:
    raise exceptions.QuadratureBudgetError(
        f"Quadrature used {evaluations} evaluations (budget {budget})",
        estimate=value,
        error=error,
    )
  return data.QuadratureResult(
      value=float(value), error_estimate=float(abs(error)),
      evaluations=evaluations,
  )


def _combine(*parts: data.QuadratureResult) -> data.QuadratureResult:
  return data.QuadratureResult(
      value=sum(p.value for p in parts),
      error_estimate=sum(p.error_estimate for p in parts),
      evaluations=sum(p.evaluations for p in parts),
  )


def integrate_singular(
    f: Callable[[float], float],
    singularity: EndpointSingularity = EndpointSingularity(),
    tol: float = DEFAULT_TOL,
    budget: int = DEFAULT_BUDGET,
) -> data.QuadratureResult:
  """Integrates f over (0, 1) with inverse-square-root endpoint behaviour.

  Args:
    f: Integrand, finite on the open interval.
    singularity: Which endpoints are singular.
    tol: Absolute tolerance.
    budget: Maximum number of integrand evaluations.

  Returns:
    The integral with its error estimate.

  Raises:
    QuadratureBudgetError: If the tolerance is not reached within budget.
  """
  if singularity.at_zero and singularity.at_one:
    # Split so each half has a single singular end.
    left = _quad(lambda t: 2.0 * t * f(t * t), 0.0, math.sqrt(0.5), tol / 2,
                 budget // 2)
    right = _quad(
        lambda s: 2.0 * s * f(1.0 - s * s), 0.0, math.sqrt(0.5), tol / 2,
        budget // 2,
    )
    return _combine(left, right)
  if singularity.at_zero:
    return _quad(lambda t: 2.0 * t * f(t * t), 0.0, 1.0, tol, budget)
  if singularity.at_one:
    return _quad(lambda s: 2.0 * s * f(1.0 - s * s), 0.0, 1.0, tol, budget)
  return _quad(f, 0.0, 1.0, tol, budget)


def integrate_quartic(
    h: Callable[[float], float],
    tol: float = DEFAULT_TOL,
    budget: int = DEFAULT_BUDGET,
) -> data.QuadratureResult:
  """Integrates h(u) du / sqrt(1 - u^4) over (0, 1) for regular h.

  With u = 1 - s^2 the weight factors exactly as
  sqrt(1 - u^4) = s sqrt((1 + u)(1 + u^2)), so no cancellation occurs near
  the singular end.

  Args:
    h: The regular factor of the integrand, bounded on [0, 1].
    tol: Absolute tolerance.
    budget: Maximum number of integrand evaluations.

  Returns:
    The integral with its error estimate.
  """

  def substituted(s: float) -> float:
    u = 1.0 - s * s
    return 2.0 * h(u) / math.sqrt((1.0 + u) * (1.0 + u * u))

  return _quad(substituted, 0.0, 1.0, tol, budget)


def integrate_infinite(
    f: Callable[[float], float],
    tol: float = DEFAULT_TOL,
    budget: int = DEFAULT_BUDGET,
) -> data.QuadratureResult:
  """Integrates a bounded, algebraically decaying f over (0, inf)."""
  return _quad(f, 0.0, np.inf, tol, budget)


def gamma(x: float) -> float:
  """Gamma function on the positive reals.

  Raises:
    PreconditionError: If x <= 0.
  """
  if not x > 0:
    raise exceptions.PreconditionError(f"gamma needs x > 0, got {x}")
  return float(special.gamma(x))


def beta(m: float, n: float) -> float:
  """Beta function B(m, n) = gamma(m) gamma(n) / gamma(m + n).

  Raises:
    PreconditionError: If either argument is non-positive.
  """
  if not (m > 0 and n > 0):
    raise exceptions.PreconditionError(
        f"beta needs positive arguments, got ({m}, {n})"
    )
  return float(special.beta(m, n))


def quartic_moment(k: int) -> float:
  """Closed form of the integral of u^k / sqrt(1 - u^4) over (0, 1)."""
  return beta((k + 1) / 4.0, 0.5) / 4.0


def make_bracket(
    f: Callable[[float], float], lo: float, hi: float
) -> data.Bracket:
  """Evaluates f at both ends and returns the validated Bracket."""
  return data.Bracket(lo=lo, hi=hi, f_lo=f(lo), f_hi=f(hi))


def find_root(
    f: Callable[[float], float],
    bracket: data.Bracket,
    tol: float = 1e-12,
) -> float:
  """Finds a zero of f inside a sign-changing bracket.

  Uses Brent's method: inverse quadratic interpolation with bisection
  fallback, so the bracket shrinks monotonically and the root never leaves
  it.

  Args:
    f: Continuous real function.
    bracket: Interval with f_lo * f_hi < 0.
    tol: Absolute width of the final bracket.

  Returns:
    The root estimate, inside [bracket.lo, bracket.hi].

  Raises:
    PreconditionError: If the bracket is invalid.
    BracketError: If the iteration fails to converge.
  """
  if not isinstance(bracket, data.Bracket):
    raise exceptions.PreconditionError("find_root needs a data.Bracket")
  try:
    root, info = optimize.brentq(
        f, bracket.lo, bracket.hi, xtol=tol, rtol=4 * np.finfo(float).eps,
        full_output=True,
    )
  except (ValueError, RuntimeError) as e:
    raise exceptions.BracketError(
        f"Root search failed on [{bracket.lo}, {bracket.hi}]",
        samples=[(bracket.lo, bracket.f_lo), (bracket.hi, bracket.f_hi)],
    ) from e
  root = min(max(float(root), bracket.lo), bracket.hi)
  logging.debug(
      "find_root: r=%.15g after %d iterations, |f(r)|=%.3g",
      root, info.iterations, abs(f(root)),
  )
  return root

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

"""Period integrals, period-closing solves and their closed-form oracles.

For C2 and L4 the period problem reduces to two real integrals

  I1 = int_0^1 (A - 2u^2) / (4u^4 + 4 Im(X) u^2 + |X|^2)^(1/2) du / s(u)
  I2 = int_0^1 (2 + A u^2) / (4 - 4 Im(X) u^2 + |X|^2 u^4)^(1/2) du / s(u)

with s(u) = sqrt(1 - u^4); the period closes when I1 = I2 (C2) or
2 I1 = I2 (L4). For L2 the integrals J1, J2 are taken over (0, 1) and
(1, inf), the latter folded onto (0, 1) by t -> 1/t.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent import futures
import dataclasses
import enum
import math

from absl import logging
import more_itertools
import numpy as np

from tpms import data
from tpms import exceptions
from tpms import families
from tpms import numerics

# Constant of the comparison polynomial used at X = 2 sqrt(2) - i.
COMPARISON_A = 1.0 - 11.0 / math.sqrt(17.0)
# Inset applied to open slice endpoints.
SLICE_INSET = 1e-2


def _tol_for(dp: data.DerivedParams, tol: float) -> float:
  # The integrands scale with A; keep the tolerance relative to that scale.
  return tol * max(1.0, dp.A)


def _i1_factor(dp: data.DerivedParams) -> Callable[[float], float]:
  A, b, m = dp.A, dp.X.imag, abs(dp.X) ** 2

  def h(u: float) -> float:
    u2 = u * u
    return (A - 2.0 * u2) / math.sqrt(4.0 * u2 * u2 + 4.0 * b * u2 + m)

  return h


def _i2_factor(dp: data.DerivedParams) -> Callable[[float], float]:
  A, b, m = dp.A, dp.X.imag, abs(dp.X) ** 2

  def h(u: float) -> float:
    u2 = u * u
    return (2.0 + A * u2) / math.sqrt(4.0 - 4.0 * b * u2 + m * u2 * u2)

  return h


def _report(
    dp: data.DerivedParams,
    first: data.QuadratureResult,
    second: data.QuadratureResult,
    weight: float,
) -> data.PeriodReport:
  report = data.PeriodReport(
      family=dp.family,
      first=first.value,
      second=second.value,
      residual=weight * first.value - second.value,
      quad_error=weight * first.error_estimate + second.error_estimate,
  )
  logging.debug(
      "%s periods at x=%s: first=%.12g second=%.12g residual=%.3g",
      dp.family, dp.x, report.first, report.second, report.residual,
  )
  return report


def _require(dp: data.DerivedParams, tag: data.FamilyTag) -> None:
  if dp.family.tag is not tag:
    raise exceptions.PreconditionError(
        f"Expected {tag.value} parameters, got {dp.family}"
    )


def period_integrals_C2(
    dp: data.DerivedParams, tol: float = numerics.DEFAULT_TOL
) -> data.PeriodReport:
  """I1, I2 and the residual I1 - I2 for C2.

  Args:
    dp: Admissible C2 parameters.
    tol: Absolute tolerance per integral, scaled by max(1, A).

  Returns:
    The period report.

  Raises:
    QuadratureBudgetError: If either integral fails to converge.
  """
  _require(dp, data.FamilyTag.C2)
  tol = _tol_for(dp, tol)
  first = numerics.integrate_quartic(_i1_factor(dp), tol=tol)
  second = numerics.integrate_quartic(_i2_factor(dp), tol=tol)
  return _report(dp, first, second, weight=1.0)


def period_integrals_L4(
    dp: data.DerivedParams, tol: float = numerics.DEFAULT_TOL
) -> data.PeriodReport:
  """I1, I2 and the residual 2 I1 - I2 for L4 (same integrals as C2)."""
  _require(dp, data.FamilyTag.L4)
  tol = _tol_for(dp, tol)
  first = numerics.integrate_quartic(_i1_factor(dp), tol=tol)
  second = numerics.integrate_quartic(_i2_factor(dp), tol=tol)
  return _report(dp, first, second, weight=2.0)


def period_integrals_L2(
    dp: data.DerivedParams, tol: float = numerics.DEFAULT_TOL
) -> data.PeriodReport:
  """J1, J2 and the residual J1 - J2 for L2.

  Both integrands behave like 1/sqrt(t) at 0 and 1/sqrt(1 - t) at 1; J2 is
  first mapped from (1, inf) to (0, 1) by t -> 1/t.

  Note that the integrand ratio satisfies R1 <= R2 pointwise, so the
  residual is negative throughout the admissible region.
  """
  _require(dp, data.FamilyTag.L2)
  x, a = dp.x, dp.a
  singular = numerics.EndpointSingularity(at_zero=True, at_one=True)

  def j1(t: float) -> float:
    return (t + a) / (abs(t + x) * math.sqrt(t * (1.0 - t) * (1.0 + t)))

  def j2(t: float) -> float:
    return (1.0 - a * t) / (
        abs(1.0 - x * t) * math.sqrt(t * (1.0 - t) * (1.0 + t))
    )

  first = numerics.integrate_singular(j1, singular, tol=tol)
  second = numerics.integrate_singular(j2, singular, tol=tol)
  return _report(dp, first, second, weight=1.0)


def l2_j2_direct(
    dp: data.DerivedParams, tol: float = numerics.DEFAULT_TOL
) -> data.QuadratureResult:
  """J2 integrated on (1, inf) directly, via t = 1 + v^2."""
  _require(dp, data.FamilyTag.L2)
  x, a = dp.x, dp.a

  def f(v: float) -> float:
    t = 1.0 + v * v
    return 2.0 * (t - a) / (abs(t - x) * math.sqrt(t * (t + 1.0)))

  return numerics.integrate_infinite(f, tol=tol)


_DISPATCH = {
    data.FamilyTag.C2: period_integrals_C2,
    data.FamilyTag.L2: period_integrals_L2,
    data.FamilyTag.L4: period_integrals_L4,
}


def period_integrals(
    dp: data.DerivedParams, tol: float = numerics.DEFAULT_TOL
) -> data.PeriodReport:
  """Dispatches to the period integrals of dp's family."""
  return _DISPATCH[dp.family.tag](dp, tol=tol)


# -- Slices ---------------------------------------------------------------------


class FixedComponent(enum.Enum):
  """Which coordinate a slice holds fixed; the real part is swept."""

  IM_BIG_X = "ImX"  # C2, L4: X = t + i * value.
  IM_SMALL_X = "Imx"  # L2: x = t + i * value.


@dataclasses.dataclass(frozen=True)
class SliceSpec:
  """A one-dimensional slice of the parameter domain.

  Attributes:
    family: The surface family.
    fixed: The coordinate held fixed.
    value: Its value.
    lo: Lower end of the swept real part (already inset from the boundary).
    hi: Upper end of the swept real part.
    samples: Number of sample points used to look for a sign change.
  """

  family: data.FamilyId
  fixed: FixedComponent
  value: float
  lo: float
  hi: float
  samples: int = 16

  def __post_init__(self):
    if not self.lo < self.hi:
      raise exceptions.PreconditionError(
          f"Slice range must have lo < hi, got ({self.lo}, {self.hi})"
      )
    if self.samples < 2:
      raise exceptions.PreconditionError("A slice needs at least 2 samples")
    expected = (
        FixedComponent.IM_SMALL_X
        if self.family.tag is data.FamilyTag.L2
        else FixedComponent.IM_BIG_X
    )
    if self.fixed is not expected:
      raise exceptions.PreconditionError(
          f"{self.family} slices fix {expected.value}, not {self.fixed.value}"
      )

  def shape_at(self, t: float) -> data.ShapeParams:
    """Shape parameters at real part t."""
    point = complex(t, self.value)
    if self.fixed is FixedComponent.IM_SMALL_X:
      return data.ShapeParams(self.family, point)
    return families.shape_from_X(self.family, point)

  def residual_at(self, t: float, tol: float = numerics.DEFAULT_TOL) -> float:
    dp = families.derive_params(self.shape_at(t))
    return period_integrals(dp, tol=tol).residual


def c2_reference_slice(samples: int = 16) -> SliceSpec:
  """The C2 slice Im(X) = -1, Re(X) in (1, 2 sqrt(2)), inset at both ends."""
  return SliceSpec(
      data.C2, FixedComponent.IM_BIG_X, -1.0,
      1.0 + SLICE_INSET, 2.0 * math.sqrt(2.0) - SLICE_INSET, samples,
  )


def sample_slice(
    slice_spec: SliceSpec,
    tol: float = numerics.DEFAULT_TOL,
    workers: int = 1,
) -> list[tuple[float, float]]:
  """(t, residual) at evenly spaced points of the slice, in order."""
  ts = np.linspace(slice_spec.lo, slice_spec.hi, slice_spec.samples)
  if workers <= 1:
    values = [slice_spec.residual_at(t, tol) for t in ts]
  else:
    with futures.ThreadPoolExecutor(max_workers=workers) as pool:
      values = list(pool.map(lambda t: slice_spec.residual_at(t, tol), ts))
  return [(float(t), float(v)) for t, v in zip(ts, values)]


def solve_period(
    slice_spec: SliceSpec,
    tol: float = 1e-8,
    workers: int = 1,
) -> data.ShapeParams:
  """Finds period-closing shape parameters on a slice.

  The slice is sampled first; the first adjacent pair with opposite residual
  signs is refined with a bracketed root search.

  Args:
    slice_spec: The slice to search.
    tol: Required bound on |residual| at the returned point.
    workers: Threads used to sample the slice.

  Returns:
    Shape parameters strictly inside the slice range.

  Raises:
    BracketError: If no sign change is found; carries the sampled residuals.
    ConsistencyError: If the located root misses the residual tolerance.
  """
  quad_tol = min(numerics.DEFAULT_TOL, tol * 1e-2)
  samples = sample_slice(slice_spec, tol=quad_tol, workers=workers)
  for (t0, r0), (t1, r1) in more_itertools.pairwise(samples):
    if r0 == 0.0:
      t_root = t0
      break
    if r0 * r1 < 0:
      bracket = data.Bracket(lo=t0, hi=t1, f_lo=r0, f_hi=r1)
      t_root = numerics.find_root(
          lambda t: slice_spec.residual_at(t, quad_tol), bracket, tol=1e-13
      )
      break
  else:
    raise exceptions.BracketError(
        f"No sign change of the {slice_spec.family} residual on"
        f" ({slice_spec.lo}, {slice_spec.hi}) at"
        f" {slice_spec.fixed.value}={slice_spec.value}",
        samples=samples,
    )
  residual = slice_spec.residual_at(t_root, quad_tol)
  if abs(residual) >= tol:
    raise exceptions.ConsistencyError(
        f"Root at {t_root} leaves residual {residual:.3g} >= {tol}"
    )
  logging.info(
      "Solved %s slice %s=%g: t=%.12g residual=%.3g",
      slice_spec.family, slice_spec.fixed.value, slice_spec.value, t_root,
      residual,
  )
  return slice_spec.shape_at(t_root)


def _c2_re_lower_bound(im: float) -> float:
  # Smallest Re(X) allowed by Re^2 > -2 Im - Im^2.
  return math.sqrt(max(0.0, -2.0 * im - im * im))


def trace_curve(
    im_values: Sequence[float],
    start: float | None = None,
    half_width: float = 0.05,
    tol: float = 1e-8,
    max_expansions: int = 8,
) -> list[complex]:
  """Traces the C2 period-closing curve in the X plane.

  Each Im(X) in im_values is solved with a bracket centred on the previous
  root, widened until the residual changes sign.

  Args:
    im_values: Successive values of Im(X), all negative.
    start: Re(X) of the root at im_values[0]; solved on the reference slice
      when omitted (which requires im_values[0] == -1).
    half_width: Initial half-width of each bracket.
    tol: Residual tolerance per point.
    max_expansions: How often a bracket may be doubled.

  Returns:
    The period-closing X for every entry of im_values.

  Raises:
    BracketError: If a bracket cannot be widened into a sign change.
  """
  if not im_values:
    return []
  if start is None:
    if im_values[0] != -1.0:
      raise exceptions.PreconditionError(
          "Without a start value the curve must begin at Im(X) = -1"
      )
    sp = solve_period(c2_reference_slice(), tol=tol)
    start = families.derive_params(sp).X.real
  out = []
  center = float(start)
  for im in im_values:
    if not im < 0:
      raise exceptions.PreconditionError(f"Im(X) must be negative, got {im}")
    floor = _c2_re_lower_bound(im) + 1e-6
    width = half_width
    for _ in range(max_expansions):
      lo, hi = max(floor, center - width), center + width
      window = SliceSpec(data.C2, FixedComponent.IM_BIG_X, im, lo, hi, 2)
      try:
        sp = solve_period(window, tol=tol)
        break
      except exceptions.BracketError:
        width *= 2.0
    else:
      raise exceptions.BracketError(
          f"Could not bracket the C2 curve at Im(X)={im} around {center}",
          samples=[(center, float("nan"))],
      )
    X = families.derive_params(sp).X
    center = X.real
    out.append(complex(center, im))
  return out


# -- Oracles --------------------------------------------------------------------


class LimitKind(enum.Enum):
  IM0_I1 = "Im0_I1"
  IM0_I2 = "Im0_I2"
  A2_I1 = "A2_I1"
  A2_I2 = "A2_I2"


def limit_integrals_C2(
    kind: LimitKind | str, re_x: float | None = None
) -> float:
  """Limits of the scaled C2 integrals at the ends of the admissible region.

  The Im0 kinds are the limits of -Im(X) * I1 and -Im(X) * I2 as Im(X) -> 0
  with Re(X) fixed. The A2 kinds are I1 and I2 on Im(X) = -1 as A -> 2.

  Args:
    kind: Which limit.
    re_x: Re(X) > 0, required for the Im0 kinds.

  Returns:
    The limit, computed by quadrature.
  """
  kind = LimitKind(kind)
  if kind in (LimitKind.IM0_I1, LimitKind.IM0_I2):
    if re_x is None or not re_x > 0:
      raise exceptions.PreconditionError(
          f"{kind.value} needs Re(X) > 0, got {re_x}"
      )
    r2 = re_x * re_x
    if kind is LimitKind.IM0_I1:
      h = lambda u: r2 / math.sqrt(4.0 * u**4 + r2)
    else:
      h = lambda u: r2 * u * u / math.sqrt(4.0 + r2 * u**4)
    tol = numerics.DEFAULT_TOL * max(1.0, r2)
  elif kind is LimitKind.A2_I1:
    h = lambda u: math.sqrt(2.0) * (1.0 - u * u) / math.sqrt(
        2.0 * u**4 - 2.0 * u * u + 1.0
    )
    tol = numerics.DEFAULT_TOL
  else:
    h = lambda u: math.sqrt(2.0) * (1.0 + u * u) / math.sqrt(
        2.0 + 2.0 * u * u + u**4
    )
    tol = numerics.DEFAULT_TOL
  return numerics.integrate_quartic(h, tol=tol).value


def tilde_integrals(tol: float = 1e-8) -> tuple[float, float]:
  """The comparison integrals at X = 2 sqrt(2) - i.

  Both are computed by quadrature and by their Beta-function expansions.

  Returns:
    (first, second), the quadrature values.

  Raises:
    ConsistencyError: If the two routes differ by more than tol.
  """
  a = COMPARISON_A
  b_quarter = numerics.beta(0.25, 0.5)
  b_three_quarter = numerics.beta(0.75, 0.5)
  closed_first = 0.75 * b_quarter - b_three_quarter / 6.0
  closed_second = (
      a / 4.0 * b_three_quarter
      - a / 2.0 * numerics.beta(0.5, 0.5)
      + b_quarter / 4.0
  )
  quad_first = numerics.integrate_quartic(
      lambda u: 3.0 - 2.0 * u * u / 3.0
  ).value
  quad_second = numerics.integrate_quartic(
      lambda u: a * u * u - 2.0 * a * u + 1.0
  ).value
  for name, quad, closed in (
      ("first", quad_first, closed_first),
      ("second", quad_second, closed_second),
  ):
    if abs(quad - closed) > tol:
      raise exceptions.ConsistencyError(
          f"{name} comparison integral: quadrature {quad!r} vs closed form"
          f" {closed!r}"
      )
  return quad_first, quad_second


def comparison_bounds_hold(u_grid: Sequence[float]) -> bool:
  """Checks the two pointwise comparison bounds used at X = 2 sqrt(2) - i.

  Returns:
    True iff (9 - 2u^2)/(4u^4 - 4u^2 + 9)^(1/2) > 3 - 2u^2/3 and
    (2 + 9u^2)/(4 + 4u^2 + 9u^4)^(1/2) < a u^2 - 2 a u + 1 at every u.
  """
  u = np.asarray(u_grid, dtype=float)
  if u.size and not np.all((u > 0) & (u < 1)):
    raise exceptions.PreconditionError("Grid points must lie in (0, 1)")
  u2 = u * u
  a = COMPARISON_A
  first = (9 - 2 * u2) / np.sqrt(4 * u2 * u2 - 4 * u2 + 9) > 3 - 2 * u2 / 3
  second = (2 + 9 * u2) / np.sqrt(4 + 4 * u2 + 9 * u2 * u2) < (
      a * u2 - 2 * a * u + 1
  )
  return bool(np.all(first) and np.all(second))


def embeddedness_discriminant(dp: data.DerivedParams) -> float:
  """Margin of the condition that (T^2 - A^2)(T^2 - |X|^2) = 4 A Im(X) T^2
  has no positive root T^2.

  Returns:
    2 A |X| - |A^2 + |X|^2 + 4 A Im(X)|; positive means no positive root.
  """
  A, b, m = dp.A, dp.X.imag, abs(dp.X) ** 2
  return 2.0 * A * math.sqrt(m) - abs(A * A + m + 4.0 * A * b)

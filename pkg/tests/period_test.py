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

import math

from absl.testing import absltest
from absl.testing import parameterized
import numpy as np

from tpms import data
from tpms import exceptions
from tpms import families
from tpms import numerics
from tpms import period

_SQRT8 = 2.0 * math.sqrt(2.0)


def _c2(X):
  return families.derive_params(families.shape_from_X(data.C2, X))


class PeriodIntegralsTest(parameterized.TestCase):

  def test_c2_residual_changes_sign_on_reference_slice(self):
    low = period.period_integrals(_c2(1.01 - 1.0j))
    high = period.period_integrals(_c2(_SQRT8 - 1.0j))
    self.assertLess(low.residual, 0.0)
    self.assertGreater(high.residual, 0.0)
    self.assertAlmostEqual(low.residual, low.first - low.second, delta=1e-12)

  def test_l4_residual_weights_first_integral(self):
    dp = families.derive_params(data.ShapeParams(data.L4, 0.5 + 0.5j))
    report = period.period_integrals(dp)
    self.assertEqual(report.family, data.L4)
    self.assertAlmostEqual(
        report.residual, 2.0 * report.first - report.second, delta=1e-12
    )

  def test_l2_residual_is_negative(self):
    for x in (0.5 + 0.5j, 0.2 + 0.9j, 0.9 + 0.1j):
      dp = families.derive_params(data.ShapeParams(data.L2, x))
      self.assertLess(period.period_integrals(dp).residual, 0.0)

  def test_l2_second_integral_by_direct_route(self):
    dp = families.derive_params(data.ShapeParams(data.L2, 0.5 + 0.5j))
    report = period.period_integrals(dp)
    direct = period.l2_j2_direct(dp)
    self.assertAlmostEqual(direct.value, report.second, delta=1e-7)

  @parameterized.parameters(0.5 + 0.5j, 0.2 + 0.9j, 1.5 + 0.7j)
  def test_l2_integrals_match_the_quartic_form(self, x):
    # With t = u^2 both integrals are int h(u) du / sqrt(1 - u^4).
    dp = families.derive_params(data.ShapeParams(data.L2, x))
    report = period.period_integrals(dp)
    a = dp.a
    first = numerics.integrate_quartic(
        lambda u: 2.0 * (u * u + a) / abs(u * u + x)
    )
    second = numerics.integrate_quartic(
        lambda u: 2.0 * (1.0 - a * u * u) / abs(1.0 - x * u * u)
    )
    self.assertAlmostEqual(report.first, first.value, delta=1e-8)
    self.assertAlmostEqual(report.second, second.value, delta=1e-8)

  def test_family_specific_entry_points_check_the_family(self):
    dp = families.derive_params(data.ShapeParams(data.L2, 0.5 + 0.5j))
    with self.assertRaises(exceptions.PreconditionError):
      period.period_integrals_C2(dp)

  def test_quad_error_is_reported(self):
    report = period.period_integrals(_c2(2.0 - 1.0j))
    self.assertGreaterEqual(report.quad_error, 0.0)
    self.assertLess(report.quad_error, 1e-6)


class SliceTest(parameterized.TestCase):

  @parameterized.named_parameters(
      dict(testcase_name="empty_range", lo=2.0, hi=1.0, samples=4,
           family=data.C2, fixed=period.FixedComponent.IM_BIG_X),
      dict(testcase_name="one_sample", lo=1.0, hi=2.0, samples=1,
           family=data.C2, fixed=period.FixedComponent.IM_BIG_X),
      dict(testcase_name="wrong_component", lo=0.1, hi=0.9, samples=4,
           family=data.L2, fixed=period.FixedComponent.IM_BIG_X),
  )
  def test_invalid_slices(self, lo, hi, samples, family, fixed):
    with self.assertRaises(exceptions.PreconditionError):
      period.SliceSpec(family, fixed, -1.0, lo, hi, samples)

  def test_reference_slice_bounds(self):
    line = period.c2_reference_slice()
    self.assertGreater(line.lo, 1.0)
    self.assertLess(line.hi, _SQRT8)
    self.assertEqual(line.value, -1.0)

  def test_solve_reference_slice(self):
    line = period.c2_reference_slice()
    sp = period.solve_period(line)
    dp = families.derive_params(sp)
    self.assertBetween(dp.X.real, 1.0, _SQRT8)
    self.assertAlmostEqual(dp.X.imag, -1.0, delta=1e-12)
    self.assertLess(abs(period.period_integrals(dp).residual), 1e-8)

  def test_solve_with_workers_matches_serial(self):
    line = period.c2_reference_slice(samples=8)
    serial = period.solve_period(line)
    threaded = period.solve_period(line, workers=4)
    self.assertAlmostEqual(serial.x, threaded.x, delta=1e-12)

  def test_solve_l4_slice(self):
    line = period.SliceSpec(
        data.L4, period.FixedComponent.IM_BIG_X, -1.0, 0.01, 4.0
    )
    sp = period.solve_period(line)
    dp = families.derive_params(sp)
    self.assertLess(abs(period.period_integrals(dp).residual), 1e-8)

  def test_l2_slice_has_no_root(self):
    line = period.SliceSpec(
        data.L2, period.FixedComponent.IM_SMALL_X, 0.5, 0.01, 2.0
    )
    with self.assertRaises(exceptions.BracketError) as cm:
      period.solve_period(line)
    samples = cm.exception.samples
    self.assertLen(samples, line.samples)
    self.assertTrue(all(r < 0 for _, r in samples))

  def test_sample_slice_is_ordered(self):
    samples = period.sample_slice(period.c2_reference_slice(samples=5))
    ts = [t for t, _ in samples]
    self.assertEqual(ts, sorted(ts))
    self.assertLen(samples, 5)

  def test_trace_curve_continues_from_reference_root(self):
    curve = period.trace_curve([-1.0, -0.95])
    self.assertLen(curve, 2)
    for X in curve:
      residual = period.period_integrals(_c2(X)).residual
      self.assertLess(abs(residual), 1e-8)
    self.assertAlmostEqual(curve[1].imag, -0.95, delta=1e-12)

  def test_trace_curve_needs_a_start_off_the_reference_slice(self):
    with self.assertRaises(exceptions.PreconditionError):
      period.trace_curve([-0.5])


class OracleTest(parameterized.TestCase):

  @parameterized.named_parameters(
      dict(testcase_name="first", kind=period.LimitKind.IM0_I1, index=0),
      dict(testcase_name="second", kind=period.LimitKind.IM0_I2, index=1),
  )
  def test_flat_limit(self, kind, index):
    im = -1e-4
    report = period.period_integrals(_c2(2.0 + 1j * im))
    scaled = -im * (report.first, report.second)[index]
    limit = period.limit_integrals_C2(kind, re_x=2.0)
    self.assertAlmostEqual(scaled / limit, 1.0, delta=1e-3)

  @parameterized.named_parameters(
      dict(testcase_name="first", kind=period.LimitKind.A2_I1, index=0),
      dict(testcase_name="second", kind=period.LimitKind.A2_I2, index=1),
  )
  def test_a_two_limit(self, kind, index):
    report = period.period_integrals(_c2(1.0 + 1e-5 - 1.0j))
    value = (report.first, report.second)[index]
    self.assertAlmostEqual(value, period.limit_integrals_C2(kind), delta=1e-3)

  def test_flat_limit_needs_positive_real_part(self):
    with self.assertRaises(exceptions.PreconditionError):
      period.limit_integrals_C2(period.LimitKind.IM0_I1)

  def test_comparison_integrals(self):
    first, second = period.tilde_integrals()
    self.assertAlmostEqual(first, 3.534, delta=1e-2)
    self.assertAlmostEqual(second, 2.932, delta=1e-2)
    self.assertGreater(first, second)

  def test_comparison_bounds(self):
    self.assertTrue(period.comparison_bounds_hold([0.5]))
    self.assertTrue(
        period.comparison_bounds_hold(np.linspace(0.001, 0.999, 1000))
    )

  def test_comparison_bounds_reject_closed_interval(self):
    with self.assertRaises(exceptions.PreconditionError):
      period.comparison_bounds_hold([0.0, 0.5])

  def test_embeddedness_discriminant(self):
    self.assertGreater(
        period.embeddedness_discriminant(_c2(2.0 - 1.0j)), 1.0
    )
    self.assertAlmostEqual(
        period.embeddedness_discriminant(_c2(_SQRT8 - 1.0j)), 0.0, delta=1e-9
    )


if __name__ == "__main__":
  absltest.main()

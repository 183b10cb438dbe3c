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


"""Tests for the main package functions in __init__.py."""

from absl.testing import absltest

import tpms


class InitTest(absltest.TestCase):
  """Test cases for the main package functions."""

  def test_solve_default_family(self):
    sp = tpms.solve()
    self.assertEqual(sp.family, tpms.data.C2)
    dp = tpms.families.derive_params(sp)
    self.assertAlmostEqual(dp.X.imag, -1.0, delta=1e-12)
    report = tpms.period.period_integrals(dp)
    self.assertLess(abs(report.residual), 1e-8)

  def test_solve_on_a_given_slice(self):
    line = tpms.period.SliceSpec(
        tpms.data.L4, tpms.period.FixedComponent.IM_BIG_X, -1.0, 0.01, 4.0
    )
    sp = tpms.solve("L4", slice_spec=line)
    self.assertEqual(sp.family, tpms.data.L4)

  def test_l2_has_no_period_solution(self):
    with self.assertRaises(tpms.exceptions.BracketError):
      tpms.solve("L2")

  def test_unknown_family(self):
    with self.assertRaises(tpms.exceptions.PreconditionError):
      tpms.solve("K3")


if __name__ == "__main__":
  absltest.main()

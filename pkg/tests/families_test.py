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

import cmath
import math

from absl.testing import absltest
from absl.testing import parameterized
import numpy as np

from tpms import data
from tpms import exceptions
from tpms import families

_SQRT8 = 2.0 * math.sqrt(2.0)


def _c2(X=2.0 - 1.0j):
  return families.derive_params(families.shape_from_X(data.C2, X))


def _dp(tag):
  if tag == "C2":
    return _c2()
  return families.derive_params(
      data.ShapeParams(data.family(tag), 0.5 + 0.5j)
  )


class DeriveParamsTest(parameterized.TestCase):

  def test_c2_reference_point(self):
    dp = _c2(_SQRT8 - 1.0j)
    self.assertAlmostEqual(dp.A, 9.0, delta=1e-12)
    self.assertAlmostEqual(dp.c, 1.0 / 8.0, delta=1e-12)
    self.assertAlmostEqual(dp.a + 1.0 / dp.a, dp.A, delta=1e-12)
    self.assertBetween(dp.a, 0.0, 1.0)

  def test_l4_quantities(self):
    dp = _dp("L4")
    self.assertAlmostEqual(dp.X, 1.5 - 0.5j, delta=1e-12)
    self.assertAlmostEqual(dp.A, 5.0, delta=1e-12)
    self.assertAlmostEqual(1.0 / dp.a - dp.a, dp.A, delta=1e-12)
    self.assertAlmostEqual(dp.c, 1.0 / (dp.A + dp.X.imag), delta=1e-12)

  def test_l2_quantities(self):
    dp = _dp("L2")
    self.assertAlmostEqual(dp.A, 3.0, delta=1e-12)
    self.assertAlmostEqual(dp.a, (3.0 - math.sqrt(5.0)) / 2.0, delta=1e-12)
    self.assertGreater(dp.c, 0.0)

  def test_scale_routes_agree(self):
    dp = _c2()
    self.assertAlmostEqual(
        families.c_from_modulus(dp.A, dp.X),
        families.c_from_imaginary_part(dp.A, dp.X),
        delta=1e-12,
    )

  @parameterized.named_parameters(
      dict(testcase_name="outside_disk", x=0.9 + 0.9j, constraint="|x|<1"),
      dict(testcase_name="second_quadrant", x=-0.5 + 0.5j,
           constraint="Arg(x)"),
      dict(testcase_name="on_real_axis", x=0.5 + 0.0j, constraint="Arg(x)"),
      dict(testcase_name="beyond_modulus_bound", x=0.9 * cmath.exp(1.2j),
           constraint="A>2"),
  )
  def test_c2_rejections_name_the_constraint(self, x, constraint):
    with self.assertRaises(exceptions.AdmissibilityError) as cm:
      families.derive_params(data.ShapeParams(data.C2, x))
    self.assertEqual(cm.exception.constraint, constraint)
    self.assertIsInstance(cm.exception, ValueError)

  def test_modulus_bound(self):
    theta = 1.2
    bound = families.modulus_bound(theta)
    self.assertAlmostEqual(bound, 0.716, delta=1e-3)
    self.assertTrue(
        families.admissible(
            data.ShapeParams(data.C2, 0.7 * cmath.exp(1j * theta))
        )
    )
    self.assertFalse(
        families.admissible(
            data.ShapeParams(data.C2, 0.73 * cmath.exp(1j * theta))
        )
    )

  @parameterized.parameters(0.3, 0.7, 1.0, 1.4)
  def test_modulus_bound_separates_admissible_region(self, theta):
    bound = families.modulus_bound(theta)
    inside = data.ShapeParams(data.C2, 0.98 * bound * cmath.exp(1j * theta))
    outside = data.ShapeParams(data.C2, 1.02 * bound * cmath.exp(1j * theta))
    self.assertTrue(families.admissible(inside))
    self.assertFalse(families.admissible(outside))

  def test_shape_from_X_inverts_derive(self):
    X = 2.0 - 1.0j
    sp = families.shape_from_X(data.C2, X)
    self.assertLess(abs(sp.x), 1.0)
    self.assertAlmostEqual(families.derive_params(sp).X, X, delta=1e-12)

  def test_shape_from_X_rejects_l2(self):
    with self.assertRaises(exceptions.PreconditionError):
      families.shape_from_X(data.L2, 1.0 - 1.0j)


class GaussSquaresTest(parameterized.TestCase):

  @parameterized.parameters("C2", "L4", "L2")
  def test_squares_differ_by_four(self, tag):
    dp = _dp(tag)
    for z in (0.3 + 0.4j, 0.7 + 0.1j, -1.2 + 0.5j):
      sq = families.gauss_squares(dp, dp.family, z)
      self.assertAlmostEqual(sq.q - sq.p, 4.0, delta=1e-9 * (1 + abs(sq.p)))

  @parameterized.parameters("C2", "L4", "L2")
  def test_zeros_at_plus_and_minus_x(self, tag):
    dp = _dp(tag)
    self.assertAlmostEqual(
        families.gauss_squares(dp, dp.family, -dp.x).p, 0.0, delta=1e-9
    )
    self.assertAlmostEqual(
        families.gauss_squares(dp, dp.family, dp.x).q, 0.0, delta=1e-9
    )

  @parameterized.named_parameters(
      dict(testcase_name="c2_at_one", tag="C2", z=1.0),
      dict(testcase_name="l4_at_i", tag="L4", z=1j),
      dict(testcase_name="l2_at_minus_one", tag="L2", z=-1.0),
      dict(testcase_name="at_zero", tag="C2", z=0.0),
  )
  def test_poles(self, tag, z):
    dp = _dp(tag)
    with self.assertRaises(exceptions.PoleError):
      families.gauss_squares(dp, dp.family, z)

  @parameterized.parameters("C2", "L4", "L2")
  def test_generic_fiber_has_four_points(self, tag):
    dp = _dp(tag)
    self.assertEqual(families.fiber_size(dp, 0.31 + 0.57j), 4)

  def test_candidates_are_related_by_the_half_turn(self):
    dp = _c2()
    g, g_flip, g_inv, g_neg = families.candidates(dp, 0.31 + 0.57j)
    self.assertAlmostEqual(g_flip, -1.0 / g, delta=1e-9)
    self.assertAlmostEqual(g_inv, 1.0 / g, delta=1e-9)
    self.assertAlmostEqual(g_neg, -g, delta=1e-9)

  def test_roots_from_g_recovers_the_sheet(self):
    dp = _c2()
    z = 0.31 + 0.57j
    for g in families.candidates(dp, z):
      point = families.roots_from_g(dp, z, g)
      self.assertAlmostEqual(families.g_from_roots(dp, point), g, delta=1e-9)

  @parameterized.parameters("C2", "L4", "L2")
  def test_forms_match_height_differential(self, tag):
    dp = _dp(tag)
    z = 0.31 + 0.57j
    g = families.candidates(dp, z)[0]
    point = families.roots_from_g(dp, z, g)
    dh = families.height_differential(dp, dp.family, z, g)
    expected = families.weierstrass_forms(z, g, dh)
    np.testing.assert_allclose(
        families.forms_at(dp, point), expected, rtol=1e-9, atol=1e-12
    )

  def test_height_differential_needs_finite_nonzero_g(self):
    dp = _c2()
    with self.assertRaises(exceptions.SingularityError):
      families.height_differential(dp, dp.family, 0.3 + 0.3j, 0.0)


class ContinuationTest(absltest.TestCase):

  def test_loop_around_x_flips_sigma_only(self):
    dp = _c2()
    radius = 0.05
    z0 = dp.x + radius
    start = families.roots_from_g(dp, z0, families.candidates(dp, z0)[0])
    angles = np.linspace(0.0, 2.0 * math.pi, 401)[1:]
    end = families.continue_roots(
        dp, start, dp.x + radius * np.exp(1j * angles)
    )[-1]
    self.assertAlmostEqual(end.s, start.s, delta=1e-9)
    self.assertAlmostEqual(end.sigma, -start.sigma, delta=1e-9)

  def test_small_loop_away_from_branch_points_is_trivial(self):
    dp = _c2()
    centre = 0.6 + 0.6j
    z0 = centre + 0.05
    start = families.roots_from_g(dp, z0, families.candidates(dp, z0)[0])
    angles = np.linspace(0.0, 2.0 * math.pi, 401)[1:]
    end = families.continue_roots(
        dp, start, centre + 0.05 * np.exp(1j * angles)
    )[-1]
    self.assertAlmostEqual(end.s, start.s, delta=1e-9)
    self.assertAlmostEqual(end.sigma, start.sigma, delta=1e-9)

  def test_continuing_onto_a_branch_point_fails(self):
    dp = _c2()
    z0 = dp.x + 0.1
    start = families.roots_from_g(dp, z0, families.candidates(dp, z0)[0])
    with self.assertRaises(exceptions.ContinuationError):
      families.continue_roots(dp, start, [dp.x])

  def test_continue_g_starts_with_the_given_value(self):
    dp = _c2()
    path = [0.3 + 0.3j, 0.32 + 0.3j, 0.34 + 0.3j]
    g0 = families.candidates(dp, path[0])[1]
    gs = families.continue_g(path, g0, dp, dp.family)
    self.assertLen(gs, 3)
    self.assertEqual(gs[0], g0)
    for z, g in zip(path, gs):
      sq = families.gauss_squares(dp, dp.family, z)
      self.assertAlmostEqual(
          (g - 1.0 / g) ** 2, sq.p, delta=1e-8 * (1 + abs(sq.p))
      )


class BoundaryArcTest(parameterized.TestCase):

  def test_g_on_sb_is_positive_and_vanishes_toward_s(self):
    dp = _c2()
    arc = families.C2_ARCS[data.ArcLabel.SB]
    near_s = families.g_on_arc(arc, 0.01, dp)
    middle = families.g_on_arc(arc, 0.5, dp)
    self.assertAlmostEqual(near_s.imag, 0.0, delta=1e-12)
    self.assertGreater(near_s.real, 0.0)
    self.assertLess(near_s.real, middle.real)

  def test_g_on_bl_grows_toward_l(self):
    dp = _c2()
    arc = families.C2_ARCS[data.ArcLabel.BL]
    near_l = families.g_on_arc(arc, 0.01, dp)
    middle = families.g_on_arc(arc, math.pi / 4, dp)
    self.assertGreater(near_l.real, middle.real)
    self.assertGreater(middle.real, 0.0)

  @parameterized.parameters("C2", "L2", "L4")
  def test_image_arcs_carry_the_half_turned_values(self, tag):
    dp = _dp(tag)
    arcs = families.boundary_arcs(dp.family)
    for label, image in families.RHO_H_IMAGE.items():
      arc = arcs[label]
      t = 0.5 * (arc.t_start + arc.t_end)
      g = families.g_on_arc(arc, t, dp)
      g_image = families.g_on_arc(arcs[image], t, dp)
      self.assertAlmostEqual(g_image, -1.0 / g, delta=1e-8 * (1 + abs(g)))

  def test_g_on_ls_prime_lies_on_the_diagonal(self):
    dp = _c2()
    arc = families.C2_ARCS[data.ArcLabel.LS_PRIME]
    for t in (0.2, 0.5, 0.9):
      g = families.g_on_arc(arc, t, dp)
      self.assertLess(arc.g_locus.deviation(g), 1e-8)

  @parameterized.product(tag=("C2", "L2", "L4"), label=list(data.ArcLabel))
  def test_g_follows_the_tabulated_locus(self, tag, label):
    dp = _dp(tag)
    arc = families.boundary_arcs(dp.family)[label]
    for t in arc.samples(5, inset=0.05):
      g = families.g_on_arc(arc, t, dp)
      self.assertLess(arc.g_locus.deviation(g), 1e-7, msg=f"t={t}")

  @parameterized.product(tag=("C2", "L2", "L4"), label=list(data.ArcLabel))
  def test_height_differential_follows_the_tabulated_line(self, tag, label):
    dp = _dp(tag)
    arc = families.boundary_arcs(dp.family)[label]
    for t in arc.samples(5, inset=0.05):
      point = families.arc_point(arc, t, dp)
      dh = families.forms_at(dp, point)[2] * arc.tangent(t)
      part = dh.imag if arc.dh_locus is families.LineKind.REAL else dh.real
      self.assertLess(abs(part), 1e-7 * max(1.0, abs(dh)), msg=f"t={t}")

  @parameterized.parameters("C2", "L2", "L4")
  def test_anchor_target_has_unit_gauss_map(self, tag):
    dp = _dp(tag)
    z = families.anchor_target(dp)
    g = families.g_from_roots(dp, families.anchor_point(dp, z))
    self.assertAlmostEqual(g, 1.0, delta=1e-9)

  def test_l2_rays_reach_far_out(self):
    dp = _dp("L2")
    arc = families.L2_ARCS[data.ArcLabel.BL]
    self.assertAlmostEqual(arc.z(0.25), 4.0, delta=1e-12)
    g = families.g_on_arc(arc, 0.05, dp)
    self.assertLess(arc.g_locus.deviation(g), 1e-7)
    arc = families.L2_ARCS[data.ArcLabel.LS_PRIME]
    self.assertAlmostEqual(arc.z(0.5), 1j, delta=1e-12)

  def test_parameter_outside_arc(self):
    with self.assertRaises(exceptions.PreconditionError):
      families.g_on_arc(families.C2_ARCS[data.ArcLabel.SB], 1.5, _c2())

  def test_locus_deviation(self):
    ray = families.Locus(1.0, True)
    self.assertEqual(ray.deviation(2.0), 0.0)
    self.assertGreater(ray.deviation(-2.0), 1.0)
    self.assertEqual(ray.deviation(0.0), 0.0)

  def test_locus_image(self):
    line = families.Locus(1j, False)
    self.assertEqual(line.image().deviation(-1.0 / 2j), 0.0)
    ray = families.Locus(1.0, True).image()
    self.assertEqual(ray.deviation(-0.5), 0.0)


class PreimageTest(parameterized.TestCase):

  @parameterized.named_parameters(
      dict(testcase_name="c2", tag="C2", expected=8),
      dict(testcase_name="l4", tag="L4", expected=8),
      dict(testcase_name="l2", tag="L2", expected=4),
  )
  def test_generic_value_count_is_the_degree(self, tag, expected):
    dp = _dp(tag)
    points = families.g_preimages(dp, 2.0 + 1.0j)
    self.assertLen(points, expected)
    self.assertEqual(dp.family.gauss_degree, expected)
    for _, g in points:
      self.assertAlmostEqual(g, 2.0 + 1.0j, delta=1e-6)


if __name__ == "__main__":
  absltest.main()

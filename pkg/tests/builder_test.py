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

from absl.testing import absltest
from absl.testing import parameterized
import numpy as np

from tpms import builder
from tpms import data
from tpms import exceptions
from tpms import families
from tpms import geometry

_RESOLUTION = 12


def _c2():
  return families.derive_params(families.shape_from_X(data.C2, 2.0 - 1.0j))


class SampleDomainTest(parameterized.TestCase):

  @classmethod
  def setUpClass(cls):
    super().setUpClass()
    cls.dp = _c2()
    cls.grid = builder.sample_domain(_RESOLUTION, x=cls.dp.x)

  @parameterized.named_parameters(
      dict(testcase_name="coarse", resolution=7, clearance=1e-3, x=0.5 + 0.5j),
      dict(testcase_name="no_clearance", resolution=8, clearance=0.0,
           x=0.5 + 0.5j),
      dict(testcase_name="outside_disk", resolution=8, clearance=1e-3,
           x=0.9 + 0.9j),
      dict(testcase_name="on_real_axis", resolution=8, clearance=1e-3,
           x=0.5 + 0.0j),
  )
  def test_invalid_arguments(self, resolution, clearance, x):
    with self.assertRaises(exceptions.PreconditionError):
      builder.sample_domain(resolution, clearance, x)

  def test_huge_clearance_leaves_no_room(self):
    with self.assertRaises(exceptions.GridError):
      builder.sample_domain(8, clearance=0.45, x=0.5 + 0.5j)

  def test_arcs_lie_on_the_boundary(self):
    grid = self.grid
    nodes = grid.nodes
    for label, chain in grid.arcs.items():
      self.assertGreaterEqual(len(chain), _RESOLUTION + 1, msg=label)
    np.testing.assert_array_equal(nodes[list(grid.arcs[data.ArcLabel.SB])].real, 0.0)
    np.testing.assert_array_equal(
        nodes[list(grid.arcs[data.ArcLabel.LS_PRIME])].imag, 0.0
    )
    np.testing.assert_allclose(
        np.abs(nodes[list(grid.arcs[data.ArcLabel.BL])]), 1.0, atol=1e-15
    )

  def test_corners(self):
    grid = self.grid
    self.assertEqual(grid.nodes[grid.corners["S"]], 0.0)
    self.assertEqual(grid.nodes[grid.corners["S'"]], 0.0)
    self.assertNotEqual(grid.corners["S"], grid.corners["S'"])
    self.assertEqual(grid.nodes[grid.corners["L"]], 1.0)
    self.assertEqual(grid.nodes[grid.corners["B"]], 1j)
    self.assertEqual(grid.nodes[grid.corners["A"]], self.dp.x)

  def test_cut_nodes_are_doubled(self):
    grid = self.grid
    upper = grid.seams[builder.CUT_UPPER]
    lower = grid.seams[builder.CUT_LOWER]
    self.assertLen(upper, len(lower))
    np.testing.assert_array_equal(grid.nodes[list(upper)], grid.nodes[list(lower)])
    self.assertEqual(upper[-1], lower[-1])
    for i, j in zip(upper[1:-1], lower[1:-1]):
      self.assertNotEqual(i, j)
      self.assertEqual(grid.labels[i], builder.CUT_UPPER)
      self.assertEqual(grid.labels[j], builder.CUT_LOWER)

  def test_regular_nodes_keep_clear_of_branch_points(self):
    grid = self.grid
    regular = [i for i in range(grid.num_nodes) if i not in grid.excluded]
    z = grid.nodes[regular]
    for branch in (0.0, 1.0, self.dp.x):
      self.assertGreaterEqual(
          np.abs(z - branch).min(), 0.99 * grid.clearance
      )

  def test_triangles_are_counterclockwise(self):
    z = self.grid.nodes[self.grid.triangles]
    area = np.imag((z[:, 1] - z[:, 0]).conjugate() * (z[:, 2] - z[:, 0]))
    self.assertGreater(area.min(), 0.0)

  def test_finer_grid_has_more_boundary_nodes(self):
    fine = builder.sample_domain(2 * _RESOLUTION, x=self.dp.x)
    self.assertGreater(
        len(fine.boundary_nodes()), len(self.grid.boundary_nodes())
    )


class ImmersionTest(absltest.TestCase):

  @classmethod
  def setUpClass(cls):
    super().setUpClass()
    cls.dp = _c2()
    cls.grid = builder.sample_domain(_RESOLUTION, x=cls.dp.x)
    cls.mesh = builder.integrate_immersion(cls.grid, cls.dp, data.C2)
    cls.scale = cls.mesh.diameter()

  def test_positions_are_finite(self):
    self.assertTrue(np.all(np.isfinite(self.mesh.positions)))
    self.assertGreater(self.scale, 0.0)

  def test_path_independence(self):
    self.assertLess(self.mesh.metadata["path_residual"], 1e-7 * self.scale)
    self.assertLess(self.mesh.metadata["corner_gap"], 1e-6 * self.scale)

  def test_sb_is_a_straight_segment_on_the_x2_axis(self):
    sb = self.mesh.positions[list(self.mesh.arcs[data.ArcLabel.SB])]
    self.assertLess(np.abs(sb[:, 0]).max(), 1e-7 * self.scale)
    self.assertLess(np.abs(sb[:, 2]).max(), 1e-7 * self.scale)

  def test_bl_lies_in_a_vertical_plane(self):
    bl = self.mesh.positions[list(self.mesh.arcs[data.ArcLabel.BL])]
    fit = geometry.fit_plane(bl)
    self.assertLess(fit.rms, 1e-7 * self.scale)
    self.assertLess(abs(fit.normal[2]), 1e-6)

  def test_height_along_ls_prime_is_monotone(self):
    chain = list(self.mesh.arcs[data.ArcLabel.LS_PRIME])
    steps = np.diff(self.mesh.positions[chain, 2])
    self.assertTrue(np.all(steps > 0) or np.all(steps < 0))

  def test_corner_gauss_map_values(self):
    g = self.mesh.g
    corners = self.mesh.corners
    self.assertEqual(g[corners["S"]], 0.0)
    self.assertTrue(np.isinf(g[corners["S'"]]))
    self.assertTrue(np.isinf(g[corners["L"]]))
    self.assertIn(g[corners["A"]], (1j, -1j))

  def test_tree_kind_does_not_matter(self):
    dfs = builder.integrate_immersion(
        self.grid, self.dp, data.C2, tree=builder.TreeKind.DFS
    )
    np.testing.assert_allclose(
        dfs.positions, self.mesh.positions, atol=1e-7 * self.scale
    )

  def test_threaded_integration_matches(self):
    threaded = builder.integrate_immersion(
        self.grid, self.dp, data.C2, workers=4
    )
    np.testing.assert_allclose(
        threaded.positions, self.mesh.positions, atol=1e-12 * self.scale
    )

  def test_second_sheet_is_the_half_turned_first(self):
    second = builder.integrate_immersion(self.grid, self.dp, data.C2, sheet=1)
    image = builder.apply_rho_h(self.mesh)
    np.testing.assert_allclose(
        second.positions, image.positions, atol=1e-6 * self.scale
    )
    self.assertIn(data.ArcLabel.S_PRIME_B_PRIME, second.arcs)
    np.testing.assert_array_equal(second.sheet, 1)

  def test_half_turn_is_an_involution(self):
    twice = builder.apply_rho_h(builder.apply_rho_h(self.mesh))
    np.testing.assert_allclose(
        twice.positions, self.mesh.positions, atol=1e-12 * self.scale
    )
    np.testing.assert_allclose(twice.g, self.mesh.g, rtol=1e-12)
    self.assertEqual(set(twice.arcs), set(self.mesh.arcs))
    self.assertEqual(twice.corners, self.mesh.corners)

  def test_half_turn_fixes_a(self):
    image = builder.apply_rho_h(self.mesh)
    a = self.mesh.corners["A"]
    np.testing.assert_allclose(
        image.positions[a], self.mesh.positions[a], atol=1e-12
    )

  def test_grid_for_another_x_is_rejected(self):
    other = builder.sample_domain(8, x=0.3 + 0.3j)
    with self.assertRaises(exceptions.PreconditionError):
      builder.integrate_immersion(other, self.dp, data.C2)


class ResolutionTest(parameterized.TestCase):

  @parameterized.parameters(8, 16, 24)
  def test_path_residual_is_below_one_over_n(self, n):
    dp = _c2()
    grid = builder.sample_domain(n, x=dp.x)
    mesh = builder.integrate_immersion(grid, dp, data.C2)
    self.assertLess(mesh.metadata["path_residual"], mesh.diameter() / n)


class FamilyGridTest(parameterized.TestCase):

  def test_l4_grid_branches_at_b(self):
    grid = builder.sample_domain(_RESOLUTION, x=0.5 + 0.5j, family=data.L4)
    self.assertEqual(grid.branch_corners, ("S", "S'", "B", "A"))
    self.assertEqual(grid.nodes[grid.corners["B"]], 1j)
    self.assertEqual(grid.nodes[grid.corners["L"]], 1.0)
    self.assertIn(grid.corners["B"], grid.excluded)
    self.assertNotIn(grid.corners["L"], grid.excluded)
    regular = [i for i in range(grid.num_nodes) if i not in grid.excluded]
    z = grid.nodes[regular]
    for name in grid.branch_corners:
      self.assertGreaterEqual(
          np.abs(z - grid.nodes[grid.corners[name]]).min(),
          0.99 * grid.clearance, msg=name,
      )

  @parameterized.parameters(0.5 + 0.5j, 1.5 + 0.7j)
  def test_l2_grid_covers_the_quadrant(self, x):
    grid = builder.sample_domain(_RESOLUTION, x=x, family=data.L2)
    nodes = grid.nodes
    self.assertEqual(grid.branch_corners, ("S", "S'", "B", "L", "A"))
    self.assertEqual(nodes[grid.corners["S"]], 0.0)
    self.assertEqual(nodes[grid.corners["S'"]], 0.0)
    self.assertEqual(nodes[grid.corners["B"]], 1.0)
    self.assertTrue(np.isinf(nodes[grid.corners["L"]]))
    self.assertEqual(nodes[grid.corners["A"]], x)
    sb = nodes[list(grid.arcs[data.ArcLabel.SB])]
    bl = nodes[list(grid.arcs[data.ArcLabel.BL])]
    ls = nodes[list(grid.arcs[data.ArcLabel.LS_PRIME])]
    np.testing.assert_array_equal(sb.imag, 0.0)
    self.assertTrue(np.all((sb.real >= 0.0) & (sb.real <= 1.0)))
    np.testing.assert_array_equal(bl.imag, 0.0)
    self.assertTrue(np.all(bl.real >= 1.0))
    self.assertTrue(np.isinf(ls[0]))
    np.testing.assert_array_equal(ls[1:].real, 0.0)
    for chain in grid.arcs.values():
      self.assertGreaterEqual(len(chain), _RESOLUTION + 1)

  def test_l2_triangles_are_counterclockwise(self):
    grid = builder.sample_domain(_RESOLUTION, x=0.5 + 0.5j, family=data.L2)
    finite = np.all(np.isfinite(grid.nodes[grid.triangles]), axis=1)
    z = grid.nodes[grid.triangles[finite]]
    area = np.imag((z[:, 1] - z[:, 0]).conjugate() * (z[:, 2] - z[:, 0]))
    self.assertGreater(area.min(), 0.0)

  def test_grid_for_another_family_is_rejected(self):
    dp = families.derive_params(data.ShapeParams(data.L4, 0.5 + 0.5j))
    grid = builder.sample_domain(8, x=dp.x)
    with self.assertRaises(exceptions.PreconditionError):
      builder.integrate_immersion(grid, dp, data.L4)


def _line_angle(first: geometry.LineFit, second: geometry.LineFit) -> float:
  return float(np.arccos(min(1.0, abs(first.direction @ second.direction))))


class FamilyImmersionTest(parameterized.TestCase):

  @parameterized.named_parameters(
      dict(testcase_name="l4", tag="L4", x=0.5 + 0.5j, angle=np.pi / 4),
      dict(testcase_name="l2", tag="L2", x=0.5 + 0.5j, angle=np.pi / 2),
      dict(testcase_name="l2_outside_disk", tag="L2", x=1.5 + 0.7j,
           angle=np.pi / 2),
  )
  def test_straight_and_planar_arcs(self, tag, x, angle):
    family = data.family(tag)
    dp = families.derive_params(data.ShapeParams(family, x))
    grid = builder.sample_domain(_RESOLUTION, x=x, family=family)
    mesh = builder.integrate_immersion(grid, dp, family)
    scale = mesh.diameter()
    self.assertTrue(np.all(np.isfinite(mesh.positions)))
    self.assertLess(mesh.metadata["path_residual"], 1e-7 * scale)
    self.assertLess(mesh.metadata["corner_gap"], 1e-6 * scale)
    lines = {}
    for label in (data.ArcLabel.SB, data.ArcLabel.BL):
      chain = list(mesh.arcs[label])[1:-1]
      fit = geometry.fit_line(mesh.positions[chain])
      self.assertLess(fit.rms, 1e-7 * scale, msg=label)
      self.assertLess(abs(fit.direction[2]), 1e-6, msg=label)
      lines[label] = fit
    self.assertAlmostEqual(
        _line_angle(lines[data.ArcLabel.SB], lines[data.ArcLabel.BL]),
        angle, delta=1e-5,
    )
    chain = list(mesh.arcs[data.ArcLabel.LS_PRIME])[1:-1]
    plane = geometry.fit_plane(mesh.positions[chain])
    self.assertLess(plane.rms, 1e-7 * scale)
    self.assertLess(abs(plane.normal[2]), 1e-6)

  @parameterized.parameters("L4", "L2")
  def test_second_sheet_is_the_half_turned_first(self, tag):
    family = data.family(tag)
    dp = families.derive_params(data.ShapeParams(family, 0.5 + 0.5j))
    grid = builder.sample_domain(_RESOLUTION, x=dp.x, family=family)
    first = builder.integrate_immersion(grid, dp, family)
    second = builder.integrate_immersion(grid, dp, family, sheet=1)
    np.testing.assert_allclose(
        second.positions, builder.apply_rho_h(first).positions,
        atol=1e-6 * first.diameter(),
    )


class FamilyAssemblyTest(absltest.TestCase):

  @classmethod
  def setUpClass(cls):
    super().setUpClass()
    sp = data.ShapeParams(data.L4, 0.5 + 0.5j)
    cls.domain, cls.piece = builder.build_piece(sp, resolution=_RESOLUTION)

  def test_piece_is_built_from_four_copies(self):
    self.assertEqual(self.piece.metadata["group_order"], 4.0)
    self.assertLess(self.piece.metadata["plane_deviation"], 1e-3)
    self.assertGreater(self.piece.num_vertices, self.domain.num_vertices)

  def test_piece_is_invariant_under_its_mirrors(self):
    doubled = builder.double_domain(self.domain)
    first, second, _ = builder.symmetry_generators(doubled, data.L4)
    scale = self.piece.diameter()
    for motion in (first, second):
      moved = motion.apply(self.piece.positions)
      self.assertLess(
          geometry.one_sided_hausdorff(moved, self.piece.positions),
          1e-6 * scale,
      )

  def test_lateral_lines_form_two_parallel_pairs(self):
    lines = builder.lateral_lines(self.piece, data.L4)
    self.assertLen(lines, 4)
    for line in lines:
      self.assertLess(abs(line.direction[2]), 1e-6)

  def test_horizontal_lattice_vectors(self):
    _, (a, b, c) = builder.tile(self.piece, data.L4, (1, 1, 1))
    self.assertAlmostEqual(a[2], 0.0, delta=1e-9 * np.linalg.norm(a))
    self.assertAlmostEqual(b[2], 0.0, delta=1e-9 * np.linalg.norm(b))
    cross = abs(a[0] * b[1] - a[1] * b[0])
    self.assertGreater(cross, 1e-3 * np.linalg.norm(a) * np.linalg.norm(b))
    self.assertGreater(abs(c[2]), 0.0)

  def test_horizontal_tiling(self):
    block, _ = builder.tile(self.piece, data.L4, (2, 1, 1))
    self.assertGreater(block.num_vertices, self.piece.num_vertices)
    self.assertLessEqual(block.num_vertices, 2 * self.piece.num_vertices)


class AssemblyTest(absltest.TestCase):

  @classmethod
  def setUpClass(cls):
    super().setUpClass()
    cls.dp = _c2()
    grid = builder.sample_domain(_RESOLUTION, x=cls.dp.x)
    cls.domain = builder.integrate_immersion(grid, cls.dp, data.C2)
    cls.doubled = builder.double_domain(cls.domain)
    cls.piece = builder.assemble_fundamental_piece(cls.domain, data.C2)

  def test_doubled_domain_shares_the_cut(self):
    n = self.domain.num_vertices
    glued = 2 * len(self.domain.seams[builder.CUT_UPPER]) - 1
    self.assertEqual(self.doubled.num_vertices, 2 * n - glued)
    self.assertLess(
        self.doubled.metadata["seam_gap"], 1e-6 * self.domain.diameter()
    )
    for label in families.RHO_H_IMAGE.values():
      self.assertIn(label, self.doubled.arcs)

  def test_open_cut_is_a_leak(self):
    positions = self.domain.positions.copy()
    positions[self.domain.seams[builder.CUT_LOWER][1]] += 1.0
    broken = data.Mesh(
        positions=positions,
        triangles=self.domain.triangles,
        z=self.domain.z,
        g=self.domain.g,
        sheet=self.domain.sheet,
        arcs=self.domain.arcs,
        corners=self.domain.corners,
        seams=self.domain.seams,
    )
    with self.assertRaises(exceptions.PeriodLeakError):
      builder.double_domain(broken)

  def test_piece_is_built_from_eight_copies(self):
    self.assertEqual(self.piece.metadata["group_order"], 8.0)
    self.assertLess(self.piece.metadata["plane_deviation"], 1e-3)
    self.assertGreater(self.piece.num_vertices, self.doubled.num_vertices)
    self.assertLess(self.piece.num_vertices, 8 * self.doubled.num_vertices)

  def test_piece_is_invariant_under_its_mirrors(self):
    r_bl, r_ls, _ = builder.symmetry_generators(self.doubled)
    scale = self.piece.diameter()
    for motion in (r_bl, r_ls):
      moved = motion.apply(self.piece.positions)
      self.assertLess(
          geometry.one_sided_hausdorff(moved, self.piece.positions),
          1e-6 * scale,
      )

  def test_lattice_vectors(self):
    block, (a, b, c) = builder.tile(self.piece, data.C2, (1, 1, 1))
    self.assertIs(block, self.piece)
    self.assertAlmostEqual(a[2], 0.0, delta=1e-12)
    self.assertAlmostEqual(b[2], 0.0, delta=1e-12)
    self.assertAlmostEqual(float(a @ b), 0.0, delta=1e-9 * float(a @ a))
    self.assertAlmostEqual(
        np.linalg.norm(a), np.linalg.norm(b), delta=1e-12
    )
    self.assertGreater(abs(c[2]), 0.0)

  def test_vertical_tiling_adds_a_turned_piece(self):
    block, _ = builder.tile(self.piece, data.C2, (1, 1, 2))
    self.assertGreater(block.num_vertices, self.piece.num_vertices)
    self.assertLessEqual(block.num_vertices, 2 * self.piece.num_vertices)

  def test_block_of_eight_pieces(self):
    block, _ = builder.tile(self.piece, data.C2, (2, 2, 2))
    self.assertGreater(block.num_vertices, 4 * self.piece.num_vertices)
    self.assertLessEqual(block.num_vertices, 8 * self.piece.num_vertices)

  def test_tile_counts_must_be_positive(self):
    with self.assertRaises(exceptions.PreconditionError):
      builder.tile(self.piece, data.C2, (0, 1, 1))

  def test_build_piece(self):
    sp = families.shape_from_X(data.C2, 2.0 - 1.0j)
    domain, piece = builder.build_piece(sp, resolution=8)
    self.assertEqual(piece.metadata["group_order"], 8.0)
    self.assertLess(domain.num_vertices, piece.num_vertices)


if __name__ == "__main__":
  absltest.main()

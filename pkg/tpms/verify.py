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

"""Independent numerical checks of parameters and meshes.

Every check returns a VerificationReport: a mapping from check id to a
CheckResult holding a residual, the tolerance it is compared against, and a
short human-readable detail. Reports merge, so a full run is the union of
the individual checks.
"""

from __future__ import annotations

import cmath
from collections.abc import Mapping, Sequence
import dataclasses
import math

from absl import logging
import numpy as np
from scipy import sparse

from tpms import builder
from tpms import data
from tpms import exceptions
from tpms import families
from tpms import geometry
from tpms import period

# Loci a generic Gauss-map probe must keep away from.
_PROBE_LINES = (1.0, 1j, cmath.exp(0.25j * math.pi), cmath.exp(-0.25j * math.pi))
_PROBE_POINTS = (0j, 1j, -1j)
PROBE_DISTANCE = 0.1
DEFAULT_PROBES = (2.0 + 1.0j, 0.5 + 1.5j, -1.7 + 0.4j, -0.6 - 2.2j, 1.3 - 0.3j)
# A z away from every branch point and pole of the three families.
FIBER_PROBE = 0.37 + 0.61j
# Radius in z around each corner left out of the curvature check.
CURVATURE_EXCLUSION = 0.1
MINIMALITY_SCALE = 64.0


@dataclasses.dataclass(frozen=True)
class CheckResult:
  """Outcome of a single check; passed iff residual <= tolerance."""

  passed: bool
  residual: float
  tolerance: float
  detail: str = ""

  def __post_init__(self):
    if self.passed != bool(self.residual <= self.tolerance):
      raise exceptions.PreconditionError(
          f"passed={self.passed} contradicts residual={self.residual} and"
          f" tolerance={self.tolerance}"
      )

  @classmethod
  def of(cls, residual: float, tolerance: float, detail: str = "") -> CheckResult:
    residual = float(residual)
    return cls(bool(residual <= tolerance), residual, float(tolerance), detail)


@dataclasses.dataclass(frozen=True)
class VerificationReport:
  checks: dict[str, CheckResult] = dataclasses.field(default_factory=dict)

  @property
  def passed(self) -> bool:
    return all(c.passed for c in self.checks.values())

  @property
  def failures(self) -> list[str]:
    return [name for name, c in self.checks.items() if not c.passed]

  def merge(self, *others: VerificationReport) -> VerificationReport:
    checks = dict(self.checks)
    for other in others:
      checks.update(other.checks)
    return VerificationReport(checks)

  def rows(self) -> list[dict[str, object]]:
    """One dict per check, in insertion order, for tabular export."""
    return [
        {
            "check": name,
            "passed": c.passed,
            "residual": c.residual,
            "tolerance": c.tolerance,
            "detail": c.detail,
        }
        for name, c in self.checks.items()
    ]

  def to_text(self) -> str:
    width = max((len(name) for name in self.checks), default=0)
    lines = [
        f"{'PASS' if c.passed else 'FAIL'}  {name:<{width}}  "
        f"residual={c.residual:.3e}  tol={c.tolerance:.1e}  {c.detail}".rstrip()
        for name, c in self.checks.items()
    ]
    verdict = "all checks passed" if self.passed else (
        f"{len(self.failures)} of {len(self.checks)} checks failed"
    )
    return "\n".join(lines + [verdict])


def _require_c2(family: data.FamilyId, what: str) -> None:
  if family.tag is not data.FamilyTag.C2:
    raise exceptions.UnsupportedFamilyError(
        f"{what} is available for C2 only, not {family}"
    )


# -- Boundary loci ----------------------------------------------------------------


def _line_deviation(value: complex, line: families.LineKind) -> float:
  if value == 0:
    return 0.0
  off = value.imag if line is families.LineKind.REAL else value.real
  return abs(off) / abs(value)


def check_boundary_loci(
    dp: data.DerivedParams,
    family: data.FamilyId,
    samples_per_arc: int = 100,
    tol: float = 1e-8,
) -> VerificationReport:
  """Deviation of g and dh(z') from their tabulated loci along each arc.

  The g deviation is the sine of the angle between g and its line (plus 1
  when g sits on the wrong half of a ray); the dh deviation is the relative
  size of the off-line component of dh applied to the arc tangent.
  """
  checks = {}
  for label, arc in families.boundary_arcs(family).items():
    worst_g = worst_dh = 0.0
    for t in arc.samples(samples_per_arc):
      point = families.arc_point(arc, float(t), dp)
      g = families.g_from_roots(dp, point)
      worst_g = max(worst_g, arc.g_locus.deviation(g))
      dh = families.forms_at(dp, point)[2] * arc.tangent(float(t))
      worst_dh = max(worst_dh, _line_deviation(dh, arc.dh_locus))
    checks[f"loci.{label.value}.g"] = CheckResult.of(
        worst_g, tol, f"{samples_per_arc} samples"
    )
    checks[f"loci.{label.value}.dh"] = CheckResult.of(
        worst_dh, tol, f"{arc.dh_locus.value} line"
    )
  return VerificationReport(checks)


# -- Periods -----------------------------------------------------------------------


def check_period_residual(
    dp: data.DerivedParams, tol: float = 1e-8
) -> VerificationReport:
  """|residual| of the period integrals against tol."""
  report = period.period_integrals(dp)
  return VerificationReport({
      "period.residual": CheckResult.of(
          abs(report.residual), tol,
          f"{report.first:.10g} vs {report.second:.10g}",
      )
  })


def mesh_spans(mesh: data.Mesh) -> tuple[float, float]:
  """(|x1 span of BL|, |x2 span of SB|) of a domain mesh."""
  bl = mesh.arcs[data.ArcLabel.BL]
  sb = mesh.arcs[data.ArcLabel.SB]
  bl_span = abs(mesh.positions[bl[-1], 0] - mesh.positions[bl[0], 0])
  sb_span = abs(mesh.positions[sb[-1], 1] - mesh.positions[sb[0], 1])
  return float(bl_span), float(sb_span)


def check_period_closure(
    mesh: data.Mesh, dp: data.DerivedParams, tol: float = 1e-3
) -> VerificationReport:
  """Compares the horizontal displacements along BL and SB.

  The period closes when Re of the integral of phi1 along BL equals Re of the
  integral of phi2 along SB. Both displacements are also compared with the
  quadrature values: with the forms normalized as here they are sqrt(c/2)
  times I1 and I2.
  """
  _require_c2(dp.family, "check_period_closure")
  bl_span, sb_span = mesh_spans(mesh)
  gap = bl_span - sb_span
  relative = abs(gap) / max(bl_span, sb_span)
  report = period.period_integrals(dp)
  scale = math.sqrt(dp.c / 2.0)
  expected_bl, expected_sb = scale * report.first, scale * report.second
  same_sign = (
      relative <= tol or np.sign(gap) == np.sign(report.residual)
  )
  return VerificationReport({
      "period.closure": CheckResult.of(
          relative, tol, f"BL {bl_span:.8g} vs SB {sb_span:.8g}"
      ),
      "period.sign": CheckResult.of(
          0.0 if same_sign else 1.0, 0.0,
          f"mesh gap {gap:+.3g}, integral residual {report.residual:+.3g}",
      ),
      "period.first": CheckResult.of(
          abs(bl_span - expected_bl) / expected_bl, tol,
          f"mesh {bl_span:.8g} vs quadrature {expected_bl:.8g}",
      ),
      "period.second": CheckResult.of(
          abs(sb_span - expected_sb) / expected_sb, tol,
          f"mesh {sb_span:.8g} vs quadrature {expected_sb:.8g}",
      ),
  })


# -- Minimality --------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class CurvatureStats:
  max: float
  mean: float
  vertices: int
  excluded_triangles: int


def _cotangents(p: np.ndarray) -> np.ndarray:
  """Cotangent of the angle at each corner of each triangle, shape (m, 3)."""
  out = np.empty(p.shape[:2])
  for k in range(3):
    a = p[:, (k + 1) % 3] - p[:, k]
    b = p[:, (k + 2) % 3] - p[:, k]
    out[:, k] = np.einsum("ij,ij->i", a, b) / np.linalg.norm(
        np.cross(a, b), axis=1
    )
  return out


def _mixed_areas(p: np.ndarray, cot: np.ndarray, area: np.ndarray) -> np.ndarray:
  """Mixed Voronoi area of each triangle corner, shape (m, 3)."""
  out = np.empty(p.shape[:2])
  for k in range(3):
    i, j = (k + 1) % 3, (k + 2) % 3
    e_ki = np.sum((p[:, i] - p[:, k]) ** 2, axis=1)
    e_kj = np.sum((p[:, j] - p[:, k]) ** 2, axis=1)
    out[:, k] = (e_ki * cot[:, j] + e_kj * cot[:, i]) / 8.0
  obtuse = cot < 0
  any_obtuse = obtuse.any(axis=1)
  out[any_obtuse] = (area[any_obtuse] / 4.0)[:, None]
  out[obtuse] = np.repeat(area, 3).reshape(-1, 3)[obtuse] / 2.0
  return out


def _near_corners(mesh: data.Mesh, exclusion: float) -> np.ndarray:
  """Vertices whose z lies within `exclusion` of a corner's z.

  A corner at z = inf excludes |z| > 1/exclusion.
  """
  z = mesh.z
  near = np.zeros(mesh.num_vertices, dtype=bool)
  if exclusion <= 0:
    return near
  with np.errstate(invalid="ignore", over="ignore"):
    for zc in {complex(z[i]) for i in mesh.corners.values()}:
      if cmath.isinf(zc):
        near |= ~(np.abs(z) <= 1.0 / exclusion)
      else:
        near |= np.abs(z - zc) < exclusion
  return near


def mean_curvature(
    mesh: data.Mesh, exclusion: float = CURVATURE_EXCLUSION
) -> tuple[np.ndarray, np.ndarray, int]:
  """Discrete mean curvature along the Gauss-map normal.

  Vertices on the boundary and within `exclusion` (in z) of a named corner
  are left out: the forms have square-root behaviour there, so a grid that
  is regular in z gives triangles of fixed shape at every resolution.

  Returns:
    (h, interior, excluded): h per vertex (nan off the interior), the interior
    vertex indices, and the number of degenerate triangles left out.
  """
  positions, triangles = mesh.positions, mesh.triangles
  area = geometry.triangle_areas(positions, triangles)
  floor = 1e-14 * max(mesh.diameter(), 1e-300) ** 2
  good = area > floor
  excluded = int((~good).sum())
  if excluded:
    logging.warning("Excluding %d degenerate triangles", excluded)
  tris, area = triangles[good], area[good]
  p = positions[tris]
  cot = _cotangents(p)
  n = mesh.num_vertices
  rows, cols, vals = [], [], []
  for k in range(3):
    i, j = tris[:, (k + 1) % 3], tris[:, (k + 2) % 3]
    w = 0.5 * cot[:, k]
    rows += [i, j, i, j]
    cols += [j, i, i, j]
    vals += [w, w, -w, -w]
  laplacian = sparse.coo_matrix(
      (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
      shape=(n, n),
  ).tocsr()
  mass = np.zeros(n)
  np.add.at(mass, tris.ravel(), _mixed_areas(p, cot, area).ravel())

  boundary = set(geometry.boundary_edges(tris).ravel().tolist())
  boundary |= set(mesh.corners.values())
  boundary |= set(np.flatnonzero(_near_corners(mesh, exclusion)).tolist())
  interior = np.array(
      [i for i in np.unique(tris) if i not in boundary and mass[i] > 0],
      dtype=int,
  )
  h = np.full(n, np.nan)
  if len(interior):
    lap = laplacian @ positions
    normals = mesh.normals
    h[interior] = np.abs(
        np.einsum("ij,ij->i", lap[interior], normals[interior])
    ) / (2.0 * mass[interior])
  return h, interior, excluded


def curvature_stats(
    mesh: data.Mesh, exclusion: float = CURVATURE_EXCLUSION
) -> CurvatureStats:
  h, interior, excluded = mean_curvature(mesh, exclusion)
  if not len(interior):
    raise exceptions.PreconditionError("Mesh has no interior vertices")
  values = h[interior]
  return CurvatureStats(
      max=float(values.max()), mean=float(values.mean()),
      vertices=len(interior), excluded_triangles=excluded,
  )


def minimality_tolerance(mesh: data.Mesh) -> float:
  """Tolerance on the largest mean curvature, first order in 1/N.

  In units of 1/diameter.
  """
  resolution = mesh.metadata.get("resolution", 64.0)
  return MINIMALITY_SCALE / (resolution * mesh.diameter())


def check_minimality(
    mesh: data.Mesh,
    tol: float | None = None,
    exclusion: float = CURVATURE_EXCLUSION,
) -> VerificationReport:
  """Cotangent-Laplacian mean curvature over interior vertices.

  The check compares the maximum over interior vertices with tol; the mean
  is reported in the detail.
  """
  stats = curvature_stats(mesh, exclusion)
  if tol is None:
    tol = minimality_tolerance(mesh)
  return VerificationReport({
      "minimality": CheckResult.of(
          stats.max, tol,
          f"mean {stats.mean:.3g} over {stats.vertices} vertices,"
          f" {stats.excluded_triangles} degenerate triangles excluded",
      )
  })


def check_normals(
    mesh: data.Mesh, tol_degrees: float | None = None
) -> VerificationReport:
  """Angle between area-weighted triangle normals and Gauss-map normals."""
  if tol_degrees is None:
    tol_degrees = 10.0 * 64.0 / mesh.metadata.get("resolution", 64.0)
  discrete = geometry.vertex_normals(mesh.positions, mesh.triangles)
  cos = np.clip(np.einsum("ij,ij->i", discrete, mesh.normals), -1.0, 1.0)
  worst = float(np.degrees(np.arccos(cos)).max())
  return VerificationReport({
      "normals": CheckResult.of(worst, tol_degrees, "max angle in degrees")
  })


# -- Symmetries --------------------------------------------------------------------


def check_symmetries(
    piece: data.Mesh,
    motions: Mapping[str, geometry.RigidMotion] | Sequence[geometry.RigidMotion],
    tol: float = 1e-5,
) -> VerificationReport:
  """One-sided Hausdorff distance from the moved vertices to the piece.

  Distances are relative to the piece diameter.
  """
  if not isinstance(motions, Mapping):
    motions = {
        f"{i}.{m.kind.name.lower()}": m for i, m in enumerate(motions)
    }
  diameter = piece.diameter()
  checks = {}
  for name, motion in motions.items():
    distance = geometry.one_sided_hausdorff(
        motion.apply(piece.positions), piece.positions
    )
    checks[f"symmetry.{name}"] = CheckResult.of(
        distance / diameter, tol, f"absolute {distance:.3g}"
    )
  return VerificationReport(checks)


def check_rho_h(
    domain: data.Mesh, image: data.Mesh, tol: float = 1e-5
) -> VerificationReport:
  """Independently integrated sheet 1 against rho_h applied to sheet 0.

  Both meshes come from the same grid, so vertices correspond one to one.
  The distance is relative to the domain diameter.
  """
  expected = builder.apply_rho_h(domain).positions
  if expected.shape != image.positions.shape:
    raise exceptions.PreconditionError(
        "sheet meshes were integrated on different grids"
    )
  distance = float(np.linalg.norm(image.positions - expected, axis=1).max())
  return VerificationReport({
      "symmetry.rho_h": CheckResult.of(
          distance / domain.diameter(), tol, f"absolute {distance:.3g}"
      )
  })


# -- Embeddedness ------------------------------------------------------------------


def positive_height_roots(dp: data.DerivedParams) -> list[float]:
  """Positive roots T^2 of T^4 - (A^2 + |X|^2 + 4 A Im(X)) T^2 + A^2 |X|^2.

  A root is a height T along LS' where g would reach -exp(i pi/4).
  """
  A, b, m = dp.A, dp.X.imag, abs(dp.X) ** 2
  total = A * A + m + 4.0 * A * b
  product = A * A * m
  disc = total * total - 4.0 * product
  if total <= 0 or disc < -1e-12 * total * total:
    return []
  root = math.sqrt(max(disc, 0.0))
  if root <= 1e-9 * total:
    return [total / 2.0]
  return sorted([(total - root) / 2.0, (total + root) / 2.0])


def ls_prime_height_form(dp: data.DerivedParams, t: np.ndarray) -> np.ndarray:
  """dh/dt along LS' with Z = t < 0, nan where the radicand is negative."""
  X = dp.X
  radicand = t**4 - (X * X).real * t**2 + abs(X) ** 4
  with np.errstate(invalid="ignore"):
    return t / (np.sqrt(radicand) * np.sqrt(t * t + 4.0))


def _monotone_violation(values: np.ndarray) -> float:
  steps = np.diff(values)
  span = abs(values[-1] - values[0])
  if span == 0:
    return 1.0
  against = steps[np.sign(steps) != np.sign(values[-1] - values[0])]
  return float(np.abs(against).max() / span) if len(against) else 0.0


def check_embeddedness_conditions(
    dp: data.DerivedParams,
    mesh: data.Mesh | None = None,
    samples: int = 2000,
) -> VerificationReport:
  """The sufficient condition for embeddedness and its ingredients.

  Sub-checks: the inequality |A^2 + |X|^2 + 4 A Im(X)| < 2 A |X|; the
  absence of positive roots T^2 of the quartic in T; the sign of the height
  form along LS'; and, given a mesh, monotonicity of x3 along BL and LS'.

  Raises:
    UnsupportedFamilyError: For L2 and L4.
  """
  _require_c2(dp.family, "check_embeddedness_conditions")
  A, m = dp.A, abs(dp.X) ** 2
  ratio = abs(A * A + m + 4.0 * A * dp.X.imag) / (2.0 * A * math.sqrt(m))
  roots = positive_height_roots(dp)
  z = np.linspace(0.0, 1.0, samples + 2)[1:-1]
  form = ls_prime_height_form(dp, z - 1.0 / z)
  finite = np.isfinite(form)
  signs = np.sign(form[finite])
  mixed = min((signs > 0).sum(), (signs < 0).sum()) + (~finite).sum()
  checks = {
      "embedded.sufficient": CheckResult.of(
          ratio, 1.0 - 1e-12, f"-Re(X)/Im(X) = {-dp.X.real / dp.X.imag:.6g}"
      ),
      "embedded.no_positive_root": CheckResult.of(
          float(len(roots)), 0.0,
          "roots T^2: " + (", ".join(f"{r:.6g}" for r in roots) or "none"),
      ),
      "embedded.ls_prime_form": CheckResult.of(
          mixed / samples, 0.0, f"{samples} samples of the height form"
      ),
  }
  if mesh is not None:
    for label in (data.ArcLabel.BL, data.ArcLabel.LS_PRIME):
      heights = mesh.positions[list(mesh.arcs[label]), 2]
      checks[f"embedded.{label.value}.monotone"] = CheckResult.of(
          _monotone_violation(heights), 0.0, f"{len(heights)} chain vertices"
      )
  return VerificationReport(checks)


# -- Degree and compatibility ------------------------------------------------------


def is_generic_probe(w: complex) -> bool:
  """Away from the symmetry lines, from 0, +-i and infinity."""
  w = complex(w)
  if not cmath.isfinite(w) or abs(w) * PROBE_DISTANCE >= 1.0:
    return False
  if any(abs(w - p) <= PROBE_DISTANCE for p in _PROBE_POINTS):
    return False
  return all(
      abs((w * d.conjugate()).imag) > PROBE_DISTANCE for d in _PROBE_LINES
  )


def check_degree(
    dp: data.DerivedParams,
    family: data.FamilyId,
    probe: complex,
    fiber_probe: complex = FIBER_PROBE,
) -> VerificationReport:
  """Counts the solutions of g = probe and the sheets over a generic z.

  Raises:
    PreconditionError: If the probe is too close to a symmetry locus or a
      critical value; pick another probe.
  """
  if not is_generic_probe(probe):
    raise exceptions.PreconditionError(
        f"probe {probe} lies within {PROBE_DISTANCE} of a symmetry locus or"
        " critical value; retry with a generic probe"
    )
  solutions = families.g_preimages(dp, probe)
  sheets = families.fiber_size(dp, fiber_probe)
  return VerificationReport({
      f"degree.{probe}": CheckResult.of(
          abs(len(solutions) - family.gauss_degree), 0.0,
          f"{len(solutions)} solutions, expected {family.gauss_degree}",
      ),
      "degree.fiber": CheckResult.of(
          abs(sheets - 4), 0.0, f"{sheets} values of g over z={fiber_probe}"
      ),
  })


def check_compatibility(
    dp: data.DerivedParams,
    samples: int = 200,
    tol: float = 1e-10,
    seed: int = 0,
) -> VerificationReport:
  """q - p = 4 at random points of the unit disk."""
  rng = np.random.default_rng(seed)
  radii = rng.uniform(0.05, 0.95, samples)
  angles = rng.uniform(0.0, 2.0 * math.pi, samples)
  worst = 0.0
  for z in radii * np.exp(1j * angles):
    try:
      sq = families.gauss_squares(dp, dp.family, complex(z))
    except exceptions.PoleError:
      continue
    scale = max(1.0, abs(sq.p), abs(sq.q))
    worst = max(worst, abs(sq.q - sq.p - 4.0) / scale)
  return VerificationReport({
      "compatibility": CheckResult.of(worst, tol, f"{samples} random points")
  })


# -- Full run ----------------------------------------------------------------------


def verify_parameters(
    sp: data.ShapeParams,
    tol_root: float = 1e-8,
    probes: Sequence[complex] = DEFAULT_PROBES,
) -> VerificationReport:
  """Checks that need no mesh: periods, degree, compatibility, loci."""
  dp = families.derive_params(sp)
  report = check_period_residual(dp, tol_root).merge(
      check_compatibility(dp), check_boundary_loci(dp, sp.family)
  )
  for probe in probes:
    report = report.merge(check_degree(dp, sp.family, probe))
  if sp.family.tag is data.FamilyTag.C2:
    report = report.merge(check_embeddedness_conditions(dp))
  return report


def verify_all(
    sp: data.ShapeParams,
    resolution: int = 32,
    clearance: float = families.DEFAULT_CLEARANCE,
    tol_root: float = 1e-8,
    tol_check: float = 1e-3,
    workers: int = 1,
) -> VerificationReport:
  """verify_parameters plus the mesh checks.

  Period closure and the embeddedness conditions on the mesh are C2 checks;
  the rest runs for every family.
  """
  report = verify_parameters(sp, tol_root)
  dp = families.derive_params(sp)
  grid = builder.sample_domain(resolution, clearance, dp.x, sp.family)
  domain = builder.integrate_immersion(grid, dp, sp.family, workers=workers)
  image = builder.integrate_immersion(
      grid, dp, sp.family, sheet=1, workers=workers
  )
  piece = builder.assemble_fundamental_piece(domain, sp.family)
  doubled = builder.double_domain(domain)
  first, second, _ = builder.symmetry_generators(doubled, sp.family)
  mirrors = builder.MIRRORS[sp.family.tag]
  report = report.merge(
      check_minimality(domain),
      check_normals(domain),
      check_rho_h(domain, image),
      check_symmetries(piece, {
          f"reflection.{mirrors.arcs[0].value}": first,
          f"reflection.{mirrors.arcs[1].value}": second,
      }),
  )
  if sp.family.tag is data.FamilyTag.C2:
    report = report.merge(
        check_period_closure(domain, dp, tol_check),
        check_embeddedness_conditions(dp, domain),
    )
  logging.info(
      "Verification of %s x=%s: %d checks, %d failed", sp.family, sp.x,
      len(report.checks), len(report.failures),
  )
  return report

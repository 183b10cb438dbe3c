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

"""Classes used to represent the core data types of the surface pipeline."""

from __future__ import annotations

import dataclasses
import enum

import numpy as np

from tpms import exceptions


class FamilyTag(enum.Enum):
  C2 = "C2"
  L2 = "L2"
  L4 = "L4"


@dataclasses.dataclass(frozen=True)
class FamilyId:
  """A surface family with its topological constants.

  Attributes:
    tag: Which family.
    genus: Genus of the quotient by the translation group.
    gauss_degree: Degree of the Gauss map on the quotient (genus - 1).
  """

  tag: FamilyTag
  genus: int
  gauss_degree: int

  def __str__(self) -> str:
    return self.tag.value


C2 = FamilyId(FamilyTag.C2, genus=9, gauss_degree=8)
L2 = FamilyId(FamilyTag.L2, genus=5, gauss_degree=4)
L4 = FamilyId(FamilyTag.L4, genus=9, gauss_degree=8)

_FAMILIES = {f.tag: f for f in (C2, L2, L4)}


def family(tag: str | FamilyTag | FamilyId) -> FamilyId:
  """Returns the FamilyId for a tag such as "C2"."""
  if isinstance(tag, FamilyId):
    return tag
  try:
    return _FAMILIES[FamilyTag(tag)]
  except ValueError as e:
    raise exceptions.PreconditionError(
        f"Unknown family {tag!r}; expected one of C2, L2, L4"
    ) from e


@dataclasses.dataclass(frozen=True)
class ShapeParams:
  """Free shape parameter of a family.

  Attributes:
    family: The surface family.
    x: Image of the point A under the covering map z.
  """

  family: FamilyId
  x: complex


@dataclasses.dataclass(frozen=True)
class DerivedParams:
  """Dependent quantities fixed by the constraint equations.

  Attributes:
    family: The surface family.
    x: The free parameter the quantities were derived from.
    X: 1/x - x for C2, 1/x + x for L4, unused (0) for L2.
    A: The quantity a + 1/a (C2, L2) or 1/a - a (L4).
    a: The double-zero location, in (0, 1).
    c: Positive scale of the Gauss-map squares (C2, L4). For L2 this holds
      the prefactor (1/a - a)/|x - a|^2.
  """

  family: FamilyId
  x: complex
  X: complex
  A: float
  a: float
  c: float


class ArcLabel(enum.Enum):
  SB = "SB"
  BL = "BL"
  LS_PRIME = "LS'"
  S_PRIME_B_PRIME = "S'B'"
  B_PRIME_F_PRIME = "B'F'"
  F_PRIME_S = "F'S"


@dataclasses.dataclass(frozen=True)
class QuadratureResult:
  """Value of a definite integral with its absolute error estimate."""

  value: float
  error_estimate: float
  evaluations: int

  def __post_init__(self):
    if self.error_estimate < 0:
      raise exceptions.PreconditionError("error_estimate must be >= 0")
    if self.evaluations <= 0:
      raise exceptions.PreconditionError("evaluations must be > 0")


@dataclasses.dataclass(frozen=True)
class Bracket:
  """An interval known to contain a sign change of a function."""

  lo: float
  hi: float
  f_lo: float
  f_hi: float

  def __post_init__(self):
    if not self.lo < self.hi:
      raise exceptions.PreconditionError(
          f"Bracket needs lo < hi, got [{self.lo}, {self.hi}]"
      )
    if not self.f_lo * self.f_hi < 0:
      raise exceptions.PreconditionError(
          f"Bracket needs a sign change, got f_lo={self.f_lo},"
          f" f_hi={self.f_hi}"
      )


@dataclasses.dataclass(frozen=True)
class PeriodReport:
  """The two period integrals of a family and their closing residual.

  Attributes:
    family: The surface family.
    first: I1 (C2, L4) or J1 (L2).
    second: I2 (C2, L4) or J2 (L2).
    residual: I1 - I2 (C2), 2 I1 - I2 (L4) or J1 - J2 (L2).
    quad_error: Sum of the absolute quadrature error estimates.
  """

  family: FamilyId
  first: float
  second: float
  residual: float
  quad_error: float


@dataclasses.dataclass(frozen=True)
class SurfaceSample:
  """A point of the surface together with its cover coordinates.

  Attributes:
    z: Value of the covering map.
    g: Gauss map (complex, possibly infinite).
    sheet: Sheet tag of the cover point.
    position: Position in space.
    normal: Unit normal, the stereographic unprojection of g.
  """

  z: complex
  g: complex
  sheet: int
  position: np.ndarray
  normal: np.ndarray


def gauss_normal(g: complex | np.ndarray) -> np.ndarray:
  """Unit normal for Gauss-map values, shape (..., 3).

  Infinite g maps to the north pole (0, 0, 1).
  """
  g = np.asarray(g, dtype=complex)
  finite = np.isfinite(g)
  gs = np.where(finite, g, 0.0)
  m2 = np.abs(gs) ** 2
  out = np.stack(
      [2 * gs.real, 2 * gs.imag, m2 - 1.0], axis=-1
  ) / (m2 + 1.0)[..., None]
  return np.where(finite[..., None], out, np.array([0.0, 0.0, 1.0]))


@dataclasses.dataclass(frozen=True, eq=False)
class Mesh:
  """A triangulated patch of the surface.

  Attributes:
    positions: Vertex positions, shape (n, 3).
    triangles: Vertex index triples, shape (m, 3).
    z: Covering-map value per vertex.
    g: Gauss-map value per vertex.
    sheet: Sheet tag per vertex.
    arcs: Ordered vertex chains per boundary arc.
    corners: Named special vertices (e.g. "S", "L", "A").
    seams: Named vertex chains along which copies are glued, e.g. the two
      sides of the cut from S to A.
    metadata: Scalar diagnostics recorded while building.
  """

  positions: np.ndarray
  triangles: np.ndarray
  z: np.ndarray
  g: np.ndarray
  sheet: np.ndarray
  arcs: dict[ArcLabel, tuple[int, ...]] = dataclasses.field(
      default_factory=dict
  )
  corners: dict[str, int] = dataclasses.field(default_factory=dict)
  seams: dict[str, tuple[int, ...]] = dataclasses.field(default_factory=dict)
  metadata: dict[str, float] = dataclasses.field(default_factory=dict)

  @property
  def num_vertices(self) -> int:
    return len(self.positions)

  @property
  def normals(self) -> np.ndarray:
    return gauss_normal(self.g)

  @property
  def vertices(self) -> list[SurfaceSample]:
    normals = self.normals
    return [
        SurfaceSample(
            z=complex(self.z[i]),
            g=complex(self.g[i]),
            sheet=int(self.sheet[i]),
            position=self.positions[i],
            normal=normals[i],
        )
        for i in range(self.num_vertices)
    ]

  def diameter(self) -> float:
    """Axis-aligned bounding box diagonal."""
    if not self.num_vertices:
      return 0.0
    return float(
        np.linalg.norm(self.positions.max(axis=0) - self.positions.min(axis=0))
    )

  def corner(self, name: str) -> np.ndarray:
    return self.positions[self.corners[name]]

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

"""Rigid motions, plane and line fits, and vertex welding."""

from __future__ import annotations

from collections.abc import Sequence
import dataclasses
import enum

import numpy as np
from scipy import sparse
from scipy import spatial
from scipy.sparse import csgraph

from tpms import data
from tpms import exceptions

_ORTHO_TOL = 1e-12
_E3 = np.array([0.0, 0.0, 1.0])


class MotionKind(enum.Enum):
  REFLECTION = "vertical-plane reflection"
  HALF_TURN = "horizontal-line half-turn"
  TRANSLATION = "vertical translation"
  COMPOSITE = "composite"


@dataclasses.dataclass(frozen=True, eq=False)
class RigidMotion:
  """p -> linear @ p + shift.

  Attributes:
    linear: 3x3 orthogonal matrix.
    shift: Translation part.
    kind: Which family of symmetries the motion belongs to; reflections fix a
      vertical plane, half-turns have a horizontal axis, translations are
      vertical. Compositions are COMPOSITE.
  """

  linear: np.ndarray
  shift: np.ndarray
  kind: MotionKind = MotionKind.COMPOSITE

  def __post_init__(self):
    linear = np.asarray(self.linear, dtype=float)
    shift = np.asarray(self.shift, dtype=float)
    if linear.shape != (3, 3) or shift.shape != (3,):
      raise exceptions.PreconditionError("RigidMotion needs a 3x3 and a 3")
    if np.abs(linear.T @ linear - np.eye(3)).max() > _ORTHO_TOL:
      raise exceptions.PreconditionError("RigidMotion.linear not orthogonal")
    det = np.linalg.det(linear)
    if self.kind is MotionKind.REFLECTION and not (
        det < 0 and np.allclose(linear @ _E3, _E3, atol=_ORTHO_TOL)
    ):
      raise exceptions.PreconditionError("Not a vertical-plane reflection")
    if self.kind is MotionKind.HALF_TURN and not (
        det > 0
        and np.allclose(linear @ linear, np.eye(3), atol=_ORTHO_TOL)
        and np.isclose(linear[2, 2], -1.0, atol=_ORTHO_TOL)
    ):
      raise exceptions.PreconditionError("Not a horizontal-line half-turn")
    if self.kind is MotionKind.TRANSLATION and not (
        np.allclose(linear, np.eye(3)) and np.allclose(shift[:2], 0.0)
    ):
      raise exceptions.PreconditionError("Not a vertical translation")
    object.__setattr__(self, "linear", linear)
    object.__setattr__(self, "shift", shift)

  @property
  def orientation_reversing(self) -> bool:
    return bool(np.linalg.det(self.linear) < 0)

  def apply(self, points: np.ndarray) -> np.ndarray:
    """Applies the motion to points of shape (..., 3)."""
    return np.asarray(points) @ self.linear.T + self.shift

  def apply_vectors(self, vectors: np.ndarray) -> np.ndarray:
    return np.asarray(vectors) @ self.linear.T

  def then(self, other: RigidMotion) -> RigidMotion:
    """other after self."""
    return RigidMotion(
        other.linear @ self.linear,
        other.linear @ self.shift + other.shift,
    )

  def same_as(self, other: RigidMotion, tol: float = 1e-9) -> bool:
    return bool(
        np.abs(self.linear - other.linear).max() < tol
        and np.abs(self.shift - other.shift).max() < tol
    )


def identity() -> RigidMotion:
  return RigidMotion(np.eye(3), np.zeros(3))


def _horizontal_unit(v: Sequence[float]) -> np.ndarray:
  v = np.array([v[0], v[1], 0.0], dtype=float)
  norm = np.linalg.norm(v)
  if norm == 0:
    raise exceptions.PreconditionError("Direction has no horizontal part")
  return v / norm


def reflection(normal: Sequence[float], point: Sequence[float]) -> RigidMotion:
  """Reflection in the vertical plane through point with horizontal normal."""
  n = _horizontal_unit(normal)
  linear = np.eye(3) - 2.0 * np.outer(n, n)
  shift = 2.0 * np.dot(n, np.asarray(point, dtype=float)) * n
  return RigidMotion(linear, shift, MotionKind.REFLECTION)


def half_turn(
    direction: Sequence[float], point: Sequence[float]
) -> RigidMotion:
  """Rotation by pi about the horizontal line through point."""
  d = _horizontal_unit(direction)
  linear = 2.0 * np.outer(d, d) - np.eye(3)
  p = np.asarray(point, dtype=float)
  return RigidMotion(linear, p - linear @ p, MotionKind.HALF_TURN)


def translation(vector: Sequence[float]) -> RigidMotion:
  """Vertical translation; horizontal components must vanish."""
  return RigidMotion(np.eye(3), np.asarray(vector, dtype=float),
                     MotionKind.TRANSLATION)


def shift_by(vector: Sequence[float]) -> RigidMotion:
  """Translation in an arbitrary direction."""
  return RigidMotion(np.eye(3), np.asarray(vector, dtype=float))


def close_group(
    generators: Sequence[RigidMotion], max_order: int = 64
) -> list[RigidMotion]:
  """All products of the generators, for a finite group."""
  elements = [identity()]
  frontier = [identity()]
  while frontier:
    nxt = []
    for element in frontier:
      for gen in generators:
        candidate = element.then(gen)
        if not any(candidate.same_as(e) for e in elements):
          elements.append(candidate)
          nxt.append(candidate)
    frontier = nxt
    if len(elements) > max_order:
      raise exceptions.GeometryError(
          f"Generated group exceeds order {max_order}; generators are not"
          " a finite symmetry group"
      )
  return elements


@dataclasses.dataclass(frozen=True)
class PlaneFit:
  point: np.ndarray
  normal: np.ndarray
  rms: float

  def signed_distance(self, points: np.ndarray) -> np.ndarray:
    return (np.asarray(points) - self.point) @ self.normal


@dataclasses.dataclass(frozen=True)
class LineFit:
  point: np.ndarray
  direction: np.ndarray
  rms: float


def fit_plane(points: np.ndarray) -> PlaneFit:
  """Least-squares plane through points, shape (n, 3)."""
  points = np.asarray(points, dtype=float)
  if len(points) < 3:
    raise exceptions.PreconditionError("A plane fit needs at least 3 points")
  center = points.mean(axis=0)
  _, sing, vt = np.linalg.svd(points - center)
  normal = vt[-1]
  return PlaneFit(center, normal, float(sing[-1] / np.sqrt(len(points))))


def fit_line(points: np.ndarray) -> LineFit:
  """Least-squares line through points, shape (n, 3)."""
  points = np.asarray(points, dtype=float)
  if len(points) < 2:
    raise exceptions.PreconditionError("A line fit needs at least 2 points")
  center = points.mean(axis=0)
  _, sing, vt = np.linalg.svd(points - center)
  rms = float(np.sqrt((sing[1:] ** 2).sum() / len(points)))
  return LineFit(center, vt[0], rms)


def one_sided_hausdorff(source: np.ndarray, target: np.ndarray) -> float:
  """max over source points of the distance to the nearest target point."""
  if not len(source):
    return 0.0
  dist, _ = spatial.cKDTree(np.asarray(target)).query(np.asarray(source))
  return float(np.max(dist))


def weld_map(positions: np.ndarray, tol: float) -> np.ndarray:
  """Maps each vertex to a representative among vertices within tol.

  Returns:
    Array r with r[i] the smallest index of i's cluster.
  """
  n = len(positions)
  pairs = spatial.cKDTree(positions).query_pairs(tol, output_type="ndarray")
  graph = sparse.coo_matrix(
      (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
  )
  _, labels = csgraph.connected_components(graph, directed=False)
  first = np.full(labels.max() + 1, n, dtype=int)
  np.minimum.at(first, labels, np.arange(n))
  return first[labels]


def normal_to_g(normals: np.ndarray) -> np.ndarray:
  """Stereographic projection of unit normals; the north pole maps to inf."""
  normals = np.asarray(normals, dtype=float)
  denom = 1.0 - normals[..., 2]
  with np.errstate(divide="ignore", invalid="ignore"):
    g = (normals[..., 0] + 1j * normals[..., 1]) / denom
  return np.where(denom > 1e-15, g, complex(np.inf, 0.0))


def transform_mesh(
    mesh: data.Mesh, motion: RigidMotion, sheet_offset: int = 0
) -> data.Mesh:
  """Image of a mesh under a rigid motion, with consistent orientation."""
  triangles = mesh.triangles
  if motion.orientation_reversing:
    triangles = triangles[:, ::-1]
  return data.Mesh(
      positions=motion.apply(mesh.positions),
      triangles=np.array(triangles),
      z=mesh.z.copy(),
      g=normal_to_g(motion.apply_vectors(mesh.normals)),
      sheet=mesh.sheet + sheet_offset,
      arcs=dict(mesh.arcs),
      corners=dict(mesh.corners),
      seams=dict(mesh.seams),
      metadata=dict(mesh.metadata),
  )


def merge(meshes: Sequence[data.Mesh], tol: float) -> data.Mesh:
  """Concatenates meshes and welds vertices closer than tol.

  Arc chains, seams and corners of the first mesh are carried over
  (re-indexed); those of later meshes are dropped.
  """
  offsets = np.cumsum([0] + [m.num_vertices for m in meshes])
  positions = np.concatenate([m.positions for m in meshes])
  rep = weld_map(positions, tol)
  keep = np.unique(rep)
  new_index = np.full(len(positions), -1, dtype=int)
  new_index[keep] = np.arange(len(keep))
  remap = new_index[rep]
  triangles = np.concatenate(
      [m.triangles + off for m, off in zip(meshes, offsets)]
  )
  triangles = remap[triangles]
  degenerate = (
      (triangles[:, 0] == triangles[:, 1])
      | (triangles[:, 1] == triangles[:, 2])
      | (triangles[:, 0] == triangles[:, 2])
  )
  first = meshes[0]
  return data.Mesh(
      positions=positions[keep],
      triangles=triangles[~degenerate],
      z=np.concatenate([m.z for m in meshes])[keep],
      g=np.concatenate([m.g for m in meshes])[keep],
      sheet=np.concatenate([m.sheet for m in meshes])[keep],
      arcs={k: tuple(int(remap[i]) for i in v) for k, v in first.arcs.items()},
      corners={k: int(remap[v]) for k, v in first.corners.items()},
      seams={k: tuple(int(remap[i]) for i in v) for k, v in first.seams.items()},
      metadata=dict(first.metadata),
  )


def boundary_edges(triangles: np.ndarray) -> np.ndarray:
  """Edges used by exactly one triangle, shape (k, 2), sorted pairs."""
  edges = np.concatenate(
      [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
  )
  edges = np.sort(edges, axis=1)
  unique, counts = np.unique(edges, axis=0, return_counts=True)
  return unique[counts == 1]


def triangle_areas(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
  p = positions[triangles]
  return 0.5 * np.linalg.norm(
      np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1
  )


def face_normals(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
  """Area-weighted (unnormalized) face normals."""
  p = positions[triangles]
  return 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])


def vertex_normals(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
  """Area-weighted average of incident face normals, normalized."""
  fn = face_normals(positions, triangles)
  out = np.zeros_like(positions)
  for k in range(3):
    np.add.at(out, triangles[:, k], fn)
  norm = np.linalg.norm(out, axis=1, keepdims=True)
  return out / np.where(norm > 0, norm, 1.0)

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


"""Immersion of the fundamental domain and assembly of the periodic surface.

C2 and L4 sample the quarter disk {|z| <= 1, 0 <= Arg(z) <= pi/2}; L2 samples
the closed first quadrant on a polar grid whose radius is compactified by
rho = tan(pi r / 2), so that its outer ring is the single point z = inf. The
point A (z = x) is a branch point of the cover, so the grid is cut along the
ray from 0 to A and the nodes on the cut are doubled: the upper copy belongs
to the wedge of larger argument, the lower copy to the other wedge. Each side
then carries a single-valued branch of the Gauss map.

Positions are accumulated along a spanning tree of grid edges; every edge
integral is a Richardson-extrapolated midpoint rule that splits adaptively.
The branch corners get their positions from a Gauss-Legendre rule in u with
z = z_b + (z_0 - z_b) u^2 (or z = z_0 / u^2 toward infinity), which absorbs
the inverse-square-root singularity of the forms.

The surface is then assembled from the domain, its image under the half-turn
rho_h (g -> -1/g), and the group generated by two vertical mirror planes of
that patch: the planes of BL and LS' for C2, of LS' and F'S for L2 and L4.
"""

from __future__ import annotations

import cmath
import collections
from collections.abc import Sequence
from concurrent import futures
import dataclasses
import enum
import math

from absl import logging
import numpy as np

from tpms import data
from tpms import exceptions
from tpms import families
from tpms import geometry

# Geometric refinement levels near the branch points.
GRADING_LEVELS = 3
# Gauss-Legendre nodes of the corner tails.
TAIL_NODES = 40
# Relative tolerance of each edge integral.
EDGE_TOL = 1e-10
_MAX_EDGE_DEPTH = 14
# Corners that are branch points of the cover and excluded from continuation.
BRANCH_CORNERS = {
    data.FamilyTag.C2: ("S", "S'", "L", "A"),
    data.FamilyTag.L4: ("S", "S'", "B", "A"),
    data.FamilyTag.L2: ("S", "S'", "B", "L", "A"),
}
# Corner names on the rho_h image of the anchor sheet.
RHO_H_CORNERS = {
    "S": "S'", "S'": "S", "L": "F'", "F'": "L", "B": "B'", "B'": "B",
    "A": "A",
}
CUT_UPPER = "cut+"
CUT_LOWER = "cut-"


class TreeKind(enum.Enum):
  BFS = "bfs"
  DFS = "dfs"


@dataclasses.dataclass(frozen=True, eq=False)
class DomainGrid:
  """Polar sampling of the fundamental domain, cut from S to A.

  Attributes:
    nodes: z per node (complex inf for the L2 corner L).
    triangles: Node index triples, counterclockwise in z.
    edges: Unique sorted node pairs of the triangulation.
    labels: Per node: "" for interior nodes, an arc label, a corner name, or
      "cut+"/"cut-" for the two copies of a cut node.
    arcs: Ordered node chains of SB, BL and LS' (corners included).
    seams: The two sides of the cut, ordered from the centre to A.
    corners: Node index of S, S', L, A and B.
    tails: For each branch corner, two regular neighbours to integrate from.
    branch_corners: Names of the corners that are branch points.
    resolution: N.
    clearance: Minimum distance of regular nodes from branch points.
    x: The branch point A.
  """

  nodes: np.ndarray
  triangles: np.ndarray
  edges: np.ndarray
  labels: tuple[str, ...]
  arcs: dict[data.ArcLabel, tuple[int, ...]]
  seams: dict[str, tuple[int, ...]]
  corners: dict[str, int]
  tails: dict[str, tuple[int, int]]
  branch_corners: tuple[str, ...]
  resolution: int
  clearance: float
  x: complex

  @property
  def num_nodes(self) -> int:
    return len(self.nodes)

  @property
  def excluded(self) -> frozenset[int]:
    return frozenset(self.corners[name] for name in self.branch_corners)

  def boundary_nodes(self) -> set[int]:
    return {i for chain in self.arcs.values() for i in chain}

  def adjacency(self) -> list[list[int]]:
    """Neighbour lists over regular nodes (branch corners left out)."""
    excluded = self.excluded
    adj = [[] for _ in range(self.num_nodes)]
    for u, v in self.edges:
      if u in excluded or v in excluded:
        continue
      adj[u].append(int(v))
      adj[v].append(int(u))
    return adj


def _graded(center: float, step: float, direction: int) -> list[float]:
  return [center + direction * step * 0.5**k for k in range(1, GRADING_LEVELS + 1)]


def _clean(
    values: Sequence[float],
    lo: float,
    hi: float,
    keep: Sequence[float],
    forbidden: Sequence[tuple[float, float]],
) -> np.ndarray:
  """Sorted unique values in [lo, hi] outside the forbidden neighbourhoods."""
  out = []
  for v in sorted(set(values) | set(keep)):
    if v < lo or v > hi:
      continue
    if v not in keep and any(0 < abs(v - c) < r for c, r in forbidden):
      continue
    if out and v - out[-1] < 1e-12:
      if v in keep:
        out[-1] = v
      continue
    out.append(v)
  return np.array(out)


def _angles(
    n: int, th_x: float, clearance: float, r_x: float, edge: float
) -> np.ndarray:
  """Angular knots, refined at th_x and at the boundary angle `edge`."""
  n_lo = max(2, math.ceil(n * th_x / (math.pi / 2)))
  n_hi = max(2, math.ceil(n * (math.pi / 2 - th_x) / (math.pi / 2)))
  step = min(th_x / n_lo, (math.pi / 2 - th_x) / n_hi)
  if edge == 0.0:
    edge_grading = _graded(0.0, th_x / n_lo, 1)
  else:
    edge_grading = _graded(edge, (math.pi / 2 - th_x) / n_hi, -1)
  return _clean(
      list(np.linspace(0.0, th_x, n_lo + 1))
      + list(np.linspace(th_x, math.pi / 2, n_hi + 1))
      + _graded(th_x, step, 1) + _graded(th_x, step, -1) + edge_grading,
      0.0, math.pi / 2, keep=(0.0, th_x, math.pi / 2),
      forbidden=((th_x, clearance / r_x), (edge, clearance)),
  )


def _triangulate(
    ids: dict[tuple[int, int, int], int],
    nr: int,
    na: int,
    jx: int,
    collapsed_outer: bool,
) -> tuple[np.ndarray, np.ndarray]:
  """Triangles and edges of the polar grid.

  With collapsed_outer the last ring is a single node, so the outermost band
  gets one triangle per sector.
  """
  triangles = []
  for i in range(nr - 1):
    for j in range(na - 1):
      w = 1 if j >= jx else -1
      a, b = ids[(i, j, w)], ids[(i + 1, j, w)]
      c, d = ids[(i + 1, j + 1, w)], ids[(i, j + 1, w)]
      if not (collapsed_outer and i == nr - 2):
        triangles.append((a, b, c))
      if i > 0:
        triangles.append((a, c, d))
  triangles = np.array(triangles, dtype=int)
  edges = np.unique(
      np.sort(
          np.concatenate(
              [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
          ),
          axis=1,
      ),
      axis=0,
  )
  return triangles, edges


class _Nodes:
  """Append-only node list with labels."""

  def __init__(self):
    self.z: list[complex] = []
    self.labels: list[str] = []

  def add(self, z: complex, label: str) -> int:
    self.z.append(complex(z))
    self.labels.append(label)
    return len(self.z) - 1


def _sample_disk(
    n: int, clearance: float, x: complex, family: data.FamilyId
) -> DomainGrid:
  """Quarter disk; S = 0, B = i, L = 1."""
  r_x, th_x = abs(x), cmath.phase(x)
  if not (0 < r_x < 1 and 0 < th_x < math.pi / 2):
    raise exceptions.PreconditionError(f"x={x} is not inside the quarter disk")
  h = 1.0 / n
  radii = _clean(
      list(np.linspace(0.0, 1.0, n + 1))
      + _graded(0.0, h, 1) + _graded(r_x, h, 1) + _graded(r_x, h, -1)
      + _graded(1.0, h, -1),
      0.0, 1.0, keep=(0.0, r_x, 1.0),
      forbidden=((0.0, clearance), (r_x, clearance), (1.0, clearance)),
  )
  # The outer branch corner is L for C2 and B for L4.
  l4 = family.tag is data.FamilyTag.L4
  angles = _angles(n, th_x, clearance, r_x, math.pi / 2 if l4 else 0.0)
  ix = int(np.flatnonzero(radii == r_x)[0])
  jx = int(np.flatnonzero(angles == th_x)[0])
  nr, na = len(radii), len(angles)
  if not (1 < ix < nr - 1 and 0 < jx < na - 1):
    raise exceptions.GridError(
        f"clearance={clearance} leaves no nodes between the branch points"
    )

  nodes = _Nodes()
  ids: dict[tuple[int, int, int], int] = {}
  s_up, s_lo = nodes.add(0.0, "S"), nodes.add(0.0, "S'")
  for j in range(na):
    ids[(0, j, 1)], ids[(0, j, -1)] = s_up, s_lo
  for i in range(1, nr):
    for j in range(na):
      z = cmath.rect(radii[i], angles[j])
      if i == ix and j == jx:
        ids[(i, j, 1)] = ids[(i, j, -1)] = nodes.add(x, "A")
        continue
      if j == jx and i < ix:
        ids[(i, j, 1)] = nodes.add(z, CUT_UPPER)
        ids[(i, j, -1)] = nodes.add(z, CUT_LOWER)
        continue
      if i == nr - 1 and j == 0:
        label = "L"
        z = 1.0
      elif i == nr - 1 and j == na - 1:
        label = "B"
        z = 1j
      elif j == na - 1:
        label = data.ArcLabel.SB.value
        z = 1j * radii[i]
      elif i == nr - 1:
        label = data.ArcLabel.BL.value
      elif j == 0:
        label = data.ArcLabel.LS_PRIME.value
        z = radii[i]
      else:
        label = ""
      ids[(i, j, 1)] = ids[(i, j, -1)] = nodes.add(z, label)

  triangles, edges = _triangulate(ids, nr, na, jx, collapsed_outer=False)
  arcs = {
      data.ArcLabel.SB: (s_up,) + tuple(ids[(i, na - 1, 1)] for i in range(1, nr)),
      data.ArcLabel.BL: tuple(ids[(nr - 1, j, 1)] for j in reversed(range(na))),
      data.ArcLabel.LS_PRIME: tuple(
          ids[(i, 0, -1)] for i in reversed(range(1, nr))
      ) + (s_lo,),
  }
  tails = {
      "S": (ids[(1, na - 1, 1)], ids[(1, jx + 1, 1)]),
      "S'": (ids[(1, 0, -1)], ids[(1, jx - 1, -1)]),
      "A": (ids[(ix + 1, jx, 1)], ids[(ix, jx + 1, 1)]),
  }
  if l4:
    tails["B"] = (ids[(nr - 2, na - 1, 1)], ids[(nr - 1, na - 2, 1)])
  else:
    tails["L"] = (ids[(nr - 2, 0, -1)], ids[(nr - 1, 1, -1)])
  return DomainGrid(
      nodes=np.array(nodes.z, dtype=complex),
      triangles=triangles,
      edges=edges,
      labels=tuple(nodes.labels),
      arcs=arcs,
      seams=_seams(ids, s_up, s_lo, ix, jx),
      corners={
          "S": s_up, "S'": s_lo, "L": ids[(nr - 1, 0, 1)],
          "A": ids[(ix, jx, 1)], "B": ids[(nr - 1, na - 1, 1)],
      },
      tails=tails,
      branch_corners=BRANCH_CORNERS[family.tag],
      resolution=n,
      clearance=clearance,
      x=x,
  )


def _sample_quadrant(n: int, clearance: float, x: complex) -> DomainGrid:
  """First quadrant; S = 0, B = 1, L = inf."""
  th_x = cmath.phase(x)
  if not (abs(x) > 0 and cmath.isfinite(x) and 0 < th_x < math.pi / 2):
    raise exceptions.PreconditionError(
        f"x={x} is not inside the open first quadrant"
    )
  # Knots r in [0, 1]; the radius is tan(pi r / 2), so r = 1/2 is |z| = 1.
  r_x = 2.0 / math.pi * math.atan(abs(x))
  h = 0.5 / n
  knots = _clean(
      list(np.linspace(0.0, 1.0, 2 * n + 1))
      + _graded(0.0, h, 1) + _graded(r_x, h, 1) + _graded(r_x, h, -1)
      + _graded(0.5, h, 1) + _graded(0.5, h, -1) + _graded(1.0, h, -1),
      0.0, 1.0, keep=(0.0, r_x, 0.5, 1.0),
      forbidden=(
          (0.0, clearance), (r_x, clearance), (0.5, clearance),
          (1.0, clearance),
      ),
  )
  radii = np.tan(0.5 * math.pi * knots)
  angles = _angles(n, th_x, clearance, abs(x), 0.0)
  ix = int(np.flatnonzero(knots == r_x)[0])
  ib = int(np.flatnonzero(knots == 0.5)[0])
  jx = int(np.flatnonzero(angles == th_x)[0])
  nr, na = len(knots), len(angles)
  if not (1 < ix < nr - 2 and 0 < jx < na - 1):
    raise exceptions.GridError(
        f"clearance={clearance} leaves no nodes between the branch points"
    )

  nodes = _Nodes()
  ids: dict[tuple[int, int, int], int] = {}
  s_lo, s_up = nodes.add(0.0, "S"), nodes.add(0.0, "S'")
  for j in range(na):
    ids[(0, j, 1)], ids[(0, j, -1)] = s_up, s_lo
  for i in range(1, nr - 1):
    for j in range(na):
      z = cmath.rect(radii[i], angles[j])
      if i == ix and j == jx:
        ids[(i, j, 1)] = ids[(i, j, -1)] = nodes.add(x, "A")
        continue
      if j == jx and i < ix:
        ids[(i, j, 1)] = nodes.add(z, CUT_UPPER)
        ids[(i, j, -1)] = nodes.add(z, CUT_LOWER)
        continue
      if j == 0 and i == ib:
        label = "B"
        z = 1.0
      elif j == 0:
        label = (data.ArcLabel.SB if i < ib else data.ArcLabel.BL).value
        z = radii[i]
      elif j == na - 1:
        label = data.ArcLabel.LS_PRIME.value
        z = 1j * radii[i]
      else:
        label = ""
      ids[(i, j, 1)] = ids[(i, j, -1)] = nodes.add(z, label)
  corner_l = nodes.add(complex(np.inf, 0.0), "L")
  for j in range(na):
    ids[(nr - 1, j, 1)] = ids[(nr - 1, j, -1)] = corner_l

  triangles, edges = _triangulate(ids, nr, na, jx, collapsed_outer=True)
  arcs = {
      data.ArcLabel.SB: (s_lo,) + tuple(
          ids[(i, 0, -1)] for i in range(1, ib + 1)
      ),
      data.ArcLabel.BL: tuple(ids[(i, 0, -1)] for i in range(ib, nr)),
      data.ArcLabel.LS_PRIME: tuple(
          ids[(i, na - 1, 1)] for i in reversed(range(1, nr))
      ) + (s_up,),
  }
  tails = {
      "S": (ids[(1, 0, -1)], ids[(1, jx - 1, -1)]),
      "S'": (ids[(1, na - 1, 1)], ids[(1, jx + 1, 1)]),
      "B": (ids[(ib - 1, 0, -1)], ids[(ib + 1, 0, -1)]),
      "L": (ids[(nr - 2, 0, -1)], ids[(nr - 2, na - 1, 1)]),
      "A": (ids[(ix + 1, jx, 1)], ids[(ix, jx + 1, 1)]),
  }
  return DomainGrid(
      nodes=np.array(nodes.z, dtype=complex),
      triangles=triangles,
      edges=edges,
      labels=tuple(nodes.labels),
      arcs=arcs,
      seams=_seams(ids, s_up, s_lo, ix, jx),
      corners={
          "S": s_lo, "S'": s_up, "L": corner_l, "A": ids[(ix, jx, 1)],
          "B": ids[(ib, 0, -1)],
      },
      tails=tails,
      branch_corners=BRANCH_CORNERS[data.FamilyTag.L2],
      resolution=n,
      clearance=clearance,
      x=x,
  )


def _seams(
    ids: dict[tuple[int, int, int], int], s_up: int, s_lo: int, ix: int,
    jx: int,
) -> dict[str, tuple[int, ...]]:
  return {
      CUT_UPPER: (s_up,) + tuple(ids[(i, jx, 1)] for i in range(1, ix + 1)),
      CUT_LOWER: (s_lo,) + tuple(ids[(i, jx, -1)] for i in range(1, ix + 1)),
  }


def sample_domain(
    resolution: int,
    clearance: float = families.DEFAULT_CLEARANCE,
    x: complex = 0.5 + 0.5j,
    family: data.FamilyId = data.C2,
) -> DomainGrid:
  """Samples the fundamental domain on a graded polar grid cut from 0 to x.

  Args:
    resolution: N >= 8; each boundary arc gets at least N + 1 nodes.
    clearance: Regular nodes keep at least this distance from the branch
      points (for L2, in the compactified radius).
    x: The branch point A.
    family: Selects the quarter disk (C2, L4) or the first quadrant (L2).

  Returns:
    The grid.

  Raises:
    PreconditionError: For N < 8, clearance <= 0 or x outside the domain.
    GridError: If the clearance leaves no room between branch points.
  """
  if resolution < 8:
    raise exceptions.PreconditionError(f"resolution must be >= 8, got {resolution}")
  if not clearance > 0:
    raise exceptions.PreconditionError(f"clearance must be > 0, got {clearance}")
  x = complex(x)
  if family.tag is data.FamilyTag.L2:
    grid = _sample_quadrant(resolution, clearance, x)
  else:
    grid = _sample_disk(resolution, clearance, x, family)
  logging.debug(
      "sample_domain(%s, N=%d): %d nodes, %d triangles", family, resolution,
      grid.num_nodes, len(grid.triangles),
  )
  return grid


# -- Immersion ------------------------------------------------------------------


def _spanning_order(
    adj: list[list[int]], root: int, kind: TreeKind
) -> list[tuple[int, int]]:
  """(parent, child) pairs of a spanning tree, parents first."""
  seen = {root}
  order = []
  pending = collections.deque([root])
  while pending:
    u = pending.popleft() if kind is TreeKind.BFS else pending.pop()
    for v in adj[u]:
      if v not in seen:
        seen.add(v)
        order.append((u, v))
        pending.append(v)
  return order


def _edge_integral(
    dp: data.DerivedParams,
    start: families.CoverPoint,
    z1: complex,
    tol: float = EDGE_TOL,
    depth: int = 0,
) -> tuple[np.ndarray, families.CoverPoint]:
  """Re of the integral of the forms along the segment start.z -> z1.

  Returns:
    The real 3-vector and the continued cover point at z1.
  """
  z0 = start.z
  dz = z1 - z0
  pts = families.continue_roots(
      dp, start, [z0 + dz * t for t in (0.25, 0.5, 0.75, 1.0)]
  )
  f = [families.forms_at(dp, p) for p in pts[:3]]
  coarse = f[1] * dz
  fine = 0.5 * (f[0] + f[2]) * dz
  estimate = ((4.0 * fine - coarse) / 3.0).real
  error = float(np.abs((fine - coarse).real).max()) / 3.0
  if not np.all(np.isfinite(estimate)):
    raise exceptions.SingularityError(
        f"Non-finite form integral on edge {z0} -> {z1}", location=(z0, z1)
    )
  if error > tol * max(1.0, float(np.abs(estimate).max())):
    if depth < _MAX_EDGE_DEPTH:
      first, mid = _edge_integral(dp, start, pts[1].z, tol, depth + 1)
      second, end = _edge_integral(dp, mid, z1, tol, depth + 1)
      return first + second, end
    logging.warning(
        "Edge %s -> %s kept error %.3g after %d splits", z0, z1, error, depth
    )
  return estimate, pts[3]


def _tail(
    dp: data.DerivedParams,
    start: families.CoverPoint,
    start_position: np.ndarray,
    corner: complex,
) -> tuple[np.ndarray, families.CoverPoint]:
  """Position at a branch corner reached from a regular node."""
  u, w = np.polynomial.legendre.leggauss(TAIL_NODES)
  u, w = 0.5 * (u + 1.0), 0.5 * w
  order = np.argsort(-u)
  u, w = u[order], w[order]
  if cmath.isinf(corner):
    # z = z_0 / u^2 runs from the start (u = 1) out to infinity (u = 0).
    path = start.z / (u * u)
    dzdu = -2.0 * start.z / u**3
  else:
    dz = start.z - corner
    path = corner + dz * u * u
    dzdu = 2.0 * dz * u
  pts = families.continue_roots(dp, start, path)
  vals = np.array([families.forms_at(dp, p) for p in pts])
  integral = (vals * (w * dzdu)[:, None]).sum(axis=0)
  return start_position - integral.real, pts[-1]


def _snap_corner_g(name: str, g: complex) -> complex:
  if name == "A":
    return min((1.0 + 0j, -1.0 + 0j, 1j, -1j), key=lambda v: abs(g - v))
  return 0j if abs(g) < 1.0 else complex(np.inf, 0.0)


def _anchor_node(grid: DomainGrid, dp: data.DerivedParams) -> int:
  chain = grid.arcs[data.ArcLabel.SB][1:-1]
  target = families.anchor_target(dp)
  return min(chain, key=lambda i: abs(grid.nodes[i] - target))


def _path_to_cut(grid: DomainGrid, anchor: int) -> tuple[list[int], int, int]:
  """Node path from the anchor along SB and a circle to a cut node.

  Returns:
    (path, near, far): path ends at the copy of a cut node on the side of
    SB; far is its twin.
  """
  sb = grid.arcs[data.ArcLabel.SB]
  th_x = cmath.phase(grid.x)
  if cmath.phase(grid.nodes[sb[1]]) > th_x:
    near_side, far_side = CUT_UPPER, CUT_LOWER
  else:
    near_side, far_side = CUT_LOWER, CUT_UPPER
  near_chain = grid.seams[near_side]
  # Ring k of the cut (k < index of A) that SB also crosses.
  k = max(1, min(len(near_chain) - 1, len(sb) - 1) // 2)
  near, far = near_chain[k], grid.seams[far_side][k]
  radius = abs(grid.nodes[near])
  pivot = sb[k]
  adj = grid.adjacency()
  # Walk SB from the anchor to the pivot ring.
  path = [anchor]
  a_pos, p_pos = sb.index(anchor), sb.index(pivot)
  step = 1 if p_pos > a_pos else -1
  path += list(sb[a_pos + step : p_pos + step : step]) if a_pos != p_pos else []
  # Then along that ring to the cut, staying on the side of SB.
  ring_tol = 1e-9 * max(1.0, radius)
  current = pivot
  while current != near:
    ring = [
        v for v in adj[current]
        if grid.labels[v] != far_side
        and abs(abs(grid.nodes[v]) - radius) < ring_tol
        and v not in path
    ]
    if not ring:
      raise exceptions.GridError("Could not walk from SB to the cut")
    nxt = min(ring, key=lambda v: abs(cmath.phase(grid.nodes[v]) - th_x))
    path.append(nxt)
    current = nxt
  return path, near, far


def integrate_immersion(
    grid: DomainGrid,
    dp: data.DerivedParams,
    family: data.FamilyId,
    tree: TreeKind | str = TreeKind.BFS,
    sheet: int = 0,
    workers: int = 1,
) -> data.Mesh:
  """Integrates the Weierstrass forms over the grid.

  Sheet 0 is anchored at the SB node nearest the point where g = 1, placed
  at the origin; SB then lies on the line x1 = x3 = 0. Sheet 1 (the rho_h
  image) is integrated independently: it is seeded at the copy of a cut node
  away from SB, which is the same surface point as the copy next to SB on
  sheet 0.

  Args:
    grid: The sampled domain; its x must equal dp.x.
    dp: Admissible parameters.
    family: The family of dp.
    tree: Spanning tree used for continuation and accumulation.
    sheet: 0 or 1.
    workers: Threads for the per-edge quadrature.

  Returns:
    The fundamental-domain mesh; metadata carries "path_residual" (largest
    mismatch over edges outside the tree) and "corner_gap" (disagreement of
    the two tail integrations per corner).

  Raises:
    ContinuationError: If two tree paths reach a node on different sheets.
    SingularityError: If an edge integral is not finite.
  """
  if sheet not in (0, 1):
    raise exceptions.PreconditionError(f"sheet must be 0 or 1, got {sheet}")
  if family.tag is not dp.family.tag:
    raise exceptions.PreconditionError(
        f"parameters are for {dp.family}, not {family}"
    )
  if abs(grid.x - dp.x) > 1e-12:
    raise exceptions.PreconditionError("grid was sampled for a different x")
  if grid.branch_corners != BRANCH_CORNERS[family.tag]:
    raise exceptions.PreconditionError(f"grid was not sampled for {family}")
  tree = TreeKind(tree)
  nodes = grid.nodes
  anchor = _anchor_node(grid, dp)
  points: dict[int, families.CoverPoint] = {}
  positions = np.full((grid.num_nodes, 3), np.nan)

  root = families.anchor_point(dp, nodes[anchor])
  if sheet == 0:
    seed, seed_position = anchor, np.zeros(3)
  else:
    path, _, seed = _path_to_cut(grid, anchor)
    position = np.zeros(3)
    current = root
    for v in path[1:]:
      delta, current = _edge_integral(dp, current, nodes[v])
      position = position + delta
    root = families.CoverPoint(nodes[seed], current.s, current.sigma)
    seed_position = position
  points[seed] = root
  positions[seed] = seed_position

  adj = grid.adjacency()
  order = _spanning_order(adj, seed, tree)
  regular = grid.num_nodes - len(grid.excluded)
  if len(order) + 1 != regular:
    raise exceptions.GridError(
        f"Spanning tree reaches {len(order) + 1} of {regular} nodes"
    )
  for parent, child in order:
    points[child] = families.continue_roots(dp, points[parent], [nodes[child]])[0]

  def integrate_edge(edge: tuple[int, int]) -> tuple[np.ndarray, families.CoverPoint]:
    u, v = edge
    return _edge_integral(dp, points[u], nodes[v])

  tree_edges = set(order)
  other_edges = [
      (int(u), int(v)) for u, v in grid.edges
      if u in points and v in points
      and (u, v) not in tree_edges and (v, u) not in tree_edges
  ]
  all_edges = list(order) + other_edges
  if workers > 1:
    with futures.ThreadPoolExecutor(max_workers=workers) as pool:
      results = list(pool.map(integrate_edge, all_edges))
  else:
    results = [integrate_edge(e) for e in all_edges]

  for (parent, child), (delta, _) in zip(order, results):
    positions[child] = positions[parent] + delta

  path_residual = 0.0
  for (u, v), (delta, end) in zip(other_edges, results[len(order):]):
    target = points[v]
    if (end.s * target.s.conjugate()).real < 0 or (
        end.sigma * target.sigma.conjugate()
    ).real < 0:
      raise exceptions.ContinuationError(
          f"Edge {nodes[u]} -> {nodes[v]} arrives on a different sheet",
          z=nodes[v],
      )
    path_residual = max(
        path_residual,
        float(np.linalg.norm(positions[v] - positions[u] - delta)),
    )

  g = np.array(
      [families.g_from_roots(dp, points[i]) if i in points else 0j
       for i in range(grid.num_nodes)],
      dtype=complex,
  )
  corner_gap = 0.0
  for name in grid.branch_corners:
    idx = grid.corners[name]
    results_at = []
    for source in grid.tails[name]:
      results_at.append(
          _tail(dp, points[source], positions[source], nodes[idx])
      )
    (p0, end), (p1, _) = results_at
    positions[idx] = p0
    g[idx] = _snap_corner_g(name, families.g_from_roots(dp, end))
    corner_gap = max(corner_gap, float(np.linalg.norm(p0 - p1)))

  arcs = dict(grid.arcs)
  corners = dict(grid.corners)
  if sheet == 1:
    arcs = {families.RHO_H_IMAGE[k]: v for k, v in arcs.items()}
    corners = {RHO_H_CORNERS[k]: v for k, v in corners.items()}
  mesh = data.Mesh(
      positions=positions,
      triangles=grid.triangles.copy(),
      z=nodes.copy(),
      g=g,
      sheet=np.full(grid.num_nodes, sheet, dtype=int),
      arcs=arcs,
      corners=corners,
      seams=dict(grid.seams),
      metadata={
          "path_residual": path_residual,
          "corner_gap": corner_gap,
          "resolution": float(grid.resolution),
      },
  )
  logging.info(
      "Integrated %s sheet %d at N=%d: diameter %.6g, path residual %.3g,"
      " corner gap %.3g", family, sheet, grid.resolution, mesh.diameter(),
      path_residual, corner_gap,
  )
  return mesh


def rho_h_motion(mesh: data.Mesh) -> geometry.RigidMotion:
  """Half-turn about the line through A parallel to the x2-axis."""
  return geometry.half_turn((0.0, 1.0, 0.0), mesh.corner("A"))


def apply_rho_h(mesh: data.Mesh) -> data.Mesh:
  """Image of a domain mesh under rho_h: (x1, x2, x3) -> (-x1, x2, -x3)
  about the axis through A, with g -> -1/g and arcs relabelled."""
  motion = rho_h_motion(mesh)
  g = mesh.g
  finite = np.isfinite(g)
  nonzero = g != 0
  with np.errstate(divide="ignore", invalid="ignore"):
    image_g = np.where(finite & nonzero, -1.0 / np.where(nonzero, g, 1.0), 0j)
  image_g = np.where(finite & ~nonzero, complex(np.inf, 0.0), image_g)
  arcs = {}
  for label, chain in mesh.arcs.items():
    image = families.RHO_H_IMAGE.get(label) or families.RHO_H_SOURCE[label]
    arcs[image] = chain
  return data.Mesh(
      positions=motion.apply(mesh.positions),
      triangles=mesh.triangles.copy(),
      z=mesh.z.copy(),
      g=image_g,
      sheet=1 - mesh.sheet,
      arcs=arcs,
      corners={RHO_H_CORNERS[k]: v for k, v in mesh.corners.items()},
      seams=dict(mesh.seams),
      metadata=dict(mesh.metadata),
  )


# -- Assembly -------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class MirrorPair:
  """The two vertical mirror planes whose group assembles a piece.

  Attributes:
    arcs: Planar arc lying in each plane.
    corners: A corner on each plane.
    seams: Arcs each reflection must fix pointwise.
    angle: Angle between the planes.
    order: Order of the group the reflections generate.
  """

  arcs: tuple[data.ArcLabel, data.ArcLabel]
  corners: tuple[str, str]
  seams: tuple[tuple[data.ArcLabel, ...], tuple[data.ArcLabel, ...]]
  angle: float
  order: int


_LK_MIRRORS = MirrorPair(
    arcs=(data.ArcLabel.LS_PRIME, data.ArcLabel.F_PRIME_S),
    corners=("L", "F'"),
    seams=((data.ArcLabel.LS_PRIME,), (data.ArcLabel.F_PRIME_S,)),
    angle=math.pi / 2,
    order=4,
)
MIRRORS = {
    data.FamilyTag.C2: MirrorPair(
        arcs=(data.ArcLabel.BL, data.ArcLabel.LS_PRIME),
        corners=("L", "L"),
        seams=(
            (data.ArcLabel.BL, data.ArcLabel.B_PRIME_F_PRIME),
            (data.ArcLabel.LS_PRIME,),
        ),
        angle=math.pi / 4,
        order=8,
    ),
    data.FamilyTag.L2: _LK_MIRRORS,
    data.FamilyTag.L4: _LK_MIRRORS,
}


def _glue(
    base: data.Mesh, other: data.Mesh, pairs: Sequence[tuple[int, int]]
) -> data.Mesh:
  """Appends other to base, identifying other[j] with base[i] for (i, j)."""
  n = base.num_vertices
  mapping = np.full(other.num_vertices, -1, dtype=int)
  for i, j in pairs:
    mapping[j] = i
  fresh = np.flatnonzero(mapping < 0)
  mapping[fresh] = n + np.arange(len(fresh))
  arcs = dict(base.arcs)
  arcs.update({k: tuple(int(mapping[i]) for i in v) for k, v in other.arcs.items()})
  corners = dict(other.corners)
  corners = {k: int(mapping[v]) for k, v in corners.items()}
  corners.update(base.corners)
  return data.Mesh(
      positions=np.concatenate([base.positions, other.positions[fresh]]),
      triangles=np.concatenate([base.triangles, mapping[other.triangles]]),
      z=np.concatenate([base.z, other.z[fresh]]),
      g=np.concatenate([base.g, other.g[fresh]]),
      sheet=np.concatenate([base.sheet, other.sheet[fresh]]),
      arcs=arcs,
      corners=corners,
      seams={},
      metadata=dict(base.metadata),
  )


def double_domain(mesh: data.Mesh, tol: float = 1e-6) -> data.Mesh:
  """Glues a sheet-0 domain mesh to its rho_h image along the cut.

  The lower side of the cut on one sheet is the upper side on the other.

  Raises:
    PeriodLeakError: If the two sides are further apart than
      tol * diameter.
  """
  image = apply_rho_h(mesh)
  pairs = list(zip(mesh.seams[CUT_LOWER], image.seams[CUT_UPPER])) + list(
      zip(mesh.seams[CUT_UPPER], image.seams[CUT_LOWER])
  )
  base_idx = np.array([i for i, _ in pairs])
  image_idx = np.array([j for _, j in pairs])
  gaps = mesh.positions[base_idx] - image.positions[image_idx]
  worst = int(np.argmax(np.linalg.norm(gaps, axis=1)))
  gap = float(np.linalg.norm(gaps[worst]))
  if gap > tol * mesh.diameter():
    raise exceptions.PeriodLeakError(
        f"Cut sides of the two sheets are {gap:.3g} apart", gap=gaps[worst]
    )
  doubled = _glue(mesh, image, pairs)
  doubled.metadata["seam_gap"] = gap
  return doubled


def _mirror_gap(motion: geometry.RigidMotion, points: np.ndarray) -> np.ndarray:
  moved = motion.apply(points)
  gaps = moved - points
  return gaps[int(np.argmax(np.linalg.norm(gaps, axis=1)))]


def _horizontal_normal(
    mesh: data.Mesh, label: data.ArcLabel
) -> np.ndarray:
  fit = geometry.fit_plane(mesh.positions[list(mesh.arcs[label])])
  normal = np.array([fit.normal[0], fit.normal[1]])
  return normal / np.linalg.norm(normal)


def symmetry_generators(
    doubled: data.Mesh, family: data.FamilyId = data.C2
) -> tuple[geometry.RigidMotion, geometry.RigidMotion, float]:
  """Reflections in the two mirror planes of the doubled domain.

  The second normal is snapped to exactly the family's angle from the first
  so the generated group closes.

  Returns:
    (first reflection, second reflection, deviation of the fitted second
    normal from the snapped one in radians).
  """
  mirrors = MIRRORS[family.tag]
  n1 = _horizontal_normal(doubled, mirrors.arcs[0])
  n2_fit = _horizontal_normal(doubled, mirrors.arcs[1])
  candidates = []
  for angle in (mirrors.angle, -mirrors.angle):
    for turn in (angle, angle + math.pi):
      c, s = math.cos(turn), math.sin(turn)
      candidates.append(np.array([c * n1[0] - s * n1[1], s * n1[0] + c * n1[1]]))
  n2 = max(candidates, key=lambda v: float(v @ n2_fit))
  deviation = math.acos(min(1.0, float(n2 @ n2_fit)))
  return (
      geometry.reflection(n1, doubled.corner(mirrors.corners[0])),
      geometry.reflection(n2, doubled.corner(mirrors.corners[1])),
      deviation,
  )


def assemble_fundamental_piece(
    mesh: data.Mesh, family: data.FamilyId, tol: float = 1e-6
) -> data.Mesh:
  """Assembles the fundamental piece from a sheet-0 domain mesh.

  The domain and its rho_h image form a patch bounded by SB, BL, LS', S'B',
  B'F' and F'S. Its orbit under the group generated by the family's two
  mirror reflections is the piece. For C2 the mirrors are the planes of BL
  (which also carries B'F') and LS', the group has order 8, and the piece is
  bounded by the four F'S curves and the SB and S'B' segments. For L2 and L4
  the mirrors are the perpendicular planes of LS' and F'S, the group has
  order 4, and the piece is bounded by images of the straight arcs SB, BL,
  S'B' and B'F', about which it is continued by half-turns.

  Args:
    mesh: Output of integrate_immersion for sheet 0.
    family: The family of the mesh.
    tol: Gluing tolerance relative to the domain diameter.

  Returns:
    The welded piece; arcs and corners refer to the identity copy.

  Raises:
    PeriodLeakError: If a seam does not close within tolerance.
  """
  mirrors = MIRRORS[family.tag]
  doubled = double_domain(mesh, tol)
  scale = tol * doubled.diameter()
  first, second, deviation = symmetry_generators(doubled, family)
  if deviation > math.sqrt(tol):
    expected = math.degrees(mirrors.angle)
    raise exceptions.PeriodLeakError(
        f"Planes of {mirrors.arcs[0].value} and {mirrors.arcs[1].value} meet"
        f" {math.degrees(deviation):.6f} degrees away from {expected:g}",
        gap=np.zeros(3),
    )
  positions = doubled.positions
  for motion, labels in zip((first, second), mirrors.seams):
    chain = [i for label in labels for i in doubled.arcs[label]]
    gap = _mirror_gap(motion, positions[chain])
    if np.linalg.norm(gap) > scale:
      raise exceptions.PeriodLeakError(
          f"Mirror seam {'/'.join(l.value for l in labels)} is open by"
          f" {np.linalg.norm(gap):.3g}", gap=gap,
      )
  group = geometry.close_group([first, second])
  if len(group) != mirrors.order:
    raise exceptions.GeometryError(
        f"Reflection group has order {len(group)}, expected {mirrors.order}"
    )
  copies = [geometry.transform_mesh(doubled, motion) for motion in group]
  piece = geometry.merge(copies, scale)
  piece.metadata["group_order"] = float(len(group))
  piece.metadata["plane_deviation"] = deviation
  logging.info(
      "Assembled %s piece: %d vertices, %d triangles", family,
      piece.num_vertices, len(piece.triangles),
  )
  return piece


@dataclasses.dataclass(frozen=True)
class Lattice:
  """Translation lattice of the tiled surface.

  Attributes:
    vectors: Two horizontal vectors and the vertical period vector.
    half_turn: Half-turn about SB, mapping the piece to its vertical
      neighbour.
    leak: Horizontal part of the vertical period vector (zero when the
      period problem is solved).
  """

  vectors: tuple[np.ndarray, np.ndarray, np.ndarray]
  half_turn: geometry.RigidMotion
  leak: np.ndarray


def _vertical_period(
    piece: data.Mesh,
) -> tuple[np.ndarray, geometry.RigidMotion]:
  """Twice the offset from SB to S'B', and the half-turn about SB."""
  sb = geometry.fit_line(piece.positions[list(piece.arcs[data.ArcLabel.SB])])
  direction = np.array([sb.direction[0], sb.direction[1], 0.0])
  direction /= np.linalg.norm(direction)
  offset = 2.0 * (piece.corner("S'") - piece.corner("S"))
  vertical = offset - (offset @ direction) * direction
  return vertical, geometry.half_turn(direction, piece.corner("S"))


def _collinear(
    first: geometry.LineFit, second: geometry.LineFit, tol: float
) -> bool:
  if np.linalg.norm(np.cross(first.direction, second.direction)) > 1e-6:
    return False
  delta = second.point - first.point
  return bool(
      np.linalg.norm(delta - (delta @ first.direction) * first.direction) < tol
  )


def lateral_lines(
    piece: data.Mesh, family: data.FamilyId, tol: float = 1e-4
) -> list[geometry.LineFit]:
  """Distinct lines carrying the images of BL and B'F' in an L_k piece.

  Collinear images (within tol * diameter) count once.
  """
  first, second, _ = symmetry_generators(piece, family)
  group = geometry.close_group([first, second])
  scale = tol * piece.diameter()
  lines: list[geometry.LineFit] = []
  for label in (data.ArcLabel.BL, data.ArcLabel.B_PRIME_F_PRIME):
    fit = geometry.fit_line(piece.positions[list(piece.arcs[label])])
    for motion in group:
      image = geometry.LineFit(
          motion.apply(fit.point[None, :])[0],
          motion.apply_vectors(fit.direction[None, :])[0],
          fit.rms,
      )
      if not any(_collinear(line, image, scale) for line in lines):
        lines.append(image)
  return lines


def _horizontal_periods(
    piece: data.Mesh, family: data.FamilyId, tol: float = 1e-4
) -> tuple[np.ndarray, np.ndarray]:
  """Two independent translations from half-turns about parallel lines.

  The product of the half-turns about two parallel lines is the translation
  by twice their offset; lines at the same height give horizontal ones.
  """
  lines = lateral_lines(piece, family, tol)
  scale = tol * piece.diameter()
  shifts = []
  for i, first in enumerate(lines):
    for second in lines[i + 1:]:
      if np.linalg.norm(np.cross(first.direction, second.direction)) > 1e-6:
        continue
      delta = second.point - first.point
      offset = delta - (delta @ first.direction) * first.direction
      if abs(offset[2]) < scale and np.linalg.norm(offset) > scale:
        shifts.append(2.0 * offset)
  shifts.sort(key=lambda v: float(np.linalg.norm(v)))
  for v1 in shifts:
    for v2 in shifts:
      cross = abs(v1[0] * v2[1] - v1[1] * v2[0])
      if cross > 1e-3 * np.linalg.norm(v1) * np.linalg.norm(v2):
        return v1, v2
  raise exceptions.GeometryError(
      f"No two independent horizontal periods among {len(lines)} lines"
  )


def lattice(piece: data.Mesh, family: data.FamilyId = data.C2) -> Lattice:
  """Lattice vectors of an assembled piece."""
  vertical, turn = _vertical_period(piece)
  leak = np.array([vertical[0], vertical[1], 0.0])
  if family.tag is not data.FamilyTag.C2:
    v1, v2 = _horizontal_periods(piece, family)
    return Lattice(vectors=(v1, v2, vertical), half_turn=turn, leak=leak)
  positions = piece.positions
  corner_l = piece.corner("L")
  fs = geometry.fit_plane(
      positions[list(piece.arcs[data.ArcLabel.F_PRIME_S])]
  )
  n_a = np.array([fs.normal[0], fs.normal[1], 0.0])
  n_a /= np.linalg.norm(n_a)
  d = float(fs.signed_distance(corner_l[None, :])[0] / (n_a @ fs.normal))
  # Orient n_a from the axis through L towards the F'S plane.
  if d > 0:
    n_a = -n_a
  d = abs(d)
  n_b = np.array([-n_a[1], n_a[0], 0.0])
  return Lattice(
      vectors=(2.0 * d * n_a, 2.0 * d * n_b, vertical),
      half_turn=turn,
      leak=leak,
  )


def tile(
    piece: data.Mesh,
    family: data.FamilyId,
    counts: Sequence[int],
    tol: float = 1e-6,
    strict: bool = False,
) -> tuple[data.Mesh, list[np.ndarray]]:
  """Tiles a block of counts[0] x counts[1] x counts[2] pieces.

  Horizontal neighbours are translates by the lattice vectors. Vertically
  the piece alternates with its half-turn about SB, the pair repeating with
  the vertical period.

  Args:
    piece: Output of assemble_fundamental_piece.
    family: The family of the piece.
    counts: Positive copy counts along the three lattice directions.
    tol: Welding tolerance relative to the piece diameter.
    strict: Raise instead of warning when the vertical period has a
      horizontal component.

  Returns:
    (block, [a, b, c]) with a, b horizontal and c the vertical period.

  Raises:
    PeriodLeakError: With strict=True, if the period is open.
  """
  counts = tuple(int(c) for c in counts)
  if len(counts) != 3 or min(counts) < 1:
    raise exceptions.PreconditionError(f"counts must be 3 positive ints: {counts}")
  lat = lattice(piece, family)
  scale = tol * piece.diameter()
  leak = float(np.linalg.norm(lat.leak))
  if leak > scale:
    if strict:
      raise exceptions.PeriodLeakError(
          f"Vertical period has horizontal part {leak:.3g}", gap=lat.leak
      )
    logging.warning(
        "Open period: vertical period has horizontal part %.3g", leak
    )
  vectors = list(lat.vectors)
  if counts == (1, 1, 1):
    return piece, vectors
  turned = geometry.transform_mesh(piece, lat.half_turn)
  copies = []
  a, b, c = vectors
  for i in range(counts[0]):
    for j in range(counts[1]):
      for k in range(counts[2]):
        source = piece if k % 2 == 0 else turned
        shift = i * a + j * b + ((k + 1) // 2) * c
        copies.append(geometry.transform_mesh(source, geometry.shift_by(shift)))
  block = geometry.merge(copies, scale)
  logging.info(
      "Tiled %s block: %d vertices", "x".join(map(str, counts)),
      block.num_vertices,
  )
  return block, vectors


def build_piece(
    sp: data.ShapeParams,
    resolution: int,
    clearance: float = families.DEFAULT_CLEARANCE,
    workers: int = 1,
) -> tuple[data.Mesh, data.Mesh]:
  """Domain mesh and assembled piece for shape parameters."""
  dp = families.derive_params(sp)
  grid = sample_domain(resolution, clearance, dp.x, sp.family)
  domain = integrate_immersion(grid, dp, sp.family, workers=workers)
  return domain, assemble_fundamental_piece(domain, sp.family)

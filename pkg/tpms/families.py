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

"""Weierstrass data of the C2, L2 and L4 families.

Each family is a four-sheeted cover z of the sphere on which the Gauss map g
satisfies an algebraic equation for p = (g - 1/g)^2 and q = (g + 1/g)^2.
Both squares have one double-zero factor, so we write

  p = alpha(z)^2 * r(z),   q = beta(z)^2 * rt(z)

and carry a cover point as a pair of square roots (s, sigma) with
s^2 = r and sigma^2 = rt. Then g - 1/g = alpha * s, g + 1/g = beta * sigma,
and the four sheets over z are the sign choices of (s, sigma). The half-turn
g -> -1/g flips the sign of sigma.

Continuation tracks s and sigma separately by nearest-root selection. Their
only branch points are the genuine branch points of the cover, so the double
zeros of p and q (where two values of g touch) cause no root collision.
"""

from __future__ import annotations

import cmath
from collections.abc import Iterable, Sequence
import dataclasses
import enum
import functools
import math

from absl import logging
import numpy as np

from tpms import data
from tpms import exceptions

# Distance below which z is treated as sitting on a pole or branch point.
POLE_EPS = 1e-12
# Default clearance (in z) paths keep from branch points.
DEFAULT_CLEARANCE = 1e-3
# Continuation steps must turn each square root by less than pi/4.
_MIN_ALIGNMENT = math.cos(math.pi / 4)
_MAX_SUBSTEPS = 100_000
_MIN_STEP = 1e-14


@dataclasses.dataclass(frozen=True)
class GaussSquares:
  """The squares p = (g - 1/g)^2 and q = (g + 1/g)^2 at a point."""

  p: complex
  q: complex


@dataclasses.dataclass(frozen=True)
class CoverPoint:
  """A point of the cover: z together with the square roots (s, sigma)."""

  z: complex
  s: complex
  sigma: complex

  def rho_h(self) -> CoverPoint:
    """Image under g -> -1/g."""
    return CoverPoint(self.z, self.s, -self.sigma)


# -- Parameters ---------------------------------------------------------------


def _in_open_first_quadrant(x: complex) -> bool:
  return x.real > 0 and x.imag > 0


def modulus_bound(theta: float) -> float:
  """Upper bound on |x| for C2 at argument theta, equivalent to the A > 2 restriction.

  Args:
    theta: Arg(x), in (0, pi/2).

  Returns:
    The smaller root of t^2 - K t + 1 with K = sin(theta) +
    sqrt(1 + 3 cos^2(theta)).
  """
  sin, cos = math.sin(theta), math.cos(theta)
  root = math.sqrt(1.0 + 3.0 * cos * cos)
  inner = 2.0 * sin * (root - sin)
  return 0.5 * (sin + root - math.sqrt(max(inner, 0.0)))


def satisfies_c2_restriction(X: complex) -> bool:
  """Re^2(X) > -2 Im(X) - Im^2(X), the C2 restriction that makes A > 2."""
  return X.real**2 > -2.0 * X.imag - X.imag**2


def _root_in_unit_interval(A: float, plus: bool) -> float:
  # a + 1/a = A (plus) or 1/a - a = A (minus), root in (0, 1).
  if plus:
    return 2.0 / (A + math.sqrt(A * A - 4.0))
  return 2.0 / (A + math.sqrt(A * A + 4.0))


def c_from_modulus(A: float, X: complex) -> float:
  """c = A / (A^2 + 2 A Im(X) + |X|^2)."""
  return A / (A * A + 2.0 * A * X.imag + abs(X) ** 2)


def c_from_imaginary_part(A: float, X: complex) -> float:
  """c = 1 / (A + Im(X))."""
  return 1.0 / (A + X.imag)


def derive_params(sp: data.ShapeParams) -> data.DerivedParams:
  """Derives X, A, a and c from the free parameter x.

  Args:
    sp: The shape parameters.

  Returns:
    The derived parameters; all constraint equations of the family hold.

  Raises:
    AdmissibilityError: Naming the first violated constraint.
  """
  x = complex(sp.x)
  tag = sp.family.tag
  if not _in_open_first_quadrant(x):
    raise exceptions.AdmissibilityError(
        f"x={x} must lie in the open first quadrant", constraint="Arg(x)"
    )
  if tag is data.FamilyTag.L2:
    A = (abs(x) ** 2 + 1.0) / x.real
    if not A > 2.0:
      raise exceptions.AdmissibilityError(
          f"A={A} must exceed 2", constraint="Re(x)>0"
      )
    a = _root_in_unit_interval(A, plus=True)
    scale = (1.0 / a - a) / abs(x - a) ** 2
    return data.DerivedParams(sp.family, x, 0j, A, a, scale)

  if not abs(x) < 1.0:
    raise exceptions.AdmissibilityError(
        f"|x|={abs(x)} must be below 1", constraint="|x|<1"
    )
  if tag is data.FamilyTag.C2:
    X = 1.0 / x - x
  else:
    X = 1.0 / x + x
  if not X.imag < 0:
    raise exceptions.AdmissibilityError(
        f"Im(X)={X.imag} must be negative", constraint="Im(X)<0"
    )
  A = -abs(X) ** 2 / X.imag
  if tag is data.FamilyTag.C2:
    if not (A > 2.0 and satisfies_c2_restriction(X)):
      raise exceptions.AdmissibilityError(
          f"X={X} gives A={A}; need A > 2", constraint="A>2"
      )
    a = _root_in_unit_interval(A, plus=True)
  else:
    a = _root_in_unit_interval(A, plus=False)
  c = c_from_imaginary_part(A, X)
  c3 = c_from_modulus(A, X)
  if not c > 0 or abs(c - c3) > 1e-9 * abs(c):
    raise exceptions.AdmissibilityError(
        f"c={c} inconsistent with {c3}", constraint="c>0"
    )
  return data.DerivedParams(sp.family, x, X, A, a, c)


def admissible(sp: data.ShapeParams) -> bool:
  """True iff derive_params(sp) succeeds."""
  try:
    derive_params(sp)
  except exceptions.AdmissibilityError:
    return False
  return True


def shape_from_X(family: data.FamilyId, X: complex) -> data.ShapeParams:
  """Returns the C2 or L4 shape parameters whose x maps to X.

  Raises:
    PreconditionError: For L2, which is parameterized by x directly.
    AdmissibilityError: If the root with |x| < 1 is not in the first
      quadrant.
  """
  X = complex(X)
  if family.tag is data.FamilyTag.L2:
    raise exceptions.PreconditionError("L2 is parameterized by x, not X")
  if family.tag is data.FamilyTag.C2:
    disc = cmath.sqrt(X * X + 4.0)
    roots = ((-X + disc) / 2.0, (-X - disc) / 2.0)
  else:
    disc = cmath.sqrt(X * X - 4.0)
    roots = ((X + disc) / 2.0, (X - disc) / 2.0)
  x = min(roots, key=abs)
  if not _in_open_first_quadrant(x) or not abs(x) < 1.0:
    raise exceptions.AdmissibilityError(
        f"X={X} has no preimage x in the open unit quarter disk",
        constraint="Arg(x)",
    )
  return data.ShapeParams(family, x)


# -- Algebraic equations -------------------------------------------------------


def big_z(family: data.FamilyId, z: complex) -> complex:
  """Z = z - 1/z (C2) or z + 1/z (L4). L2 works with z itself."""
  if family.tag is data.FamilyTag.C2:
    return z - 1.0 / z
  if family.tag is data.FamilyTag.L4:
    return z + 1.0 / z
  return z


def _check_pole(dp: data.DerivedParams, z: complex) -> None:
  if not cmath.isfinite(z):
    raise exceptions.PoleError("z at infinity", location="inf")
  if abs(z) < POLE_EPS:
    raise exceptions.PoleError("z at 0", location=0j)
  tag = dp.family.tag
  if tag is data.FamilyTag.L4:
    poles = (1j, -1j)
  else:
    poles = (1.0, -1.0)
  for pole in poles:
    if abs(z - pole) < POLE_EPS:
      raise exceptions.PoleError(f"z at pole {pole}", location=complex(pole))


def _factors(
    dp: data.DerivedParams, z: complex
) -> tuple[complex, complex, complex, complex]:
  """Returns (alpha, r, beta, rt) with p = alpha^2 r, q = beta^2 rt."""
  tag = dp.family.tag
  if tag is data.FamilyTag.L2:
    x, a, k = dp.x, dp.a, dp.c
    x_bar = x.conjugate()
    denom = z * (1.0 - z * z)
    r = k * (z + x) * (z + x_bar) / denom
    rt = k * (z - x) * (z - x_bar) / denom
    return z - a, r, z + a, rt
  X, A, c = dp.X, dp.A, dp.c
  X_bar = X.conjugate()
  Z = big_z(dp.family, z)
  Z3 = Z * Z * Z
  if tag is data.FamilyTag.C2:
    r = -1j * c / Z3 * (Z - X) * (Z + X_bar)
    rt = -1j * c / Z3 * (Z - X_bar) * (Z + X)
    return Z - 1j * A, r, Z + 1j * A, rt
  r = 1j * c / Z3 * (Z + X) * (Z - X_bar)
  rt = 1j * c / Z3 * (Z + X_bar) * (Z - X)
  return Z + 1j * A, r, Z - 1j * A, rt


def gauss_squares(
    dp: data.DerivedParams, family: data.FamilyId, z: complex
) -> GaussSquares:
  """Evaluates p = (g - 1/g)^2 and q = (g + 1/g)^2 at z.

  Raises:
    PoleError: If z is a pole of the squares.
  """
  del family  # Carried by dp.
  z = complex(z)
  _check_pole(dp, z)
  alpha, r, beta, rt = _factors(dp, z)
  return GaussSquares(p=alpha * alpha * r, q=beta * beta * rt)


def g_from_roots(dp: data.DerivedParams, point: CoverPoint) -> complex:
  """Gauss map of a cover point."""
  alpha, _, beta, _ = _factors(dp, point.z)
  w = alpha * point.s
  v = beta * point.sigma
  # g = (w + v)/2 = 2/(v - w); pick the form without cancellation.
  if abs(v - w) > abs(v + w):
    return 2.0 / (v - w)
  return (w + v) / 2.0


def roots_from_g(dp: data.DerivedParams, z: complex, g: complex) -> CoverPoint:
  """The cover point over z whose Gauss map is g.

  Raises:
    AmbiguityError: If z is a double zero of p or q, where the sign of the
      corresponding root is not determined by g.
  """
  z = complex(z)
  alpha, r, beta, rt = _factors(dp, z)
  w = g - 1.0 / g
  v = g + 1.0 / g
  if abs(alpha) < POLE_EPS or abs(beta) < POLE_EPS:
    raise exceptions.AmbiguityError(
        f"z={z} is a double zero of the Gauss-map squares",
        candidates=candidates(dp, z),
    )
  s = _nearest_sign(cmath.sqrt(r), w / alpha)
  sigma = _nearest_sign(cmath.sqrt(rt), v / beta)
  return CoverPoint(z, s, sigma)


def candidates(dp: data.DerivedParams, z: complex) -> list[complex]:
  """The four values of g over z, ordered by sheet (s, sigma) signs."""
  z = complex(z)
  _check_pole(dp, z)
  _, r, _, rt = _factors(dp, z)
  s, sigma = cmath.sqrt(r), cmath.sqrt(rt)
  return [
      g_from_roots(dp, CoverPoint(z, ss, tt))
      for ss in (s, -s)
      for tt in (sigma, -sigma)
  ]


def _nearest_sign(root: complex, target: complex) -> complex:
  return root if abs(root - target) <= abs(root + target) else -root


# -- Continuation --------------------------------------------------------------


def _aligned(root: complex, prev: complex) -> complex | None:
  """Sign of root closest in phase to prev, or None past the turn limit."""
  dot = (root * prev.conjugate()).real
  if dot < 0:
    root, dot = -root, -dot
  norm = abs(root) * abs(prev)
  if norm == 0 or dot < _MIN_ALIGNMENT * norm:
    return None
  return root


def _step(
    dp: data.DerivedParams, prev: CoverPoint, z: complex
) -> CoverPoint | None:
  """Nearest-root step to z, or None if the step is too large."""
  _, r, _, rt = _factors(dp, z)
  s = _aligned(cmath.sqrt(r), prev.s)
  sigma = _aligned(cmath.sqrt(rt), prev.sigma)
  if s is None or sigma is None:
    return None
  return CoverPoint(z, s, sigma)


def _advance(
    dp: data.DerivedParams, start: CoverPoint, z: complex
) -> CoverPoint:
  current = start
  targets = [z]
  steps = 0
  while targets:
    target = targets[-1]
    nxt = _step(dp, current, target)
    steps += 1
    if nxt is not None:
      current = nxt
      targets.pop()
      continue
    if steps > _MAX_SUBSTEPS or abs(target - current.z) < _MIN_STEP:
      raise exceptions.ContinuationError(
          f"Continuation step {start.z} -> {z} too large for the local root"
          " separation; refine the path or increase the clearance",
          z=z,
      )
    targets.append(0.5 * (current.z + target))
  return current


def continue_roots(
    dp: data.DerivedParams, start: CoverPoint, path: Iterable[complex]
) -> list[CoverPoint]:
  """Continues a cover point along a path of z values.

  Steps are refined automatically (by bisection in z) until each root turns
  by less than pi/4, i.e. stays far closer to its continuation than to the
  competing root.

  Args:
    dp: Derived parameters.
    start: Cover point at the beginning of the path.
    path: Subsequent z values (the start point is not repeated).

  Returns:
    One cover point per path entry.

  Raises:
    ContinuationError: If a step cannot be refined enough, e.g. because the
      path runs through a branch point.
  """
  out = []
  current = start
  for z in path:
    z = complex(z)
    _check_pole(dp, z)
    current = _advance(dp, current, z)
    out.append(current)
  return out


def continue_g(
    path: Sequence[complex],
    g_start: complex,
    dp: data.DerivedParams,
    family: data.FamilyId,
) -> list[complex]:
  """Continues the Gauss map along a path by nearest-root selection.

  Args:
    path: z values; path[0] is where g_start is given.
    g_start: Gauss map at path[0], satisfying the squares there.
    dp: Derived parameters.
    family: The surface family.

  Returns:
    g at every entry of path (the first entry is g_start).

  Raises:
    ContinuationError: If a step is too large relative to root separation.
    AmbiguityError: If path[0] is a double zero of p or q.
  """
  del family  # Carried by dp.
  if not path:
    return []
  start = roots_from_g(dp, path[0], g_start)
  points = continue_roots(dp, start, path[1:])
  return [complex(g_start)] + [g_from_roots(dp, p) for p in points]


# -- Height differential and Weierstrass forms ---------------------------------


def _dhdz_roots(dp: data.DerivedParams, point: CoverPoint) -> complex:
  z = point.z
  if dp.family.tag is data.FamilyTag.L2:
    return 1j * dp.c / (point.s * point.sigma * z * (1.0 - z * z))
  Z = big_z(dp.family, z)
  return -1j * dp.c / (Z * Z * point.s * point.sigma * z)


def forms_at(dp: data.DerivedParams, point: CoverPoint) -> np.ndarray:
  """(phi1, phi2, phi3)/dz at a cover point, finite wherever g is 0 or inf."""
  alpha, _, beta, _ = _factors(dp, point.z)
  dh = _dhdz_roots(dp, point)
  w = alpha * point.s
  v = beta * point.sigma
  return np.array([-0.5 * w * dh, 0.5j * v * dh, dh], dtype=complex)


def height_differential(
    dp: data.DerivedParams, family: data.FamilyId, z: complex, g: complex
) -> complex:
  """dh/dz at the cover point (z, g).

  The square root in the denominator is not a principal branch: it is
  defined through g by iZ^3 (g^2 - 1/g^2) / (c (Z^2 + A^2)) (C2, L4) or
  z (1 - z^2)(g^2 - 1/g^2) / (k (z^2 - a^2)) (L2).

  Raises:
    SingularityError: At a zero of the denominator.
  """
  del family  # Carried by dp.
  z, g = complex(z), complex(g)
  if abs(z) < POLE_EPS:
    raise exceptions.SingularityError("dh undefined at z=0", location=z)
  if g == 0 or not cmath.isfinite(g):
    raise exceptions.SingularityError(
        "dh is evaluated through g, which is 0 or infinite", location=z
    )
  g2 = g * g - 1.0 / (g * g)
  if dp.family.tag is data.FamilyTag.L2:
    factor = dp.c * (z * z - dp.a * dp.a)
    if abs(factor) < POLE_EPS:
      raise exceptions.SingularityError("z at +-a", location=z)
    root = z * (1.0 - z * z) * g2 / factor
    if abs(root) < POLE_EPS:
      raise exceptions.SingularityError("z at a branch point", location=z)
    return 1j / root
  Z = big_z(dp.family, z)
  factor = dp.c * (Z * Z + dp.A * dp.A)
  if abs(factor) < POLE_EPS:
    raise exceptions.SingularityError("Z at +-iA", location=z)
  root = 1j * Z**3 * g2 / factor
  if abs(root) < POLE_EPS:
    raise exceptions.SingularityError("z at a branch point", location=z)
  return Z / (root * z)


def weierstrass_forms(
    z: complex, g: complex, dhdz: complex
) -> tuple[complex, complex, complex]:
  """(phi1, phi2, phi3)/dz = (1/g - g, i/g + i g, 2) dh/dz / 2.

  Raises:
    PoleError: If g is 0 or infinite.
  """
  g = complex(g)
  if g == 0 or not cmath.isfinite(g):
    raise exceptions.PoleError(f"g={g} at z={z}", location=complex(z))
  inv = 1.0 / g
  return (
      0.5 * (inv - g) * dhdz,
      0.5 * (1j * inv + 1j * g) * dhdz,
      complex(dhdz),
  )


# -- Boundary arcs -------------------------------------------------------------


class CurveKind(enum.Enum):
  IMAGINARY_SEGMENT = "z = it, 0 < t < 1"
  UNIT_ARC = "z = exp(it), pi/2 > t > 0"
  REAL_SEGMENT = "z = t, 1 > t > 0"
  REAL_RAY = "z = 1/t, 1 > t > 0"
  IMAGINARY_RAY = "z = it/(1 - t), 1 > t > 0"


class LineKind(enum.Enum):
  REAL = "real"
  IMAGINARY = "imaginary"


@dataclasses.dataclass(frozen=True)
class Locus:
  """A ray (ray=True) or full line through 0 in direction `direction`."""

  direction: complex
  ray: bool

  def deviation(self, g: complex) -> float:
    """Sine of the angle between g and the locus (0 means on it)."""
    if g == 0 or not cmath.isfinite(g):
      return 0.0
    rotated = g * self.direction.conjugate() / abs(g)
    if self.ray and rotated.real < 0:
      return 1.0 + abs(rotated.imag)
    return abs(rotated.imag)

  def image(self) -> Locus:
    """The locus under g -> -1/g."""
    return Locus(-self.direction.conjugate(), self.ray)


@dataclasses.dataclass(frozen=True)
class BoundaryArc:
  """A boundary arc of the fundamental domain with its expected loci.

  Attributes:
    label: Arc name.
    z_param: Parameter curve of the arc.
    t_start: Parameter at the first endpoint (in traversal order).
    t_end: Parameter at the second endpoint.
    g_locus: Where g lies along the arc.
    dh_locus: Line containing dh applied to the tangent vector.
    sheet: 0 for the anchor sheet, 1 for its image under g -> -1/g.
  """

  label: data.ArcLabel
  z_param: CurveKind
  t_start: float
  t_end: float
  g_locus: Locus
  dh_locus: LineKind
  sheet: int

  def z(self, t: float) -> complex:
    if self.z_param is CurveKind.IMAGINARY_SEGMENT:
      return 1j * t
    if self.z_param is CurveKind.UNIT_ARC:
      return cmath.exp(1j * t)
    if self.z_param is CurveKind.REAL_RAY:
      return complex(1.0 / t)
    if self.z_param is CurveKind.IMAGINARY_RAY:
      return 1j * t / (1.0 - t)
    return complex(t)

  def tangent(self, t: float) -> complex:
    if self.z_param is CurveKind.IMAGINARY_SEGMENT:
      return 1j
    if self.z_param is CurveKind.UNIT_ARC:
      return 1j * cmath.exp(1j * t)
    if self.z_param is CurveKind.REAL_RAY:
      return complex(-1.0 / (t * t))
    if self.z_param is CurveKind.IMAGINARY_RAY:
      return 1j / (1.0 - t) ** 2
    return 1.0 + 0j

  def samples(self, n: int, inset: float = 1e-3) -> np.ndarray:
    """n parameters strictly inside the arc, in traversal order."""
    lo, hi = self.t_start, self.t_end
    span = hi - lo
    return lo + span * np.linspace(inset, 1.0 - inset, n)


_DIAG = cmath.exp(0.25j * math.pi)
_ANTIDIAG = cmath.exp(-0.25j * math.pi)

# Arc of the anchor sheet that each image arc comes from under g -> -1/g.
RHO_H_SOURCE = {
    data.ArcLabel.S_PRIME_B_PRIME: data.ArcLabel.SB,
    data.ArcLabel.B_PRIME_F_PRIME: data.ArcLabel.BL,
    data.ArcLabel.F_PRIME_S: data.ArcLabel.LS_PRIME,
}
RHO_H_IMAGE = {v: k for k, v in RHO_H_SOURCE.items()}


def _table(
    *rows: tuple[data.ArcLabel, CurveKind, float, float, Locus, LineKind],
) -> dict[data.ArcLabel, BoundaryArc]:
  """Anchor-sheet arcs followed by their rho_h images."""
  arcs = {}
  for label, kind, t_start, t_end, g_locus, dh_locus in rows:
    arcs[label] = BoundaryArc(label, kind, t_start, t_end, g_locus, dh_locus, 0)
  for label, kind, t_start, t_end, g_locus, dh_locus in rows:
    image = RHO_H_IMAGE[label]
    arcs[image] = BoundaryArc(
        image, kind, t_start, t_end, g_locus.image(), dh_locus, 1
    )
  return arcs


# Quarter disk; S = 0, B = i, L = 1. SB is straight, BL and LS' are planar.
C2_ARCS = _table(
    (data.ArcLabel.SB, CurveKind.IMAGINARY_SEGMENT, 0.0, 1.0,
     Locus(1.0, True), LineKind.IMAGINARY),
    (data.ArcLabel.BL, CurveKind.UNIT_ARC, math.pi / 2, 0.0,
     Locus(1.0, True), LineKind.REAL),
    (data.ArcLabel.LS_PRIME, CurveKind.REAL_SEGMENT, 1.0, 0.0,
     Locus(_DIAG, False), LineKind.REAL),
)

# Quarter disk; S = 0, B = i, L = 1. SB and BL are straight, LS' is planar.
L4_ARCS = _table(
    (data.ArcLabel.SB, CurveKind.IMAGINARY_SEGMENT, 0.0, 1.0,
     Locus(1.0, True), LineKind.IMAGINARY),
    (data.ArcLabel.BL, CurveKind.UNIT_ARC, math.pi / 2, 0.0,
     Locus(_DIAG, False), LineKind.IMAGINARY),
    (data.ArcLabel.LS_PRIME, CurveKind.REAL_SEGMENT, 1.0, 0.0,
     Locus(_DIAG, False), LineKind.REAL),
)

# First quadrant; S = 0, B = 1, L = inf. SB and BL are straight, LS' is
# planar.
L2_ARCS = _table(
    (data.ArcLabel.SB, CurveKind.REAL_SEGMENT, 0.0, 1.0,
     Locus(1.0, True), LineKind.IMAGINARY),
    (data.ArcLabel.BL, CurveKind.REAL_RAY, 1.0, 0.0,
     Locus(1j, False), LineKind.IMAGINARY),
    (data.ArcLabel.LS_PRIME, CurveKind.IMAGINARY_RAY, 1.0, 0.0,
     Locus(_ANTIDIAG, False), LineKind.REAL),
)

_ARC_TABLES = {
    data.FamilyTag.C2: C2_ARCS,
    data.FamilyTag.L2: L2_ARCS,
    data.FamilyTag.L4: L4_ARCS,
}


def boundary_arcs(family: data.FamilyId) -> dict[data.ArcLabel, BoundaryArc]:
  """The six boundary arcs of the family's doubled fundamental domain."""
  return _ARC_TABLES[family.tag]


def anchor_target(dp: data.DerivedParams) -> complex:
  """The point of SB where g = 1."""
  if dp.family.tag is data.FamilyTag.L2:
    return complex(dp.a)
  return 1j * dp.a


def anchor_point(dp: data.DerivedParams, z: complex) -> CoverPoint:
  """Anchor-sheet cover point on SB, where g is real and positive.

  The sheet is fixed so that g -> 0 at S and g -> +inf toward B (C2: toward
  L, since the formula also holds on BL). With this choice the remaining
  arcs of the anchor sheet follow the tabulated loci.
  """
  z = complex(z)
  _check_pole(dp, z)
  tag = dp.family.tag
  if tag is data.FamilyTag.L2:
    _, r, _, rt = _factors(dp, z)
    return CoverPoint(z, complex(math.sqrt(abs(r))), complex(math.sqrt(abs(rt))))
  b, m, c = dp.X.imag, abs(dp.X) ** 2, dp.c
  if tag is data.FamilyTag.C2:
    tau = big_z(dp.family, z).imag
    big_r = math.sqrt(c * (tau * tau - 2 * b * tau + m) / tau**3)
    big_rt = math.sqrt(c * (tau * tau + 2 * b * tau + m) / tau**3)
    return CoverPoint(z, 1j * big_r, -1j * big_rt)
  # L4: Z = -i mu on SB.
  mu = -big_z(dp.family, z).imag
  big_r = math.sqrt(c * (mu * mu - 2 * b * mu + m) / mu**3)
  big_rt = math.sqrt(c * (mu * mu + 2 * b * mu + m) / mu**3)
  return CoverPoint(z, -1j * big_r, 1j * big_rt)


@functools.lru_cache(maxsize=64)
def _ls_prime_entry(dp: data.DerivedParams) -> CoverPoint:
  """C2 anchor-sheet point on the real axis at radius between |x| and 1."""
  rho = 0.5 * (1.0 + abs(dp.x))
  start = anchor_point(dp, 1j * rho)
  angles = np.linspace(math.pi / 2, 0.0, 257)[1:]
  return continue_roots(dp, start, rho * np.exp(1j * angles))[-1]


def _outer_radius(dp: data.DerivedParams) -> float:
  """A circle around A that avoids every other branch point."""
  if dp.family.tag is data.FamilyTag.L2:
    return 2.0 * max(1.0, abs(dp.x))
  return 0.5 * (1.0 + abs(dp.x))


def _sb_angle(dp: data.DerivedParams) -> float:
  return 0.0 if dp.family.tag is data.FamilyTag.L2 else math.pi / 2


@functools.lru_cache(maxsize=64)
def _outer_entry(dp: data.DerivedParams) -> CoverPoint:
  """Anchor-sheet point on the outer circle, reached inside the SB wedge."""
  start = anchor_point(dp, anchor_target(dp))
  radius = abs(start.z)
  theta_sb = _sb_angle(dp)
  theta_mid = 0.5 * (theta_sb + cmath.phase(dp.x))
  turn = radius * np.exp(1j * np.linspace(theta_sb, theta_mid, 129)[1:])
  out = np.linspace(radius, _outer_radius(dp), 257)[1:] * cmath.exp(
      1j * theta_mid
  )
  return continue_roots(dp, start, np.concatenate([turn, out]))[-1]


def _continue_to(dp: data.DerivedParams, z: complex) -> CoverPoint:
  """Anchor-sheet point at z, continued around A (never across the cut)."""
  entry = _outer_entry(dp)
  rho = abs(entry.z)
  theta = cmath.phase(z)
  turn = rho * np.exp(
      1j * np.linspace(cmath.phase(entry.z), theta, 257)[1:]
  )
  # Geometric steps keep the radial leg well resolved near 0 and far out.
  radial = np.geomspace(rho, abs(z), 257)[1:] * cmath.exp(1j * theta)
  radial[-1] = z
  return continue_roots(dp, entry, np.concatenate([turn, radial]))[-1]


def arc_point(arc: BoundaryArc, t: float, dp: data.DerivedParams) -> CoverPoint:
  """Cover point on a boundary arc, on the sheet the arc belongs to."""
  z = arc.z(t)
  label = RHO_H_SOURCE.get(arc.label, arc.label)
  tag = dp.family.tag
  if label is data.ArcLabel.SB or (
      tag is data.FamilyTag.C2 and label is data.ArcLabel.BL
  ):
    point = anchor_point(dp, z)
  elif tag is data.FamilyTag.C2:
    entry = _ls_prime_entry(dp)
    steps = max(2, int(abs(entry.z - z) * 512))
    path = np.linspace(entry.z.real, t, steps + 1)[1:]
    point = continue_roots(dp, entry, path)[-1]
  else:
    point = _continue_to(dp, z)
  return point.rho_h() if arc.sheet == 1 else point


def g_on_arc(arc: BoundaryArc, t: float, dp: data.DerivedParams) -> complex:
  """Gauss map at parameter t of a boundary arc.

  Args:
    arc: The boundary arc, from boundary_arcs(dp.family).
    t: Parameter inside the arc's range.
    dp: Derived parameters.

  Returns:
    g on the arc's locus.

  Raises:
    AmbiguityError: If two distinct roots lie on the locus and are equally
      close to the continued branch.
  """
  lo, hi = sorted((arc.t_start, arc.t_end))
  if not lo <= t <= hi:
    raise exceptions.PreconditionError(
        f"t={t} outside the range of arc {arc.label.value}"
    )
  g = g_from_roots(dp, arc_point(arc, t, dp))
  on_locus = [
      cand for cand in candidates(dp, arc.z(t))
      if arc.g_locus.deviation(cand) < 1e-6
  ]
  if len(on_locus) > 1:
    dists = sorted(abs(cand - g) for cand in on_locus)
    if dists[1] - dists[0] <= 1e-12 * max(1.0, abs(g)):
      raise exceptions.AmbiguityError(
          f"Several roots on the locus of {arc.label.value} at t={t}",
          candidates=on_locus,
      )
  return g


# -- Degree counting -----------------------------------------------------------


def _poly_from_roots(roots: Sequence[complex], lead: complex) -> np.ndarray:
  return lead * np.poly(np.asarray(roots, dtype=complex))


def g_preimages(
    dp: data.DerivedParams, w: complex, tol: float = 1e-7
) -> list[tuple[complex, complex]]:
  """All cover points (z, g) with g = w.

  p = (w - 1/w)^2 is polynomial in Z (C2, L4) or z (L2) after clearing
  denominators; each root z is then matched against the four sheets.

  Returns:
    (z, g) pairs, one per matching sheet.
  """
  w = complex(w)
  target = (w - 1.0 / w) ** 2
  tag = dp.family.tag
  if tag is data.FamilyTag.L2:
    x, a = dp.x, dp.a
    lhs = _poly_from_roots([-x, -x.conjugate(), a, a], dp.c)
    # target * z (1 - z^2) = -target z^3 + target z
    rhs = np.array([-target, 0, target, 0], dtype=complex)
    zs = list(np.roots(np.polysub(lhs, rhs)))
  else:
    X, A, c = dp.X, dp.A, dp.c
    if tag is data.FamilyTag.C2:
      lhs = _poly_from_roots([1j * A, 1j * A, X, -X.conjugate()], -1j * c)
    else:
      lhs = _poly_from_roots([-1j * A, -1j * A, -X, X.conjugate()], 1j * c)
    big_zs = np.roots(np.polysub(lhs, np.array([target, 0, 0, 0])))
    sign = -1.0 if tag is data.FamilyTag.C2 else 1.0
    zs = []
    for Z in big_zs:
      # z^2 - Z z + sign = 0 from Z = z - 1/z (C2) or z + 1/z (L4).
      zs.extend(np.roots([1.0, -Z, sign]))
  out = []
  for z in zs:
    z = complex(z)
    try:
      cands = candidates(dp, z)
    except exceptions.PoleError:
      continue
    for g in cands:
      if abs(g - w) < tol * (1.0 + abs(w)):
        out.append((z, g))
  logging.debug("g_preimages(%s): %d points", w, len(out))
  return out


def fiber_size(dp: data.DerivedParams, z: complex, tol: float = 1e-9) -> int:
  """Number of distinct values of g over z."""
  distinct: list[complex] = []
  for g in candidates(dp, z):
    if all(abs(g - h) > tol * (1.0 + abs(g)) for h in distinct):
      distinct.append(g)
  return len(distinct)

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

"""Run configuration: parsing, validation and write-back.

Config files hold one `key = value` per line; `#` starts a comment. Values
are read with yaml.safe_load, so `0.5`, `C2`, `[1, 1, 2]` and `true` get their
natural types, and are then validated against the RunConfig field types.

  family = C2
  X_re = 2.0
  X_im = -1.0
  resolution = 32
  tiles = [1, 1, 2]
"""

from __future__ import annotations

import dataclasses
import functools
import math
import pathlib
import typing
from typing import Any

import pydantic
import yaml

from tpms import data
from tpms import exceptions
from tpms import families
from tpms import period


@dataclasses.dataclass(frozen=True)
class RunConfig:
  """Everything a CLI run needs.

  Attributes:
    family: "C2", "L2" or "L4".
    x_re: Real part of the shape parameter x.
    x_im: Imaginary part of x.
    X_re: Real part of X, an alternative to x for C2 and L4.
    X_im: Imaginary part of X.
    slice_fixed: "ImX" (C2, L4) or "Imx" (L2); defaults by family.
    slice_value: Value of the fixed component.
    slice_lo: Lower end of the swept real part.
    slice_hi: Upper end of the swept real part.
    slice_samples: Samples used to find a sign change.
    resolution: Mesh resolution N.
    clearance: Distance mesh nodes keep from branch points.
    tiles: Copies of the fundamental piece along the three lattice vectors.
    tol_root: Residual tolerance of period solves.
    tol_quad: Absolute quadrature tolerance.
    tol_check: Relative tolerance of the mesh checks.
    sweep_re: [lo, hi, n] grid of the swept real part.
    sweep_im: [lo, hi, n] grid of the swept imaginary part.
    output_dir: Directory for written files.
    workers: Threads for sweeps and edge quadrature.
  """

  family: str = "C2"
  x_re: float | None = None
  x_im: float | None = None
  X_re: float | None = None
  X_im: float | None = None
  slice_fixed: str | None = None
  slice_value: float | None = None
  slice_lo: float | None = None
  slice_hi: float | None = None
  slice_samples: int = 16
  resolution: int = 32
  clearance: float = families.DEFAULT_CLEARANCE
  tiles: tuple[int, int, int] = (1, 1, 1)
  tol_root: float = 1e-8
  tol_quad: float = 1e-10
  tol_check: float = 1e-3
  sweep_re: tuple[float, float, int] | None = None
  sweep_im: tuple[float, float, int] | None = None
  output_dir: str = "tpms_out"
  workers: int = 1


KEYS = tuple(f.name for f in dataclasses.fields(RunConfig))


@functools.cache
def _adapters() -> dict[str, pydantic.TypeAdapter]:
  hints = typing.get_type_hints(RunConfig)
  return {key: pydantic.TypeAdapter(hints[key]) for key in KEYS}


def _validate_value(key: str, value: Any, line: int | None) -> Any:
  if key not in _adapters():
    raise exceptions.ConfigError(f"Unknown key {key!r}", line=line)
  try:
    return _adapters()[key].validate_python(value)
  except pydantic.ValidationError as e:
    raise exceptions.ConfigError(
        f"Invalid value for {key}: {value!r}", line=line
    ) from e


def check(config: RunConfig) -> RunConfig:
  """Cross-field validation; returns config unchanged.

  Raises:
    ConfigError: On an unknown family, a half-given parameter, or out of
      range sizes.
  """
  try:
    family = data.family(config.family)
  except exceptions.PreconditionError as e:
    raise exceptions.ConfigError(str(e)) from e
  for re_key, im_key in (("x_re", "x_im"), ("X_re", "X_im")):
    if (getattr(config, re_key) is None) != (getattr(config, im_key) is None):
      raise exceptions.ConfigError(f"{re_key} and {im_key} go together")
  if config.x_re is not None and config.X_re is not None:
    raise exceptions.ConfigError("Give either x or X, not both")
  if config.X_re is not None and family.tag is data.FamilyTag.L2:
    raise exceptions.ConfigError("L2 is parameterized by x, not X")
  if config.resolution < 8:
    raise exceptions.ConfigError("resolution must be >= 8")
  if min(config.tiles) < 1:
    raise exceptions.ConfigError("tiles must be positive")
  if config.workers < 1:
    raise exceptions.ConfigError("workers must be >= 1")
  for key in ("clearance", "tol_root", "tol_quad", "tol_check"):
    if not getattr(config, key) > 0:
      raise exceptions.ConfigError(f"{key} must be positive")
  for key in ("sweep_re", "sweep_im"):
    grid = getattr(config, key)
    if grid is not None and (grid[2] < 1 or grid[0] > grid[1]):
      raise exceptions.ConfigError(f"{key} must be [lo, hi, n] with lo <= hi")
  return config


def loads(text: str) -> RunConfig:
  """Parses config text.

  Raises:
    ConfigError: Naming the 1-based line of a malformed line, an unknown or
      repeated key, or an invalid value.
  """
  values: dict[str, Any] = {}
  for number, raw in enumerate(text.splitlines(), start=1):
    line = raw.split("#", 1)[0].strip()
    if not line:
      continue
    key, sep, value = line.partition("=")
    key, value = key.strip(), value.strip()
    if not sep or not key or not value:
      raise exceptions.ConfigError(
          f"Expected 'key = value', got {raw.strip()!r}", line=number
      )
    if key in values:
      raise exceptions.ConfigError(f"Repeated key {key!r}", line=number)
    try:
      parsed = yaml.safe_load(value)
    except yaml.YAMLError as e:
      raise exceptions.ConfigError(
          f"Cannot parse value {value!r}", line=number
      ) from e
    values[key] = _validate_value(key, parsed, number)
  return check(RunConfig(**values))


def load(path: str | pathlib.Path) -> RunConfig:
  return loads(pathlib.Path(path).read_text())


def _render(value: Any) -> str:
  if isinstance(value, tuple):
    value = list(value)
  text = yaml.safe_dump(value, default_flow_style=True)
  return text.removesuffix("...\n").strip()


def dumps(config: RunConfig) -> str:
  """Writes the non-default-None fields, one per line."""
  lines = []
  for key in KEYS:
    value = getattr(config, key)
    if value is not None:
      lines.append(f"{key} = {_render(value)}")
  return "\n".join(lines) + "\n"


def override(config: RunConfig, **overrides: Any) -> RunConfig:
  """Replaces the fields given (None values are ignored) and re-validates."""
  values = {
      key: _validate_value(key, value, None)
      for key, value in overrides.items()
      if value is not None
  }
  return check(dataclasses.replace(config, **values))


# -- Derived objects --------------------------------------------------------------


def shape_params(config: RunConfig) -> data.ShapeParams:
  """The shape parameters named by x or X.

  Raises:
    ConfigError: If neither is given.
  """
  family = data.family(config.family)
  if config.x_re is not None:
    return data.ShapeParams(family, complex(config.x_re, config.x_im))
  if config.X_re is not None:
    return families.shape_from_X(family, complex(config.X_re, config.X_im))
  raise exceptions.ConfigError(
      "This command needs x_re/x_im (or X_re/X_im for C2 and L4)"
  )


# Default slices: C2 on Im(X) = -1 over (1, 2 sqrt 2); L4 on Im(X) = -1 with
# A from 1 upwards; L2 on Im(x) = 1/2.
_DEFAULT_SLICES = {
    data.FamilyTag.C2: (
        period.FixedComponent.IM_BIG_X, -1.0,
        1.0 + period.SLICE_INSET, 2.0 * math.sqrt(2.0) - period.SLICE_INSET,
    ),
    data.FamilyTag.L4: (
        period.FixedComponent.IM_BIG_X, -1.0, period.SLICE_INSET, 4.0,
    ),
    data.FamilyTag.L2: (
        period.FixedComponent.IM_SMALL_X, 0.5, period.SLICE_INSET, 2.0,
    ),
}


def slice_spec(config: RunConfig) -> period.SliceSpec:
  """The slice to solve on: the family default with config overrides."""
  family = data.family(config.family)
  fixed, value, lo, hi = _DEFAULT_SLICES[family.tag]
  if config.slice_fixed is not None:
    try:
      fixed = period.FixedComponent(config.slice_fixed)
    except ValueError as e:
      raise exceptions.ConfigError(
          f"slice_fixed must be ImX or Imx, got {config.slice_fixed!r}"
      ) from e
  try:
    return period.SliceSpec(
        family,
        fixed,
        value if config.slice_value is None else config.slice_value,
        lo if config.slice_lo is None else config.slice_lo,
        hi if config.slice_hi is None else config.slice_hi,
        config.slice_samples,
    )
  except exceptions.PreconditionError as e:
    raise exceptions.ConfigError(str(e)) from e

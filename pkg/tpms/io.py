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

"""Mesh export (Wavefront OBJ) and delimited result tables."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
import pathlib
from typing import Any

import numpy as np
import pandas as pd

from tpms import data
from tpms import exceptions

# Significant digits of exported coordinates.
OBJ_DIGITS = 12


def export_mesh(mesh: data.Mesh, normals: bool = False) -> bytes:
  """ASCII OBJ: one "v x y z" per vertex, then one "f i j k" per triangle.

  Face indices are 1-based and refer to the vertex order of the mesh.

  Args:
    mesh: The mesh to export.
    normals: Also write one "vn" line per vertex (Gauss-map normals) and
      reference them from the faces.
  """
  fmt = f"{{:.{OBJ_DIGITS}g}}"
  lines = [
      "v " + " ".join(fmt.format(c) for c in p) for p in mesh.positions
  ]
  if normals:
    lines += [
        "vn " + " ".join(fmt.format(c) for c in n) for n in mesh.normals
    ]
    lines += [
        "f " + " ".join(f"{i + 1}//{i + 1}" for i in t) for t in mesh.triangles
    ]
  else:
    lines += ["f " + " ".join(str(i + 1) for i in t) for t in mesh.triangles]
  return ("\n".join(lines) + "\n").encode("ascii")


def write_obj(
    mesh: data.Mesh, path: str | pathlib.Path, normals: bool = False
) -> pathlib.Path:
  path = pathlib.Path(path)
  path.parent.mkdir(parents=True, exist_ok=True)
  path.write_bytes(export_mesh(mesh, normals))
  return path


def parse_obj(text: str) -> tuple[np.ndarray, np.ndarray]:
  """Vertex positions and 0-based triangles of OBJ text.

  Only "v" and triangular "f" records are read; "vn" and comments are
  skipped.

  Raises:
    PreconditionError: On a non-triangular face or an index out of range.
  """
  positions, triangles = [], []
  for number, line in enumerate(text.splitlines(), start=1):
    parts = line.split()
    if not parts or parts[0] not in ("v", "f"):
      continue
    if parts[0] == "v":
      positions.append([float(c) for c in parts[1:4]])
      continue
    if len(parts) != 4:
      raise exceptions.PreconditionError(
          f"Line {number}: only triangular faces are supported"
      )
    triangles.append([int(p.split("/")[0]) - 1 for p in parts[1:]])
  positions = np.array(positions, dtype=float).reshape(-1, 3)
  triangles = np.array(triangles, dtype=int).reshape(-1, 3)
  if triangles.size and (triangles.min() < 0 or triangles.max() >= len(positions)):
    raise exceptions.PreconditionError("Face index outside the vertex range")
  return positions, triangles


def read_obj(path: str | pathlib.Path) -> tuple[np.ndarray, np.ndarray]:
  return parse_obj(pathlib.Path(path).read_text())


def write_table(
    rows: Sequence[Mapping[str, Any]],
    path: str | pathlib.Path,
    columns: Sequence[str] | None = None,
) -> pathlib.Path:
  """Writes rows as comma-separated values with a single header row."""
  path = pathlib.Path(path)
  path.parent.mkdir(parents=True, exist_ok=True)
  frame = pd.DataFrame(list(rows), columns=list(columns) if columns else None)
  frame.to_csv(path, index=False, float_format="%.12g")
  return path


def read_table(path: str | pathlib.Path) -> pd.DataFrame:
  return pd.read_csv(path)

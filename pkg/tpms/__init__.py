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

"""tpms: triply periodic minimal surfaces of the C2, L2 and L4 families.

Typical workflow:

  import tpms

  sp = tpms.solve("C2")                   # close the period on Im(X) = -1
  domain, piece = tpms.builder.build_piece(sp, resolution=32)
  block, lattice = tpms.builder.tile(piece, sp.family, (2, 2, 2))
  tpms.io.write_obj(block, "c2.obj")
  print(tpms.verify.verify_all(sp).to_text())
"""

from __future__ import annotations

from tpms import builder
from tpms import config
from tpms import data
from tpms import exceptions
from tpms import families
from tpms import geometry
from tpms import io
from tpms import numerics
from tpms import period
from tpms import verify

__all__ = [
    "solve",
    "builder",
    "config",
    "data",
    "exceptions",
    "families",
    "geometry",
    "io",
    "numerics",
    "period",
    "verify",
]


def solve(
    family: str | data.FamilyId = "C2",
    slice_spec: period.SliceSpec | None = None,
    tol: float = 1e-8,
) -> data.ShapeParams:
  """Period-closing shape parameters of a family.

  Args:
    family: "C2", "L2" or "L4".
    slice_spec: Where to search; the family's default slice when omitted.
    tol: Residual tolerance.

  Returns:
    The solved shape parameters.
  """
  fam = data.family(family)
  if slice_spec is None:
    slice_spec = config.slice_spec(config.RunConfig(family=fam.tag.value))
  return period.solve_period(slice_spec, tol=tol)

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

"""Command-line entry point: tpms {solve,build,verify,sweep}.

Exit codes: 0 success, 1 a verification check failed, 2 usage or config
error, 3 numerical failure.

Example:

  tpms solve --family C2
  tpms build --family C2 --X_re 2.0 --X_im -1 --resolution 32 --tiles 1 1 2
"""

from __future__ import annotations

import argparse
from collections.abc import Sequence
from concurrent import futures
import dataclasses
import itertools
import pathlib
import sys

from absl import logging
import numpy as np

from tpms import builder
from tpms import config as config_lib
from tpms import data
from tpms import exceptions
from tpms import families
from tpms import io
from tpms import period
from tpms import progress
from tpms import verify

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

# Sweep grids used when the config gives none: [lo, hi, n].
_DEFAULT_SWEEPS = {
    data.FamilyTag.C2: ((0.5, 4.0, 8), (-2.0, -0.25, 8)),
    data.FamilyTag.L4: ((0.25, 4.0, 8), (-2.0, -0.25, 8)),
    data.FamilyTag.L2: ((0.05, 1.0, 8), (0.1, 1.0, 8)),
}


def _out(cfg: config_lib.RunConfig, name: str) -> pathlib.Path:
  return pathlib.Path(cfg.output_dir) / name


# -- solve ------------------------------------------------------------------------


def cmd_solve(cfg: config_lib.RunConfig) -> int:
  """Solves the period problem on the configured slice.

  Writes solve.csv; on a failed bracket search writes solve_residuals.csv
  with the sampled residuals before re-raising.
  """
  line = config_lib.slice_spec(cfg)
  try:
    sp = period.solve_period(line, tol=cfg.tol_root, workers=cfg.workers)
  except exceptions.BracketError as e:
    path = io.write_table(
        [{"t": t, "residual": r} for t, r in e.samples],
        _out(cfg, "solve_residuals.csv"),
    )
    logging.error("No root on the slice; sampled residuals in %s", path)
    raise
  dp = families.derive_params(sp)
  report = period.period_integrals(dp, tol=cfg.tol_quad)
  lo_res = line.residual_at(line.lo, cfg.tol_quad)
  hi_res = line.residual_at(line.hi, cfg.tol_quad)
  first_key, second_key = SWEEP_COLUMNS[sp.family.tag][2:]
  row = {
      "family": str(sp.family),
      "x_re": sp.x.real,
      "x_im": sp.x.imag,
      "X_re": dp.X.real,
      "X_im": dp.X.imag,
      "A": dp.A,
      "a": dp.a,
      "c": dp.c,
      first_key: report.first,
      second_key: report.second,
      "residual": report.residual,
  }
  path = io.write_table([row], _out(cfg, "solve.csv"))
  print(f"{sp.family} period solved on {line.fixed.value}={line.value}:")
  print(
      f"  bracket: residual {lo_res:+.6g} at {line.lo:g},"
      f" {hi_res:+.6g} at {line.hi:g}"
  )
  for key, value in row.items():
    if key != "family":
      print(f"  {key:<8} {value:.15g}")
  print(f"written to {path}")
  return EXIT_OK


# -- build ------------------------------------------------------------------------


def cmd_build(cfg: config_lib.RunConfig) -> int:
  """Writes the domain, the fundamental piece, the tiled block and the lattice.

  Files already written are removed if a later stage fails.
  """
  sp = config_lib.shape_params(cfg)
  dp = families.derive_params(sp)
  report = period.period_integrals(dp, tol=cfg.tol_quad)
  if abs(report.residual) > cfg.tol_root:
    logging.warning(
        "Period is open (residual %.3g); building anyway", report.residual
    )
    print(f"warning: open period, residual {report.residual:+.3g}")
  written: list[pathlib.Path] = []
  try:
    grid = builder.sample_domain(
        cfg.resolution, cfg.clearance, dp.x, sp.family
    )
    domain = builder.integrate_immersion(
        grid, dp, sp.family, workers=cfg.workers
    )
    written.append(io.write_obj(domain, _out(cfg, "domain.obj")))
    piece = builder.assemble_fundamental_piece(domain, sp.family)
    written.append(io.write_obj(piece, _out(cfg, "piece.obj")))
    block, vectors = builder.tile(piece, sp.family, cfg.tiles)
    written.append(io.write_obj(block, _out(cfg, "tiled.obj")))
    written.append(
        io.write_table(
            [
                {"vector": name, "x1": v[0], "x2": v[1], "x3": v[2]}
                for name, v in zip("abc", vectors)
            ],
            _out(cfg, "lattice.csv"),
        )
    )
  except exceptions.TpmsError:
    for path in written:
      path.unlink(missing_ok=True)
    raise
  print(
      f"domain {domain.num_vertices} vertices, piece {piece.num_vertices},"
      f" block {block.num_vertices} ({'x'.join(map(str, cfg.tiles))})"
  )
  for name, v in zip("abc", vectors):
    print(f"  {name} = ({v[0]:.9g}, {v[1]:.9g}, {v[2]:.9g})")
  print(f"written to {cfg.output_dir}")
  return EXIT_OK


# -- verify -----------------------------------------------------------------------


def cmd_verify(cfg: config_lib.RunConfig) -> int:
  sp = config_lib.shape_params(cfg)
  report = verify.verify_all(
      sp,
      resolution=cfg.resolution,
      clearance=cfg.clearance,
      tol_root=cfg.tol_root,
      tol_check=cfg.tol_check,
      workers=cfg.workers,
  )
  io.write_table(
      report.rows(), _out(cfg, "verify.csv"),
      columns=("check", "passed", "residual", "tolerance", "detail"),
  )
  print(report.to_text())
  print(progress.format_verdict(report.passed, f"{sp.family} x={sp.x:.12g}"))
  return EXIT_OK if report.passed else EXIT_CHECK_FAILED


# -- sweep ------------------------------------------------------------------------

# Real and imaginary part of X with I1, I2 for C2 and L4; of x with J1, J2
# for L2.
SWEEP_COLUMNS = {
    data.FamilyTag.C2: ("ReX", "ImX", "I1", "I2"),
    data.FamilyTag.L4: ("ReX", "ImX", "I1", "I2"),
    data.FamilyTag.L2: ("Rex", "Imx", "J1", "J2"),
}
_STATUS_COLUMNS = ("residual", "admissible", "constraint")


def sweep_columns(family: data.FamilyId) -> tuple[str, ...]:
  return SWEEP_COLUMNS[family.tag] + _STATUS_COLUMNS


def _grid(bounds: tuple[float, float, int]) -> np.ndarray:
  lo, hi, n = bounds
  return np.linspace(lo, hi, int(n))


def sweep_row(
    family: data.FamilyId, re: float, im: float, tol: float
) -> dict[str, object]:
  """Period integrals at one grid point of X (C2, L4) or x (L2)."""
  re_key, im_key, first_key, second_key = SWEEP_COLUMNS[family.tag]
  row = {
      re_key: float(re), im_key: float(im), first_key: np.nan,
      second_key: np.nan, "residual": np.nan, "admissible": False,
      "constraint": "",
  }
  point = complex(re, im)
  try:
    if family.tag is data.FamilyTag.L2:
      sp = data.ShapeParams(family, point)
    elif not im < 0:
      raise exceptions.AdmissibilityError(
          f"Im(X)={im} must be negative", constraint="Im(X)<0"
      )
    else:
      sp = families.shape_from_X(family, point)
    dp = families.derive_params(sp)
  except exceptions.AdmissibilityError as e:
    row["constraint"] = e.constraint
    return row
  row["admissible"] = True
  try:
    report = period.period_integrals(dp, tol=tol)
  except exceptions.NumericalError as e:
    logging.warning("Sweep point %s: %s", point, e)
    row["constraint"] = "numerical"
    return row
  row.update(
      {first_key: report.first, second_key: report.second,
       "residual": report.residual}
  )
  return row


def cmd_sweep(cfg: config_lib.RunConfig, show_progress: bool = True) -> int:
  """Residual table over a rectangular grid, in grid order (real part outer)."""
  family = data.family(cfg.family)
  default_re, default_im = _DEFAULT_SWEEPS[family.tag]
  points = list(
      itertools.product(
          _grid(cfg.sweep_re or default_re), _grid(cfg.sweep_im or default_im)
      )
  )
  work = lambda p: sweep_row(family, p[0], p[1], cfg.tol_quad)
  bar = progress.create_sweep_progress_bar(
      points, total=len(points), disable=not show_progress
  )
  if cfg.workers > 1:
    with futures.ThreadPoolExecutor(max_workers=cfg.workers) as pool:
      rows = list(pool.map(work, bar))
  else:
    rows = [work(p) for p in bar]
  path = io.write_table(
      rows, _out(cfg, "sweep.csv"), columns=sweep_columns(family)
  )
  flagged = sum(not r["admissible"] for r in rows)
  print(
      f"{len(rows)} points, {flagged} flagged inadmissible; written to {path}"
  )
  return EXIT_OK


# -- entry point ------------------------------------------------------------------

_COMMANDS = {
    "solve": cmd_solve,
    "build": cmd_build,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
  parser.add_argument("--config", help="Path to a key = value config file.")
  parser.add_argument(
      "--verbose", action="store_true", help="Log debug detail."
  )
  for field in dataclasses.fields(config_lib.RunConfig):
    name = f"--{field.name}"
    if field.name == "tiles":
      parser.add_argument(name, type=int, nargs=3, metavar=("NA", "NB", "NC"))
    elif field.name in ("sweep_re", "sweep_im"):
      parser.add_argument(name, type=float, nargs=3, metavar=("LO", "HI", "N"))
    elif field.name in ("slice_samples", "resolution", "workers"):
      parser.add_argument(name, type=int)
    elif field.name in ("family", "slice_fixed", "output_dir"):
      parser.add_argument(name, type=str)
    else:
      parser.add_argument(name, type=float)


def build_parser() -> argparse.ArgumentParser:
  parser = argparse.ArgumentParser(
      prog="tpms",
      description="Triply periodic minimal surfaces from the Weierstrass"
      " representation.",
  )
  sub = parser.add_subparsers(dest="command", required=True)
  for name, command in _COMMANDS.items():
    _add_config_flags(
        sub.add_parser(name, help=(command.__doc__ or name).splitlines()[0])
    )
  return parser


def load_config(args: argparse.Namespace) -> config_lib.RunConfig:
  """Config file values overridden by flags."""
  cfg = config_lib.load(args.config) if args.config else config_lib.RunConfig()
  overrides = {
      f.name: getattr(args, f.name) for f in dataclasses.fields(cfg)
  }
  for key in ("tiles", "sweep_re", "sweep_im"):
    if overrides[key] is not None:
      overrides[key] = tuple(overrides[key])
  return config_lib.override(cfg, **overrides)


def main(argv: Sequence[str] | None = None) -> int:
  parser = build_parser()
  try:
    args = parser.parse_args(argv)
  except SystemExit as e:
    return EXIT_OK if e.code == 0 else EXIT_USAGE
  logging.set_verbosity(logging.DEBUG if args.verbose else logging.WARNING)
  try:
    cfg = load_config(args)
    return _COMMANDS[args.command](cfg)
  except (
      exceptions.ConfigError,
      exceptions.AdmissibilityError,
      exceptions.PreconditionError,
      OSError,
  ) as e:
    print(f"error: {e}", file=sys.stderr)
    return EXIT_USAGE
  except (
      exceptions.NumericalError,
      exceptions.BranchError,
      exceptions.GeometryError,
  ) as e:
    print(f"numerical failure: {e}", file=sys.stderr)
    return EXIT_NUMERICAL


if __name__ == "__main__":
  sys.exit(main())

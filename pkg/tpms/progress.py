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

"""Progress bars and terminal summaries for CLI runs."""

from collections.abc import Iterable
from typing import Any

import tqdm

# ANSI color codes for terminal output
GREEN = "\033[92m"
RED = "\033[91m"
BOLD = "\033[1m"
RESET = "\033[0m"

BAR_COLOUR = "#4285F4"


def create_sweep_progress_bar(
    iterable: Iterable[Any], total: int, disable: bool = False
) -> tqdm.tqdm:
  """Progress bar over the points of a parameter sweep.

  Args:
    iterable: The sweep points.
    total: Number of points.
    disable: Whether to disable the progress bar.

  Returns:
    A configured tqdm progress bar.
  """
  return tqdm.tqdm(
      iterable,
      total=total,
      desc=f"{BOLD}tpms{RESET}: sweep",
      unit=" pts",
      bar_format=(
          "{desc}: {percentage:3.0f}%|{bar}| {n_fmt}/{total_fmt} [{elapsed}]"
      ),
      colour=BAR_COLOUR,
      disable=disable,
  )


def format_verdict(passed: bool, message: str) -> str:
  """A coloured one-line verdict."""
  mark = f"{GREEN}PASS{RESET}" if passed else f"{RED}FAIL{RESET}"
  return f"{mark} {message}"

"""Push-pull inhibition: subtract an opposite-contrast, spread-out copy of a cell."""

import math
from dataclasses import dataclass, replace

import numpy as np

from ppcorf.corf import CorfCell, SubUnit, SubunitMaps, rotate_set

DEFAULT_K = 1.8
# polar round-off leaves on-axis sub-units at |x| ~ 1e-16
AXIS_TOL = 1e-9


def shift_set(cell: CorfCell, beta: float) -> CorfCell:
    """Move every sub-unit ``beta / 2`` further from the cell's vertical axis.

    Sub-units left of the axis move left, right of it move right; sub-units on
    the axis stay where they are.  Polarity, LGN scale and weights are kept,
    the blur std is re-derived from the new radius.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if beta == 0:
        return cell
    moved = []
    for s in cell.subunits:
        x, y = s.x, s.y
        if abs(x) <= AXIS_TOL:
            x, gamma = 0.0, 0.0
        else:
            gamma = math.copysign(0.5 * beta, x)
        rho = math.hypot(x + gamma, y)
        phi = math.atan2(y, x + gamma)
        moved.append(replace(s, rho=rho, phi=phi, sigma_prime=cell.blur_sigma(rho)))
    return replace(cell, subunits=tuple(moved))


def pull_set(cell: CorfCell, beta: float) -> CorfCell:
    shifted = shift_set(cell, beta)
    return replace(
        shifted, subunits=tuple(replace(s, delta=-s.delta) for s in shifted.subunits)
    )


@dataclass(frozen=True)
class PushPullCell:
    push: CorfCell
    pull: CorfCell
    beta: float
    k: float = DEFAULT_K

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if len(self.pull.subunits) != len(self.push.subunits):
            raise ValueError("push and pull sets must have equal sub-unit counts")

    def rotated(self, psi: float) -> "PushPullCell":
        return replace(self, push=rotate_set(self.push, psi), pull=rotate_set(self.pull, psi))


def make_pushpull(cell: CorfCell, beta: float | None = None, k: float = DEFAULT_K) -> PushPullCell:
    """Pair ``cell`` with its pull set; ``beta`` defaults to the cell's LGN scale."""
    if beta is None:
        beta = cell.source_sigma
    return PushPullCell(cell.validate(), pull_set(cell, beta).validate(), float(beta), float(k))


def pushpull_from_maps(maps: SubunitMaps, cell: PushPullCell, rectify: bool = True) -> np.ndarray:
    push = maps.cell(cell.push)
    if cell.k == 0:
        return push
    out = push - cell.k * maps.cell(cell.pull)
    return np.maximum(out, 0.0) if rectify else out


def pushpull_response(image, cell: PushPullCell, rectify: bool = True) -> np.ndarray:
    """``push - k * pull``, half-wave rectified unless ``rectify`` is False."""
    return pushpull_from_maps(SubunitMaps(image, cell.push.source_sigma), cell, rectify)


def push_and_pull(image, cell: PushPullCell) -> tuple[np.ndarray, np.ndarray]:
    maps = SubunitMaps(image, cell.push.source_sigma)
    return maps.cell(cell.push), maps.cell(cell.pull)

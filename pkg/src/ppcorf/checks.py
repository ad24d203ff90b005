"""Built-in invariant checks run by ``ppcorf selfcheck``."""

import numpy as np

from ppcorf import reference
from ppcorf.corf import cell_response, configure, tuning_curve
from ppcorf.lgn import DogSpec, dog_kernel
from ppcorf.pushpull import make_pushpull, pushpull_response

TUNING_DEGREES = (0, 15, 30, 45, 90)


def check_dog():
    worst = 0.0
    flipped = True
    for s in (1.0, 2.5, 5.0):
        on = dog_kernel(DogSpec(s, 1))
        worst = max(worst, abs(on.sum()))
        flipped &= bool(np.array_equal(dog_kernel(DogSpec(s, -1)), -on))
    return worst <= 1e-12 and flipped, f"max |tap sum| {worst:.2e}, sign flip exact: {flipped}"


def check_oracle(size: int = 16, seed: int = 0):
    img = np.random.default_rng(seed).random((size, size))
    cell = configure(2.0)
    pp = make_pushpull(cell, beta=2.0, k=1.8)
    units = reference.cell_tuples(cell)
    lit_cell = np.array(reference.cell(img.tolist(), units, cell.weights))
    lit_pp = np.array(reference.pushpull(img.tolist(), units, cell.weights, 2.0, 1.8,
                                         cell.sigma0, cell.alpha))
    e1 = float(np.abs(lit_cell - cell_response(img, cell)).max())
    e2 = float(np.abs(lit_pp - pushpull_response(img, pp)).max())
    return max(e1, e2) <= 1e-9, f"cell err {e1:.1e}, push-pull err {e2:.1e}"


def check_tuning():
    peaks = tuning_curve(configure(2.0), TUNING_DEGREES)
    rel = peaks / peaks[0]
    ok = bool(
        peaks[0] == peaks.max()
        and np.all(np.diff(peaks[:4]) <= 0)
        and np.all(rel[3:] <= 0.05)
    )
    shown = ", ".join(f"{d}:{r:.3f}" for d, r in zip(TUNING_DEGREES, rel))
    return ok, f"relative peaks {shown}"


CHECKS = (
    ("dog-zero-sum", check_dog),
    ("oracle-equivalence-16x16", check_oracle),
    ("orientation-tuning", check_tuning),
)


def run_all():
    return [(name, *fn()) for name, fn in CHECKS]

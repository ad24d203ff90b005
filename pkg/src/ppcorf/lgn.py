"""Model LGN cells: zero-sum difference-of-Gaussians kernels and rectified responses."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ppcorf.imagecore import convolve


@dataclass(frozen=True)
class DogSpec:
    """Centre-surround receptive field.

    ``sigma`` is the std of the outer Gaussian; the inner one is ``sigma / 2``.
    ``polarity`` is +1 for centre-on, -1 for centre-off.
    """

    sigma: float
    polarity: int = 1
    truncation: float = 3.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.polarity not in (-1, 1):
            raise ValueError(f"polarity must be +1 or -1, got {self.polarity}")
        if not self.truncation >= 2:
            raise ValueError(f"truncation must be >= 2, got {self.truncation}")

    @property
    def radius(self) -> int:
        return int(math.ceil(self.truncation * self.sigma))


def dog_kernel(spec: DogSpec) -> np.ndarray:
    r = spec.radius
    off = np.arange(-r, r + 1, dtype=np.float64)
    d2 = off[None, :] ** 2 + off[:, None] ** 2
    inner = 0.5 * spec.sigma
    outer = spec.sigma
    taps = np.exp(-d2 / (2 * inner**2)) / (2 * np.pi * inner**2) - np.exp(
        -d2 / (2 * outer**2)
    ) / (2 * np.pi * outer**2)
    # the continuous DoG integrates to zero; restore that after sampling
    taps = taps - taps.mean()
    if spec.polarity < 0:
        taps = -taps
    return taps


def _gauss_1d(r: int, std: float) -> np.ndarray:
    a = np.arange(-r, r + 1, dtype=np.float64)
    return np.exp(-(a**2) / (2 * std**2)) / math.sqrt(2 * np.pi * std**2)


def lgn_signed(image, sigma: float, truncation: float = 3.0) -> np.ndarray:
    """Unrectified centre-on response; the centre-off one is its exact negative.

    Same kernel as :func:`dog_kernel`, applied as two separable Gaussians
    minus a separable box carrying the zero-sum correction.
    """
    img = np.asarray(image, dtype=np.float64)
    spec = DogSpec(sigma, 1, truncation)
    r = spec.radius
    if 2 * r + 1 > 2 * min(img.shape) + 1:
        # let the generic engine raise its dimension error
        return convolve(img, dog_kernel(spec))
    gi = _gauss_1d(r, 0.5 * sigma)
    go = _gauss_1d(r, sigma)
    n = 2 * r + 1
    mean_tap = (gi.sum() ** 2 - go.sum() ** 2) / n**2
    box = np.ones(n)

    def sep(taps):
        out = ndimage.correlate1d(img, taps, axis=0, mode="mirror")
        return ndimage.correlate1d(out, taps, axis=1, mode="mirror")

    return sep(gi) - sep(go) - mean_tap * sep(box)


def lgn_pair(image, sigma: float, truncation: float = 3.0) -> tuple[np.ndarray, np.ndarray]:
    """Rectified (centre-on, centre-off) responses from a single convolution."""
    d = lgn_signed(image, sigma, truncation)
    return np.maximum(d, 0.0), np.maximum(-d, 0.0)


def lgn_response(image, spec: DogSpec) -> np.ndarray:
    return np.maximum(convolve(image, dog_kernel(spec)), 0.0)

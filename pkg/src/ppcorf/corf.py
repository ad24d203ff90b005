"""CORF model simple cells.

A cell is a set of sub-units, each a blurred and shifted pool of centre-on or
centre-off LGN responses.  The cell response is the weighted geometric mean
of its sub-unit responses, so it behaves like a soft AND: one silent sub-unit
silences the cell.

Sub-unit positions are polar ``(rho, phi)`` about the cell centre with
``x = rho cos(phi)`` (columns, rightwards) and ``y = rho sin(phi)`` (rows,
downwards).
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from ppcorf.imagecore import as_image, mirror_pad
from ppcorf.lgn import lgn_pair

TWO_PI = 2.0 * math.pi

DEFAULT_RADIUS_FACTORS = (1.0, 2.0)
DEFAULT_ALPHA = 0.1
DEFAULT_SIGMA0_FACTOR = 0.25
DEFAULT_THRESHOLD = 0.2
NMS_HALF_WINDOW_DEG = 5


class ConfigurationError(RuntimeError):
    """No usable sub-units could be found on the configuration stimulus."""


def wrap_angle(phi: float) -> float:
    phi = math.fmod(phi, TWO_PI)
    if phi < 0:
        phi += TWO_PI
    # fmod of a value just below 0 can round up to exactly 2*pi
    return 0.0 if phi >= TWO_PI else phi


@dataclass(frozen=True)
class SubUnit:
    delta: int
    sigma: float
    rho: float
    phi: float
    sigma_prime: float

    def __post_init__(self):
        if self.delta not in (-1, 1):
            raise ValueError(f"delta must be +1 or -1, got {self.delta}")
        if self.rho < 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        if not self.sigma_prime > 0:
            raise ValueError(f"sigma_prime must be > 0, got {self.sigma_prime}")
        object.__setattr__(self, "phi", wrap_angle(self.phi))

    @property
    def x(self) -> float:
        return self.rho * math.cos(self.phi)

    @property
    def y(self) -> float:
        return self.rho * math.sin(self.phi)

    def offset(self) -> tuple[int, int]:
        """Integer pixel offset ``(dx, dy)`` of the sub-unit from the cell centre."""
        return int(np.rint(self.x)), int(np.rint(self.y))


@dataclass(frozen=True)
class CorfCell:
    subunits: tuple
    weights: tuple
    preferred_orientation: float = 0.0
    source_sigma: float = 1.0
    # blur law sigma' = sigma0 + alpha * rho, kept so re-positioned sets stay consistent
    sigma0: float = field(default=DEFAULT_SIGMA0_FACTOR)
    alpha: float = field(default=DEFAULT_ALPHA)

    def __post_init__(self):
        object.__setattr__(self, "subunits", tuple(self.subunits))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(
            self, "preferred_orientation", wrap_angle(self.preferred_orientation)
        )

    def validate(self) -> "CorfCell":
        if len(self.subunits) < 2 or len(self.subunits) != len(self.weights):
            raise ValueError("a cell needs >= 2 sub-units and one weight per sub-unit")
        if not all(w > 0 and math.isfinite(w) for w in self.weights):
            raise ValueError("sub-unit weights must be positive and finite")
        polarities = {s.delta for s in self.subunits}
        if polarities != {-1, 1}:
            raise ValueError("a cell needs both centre-on and centre-off sub-units")
        return self

    def blur_sigma(self, rho: float) -> float:
        return self.sigma0 + self.alpha * rho

    def to_dict(self) -> dict:
        return {
            "source_sigma": self.source_sigma,
            "preferred_orientation": self.preferred_orientation,
            "subunits": [
                {
                    "delta": s.delta,
                    "sigma": s.sigma,
                    "rho": s.rho,
                    "phi": s.phi,
                    "sigma_prime": s.sigma_prime,
                }
                for s in self.subunits
            ],
            "weights": list(self.weights),
            "sigma0": self.sigma0,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorfCell":
        src = float(d["source_sigma"])
        subunits = [
            SubUnit(int(s["delta"]), float(s["sigma"]), float(s["rho"]),
                    float(s["phi"]), float(s["sigma_prime"]))
            for s in d["subunits"]
        ]
        return cls(
            subunits,
            d["weights"],
            float(d.get("preferred_orientation", 0.0)),
            src,
            float(d.get("sigma0", DEFAULT_SIGMA0_FACTOR * src)),
            float(d.get("alpha", DEFAULT_ALPHA)),
        ).validate()


def gaussian_weights(rhos) -> tuple:
    """Weights decaying with distance from the centre, std one third of the largest radius."""
    rhos = np.asarray(rhos, dtype=np.float64)
    spread = rhos.max() / 3.0
    if spread <= 0:
        return tuple(1.0 for _ in rhos)
    return tuple(float(w) for w in np.exp(-(rhos**2) / (2.0 * spread**2)))


def edge_stimulus(size: int, angle: float = 0.0, contrast: float = 1.0) -> np.ndarray:
    """Square image of a straight step edge through the image centre.

    At ``angle=0`` the edge is vertical with the bright side on the right;
    ``angle`` rotates the bright-side normal towards +y.  Pixels are
    ``0.5 + contrast * clip(d, -0.5, 0.5)`` for the signed distance ``d`` of
    the pixel centre from the edge.  For odd sizes the upright edge has one
    mid-grey centre column; for even sizes it is a crisp two-level step.
    Either way the stimulus is antisymmetric about the centre.
    """
    if size < 2:
        raise ValueError("edge stimulus size must be >= 2")
    c = 0.5 * (size - 1)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    d = (xx - c) * math.cos(angle) + (yy - c) * math.sin(angle)
    return 0.5 + contrast * np.clip(d, -0.5, 0.5)


def _circle_maxima(values: np.ndarray, threshold: float) -> list[int]:
    peak = values.max()
    if peak <= 0:
        return []
    n = len(values)
    keep = []
    for j in range(n):
        v = values[j]
        if v < threshold * peak:
            continue
        before = [values[(j - k) % n] for k in range(1, NMS_HALF_WINDOW_DEG + 1)]
        after = [values[(j + k) % n] for k in range(1, NMS_HALF_WINDOW_DEG + 1)]
        # strict on one side so a flat top yields one maximum
        if all(v > b for b in before) and all(v >= a for a in after):
            keep.append(j)
    return keep


def configure(
    sigma: float,
    radius_factors=DEFAULT_RADIUS_FACTORS,
    threshold: float = DEFAULT_THRESHOLD,
    sigma0: float | None = None,
    alpha: float = DEFAULT_ALPHA,
    truncation: float = 3.0,
) -> CorfCell:
    """Configure a vertical-edge-selective cell at LGN scale ``sigma``.

    ``radius_factors`` give the concentric circle radii in units of ``sigma``.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    radii = [float(f) * sigma for f in radius_factors]
    if not radii or min(radii) <= 0:
        raise ValueError("radius factors must be positive")
    if sigma0 is None:
        sigma0 = DEFAULT_SIGMA0_FACTOR * sigma

    half = int(math.ceil(max(radii) + truncation * sigma)) + 2
    size = 2 * half + 1
    on, off = lgn_pair(edge_stimulus(size), sigma, truncation)

    theta = np.deg2rad(np.arange(360))
    found = []
    for rho in radii:
        cols = half + rho * np.cos(theta)
        rows = half + rho * np.sin(theta)
        for delta, resp in ((1, on), (-1, off)):
            samples = ndimage.map_coordinates(resp, [rows, cols], order=1, mode="mirror")
            for j in _circle_maxima(samples, threshold):
                found.append((delta, rho, float(theta[j])))

    if not found:
        raise ConfigurationError(f"no sub-unit maxima found at sigma={sigma}")
    subunits = [SubUnit(d, sigma, rho, phi, sigma0 + alpha * rho) for d, rho, phi in found]
    cell = CorfCell(
        subunits,
        gaussian_weights([s.rho for s in subunits]),
        0.0,
        float(sigma),
        float(sigma0),
        float(alpha),
    )
    try:
        return cell.validate()
    except ValueError as exc:
        raise ConfigurationError(f"sigma={sigma}: {exc}") from exc


def rotate_set(cell: CorfCell, psi: float) -> CorfCell:
    subunits = [replace(s, phi=s.phi + psi) for s in cell.subunits]
    return replace(
        cell,
        subunits=tuple(subunits),
        preferred_orientation=cell.preferred_orientation + psi,
    )


def gaussian_taps_1d(sigma_prime: float) -> np.ndarray:
    """Unit-sum sampled Gaussian over integer offsets ``|a| <= 3 sigma'``."""
    r = int(math.floor(3.0 * sigma_prime))
    a = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(a**2) / (2.0 * sigma_prime**2))
    return g / g.sum()


def blur(response: np.ndarray, sigma_prime: float) -> np.ndarray:
    g = gaussian_taps_1d(sigma_prime)
    if len(g) == 1:
        return np.array(response, dtype=np.float64, copy=True)
    out = ndimage.correlate1d(response, g, axis=0, mode="mirror")
    return ndimage.correlate1d(out, g, axis=1, mode="mirror")


def shift(response: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """``out[y, x] = ext(response)[y + dy, x + dx]`` with mirror extension."""
    if dx == 0 and dy == 0:
        return response
    m = max(abs(dx), abs(dy))
    p = mirror_pad(response, m)
    h, w = response.shape
    return p[m + dy : m + dy + h, m + dx : m + dx + w]


def subunit_response(on_map, off_map, s: SubUnit) -> np.ndarray:
    on_map = np.asarray(on_map, dtype=np.float64)
    off_map = np.asarray(off_map, dtype=np.float64)
    if on_map.shape != off_map.shape:
        raise ValueError(f"map shapes differ: {on_map.shape} vs {off_map.shape}")
    src = on_map if s.delta > 0 else off_map
    dx, dy = s.offset()
    return shift(blur(src, s.sigma_prime), dx, dy)


class SubunitMaps:
    """Blurred LGN maps for one image and one LGN scale, memoised by ``(delta, sigma')``.

    Rotated copies of a cell differ only in sub-unit offsets, so a whole
    orientation sweep reuses the same few blurs.  Log-maps are kept
    mirror-padded so each sub-unit of each orientation is a plain slice.
    """

    def __init__(self, image, sigma: float, truncation: float = 3.0):
        self.on, self.off = lgn_pair(as_image(image), sigma, truncation)
        self._blurred: dict = {}
        self._logs: dict = {}

    def blurred(self, delta: int, sigma_prime: float) -> np.ndarray:
        key = (delta, sigma_prime)
        if key not in self._blurred:
            self._blurred[key] = blur(self.on if delta > 0 else self.off, sigma_prime)
        return self._blurred[key]

    def response(self, s: SubUnit) -> np.ndarray:
        dx, dy = s.offset()
        return shift(self.blurred(s.delta, s.sigma_prime), dx, dy)

    def _padded_log(self, delta: int, sigma_prime: float, margin: int):
        key = (delta, sigma_prime)
        hit = self._logs.get(key)
        if hit is None or hit[0] < margin:
            with np.errstate(divide="ignore"):
                logs = np.log(self.blurred(delta, sigma_prime))
            hit = (margin, mirror_pad(logs, margin))
            self._logs[key] = hit
        return hit

    def cell(self, cell: CorfCell) -> np.ndarray:
        """Weighted geometric mean of the cell's sub-unit responses."""
        h, w = self.on.shape
        offsets = [s.offset() for s in cell.subunits]
        margin = max(max(abs(dx), abs(dy)) for dx, dy in offsets)
        acc = np.zeros((h, w))
        for s, (dx, dy), wt in zip(cell.subunits, offsets, cell.weights):
            m, padded = self._padded_log(s.delta, s.sigma_prime, margin)
            acc += wt * padded[m + dy : m + dy + h, m + dx : m + dx + w]
        return np.exp(acc / float(sum(cell.weights)))


def weighted_geometric_mean(maps, weights) -> np.ndarray:
    """``(prod s_i**w_i) ** (1 / sum w_i)``, exactly 0 wherever any ``s_i`` is 0."""
    total = float(sum(weights))
    acc = np.zeros_like(np.asarray(maps[0], dtype=np.float64))
    with np.errstate(divide="ignore"):
        for m, w in zip(maps, weights):
            acc += w * np.log(m)
    return np.exp(acc / total)


def cell_response(image, cell: CorfCell) -> np.ndarray:
    cell.validate()
    return SubunitMaps(image, cell.source_sigma).cell(cell)


def orientation_superposition(maps) -> np.ndarray:
    maps = [np.asarray(m, dtype=np.float64) for m in maps]
    if not maps:
        raise ValueError("need at least one response map")
    shape = maps[0].shape
    if any(m.shape != shape for m in maps):
        raise ValueError("response maps must share one shape")
    if len(maps) == 1:
        return maps[0].copy()
    return np.maximum.reduce(maps)


def tuning_curve(cell: CorfCell, degrees, size: int = 80) -> np.ndarray:
    """Peak response on the upright edge of copies of ``cell`` rotated by ``degrees``."""
    stim = edge_stimulus(size)
    maps = SubunitMaps(stim, cell.source_sigma)
    return np.array([maps.cell(rotate_set(cell, math.radians(d))).max() for d in degrees])

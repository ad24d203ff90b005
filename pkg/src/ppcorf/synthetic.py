"""Seeded synthetic images: the oriented-bar dataset and the fixture suite."""

import math

import numpy as np

from ppcorf.corf import edge_stimulus

BAR_ORIENTATIONS_DEG = (0.0, 60.0, 120.0)


def bar_texture(
    rng: np.random.Generator,
    orientation_deg: float,
    size: int = 32,
    period: float = 8.0,
    width: float = 3.0,
    noise: float = 0.05,
) -> np.ndarray:
    """Grating of parallel bars with random phase, polarity and contrast.

    ``orientation_deg`` is the direction of the bars' long axis, measured
    from the +x axis towards +y.
    """
    normal = math.radians(orientation_deg) + 0.5 * math.pi
    c = 0.5 * (size - 1)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    u = (xx - c) * math.cos(normal) + (yy - c) * math.sin(normal)
    u = u + rng.uniform(0.0, period)
    m = np.mod(u + 0.5 * width, period)
    # one-pixel ramps at both bar borders
    cover = np.clip(np.minimum(m + 0.5, width + 0.5 - m), 0.0, 1.0)
    polarity = rng.choice((-1.0, 1.0))
    contrast = rng.uniform(0.5, 1.0)
    img = 0.5 + polarity * contrast * (cover - 0.5) + rng.normal(0.0, noise, (size, size))
    return np.clip(img, 0.0, 1.0)


def oriented_bars_dataset(n_per_class: int = 300, size: int = 32, seed: int = 7):
    """Three classes of bar textures (0, 60, 120 degrees), shuffled.

    Returns ``(images, labels)`` with ``images`` of shape ``(n, size, size)``.
    """
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for label, deg in enumerate(BAR_ORIENTATIONS_DEG):
        for _ in range(n_per_class):
            images.append(bar_texture(rng, deg, size))
            labels.append(label)
    order = rng.permutation(len(labels))
    return np.stack(images)[order], np.asarray(labels, dtype=np.int64)[order]


def binary_noise(size: int = 64, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return (rng.random((size, size)) < 0.5).astype(np.float64)


def _disk(size, radius, soft=1.0):
    c = 0.5 * (size - 1)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    r = np.hypot(xx - c, yy - c)
    return np.clip((radius - r) / soft + 0.5, 0.0, 1.0)


def cross_stimulus(size: int = 33, arm: int = 2) -> np.ndarray:
    """Bright X: two thin bars crossing at the centre at +-45 degrees."""
    c = 0.5 * (size - 1)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    d1 = np.abs((xx - c) - (yy - c)) / math.sqrt(2)
    d2 = np.abs((xx - c) + (yy - c)) / math.sqrt(2)
    bar = np.clip(arm + 0.5 - np.minimum(d1, d2), 0.0, 1.0)
    return 0.1 + 0.8 * bar


def fixture_suite(size: int = 32) -> dict:
    """Ten deterministic test images covering edges, lines, blobs and textures."""
    rng = np.random.default_rng(2024)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = 0.5 * (size - 1)
    suite = {
        "edge_vertical": edge_stimulus(size, 0.0),
        "edge_oblique": edge_stimulus(size, math.radians(30.0)),
        "disk": 0.15 + 0.7 * _disk(size, size / 4),
        "cross": cross_stimulus(size),
        "bars_0": bar_texture(rng, 0.0, size, noise=0.0),
        "bars_60": bar_texture(rng, 60.0, size, noise=0.0),
        "checker": 0.2 + 0.6 * (((xx // 8) + (yy // 8)) % 2),
        "ring": 0.2 + 0.6 * np.clip(2.5 - np.abs(np.hypot(xx - c, yy - c) - size / 3), 0, 1),
        "square": 0.2 + 0.6 * ((np.abs(xx - c) < size / 4) & (np.abs(yy - c) < size / 4)),
        "gradient_blob": np.clip(0.3 + 0.4 * xx / size + 0.3 * _disk(size, size / 6, 3.0), 0, 1),
    }
    return {k: np.clip(v, 0.0, 1.0).astype(np.float64) for k, v in suite.items()}

"""Gaussian pixel-noise corruption and feature-level robustness sweeps."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ppcorf.bank import FilterBank, apply_bank
from ppcorf.imagecore import as_image

RNG_NAME = "numpy.random.PCG64(SeedSequence)"


@dataclass(frozen=True)
class NoiseSpec:
    sigma_noise: float
    percent: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma_noise >= 0:
            raise ValueError(f"sigma_noise must be >= 0, got {self.sigma_noise}")
        if not 0 <= self.percent <= 1:
            raise ValueError(f"percent must lie in [0, 1], got {self.percent}")


def make_rng(seed: int, *grid_index: int) -> np.random.Generator:
    """Independent PCG64 stream for ``seed`` mixed with optional grid indices."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *grid_index])))


def noise_deltas(shape, spec: NoiseSpec) -> np.ndarray:
    """Unclamped additive noise: ``floor(percent * N)`` distinct pixels get N(0, sigma^2)."""
    n = int(np.prod(shape))
    count = int(math.floor(spec.percent * n + 1e-9))
    rng = make_rng(spec.seed)
    deltas = np.zeros(n)
    picked = rng.choice(n, size=count, replace=False)
    deltas[picked] = rng.normal(0.0, spec.sigma_noise, size=count)
    return deltas.reshape(shape)


def corrupt(image, spec: NoiseSpec) -> np.ndarray:
    img = as_image(image)
    if spec.percent == 0 or spec.sigma_noise == 0:
        return img.copy()
    return np.clip(img + noise_deltas(img.shape, spec), 0.0, 1.0)


def feature_stability(clean, noisy) -> float:
    """Cosine similarity of the flattened tensors; 1 when both are all zero."""
    a = np.asarray(getattr(clean, "data", clean), dtype=np.float64)
    b = np.asarray(getattr(noisy, "data", noisy), dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"tensor shapes differ: {a.shape} vs {b.shape}")
    a = a.ravel()
    b = b.ravel()
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def parse_percents(text: str) -> list[float]:
    """``"10..100:10"`` or ``"10,50,100"`` (percent units) to fractions."""
    text = text.strip()
    if ".." in text:
        span, _, step = text.partition(":")
        lo, hi = (float(v) for v in span.split(".."))
        step = float(step) if step else 10.0
        if step <= 0 or hi < lo:
            raise ValueError(f"bad percent range {text!r}")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        vals = [lo + i * step for i in range(n)]
    else:
        vals = [float(v) for v in text.split(",") if v.strip()]
    if any(v < 0 or v > 100 for v in vals):
        raise ValueError("percents must lie in [0, 100]")
    return [round(v / 100.0, 10) for v in vals]


def sweep(images: dict, bank: FilterBank, sigmas, percents, seed: int = 42, threads: int = 1):
    """Clean-vs-noisy feature stability for every image, noise level and coverage.

    Each (image, sigma, percent) cell draws from its own stream seeded by
    ``seed`` mixed with the three grid indices.  Rows come back in grid order.
    """
    names = list(images)
    clean = {name: apply_bank(images[name], bank) for name in names}
    cells = [
        (ii, si, pi)
        for ii in range(len(names))
        for si in range(len(sigmas))
        for pi in range(len(percents))
    ]

    def run(cell):
        ii, si, pi = cell
        name = names[ii]
        cell_seed = int(np.random.SeedSequence([seed, ii, si, pi]).generate_state(1, np.uint64)[0])
        spec = NoiseSpec(float(sigmas[si]), float(percents[pi]), cell_seed)
        noisy = apply_bank(corrupt(images[name], spec), bank)
        return {
            "image": name,
            "sigma_noise": spec.sigma_noise,
            "percent": spec.percent,
            "stability": feature_stability(clean[name], noisy),
            "clean_peak": float(clean[name].data.max()),
            "noisy_peak": float(noisy.data.max()),
        }

    if threads <= 1:
        return [run(c) for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, cells))


def mean_curves(rows) -> dict:
    """``{sigma_noise: [(percent, mean stability), ...]}`` averaged over images."""
    acc: dict = {}
    for r in rows:
        acc.setdefault(r["sigma_noise"], {}).setdefault(r["percent"], []).append(r["stability"])
    return {
        s: sorted((p, float(np.mean(v))) for p, v in by_p.items())
        for s, by_p in sorted(acc.items())
    }

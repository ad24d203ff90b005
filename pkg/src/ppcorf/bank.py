"""Multi-scale, multi-orientation push-pull CORF filter bank and its tensor file format.

Tensor file layout (little-endian)::

    b"CORF"  u32 version=1  u32 height  u32 width  u32 channels
    float32[channels][height][width]
"""

import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from ppcorf._io import atomic_write
from ppcorf.corf import ConfigurationError, SubunitMaps, configure, CorfCell
from ppcorf.imagecore import as_image
from ppcorf.pushpull import DEFAULT_K, PushPullCell, make_pushpull, pushpull_from_maps

MAGIC = b"CORF"
VERSION = 1
HEADER = struct.Struct("<4sIIII")


def sigma_grid(start: float = 1.0, end: float = 5.0, step: float = 0.25) -> tuple:
    if step <= 0 or end < start:
        raise ValueError("sigma grid needs step > 0 and end >= start")
    n = int(math.floor((end - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 10) for i in range(n))


def orientation_grid(count: int = 12) -> tuple:
    """``count`` orientations evenly covering [0, 2 pi)."""
    if count < 1:
        raise ValueError("need at least one orientation")
    return tuple(2.0 * math.pi * i / count for i in range(count))


DEFAULT_SIGMAS = sigma_grid()
DEFAULT_ORIENTATIONS = orientation_grid(12)


def resolve_beta(policy, sigma: float) -> float:
    """``"auto"`` separates by one LGN scale; a number is a fixed separation in pixels."""
    if policy in (None, "auto"):
        return float(sigma)
    beta = float(policy)
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return beta


@dataclass(frozen=True)
class FilterBank:
    sigmas: tuple
    orientations: tuple
    k: float
    beta_policy: object
    cells: tuple = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.sigmas, dtype=float)
        o = np.asarray(self.orientations, dtype=float)
        if s.size == 0 or np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise ValueError("sigmas must be positive and strictly increasing")
        if o.size == 0 or np.any(o < 0) or np.any(o >= 2 * math.pi) or np.any(np.diff(o) <= 0):
            raise ValueError("orientations must be strictly increasing within [0, 2 pi)")
        if len(self.cells) != len(self.sigmas):
            raise ValueError("one configured cell per sigma is required")

    @cached_property
    def rotated_cells(self) -> tuple:
        """Per scale, the push-pull cell rotated to every bank orientation."""
        return tuple(tuple(c.rotated(psi) for psi in self.orientations) for c in self.cells)

    def with_k(self, k: float) -> "FilterBank":
        cells = tuple(PushPullCell(c.push, c.pull, c.beta, float(k)) for c in self.cells)
        return FilterBank(self.sigmas, self.orientations, float(k), self.beta_policy, cells)

    def with_lgn_sigma(self, sigmas) -> "FilterBank":
        """Same sub-unit positions, different LGN scales (the trainable parameter)."""
        cells = []
        for c, s in zip(self.cells, sigmas):
            push = _relabel_sigma(c.push, s)
            pull = _relabel_sigma(c.pull, s)
            cells.append(PushPullCell(push, pull, c.beta, c.k))
        return FilterBank(self.sigmas, self.orientations, self.k, self.beta_policy, tuple(cells))

    def to_dict(self) -> dict:
        return {
            "sigmas": list(self.sigmas),
            "orientations": list(self.orientations),
            "k": self.k,
            "beta_policy": self.beta_policy,
            "cells": [
                {"beta": c.beta, "k": c.k, "push": c.push.to_dict(), "pull": c.pull.to_dict()}
                for c in self.cells
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "FilterBank":
        cells = tuple(
            PushPullCell(CorfCell.from_dict(c["push"]), CorfCell.from_dict(c["pull"]),
                         float(c["beta"]), float(c["k"]))
            for c in d["cells"]
        )
        return cls(tuple(d["sigmas"]), tuple(d["orientations"]), float(d["k"]),
                   d["beta_policy"], cells)


def _relabel_sigma(cell: CorfCell, sigma: float) -> CorfCell:
    return replace(
        cell,
        source_sigma=float(sigma),
        subunits=tuple(replace(s, sigma=float(sigma)) for s in cell.subunits),
    )


def build_bank(
    sigmas=DEFAULT_SIGMAS,
    orientations=DEFAULT_ORIENTATIONS,
    k: float = DEFAULT_K,
    beta_policy="auto",
    **configure_kwargs,
) -> FilterBank:
    sigmas = tuple(float(s) for s in sigmas)
    orientations = tuple(float(o) for o in orientations)
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    cells = []
    for s in sigmas:
        try:
            cell = configure(s, **configure_kwargs)
        except (ConfigurationError, ValueError) as exc:
            raise ConfigurationError(f"bank configuration failed at sigma={s}: {exc}") from exc
        cells.append(make_pushpull(cell, resolve_beta(beta_policy, s), k))
    return FilterBank(sigmas, orientations, float(k), beta_policy, tuple(cells))


@dataclass(frozen=True)
class FeatureTensor:
    """Channel-major ``(channels, height, width)`` float32 features."""

    data: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.data, dtype="<f4")
        if a.ndim != 3:
            raise ValueError(f"feature tensor must be 3-D, got shape {a.shape}")
        object.__setattr__(self, "data", a)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def to_bytes(self) -> bytes:
        return HEADER.pack(MAGIC, VERSION, self.height, self.width, self.channels) + self.data.tobytes()

    @classmethod
    def from_bytes(cls, buf: bytes) -> "FeatureTensor":
        if len(buf) < HEADER.size:
            raise ValueError("truncated tensor header")
        magic, version, h, w, c = HEADER.unpack_from(buf)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"unsupported tensor format version {version}")
        n = c * h * w
        if len(buf) != HEADER.size + 4 * n:
            raise ValueError(f"payload is {len(buf) - HEADER.size} bytes, expected {4 * n}")
        data = np.frombuffer(buf, dtype="<f4", count=n, offset=HEADER.size).reshape(c, h, w)
        return cls(data.copy())


def channel_response(image, rotated_cells, rectify: bool = True) -> np.ndarray:
    """Pixel-wise max over one scale's per-orientation push-pull responses."""
    maps = SubunitMaps(image, rotated_cells[0].push.source_sigma)
    out = None
    for cell in rotated_cells:
        r = pushpull_from_maps(maps, cell, rectify)
        out = r if out is None else np.maximum(out, r)
    return out


def response_stack(image, bank: FilterBank, threads: int = 1, rectify: bool = True) -> np.ndarray:
    """Float64 ``(C, H, W)`` responses, before the float32 export cast."""
    img = as_image(image)

    def one(cells):
        return channel_response(img, cells, rectify)

    if threads <= 1 or len(bank.cells) == 1:
        planes = [one(c) for c in bank.rotated_cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            planes = list(pool.map(one, bank.rotated_cells))
    return np.stack(planes)


def apply_bank(image, bank: FilterBank, threads: int = 1, rectify: bool = True) -> FeatureTensor:
    return FeatureTensor(response_stack(image, bank, threads, rectify).astype("<f4"))


def apply_bank_many(images, bank: FilterBank, threads: int = 1) -> list:
    """Features for several images; parallel across images, order preserved."""
    if threads <= 1:
        return [apply_bank(im, bank) for im in images]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda im: apply_bank(im, bank), images))


def export_tensor(tensor: FeatureTensor, path) -> None:
    with atomic_write(path) as fh:
        fh.write(tensor.to_bytes())


def import_tensor(path) -> FeatureTensor:
    return FeatureTensor.from_bytes(Path(path).read_bytes())

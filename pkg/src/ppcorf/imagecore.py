"""Image arrays, 8-bit image I/O and the mirror-padded convolution engine.

Images and response maps are plain 2-D ``float64`` numpy arrays indexed
``[row, col]``; ``x`` is the column and ``y`` the row throughout the package.
Kernels are square arrays of odd side, applied correlation-style (no flip).
"""

import io
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from scipy import ndimage

from ppcorf._io import atomic_write

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageFormatError(ValueError):
    """Unsupported pixel format or bit depth."""


def as_image(data) -> np.ndarray:
    """Validate and return ``data`` as a float64 intensity image in [0, 1]."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image must be a non-empty 2-D array, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image intensities must lie in [0, 1]")
    return img


def as_kernel(taps) -> np.ndarray:
    k = np.asarray(taps, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
        raise ValueError(f"kernel must be square with odd side, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValueError("kernel taps must be finite")
    return k


def convolve(image, kernel) -> np.ndarray:
    """Correlate ``image`` with ``kernel`` using mirror (no edge repeat) padding.

    ``out[y, x] = sum_{u,v} ext(image)[y + v, x + u] * kernel[r + v, r + u]``
    where ``r`` is the kernel radius. The output has the input's shape.
    """
    img = np.asarray(image, dtype=np.float64)
    k = as_kernel(kernel)
    side = k.shape[0]
    if img.ndim != 2:
        raise ValueError("convolve expects a 2-D image")
    if side > 2 * min(img.shape) + 1:
        raise ValueError(
            f"kernel side {side} too large for {img.shape[1]}x{img.shape[0]} image"
        )
    if side == 1:
        return img * k[0, 0]
    # scipy's "mirror" is reflection about the edge pixel centre
    return ndimage.correlate(img, k, mode="mirror")


def mirror_pad(arr: np.ndarray, margin: int) -> np.ndarray:
    """Mirror-extend ``arr`` by ``margin`` pixels on every side."""
    if margin <= 0:
        return arr
    return np.pad(arr, margin, mode="reflect")


def load_grayscale(path) -> np.ndarray:
    """Read an 8-bit PNG or binary PGM as a float64 image in [0, 1].

    RGB(A) inputs are reduced with fixed luma weights 0.299/0.587/0.114;
    alpha is ignored.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    try:
        pil = PILImage.open(path)
        pil.load()
    except (OSError, SyntaxError) as exc:
        raise ImageFormatError(f"{path}: {exc}") from exc
    if pil.format not in ("PNG", "PPM"):
        raise ImageFormatError(f"{path}: unsupported format {pil.format}")
    if pil.mode == "P":
        pil = pil.convert("RGBA" if "transparency" in pil.info else "RGB")
    if pil.mode in ("L", "LA"):
        arr = np.asarray(pil, dtype=np.float64)
        if arr.ndim == 3:
            arr = arr[..., 0]
    elif pil.mode in ("RGB", "RGBA"):
        rgb = np.asarray(pil, dtype=np.float64)[..., :3]
        r, g, b = LUMA_WEIGHTS
        arr = r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]
    else:
        raise ImageFormatError(f"{path}: unsupported pixel mode {pil.mode!r} (need 8-bit)")
    return arr / 255.0


def to_uint8(values) -> np.ndarray:
    """Clamp to [0, 1] and scale to 0..255 rounding half up."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def save_map(values, path) -> None:
    """Write values in [0, 1] as an 8-bit PNG or PGM (chosen by suffix)."""
    path = Path(path)
    data = to_uint8(values)
    suffix = path.suffix.lower()
    buf = io.BytesIO()
    if suffix == ".pgm":
        h, w = data.shape
        buf.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        buf.write(data.tobytes())
    elif suffix == ".png":
        PILImage.fromarray(data, mode="L").save(buf, format="PNG")
    else:
        raise ImageFormatError(f"cannot write {suffix!r}; use .png or .pgm")
    with atomic_write(path) as fh:
        fh.write(buf.getvalue())


def rescale(values) -> tuple[np.ndarray, float]:
    """Linearly map ``values`` onto [0, 1] by their max; return (scaled, scale)."""
    v = np.asarray(values, dtype=np.float64)
    peak = float(v.max()) if v.size else 0.0
    if peak <= 0.0:
        return np.zeros_like(v), 0.0
    return v / peak, peak

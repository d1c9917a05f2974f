"""Image arrays and lossless file I/O.

Images are ``float64`` arrays of shape ``(H, W, 3)`` with values in [0, 1].
Files are 8-bit RGB PNGs written with fixed encoder settings.
"""

import io
from pathlib import Path

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .errors import InvalidImage, MissingFile, UnreadableImage

MIN_SIDE = 8


def check_image(pixels) -> np.ndarray:
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidImage(f"expected an (H, W, 3) array, got shape {arr.shape}")
    if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
        raise InvalidImage(f"image sides must be >= {MIN_SIDE}, got {arr.shape[:2]}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise InvalidImage("pixel values must lie in [0, 1]")
    return arr


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(pixels * 255.0), 0, 255).astype(np.uint8)


def encode_png(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    PILImage.fromarray(to_uint8(pixels), mode="RGB").save(buf, format="PNG", compress_level=6, optimize=False)
    return buf.getvalue()


def save_png(pixels: np.ndarray, path) -> None:
    Path(path).write_bytes(encode_png(pixels))


def decode_image(data: bytes) -> np.ndarray:
    try:
        with PILImage.open(io.BytesIO(data)) as im:
            im.load()
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise UnreadableImage(f"cannot decode image: {exc}") from None
    if rgb.shape[0] < MIN_SIDE or rgb.shape[1] < MIN_SIDE:
        raise UnreadableImage(f"image too small: {rgb.shape[:2]}")
    return rgb


def load_image(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"image not found: {path}")
    return decode_image(path.read_bytes())

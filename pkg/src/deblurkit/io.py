"""PNG and TIFF reading/writing with unit-range float64 inside.

PNG goes through Pillow (8-bit gray/RGB, 16-bit gray), TIFF through
tifffile (8- or 16-bit gray/RGB).  Alpha channels are dropped on read.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import tifffile
from PIL import Image as PILImage

from .errors import DeblurError

PNG_SUFFIXES = (".png",)
TIFF_SUFFIXES = (".tif", ".tiff")
SUPPORTED_SUFFIXES = PNG_SUFFIXES + TIFF_SUFFIXES


class ImageIOError(DeblurError, OSError):
    pass


@dataclass(frozen=True, eq=False)
class Image:
    data: np.ndarray  # (H, W) or (H, W, 3), float64 in [0, 1]
    bit_depth: int

    @property
    def channels(self):
        return 1 if self.data.ndim == 2 else self.data.shape[-1]


def _from_integer(arr):
    if arr.dtype == np.uint8:
        depth = 8
    elif arr.dtype == np.uint16:
        depth = 16
    else:
        raise ImageIOError(f"unsupported sample type {arr.dtype}; need 8- or 16-bit unsigned")
    if arr.ndim == 3:
        if arr.shape[-1] in (2, 4):  # drop alpha
            arr = arr[..., :-1]
        if arr.shape[-1] == 1:
            arr = arr[..., 0]
        elif arr.shape[-1] != 3:
            raise ImageIOError(f"unsupported channel layout {arr.shape}")
    elif arr.ndim != 2:
        raise ImageIOError(f"unsupported image shape {arr.shape}")
    return Image(arr.astype(np.float64) / (2**depth - 1), depth)


def _read_png(path):
    with PILImage.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im)
            if arr.dtype != np.uint16:
                arr = np.clip(arr, 0, 65535).astype(np.uint16)
        elif im.mode in ("L", "RGB"):
            arr = np.asarray(im)
        elif im.mode in ("LA", "RGBA", "P", "1"):
            arr = np.asarray(im.convert("RGB" if im.mode in ("RGBA", "P") else "L"))
        else:
            raise ImageIOError(f"unsupported PNG mode {im.mode}")
    return arr


def read_image(path):
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in SUPPORTED_SUFFIXES:
        raise ImageIOError(f"unsupported file type {suffix!r} for {path}")
    try:
        arr = tifffile.imread(path) if suffix in TIFF_SUFFIXES else _read_png(path)
    except ImageIOError:
        raise
    except Exception as exc:  # library-specific decode errors
        raise ImageIOError(f"cannot read {path}: {exc}") from exc
    return _from_integer(np.asarray(arr))


def to_integer(data, bit_depth):
    if bit_depth not in (8, 16):
        raise ImageIOError(f"bit depth must be 8 or 16, got {bit_depth}")
    top = 2**bit_depth - 1
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    arr = np.asarray(data)
    if np.issubdtype(arr.dtype, np.integer):
        # integer input is taken as already-quantized codes, not unit-range values
        if arr.size and (arr.min() < 0 or arr.max() > top):
            raise ImageIOError(f"integer codes outside [0, {top}] for {bit_depth}-bit output")
        return arr.astype(dtype)
    return np.round(np.clip(np.asarray(data, dtype=np.float64), 0.0, 1.0) * top).astype(dtype)


def write_image(path, data, bit_depth=8):
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in SUPPORTED_SUFFIXES:
        raise ImageIOError(f"unsupported file type {suffix!r} for {path}")
    arr = to_integer(data, bit_depth)
    try:
        if suffix in TIFF_SUFFIXES:
            tifffile.imwrite(path, arr, photometric="rgb" if arr.ndim == 3 else "minisblack")
        elif bit_depth == 16:
            if arr.ndim != 2:
                raise ImageIOError("16-bit PNG output supports grayscale only; use TIFF for RGB")
            PILImage.fromarray(arr).save(path)  # saved as I;16
        else:
            PILImage.fromarray(arr).save(path)
    except ImageIOError:
        raise
    except Exception as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc

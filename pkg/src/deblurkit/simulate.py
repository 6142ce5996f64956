"""Forward blur model and synthetic test images.

Noise streams come from NumPy's PCG64 bit generator seeded with the given
integer; normals are drawn with ``Generator.standard_normal``.
"""

import numpy as np

from .errors import InvalidArgumentError
from .kernels import sample_gg_kernel
from .pipeline import separable_convolve


def rng_for(seed):
    return np.random.Generator(np.random.PCG64(seed))


def simulate(image, psf, noise_sigma=0.0, seed=0, clip=True):
    """Separable blur with ``psf`` followed by additive white Gaussian noise."""
    if noise_sigma < 0:
        raise InvalidArgumentError("noise_sigma must be non-negative")
    arr = np.asarray(image, dtype=np.float64)
    k = sample_gg_kernel(psf)
    if arr.ndim == 2:
        out = separable_convolve(arr, k, k)
    elif arr.ndim == 3:
        out = np.stack([separable_convolve(arr[..., c], k, k) for c in range(arr.shape[-1])], axis=-1)
    else:
        raise InvalidArgumentError(f"unsupported image shape {arr.shape}")
    if noise_sigma > 0:
        out = out + noise_sigma * rng_for(seed).standard_normal(out.shape)
    return np.clip(out, 0.0, 1.0) if clip else out


def natural_field(shape, seed=0, exponent=1.0):
    """Random-phase field with amplitude spectrum 1/r**exponent, scaled to [0, 1]."""
    h, w = shape
    rng = rng_for(seed)
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    r = np.hypot(fy, fx)
    r[0, 0] = 1.0
    phase = np.exp(2j * np.pi * rng.random((h, w)))
    field = np.real(np.fft.ifft2(phase / r**exponent))
    field -= field.min()
    return field / field.max()

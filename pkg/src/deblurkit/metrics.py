"""Reference and no-reference image quality measures on unit-range images."""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import InvalidArgumentError
from .estimate import DEFAULT_BINS, radial_spectrum
from .pipeline import image_entropy

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class QualityReport:
    psnr_db: float | None
    ssim: float | None
    entropy_nats: float
    highband_energy_ratio: float

    def to_dict(self):
        d = asdict(self)
        if d["psnr_db"] is not None and math.isinf(d["psnr_db"]):
            d["psnr_db"] = "inf"
        return d


def _pair(reference, test):
    a = np.asarray(reference, dtype=np.float64)
    b = np.asarray(test, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(reference, test):
    a, b = _pair(reference, test)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window():
    x = np.arange(SSIM_WINDOW) - (SSIM_WINDOW - 1) / 2
    g = np.exp(-(x**2) / (2 * SSIM_SIGMA**2))
    return g / g.sum()


def _ssim_plane(a, b):
    g = _gaussian_window()

    def blur(x):
        return correlate1d(correlate1d(x, g, axis=0, mode="reflect"), g, axis=1, mode="reflect")

    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    mu_a, mu_b = blur(a), blur(b)
    saa = blur(a * a) - mu_a**2
    sbb = blur(b * b) - mu_b**2
    sab = blur(a * b) - mu_a * mu_b
    smap = ((2 * mu_a * mu_b + c1) * (2 * sab + c2)) / ((mu_a**2 + mu_b**2 + c1) * (saa + sbb + c2))
    p = (SSIM_WINDOW - 1) // 2
    return float(smap[p:-p, p:-p].mean())


def ssim(reference, test):
    """Mean SSIM over the valid window positions; channels are averaged."""
    a, b = _pair(reference, test)
    if a.ndim not in (2, 3) or min(a.shape[:2]) < SSIM_WINDOW:
        raise InvalidArgumentError(f"ssim needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    if np.array_equal(a, b):
        return 1.0
    if a.ndim == 2:
        return _ssim_plane(a, b)
    return float(np.mean([_ssim_plane(a[..., c], b[..., c]) for c in range(a.shape[-1])]))


def highband_energy_ratio(spectrum):
    """Share of radial spectrum mass in bins starting at or above pi/2."""
    total = float(spectrum.values.sum())
    if total <= 0:
        return 0.0
    high = spectrum.bin_edges[:-1] >= np.pi / 2 - 1e-12
    return float(spectrum.values[high].sum() / total)


def _channels(x):
    x = np.asarray(x, dtype=np.float64)
    return [x] if x.ndim == 2 else [x[..., c] for c in range(x.shape[-1])]


def quality_report(test, reference=None, bins=DEFAULT_BINS):
    planes = _channels(test)
    entropy = float(np.mean([image_entropy(p) for p in planes]))
    high = float(np.mean([highband_energy_ratio(radial_spectrum(p, bins)) for p in planes]))
    if reference is None:
        return QualityReport(None, None, entropy, high)
    return QualityReport(psnr(reference, test), ssim(reference, test), entropy, high)

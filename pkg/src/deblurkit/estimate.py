"""Blind estimation of the blur scale from two-scale radial spectra.

The amplitude spectrum of a natural image decays roughly like 1/r.  Comparing
the radial spectrum of the blurry image with that of an s-fold downsampled
copy cancels the unknown image content and leaves a ratio R(r) that depends
only on the blur scale alpha and a noise floor c'.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import FitFailedError, InsufficientBandError, InvalidArgumentError

DEFAULT_BINS = 64
ANTIALIAS_TAPS = 17
MIN_VALID_BINS = 8
FLOOR_REL = 1e-12


@dataclass(frozen=True, eq=False)
class RadialSpectrum:
    bin_edges: np.ndarray
    values: np.ndarray

    @property
    def bin_width(self):
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def radii(self):
        """Bin centers."""
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class RatioSpectrum:
    radii: np.ndarray
    ratios: np.ndarray
    scale_factor: float
    bins: np.ndarray  # indices of the surviving bins

    def __len__(self):
        return self.ratios.size


@dataclass(frozen=True)
class BlurEstimate:
    model: str
    alpha: float
    noise_coeff: float
    fit_residual: float
    scale_factor: float

    def to_dict(self):
        return {
            "model": self.model,
            "alpha": self.alpha,
            "noise_coeff": self.noise_coeff,
            "residual": self.fit_residual,
            "s": self.scale_factor,
        }


def _as_plane(image):
    plane = np.asarray(image, dtype=np.float64)
    if plane.ndim != 2:
        raise InvalidArgumentError(f"expected a 2D image plane, got shape {plane.shape}")
    return plane


def radial_spectrum(image, bins=DEFAULT_BINS):
    """Mean DFT amplitude over rings of width pi/bins covering [0, pi].

    Amplitudes are divided by the pixel count so spectra of images of
    different sizes share one scale.  Frequencies beyond pi (the corners of
    the Cartesian grid) are ignored.
    """
    plane = _as_plane(image)
    if min(plane.shape) < 32:
        raise InvalidArgumentError(f"image must be at least 32x32, got {plane.shape}")
    if bins < 16:
        raise InvalidArgumentError(f"bins must be >= 16, got {bins}")
    amp = np.abs(np.fft.fft2(plane)) / plane.size
    wy = 2 * np.pi * np.fft.fftfreq(plane.shape[0])
    wx = 2 * np.pi * np.fft.fftfreq(plane.shape[1])
    r = np.hypot(wy[:, None], wx[None, :])
    width = np.pi / bins
    idx = np.minimum((r / width).astype(np.int64), bins - 1)
    keep = r <= np.pi
    sums = np.bincount(idx[keep], weights=amp[keep], minlength=bins)
    counts = np.bincount(idx[keep], minlength=bins)
    values = np.divide(sums, counts, out=np.zeros(bins), where=counts > 0)
    return RadialSpectrum(np.linspace(0.0, np.pi, bins + 1), values)


def antialias_kernel(s, taps=ANTIALIAS_TAPS):
    """Hamming-windowed sinc low-pass, -3 dB at pi/s, unit DC gain."""
    if s < 1:
        raise InvalidArgumentError("scale factor must be >= 1")
    n = np.arange(taps) - (taps - 1) / 2
    cutoff = min(1.1 / s, 1.0)  # fraction of Nyquist; 1.1 lands the -3 dB point at pi/s
    h = cutoff * np.sinc(cutoff * n) * np.hamming(taps)
    return h / h.sum()


def antialias_downsample(image, s):
    plane = _as_plane(image)
    if not isinstance(s, (int, np.integer)) or s < 2:
        raise InvalidArgumentError(f"scale factor must be an integer >= 2, got {s}")
    if min(plane.shape) < 2 * s:
        raise InvalidArgumentError(f"scale factor {s} exceeds half the smallest dimension")
    k = antialias_kernel(s)
    smooth = correlate1d(correlate1d(plane, k, axis=0, mode="reflect"), k, axis=1, mode="reflect")
    return smooth[::s, ::s].copy()


def ratio_spectrum(original, downsampled, s, include_dc=False):
    """Per-bin ratio of the full-scale spectrum to the downsampled one."""
    if original.values.size != downsampled.values.size or not np.allclose(
        original.bin_edges, downsampled.bin_edges
    ):
        raise InvalidArgumentError("spectra must share bin geometry")
    den = downsampled.values
    num = original.values
    floor = FLOOR_REL * float(den.max()) if den.size else 0.0
    valid = (den > floor) & np.isfinite(num) & (num > 0)
    if not include_dc:
        valid[0] = False
    idx = np.nonzero(valid)[0]
    if idx.size < MIN_VALID_BINS:
        raise InsufficientBandError(f"only {idx.size} valid radial bins (need {MIN_VALID_BINS})")
    return RatioSpectrum(original.radii[idx], num[idx] / den[idx], float(s), idx)


def gaussian_ratio_model(r, s, alpha, c):
    r = np.asarray(r, dtype=np.float64)
    a2 = alpha * alpha
    num = np.exp(-a2 * r * r / 2.0) + c * r
    den = s * np.exp(-a2 * r * r / (2.0 * s * s)) + c * r
    return num / den


def _check_lap_args(r, s, alpha):
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0) or s < 1 or alpha <= 0:
        raise InvalidArgumentError("need r >= 0, s >= 1 and alpha > 0")
    return r


def laplacian_ring_integral(r, s, alpha, plus_one=False):
    """Integral over theta of the separable Laplacian response at radius r/s.

    Equals (r/s) * 2*pi*A / sqrt(B**2 + B) with A = 16 s^5 / (alpha^4 r^5)
    and B = (16 s^4 + 8 alpha^2 r^2 s^2) / (alpha^4 r^4), rewritten in
    u = (alpha r / s)**2 so that r -> 0 gives the finite limit 2*pi.
    ``plus_one=True`` uses sqrt(B**2 + 1) instead, which does not match
    direct quadrature and is kept only for comparison.
    """
    r = _check_lap_args(r, s, alpha)
    u = (alpha * r / s) ** 2
    q = 16.0 + 8.0 * u
    if plus_one:
        return 2 * np.pi * 16.0 / np.sqrt(q * q + u**4)
    return 2 * np.pi * 16.0 / np.sqrt(q * q + q * u * u)


def laplacian_radial_model(r, s, alpha, plus_one=False):
    """Ring integral of (s/r) * h(r/s, theta), i.e. 2*pi*A / sqrt(B**2 + B).

    Diverges like 2*pi*s/r at r = 0 (returned as inf).
    """
    r = _check_lap_args(r, s, alpha)
    J = laplacian_ring_integral(r, s, alpha, plus_one)
    with np.errstate(divide="ignore"):
        out = np.where(r > 0, s * J / np.where(r > 0, r, 1.0), np.inf)
    return out if out.ndim else float(out)


def laplacian_ratio_model(r, s, alpha, c):
    r = np.asarray(r, dtype=np.float64)
    num = laplacian_ring_integral(r, 1.0, alpha) / (2 * np.pi) + c * r
    den = s * laplacian_ring_integral(r, s, alpha) / (2 * np.pi) + c * r
    return num / den


MODELS = {
    "gaussian": gaussian_ratio_model,
    "laplacian": laplacian_ratio_model,
}
ALPHA_BOUNDS = (1e-3, 50.0)


def _damped_gauss_newton(fun, p0, max_iter=2000, tol=1e-10):
    """Levenberg-style damped Gauss-Newton for two parameters (log alpha, c).

    ``fun(alpha, c)`` returns the residual vector.  c is kept non-negative by
    projection.  Returns (alpha, c, cost, converged).
    """
    lo, hi = math.log(ALPHA_BOUNDS[0]), math.log(ALPHA_BOUNDS[1])

    def resid(q):
        return fun(math.exp(q[0]), q[1])

    def project(q):
        return np.array([min(max(q[0], lo), hi), max(q[1], 0.0)])

    q = project(np.array([math.log(p0[0]), p0[1]], dtype=np.float64))
    r = resid(q)
    cost = float(r @ r)
    lam = 1e-3
    for _ in range(max_iter):
        J = np.empty((r.size, 2))
        for j in range(2):
            step = 1e-7 * max(1.0, abs(q[j]))
            dq = q.copy()
            dq[j] += step
            J[:, j] = (resid(dq) - r) / step
        g = J.T @ r
        A = J.T @ J
        # c pinned at zero with the gradient pushing it negative: step alpha only
        free = np.array([True, not (q[1] <= 0.0 and g[1] > 0.0)])
        pg = np.where(free, g, 0.0)
        if np.max(np.abs(pg)) <= 1e-14 * max(cost, 1e-300) ** 0.5 + 1e-300:
            return math.exp(q[0]), q[1], cost, True
        improved = False
        while lam < 1e12:
            Af = A[np.ix_(free, free)]
            M = Af + lam * np.diag(np.maximum(np.diag(Af), 1e-12))
            try:
                delta = np.zeros(2)
                delta[free] = np.linalg.solve(M, -g[free])
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            q_new = project(q + delta)
            r_new = resid(q_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                improved = True
                break
            lam *= 4
        if not improved:
            # no descent direction left: stationary within the feasible set
            return math.exp(q[0]), q[1], cost, True
        small_step = np.max(np.abs(q_new - q)) < 1e-10
        small_gain = cost - cost_new <= tol * max(cost, 1e-300)
        q, r, cost = q_new, r_new, cost_new
        lam = max(lam / 3, 1e-12)
        if small_step or small_gain:
            return math.exp(q[0]), q[1], cost, True
    return math.exp(q[0]), q[1], cost, False


def _fit(model, ratio, starts=16):
    if len(ratio) < MIN_VALID_BINS:
        raise InsufficientBandError(f"only {len(ratio)} valid radial bins (need {MIN_VALID_BINS})")
    fn = MODELS[model]
    r, R, s = ratio.radii, ratio.ratios, ratio.scale_factor

    def residual(alpha, c):
        # both exponentials can underflow for large alpha; the nan cost is rejected
        with np.errstate(invalid="ignore", divide="ignore"):
            return fn(r, s, alpha, c) - R

    best = None
    for a0 in np.geomspace(0.25, 8.0, starts):
        alpha, c, cost, ok = _damped_gauss_newton(residual, (a0, 0.0))
        if best is None or cost < best[2]:
            best = (alpha, c, cost, ok)
    alpha, c, cost, ok = best
    est = BlurEstimate(model, float(alpha), float(c), math.sqrt(cost / r.size), s)
    if not ok:
        raise FitFailedError(f"{model} fit did not converge", best=est)
    return est


def fit_gaussian_model(ratio):
    return _fit("gaussian", ratio)


def fit_laplacian_model(ratio):
    return _fit("laplacian", ratio)


def plane_ratio(plane, s=2, bins=DEFAULT_BINS):
    orig = radial_spectrum(plane, bins)
    down = radial_spectrum(antialias_downsample(plane, s), bins)
    return orig, down, ratio_spectrum(orig, down, s)


def estimate_blur(image, model="gaussian", s=2, bins=DEFAULT_BINS):
    """Estimate the blur scale of a 2D plane or an (H, W, C) image.

    Returns ``(alpha, per_channel)``; for multi-channel input alpha is the
    median of the per-channel estimates.
    """
    if model not in MODELS:
        raise InvalidArgumentError(f"unknown blur model {model!r}")
    arr = np.asarray(image, dtype=np.float64)
    planes = [arr] if arr.ndim == 2 else [arr[..., k] for k in range(arr.shape[-1])]
    per_channel = []
    for plane in planes:
        _, _, ratio = plane_ratio(plane, s, bins)
        per_channel.append(_fit(model, ratio))
    alpha = float(np.median([e.alpha for e in per_channel]))
    return alpha, per_channel

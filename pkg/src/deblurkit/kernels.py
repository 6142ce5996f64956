"""1D FIR kernels: even-order derivative stencils and generalized Gaussian blur."""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class FirKernel:
    """Symmetric odd-length tap vector.

    ``derivative_order`` is 0 for smoothing kernels (unit sum) and 2n for
    derivative kernels (zero sum, exact moments up to order 2n).
    """

    taps: np.ndarray
    derivative_order: int = 0

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64).ravel()
        if taps.size % 2 == 0:
            raise InvalidArgumentError(f"kernel length must be odd, got {taps.size}")
        if self.derivative_order < 0 or self.derivative_order % 2:
            raise InvalidArgumentError("derivative_order must be a non-negative even integer")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def length(self):
        return self.taps.size

    @property
    def center(self):
        return (self.taps.size - 1) // 2

    @property
    def offsets(self):
        """Tap positions relative to the center."""
        return np.arange(self.taps.size) - self.center

    def padded(self, length):
        """Zero-pad symmetrically to ``length`` taps."""
        if length < self.length or length % 2 == 0:
            raise InvalidArgumentError(f"cannot pad length {self.length} kernel to {length}")
        pad = (length - self.length) // 2
        return FirKernel(np.pad(self.taps, pad), self.derivative_order)

    def __len__(self):
        return self.taps.size

    def __repr__(self):
        return f"FirKernel(length={self.length}, derivative_order={self.derivative_order})"


@dataclass(frozen=True)
class GeneralizedGaussianPsf:
    """Generalized Gaussian blur model with shape ``beta`` and standard deviation ``scale``."""

    shape: float
    scale: float
    support_halfwidth: int | None = None

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise InvalidArgumentError(f"shape must be positive, got {self.shape}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InvalidArgumentError(f"scale must be positive, got {self.scale}")
        if self.support_halfwidth is not None and self.support_halfwidth < 1:
            raise InvalidArgumentError("support_halfwidth must be a positive integer")

    @property
    def halfwidth(self):
        if self.support_halfwidth is not None:
            return int(self.support_halfwidth)
        return default_halfwidth(self.scale)

    @property
    def width_parameter(self):
        """A(beta, sigma), the argument scaling inside the exponent."""
        return gg_width(self.shape, self.scale)


def default_halfwidth(scale):
    return int(min(max(math.ceil(6.0 * scale), 4), 64))


def gg_width(shape, scale):
    return math.sqrt(scale**2 * math.gamma(1.0 / shape) / math.gamma(3.0 / shape))


def gg_density(psf, x):
    """Continuous generalized Gaussian density evaluated at ``x``."""
    a = psf.width_parameter
    x = np.asarray(x, dtype=np.float64)
    norm = 2.0 * math.gamma(1.0 + 1.0 / psf.shape) * a
    return np.exp(-np.abs(x / a) ** psf.shape) / norm


def sample_gg_kernel(psf):
    """Sample the blur density on integer offsets and normalize to unit sum."""
    h = psf.halfwidth
    x = np.arange(-h, h + 1, dtype=np.float64)
    taps = np.exp(-np.abs(x / psf.width_parameter) ** psf.shape)
    return FirKernel(taps / taps.sum(), 0)


def _check_omegas(omegas):
    w = np.atleast_1d(np.asarray(omegas, dtype=np.float64))
    if np.any(~np.isfinite(w)) or np.any(w < 0) or np.any(w > np.pi + 1e-12):
        raise InvalidArgumentError("frequencies must lie in [0, pi]")
    return w


def frequency_response(kernel, omegas):
    """Real frequency response of a symmetric kernel.

    Derivative kernels of order 2n follow the sign convention of the ideal
    response (-1)**n * omega**(2n), e.g. [1, -2, 1] gives -omega**2 near DC.
    """
    w = _check_omegas(omegas)
    k = kernel.offsets.astype(np.float64)
    return np.cos(np.outer(w, k)) @ kernel.taps


def _continuous_response(psf, w):
    if psf.shape == 2.0:
        return np.exp(-0.5 * (psf.scale * w) ** 2)
    a = psf.width_parameter
    if psf.shape == 1.0:
        return 1.0 / (1.0 + (a * w) ** 2)
    beta = psf.shape
    norm = math.gamma(1.0 + 1.0 / beta) * a
    out = np.empty_like(w)
    for i, wi in enumerate(w):
        if wi == 0.0:
            out[i] = 1.0
            continue
        # QAWF Fourier integral on [0, inf)
        val, _ = quad(lambda x: math.exp(-((x / a) ** beta)), 0.0, np.inf, weight="cos", wvar=wi, limlst=200)
        out[i] = val / norm
    return out


def psf_response(psf, omegas, kind="sampled"):
    """Frequency response of the blur model.

    ``kind="sampled"`` is the DTFT of :func:`sample_gg_kernel`, i.e. the exact
    response of the discrete blur the pipeline simulates and inverts.
    ``kind="continuous"`` is the Fourier transform of the continuous density.
    """
    w = _check_omegas(omegas)
    if kind == "sampled":
        return frequency_response(sample_gg_kernel(psf), w)
    if kind == "continuous":
        return _continuous_response(psf, w)
    raise InvalidArgumentError(f"unknown response kind {kind!r}")


_TABLE_ORDER = 14  # orders up to 2N for the default N = 7 share one table per length


@lru_cache(maxsize=64)
def _fornberg_table(length, top):
    """Exact central-difference weights for all orders 0..top on ``length`` points.

    Fornberg's recurrence run in rational arithmetic; the taps are rounded to
    float only at the end.  Float evaluation loses the tiny outer taps, which
    the high moments amplify by up to |k|**order.
    """
    h = (length - 1) // 2
    xs = list(range(-h, h + 1))
    n = len(xs)
    c = [[Fraction(0)] * (top + 1) for _ in range(n)]
    c[0][0] = Fraction(1)
    c1 = Fraction(1)
    c4 = xs[0]
    for i in range(1, n):
        mn = min(i, top)
        c2 = Fraction(1)
        c5 = c4
        c4 = xs[i]
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2
            for k in range(mn, 0, -1):
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3
            c[j][0] = c4 * c[j][0] / c3
        c1 = c2
    table = np.array([[float(v) for v in row] for row in c])
    table.setflags(write=False)
    return table


def _weights(order, length):
    top = min(max(order, _TABLE_ORDER), length - 1)
    return _fornberg_table(length, top)[:, order]


def derivative_kernel(order, taps):
    """Centered maximally flat FIR kernel for the ``order``-th derivative.

    The kernel reproduces the derivative exactly for polynomials of degree
    below ``taps``, so its response matches (-1)**n * omega**order to the
    highest possible order at DC.
    """
    if not isinstance(order, (int, np.integer)) or order < 2 or order % 2:
        raise InvalidArgumentError(f"order must be an even integer >= 2, got {order}")
    if not isinstance(taps, (int, np.integer)) or taps % 2 == 0 or taps < order + 1:
        raise InvalidArgumentError(f"taps must be odd and >= order + 1, got {taps}")
    return FirKernel(_weights(int(order), int(taps)), int(order))

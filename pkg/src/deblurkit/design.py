"""Inverse-PSF fitting and assembly of the one-shot deblurring kernel.

The inverse blur response 1/h(w) is approximated by an even series
sum_n a_n * b_n(w) where b_n is either the monomial w**(2n) or the realized
response (-1)**n * d2n(w) of the 2n-th derivative stencil.  Because every
derivative stencil maps to its monomial in the frequency domain, the fitted
coefficients translate directly into the spatial kernel
D = sum_{n>=1} a_n (-1)**n d2n, and delta + D approximates the inverse filter.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditionedFitError, InvalidArgumentError
from .kernels import (
    FirKernel,
    GeneralizedGaussianPsf,
    derivative_kernel,
    frequency_response,
    psf_response,
)

MAX_TAPS = 63
DEFAULT_GRID = 512
DEFAULT_GAIN_CAP = 100.0
CONDITION_LIMIT = 1e13
ROLLOFF_WEIGHT = 0.1  # relative weight of the out-of-band roll-off rows
ROLLOFF_MIN_WIDTH = math.pi / 4  # roll-off never steeper than this; truncated at pi


@dataclass(frozen=True, eq=False)
class InverseDesign:
    coefficients: np.ndarray
    fit_band: float
    deblur_kernel: FirKernel
    source_psf: GeneralizedGaussianPsf
    taps_per_order: int
    response: str = "sampled"
    basis: str = "kernel"
    weighted: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def order(self):
        return len(self.coefficients) - 1

    def to_dict(self):
        return {
            "beta": self.source_psf.shape,
            "sigma": self.source_psf.scale,
            "N": self.order,
            "omega_T": self.fit_band,
            "taps_per_order": self.taps_per_order,
            "coefficients": [float(c) for c in self.coefficients],
            "kernel_taps": [float(t) for t in self.deblur_kernel.taps],
        }


def _basis_matrix(omegas, order, taps):
    if taps is None:
        return np.vander(omegas**2, order + 1, increasing=True)
    cols = [np.ones_like(omegas)]
    for n in range(1, order + 1):
        cols.append((-1) ** n * frequency_response(derivative_kernel(2 * n, taps), omegas))
    return np.column_stack(cols)


def fit_inverse_polynomial(
    psf,
    order,
    fit_band=math.pi,
    grid_points=DEFAULT_GRID,
    *,
    taps=None,
    response="continuous",
    weighted=False,
    rolloff=False,
):
    """Least-squares fit of 1/h(w) by even frequency terms on [0, fit_band].

    With the defaults the basis is the monomials w**(2n) and the target is the
    continuous Fourier transform of the blur density.  Passing ``taps`` swaps
    the monomials for the realized responses of ``taps``-long derivative
    stencils; ``weighted=True`` scales each row by h(w), which turns the
    objective into the relative error |h(w) * p(w) - 1|.

    ``rolloff=True`` with fit_band < pi extends the grid to pi with a target
    that decays smoothly (raised cosine in log gain) from 1/h(fit_band) to 1,
    so the realized gain stays bounded outside the band instead of following
    the unconstrained extrapolation of the series.  The roll-off spans at
    least ROLLOFF_MIN_WIDTH; for bands close to pi it is cut off at pi rather
    than squeezed into a cliff the series cannot follow.

    Returns the coefficient vector a_0..a_N.
    """
    if not isinstance(order, (int, np.integer)) or order < 1:
        raise InvalidArgumentError(f"order must be an integer >= 1, got {order}")
    if not (0.0 < fit_band <= math.pi + 1e-12):
        raise InvalidArgumentError(f"fit_band must lie in (0, pi], got {fit_band}")
    if grid_points < 4 * order:
        raise InvalidArgumentError(f"grid_points must be >= 4*order = {4 * order}")
    if taps is not None and (taps % 2 == 0 or taps < 2 * order + 1):
        raise InvalidArgumentError(f"taps must be odd and >= 2*order + 1, got {taps}")

    band = min(fit_band, math.pi)
    extend = rolloff and band < math.pi
    w = np.linspace(0.0, math.pi if extend else band, int(grid_points))
    inside = w <= band
    h = psf_response(psf, w[inside], kind=response)
    if np.any(h <= 0):
        raise IllConditionedFitError("blur response is not positive on the fit band", math.inf)
    target = np.ones_like(w)
    target[inside] = 1.0 / h
    if extend:
        edge = math.log(1.0 / psf_response(psf, [band], kind=response)[0])
        x = (w[~inside] - band) / max(math.pi - band, ROLLOFF_MIN_WIDTH)
        target[~inside] = np.exp(edge * 0.5 * (1.0 + np.cos(np.pi * x)))
    V = _basis_matrix(w, int(order), taps)
    rows = 1.0 / target if weighted else np.ones_like(w)
    rows = np.where(inside, rows, ROLLOFF_WEIGHT * rows)
    A = V * rows[:, None]
    b = target * rows

    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(A)):
        raise IllConditionedFitError("design matrix has vanishing columns; fit band too small", math.inf)
    # high orders shrink like fit_band**(2n); below double resolution against
    # the constant column they carry no information even after scaling
    spread = norms[0] / norms.min()
    if spread > CONDITION_LIMIT:
        raise IllConditionedFitError("fit band too small for this order", spread)
    As = A / norms
    sv = np.linalg.svd(As, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else math.inf
    if cond > CONDITION_LIMIT:
        raise IllConditionedFitError("inverse fit is rank deficient for this order and band", cond)
    coef, *_ = np.linalg.lstsq(As, b, rcond=None)
    return coef / norms


def assemble_deblur_kernel(coefficients, taps_per_order):
    """D[k] = sum_{n=1..N} a_n (-1)**n d2n[k]; the identity term stays separate."""
    coefficients = np.asarray(coefficients, dtype=np.float64)
    order = coefficients.size - 1
    if order < 1:
        raise InvalidArgumentError("need at least coefficients a_0 and a_1")
    if taps_per_order % 2 == 0 or taps_per_order < 2 * order + 1:
        raise InvalidArgumentError(f"taps_per_order must be odd and >= {2 * order + 1}")
    D = np.zeros(taps_per_order)
    for n in range(1, order + 1):
        D += coefficients[n] * (-1) ** n * derivative_kernel(2 * n, taps_per_order).taps
    return FirKernel(D, 2)


def default_taps(psf, order):
    return int(min(max(2 * order + 3, 2 * math.ceil(4 * psf.scale) + 1), MAX_TAPS))


def auto_fit_band(psf, gain_cap=DEFAULT_GAIN_CAP, kind="sampled", grid_points=4096):
    """Smallest frequency where the inverse gain 1/h(w) exceeds ``gain_cap`` (else pi)."""
    if gain_cap <= 1:
        raise InvalidArgumentError("gain_cap must exceed 1")
    w = np.linspace(0.0, math.pi, grid_points)
    h = psf_response(psf, w, kind=kind)
    with np.errstate(divide="ignore"):
        gain = np.where(h > 0, 1.0 / h, np.inf)
    over = np.nonzero(gain > gain_cap)[0]
    if over.size == 0:
        return math.pi
    i = int(over[0])
    if i == 0:
        return float(w[1])
    if not np.isfinite(gain[i]):
        return float(w[i - 1])
    # log-linear interpolation of the crossing
    g0, g1 = math.log(gain[i - 1]), math.log(gain[i])
    t = (math.log(gain_cap) - g0) / (g1 - g0)
    return float(w[i - 1] + t * (w[i] - w[i - 1]))


def build_design(psf, coefficients, fit_band, taps_per_order, **meta):
    kernel = assemble_deblur_kernel(coefficients, taps_per_order)
    return InverseDesign(
        coefficients=np.asarray(coefficients, dtype=np.float64),
        fit_band=float(fit_band),
        deblur_kernel=kernel,
        source_psf=psf,
        taps_per_order=int(taps_per_order),
        **meta,
    )


def design_inverse(
    psf,
    order=7,
    fit_band="auto",
    taps="auto",
    *,
    grid_points=DEFAULT_GRID,
    gain_cap=DEFAULT_GAIN_CAP,
    response="sampled",
    basis="kernel",
    weighted=True,
    rolloff=True,
    target_error=1e-3,
):
    """Fit and assemble a deblurring design for ``psf``.

    ``taps="auto"`` starts from :func:`default_taps` and lengthens the
    derivative stencils (up to 63 taps) until the feasibility error over the
    fit band drops below ``target_error``; the best length tried is kept.
    """
    if basis not in ("kernel", "polynomial"):
        raise InvalidArgumentError(f"unknown basis {basis!r}")
    if fit_band == "auto":
        band = auto_fit_band(psf, gain_cap, kind=response)
    else:
        band = float(fit_band)

    if taps == "auto":
        lengths = [default_taps(psf, order)]
        while lengths[-1] < MAX_TAPS:
            lengths.append(min(2 * lengths[-1] + 1, MAX_TAPS))
    else:
        lengths = [int(taps)]

    meta = dict(response=response, basis=basis, weighted=weighted)
    grid_points = max(grid_points, 1024) if rolloff and band < math.pi else grid_points
    best = None
    for L in lengths:
        coef = fit_inverse_polynomial(
            psf, order, band, grid_points,
            taps=L if basis == "kernel" else None,
            response=response, weighted=weighted, rolloff=rolloff,
        )
        design = build_design(psf, coef, band, L, **meta)
        err = feasibility_error(psf, design)
        design.diagnostics["feasibility_error"] = err
        if best is None or err < best.diagnostics["feasibility_error"]:
            best = design
        if err <= target_error:
            break
    return best


def feasibility_error(psf, design, eval_band=None, grid_points=1024, kind=None):
    """Relative L2 gap between 1/|h(w)| and the realized response 1 + D(w) on [0, eval_band]."""
    band = design.fit_band if eval_band is None else float(eval_band)
    if not (0.0 < band <= math.pi + 1e-12):
        raise InvalidArgumentError(f"eval_band must lie in (0, pi], got {band}")
    w = np.linspace(0.0, min(band, math.pi), grid_points)
    h = psf_response(psf, w, kind=kind or design.response)
    inv = 1.0 / np.abs(h)
    realized = 1.0 + frequency_response(design.deblur_kernel, w)
    return float(np.linalg.norm(inv - realized) / np.linalg.norm(inv))

"""One-shot FIR deblurring with blind blur-scale estimation."""

__version__ = "0.1.0"

from .design import InverseDesign, assemble_deblur_kernel, design_inverse, feasibility_error, fit_inverse_polynomial
from .errors import (
    DeblurError,
    FitFailedError,
    IllConditionedFitError,
    InfeasibleDesignError,
    InsufficientBandError,
    InvalidArgumentError,
)
from .estimate import (
    BlurEstimate,
    RadialSpectrum,
    RatioSpectrum,
    antialias_downsample,
    estimate_blur,
    fit_gaussian_model,
    fit_laplacian_model,
    laplacian_radial_model,
    radial_spectrum,
    ratio_spectrum,
)
from .kernels import FirKernel, GeneralizedGaussianPsf, derivative_kernel, frequency_response, sample_gg_kernel
from .metrics import QualityReport, highband_energy_ratio, psnr, quality_report, ssim
from .pipeline import TuningParams, adaptive_gamma, deblur, deblur_edges, image_entropy, separable_convolve
from .simulate import natural_field, simulate

"""Command-line interface: ``deblurkit <command> [options]``.

Exit codes: 0 success, 1 other library failure, 2 invalid arguments,
3 infeasible design, 4 I/O failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .design import DEFAULT_GAIN_CAP, design_inverse, feasibility_error
from .errors import DeblurError, IllConditionedFitError, InfeasibleDesignError, InvalidArgumentError
from .estimate import DEFAULT_BINS, estimate_blur, radial_spectrum
from .io import SUPPORTED_SUFFIXES, ImageIOError, read_image, write_image
from .kernels import GeneralizedGaussianPsf, derivative_kernel, sample_gg_kernel
from .metrics import quality_report
from .pipeline import DEFAULT_DENOISE_RATIO, DEFAULT_ENTROPY_THRESHOLD, TuningParams, deblur, denoise_psf_for
from .simulate import simulate

log = logging.getLogger("deblurkit")

FORMAT_VERSION = "1.0"
FEASIBILITY_LIMIT = 0.1
MODEL_SHAPE = {"gaussian": 2.0, "laplacian": 1.0}

EXIT_OK, EXIT_FAILURE, EXIT_ARGS, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3, 4


def _auto_or_float(text):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}") from None


def _emit(payload, path=None):
    payload = {"spec_version": FORMAT_VERSION, **payload}
    text = json.dumps(payload, indent=2)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _planes(data):
    return [data] if data.ndim == 2 else [data[..., c] for c in range(data.shape[-1])]


def _design_for(psf, args):
    design = design_inverse(psf, args.order, args.omega_t, gain_cap=args.gain_cap)
    err = feasibility_error(psf, design)
    if err > FEASIBILITY_LIMIT:
        raise InfeasibleDesignError(
            f"design for beta={psf.shape}, sigma={psf.scale:.4g} has feasibility error "
            f"{err:.3g} > {FEASIBILITY_LIMIT}; lower --omega-t or --gain-cap",
            err,
        )
    return design, err


def _design_summary(design, err):
    d = design.to_dict()
    d["feasibility_error"] = err
    return d


def _tuning(args):
    if args.gamma == "auto":
        return TuningParams(entropy_threshold=args.entropy_threshold, gamma_mode="adaptive")
    if not 0.0 <= args.gamma <= 1.0:
        raise InvalidArgumentError(f"--gamma must be 'auto' or lie in [0, 1], got {args.gamma}")
    return TuningParams(gamma=args.gamma, entropy_threshold=args.entropy_threshold, gamma_mode="fixed")


def _deblur_one(src, dst, args, reference=None):
    params = _tuning(args)
    image = read_image(src)
    if args.alpha is not None:
        alpha, per_channel = float(args.alpha), []
    else:
        alpha, per_channel = estimate_blur(image.data, args.model, args.scale_factor, args.bins)
    psf = GeneralizedGaussianPsf(args.beta if args.beta is not None else MODEL_SHAPE[args.model], alpha)
    design, err = _design_for(psf, args)
    denoise = denoise_psf_for(design, args.denoise_ratio) if args.denoise else None
    restored, gammas = deblur(image.data, design, params, denoise, return_gamma=True)
    write_image(dst, restored, image.bit_depth)
    log.info("%s -> %s (alpha=%.4g, omega_T=%.4g)", src, dst, alpha, design.fit_band)
    report = {
        "input": str(src),
        "output": str(dst),
        "alpha": alpha,
        "estimates": [e.to_dict() for e in per_channel],
        "design": _design_summary(design, err),
        "gamma": gammas,
        "denoise_scale": denoise.scale if denoise is not None else None,
    }
    if reference is not None:
        ref = read_image(reference)
        report["metrics"] = quality_report(restored, ref.data, args.bins).to_dict()
    return report


def cmd_deblur(args):
    src = Path(args.input)
    if src.is_dir():
        if not args.output:
            raise InvalidArgumentError("directory input needs --output DIR")
        out_dir = Path(args.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        files = sorted(p for p in src.iterdir() if p.suffix.lower() in SUPPORTED_SUFFIXES)
        if not files:
            raise ImageIOError(f"no PNG or TIFF files in {src}")
        reports = [_deblur_one(p, out_dir / p.name, args) for p in files]
        _emit({"images": reports}, args.report)
        return EXIT_OK
    dst = Path(args.output) if args.output else src.with_name(f"{src.stem}_deblurred{src.suffix}")
    _emit(_deblur_one(src, dst, args, args.reference), args.report)
    return EXIT_OK


def cmd_estimate(args):
    image = read_image(args.input)
    alpha, per_channel = estimate_blur(image.data, args.model, args.scale_factor, args.bins)
    _emit({"alpha": alpha, "estimates": [e.to_dict() for e in per_channel]}, args.report)
    return EXIT_OK


def cmd_design(args):
    psf = GeneralizedGaussianPsf(args.beta, args.sigma)
    design, err = _design_for(psf, args)
    if args.csv:
        if args.kernel == "deblur":
            kernel = design.deblur_kernel
        elif args.kernel == "psf":
            kernel = sample_gg_kernel(psf)
        else:
            kernel = derivative_kernel(args.derivative_order, design.taps_per_order)
        rows = "\n".join(f"{int(k)},{float(t)!r}" for k, t in zip(kernel.offsets, kernel.taps))
        Path(args.csv).write_text("index,tap\n" + rows + "\n")
    _emit(_design_summary(design, err), args.report)
    return EXIT_OK


def cmd_simulate(args):
    if not args.sigma > 0:
        raise InvalidArgumentError(f"--sigma must be positive, got {args.sigma}")
    image = read_image(args.input)
    out = simulate(image.data, GeneralizedGaussianPsf(args.beta, args.sigma), args.noise_sigma, args.seed)
    write_image(args.output, out, image.bit_depth)
    return EXIT_OK


def cmd_spectrum(args):
    image = read_image(args.input)
    spectra = [radial_spectrum(p, args.bins) for p in _planes(image.data)]
    values = np.mean([s.values for s in spectra], axis=0)
    lines = ["r,value"] + [f"{float(r)!r},{float(v)!r}" for r, v in zip(spectra[0].radii, values)]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_metrics(args):
    image = read_image(args.input)
    ref = read_image(args.reference).data if args.reference else None
    _emit(quality_report(image.data, ref, args.bins).to_dict(), args.report)
    return EXIT_OK


def _add_pipeline_flags(p):
    p.add_argument("--model", choices=sorted(MODEL_SHAPE), default="gaussian", help="blur model for estimation")
    p.add_argument("--scale-factor", type=int, choices=(2, 4), default=2, help="downsampling factor s")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS, help="radial spectrum bins")


def _add_design_flags(p):
    p.add_argument("--order", type=int, default=7, help="polynomial order N")
    p.add_argument("--omega-t", type=_auto_or_float, default="auto",
                   help="fit band limit in (0, pi], or 'auto' (gain-cap rule)")
    p.add_argument("--gain-cap", type=float, default=DEFAULT_GAIN_CAP,
                   help="inverse gain that sets omega_T when --omega-t auto")


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="deblurkit", description=__doc__.splitlines()[0], formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument("--config", help="JSON file of option defaults; command-line flags take precedence")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = sub.choices

    p = sub.add_parser("deblur", help="estimate blur, design kernel, deblur", formatter_class=fmt)
    p.add_argument("input", help="image file or directory of images")
    p.add_argument("-o", "--output", help="output file (or directory for directory input)")
    _add_pipeline_flags(p)
    _add_design_flags(p)
    p.add_argument("--alpha", type=float, help="known blur scale; skips estimation")
    p.add_argument("--beta", type=float, help="PSF shape for the design; omitted means 2 for gaussian, 1 for laplacian")
    p.add_argument("--gamma", type=_auto_or_float, default="auto", help="deblur strength in [0, 1] or 'auto'")
    p.add_argument("--entropy-threshold", type=float, default=DEFAULT_ENTROPY_THRESHOLD,
                   help="T in the adaptive gamma ratio (nats)")
    p.add_argument("--denoise", action="store_true", help="apply the Gaussian post-denoiser")
    p.add_argument("--denoise-ratio", type=float, default=DEFAULT_DENOISE_RATIO,
                   help="denoiser scale relative to the blur scale")
    p.add_argument("--reference", help="ground-truth image for PSNR/SSIM in the report")
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_deblur)

    p = sub.add_parser("estimate", help="blind blur-scale estimate", formatter_class=fmt)
    p.add_argument("input")
    _add_pipeline_flags(p)
    p.add_argument("--report", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("design", help="fit and print a deblurring design", formatter_class=fmt)
    p.add_argument("--beta", type=float, default=2.0, help="PSF shape")
    p.add_argument("--sigma", type=float, default=1.0, help="PSF scale (standard deviation)")
    _add_design_flags(p)
    p.add_argument("--csv", help="also dump a kernel as CSV (index,tap)")
    p.add_argument("--kernel", choices=("deblur", "psf", "derivative"), default="deblur",
                   help="kernel written by --csv")
    p.add_argument("--derivative-order", type=int, default=2, help="order for --kernel derivative")
    p.add_argument("--report", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="blur and add seeded Gaussian noise", formatter_class=fmt)
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--beta", type=float, default=2.0, help="PSF shape")
    p.add_argument("--sigma", type=float, default=1.0, help="PSF scale")
    p.add_argument("--noise-sigma", type=float, default=0.0, help="AWGN standard deviation (unit range)")
    p.add_argument("--seed", type=int, default=0, help="PCG64 seed for the noise stream")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", help="radial amplitude spectrum as CSV", formatter_class=fmt)
    p.add_argument("input")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("metrics", help="quality report as JSON", formatter_class=fmt)
    p.add_argument("input")
    p.add_argument("--reference", help="reference image for PSNR/SSIM")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--report", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_metrics)
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            parser.exit(EXIT_IO, f"deblurkit: cannot load config {args.config}: {exc}\n")
        if not isinstance(config, dict):
            parser.error("config file must hold a JSON object")
        # config values become defaults, so explicit flags still win
        parser.commands[args.command].set_defaults(**{k.replace("-", "_"): v for k, v in config.items()})
        args = parser.parse_args(argv)
    return args


def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InvalidArgumentError as exc:
        print(f"deblurkit: invalid argument: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (InfeasibleDesignError, IllConditionedFitError) as exc:
        print(f"deblurkit: infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ImageIOError, OSError) as exc:
        print(f"deblurkit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DeblurError as exc:
        print(f"deblurkit: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

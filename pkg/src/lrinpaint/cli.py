"""Command-line front end.

Subcommands: complete, inpaint, blind, destripe, metrics, genmask.
Reports go to stdout as key=value lines (or one JSON object with
--json) and echo every effective parameter, so a run can be reproduced
from its report alone.

Exit codes: 0 success, 1 usage error, 2 solver non-convergence (the
output file is still written on a best-effort basis).
"""

import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from .image_io import MaskRecipe, gen_mask, load_mask, psnr, read_image, ssim, write_image, write_mask
from .matching import build_partition
from .pipeline import PipelineConfig, blind_inpaint, destripe, effective_lam, inpaint
from .solver import SolverConfig, decompose, nuclear_decompose

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors map to 1."""

    def error(self, message):
        raise UsageError(message)


def _fmt(value):
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.9g}"
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def _json_safe(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def emit_report(report, as_json):
    if as_json:
        print(json.dumps({k: _json_safe(v) for k, v in report.items()}))
    else:
        for key, value in report.items():
            print(f"{key}={_fmt(value)}")


def _add_solver_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="sparsity weight (default: picked by mode)")
    p.add_argument("--eta", type=float, default=0.1, help="spectral knee scale")
    p.add_argument("--rho", type=float, default=1.2, help="penalty growth factor")
    p.add_argument("--mu0", type=float, default=None,
                   help="initial penalty (default: 1.25/sigma1)")
    p.add_argument("--tol", type=float, default=1e-7, help="relative residual stop")
    p.add_argument("--max-iter", type=int, default=500, help="inner iteration cap")


def _add_pipeline_flags(p):
    p.add_argument("--patch-side", type=int, default=8)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--radius", type=int, default=90, help="search radius in pixels")
    p.add_argument("--regions", type=int, default=60, help="number of subregions")
    p.add_argument("--partition", choices=("sectors", "grids", "none"), default="sectors")
    p.add_argument("--outer-tol", type=float, default=1e-3)
    p.add_argument("--max-outer", type=int, default=10)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--reference", default=None,
                   help="ground-truth image; enables PSNR stop rule and reporting")


def build_parser():
    parser = Parser(prog="lrinpaint", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete", help="whole-image low-rank completion")
    p.add_argument("image")
    p.add_argument("mask")
    p.add_argument("output")
    p.add_argument("--solver", choices=("ncwlrd", "nnm"), default="ncwlrd")
    _add_solver_flags(p)
    p.add_argument("--reference", default=None)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("inpaint", help="patch-based inpainting with a known mask")
    p.add_argument("image")
    p.add_argument("mask")
    p.add_argument("output")
    _add_pipeline_flags(p)
    _add_solver_flags(p)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("blind", help="restore impulse noise / unknown damage")
    p.add_argument("image")
    p.add_argument("output")
    p.add_argument("--mask", default=None, help="optional mask of known-missing pixels")
    _add_pipeline_flags(p)
    _add_solver_flags(p)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("destripe", help="remove stripe noise (whole-image solve)")
    p.add_argument("image")
    p.add_argument("output", help="destriped image (the sparse component)")
    p.add_argument("--stripes-out", default=None, help="also write the stripe field")
    _add_solver_flags(p)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("metrics", help="PSNR and SSIM between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("genmask", help="generate a deterministic mask image")
    p.add_argument("output")
    p.add_argument("--kind", choices=("random_pixels", "random_blocks", "lines"), required=True)
    p.add_argument("--size", required=True, help="HxW, e.g. 256x256")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rate", type=float, default=None, help="hidden fraction (random_pixels)")
    p.add_argument("--count", type=int, default=None, help="number of blocks or lines")
    p.add_argument("--orient", choices=("horizontal", "vertical"), default=None)
    p.add_argument("--json", action="store_true")
    return parser


def _solver_config(args, lam_fallback=1.0):
    return SolverConfig(
        lam=args.lam if args.lam is not None else lam_fallback,
        eta=args.eta,
        rho=args.rho,
        mu0=args.mu0,
        tol=args.tol,
        max_iter=args.max_iter,
    )


def _pipeline_config(args, mode):
    return PipelineConfig(
        patch_side=args.patch_side,
        stride=args.stride,
        partition=build_partition(args.partition, args.regions, args.radius),
        solver=_solver_config(args),
        lam=args.lam,
        outer_tol=args.outer_tol,
        max_outer=args.max_outer,
        mode=mode,
        threads=args.threads,
    )


def _solver_echo(report, cfg):
    report.update(
        {
            "lambda": cfg.lam,
            "eta": cfg.eta,
            "rho": cfg.rho,
            "mu0": "auto" if cfg.mu0 is None else cfg.mu0,
            "tol": cfg.tol,
            "max_iter": cfg.max_iter,
        }
    )


def _pipeline_echo(report, args, cfg, lam):
    report.update(
        {
            "patch_side": cfg.patch_side,
            "stride": cfg.stride,
            "partition": args.partition,
            "regions": args.regions,
            "radius": args.radius,
            "outer_tol": cfg.outer_tol,
            "max_outer": cfg.max_outer,
            "threads": cfg.threads,
        }
    )
    _solver_echo(report, replace(cfg.solver, lam=lam))


def _finish_quality(report, image, reference_path):
    if reference_path is not None:
        ref = read_image(reference_path)
        report["psnr"] = psnr(image, ref)
        report["ssim"] = ssim(image, ref)


def cmd_complete(args):
    started = time.time()
    image = read_image(args.image)
    mask = load_mask(args.mask)
    cfg = _solver_config(args)
    if args.solver == "ncwlrd":
        dec = decompose(image * mask, mask, cfg)
    else:
        dec = nuclear_decompose(image * mask, mask, cfg.lam, cfg)
    write_image(args.output, dec.low_rank)
    report = {
        "mode": f"complete/{args.solver}",
        "input": args.image,
        "mask": args.mask,
        "output": args.output,
    }
    _solver_echo(report, cfg)
    report["iterations"] = dec.iterations
    report["converged"] = dec.converged
    if dec.residual_history:
        report["final_residual"] = dec.residual_history[-1]
    _finish_quality(report, dec.low_rank, args.reference)
    report["seconds"] = time.time() - started
    emit_report(report, args.json)
    return EXIT_OK if dec.converged else EXIT_NOT_CONVERGED


def _run_pipeline(args, mode):
    started = time.time()
    image = read_image(args.image)
    if mode == "blind":
        mask = load_mask(args.mask) if args.mask else np.ones_like(image)
    else:
        mask = load_mask(args.mask)
    reference = read_image(args.reference) if args.reference else None
    cfg = _pipeline_config(args, mode)
    runner = blind_inpaint if mode == "blind" else inpaint
    result = runner(image, mask, cfg, reference=reference)
    write_image(args.output, result.image)

    report = {
        "mode": mode,
        "input": args.image,
        "mask": args.mask if args.mask else "none",
        "output": args.output,
        "reference": args.reference or "none",
    }
    _pipeline_echo(report, args, cfg, effective_lam(cfg, image.shape))
    report["outer_iterations"] = result.outer_iterations
    report["change_per_iteration"] = result.per_iteration_change
    if result.per_iteration_psnr is not None:
        report["psnr_per_iteration"] = result.per_iteration_psnr
    report["nonconverged_groups"] = result.nonconverged_groups
    _finish_quality(report, result.image, args.reference)
    report["seconds"] = time.time() - started
    emit_report(report, args.json)
    return EXIT_OK if result.nonconverged_groups == 0 else EXIT_NOT_CONVERGED


def cmd_inpaint(args):
    return _run_pipeline(args, "inpaint")


def cmd_blind(args):
    return _run_pipeline(args, "blind")


def cmd_destripe(args):
    started = time.time()
    image = read_image(args.image)
    cfg = PipelineConfig(mode="destripe", solver=_solver_config(args), lam=args.lam)
    result = destripe(image, cfg)
    write_image(args.output, result.clean)
    if args.stripes_out:
        write_image(args.stripes_out, result.stripes)
    dec = result.decomposition
    report = {
        "mode": "destripe",
        "input": args.image,
        "output": args.output,
        "stripes_output": args.stripes_out or "none",
    }
    _solver_echo(report, replace(cfg.solver, lam=effective_lam(cfg, image.shape)))
    report["iterations"] = dec.iterations
    report["converged"] = dec.converged
    if dec.residual_history:
        report["final_residual"] = dec.residual_history[-1]
    report["seconds"] = time.time() - started
    emit_report(report, args.json)
    return EXIT_OK if dec.converged else EXIT_NOT_CONVERGED


def cmd_metrics(args):
    a = read_image(args.image_a)
    b = read_image(args.image_b)
    emit_report({"psnr": psnr(a, b), "ssim": ssim(a, b)}, args.json)
    return EXIT_OK


def cmd_genmask(args):
    try:
        height, width = (int(part) for part in args.size.lower().split("x"))
    except ValueError as exc:
        raise UsageError(f"--size must look like 256x256, got {args.size!r}") from exc
    recipe = MaskRecipe(
        kind=args.kind,
        rate=args.rate,
        count=args.count,
        orientation=args.orient,
        seed=args.seed,
    )
    mask = gen_mask(recipe, height, width)
    write_mask(args.output, mask)
    emit_report(
        {
            "mode": "genmask",
            "kind": args.kind,
            "size": f"{height}x{width}",
            "seed": args.seed,
            "rate": "none" if args.rate is None else args.rate,
            "count": "none" if args.count is None else args.count,
            "orient": args.orient or "none",
            "output": args.output,
            "hidden_pixels": int((mask == 0.0).sum()),
        },
        args.json,
    )
    return EXIT_OK


COMMANDS = {
    "complete": cmd_complete,
    "inpaint": cmd_inpaint,
    "blind": cmd_blind,
    "destripe": cmd_destripe,
    "metrics": cmd_metrics,
    "genmask": cmd_genmask,
}


def run(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

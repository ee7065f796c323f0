"""Command-line surface: certify, radius-table, aliasing, predict.

Defaults follow the standard certification protocol (error rate 0.001,
1e5 estimation samples, 100 selection samples, batch 400, rotation grid
10000 x 1000, scaling grid 1000 x 250).  Rotation angles are taken in
degrees at the CLI and converted to radians internally.
"""

from __future__ import annotations

import argparse
import datetime
import math
import os
import sys

import numpy as np

from . import io as semio
from .aliasing import IntervalGrid, aliasing_bound
from .classifiers import ConstantClassifier, MeanThresholdClassifier
from .pipeline import (ParameterSet, certify_bc_rectangle, certify_diff_resolvable,
                       certify_resolvable, certify_translation_enum,
                       robust_accuracy_report)
from .radii import ConfidencePair, DistributionSpec, closed_form_radius
from .smoothing import ABSTAIN, SmoothedQuery, predict
from .statfn import ConfidenceParams
from .transforms import additive_pixel_transform, transform_spec

__all__ = ["run_cli", "main"]

_UNIT_VARIANCE_SCALES = {
    "gaussian": (1.0,),
    "exponential": (1.0,),
    "uniform": (-math.sqrt(3.0), math.sqrt(3.0)),
    "laplace": (1.0 / math.sqrt(2.0),),
    "folded_gaussian": (math.sqrt(math.pi / (math.pi - 2.0)),),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semcert",
        description="Certify smoothed classifiers against semantic image transforms.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_conf(p):
        p.add_argument("--alpha", type=float, default=0.001,
                       help="certification error rate (default 0.001)")
        p.add_argument("--n", type=int, default=100_000,
                       help="estimation samples (default 100000)")
        p.add_argument("--n0", type=int, default=100,
                       help="class-selection samples (default 100)")
        p.add_argument("--seed", type=int, default=0, help="reproducibility seed")

    def add_classifier(p):
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--weights", help="SEMW1 linear classifier file")
        g.add_argument("--synthetic",
                       help="synthetic classifier: constant:<label>[:<classes>] "
                            "or mean:<threshold>")

    cert = sub.add_parser("certify", help="certify a dataset against one transform")
    cert.add_argument("--transform", required=True,
                      choices=["blur", "brightness-contrast", "translation-reflect",
                               "translation-black", "rotation", "scaling"])
    cert.add_argument("--dataset", required=True, help="IDX image file")
    cert.add_argument("--labels", required=True, help="IDX label file")
    cert.add_argument("--stride", type=int, default=1,
                      help="evaluate every stride-th sample (default 1)")
    add_classifier(cert)
    add_conf(cert)
    cert.add_argument("--batch", type=int, default=400,
                      help="progressive certification batch size (default 400)")
    cert.add_argument("--alpha-max", type=float, help="blur region: max squared radius")
    cert.add_argument("--rho", type=float, help="translation region: displacement radius")
    cert.add_argument("--k-range", type=float, nargs=2, metavar=("LO", "HI"),
                      help="brightness/contrast region: log-contrast range")
    cert.add_argument("--b-range", type=float, nargs=2, metavar=("LO", "HI"),
                      help="brightness/contrast region: brightness range")
    cert.add_argument("--interval", type=float, nargs=2, metavar=("LO", "HI"),
                      help="rotation (degrees) or scaling (factor) interval")
    cert.add_argument("--noise-family", default=None,
                      choices=["gaussian", "exponential", "uniform", "laplace",
                               "folded_gaussian"],
                      help="blur smoothing noise family (default exponential)")
    cert.add_argument("--noise-scale", type=float, default=1.0,
                      help="blur noise scale: rate for exponential, upper end for "
                           "uniform [0,a], scale otherwise")
    cert.add_argument("--noise-sigma", type=float, default=0.25,
                      help="gaussian sigma for translation / additive smoothing")
    cert.add_argument("--sigma-k", type=float, default=0.3,
                      help="contrast noise std for brightness-contrast")
    cert.add_argument("--sigma-b", type=float, default=0.3,
                      help="brightness noise std for brightness-contrast")
    cert.add_argument("--grid-n", type=int, default=None,
                      help="outer anchors for rotation/scaling (default 10000/1000)")
    cert.add_argument("--grid-r", type=int, default=None,
                      help="inner subsamples for rotation/scaling (default 1000/250)")
    cert.add_argument("--output", required=True,
                      help="output prefix: writes <prefix>.csv and <prefix>.json")

    table = sub.add_parser("radius-table",
                           help="closed-form radius over a p_A grid as CSV")
    table.add_argument("--family", required=True,
                       choices=["gaussian", "exponential", "uniform", "laplace",
                                "folded_gaussian"])
    table.add_argument("--sigma", type=float, help="gaussian / folded gaussian sigma")
    table.add_argument("--lambda", dest="rate", type=float, help="exponential rate")
    table.add_argument("--uniform-range", type=float, nargs=2, metavar=("A", "B"))
    table.add_argument("--laplace-scale", type=float)
    table.add_argument("--p-grid", default=None,
                       help="comma-separated p_A values (default 0.500..0.999 by 0.001)")
    table.add_argument("--output", default=None, help="CSV path (default stdout)")

    alias = sub.add_parser("aliasing", help="aliasing bound M and Lipschitz L")
    alias.add_argument("--image", required=True, help="SEMT1 tensor file")
    alias.add_argument("--kind", required=True, choices=["rotation", "scaling"])
    alias.add_argument("--interval", type=float, nargs=2, required=True,
                       metavar=("LO", "HI"),
                       help="rotation interval in degrees, scaling in factors")
    alias.add_argument("--grid-n", type=int, default=None)
    alias.add_argument("--grid-r", type=int, default=None)

    pred = sub.add_parser("predict", help="single-sample smoothed prediction")
    pred.add_argument("--image", required=True, help="SEMT1 tensor file")
    add_classifier(pred)
    add_conf(pred)
    pred.add_argument("--transform", required=True,
                      choices=["blur", "brightness-contrast", "translation-reflect",
                               "additive"])
    pred.add_argument("--noise-family", default=None,
                      choices=["gaussian", "exponential", "uniform", "laplace",
                               "folded_gaussian"])
    pred.add_argument("--noise-scale", type=float, default=1.0)
    pred.add_argument("--noise-sigma", type=float, default=0.25)
    pred.add_argument("--sigma-k", type=float, default=0.3)
    pred.add_argument("--sigma-b", type=float, default=0.3)
    return parser


def _classifier_from_args(args):
    if args.weights is not None:
        return semio.load_linear_classifier(args.weights)
    spec = args.synthetic.split(":")
    if spec[0] == "constant":
        label = int(spec[1])
        classes = int(spec[2]) if len(spec) > 2 else max(2, label + 1)
        return ConstantClassifier(label, classes)
    if spec[0] == "mean":
        return MeanThresholdClassifier(float(spec[1]))
    raise ValueError(f"unknown synthetic classifier spec {args.synthetic!r}")


def _blur_noise(args) -> DistributionSpec:
    family = args.noise_family or "exponential"
    if family == "uniform":
        return DistributionSpec("uniform", (0.0, args.noise_scale), dim=1)
    if family == "gaussian":
        raise ValueError("blur smoothing needs a one-sided or symmetric scalar family")
    return DistributionSpec(family, (args.noise_scale,), dim=1)


def _smoothing_setup(args, shape):
    """(transform, noise) for the certify/predict transform choice."""
    t = args.transform
    if t == "blur":
        return transform_spec("gaussian_blur"), _blur_noise(args)
    if t == "brightness-contrast":
        return (transform_spec("brightness_contrast"),
                DistributionSpec("gaussian", (args.sigma_k, args.sigma_b), dim=2))
    if t == "translation-reflect":
        return (transform_spec("translation_reflect"),
                DistributionSpec("gaussian", (args.noise_sigma,), dim=2))
    if t in ("rotation", "scaling", "additive"):
        transform = additive_pixel_transform(shape)
        return transform, DistributionSpec("gaussian", (args.noise_sigma,),
                                           dim=transform.param_dim)
    raise ValueError(f"no smoothing setup for transform {t!r}")


def _require(value, flag: str, transform: str):
    if value is None:
        raise ValueError(f"--{flag} is required for --transform {transform}")
    return value


def _cmd_certify(args) -> int:
    for path in (args.dataset, args.labels):
        if not os.path.exists(path):
            print(f"error: dataset path not found: {path}", file=sys.stderr)
            return 2
    if args.weights is not None and not os.path.exists(args.weights):
        print(f"error: classifier path not found: {args.weights}", file=sys.stderr)
        return 2
    images, labels = semio.read_idx(args.dataset, args.labels)
    if args.stride < 1:
        raise ValueError("--stride must be >= 1")
    dataset = [(images[i], int(labels[i])) for i in range(0, len(images), args.stride)]
    classifier = _classifier_from_args(args)
    conf = ConfidenceParams(args.alpha, args.n, args.n0)
    shape = dataset[0][0].shape

    t = args.transform
    grid = None
    if t == "translation-black":
        region = ParameterSet.translation_disk(_require(args.rho, "rho", t))

        def certifier(x, label):
            return certify_translation_enum(x, label, classifier, region)

        # clean predictions still need a smoothed query; use reflect smoothing
        def query_for_clean(x):
            return SmoothedQuery(classifier, transform_spec("translation_reflect"),
                                 DistributionSpec("gaussian", (args.noise_sigma,), dim=2),
                                 conf, args.seed)
    else:
        transform, noise = _smoothing_setup(args, shape)

        def query_for_clean(x):
            return SmoothedQuery(classifier, transform, noise, conf, args.seed)

        if t == "blur":
            region = ParameterSet.blur_interval(_require(args.alpha_max, "alpha-max", t))

            def certifier(x, label):
                return certify_resolvable(x, label, query_for_clean(x), region)
        elif t == "translation-reflect":
            region = ParameterSet.translation_disk(_require(args.rho, "rho", t))

            def certifier(x, label):
                return certify_resolvable(x, label, query_for_clean(x), region)
        elif t == "brightness-contrast":
            k_lo, k_hi = _require(args.k_range, "k-range", t)
            b_lo, b_hi = _require(args.b_range, "b-range", t)
            region = ParameterSet.bc_rect(k_lo, k_hi, b_lo, b_hi)

            def certifier(x, label):
                return certify_bc_rectangle(x, label, query_for_clean(x), region)
        else:  # rotation / scaling
            lo, hi = _require(args.interval, "interval", t)
            if t == "rotation":
                lo, hi = math.radians(lo), math.radians(hi)
            region = ParameterSet.interval(lo, hi)
            n_outer = args.grid_n or (10_000 if t == "rotation" else 1_000)
            n_inner = args.grid_r or (1_000 if t == "rotation" else 250)
            grid = IntervalGrid(t, lo, hi, n_outer, n_inner)

            def certifier(x, label):
                return certify_diff_resolvable(x, label, query_for_clean(x),
                                               region, grid, batch=args.batch)

    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    report = robust_accuracy_report(dataset, query_for_clean, certifier)
    rows = semio.rows_from_table(report)
    echo = {k: v for k, v in vars(args).items() if k != "command"}
    semio.write_report_csv(rows, args.output + ".csv")
    semio.write_summary_json(semio.report_summary(report, echo, started),
                             args.output + ".json")
    print(f"wrote {args.output}.csv and {args.output}.json "
          f"({len(rows)} samples, robust accuracy "
          f"{report.robust_accuracy if report.robust_accuracy is not None else 'n/a'})")
    return 0


def _radius_table_dist(args) -> DistributionSpec:
    family = args.family
    if family in ("gaussian", "folded_gaussian"):
        scale = (args.sigma,) if args.sigma is not None else _UNIT_VARIANCE_SCALES[family]
        return DistributionSpec(family, scale, dim=1)
    if family == "exponential":
        scale = (args.rate,) if args.rate is not None else _UNIT_VARIANCE_SCALES[family]
        return DistributionSpec(family, scale, dim=1)
    if family == "uniform":
        rng = tuple(args.uniform_range) if args.uniform_range else \
            _UNIT_VARIANCE_SCALES[family]
        return DistributionSpec(family, rng, dim=1)
    scale = ((args.laplace_scale,) if args.laplace_scale is not None
             else _UNIT_VARIANCE_SCALES["laplace"])
    return DistributionSpec("laplace", scale, dim=1)


def _cmd_radius_table(args) -> int:
    dist = _radius_table_dist(args)
    if args.p_grid is not None:
        p_values = [float(s) for s in args.p_grid.split(",")]
    else:
        p_values = [i / 1000.0 for i in range(500, 1000)]
    lines = ["p_a,radius"]
    for p in p_values:
        radius = closed_form_radius(dist, ConfidencePair(p)).value
        lines.append(f"{p!r},{radius!r}")
    text = "\n".join(lines) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as f:
            f.write(text)
    return 0


def _cmd_aliasing(args) -> int:
    if not os.path.exists(args.image):
        print(f"error: image path not found: {args.image}", file=sys.stderr)
        return 2
    x = semio.read_tensor(args.image)
    lo, hi = args.interval
    if args.kind == "rotation":
        lo, hi = math.radians(lo), math.radians(hi)
    n_outer = args.grid_n or (10_000 if args.kind == "rotation" else 1_000)
    n_inner = args.grid_r or (1_000 if args.kind == "rotation" else 250)
    grid = IntervalGrid(args.kind, lo, hi, n_outer, n_inner)
    bound = aliasing_bound(x, args.kind, grid, keep_per_interval=False)
    print("m,sqrt_m,lipschitz_l")
    print(f"{bound.m_value!r},{bound.sqrt_m!r},{bound.lipschitz_l!r}")
    return 0


def _cmd_predict(args) -> int:
    if not os.path.exists(args.image):
        print(f"error: image path not found: {args.image}", file=sys.stderr)
        return 2
    x = semio.read_tensor(args.image)
    classifier = _classifier_from_args(args)
    transform, noise = _smoothing_setup(args, x.shape)
    q = SmoothedQuery(classifier, transform, noise,
                      ConfidenceParams(args.alpha, args.n, args.n0), args.seed)
    label = predict(q, x)
    print("abstain" if label == ABSTAIN else str(label))
    return 0


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "certify":
            return _cmd_certify(args)
        if args.command == "radius-table":
            return _cmd_radius_table(args)
        if args.command == "aliasing":
            return _cmd_aliasing(args)
        if args.command == "predict":
            return _cmd_predict(args)
        parser.error(f"unknown command {args.command!r}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

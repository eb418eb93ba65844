"""Command-line front end: detect, simulate, quantiles, surface.

Structured results are written as JSON, grids and histograms as CSV (with a
leading ``# config: ...`` comment so every file can be replayed). Exit codes:
0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .detector import DetectionConfig, detect
from .errors import DataError
from .gpsim import estimated_driver, pivotal_driver, quantile_curve
from .lrv import KernelSpec, hac_sigma
from .montecarlo import MODEL_TOKENS, ModelSpec, default_config, run_study
from .series import RescaledGrid, load_series
from .tvmeasure import dsup_profile
from .features import parse_family_token
from .series import build_prefix_sums

SYNOPSIS = "usage: gradcp {detect,simulate,quantiles,surface} [options]   (see --help)"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # do not sys.exit(2); usage errors map to 1
        raise UsageError(message)


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--feature", default="mean", help="mean | variance | acf:<p> | cov")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--reverse", action="store_true", help="estimate the start of the terminal stability span")
    p.add_argument("--scaled", action="store_true", default=None,
                   help="force the sigma-scaled statistic with the pivotal kernel")
    p.add_argument("--pivotal", dest="scaled", action="store_true",
                   help="alias of --scaled (force the known-kernel path)")
    p.add_argument("--sigma-method", choices=("residual", "diff"), default="residual")
    p.add_argument("--h", dest="nw_bandwidth", type=float, default=0.2,
                   help="smoothing bandwidth in rescaled time")
    p.add_argument("--hac-bandwidth", type=float, default=10.0)
    p.add_argument("--kernel", choices=("bartlett", "flattop"), default="bartlett")
    p.add_argument("--centering", choices=("nw", "global", "none"), default="nw")
    p.add_argument("--precenter", choices=("none", "global", "nw"), default="none")
    p.add_argument("--sims", dest="n_draws", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-size", type=int, default=None)
    p.add_argument("--method", choices=("auto", "brute", "hull"), default="auto")
    p.add_argument("--threads", type=int, default=None, help="worker cap for replicated runs")
    p.add_argument("--out", default=".", help="output directory")


def _build_parser() -> _Parser:
    parser = _Parser(prog="gradcp", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p_detect = sub.add_parser("detect", help="estimate the change point of a CSV series")
    p_detect.add_argument("--input", required=True)
    _add_detector_flags(p_detect)

    p_sim = sub.add_parser("simulate", help="replicated generate-and-detect study")
    p_sim.add_argument("--model", required=True, choices=MODEL_TOKENS)
    p_sim.add_argument("--T", dest="n_obs", type=int, required=True)
    p_sim.add_argument("--N", dest="n_replicates", type=int, required=True)
    p_sim.add_argument("--defaults", action="store_true",
                       help="use the model's reference detector settings instead of the flags")
    _add_detector_flags(p_sim)

    p_q = sub.add_parser("quantiles", help="write a quantile curve CSV")
    p_q.add_argument("--input", default=None, help="CSV series for the estimated kernel")
    _add_detector_flags(p_q)

    p_surf = sub.add_parser("surface", help="write the raw time-variation surface CSV")
    p_surf.add_argument("--input", required=True)
    _add_detector_flags(p_surf)
    return parser


def _config_from_args(args) -> DetectionConfig:
    return DetectionConfig(
        feature=args.feature,
        alpha=args.alpha,
        direction="reverse" if args.reverse else "forward",
        scaled=args.scaled,
        sigma_method=args.sigma_method,
        nw_bandwidth=args.nw_bandwidth,
        hac_bandwidth=args.hac_bandwidth,
        hac_kernel=args.kernel,
        centering=args.centering,
        precenter=args.precenter,
        n_draws=args.n_draws,
        seed=args.seed,
        grid_size=args.grid_size,
        method=args.method,
    )


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _write_curve_csv(path: Path, curve, comment: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["u", "q"])
        for u, q in zip(curve.grid.points, curve.q):
            writer.writerow([repr(float(u)), repr(float(q))])


def _comment(config_dict: dict) -> str:
    return "config: " + json.dumps(config_dict, sort_keys=True)


def _cmd_detect(args) -> int:
    config = _config_from_args(args)
    sample = load_series(args.input)
    result = detect(sample, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = result.to_dict()
    payload["config"] = config.to_dict()
    payload["input"] = args.input
    _write_json(out / "detection.json", payload)
    result.surface.write_csv(out / "surface.csv", comment=_comment(payload["config"]))
    _write_curve_csv(out / "quantiles.csv", result.quantiles, _comment(payload["config"]))
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_simulate(args) -> int:
    spec = ModelSpec(model=args.model, n_obs=args.n_obs, seed=args.seed)
    config = default_config(args.model, alpha=args.alpha, n_draws=args.n_draws,
                            seed=args.seed) if args.defaults else _config_from_args(args)
    summary = run_study(spec, args.n_replicates, config, master_seed=args.seed,
                        threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = summary.to_dict()
    _write_json(out / "study.json", payload)
    with open(out / "histogram.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {_comment(payload['config'])}\n")
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "count"])
        for left, right, count in summary.histogram_rows():
            writer.writerow([repr(float(left)), repr(float(right)), count])
    brief = {k: payload[k] for k in ("model", "T", "N", "median", "iqr",
                                     "underestimation_fraction", "n_failed")}
    print(json.dumps(brief, indent=2))
    return 0


def _cmd_quantiles(args) -> int:
    config = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.input is None:
        m = args.grid_size or 512
        driver = pivotal_driver(RescaledGrid.equispaced(m), config.n_draws, config.seed)
    else:
        sample = load_series(args.input)
        family = parse_family_token(config.feature, d=sample.dim)
        n = sample.n_obs
        m = config.grid_size or min(n, 512)
        sim_grid = RescaledGrid.equispaced(m)
        lrv_idx = np.unique((sim_grid.indices.astype(np.int64) * n) // m)
        cov = hac_sigma(sample, family, kernel=KernelSpec(config.hac_kernel, config.hac_bandwidth),
                        centering=config.centering, grid=RescaledGrid(lrv_idx, n),
                        h=config.nw_bandwidth)
        driver = estimated_driver(cov, config.n_draws, config.seed, grid=sim_grid)
    curve = quantile_curve(driver, config.alpha)
    _write_curve_csv(out / "quantiles.csv", curve, _comment(config.to_dict()))
    print(f"wrote {out / 'quantiles.csv'} ({curve.grid.size} points, alpha={config.alpha})")
    return 0


def _cmd_surface(args) -> int:
    config = _config_from_args(args)
    sample = load_series(args.input)
    family = parse_family_token(config.feature, d=sample.dim)
    if family.embedding_lag > 0:
        from .features import embed_lags

        sample = embed_lags(sample, family.embedding_lag)
    prefix = build_prefix_sums(sample, family)
    surface = dsup_profile(prefix, family, method=config.method)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    surface.write_csv(out / "surface.csv", comment=_comment(config.to_dict()))
    print(f"wrote {out / 'surface.csv'} ({surface.grid.size} points)")
    return 0


def run(argv: list[str] | None = None) -> int:
    """Parse arguments and execute; returns the process exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command")
        env_seed = os.environ.get("GRADCP_SEED")
        if env_seed is not None:
            try:
                args.seed = int(env_seed)
            except ValueError:
                raise UsageError(f"GRADCP_SEED must be an integer, got {env_seed!r}") from None
        handler = {
            "detect": _cmd_detect,
            "simulate": _cmd_simulate,
            "quantiles": _cmd_quantiles,
            "surface": _cmd_surface,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(SYNOPSIS, file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def main() -> None:  # console entry point
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line entry point.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .calibration import calibrate, fit_smile_stats
from .dataio import (
    PARAM_COLUMNS, PDF_COLUMNS, SMILE_COLUMNS, STATS_COLUMNS, bundled_path, load_market_csv,
    load_stats_csv, param_rows, stats_rows, to_csv, to_text,
)
from .errors import InputError, LinOUError
from .montecarlo import mc_call_price, mc_smile_stats, simulate_many
from .params import ModelKind, ModelParams
from .pipeline import PDF_GRID, PipelineConfig, RunManifest, replay, run_pipeline
from .pricer import contour_offset, implied_vol, lewis_call, pdf_from_cf

GLOBAL_DEFAULTS = {
    "model": "Linear",
    "seed": PipelineConfig.seed,
    "paths": PipelineConfig.n_paths,
    "steps_per_year": PipelineConfig.steps_per_year,
    "lam": PipelineConfig.lam,
    "quad_tol": PipelineConfig.quad_tol,
    "out_dir": None,
    "params_file": None,
    "verbose": False,
}


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # subcommand copies use SUPPRESS so they only override when given
    def d(name):
        return argparse.SUPPRESS if suppress else GLOBAL_DEFAULTS[name]

    parser.add_argument("--model", default=d("model"),
                        help="Linear, ExpOU or SteinStein (default Linear)")
    parser.add_argument("--seed", type=int, default=d("seed"), help="Monte Carlo seed")
    parser.add_argument("--paths", type=int, default=d("paths"), help="Monte Carlo paths")
    parser.add_argument("--steps-per-year", type=int, default=d("steps_per_year"),
                        help="Euler steps per year")
    parser.add_argument("--lambda", dest="lam", type=float, default=d("lam"),
                        help="contour position as a fraction of the upper pole (0, 1]")
    parser.add_argument("--quad-tol", type=float, default=d("quad_tol"),
                        help="absolute quadrature tolerance per unit spot")
    parser.add_argument("--out-dir", type=Path, default=d("out_dir"),
                        help="write reports here instead of only printing")
    parser.add_argument("--params-file", type=Path, default=d("params_file"),
                        help="model parameters (key = value); skips calibration")
    parser.add_argument("-v", "--verbose", action="store_true", default=d("verbose"))


def _config(args) -> PipelineConfig:
    return PipelineConfig(model=ModelKind.parse(args.model).value, seed=args.seed,
                          n_paths=args.paths, steps_per_year=args.steps_per_year,
                          lam=args.lam, quad_tol=args.quad_tol,
                          pdf_tau=getattr(args, "pdf_tau", None),
                          seed_resamples=getattr(args, "seed_resamples", 0))


def _emit(args, name: str, columns, rows) -> None:
    print(to_text(columns, rows), end="")
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        (args.out_dir / f"{name}.csv").write_text(to_csv(columns, rows))
        (args.out_dir / f"{name}.txt").write_text(to_text(columns, rows))


def _require_params(args) -> ModelParams:
    if args.params_file is None:
        raise InputError("--params-file is required for this command")
    return ModelParams.read(args.params_file)


def _params_or_calibrate(args, ds) -> tuple[ModelParams, object]:
    if args.params_file is not None:
        return ModelParams.read(args.params_file), None
    cfg = _config(args)
    stats = [fit_smile_stats(b, ds.S0) for b in ds.quote_blocks]
    res = calibrate(stats, args.model, mc=cfg.sim_config())
    return res.params, res


def cmd_fit_smile(args) -> int:
    ds = load_market_csv(args.data)
    stats = [fit_smile_stats(b, ds.S0) for b in ds.quote_blocks]
    _emit(args, "smile_stats", STATS_COLUMNS, stats_rows(stats))
    return 0


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    if args.stats is not None:
        stats = load_stats_csv(args.stats)
    else:
        ds = load_market_csv(args.data)
        stats = [fit_smile_stats(b, ds.S0) for b in ds.quote_blocks]
    res = calibrate(stats, args.model, mc=cfg.sim_config(), seed_resamples=cfg.seed_resamples)
    _emit(args, "params", PARAM_COLUMNS, param_rows(res))
    print(f"objective = {res.objective_value:.6g}")
    if res.seed_errors:
        print("seed-resampled errors: "
              + ", ".join(f"{k}={v:.3g}" for k, v in res.seed_errors.items()))
    if args.out_dir is not None:
        res.params.write(args.out_dir / "params_used.txt")
    return 0


def cmd_price(args) -> int:
    p = _require_params(args)
    kind = ModelKind.parse(args.model)
    strikes = np.asarray(args.strike, dtype=float)
    rows = []
    if kind is ModelKind.EXPOU:
        e = simulate_many(kind, p, [args.tau], _config(args).sim_config())[0]
        for K, est in zip(strikes, mc_call_price(e, args.spot, strikes, args.rate)):
            rows.append((args.tau, float(K), est.value, est.std_error,
                         implied_vol(est.value, args.spot, float(K), args.rate, args.tau)))
    else:
        cc = contour_offset(p, args.lam, quad_abs_tol=args.quad_tol)
        prices = lewis_call(args.spot, strikes, args.rate, args.tau, p, cc=cc)
        for K, price in zip(strikes, prices):
            rows.append((args.tau, float(K), float(price), 0.0,
                         implied_vol(float(price), args.spot, float(K), args.rate, args.tau)))
    _emit(args, "prices", ("tau_yr", "strike", "price", "std_error", "implied_vol"), rows)
    return 0


def cmd_smile(args) -> int:
    from .pipeline import mc_smile, quadrature_smile

    ds = load_market_csv(args.data)
    p, res = _params_or_calibrate(args, ds)
    cfg = _config(args)
    if ModelKind.parse(args.model) is ModelKind.EXPOU:
        rows = mc_smile(ModelKind.EXPOU, p, ds, cfg.sim_config())
    else:
        rows = quadrature_smile(p, ds, None if res is None else res.covariance, cfg)
    _emit(args, "smile", SMILE_COLUMNS, rows)
    return 0


def cmd_pdf(args) -> int:
    p = _require_params(args)
    x = np.linspace(args.x_min, args.x_max, args.points)
    dens = pdf_from_cf(x, args.tau, p)
    _emit(args, "pdf", PDF_COLUMNS, list(zip(x.tolist(), dens.tolist())))
    return 0


def cmd_simulate(args) -> int:
    p = _require_params(args)
    ens = simulate_many(args.model, p, args.tau, _config(args).sim_config())
    rows = []
    for e in ens:
        s = mc_smile_stats(e)
        rows.append((e.tau, s.sigma, s.sigma_err, s.zeta, s.zeta_err, s.kappa, s.kappa_err))
        if args.out_dir is not None:
            args.out_dir.mkdir(parents=True, exist_ok=True)
            e.save(args.out_dir / f"ensemble_tau{e.tau:g}.f64")
    _emit(args, "mc_stats", STATS_COLUMNS, rows)
    return 0


def cmd_run(args) -> int:
    ds = load_market_csv(args.data)
    params = ModelParams.read(args.params_file) if args.params_file is not None else None
    inputs = {"market": args.data}
    if args.params_file is not None:
        inputs["params_file"] = args.params_file
    bundle = run_pipeline(ds, config=_config(args), params=params, inputs=inputs)
    print(bundle.files["smile_stats.txt"], end="")
    if "params.txt" in bundle.files:
        print(bundle.files["params.txt"], end="")
    print(bundle.files["smile.txt"], end="")
    if args.out_dir is not None:
        bundle.write(args.out_dir)
    return 0


def cmd_replay(args) -> int:
    manifest = RunManifest.from_json(Path(args.manifest).read_text())
    bundle = replay(manifest, check_outputs=not args.no_check)
    if args.out_dir is not None:
        bundle.write(args.out_dir)
    print(f"replayed {len(bundle.files)} outputs; all digests match" if not args.no_check
          else f"replayed {len(bundle.files)} outputs")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linou", description="Linear OU stochastic-volatility pricing and calibration"
    )
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", type=Path, default=bundled_path(),
                      help="market smile CSV (default: bundled reference file)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-smile", parents=[common, data], help="per-maturity smile statistics")
    p.set_defaults(func=cmd_fit_smile)

    p = sub.add_parser("calibrate", parents=[common, data], help="fit model parameters")
    p.add_argument("--stats", type=Path, default=None,
                   help="use precomputed statistics (tau_yr,sigma,sigma_err,...) instead of --data")
    p.add_argument("--seed-resamples", type=int, default=0,
                   help="ExpOU only: re-fit under this many extra MC seeds")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("price", parents=[common], help="European call prices")
    p.add_argument("--spot", type=float, required=True)
    p.add_argument("--strike", type=float, nargs="+", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--rate", type=float, default=0.0)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("smile", parents=[common, data], help="model smile at the market points")
    p.set_defaults(func=cmd_smile)

    p = sub.add_parser("pdf", parents=[common], help="density of the log-return")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--x-min", type=float, default=PDF_GRID[0])
    p.add_argument("--x-max", type=float, default=PDF_GRID[1])
    p.add_argument("--points", type=int, default=PDF_GRID[2])
    p.set_defaults(func=cmd_pdf)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo ensemble and statistics")
    p.add_argument("--tau", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", parents=[common, data], help="fit, calibrate, price and report")
    p.add_argument("--pdf-tau", type=float, default=None)
    p.add_argument("--seed-resamples", type=int, default=0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", parents=[common], help="re-run from a manifest.json")
    p.add_argument("manifest", type=Path)
    p.add_argument("--no-check", action="store_true", help="skip output digest comparison")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ModelKind.parse(args.model)
        return args.func(args)
    except LinOUError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

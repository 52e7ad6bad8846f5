"""Fit, calibrate, price and report in one reproducible run."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import metadata
from pathlib import Path

import numpy as np

from .calibration import CalibrationResult, calibrate, fit_smile_stats
from .dataio import (
    PARAM_COLUMNS, PDF_COLUMNS, SMILE_COLUMNS, STATS_COLUMNS, MarketDataset,
    load_market_csv, param_rows, stats_rows, to_csv, to_text,
)
from .errors import InputError, NumericalError, OutOfBounds
from .montecarlo import SimConfig, mc_call_price, simulate_many
from .params import ModelKind, ModelParams
from .pricer import DEFAULT_LAMBDA, bs_vega, implied_vol, pdf_from_cf, smile_curve, smile_error_band

PDF_GRID = (-2.0, 2.0, 801)


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class PipelineConfig:
    model: str = "Linear"
    seed: int = 20071122
    n_paths: int = 100_000
    steps_per_year: int = 250
    lam: float = DEFAULT_LAMBDA
    quad_tol: float = 1e-9
    pdf_tau: float | None = None
    seed_resamples: int = 0

    def sim_config(self) -> SimConfig:
        return SimConfig(n_paths=self.n_paths, n_steps=self.steps_per_year, seed=self.seed)


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: dict  # role -> {"path": ..., "sha256": ...}
    seed: int
    tool_version: str
    outputs: dict = field(default_factory=dict)  # file name -> sha256

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RunManifest:
        raw = json.loads(text)
        return cls(**{f.name: raw[f.name] for f in fields(cls) if f.name in raw})

    def pipeline_config(self) -> PipelineConfig:
        known = {f.name for f in fields(PipelineConfig)}
        return PipelineConfig(**{k: v for k, v in self.config.items() if k in known})


@dataclass
class ReportBundle:
    stats: list
    params: ModelParams
    calibration: CalibrationResult | None
    smile: list  # rows of SMILE_COLUMNS
    pdf: list | None
    files: dict  # file name -> text
    manifest: RunManifest | None = None

    def write(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in self.files.items():
            (out / name).write_text(text)
            written.append(out / name)
        if self.manifest is not None:
            (out / "manifest.json").write_text(self.manifest.to_json())
            written.append(out / "manifest.json")
        return written


def _market_points(ds: MarketDataset):
    return [(q.tau, ds.S0 * math.exp(-q.log_moneyness), q.r) for q in ds.quotes]


def quadrature_smile(p: ModelParams, ds: MarketDataset, cov, cfg: PipelineConfig):
    points = _market_points(ds)
    tol = {"quad_abs_tol": cfg.quad_tol}
    curve = smile_curve(p, points, ds.S0, cfg.lam, **tol)
    if cov is None:
        band = np.zeros(len(points))
    else:
        band = smile_error_band(p, cov, points, ds.S0, cfg.lam, **tol)
    return [(q.tau, q.log_moneyness, c.implied_vol, float(b))
            for q, c, b in zip(ds.quotes, curve, band)]


def mc_smile(kind, p: ModelParams, ds: MarketDataset, sim: SimConfig):
    """Implied vols of simulated call prices; the band is the MC error mapped through vega."""
    ens = {e.tau: e for e in simulate_many(kind, p, ds.taus, sim)}
    rows = []
    for q in ds.quotes:
        K = ds.S0 * math.exp(-q.log_moneyness)
        est = mc_call_price(ens[q.tau], ds.S0, K, q.r)
        try:
            iv = implied_vol(est.value, ds.S0, K, q.r, q.tau)
            band = est.std_error / bs_vega(ds.S0, K, q.r, q.tau, iv)
        except OutOfBounds:
            iv, band = math.nan, math.nan
        rows.append((q.tau, q.log_moneyness, iv, band))
    return rows


def run_pipeline(ds: MarketDataset, kind=None, config: PipelineConfig | None = None,
                 params: ModelParams | None = None, command: str = "run",
                 inputs: dict | None = None) -> ReportBundle:
    """Fit smile statistics, calibrate (unless ``params`` is given) and price.

    Emits the per-maturity statistics, the parameter table, the model
    smile at the market points with error bands and, if ``pdf_tau`` is
    set, the return density.  ``inputs`` maps input roles to file paths
    for the manifest.
    """
    config = config or PipelineConfig()
    if kind is not None:
        config = replace(config, model=ModelKind.parse(kind).value)
    kind = ModelKind.parse(config.model)

    stats = [fit_smile_stats(block, ds.S0) for block in ds.quote_blocks]
    files = {
        "smile_stats.csv": to_csv(STATS_COLUMNS, stats_rows(stats)),
        "smile_stats.txt": to_text(STATS_COLUMNS, stats_rows(stats)),
    }

    result = None
    cov = None
    if params is None:
        result = calibrate(stats, kind, mc=config.sim_config() if kind is ModelKind.EXPOU else None,
                           seed_resamples=config.seed_resamples)
        params = result.params
        cov = result.covariance
        files["params.csv"] = to_csv(PARAM_COLUMNS, param_rows(result))
        files["params.txt"] = to_text(PARAM_COLUMNS, param_rows(result))
    files["params_used.txt"] = params.to_text()

    if kind is ModelKind.EXPOU:
        smile = mc_smile(kind, params, ds, config.sim_config())
    else:
        # Stein-Stein is priced through its linearised closed form
        smile = quadrature_smile(params, ds, cov, config)
    files["smile.csv"] = to_csv(SMILE_COLUMNS, smile)
    files["smile.txt"] = to_text(SMILE_COLUMNS, smile)

    pdf = None
    if config.pdf_tau is not None:
        x = np.linspace(*PDF_GRID)
        dens = pdf_from_cf(x, config.pdf_tau, params)
        pdf = list(zip(x.tolist(), dens.tolist()))
        files["pdf.csv"] = to_csv(PDF_COLUMNS, pdf)

    manifest = RunManifest(
        command=command,
        config=asdict(config),
        inputs={role: {"path": str(path), "sha256": sha256_file(path)}
                for role, path in (inputs or {}).items()},
        seed=config.seed,
        tool_version=tool_version(),
        outputs={name: sha256_text(text) for name, text in sorted(files.items())},
    )
    return ReportBundle(stats=stats, params=params, calibration=result, smile=smile, pdf=pdf,
                        files=files, manifest=manifest)


def replay(manifest: RunManifest, check_outputs: bool = True) -> ReportBundle:
    """Re-run a recorded pipeline and confirm its outputs are unchanged."""
    for role, rec in manifest.inputs.items():
        if sha256_file(rec["path"]) != rec["sha256"]:
            raise InputError(f"input {role!r} at {rec['path']} changed since the recorded run")
    market = manifest.inputs.get("market")
    if market is None:
        raise InputError("manifest records no market input")
    ds = load_market_csv(market["path"])
    params_rec = manifest.inputs.get("params_file")
    params = ModelParams.read(params_rec["path"]) if params_rec else None
    bundle = run_pipeline(ds, config=manifest.pipeline_config(), params=params,
                          command=manifest.command,
                          inputs={role: rec["path"] for role, rec in manifest.inputs.items()})
    if check_outputs and bundle.manifest.outputs != manifest.outputs:
        changed = sorted(k for k in set(bundle.manifest.outputs) | set(manifest.outputs)
                         if bundle.manifest.outputs.get(k) != manifest.outputs.get(k))
        raise NumericalError(f"replayed outputs differ: {', '.join(changed)}")
    return bundle

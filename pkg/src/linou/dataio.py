"""Market smile files and plot-ready report tables.

Market files are CSV with the columns ``tau_yr, r_per_yr, log_moneyness,
implied_vol`` and one leading comment line carrying ``key=value`` pairs
for the spot, the valuation date and a source label::

    # S0=5.16, valuation_date=2007-11-22, source=...
    tau_yr,r_per_yr,log_moneyness,implied_vol
    0.0795,0.0425,0.0626,0.3354
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .calibration import CalibrationResult, MarketQuote
from .cumulants import SmileStats
from .errors import EmptyBlock, ParseError, SchemaMismatch

MARKET_COLUMNS = ("tau_yr", "r_per_yr", "log_moneyness", "implied_vol")
STATS_COLUMNS = ("tau_yr", "sigma", "sigma_err", "zeta", "zeta_err", "kappa", "kappa_err")
PARAM_COLUMNS = ("model", "alpha", "alpha_err", "k", "k_err", "m", "m_err",
                 "rho", "rho_err", "beta", "beta_err")
SMILE_COLUMNS = ("tau_yr", "log_moneyness", "model_iv", "band_std")
PDF_COLUMNS = ("x", "density")

BUNDLED_MARKET = "intesa_2007-11-22.csv"
BUNDLED_STATS = "intesa_2007-11-22_stats.csv"


@dataclass(frozen=True)
class MarketDataset:
    S0: float
    quote_blocks: tuple  # tuple of tuples of MarketQuote, one per maturity
    source: str = ""
    valuation_date: str = ""

    @property
    def quotes(self) -> list[MarketQuote]:
        return [q for block in self.quote_blocks for q in block]

    @property
    def taus(self) -> list[float]:
        return [block[0].tau for block in self.quote_blocks]


def _fmt(x: float) -> str:
    # repr round-trips exactly
    return repr(float(x))


def _parse_meta(line: str) -> dict[str, str]:
    meta = {}
    for part in line.lstrip("#").split(","):
        if "=" in part:
            key, value = part.split("=", 1)
            meta[key.strip()] = value.strip()
    return meta


def parse_market_csv(text: str, label: str = "") -> MarketDataset:
    lines = text.splitlines()
    meta: dict[str, str] = {}
    pos = 0
    while pos < len(lines) and (not lines[pos].strip() or lines[pos].lstrip().startswith("#")):
        meta.update(_parse_meta(lines[pos]))
        pos += 1
    if pos >= len(lines):
        raise SchemaMismatch(f"{label or 'market file'}: no header row")
    header = tuple(h.strip() for h in lines[pos].split(","))
    if header != MARKET_COLUMNS:
        raise SchemaMismatch(f"expected columns {','.join(MARKET_COLUMNS)}, got {','.join(header)}")
    if "S0" not in meta:
        raise SchemaMismatch("header comment must define S0=<spot>")
    try:
        S0 = float(meta["S0"])
    except ValueError:
        raise ParseError(f"bad S0 value {meta['S0']!r}", line=1) from None
    if not (S0 > 0 and math.isfinite(S0)):
        raise ParseError(f"S0 must be positive, got {S0!r}", line=1)

    blocks: dict[float, list[MarketQuote]] = {}
    rates: dict[float, float] = {}
    for lineno, row in enumerate(csv.reader(lines[pos + 1:]), start=pos + 2):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if len(row) != len(MARKET_COLUMNS):
            raise ParseError(f"expected {len(MARKET_COLUMNS)} fields, got {len(row)}", line=lineno)
        try:
            tau, r, lm, iv = (float(v) for v in row)
        except ValueError:
            raise ParseError(f"non-numeric field in {row!r}", line=lineno) from None
        if not all(math.isfinite(v) for v in (tau, r, lm, iv)):
            raise ParseError("non-finite value", line=lineno)
        try:
            q = MarketQuote(tau=tau, r=r, log_moneyness=lm, implied_vol=iv)
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if tau in rates and rates[tau] != r:
            raise ParseError(f"rate {r} differs from {rates[tau]} for tau={tau}", line=lineno)
        rates[tau] = r
        blocks.setdefault(tau, []).append(q)
    if not blocks:
        raise EmptyBlock(f"{label or 'market file'}: no quotes")
    ordered = tuple(
        tuple(sorted(blocks[t], key=lambda q: -q.log_moneyness)) for t in sorted(blocks)
    )
    return MarketDataset(S0=S0, quote_blocks=ordered, source=meta.get("source", label),
                         valuation_date=meta.get("valuation_date", ""))


def load_market_csv(path: str | Path) -> MarketDataset:
    path = Path(path)
    return parse_market_csv(path.read_text(), label=str(path))


def format_market_csv(ds: MarketDataset) -> str:
    out = io.StringIO()
    meta = [f"S0={_fmt(ds.S0)}"]
    if ds.valuation_date:
        meta.append(f"valuation_date={ds.valuation_date}")
    if ds.source:
        meta.append(f"source={ds.source}")
    out.write("# " + ", ".join(meta) + "\n")
    out.write(",".join(MARKET_COLUMNS) + "\n")
    for q in ds.quotes:
        out.write(",".join(_fmt(v) for v in (q.tau, q.r, q.log_moneyness, q.implied_vol)) + "\n")
    return out.getvalue()


def write_market_csv(ds: MarketDataset, path: str | Path) -> None:
    Path(path).write_text(format_market_csv(ds))


def bundled_path(name: str = BUNDLED_MARKET) -> Path:
    return Path(str(resources.files("linou") / "data" / name))


def bundled_dataset() -> MarketDataset:
    return load_market_csv(bundled_path(BUNDLED_MARKET))


# -- smile statistics ---------------------------------------------------------


def load_stats_csv(path: str | Path) -> list[SmileStats]:
    text = Path(path).read_text()
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise SchemaMismatch(f"{path}: empty statistics file")
    header = tuple(h.strip() for h in rows[0].split(","))
    if header != STATS_COLUMNS:
        raise SchemaMismatch(f"expected columns {','.join(STATS_COLUMNS)}, got {','.join(header)}")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        try:
            tau, s, se, z, ze, k, ke = (float(v) for v in row.split(","))
        except ValueError:
            raise ParseError(f"bad statistics row {row!r}", line=i) from None
        out.append(SmileStats(tau=tau, sigma=s, zeta=z, kappa=k, sigma_err=se, zeta_err=ze, kappa_err=ke))
    if not out:
        raise EmptyBlock(f"{path}: no rows")
    return sorted(out, key=lambda s: s.tau)


def bundled_stats() -> list[SmileStats]:
    """Published per-maturity statistics for the bundled quotes."""
    return load_stats_csv(bundled_path(BUNDLED_STATS))


def stats_rows(stats) -> list[tuple]:
    return [(s.tau, s.sigma, s.sigma_err, s.zeta, s.zeta_err, s.kappa, s.kappa_err) for s in stats]


def param_rows(result: CalibrationResult) -> list[tuple]:
    p, e = result.params, result.param_errors
    row = (result.kind.value, p.alpha, e["alpha"], p.k, e["k"], p.m, e["m"],
           p.rho, e["rho"], p.beta, e["beta"])
    return [row]


def to_csv(columns, rows) -> str:
    out = io.StringIO()
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")
    return out.getvalue()


def to_text(columns, rows, digits: int = 6) -> str:
    """Aligned fixed-width table for terminals and log files."""
    cells = [list(columns)]
    for row in rows:
        cells.append([v if isinstance(v, str) else f"{v:.{digits}g}" for v in row])
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"

"""Euler-Maruyama simulation of the Linear, ExpOU and Stein-Stein dynamics.

All three run in the rescaled driver ``Z`` with the same OU equation::

    dZ = alpha (1 - Z) dt + k rho dW1 + k sqrt(1 - rho^2) dW2

and differ only in the log-return step:

* Linear:      dX = -(m^2/2)(2Z - 1) dt - (m^2/2) dIM + m Z dW1
* ExpOU:       dX = -sigma^2/2 dt + sigma dW1,  sigma = m exp(Z - 1)
* Stein-Stein: dX = -sigma^2/2 dt + sigma dW1,  sigma = m Z

``dIM`` is the exact increment of the integrated martingale correction
over the step, taken from the closed form in :mod:`linou.charfn`.

Paths are generated in fixed-size blocks.  Each block draws from its own
Philox stream keyed by ``(seed, block index)``, so an ensemble does not
depend on how many worker threads produced it.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .charfn import martingale_integral
from .cumulants import SmileStats
from .params import ModelKind, ModelParams

BLOCK_SIZE = 32768


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    n_steps: int = 250  # per year
    seed: int = 12345
    scheme: str = "EulerMaruyama"
    workers: int = 1

    def __post_init__(self):
        if self.n_paths < 100:
            raise ValueError("n_paths must be >= 100")
        if self.n_steps < 50:
            raise ValueError("n_steps must be >= 50 per year")
        if self.scheme != "EulerMaruyama":
            raise ValueError(f"unsupported scheme {self.scheme!r}")


@dataclass(frozen=True)
class McEnsemble:
    terminal_x: np.ndarray
    tau: float
    config: SimConfig
    kind: ModelKind = ModelKind.LINEAR

    def __post_init__(self):
        if len(self.terminal_x) != self.config.n_paths:
            raise ValueError("ensemble length does not match n_paths")

    def save(self, path: str | Path) -> Path:
        """Write the raw float64 column plus a JSON sidecar ``<path>.json``."""
        path = Path(path)
        np.asarray(self.terminal_x, dtype="<f8").tofile(path)
        meta = {
            "tau": self.tau,
            "kind": self.kind.value,
            "n": int(len(self.terminal_x)),
            "seed": self.config.seed,
            "config": asdict(self.config),
            "dtype": "<f8",
        }
        sidecar = path.with_name(path.name + ".json")
        sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return sidecar

    @classmethod
    def load(cls, path: str | Path) -> McEnsemble:
        path = Path(path)
        meta = json.loads(path.with_name(path.name + ".json").read_text())
        x = np.fromfile(path, dtype=meta["dtype"])
        if len(x) != meta["n"]:
            raise ValueError("ensemble file truncated")
        return cls(terminal_x=x, tau=meta["tau"], config=SimConfig(**meta["config"]),
                   kind=ModelKind.parse(meta["kind"]))


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n: int


def time_grid(taus, steps_per_year: int):
    """Step grid hitting every maturity in ``taus`` exactly.

    Returns ``(grid, record)`` where ``grid[record[i]] == sorted(taus)[i]``.
    """
    targets = sorted(set(float(t) for t in taus))
    if not targets or targets[0] <= 0:
        raise ValueError("maturities must be > 0")
    grid = [0.0]
    record = []
    for t in targets:
        span = t - grid[-1]
        n = max(1, math.ceil(span * steps_per_year - 1e-9))
        grid.extend(grid[-1] + span * np.arange(1, n + 1) / n)
        grid[-1] = t
        record.append(len(grid) - 1)
    return np.asarray(grid), record, targets


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _simulate_block(kind, p: ModelParams, grid, d_im, record, n, rng):
    a, k, m, rho = p.alpha, p.k, p.m, p.rho
    rho_bar = math.sqrt(max(0.0, 1.0 - rho * rho))
    half_m2 = 0.5 * m * m
    X = np.zeros(n)
    Z = np.full(n, p.z0)
    out = np.empty((len(record), n))
    slot = 0
    for i in range(1, len(grid)):
        dt = grid[i] - grid[i - 1]
        sq = math.sqrt(dt)
        eps = rng.standard_normal((2, n))
        dW1 = sq * eps[0]
        dW2 = sq * eps[1]
        if kind is ModelKind.LINEAR:
            X += -half_m2 * ((2.0 * Z - 1.0) * dt + d_im[i - 1]) + m * Z * dW1
        else:
            vol = m * np.exp(Z - 1.0) if kind is ModelKind.EXPOU else m * Z
            X += -0.5 * vol * vol * dt + vol * dW1
        Z += a * (1.0 - Z) * dt + k * (rho * dW1 + rho_bar * dW2)
        if slot < len(record) and record[slot] == i:
            out[slot] = X
            slot += 1
    return out


def simulate_many(kind, p: ModelParams, taus, cfg: SimConfig) -> list[McEnsemble]:
    """Simulate once and record ``X`` at every maturity in ``taus``.

    Ensembles come back in ascending maturity order.  The step grid is the
    union grid from :func:`time_grid`, so the paths for one maturity also
    depend on which other maturities were requested.
    """
    kind = ModelKind.parse(kind)
    p.ensure()
    grid, record, targets = time_grid(taus, cfg.n_steps)
    if kind is ModelKind.LINEAR:
        im = martingale_integral(grid, p)
        d_im = np.diff(im)
    else:
        d_im = None
    sizes = [min(BLOCK_SIZE, cfg.n_paths - s) for s in range(0, cfg.n_paths, BLOCK_SIZE)]

    def run(block):
        return _simulate_block(kind, p, grid, d_im, record, sizes[block],
                               _block_rng(cfg.seed, block))

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    full = np.concatenate(parts, axis=1)
    return [
        McEnsemble(terminal_x=full[j], tau=t, config=cfg, kind=kind)
        for j, t in enumerate(targets)
    ]


def simulate(kind, p: ModelParams, tau: float, cfg: SimConfig) -> McEnsemble:
    return simulate_many(kind, p, [tau], cfg)[0]


def simulate_step_pair(kind, p: ModelParams, tau: float, cfg: SimConfig):
    """Ensembles at ``cfg.n_steps`` and twice that, driven by one Brownian path.

    Each coarse increment is the sum of two fine ones, so the difference
    between the two ensembles isolates the discretisation error.
    """
    kind = ModelKind.parse(kind)
    p.ensure()
    n_fine = 2 * max(1, math.ceil(tau * cfg.n_steps - 1e-9))
    fine = tau * np.arange(n_fine + 1) / n_fine
    coarse = fine[::2]
    d_im = {}
    if kind is ModelKind.LINEAR:
        d_im = {"c": np.diff(martingale_integral(coarse, p)), "f": np.diff(martingale_integral(fine, p))}
    a, k, m, rho = p.alpha, p.k, p.m, p.rho
    rho_bar = math.sqrt(max(0.0, 1.0 - rho * rho))

    def step(X, Z, dt, dW1, dW2, dim):
        if kind is ModelKind.LINEAR:
            X += -0.5 * m * m * ((2.0 * Z - 1.0) * dt + dim) + m * Z * dW1
        else:
            vol = m * np.exp(Z - 1.0) if kind is ModelKind.EXPOU else m * Z
            X += -0.5 * vol * vol * dt + vol * dW1
        Z += a * (1.0 - Z) * dt + k * (rho * dW1 + rho_bar * dW2)

    out_c, out_f = [], []
    dt = tau / n_fine
    sq = math.sqrt(dt)
    for block, start in enumerate(range(0, cfg.n_paths, BLOCK_SIZE)):
        n = min(BLOCK_SIZE, cfg.n_paths - start)
        rng = _block_rng(cfg.seed, block)
        Xc, Zc = np.zeros(n), np.full(n, p.z0)
        Xf, Zf = np.zeros(n), np.full(n, p.z0)
        for j in range(n_fine // 2):
            e1 = sq * rng.standard_normal((2, n))
            e2 = sq * rng.standard_normal((2, n))
            for half, e in enumerate((e1, e2)):
                step(Xf, Zf, dt, e[0], e[1], d_im["f"][2 * j + half] if d_im else 0.0)
            step(Xc, Zc, 2 * dt, e1[0] + e2[0], e1[1] + e2[1], d_im["c"][j] if d_im else 0.0)
        out_c.append(Xc)
        out_f.append(Xf)
    fine_cfg = SimConfig(n_paths=cfg.n_paths, n_steps=2 * cfg.n_steps, seed=cfg.seed,
                         scheme=cfg.scheme, workers=cfg.workers)
    return (McEnsemble(np.concatenate(out_c), tau, cfg, kind),
            McEnsemble(np.concatenate(out_f), tau, fine_cfg, kind))


def _moment_stats(n, s1, s2, s3, s4):
    mu = s1 / n
    m2 = s2 / n - mu**2
    m3 = s3 / n - 3 * mu * s2 / n + 2 * mu**3
    m4 = s4 / n - 4 * mu * s3 / n + 6 * mu**2 * s2 / n - 3 * mu**4
    return np.sqrt(m2), m3 / m2**1.5, m4 / m2**2 - 3.0


def mc_smile_stats(e: McEnsemble, n_batches: int | None = None) -> SmileStats:
    """Sample std dev, skewness and excess kurtosis with jackknife errors.

    The jackknife deletes one of ``n_batches`` contiguous batches at a time;
    only per-batch power sums are needed, so the cost is one pass.  The
    default uses batches of about 100 paths, between 100 and 1000 of them.
    """
    x = np.asarray(e.terminal_x, dtype=float)
    n = len(x)
    if n_batches is None:
        n_batches = int(min(1000, max(100, n // 100)))
    if n < 10 * n_batches:
        raise ValueError(f"need at least {10 * n_batches} paths for {n_batches} batches")
    y = x - x.mean()
    edges = np.linspace(0, n, n_batches + 1).astype(int)
    powers = np.stack([y, y**2, y**3, y**4])
    batch = np.add.reduceat(powers, edges[:-1], axis=1)
    counts = np.diff(edges).astype(float)
    total = batch.sum(axis=1)
    full = _moment_stats(n, *total)
    loo = _moment_stats(n - counts, *(total[:, None] - batch))
    errs = [
        math.sqrt((n_batches - 1) / n_batches * np.sum((est - est.mean()) ** 2))
        for est in loo
    ]
    return SmileStats(
        tau=e.tau, sigma=float(full[0]), zeta=float(full[1]), kappa=float(full[2]),
        sigma_err=errs[0], zeta_err=errs[1], kappa_err=errs[2],
    )


def mc_call_price(e: McEnsemble, S0: float, K, r: float):
    """Discounted mean call payoff; vectorised over ``K``."""
    x = np.asarray(e.terminal_x)
    K_arr = np.atleast_1d(np.asarray(K, dtype=float))
    disc = math.exp(-r * e.tau)
    fwd = S0 * np.exp(r * e.tau + x)
    out = []
    for K_i in K_arr:
        pay = disc * np.maximum(fwd - K_i, 0.0)
        out.append(McEstimate(float(pay.mean()), float(pay.std(ddof=1) / math.sqrt(len(pay))), len(pay)))
    return out[0] if np.ndim(K) == 0 else out


def mc_martingale(e: McEnsemble) -> McEstimate:
    """``E[exp(X)]``, which equals 1 for a martingale discounted price."""
    v = np.exp(np.asarray(e.terminal_x))
    return McEstimate(float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v))), len(v))


def empirical_cf(e: McEnsemble, phi):
    """Sample characteristic function and its standard error per ``phi``."""
    x = np.asarray(e.terminal_x)
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    vals = np.empty(phi.shape, dtype=complex)
    errs = np.empty(phi.shape)
    n = len(x)
    for i, ph in enumerate(phi):
        z = np.exp(1j * ph * x)
        vals[i] = z.mean()
        errs[i] = math.sqrt((np.var(z.real, ddof=1) + np.var(z.imag, ddof=1)) / n)
    return vals, errs

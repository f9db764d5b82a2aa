"""Monte Carlo extrema at the stopping time, used as an independent oracle.

Only exact-increment families are simulated (Brownian motion with drift and
compound Poisson with mixed gamma jumps).  Paths are processed in fixed-size
blocks, each seeded from ``SeedSequence(seed, spawn_key=(block,))``, so results
do not depend on how blocks are scheduled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .levy import BrownianDrift, CompoundPoissonMixedGamma, LevyModel, StoppingTime
from .whf import ExtremaDensity

BLOCK = 4096


@dataclass(frozen=True)
class SimConfig:
    paths: int = 100_000
    dt: float = 1e-3
    seed: int = 0
    horizon: float = 200.0
    bridge: bool = False

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")


def _jump_parts(model: LevyModel):
    if isinstance(model, CompoundPoissonMixedGamma):
        return model.intensity, model.jumps
    return 0.0, None


def _block_continuous(model, stop, cfg, n, rng):
    """Exponential stopping: diffusion on a dt grid plus jumps at exact epochs."""
    tau = np.minimum(rng.exponential(1.0 / stop.q, size=n), cfg.horizon)
    lam, jumps = _jump_parts(model)
    n_grid = np.maximum(np.ceil(tau / cfg.dt).astype(np.int64), 1)
    n_jump = rng.poisson(lam * tau) if lam > 0 else np.zeros(n, dtype=np.int64)
    path_g = np.repeat(np.arange(n), n_grid)
    start_g = np.repeat(np.cumsum(n_grid) - n_grid, n_grid)
    k = np.arange(path_g.size) - start_g + 1
    t_g = np.minimum(k * cfg.dt, tau[path_g])
    path_j = np.repeat(np.arange(n), n_jump)
    t_j = rng.random(path_j.size) * tau[path_j]
    size_j = jumps.sample(path_j.size, rng) if path_j.size else np.zeros(0)
    path = np.concatenate([path_g, path_j])
    t = np.concatenate([t_g, t_j])
    jump = np.concatenate([np.zeros(path_g.size), size_j])
    order = np.lexsort((t, path))
    path, t, jump = path[order], t[order], jump[order]
    counts = np.bincount(path, minlength=n)
    starts = np.cumsum(counts) - counts
    first = np.zeros(path.size, dtype=bool)
    first[starts] = True
    prev_t = np.empty_like(t)
    prev_t[1:] = t[:-1]
    prev_t[first] = 0.0
    dt = np.maximum(t - prev_t, 0.0)
    diff = model.mu * dt + model.sigma * np.sqrt(dt) * rng.standard_normal(dt.size)
    after = np.cumsum(diff + jump)
    offsets = np.repeat(after[starts] - (diff + jump)[starts], counts)
    after = after - offsets
    before = after - jump
    start_val = before - diff
    hi = np.maximum(before, after)
    lo = np.minimum(before, after)
    if cfg.bridge and model.sigma > 0:
        spread = model.sigma**2 * dt
        gap = before - start_val
        u1 = rng.random(dt.size)
        u2 = rng.random(dt.size)
        bmax = 0.5 * (start_val + before + np.sqrt(gap * gap - 2.0 * spread * np.log(u1)))
        bmin = 0.5 * (start_val + before - np.sqrt(gap * gap - 2.0 * spread * np.log(u2)))
        hi = np.maximum(hi, bmax)
        lo = np.minimum(lo, bmin)
    m = np.maximum(np.maximum.reduceat(hi, starts), 0.0)
    i = np.minimum(np.minimum.reduceat(lo, starts), 0.0)
    return m, i


def _block_geometric(model, stop, n, rng):
    """Geometric stopping: random walk of exact unit-time increments."""
    steps = rng.geometric(1.0 - stop.q, size=n) - 1
    lam, jumps = _jump_parts(model)
    total = int(steps.sum())
    m = np.zeros(n)
    i = np.zeros(n)
    if total == 0:
        return m, i
    path = np.repeat(np.arange(n), steps)
    inc = model.mu + model.sigma * rng.standard_normal(total)
    if lam > 0:
        nj = rng.poisson(lam, size=total)
        sizes = jumps.sample(int(nj.sum()), rng)
        owner = np.repeat(np.arange(total), nj)
        inc = inc + np.bincount(owner, weights=sizes, minlength=total)
    csum = np.cumsum(inc)
    has = steps > 0
    starts = (np.cumsum(steps) - steps)[has]
    offsets = np.repeat(csum[starts] - inc[starts], steps[has])
    x = csum - offsets
    m[has] = np.maximum(np.maximum.reduceat(x, starts), 0.0)
    i[has] = np.minimum(np.minimum.reduceat(x, starts), 0.0)
    return m, i


def simulate_extrema(model: LevyModel, stop: StoppingTime, cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Samples of ``(M_q, I_q)``: running supremum and infimum up to the stopping time."""
    if not isinstance(model, (BrownianDrift, CompoundPoissonMixedGamma)):
        raise ValueError(f"family {model.family!r} has no exact-increment simulator")
    if stop.kind == "exponential" and cfg.dt > stop.mean / 10.0:
        warnings.warn("dt exceeds a tenth of the mean stopping time; discretization bias", stacklevel=2)
    m_out = np.empty(cfg.paths)
    i_out = np.empty(cfg.paths)
    n_blocks = math.ceil(cfg.paths / BLOCK)
    for b in range(n_blocks):
        lo, hi = b * BLOCK, min((b + 1) * BLOCK, cfg.paths)
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(b,)))
        if stop.kind == "exponential":
            m, i = _block_continuous(model, stop, cfg, hi - lo, rng)
        else:
            m, i = _block_geometric(model, stop, hi - lo, rng)
        m_out[lo:hi], i_out[lo:hi] = m, i
    return m_out, i_out


def ks_distance(samples, density: ExtremaDensity) -> float:
    """Kolmogorov-Smirnov distance between samples and the closed-form law (atom included)."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample set")
    if density.side == "supremum" and np.any(x < 0) or density.side == "infimum" and np.any(x > 0):
        raise ValueError(f"samples do not lie on the {density.side} side")
    y = np.sort(np.abs(x))
    n = y.size
    cdf = 1.0 - density.tail(y)  # P(|X| <= y)
    cdf_left = np.where(y > 0, cdf, 0.0)  # P(|X| < y)
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(n) / n
    return float(max(np.max(ecdf_hi - cdf), np.max(cdf_left - ecdf_lo), 0.0))

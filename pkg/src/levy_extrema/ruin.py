"""Ruin probabilities of the surplus ``u + X_t`` from the infimum density.

The finite-time (stopped) ruin probability is ``R_q(u) = P(I_q < -u)``; letting
``q -> 0`` gives the infinite-horizon ruin probability.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .levy import LevyModel, StoppingTime
from .pipeline import PipelineError, PipelineOptions, run_pipeline
from .whf import ExtremaDensity

logger = logging.getLogger(__name__)


class RuinError(ValueError):
    pass


def finite_time_ruin(density: ExtremaDensity, u):
    """``P(I_q < -u)`` in closed form (gamma tails of the mixture)."""
    if density.side != "infimum":
        raise RuinError("ruin probabilities need the infimum density")
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0):
        raise RuinError("initial reserve must be nonnegative")
    return np.clip(density.tail(u_arr), 0.0, 1.0)


@dataclass(frozen=True)
class RuinCurve:
    u: np.ndarray
    probabilities: np.ndarray
    stop: StoppingTime | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        p = np.asarray(self.probabilities, dtype=float)
        if u.shape != p.shape:
            raise ValueError("u and probabilities must have the same shape")
        if np.any((p < 0) | (p > 1)):
            raise ValueError("probabilities must lie in [0, 1]")
        order = np.argsort(u, kind="stable")
        if np.any(np.diff(p[order]) > 1e-12):
            raise ValueError("ruin probabilities must be non-increasing in u")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "probabilities", p)


def ruin_curve(density: ExtremaDensity, u_grid, stop: StoppingTime | None = None, provenance=None) -> RuinCurve:
    u = np.atleast_1d(np.asarray(u_grid, dtype=float))
    probs = finite_time_ruin(density, u) if u.size else np.array([])
    if u.size:
        # tiny round-off wiggles in the closed form must not break monotonicity
        order = np.argsort(u, kind="stable")
        probs_sorted = np.minimum.accumulate(probs[order])
        probs = np.empty_like(probs_sorted)
        probs[order] = probs_sorted
    return RuinCurve(u, np.atleast_1d(probs), stop, dict(provenance or {}))


@dataclass(frozen=True)
class InfiniteTimeRuin:
    u: float
    q_values: tuple
    probabilities: tuple
    limit: float
    monotone: bool
    failures: tuple = ()


def _extrapolate(q: np.ndarray, r: np.ndarray) -> float:
    """Quadratic through the last three points, evaluated at q = 0."""
    if q.size == 1:
        return float(r[0])
    if q.size == 2:
        q1, q2 = q[-2:]
        r1, r2 = r[-2:]
        return float(r2 + (r2 - r1) * (0.0 - q2) / (q2 - q1))
    qs, rs = q[-3:], r[-3:]
    total = 0.0
    for i in range(3):
        w = 1.0
        for j in range(3):
            if i != j:
                w *= (0.0 - qs[j]) / (qs[i] - qs[j])
        total += w * rs[i]
    return float(total)


def infinite_time_ruin(
    model: LevyModel,
    u: float,
    q_sequence: Sequence[float],
    options: PipelineOptions | None = None,
    kind: str = "exponential",
) -> InfiniteTimeRuin:
    """Stopped ruin probabilities along ``q_sequence`` and their ``q -> 0`` extrapolation.

    Runs that fail (poles crowding the real axis as q shrinks) are skipped and
    reported in ``failures``.  ``monotone`` flags whether the sequence moves in one
    direction; it is a trend check, not a convergence proof.
    """
    qs = [float(q) for q in q_sequence]
    if not qs:
        raise RuinError("empty q sequence")
    if any(b >= a for a, b in zip(qs, qs[1:])) or qs[-1] <= 0:
        raise RuinError("q sequence must be positive and strictly decreasing")
    done_q, done_r, failures = [], [], []
    for q in qs:
        try:
            res = run_pipeline(model, StoppingTime(kind, q), options)
        except PipelineError as exc:
            logger.warning("q=%g failed: %s", q, exc)
            failures.append((q, exc.stage, exc.message))
            continue
        done_q.append(q)
        done_r.append(float(finite_time_ruin(res.infimum, u)))
    if not done_q:
        raise RuinError(f"every pipeline run failed: {failures}")
    r = np.array(done_r)
    steps = np.diff(r)
    monotone = bool(np.all(steps >= -1e-12) or np.all(steps <= 1e-12))
    limit = float(np.clip(_extrapolate(np.array(done_q), r), 0.0, 1.0))
    return InfiniteTimeRuin(float(u), tuple(done_q), tuple(done_r), limit, monotone, tuple(failures))

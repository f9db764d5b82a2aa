"""Grid-based transforms on the real frequency line.

Conventions used throughout the package:

* Hilbert transform ``H_s(w) = (1/pi) p.v. int s(x) / (x - w) dx``, so that
  ``H[1/(1+x^2)](w) = -w/(1+w^2)``.
* Radial limits of the Cauchy-type integral
  ``phi_s(z) = 1/(2 pi i) int s(x)/(x - z) dx`` obey
  ``phi^{+/-}(w) = +/- s(w)/2 + H_s(w)/(2i)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_HALF_WIDTH = 64.0
DEFAULT_SIZE = 2**15
TAPER_FRACTION = 0.05
# end samples larger than this (relative to the peak) mean the grid is too short
END_SAMPLE_THRESHOLD = 1e-2


class GridError(ValueError):
    """Raised when a grid is malformed or too small for a transform."""


@dataclass(frozen=True)
class GridFunction:
    """Complex samples on a uniform, power-of-two sized grid."""

    nodes: np.ndarray
    values: np.ndarray
    spacing: float = field(init=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if nodes.ndim != 1 or nodes.shape != values.shape:
            raise GridError("nodes and values must be 1-d arrays of equal length")
        n = nodes.size
        if n < 2 or n & (n - 1):
            raise GridError(f"node count must be a power of two, got {n}")
        steps = np.diff(nodes)
        h = float(steps.mean())
        if h <= 0 or np.max(np.abs(steps - h)) > 1e-12 * max(1.0, np.max(np.abs(nodes))):
            raise GridError("nodes must be strictly increasing and uniformly spaced")
        if not np.all(np.isfinite(values)):
            raise GridError("values must be finite")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "spacing", h)

    def __len__(self):
        return self.nodes.size

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.nodes, values)

    def at(self, w: float) -> complex:
        """Linear interpolation of the samples at ``w``."""
        re = np.interp(w, self.nodes, self.values.real)
        im = np.interp(w, self.nodes, self.values.imag)
        return complex(re, im)


@dataclass(frozen=True)
class NormOrder:
    p: float = 2.0

    def __post_init__(self):
        if not 1.0 < self.p <= 2.0:
            raise ValueError(f"norm order must lie in (1, 2], got {self.p}")

    @property
    def conjugate(self) -> float:
        return self.p / (self.p - 1.0)


def make_grid(half_width: float = DEFAULT_HALF_WIDTH, size: int = DEFAULT_SIZE) -> np.ndarray:
    """Uniform nodes on ``[-half_width, half_width)``; node ``size // 2`` is exactly 0."""
    if size < 2 or size & (size - 1):
        raise GridError(f"grid size must be a power of two, got {size}")
    if half_width <= 0:
        raise GridError("half_width must be positive")
    h = 2.0 * half_width / size
    return (np.arange(size) - size // 2) * h


def sample(func: Callable, nodes: np.ndarray) -> GridFunction:
    return GridFunction(nodes, func(nodes))


def _order(order) -> NormOrder:
    return order if isinstance(order, NormOrder) else NormOrder(float(order))


def lp_norm(f: GridFunction, order: NormOrder | float = 2.0) -> float:
    """Riemann-sum approximation of the L^p norm of ``f``."""
    p = _order(order).p
    return float((np.sum(np.abs(f.values) ** p) * f.spacing) ** (1.0 / p))


def cosine_taper(n: int, fraction: float = TAPER_FRACTION) -> np.ndarray:
    """Window equal to 1 in the interior, rolling off to 0 over ``fraction`` of each end."""
    w = np.ones(n)
    m = int(round(fraction * n))
    if m > 0:
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(m) / m))
        w[:m] = ramp
        w[n - m:] = ramp[::-1]
    return w


def _check_ends(values: np.ndarray, threshold: float) -> None:
    peak = np.max(np.abs(values))
    if peak == 0.0:
        return
    ends = max(abs(values[0]), abs(values[-1]))
    if ends > threshold * peak:
        raise GridError(
            f"function has not decayed at the grid ends ({ends:.3g} vs peak {peak:.3g}); "
            "widen the grid"
        )


def hilbert_transform(
    f: GridFunction,
    taper: bool = True,
    pad: int = 8,
    extended: bool = False,
    end_threshold: float = END_SAMPLE_THRESHOLD,
) -> GridFunction:
    """Spectral Hilbert transform ``(1/pi) p.v. int f(x)/(x-w) dx`` on the grid of ``f``.

    The Fourier multiplier is ``+i sign(k)``; applying the transform twice gives ``-f``.
    A cosine taper over the outer 5% of the grid suppresses wrap-around, and the
    samples are zero-padded ``pad``-fold so the periodic kernel approximates the
    line kernel (its error scales like ``1/(pad * half_width)^2``).

    With ``extended=True`` the result is returned on the padded grid, which keeps
    the slowly decaying tail of the transform available for a second application.
    """
    values = f.values
    _check_ends(values, end_threshold)
    if taper:
        values = values * cosine_taper(values.size)
    n = values.size
    if pad < 1 or pad & (pad - 1):
        raise GridError("pad must be a power of two")
    big = n * pad
    start = (big - n) // 2
    buf = np.zeros(big, dtype=complex)
    buf[start:start + n] = values
    k = np.fft.fftfreq(big)
    mult = 1j * np.sign(k)
    mult[big // 2] = 0.0  # Nyquist bin
    out = np.fft.ifft(mult * np.fft.fft(buf))
    if extended:
        nodes = f.nodes[0] + (np.arange(big) - start) * f.spacing
        return GridFunction(nodes, out)
    return f.with_values(out[start:start + n])


def plemelj_radial_limits(f: GridFunction, side: str, **kwargs) -> GridFunction:
    """Boundary values of the Cauchy integral of ``f`` from above (``"upper"``) or below."""
    if side not in ("upper", "lower"):
        raise ValueError("side must be 'upper' or 'lower'")
    hf = hilbert_transform(f, **kwargs).values
    sign = 1.0 if side == "upper" else -1.0
    return f.with_values(sign * f.values / 2.0 + hf / 2j)


def phase_winding(values: np.ndarray) -> float:
    """Net change of the continuous argument of ``values`` along the grid, in radians."""
    phase = np.unwrap(np.angle(values))
    return float(phase[-1] - phase[0])


def _log_tail(nodes: np.ndarray, log_g: np.ndarray) -> tuple[float, float]:
    """Fit ``log g(x) ~ a - c log(1 + x^2)`` from the grid tail (both ends averaged)."""
    n = nodes.size
    m = int(round(TAPER_FRACTION * n))
    i_far, i_near = m + 1, n // 4
    j_far, j_near = n - 1 - m, n - n // 4
    x1 = 0.5 * (abs(nodes[i_near]) + abs(nodes[j_near]))
    x2 = 0.5 * (abs(nodes[i_far]) + abs(nodes[j_far]))
    y1 = 0.5 * (log_g[i_near] + log_g[j_near])
    y2 = 0.5 * (log_g[i_far] + log_g[j_far])
    l1, l2 = math.log1p(x1 * x1), math.log1p(x2 * x2)
    c = -(y2 - y1) / (l2 - l1)
    a = y2 + c * l2
    return a, c


def direct_factor_from_g(g: GridFunction, tol: float = 1e-9) -> tuple[GridFunction, GridFunction]:
    """Factor a real positive ``g`` with ``g(0) = 1`` into boundary values of half-plane factors.

    ``Phi^{+/-}(w) = sqrt(g(w)) exp(+/- (i/2) (H_{log g}(0) - H_{log g}(w)))``.

    ``log g`` usually does not decay (``g`` decays algebraically), so the tail model
    ``a - c log(1+x^2) + ...`` is removed first and its Hilbert transform added back
    in closed form: ``H[log(1+x^2)](w) = 2 arctan(w)`` and
    ``H[x^2/(1+x^2)](w) = w/(1+w^2)``.
    """
    vals = g.values
    if np.max(np.abs(vals.imag)) > tol * max(1.0, np.max(np.abs(vals.real))):
        raise ValueError("g must be real-valued")
    gr = vals.real
    if np.any(gr <= 0.0):
        raise ValueError("g must be strictly positive")
    if abs(g.at(0.0).real - 1.0) > tol:
        raise ValueError(f"g(0) must equal 1, got {g.at(0.0).real!r}")
    if np.max(gr) > 1.0 + tol:
        logger.warning("g exceeds 1 (max %.6g); not a characteristic function", np.max(gr))

    x = g.nodes
    log_g = np.log(gr)
    a, c = _log_tail(x, log_g)
    reference = -c * np.log1p(x * x) + a * x * x / (1.0 + x * x)
    h_reference = -2.0 * c * np.arctan(x) + a * x / (1.0 + x * x)
    residual = g.with_values(log_g - reference)
    h_log = hilbert_transform(residual).values.real + h_reference
    h0 = np.interp(0.0, x, h_log)
    root = np.sqrt(gr)
    phase = 0.5 * (h0 - h_log)
    plus = g.with_values(root * np.exp(1j * phase))
    minus = g.with_values(root * np.exp(-1j * phase))
    return plus, minus


def cauchy_integral(f: GridFunction, z: complex) -> complex:
    """``1/(2 pi i) int f(x)/(x - z) dx`` for ``z`` off the real line (trapezoid rule)."""
    if z.imag == 0.0:
        raise ValueError("use the radial-mean evaluation for real points")
    return complex(np.sum(f.values / (f.nodes - z)) * f.spacing / (2j * math.pi))


def _plemelj_value(f: GridFunction, z: complex) -> complex:
    if z.imag != 0.0:
        return cauchy_integral(f, z)
    # on the line: mean of the two radial limits, H_f/(2i)
    return hilbert_transform(f).at(z.real) / 2j


def resolvent_selftest(f: GridFunction, lam: complex, mu: complex) -> float:
    """Discrepancy in ``phi_f(lam) - phi_f(mu) = (lam - mu) phi_{f/(x-lam)}(mu)``.

    Off-line points use direct quadrature; real points go through the spectral
    Hilbert transform, so the residual measures the accuracy of that path.
    """
    lam, mu = complex(lam), complex(mu)
    if lam == mu:
        return 0.0
    if not np.any(f.values):
        return 0.0
    lhs = _plemelj_value(f, lam) - _plemelj_value(f, mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        weighted = f.values / (f.nodes - lam)
    if not np.all(np.isfinite(weighted)):
        raise ValueError("lam coincides with a grid node")
    rhs = (lam - mu) * _plemelj_value(f.with_values(weighted), mu)
    return float(abs(lhs - rhs))

"""Half-plane factors of a rational approximant and the extrema densities they define.

A factor is stored by its w-plane zeros and poles plus a constant in the
``s``-variable form::

    F(w) = scale * prod(s + lam_z) / prod(s + lam_p),
    s = -iw, lam = i*root    (upper side, supremum, analytic in the upper half-plane)
    s = +iw, lam = -i*root   (lower side, infimum, analytic in the lower half-plane)

so every pole has ``Re lam > 0`` and ``1/(s + lam)^j`` inverts to
``x^(j-1) e^(-lam x) / (j-1)!`` on the factor's half-line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .levy import StoppingTime
from .rational import RationalApproximant
from .transforms import NormOrder

ATOM_ZERO = 1e-9
NORMALIZATION_TOL = 1e-10
_CLUSTER_TOL = 1e-7


class FactorizationError(ArithmeticError):
    pass


def _s_var(side: str, w):
    return -1j * np.asarray(w, dtype=complex) if side == "upper" else 1j * np.asarray(w, dtype=complex)


def _lam(side: str, roots) -> np.ndarray:
    roots = np.asarray(roots, dtype=complex)
    return 1j * roots if side == "upper" else -1j * roots


@dataclass(frozen=True)
class HalfPlaneFactor:
    side: str
    zeros: tuple
    poles: tuple
    scale: float = 1.0

    def __post_init__(self):
        if self.side not in ("upper", "lower"):
            raise ValueError("side must be 'upper' or 'lower'")
        zeros = tuple(complex(z) for z in self.zeros)
        poles = tuple(complex(p) for p in self.poles)
        bad = [p for p in poles if (p.imag >= 0 if self.side == "upper" else p.imag <= 0)]
        if bad:
            raise FactorizationError(f"{self.side} factor has poles on the wrong side: {bad}")
        if not self.scale > 0:
            raise FactorizationError("factor scale must be positive")
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def zero_rates(self) -> np.ndarray:
        return _lam(self.side, self.zeros)

    @property
    def pole_rates(self) -> np.ndarray:
        return _lam(self.side, self.poles)

    def __call__(self, w):
        s = _s_var(self.side, w)
        out = np.full(s.shape, self.scale, dtype=complex)
        for lz in self.zero_rates:
            out = out * (s + lz)
        for lp in self.pole_rates:
            out = out / (s + lp)
        return complex(out) if out.ndim == 0 else out

    def at_zero(self) -> float:
        v = self(0.0)
        return v.real

    def rescaled(self, c: float) -> "HalfPlaneFactor":
        return HalfPlaneFactor(self.side, self.zeros, self.poles, self.scale * c)

    def to_dict(self) -> dict:
        return {"side": self.side, "zeros": list(self.zeros), "poles": list(self.poles), "scale": self.scale}


@dataclass(frozen=True)
class ExtremaDensity:
    """Atom at 0 plus ``sum c x^d e^(-lam x)`` on ``x >= 0`` (mirrored for the infimum).

    Complex ``(c, lam)`` come in conjugate pairs for oscillating factors; the density
    is their real sum.
    """

    side: str
    atom: float
    terms: tuple

    def __post_init__(self):
        if self.side not in ("supremum", "infimum"):
            raise ValueError("side must be 'supremum' or 'infimum'")
        terms = tuple((complex(c), complex(lam), int(d)) for c, lam, d in self.terms)
        if any(lam.real <= 0 for _, lam, _ in terms):
            raise ValueError("all rates need a positive real part")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "atom", float(self.atom))

    @property
    def min_rate(self) -> float:
        return min((lam.real for _, lam, _ in self.terms), default=1.0)

    def _abs(self, x):
        x = np.asarray(x, dtype=float)
        y = x if self.side == "supremum" else -x
        return y

    def pdf(self, x):
        """Density of the absolutely continuous part (the atom is not included)."""
        y = self._abs(x)
        yy = np.maximum(y, 0.0)
        out = np.zeros(yy.shape, dtype=complex)
        for c, lam, d in self.terms:
            out = out + c * yy**d * np.exp(-lam * yy)
        out = np.where(y >= 0, out.real, 0.0)
        return float(out) if out.ndim == 0 else out

    def tail(self, u):
        """``P(|X| > u)`` for ``u >= 0``."""
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        out = np.zeros(u.shape, dtype=complex)
        for c, lam, d in self.terms:
            z = lam * u
            poly = sum(z**k / math.factorial(k) for k in range(d + 1))
            out = out + c * math.factorial(d) / lam ** (d + 1) * np.exp(-z) * poly
        out = out.real
        return float(out) if out.ndim == 0 else out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.side == "supremum":
            out = np.where(x < 0, 0.0, 1.0 - self.tail(np.maximum(x, 0.0)))
        else:
            # P(I <= x) = P(|I| >= -x); the atom only enters at x = 0
            out = np.where(x >= 0, 1.0, self.tail(np.maximum(-x, 0.0)))
        return float(out) if out.ndim == 0 else out

    def total_mass(self) -> float:
        mass = sum(c * math.factorial(d) / lam ** (d + 1) for c, lam, d in self.terms)
        return self.atom + complex(mass).real

    def support_window(self, rows: int = 2001) -> np.ndarray:
        """Nodes on ``[0, 10/min_rate]`` (mirrored for the infimum)."""
        x = np.linspace(0.0, 10.0 / self.min_rate, rows)
        return x if self.side == "supremum" else 0.0 - x

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF samples (tabulated CDF, linear interpolation)."""
        x = np.linspace(0.0, 60.0 / self.min_rate, 200_001)
        tail = self.tail(x)
        u = rng.random(n)
        # |X| > 0 with probability 1 - atom; invert the decreasing tail
        out = np.interp(u, tail[::-1], x[::-1], left=x[-1], right=0.0)
        out = np.where(u >= 1.0 - self.atom, 0.0, out)
        return out if self.side == "supremum" else 0.0 - out

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "atom": self.atom,
            "terms": [{"coefficient": c, "rate": lam, "degree": d} for c, lam, d in self.terms],
        }


def _split_scale(scale: complex, side_counts) -> float:
    """Convert the w-form constant to the s-form constant ``K'``; must be real positive."""
    (nz_u, np_u), (nz_l, np_l) = side_counts
    k = scale * (1j) ** (nz_u - np_u) * (-1j) ** (nz_l - np_l)
    if abs(k.imag) > 1e-8 * abs(k) or k.real <= 0:
        raise FactorizationError(f"approximant constant {k} is not positive; not positive-definite")
    return float(k.real)


def carlemann_split(r: RationalApproximant, real_tol: float = 1e-10) -> tuple[HalfPlaneFactor, HalfPlaneFactor]:
    """Split ``r`` into (upper, lower) factors by assigning roots to half-planes.

    Zeros and poles in the lower half-plane go to the upper (supremum) factor.  The
    positive constant is shared as its square root by both factors; use
    :func:`normalize_factors` to make each a characteristic function.
    """
    scale, zeros, poles = r.polynomial_form()
    span = max([1.0] + [abs(z) for z in zeros] + [abs(p) for p in poles])
    for z in zeros:
        if abs(z.imag) <= real_tol * span:
            raise FactorizationError(f"approximant has a zero on the real axis near {z.real:.6g}")
    for p in poles:
        if abs(p.imag) <= real_tol * span:
            raise FactorizationError("approximant has a pole on the real axis")
    zu = [z for z in zeros if z.imag < 0]
    zl = [z for z in zeros if z.imag > 0]
    pu = [p for p in poles if p.imag < 0]
    pl = [p for p in poles if p.imag > 0]
    if len(zu) > len(pu) or len(zl) > len(pl):
        # an improper factor means r winds around 0 on the real line (nonzero index)
        raise FactorizationError(
            f"approximant has nonzero index: upper factor {len(zu)}/{len(pu)}, lower {len(zl)}/{len(pl)} zeros/poles"
        )
    k = _split_scale(scale, ((len(zu), len(pu)), (len(zl), len(pl))))
    root = math.sqrt(k)
    return HalfPlaneFactor("upper", zu, pu, root), HalfPlaneFactor("lower", zl, pl, root)


def normalize_factors(fplus: HalfPlaneFactor, fminus: HalfPlaneFactor):
    """Rescale both factors to value 1 at the origin.

    Returns ``(fplus, fminus, (c_plus, c_minus))`` with the multiplicative constants
    that were applied.
    """
    out = []
    consts = []
    for f in (fplus, fminus):
        v = f(0.0)
        if abs(v) == 0.0:
            raise FactorizationError(f"{f.side} factor vanishes at the origin")
        if abs(v.imag) > 1e-10 * abs(v) or v.real <= 0:
            raise FactorizationError(f"{f.side} factor is not real positive at the origin: {v}")
        c = 1.0 / v.real
        out.append(f.rescaled(c))
        consts.append(c)
    return out[0], out[1], tuple(consts)


def meromorphic_factor(alphas: Sequence[float], betas: Sequence[float], n: int, side: str) -> HalfPlaneFactor:
    """Truncated product ``prod_{k<=n} (1 + s/alpha_k) / (1 + s/beta_k)`` as a factor.

    With ``s = -iw`` (upper) this is ``prod (1 - iw/alpha)/(1 - iw/beta)``, which is
    analytic in the upper half-plane.  Requires ``beta_1 < alpha_1 < beta_2 < ...``;
    ``alpha = inf`` drops that zero.
    """
    if n < 1:
        raise ValueError("truncation n must be >= 1")
    if len(alphas) < n or len(betas) < n:
        raise ValueError("need at least n alphas and n betas")
    a = np.asarray(alphas[:n], dtype=float)
    b = np.asarray(betas[:n], dtype=float)
    seq = np.empty(2 * n)
    seq[0::2], seq[1::2] = b, a
    if np.any(b <= 0) or np.any(np.diff(seq) <= 0):
        raise ValueError("rates must interlace: beta_1 < alpha_1 < beta_2 < ...")
    finite = np.isfinite(a)
    sgn = -1j if side == "upper" else 1j
    zeros = tuple(sgn * a[finite])
    poles = tuple(sgn * b)
    scale = float(np.prod(b) / np.prod(a[finite]))
    return HalfPlaneFactor(side, zeros, poles, scale)


def _cluster(rates: np.ndarray) -> list:
    """Group nearly equal rates; returns ``[(rate, multiplicity), ...]``."""
    groups: list = []
    for lam in rates:
        for g in groups:
            if abs(g[0] - lam) <= _CLUSTER_TOL * max(1.0, abs(lam)):
                g[1] += 1
                break
        else:
            groups.append([lam, 1])
    return [(complex(g[0]), g[1]) for g in groups]


def _series_inverse(a: complex, order: int) -> np.ndarray:
    """Taylor coefficients of ``1/(a + t)`` up to ``t^(order-1)``."""
    k = np.arange(order)
    return (-1.0) ** k / a ** (k + 1)


def partial_fractions(scale: float, zero_rates, pole_rates):
    """Expand ``scale prod(s + z)/prod(s + p)`` as ``k + sum c/(s + lam)^j``.

    Returns ``(k, [(c, lam, j), ...])``.  Coefficients come straight from the roots
    (local Taylor series at each pole), so no polynomial is re-rooted.
    """
    zero_rates = np.asarray(zero_rates, dtype=complex)
    groups = _cluster(np.asarray(pole_rates, dtype=complex))
    n_poles = sum(m for _, m in groups)
    if zero_rates.size > n_poles:
        raise FactorizationError("improper factor (more zeros than poles)")
    direct = scale if zero_rates.size == n_poles else 0.0
    out = []
    for lam, m in groups:
        s0 = -lam
        series = np.zeros(m, dtype=complex)
        series[0] = scale
        for z in zero_rates:
            series = np.convolve(series, [s0 + z, 1.0])[:m]
        for mu, mm in groups:
            if mu is lam:
                continue
            for _ in range(mm):
                series = np.convolve(series, _series_inverse(s0 + mu, m))[:m]
        # coefficient of 1/(s + lam)^(m - k) is series[k]
        for k in range(m):
            out.append((series[k], lam, m - k))
    return direct, out


def density_from_factor(factor: HalfPlaneFactor, check: bool = True) -> ExtremaDensity:
    """Analytic inverse transform of a normalized factor.

    The atom is the limit of the factor as ``|s| -> inf``: the constant when numerator
    and denominator degrees match, 0 otherwise.
    """
    v0 = factor(0.0)
    if check and abs(v0 - 1.0) > NORMALIZATION_TOL:
        raise FactorizationError(f"factor is not normalized (value {v0} at 0)")
    atom, parts = partial_fractions(factor.scale, factor.zero_rates, factor.pole_rates)
    if atom < -1e-10:
        raise FactorizationError(f"negative atom {atom}; approximant is not positive-definite")
    if atom < ATOM_ZERO:
        atom = 0.0
    terms = [(c / math.factorial(j - 1), lam, j - 1) for c, lam, j in parts]
    side = "supremum" if factor.side == "upper" else "infimum"
    return ExtremaDensity(side, atom, tuple(terms))


def approximant_inverse(r: RationalApproximant, x) -> np.ndarray:
    """Inverse Fourier transform of the non-constant part of ``r`` at real ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    for t, c in r.terms:
        lam = _lam(t.side, t.roots)
        _, parts = partial_fractions(1.0, [], np.repeat(lam, t.power))
        d = ExtremaDensity("infimum" if t.side == "lower" else "supremum", 0.0,
                           tuple((a / math.factorial(j - 1), l, j - 1) for a, l, j in parts))
        out = out + c * d.pdf(x)
    return out


def error_bound_factorization(delta: float, order: NormOrder | float = 2.0) -> float:
    """``tan(pi/2p) delta^2 / 2 + (tan(pi/2p) + 1/2) delta``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    p = (order if isinstance(order, NormOrder) else NormOrder(float(order))).p
    t = math.tan(math.pi / (2.0 * p))
    return 0.5 * t * delta * delta + (t + 0.5) * delta


def error_bound_compound_poisson(nu_delta: float, stop: StoppingTime) -> float:
    """Density bound from the jump-law approximation error ``nu_delta``."""
    if nu_delta < 0:
        raise ValueError("nu_delta must be nonnegative")
    q = stop.q
    first = nu_delta**2 / (q * q * math.sqrt(8.0 * math.pi))
    second = 3.0 * nu_delta / (2.0 * q)
    if stop.kind == "geometric":
        first *= (1.0 - q) ** 2
        second *= 1.0 - q
    return first + second

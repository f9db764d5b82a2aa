"""Characteristic exponents and stopped characteristic functions.

The exponent follows ``E exp(i w X_1) = exp(psi(w))``.  Every family returns an
analytic continuation of ``psi`` off the real line where one exists, since the
pole search works in the complex plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .bessel import bessel_k


class DomainError(ValueError):
    """Evaluation point outside the region where the exponent is defined."""


class PoleError(ArithmeticError):
    """The stopped characteristic function has a pole at the evaluation point."""


def _as_complex(w):
    return np.asarray(w, dtype=complex)


def _finish(w, value):
    """Pin psi(0) = 0 and return a scalar for scalar input."""
    value = np.where(w == 0, 0.0, value)
    return complex(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class LevyModel:
    family: ClassVar[str] = "abstract"
    mu: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def _gaussian(self, w):
        return 1j * self.mu * w - 0.5 * self.sigma**2 * w * w

    def psi(self, w):
        raise NotImplementedError

    def params(self) -> dict:
        """Parameters as plain data (used in manifests)."""
        out = {"family": self.family}
        for name in self.__dataclass_fields__:
            val = getattr(self, name)
            out[name] = val.to_dict() if hasattr(val, "to_dict") else val
        return out


@dataclass(frozen=True)
class BrownianDrift(LevyModel):
    family: ClassVar[str] = "brownian"

    def psi(self, w):
        w = _as_complex(w)
        return _finish(w, self._gaussian(w))


@dataclass(frozen=True)
class MixedGammaJumps:
    """Two-sided mixed gamma jump law.

    Each side is a tuple of ``(weight, shape, rate)``; a positive-side term has
    density ``weight * rate^shape x^(shape-1) e^(-rate x) / (shape-1)!`` on
    ``x >= 0`` and negative-side terms are mirrored.
    """

    positive: tuple = ()
    negative: tuple = ()

    def __post_init__(self):
        pos = tuple((float(c), int(j), float(a)) for c, j, a in self.positive)
        neg = tuple((float(c), int(j), float(a)) for c, j, a in self.negative)
        if not pos and not neg:
            raise ValueError("mixed gamma law needs at least one term")
        for c, j, a in pos + neg:
            if c <= 0 or j < 1 or a <= 0:
                raise ValueError(f"invalid mixed gamma term {(c, j, a)}")
        object.__setattr__(self, "positive", pos)
        object.__setattr__(self, "negative", neg)

    @property
    def mass(self) -> float:
        return sum(c for c, _, _ in self.positive + self.negative)

    def cf(self, w):
        """Fourier transform ``int e^{iwx} p(x) dx`` (equals ``mass`` at 0)."""
        w = _as_complex(w)
        out = np.zeros_like(w)
        for c, j, a in self.positive:
            out = out + c * (a / (a - 1j * w)) ** j
        for c, j, b in self.negative:
            out = out + c * (b / (b + 1j * w)) ** j
        return out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        terms = [(c, j, a, 1.0) for c, j, a in self.positive]
        terms += [(c, j, b, -1.0) for c, j, b in self.negative]
        probs = np.array([t[0] for t in terms]) / self.mass
        pick = rng.choice(len(terms), size=n, p=probs)
        out = np.empty(n)
        for k, (_, j, rate, sign) in enumerate(terms):
            sel = pick == k
            out[sel] = sign * rng.gamma(j, 1.0 / rate, size=int(sel.sum()))
        return out

    def to_dict(self) -> dict:
        return {"positive": [list(t) for t in self.positive], "negative": [list(t) for t in self.negative]}


def mixed_gamma_density(params: MixedGammaJumps, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x >= 0
    for c, j, a in params.positive:
        out = out + np.where(pos, c * a**j * np.abs(x) ** (j - 1) * np.exp(-a * np.abs(x)) / math.factorial(j - 1), 0.0)
    neg = x <= 0
    for c, j, b in params.negative:
        out = out + np.where(neg, c * b**j * np.abs(x) ** (j - 1) * np.exp(-b * np.abs(x)) / math.factorial(j - 1), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CompoundPoissonMixedGamma(LevyModel):
    """Finite-activity jumps with a mixed gamma law; compensation is absorbed in ``mu``.

    The jump weights are normalized to a probability law, so ``intensity`` is the
    Poisson rate of jumps.
    """

    family: ClassVar[str] = "compound_poisson"
    intensity: float = 1.0
    jumps: MixedGammaJumps = field(default_factory=lambda: MixedGammaJumps(positive=((1.0, 1, 1.0),)))

    def __post_init__(self):
        super().__post_init__()
        if self.intensity <= 0:
            raise ValueError("jump intensity must be positive")

    def psi(self, w):
        w = _as_complex(w)
        j = self.jumps
        rates = [-1j * a for _, _, a in j.positive] + [1j * b for _, _, b in j.negative]
        if np.any(np.isin(w, rates)):
            raise DomainError("exponent has a pole at a jump-law rate")
        value = self._gaussian(w) + self.intensity * (j.cf(w) / j.mass - 1.0)
        return _finish(w, value)


@dataclass(frozen=True)
class CosechSquaredJumps(LevyModel):
    """Jump measure ``exp(alpha x) cosech^2(x/2) dx``, ``|alpha| < 1``."""

    family: ClassVar[str] = "cosech_squared"
    alpha: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if not -1.0 < self.alpha < 1.0:
            raise ValueError("cosech^2 tilt must satisfy |alpha| < 1")

    @property
    def gamma(self) -> float:
        a = self.alpha
        if a == 0.0:
            return 1.0
        return math.pi * a / math.tan(math.pi * a)

    @property
    def rho(self) -> float:
        a, g = self.alpha, self.gamma
        if a == 0.0:
            return -self.mu
        return 4.0 * math.pi**2 * a + 4.0 * g * (g - 1.0) / a - self.mu

    def psi(self, w):
        w = _as_complex(w)
        u = np.pi * (w - 1j * self.alpha)
        near = np.abs(u) < 1e-4
        safe = np.where(near, 1.0, u)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            ucoth = np.where(near, 1.0 + u * u / 3.0 - u**4 / 45.0, safe / np.tanh(safe))
        if not np.all(np.isfinite(ucoth)):
            raise DomainError("exponent has a pole (coth singularity)")
        value = -0.5 * self.sigma**2 * w * w - 1j * self.rho * w - 4.0 * ucoth + 4.0 * self.gamma
        return _finish(w, value)


def _log_bessel_k(order: float, z):
    """Continuous log K_order(z) on Re z >= 0 (uses the z^nu e^z K_nu scaling)."""
    nu = abs(order)
    return np.log(z**nu * bessel_k(nu, z, scaled=True)) - nu * np.log(z) - z


@dataclass(frozen=True)
class GeneralizedHyperbolic(LevyModel):
    """Generalized hyperbolic exponent; ``sigma`` is unused (pure jump)."""

    family: ClassVar[str] = "generalized_hyperbolic"
    lam: float = -0.5
    alpha: float = 1.0
    beta: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.alpha <= 0 or self.delta <= 0 or not -self.alpha < self.beta < self.alpha:
            raise ValueError("need alpha > 0, delta > 0 and |beta| < alpha")
        if self.sigma != 0.0:
            raise ValueError("generalized hyperbolic family has no Gaussian part")

    def psi(self, w):
        w = _as_complex(w)
        a2 = self.alpha**2
        s0 = a2 - self.beta**2
        s = a2 - (self.beta + 1j * w) ** 2
        if np.any((s.imag == 0.0) & (s.real <= 0.0)):
            raise DomainError("argument on the branch cut of sqrt(alpha^2 - (beta + i w)^2)")
        z = self.delta * np.sqrt(s)
        z0 = self.delta * math.sqrt(s0)
        value = (
            1j * self.mu * w
            + 0.5 * self.lam * (math.log(s0) - np.log(s))
            + _log_bessel_k(self.lam, z)
            - _log_bessel_k(self.lam, z0).real
        )
        return _finish(w, value)


@dataclass(frozen=True)
class SymmetricStable(LevyModel):
    """Experimental: ``psi(w) = 1/(i mu w - scale^index |w|^index)`` exactly as printed.

    This is the reciprocal of the usual stable exponent, so ``psi(0)`` is not 0 and
    the usual exponent invariants do not hold.  Real ``w`` only.
    """

    family: ClassVar[str] = "symmetric_stable"
    index: float = 2.0
    scale: float = 1.0
    experimental: bool = False

    def __post_init__(self):
        super().__post_init__()
        if not self.experimental:
            raise ValueError("the symmetric stable family is experimental; pass experimental=True")
        if not 0.0 < self.index <= 2.0 or self.scale <= 0:
            raise ValueError("need index in (0, 2] and scale > 0")

    def psi(self, w):
        w = _as_complex(w)
        if np.any(w.imag != 0.0):
            raise DomainError("stable exponent is only defined on the real line")
        x = w.real
        den = 1j * self.mu * x - self.scale**self.index * np.abs(x) ** self.index
        with np.errstate(divide="ignore", invalid="ignore"):
            value = 1.0 / den
        return complex(value) if value.ndim == 0 else value


FAMILIES = {
    cls.family: cls
    for cls in (BrownianDrift, CompoundPoissonMixedGamma, CosechSquaredJumps, GeneralizedHyperbolic, SymmetricStable)
}


def psi(model: LevyModel, w):
    return model.psi(w)


@dataclass(frozen=True)
class StoppingTime:
    """Exponential(q), rate q > 0, or geometric on {0, 1, ...} with P(n) = (1-q) q^n."""

    kind: str
    q: float

    def __post_init__(self):
        if self.kind not in ("exponential", "geometric"):
            raise ValueError(f"unknown stopping kind {self.kind!r}")
        if self.kind == "exponential" and not self.q > 0:
            raise ValueError("exponential stopping needs q > 0")
        if self.kind == "geometric" and not 0 < self.q < 1:
            raise ValueError("geometric stopping needs 0 < q < 1")

    @property
    def mean(self) -> float:
        if self.kind == "exponential":
            return 1.0 / self.q
        return self.q / (1.0 - self.q)


def pole_equation(model: LevyModel, stop: StoppingTime):
    """Analytic function whose zeros are the poles of the stopped characteristic function."""
    if stop.kind == "exponential":
        return lambda w: stop.q - model.psi(w)

    def geometric(w):
        with np.errstate(over="ignore", invalid="ignore"):
            return 1.0 - stop.q * np.exp(model.psi(w))

    return geometric


def stopped_cf(model: LevyModel, stop: StoppingTime, w):
    """Characteristic function of ``X`` at the independent stopping time.

    Exponential: ``q / (q - psi)``.  Geometric: ``(1-q) / (1 - q exp(psi))``.
    """
    p = _as_complex(model.psi(w))
    if stop.kind == "exponential":
        num, den = stop.q, stop.q - p
    else:
        with np.errstate(over="ignore"):
            num, den = 1.0 - stop.q, 1.0 - stop.q * np.exp(p)
    if np.any(den == 0):
        raise PoleError("stopped characteristic function has a pole here")
    with np.errstate(over="ignore", invalid="ignore"):
        value = num / den
    value = np.where(np.isinf(p.real) & (p.real < 0), 0.0, value) if stop.kind == "exponential" else value
    return complex(value) if np.ndim(value) == 0 else value

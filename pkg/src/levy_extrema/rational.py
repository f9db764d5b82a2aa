"""Positive-definite rational approximants, pole search and coefficient fitting.

Basis terms (``beta, alpha > 0``)::

    r1 = 1/(iw + beta)                                  pole  i beta
    r2 = 1/(-iw + beta)                                 pole -i beta
    r3 = 1/((iw + beta)(iw + beta + i alpha)(iw + beta - i alpha))   poles i beta, i beta +/- alpha
    r4 = r3 with iw -> -iw                              poles -i beta, -i beta +/- alpha

r1/r3 are transforms of nonnegative functions on x <= 0 (infimum side) and
r2/r4 of nonnegative functions on x >= 0 (supremum side).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import optimize

from .transforms import GridFunction, NormOrder, lp_norm

logger = logging.getLogger(__name__)

POLISH_TOL = 1e-9


class PoleError(ArithmeticError):
    """Evaluation at a pole of the approximant."""


class PoleSearchError(RuntimeError):
    """Pole search failed (Newton polish did not converge, or nothing found)."""


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class BasisTerm:
    form: str
    rate: float
    alpha: float = 0.0
    power: int = 1
    star: bool = False

    def __post_init__(self):
        if self.form not in ("r1", "r2", "r3", "r4"):
            raise ValueError(f"unknown basis form {self.form!r}")
        if not self.rate > 0:
            raise ValueError("basis rate must be positive")
        if self.form in ("r3", "r4") and not self.alpha > 0:
            raise ValueError("r3/r4 terms need alpha > 0")
        if self.form in ("r1", "r2") and self.alpha != 0.0:
            raise ValueError("r1/r2 terms take no alpha")
        if self.power < 1:
            raise ValueError("power must be >= 1")
        if self.star and (self.form in ("r3", "r4") or self.power != 1):
            raise ValueError("D* terms must be first-order r1 or r2")

    @property
    def side(self) -> str:
        """Factor the term belongs to: ``"lower"`` (infimum) for r1/r3, ``"upper"`` for r2/r4."""
        return "lower" if self.form in ("r1", "r3") else "upper"

    @property
    def roots(self) -> tuple:
        """Poles of one factor of the term in the w-plane."""
        sgn = 1.0 if self.side == "lower" else -1.0
        base = sgn * 1j * self.rate
        if self.form in ("r1", "r2"):
            return (base,)
        return (base, base - self.alpha, base + self.alpha)

    @property
    def leading(self) -> complex:
        """Constant ``c`` with ``term = c / prod(w - root)`` (first power)."""
        if self.form == "r1":
            return -1j
        if self.form == "r2":
            return 1j
        return 1j if self.form == "r3" else -1j

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        s = 1j * w if self.side == "lower" else -1j * w
        d = s + self.rate
        if self.form in ("r3", "r4"):
            d = d * (d * d + self.alpha**2)
        if np.any(d == 0):
            raise PoleError("evaluation at a pole of a basis term")
        return 1.0 / d**self.power

    def to_dict(self) -> dict:
        return {"form": self.form, "rate": self.rate, "alpha": self.alpha, "power": self.power}


@dataclass(frozen=True)
class RationalApproximant:
    a0: float
    terms: tuple
    kind: str = "D"

    def __post_init__(self):
        terms = tuple((t, float(c)) for t, c in self.terms)
        if self.kind not in ("D", "D*"):
            raise ValueError("kind must be 'D' or 'D*'")
        if self.a0 < 0 or any(c < 0 for _, c in terms):
            raise ValueError("A0 and all coefficients must be nonnegative")
        if self.kind == "D*" and any(t.form in ("r3", "r4") or t.power != 1 for t, _ in terms):
            raise ValueError("D* approximants admit only first-order r1/r2 terms")
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "terms", terms)

    @property
    def basis(self) -> list:
        return [t for t, _ in self.terms]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.terms])

    def __call__(self, w):
        return evaluate(self, w)

    def polynomial_form(self):
        """``(scale, zeros, poles)`` with ``r(w) = scale * prod(w - z) / prod(w - p)``.

        Poles carry multiplicity by repetition.  Uses root-multiset arithmetic so the
        common denominator never has to be divided out numerically.
        """
        poles: dict = {}
        for t, c in self.terms:
            if c == 0.0:
                continue
            for root in t.roots:
                key = _root_key(root)
                poles[key] = (root, max(poles.get(key, (root, 0))[1], t.power))
        pole_list = [p for p, m in poles.values() for _ in range(m)]
        q = np.poly(pole_list) if pole_list else np.array([1.0 + 0j])
        # |r| <= r(0) for a positive-definite r, so a relatively tiny A0 is invisible
        # everywhere but would put a zero near infinity
        a0 = self.a0 if self.a0 > 1e-12 * abs(evaluate(self, 0.0)) else 0.0
        num = a0 * q
        for t, c in self.terms:
            if c == 0.0:
                continue
            remaining = dict(poles)
            for root in t.roots:
                key = _root_key(root)
                p, m = remaining[key]
                remaining[key] = (p, m - t.power)
            rest = [p for p, m in remaining.values() for _ in range(m)]
            part = c * t.leading**t.power * (np.poly(rest) if rest else np.array([1.0 + 0j]))
            num = np.polyadd(num, part)
        num = np.asarray(num, dtype=complex)
        # leading terms cancel exactly in theory when A0 = 0; drop round-off residue
        big = np.max(np.abs(num)) if num.size else 0.0
        lead = 0
        while lead < num.size and (num[lead] == 0.0 or a0 == 0.0 and abs(num[lead]) <= 1e-12 * big):
            lead += 1
        num = num[lead:]
        if num.size == 0 or big == 0.0:
            raise FitError("approximant is identically zero")
        return num[0], np.roots(num), np.array(pole_list, dtype=complex)


def _root_key(z: complex, digits: int = 12):
    return (round(z.real, digits), round(z.imag, digits))


def evaluate(r: RationalApproximant, w):
    w = np.asarray(w, dtype=complex)
    out = np.full(w.shape, r.a0, dtype=complex)
    for t, c in r.terms:
        out = out + c * t(w)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PoleSet:
    poles: tuple
    multiplicities: tuple = ()
    requested: object = None

    def __post_init__(self):
        poles = tuple(complex(p) for p in self.poles)
        mult = tuple(int(m) for m in self.multiplicities) or (1,) * len(poles)
        if len(mult) != len(poles):
            raise ValueError("one multiplicity per pole")
        if any(m < 1 for m in mult):
            raise ValueError("multiplicities must be >= 1")
        if any(p.imag == 0.0 for p in poles):
            raise ValueError("poles on the real axis are not allowed")
        scale = max([1.0] + [abs(p) for p in poles])
        for p in poles:
            if abs(p.real) > 1e-12 * scale:
                if not any(abs(q - complex(-p.real, p.imag)) <= 1e-6 * scale for q in poles):
                    raise ValueError(f"mirror partner of off-axis pole {p} is missing")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "multiplicities", mult)

    def __len__(self):
        return len(self.poles)

    @property
    def upper(self) -> list:
        return [p for p in self.poles if p.imag > 0]

    @property
    def lower(self) -> list:
        return [p for p in self.poles if p.imag < 0]

    def groups(self) -> list:
        """Poles grouped as on-axis singletons or mirrored pairs ``(a + bi, -a + bi)``."""
        out, seen = [], set()
        for p, m in zip(self.poles, self.multiplicities):
            key = (round(abs(p.real), 9), round(p.imag, 9))
            if key in seen:
                continue
            seen.add(key)
            out.append((complex(abs(p.real), p.imag), m))
        return out


@dataclass(frozen=True)
class SearchRegion:
    """Where to look for zeros of the pole equation.

    ``axis_extent`` bounds the imaginary-axis scan, ``re_max``/``im_max`` the
    rectangle (right half) tiled into cells of side ``cell`` for the argument
    principle; mirrored partners cover the left half.
    """

    axis_extent: float = 64.0
    re_max: float = 12.0
    im_max: float = 12.0
    cell: float = 0.5
    max_depth: int = 12
    off_axis: bool = True


def _safe_eval(func: Callable, z: np.ndarray) -> np.ndarray:
    """Vectorized evaluation; points where the function raises become NaN."""
    try:
        with np.errstate(all="ignore"):
            return np.asarray(func(z), dtype=complex)
    except (ValueError, ArithmeticError):
        out = np.empty(z.shape, dtype=complex)
        for i, zi in enumerate(z.flat):
            try:
                with np.errstate(all="ignore"):
                    out.flat[i] = complex(func(zi))
            except (ValueError, ArithmeticError):
                out.flat[i] = np.nan
        return out


def _polish(func: Callable, z0: complex) -> complex:
    def fprime(z):
        h = 1e-6 * max(1.0, abs(z))
        return (func(z + h) - func(z - h)) / (2 * h)

    try:
        with np.errstate(all="ignore"):
            z = complex(optimize.newton(lambda z: complex(func(z)), complex(z0), fprime=fprime, tol=1e-14, maxiter=100))
    except (RuntimeError, ValueError, ArithmeticError, OverflowError) as exc:
        raise PoleSearchError(f"Newton polish failed from {z0}: {exc}") from exc
    if not np.isfinite(z) or not abs(complex(func(z))) < POLISH_TOL:
        raise PoleSearchError(f"Newton polish did not reach |D| < {POLISH_TOL} from {z0}")
    return z


def _axis_roots(func: Callable, extent: float, sign: float) -> list:
    """Zeros of ``t -> func(i sign t)`` on ``(0, extent]`` via sign changes and brentq."""
    t = np.unique(np.concatenate([np.geomspace(1e-6, 1.0, 200), np.arange(1.0, extent + 1e-3, 2e-3)]))
    vals = _safe_eval(func, 1j * sign * t)
    f = vals.real
    ok = np.isfinite(f) & (np.abs(vals.imag) <= 1e-8 * np.maximum(1.0, np.abs(f)))
    roots = [1j * sign * t[k] for k in np.flatnonzero(ok & (f == 0.0)) if abs(complex(func(1j * sign * t[k]))) < POLISH_TOL]
    for k in np.flatnonzero(ok[:-1] & ok[1:] & (np.sign(f[:-1]) * np.sign(f[1:]) < 0)):
        g = lambda s: complex(func(1j * sign * s)).real  # noqa: E731
        try:
            s = optimize.brentq(g, t[k], t[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
        except ValueError:
            continue
        z = 1j * sign * s
        if abs(complex(func(z))) < POLISH_TOL:
            roots.append(z)
        # otherwise the sign change is a pole of the exponent, not a zero
    return roots


def _winding(func: Callable, lo: np.ndarray, hi: np.ndarray, per_edge: int = 64) -> np.ndarray:
    """Argument-principle zero counts for axis-aligned cells ``[lo, hi]`` (complex corners)."""
    s = np.linspace(0.0, 1.0, per_edge, endpoint=False)
    a, b = lo[:, None], hi[:, None]
    bl = a
    br = b.real + 1j * a.imag
    tr = b
    tl = a.real + 1j * b.imag
    path = np.concatenate([bl + (br - bl) * s, br + (tr - br) * s, tr + (tl - tr) * s, tl + (bl - tl) * s, bl], axis=1)
    vals = _safe_eval(func, path.ravel()).reshape(path.shape)
    with np.errstate(all="ignore"):
        steps = np.angle(vals[:, 1:] / vals[:, :-1])
        counts = np.rint(np.sum(steps, axis=1) / (2 * np.pi))
        bad = ~np.all(np.isfinite(steps), axis=1) | (np.max(np.abs(steps), axis=1) > 1.0)
    if bad.any() and per_edge < 4096:
        counts[bad] = _winding(func, lo[bad], hi[bad], per_edge * 4)
    counts[~np.all(np.isfinite(steps), axis=1)] = 0
    return counts


def _off_axis_roots(func: Callable, region: SearchRegion) -> list:
    re_edges = np.arange(0.0, region.re_max + 1e-12, region.cell)
    im_edges = np.arange(-region.im_max, region.im_max + 1e-12, region.cell)
    re_edges[0] = 1e-7
    lo = (re_edges[:-1, None] + 1j * im_edges[None, :-1]).ravel()
    hi = (re_edges[1:, None] + 1j * im_edges[None, 1:]).ravel()
    # stagger the horizontal edges off the real axis and any round numbers
    shift = 1j * 1e-3 * math.pi
    lo, hi = lo + shift, hi + shift
    found = []
    depth = 0
    while lo.size and depth <= region.max_depth:
        n = _winding(func, lo, hi)
        keep = n > 0
        lo, hi, n = lo[keep], hi[keep], n[keep]
        split_lo, split_hi = [], []
        for a, b, k in zip(lo, hi, n):
            centre = 0.5 * (a + b)
            if k == 1:
                try:
                    z = _polish(func, centre)
                    pad = 0.1 * abs(b - a)
                    if a.real - pad <= z.real <= b.real + pad and a.imag - pad <= z.imag <= b.imag + pad:
                        found.append(z)
                        continue
                except PoleSearchError:
                    pass
            if depth == region.max_depth:
                try:
                    found.append(_polish(func, centre))
                except PoleSearchError as exc:
                    raise PoleSearchError(f"unresolved zero cluster near {centre}") from exc
                continue
            m = centre
            for qa, qb in (
                (a, m),
                (m.real + 1j * a.imag, b.real + 1j * m.imag),
                (a.real + 1j * m.imag, m.real + 1j * b.imag),
                (m, b),
            ):
                split_lo.append(qa)
                split_hi.append(qb)
        lo, hi = np.array(split_lo, dtype=complex), np.array(split_hi, dtype=complex)
        depth += 1
    return [z for z in found if abs(z.real) > 1e-9]


def _dedupe(roots: Sequence[complex], tol: float = 1e-7) -> list:
    out: list = []
    for z in roots:
        if not any(abs(z - w) <= tol * max(1.0, abs(z)) for w in out):
            out.append(z)
    return out


def find_poles(
    denominator: Callable,
    count: int | Mapping[str, int],
    search: SearchRegion | None = None,
) -> PoleSet:
    """Zeros of ``denominator`` (the poles of ``h``) of smallest modulus.

    ``count`` is either a total or a per-side mapping ``{"upper": n, "lower": m}``.
    A mirrored off-axis pair ``(a + bi, -a + bi)`` counts as one pole group.  The
    imaginary axis is scanned first, then the right half-plane is tiled with
    argument-principle cells; left-half zeros are added by mirroring, which is exact
    for Hermitian exponents.
    """
    search = search or SearchRegion()
    if isinstance(count, Mapping):
        unknown = set(count) - {"upper", "lower"}
        if unknown:
            raise ValueError(f"unknown count keys {sorted(unknown)}")
        want = {"upper": int(count.get("upper", 0)), "lower": int(count.get("lower", 0))}
        if sum(want.values()) < 1:
            raise ValueError("need at least one pole")
    else:
        if int(count) < 1:
            raise ValueError("need at least one pole")
        want = None

    roots = _axis_roots(denominator, search.axis_extent, 1.0) + _axis_roots(denominator, search.axis_extent, -1.0)
    if search.off_axis:
        roots += _off_axis_roots(denominator, search)
    roots = _dedupe(roots)
    groups = sorted(roots, key=lambda z: (abs(z), z.imag))

    def pick(cands, n):
        return cands[:n]

    if want is None:
        chosen = pick(groups, int(count))
        n_req = int(count)
    else:
        chosen = pick([z for z in groups if z.imag > 0], want["upper"]) + pick(
            [z for z in groups if z.imag < 0], want["lower"]
        )
        n_req = sum(want.values())
    if len(chosen) < n_req:
        warnings.warn(f"found only {len(chosen)} of {n_req} requested pole groups in the search region", stacklevel=2)
        if not chosen:
            raise PoleSearchError("no poles found in the search region")
    poles = []
    for z in chosen:
        poles.append(z)
        if abs(z.real) > 1e-9:
            poles.append(complex(-z.real, z.imag))
    return PoleSet(tuple(poles), requested=count)


def basis_from_poles(poles: PoleSet, kind: str = "D") -> list:
    """Basis terms with the given poles.

    On-axis poles ``i b`` give r1 terms (infimum side) and ``-i b`` give r2 terms
    (supremum side); mirrored pairs give r3/r4.  Under ``D*`` pairs are replaced by
    first-order r1/r2 terms whose rate is the imaginary part of the pair.
    """
    if len(poles) == 0:
        raise FitError("empty pole set")
    if kind not in ("D", "D*"):
        raise ValueError("kind must be 'D' or 'D*'")
    terms: list = []
    for z, m in poles.groups():
        b = abs(z.imag)
        if b == 0.0:
            raise FitError("pole on the real axis has no completely monotone proxy")
        upper = z.imag > 0
        if kind == "D*":
            if m > 1:
                raise FitError("D* admits only simple poles")
            t = BasisTerm("r1" if upper else "r2", b, star=True)
        elif abs(z.real) <= 1e-9:
            for j in range(1, m + 1):
                terms.append(BasisTerm("r1" if upper else "r2", b, power=j))
            continue
        else:
            for j in range(1, m + 1):
                terms.append(BasisTerm("r3" if upper else "r4", b, alpha=abs(z.real), power=j))
            continue
        if not any(t == u for u in terms):
            terms.append(t)
    return terms


def _nodes(grid) -> np.ndarray:
    if isinstance(grid, GridFunction):
        return grid.nodes
    return np.asarray(grid, dtype=float)


def estimate_a0(h: Callable, half_width: float) -> float:
    """Limit of ``|h|`` at infinity by Aitken extrapolation over ``L, 10L, 100L``."""
    xs = half_width * np.array([1.0, 10.0, 100.0])
    vals = np.array([np.mean(np.abs(_safe_eval(h, np.array([x, -x])))) for x in xs])
    if not np.all(np.isfinite(vals)):
        return 0.0
    d1, d2 = vals[1] - vals[0], vals[2] - vals[1]
    den = d2 - d1
    limit = vals[2] - d2 * d2 / den if den != 0.0 else vals[2]
    limit = float(min(max(limit, 0.0), vals[2]))
    return 0.0 if limit < 1e-9 else limit


def fit_coefficients(
    h: Callable,
    basis: Sequence[BasisTerm],
    grid,
    order: NormOrder | float = 2.0,
    a0: float | None = None,
    kind: str | None = None,
) -> RationalApproximant:
    """Nonnegative coefficients minimizing ``int |h - A0 - sum C_k r_k|^p dw`` on the grid.

    p = 2 is solved by active-set NNLS on stacked real and imaginary parts; other
    orders use bounded L-BFGS-B started from the NNLS solution.
    """
    basis = list(basis)
    if not basis:
        raise FitError("empty basis")
    order = order if isinstance(order, NormOrder) else NormOrder(float(order))
    w = _nodes(grid)
    dw = float(w[1] - w[0])
    if a0 is None:
        a0 = estimate_a0(h, float(np.max(np.abs(w))))
    target = np.asarray(h(w), dtype=complex) - a0
    B = np.column_stack([t(w) for t in basis])
    sw = math.sqrt(dw)
    A = np.vstack([B.real, B.imag]) * sw
    y = np.concatenate([target.real, target.imag]) * sw
    if np.linalg.matrix_rank(A) < A.shape[1]:
        warnings.warn("rank-deficient basis; NNLS returns one of the minimizers", stacklevel=2)
    coef, _ = optimize.nnls(A, y, maxiter=50 * A.shape[1])
    if order.p != 2.0:
        p = order.p

        def obj(c):
            res = B @ c - target
            mag = np.abs(res)
            val = np.sum(mag**p) * dw
            with np.errstate(divide="ignore", invalid="ignore"):
                wgt = np.where(mag > 0, p * mag ** (p - 2), 0.0)
            grad = np.real(np.conj(B).T @ (wgt * res)) * dw
            return val, grad

        sol = optimize.minimize(obj, coef, jac=True, method="L-BFGS-B", bounds=[(0, None)] * len(basis),
                                options={"maxiter": 10_000, "ftol": 1e-14, "gtol": 1e-10})
        coef = sol.x
    if kind is None:
        kind = "D*" if all(t.star for t in basis) else "D"
    return RationalApproximant(a0, tuple(zip(basis, np.maximum(coef, 0.0))), kind)


def fit_error(h: Callable, r: RationalApproximant, order: NormOrder | float = 2.0, grid=None) -> float:
    """L^p distance between ``h`` and ``r`` on the grid."""
    w = _nodes(grid)
    diff = np.asarray(h(w), dtype=complex) - evaluate(r, w)
    return lp_norm(GridFunction(w, diff), order)

"""End-to-end factorization: poles -> fit -> split -> normalize -> densities."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .levy import LevyModel, StoppingTime, pole_equation, stopped_cf
from .rational import (
    BasisTerm,
    PoleSet,
    RationalApproximant,
    SearchRegion,
    basis_from_poles,
    find_poles,
    fit_coefficients,
    fit_error,
)
from .transforms import GridFunction, NormOrder, make_grid, phase_winding
from .whf import (
    ExtremaDensity,
    HalfPlaneFactor,
    carlemann_split,
    density_from_factor,
    error_bound_factorization,
    normalize_factors,
)

logger = logging.getLogger(__name__)

STAGES = ("poles", "fit", "split", "normalize", "densities")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.message = message


@dataclass(frozen=True)
class PipelineOptions:
    """Knobs for :func:`run_pipeline`.

    ``count`` is the number of pole groups (or a per-side mapping).  ``poles``
    bypasses the search with an explicit list; ``coefficients`` bypasses the fit
    (useful to evaluate a published approximant).
    """

    count: int | Mapping[str, int] = 3
    kind: str = "D"
    half_width: float = 64.0
    size: int = 2**15
    p: float = 2.0
    search: SearchRegion = field(default_factory=SearchRegion)
    poles: tuple | None = None
    coefficients: tuple | None = None
    a0: float | None = None


@dataclass(frozen=True)
class PipelineResult:
    model: LevyModel
    stop: StoppingTime
    poles: PoleSet
    approximant: RationalApproximant
    fit_error: float
    bound: float
    order: NormOrder
    factors: tuple[HalfPlaneFactor, HalfPlaneFactor]
    rescale: tuple[float, float]
    supremum: ExtremaDensity
    infimum: ExtremaDensity
    winding: float
    notes: tuple = ()


def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except PipelineError:
                raise
            except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
                raise PipelineError(name, str(exc)) from exc

        return inner

    return wrap


@_stage("poles")
def _poles(model, stop, opts: PipelineOptions) -> PoleSet:
    if opts.poles is not None:
        return PoleSet(tuple(complex(p) for p in opts.poles))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ps = find_poles(pole_equation(model, stop), opts.count, opts.search)
    for w in caught:
        logger.warning("%s", w.message)
    return ps


@_stage("fit")
def _fit(h, basis: Sequence[BasisTerm], nodes, opts: PipelineOptions) -> RationalApproximant:
    if opts.coefficients is not None:
        if len(opts.coefficients) != len(basis):
            raise ValueError(f"{len(opts.coefficients)} coefficients given for {len(basis)} basis terms")
        kind = opts.kind
        return RationalApproximant(opts.a0 or 0.0, tuple(zip(basis, opts.coefficients)), kind)
    return fit_coefficients(h, basis, nodes, NormOrder(opts.p), a0=opts.a0, kind=opts.kind)


def run_pipeline(model: LevyModel, stop: StoppingTime, options: PipelineOptions | None = None) -> PipelineResult:
    opts = options or PipelineOptions()
    order = NormOrder(opts.p)
    notes = []

    def h(w):
        return stopped_cf(model, stop, w)

    nodes = make_grid(opts.half_width, opts.size)
    try:
        hv = np.asarray(h(nodes), dtype=complex)
        GridFunction(nodes, hv)
    except (ValueError, ArithmeticError) as exc:
        raise PipelineError("poles", f"stopped CF not evaluable on the grid: {exc}") from exc
    winding = phase_winding(hv)
    if abs(winding) > math.pi:
        msg = f"phase of h winds by {winding:.3f} rad over the grid; index-zero assumption may fail"
        logger.warning(msg)
        notes.append(msg)

    poles = _poles(model, stop, opts)
    basis = _stage("poles")(basis_from_poles)(poles, opts.kind)
    r = _fit(h, basis, nodes, opts)
    delta = _stage("fit")(fit_error)(h, r, order, nodes)
    bound = error_bound_factorization(delta, order)
    fplus, fminus = _stage("split")(carlemann_split)(r)
    nplus, nminus, consts = _stage("normalize")(normalize_factors)(fplus, fminus)
    sup = _stage("densities")(density_from_factor)(nplus)
    inf = _stage("densities")(density_from_factor)(nminus)
    for d in (sup, inf):
        mass = d.total_mass()
        if abs(mass - 1.0) > 1e-8:
            raise PipelineError("densities", f"{d.side} density has total mass {mass}")
    return PipelineResult(
        model=model,
        stop=stop,
        poles=poles,
        approximant=r,
        fit_error=delta,
        bound=bound,
        order=order,
        factors=(nplus, nminus),
        rescale=consts,
        supremum=sup,
        infimum=inf,
        winding=winding,
        notes=tuple(notes),
    )

"""Run configuration: parsing, validation and conversion to library objects.

The document is YAML (JSON is accepted as a subset)::

    command: density            # optional; the CLI argument wins
    model:
      family: cosech_squared     # brownian | compound_poisson | cosech_squared |
      mu: 2.0                    # generalized_hyperbolic | symmetric_stable
      sigma: 2.0
      alpha: 0.0
    stopping: {kind: exponential, q: 5.0}
    pipeline:
      poles: {upper: 2, lower: 1}   # or a total count, e.g. 3
      class: D                      # D or D*
      grid: {half_width: 64.0, size: 32768}
      norm_order: 2.0
      search: {axis_extent: 64.0, re_max: 12.0, im_max: 12.0, cell: 0.5, off_axis: true}
      explicit_poles: [[0.0, 0.5], ...]   # optional, skips the search ([re, im] pairs)
      coefficients: [0.2, 0.2, 0.2]       # optional, skips the fit
      a0: 0.0                             # optional, skips the A0 estimate
    ruin:
      u: {start: 0.0, stop: 5.0, num: 101}   # or an explicit list
      q_sequence: [1.0, 0.5, 0.1, 0.01]      # optional infinite-horizon estimate
    validate: {paths: 100000, dt: 0.01, bridge: true, horizon: 200.0, threshold: 0.02}
    output: results
    seed: 0

Unknown keys are rejected at every level.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .levy import (
    BrownianDrift,
    CompoundPoissonMixedGamma,
    CosechSquaredJumps,
    GeneralizedHyperbolic,
    LevyModel,
    MixedGammaJumps,
    StoppingTime,
    SymmetricStable,
)
from .mc_oracle import SimConfig
from .pipeline import PipelineOptions
from .rational import SearchRegion

COMMANDS = ("factorize", "density", "ruin", "validate")


class ConfigError(ValueError):
    pass


_MODEL_KEYS = {
    "brownian": {"mu", "sigma"},
    "compound_poisson": {"mu", "sigma", "intensity", "jumps"},
    "cosech_squared": {"mu", "sigma", "alpha"},
    "generalized_hyperbolic": {"mu", "lam", "alpha", "beta", "delta"},
    "symmetric_stable": {"mu", "index", "scale", "experimental"},
}

_DEFAULTS: dict = {
    "pipeline": {
        "poles": 3,
        "class": "D",
        "grid": {"half_width": 64.0, "size": 2**15},
        "norm_order": 2.0,
        "search": {"axis_extent": 64.0, "re_max": 12.0, "im_max": 12.0, "cell": 0.5, "off_axis": True},
        "explicit_poles": None,
        "coefficients": None,
        "a0": None,
    },
    "ruin": {"u": {"start": 0.0, "stop": 5.0, "num": 101}, "q_sequence": None},
    "validate": {"paths": 100_000, "dt": 0.01, "bridge": True, "horizon": 200.0, "threshold": 0.02},
    "output": "results",
    "seed": 0,
    "command": None,
}

_TOP_KEYS = {"model", "stopping", "pipeline", "ruin", "validate", "output", "seed", "command"}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    extra = set(section) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")


def _merge(defaults: dict, given: dict, where: str) -> dict:
    _check_keys(given, set(defaults), where)
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(defaults[k], dict) and isinstance(v, dict):
            out[k] = _merge(defaults[k], v, f"{where}.{k}")
        else:
            out[k] = v
    return out


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    model: LevyModel
    stop: StoppingTime
    options: PipelineOptions
    u_grid: np.ndarray
    q_sequence: tuple | None
    sim: SimConfig
    ks_threshold: float
    output: Path
    seed: int
    command: str | None


def _float(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where} must be a number")
    return float(x)


def _model(spec: dict) -> LevyModel:
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError("model.family is required")
    fam = spec["family"]
    if fam not in _MODEL_KEYS:
        raise ConfigError(f"unknown model family {fam!r}")
    _check_keys(spec, _MODEL_KEYS[fam] | {"family"}, "model")
    kw = {k: v for k, v in spec.items() if k != "family"}
    try:
        if fam == "compound_poisson":
            jumps = kw.pop("jumps", None)
            if not isinstance(jumps, dict):
                raise ConfigError("compound_poisson needs model.jumps with positive/negative term lists")
            _check_keys(jumps, {"positive", "negative"}, "model.jumps")
            kw["jumps"] = MixedGammaJumps(
                tuple(tuple(t) for t in jumps.get("positive", [])),
                tuple(tuple(t) for t in jumps.get("negative", [])),
            )
        for k, v in kw.items():
            if k not in ("jumps", "experimental"):
                kw[k] = _float(v, f"model.{k}")
        cls = {
            "brownian": BrownianDrift,
            "compound_poisson": CompoundPoissonMixedGamma,
            "cosech_squared": CosechSquaredJumps,
            "generalized_hyperbolic": GeneralizedHyperbolic,
            "symmetric_stable": SymmetricStable,
        }[fam]
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid model parameters: {exc}") from exc


def _u_grid(spec) -> np.ndarray:
    if isinstance(spec, dict):
        _check_keys(spec, {"start", "stop", "num"}, "ruin.u")
        num = spec.get("num", 101)
        if not isinstance(num, int) or num < 0:
            raise ConfigError("ruin.u.num must be a nonnegative integer")
        u = np.linspace(_float(spec.get("start", 0.0), "ruin.u.start"), _float(spec.get("stop", 5.0), "ruin.u.stop"), num)
    elif isinstance(spec, list):
        u = np.array([_float(x, "ruin.u[]") for x in spec])
    else:
        raise ConfigError("ruin.u must be a mapping or a list")
    if np.any(u < 0):
        raise ConfigError("ruin.u values must be nonnegative")
    return u


def resolve(raw: dict) -> RunConfig:
    """Validate a parsed document and build the library objects."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(raw, _TOP_KEYS, "config")
    for key in ("model", "stopping"):
        if key not in raw:
            raise ConfigError(f"missing required section {key!r}")
    given = {k: v for k, v in raw.items() if k not in ("model", "stopping")}
    merged = _merge(_DEFAULTS, given, "config")
    merged["model"] = copy.deepcopy(raw["model"])
    merged["stopping"] = copy.deepcopy(raw["stopping"])

    model = _model(merged["model"])
    st = merged["stopping"]
    _check_keys(st, {"kind", "q"}, "stopping")
    try:
        stop = StoppingTime(st.get("kind"), _float(st.get("q"), "stopping.q"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    pl = merged["pipeline"]
    count = pl["poles"]
    if isinstance(count, dict):
        _check_keys(count, {"upper", "lower"}, "pipeline.poles")
        if not all(isinstance(v, int) and v >= 0 for v in count.values()) or sum(count.values()) < 1:
            raise ConfigError("pipeline.poles counts must be nonnegative integers with a positive total")
    elif not isinstance(count, int) or isinstance(count, bool) or count < 1:
        raise ConfigError("pipeline.poles must be a positive integer or {upper, lower}")
    if pl["class"] not in ("D", "D*"):
        raise ConfigError("pipeline.class must be 'D' or 'D*'")
    size = pl["grid"]["size"]
    if not isinstance(size, int) or size < 2 or size & (size - 1):
        raise ConfigError("pipeline.grid.size must be a power of two")
    p = _float(pl["norm_order"], "pipeline.norm_order")
    if not 1.0 < p <= 2.0:
        raise ConfigError("pipeline.norm_order must lie in (1, 2]")
    srch = pl["search"]
    search = SearchRegion(
        axis_extent=_float(srch["axis_extent"], "search.axis_extent"),
        re_max=_float(srch["re_max"], "search.re_max"),
        im_max=_float(srch["im_max"], "search.im_max"),
        cell=_float(srch["cell"], "search.cell"),
        off_axis=bool(srch["off_axis"]),
    )
    explicit = None
    if pl["explicit_poles"] is not None:
        try:
            explicit = tuple(complex(_float(a, "pole re"), _float(b, "pole im")) for a, b in pl["explicit_poles"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"pipeline.explicit_poles must be [re, im] pairs: {exc}") from exc
    coefs = None
    if pl["coefficients"] is not None:
        coefs = tuple(_float(c, "pipeline.coefficients[]") for c in pl["coefficients"])
        if any(c < 0 for c in coefs):
            raise ConfigError("coefficients must be nonnegative")
    a0 = None if pl["a0"] is None else _float(pl["a0"], "pipeline.a0")
    options = PipelineOptions(
        count=count,
        kind=pl["class"],
        half_width=_float(pl["grid"]["half_width"], "grid.half_width"),
        size=size,
        p=p,
        search=search,
        poles=explicit,
        coefficients=coefs,
        a0=a0,
    )

    u = _u_grid(merged["ruin"]["u"])
    qs = merged["ruin"]["q_sequence"]
    if qs is not None:
        qs = tuple(_float(q, "ruin.q_sequence[]") for q in qs)
        if not qs or any(b >= a for a, b in zip(qs, qs[1:])) or qs[-1] <= 0:
            raise ConfigError("ruin.q_sequence must be positive and strictly decreasing")

    seed = merged["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    val = merged["validate"]
    try:
        sim = SimConfig(paths=int(val["paths"]), dt=_float(val["dt"], "validate.dt"), seed=seed,
                        horizon=_float(val["horizon"], "validate.horizon"), bridge=bool(val["bridge"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    command = merged["command"]
    if command is not None and command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    return RunConfig(
        raw=merged,
        model=model,
        stop=stop,
        options=options,
        u_grid=u,
        q_sequence=qs,
        sim=sim,
        ks_threshold=_float(val["threshold"], "validate.threshold"),
        output=Path(str(merged["output"])),
        seed=seed,
        command=command,
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return resolve(raw)


def with_seed(cfg: RunConfig, seed: int) -> RunConfig:
    raw = copy.deepcopy(cfg.raw)
    raw["seed"] = seed
    return resolve({k: v for k, v in raw.items()})


def plain(obj: Any) -> Any:
    """Config/result data reduced to JSON-compatible builtins."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj

"""Command-line front end: ``levy-extrema <command> --config <path> [--out <dir>] [--seed <u64>]``.

Exit codes: 0 success, 2 config error, 3 numerical pipeline error (stage named
in the error record), 4 validation statistics above threshold.  Error records
are single-line JSON on stderr.  Nothing is written unless the run succeeds.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, ConfigError, load_config, plain, with_seed
from .levy import stopped_cf
from .mc_oracle import ks_distance, simulate_extrema
from .pipeline import PipelineError, PipelineResult, run_pipeline
from .ruin import RuinError, infinite_time_ruin, ruin_curve
from .transforms import make_grid
from .whf import error_bound_factorization

OUT_ENV = "LEVY_EXTREMA_OUT"
EXIT_CONFIG, EXIT_PIPELINE, EXIT_VALIDATION = 2, 3, 4

logger = logging.getLogger("levy_extrema")


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            return "null"
        return format(x, ".17g")
    return json.dumps(x, ensure_ascii=False)


def dumps(obj, indent: int = 2, level: int = 0) -> str:
    """JSON with every float written at 17 significant digits."""
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return _fmt(obj)


def _density_terms(d):
    return [{"coefficient": c, "rate": lam, "degree": k} for c, lam, k in d.terms]


def manifest_for(result: PipelineResult) -> dict:
    r = result.approximant
    nplus, nminus = result.factors
    return plain({
        "poles": list(result.poles.poles),
        "basis": [t.to_dict() for t in r.basis],
        "coefficients": list(r.coefficients),
        "a0": r.a0,
        "class": r.kind,
        "fit_error": result.fit_error,
        "bound_p": result.order.p,
        "bound_value": result.bound,
        "factor_plus": nplus.to_dict(),
        "factor_minus": nminus.to_dict(),
        "rescale_plus": result.rescale[0],
        "rescale_minus": result.rescale[1],
        "atom_sup": result.supremum.atom,
        "atom_inf": result.infimum.atom,
        "density_terms": {"supremum": _density_terms(result.supremum), "infimum": _density_terms(result.infimum)},
        "phase_winding": result.winding,
        "notes": list(result.notes),
    })


def _csv(path: Path, header: str, cols) -> None:
    rows = np.column_stack(cols)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")


def _error(kind: str, message: str, stage: str | None = None) -> None:
    rec = {"error": kind, "message": message}
    if stage:
        rec["stage"] = stage
    sys.stderr.write(json.dumps(rec) + "\n")


def execute(command: str, cfg, out_dir: Path) -> int:
    """Run one command and write its artifacts into ``out_dir``."""
    result = run_pipeline(cfg.model, cfg.stop, cfg.options)
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "model": plain(cfg.model.params()),
        "stopping": {"kind": cfg.stop.kind, "q": cfg.stop.q},
        "result": manifest_for(result),
        "config": plain(cfg.raw),
    }
    files: dict = {}
    status = 0

    nodes = make_grid(cfg.options.half_width, cfg.options.size)
    step = max(1, nodes.size // 4096)
    w = nodes[::step]
    hv = stopped_cf(cfg.model, cfg.stop, w)
    rv = result.approximant(w)
    files["approximation.csv"] = ("w,h_re,h_im,r_re,r_im", [w, hv.real, hv.imag, rv.real, rv.imag])

    if command in ("density", "ruin", "validate"):
        for d in (result.supremum, result.infimum):
            x = d.support_window(2001)
            files[f"density_{d.side}.csv"] = ("x,density", [x, d.pdf(x)])
    if command == "ruin":
        curve = ruin_curve(result.infimum, cfg.u_grid, cfg.stop, {"side": "infimum"})
        files["ruin.csv"] = ("u,ruin_probability", [curve.u, curve.probabilities])
        manifest["ruin"] = {
            "bound_p": result.order.p,
            "bound_value": error_bound_factorization(result.fit_error, result.order),
            "at_zero": float(curve.probabilities[0]) if curve.u.size else None,
        }
        if cfg.q_sequence:
            inf = {}
            for u in (cfg.u_grid if cfg.u_grid.size <= 11 else cfg.u_grid[:: max(1, cfg.u_grid.size // 10)]):
                est = infinite_time_ruin(cfg.model, float(u), cfg.q_sequence, cfg.options, cfg.stop.kind)
                inf[format(float(u), ".17g")] = {
                    "q_values": list(est.q_values),
                    "probabilities": list(est.probabilities),
                    "limit": est.limit,
                    "monotone": est.monotone,
                    "failures": [list(f) for f in est.failures],
                }
            manifest["ruin"]["infinite_time"] = inf
    if command == "validate":
        m, i = simulate_extrema(cfg.model, cfg.stop, cfg.sim)
        ks_sup = ks_distance(m, result.supremum)
        ks_inf = ks_distance(i, result.infimum)
        ok = ks_sup < cfg.ks_threshold and ks_inf < cfg.ks_threshold
        manifest["validation"] = {
            "paths": cfg.sim.paths,
            "dt": cfg.sim.dt,
            "bridge": cfg.sim.bridge,
            "ks_supremum": ks_sup,
            "ks_infimum": ks_inf,
            "threshold": cfg.ks_threshold,
            "passed": ok,
        }
        if not ok:
            status = EXIT_VALIDATION

    out_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=out_dir) as tmp:
        tmp = Path(tmp)
        for name, (header, cols) in files.items():
            _csv(tmp / name, header, cols)
        (tmp / "manifest.json").write_text(dumps(plain(manifest)) + "\n", encoding="utf-8")
        for f in tmp.iterdir():
            shutil.move(str(f), out_dir / f.name)
    if status == EXIT_VALIDATION:
        _error("validation", f"KS statistics {ks_sup:.4g}/{ks_inf:.4g} exceed {cfg.ks_threshold}")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levy-extrema", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="YAML or JSON run configuration")
    ap.add_argument("--out", help=f"output directory (default: config 'output', or ${OUT_ENV})")
    ap.add_argument("--seed", type=int, help="unsigned 64-bit seed for validate")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = with_seed(cfg, args.seed)
    except ConfigError as exc:
        _error("config", str(exc))
        return EXIT_CONFIG
    out = Path(args.out) if args.out else Path(os.environ[OUT_ENV]) if os.environ.get(OUT_ENV) else cfg.output
    try:
        return execute(args.command, cfg, out)
    except PipelineError as exc:
        _error("pipeline", exc.message, exc.stage)
        return EXIT_PIPELINE
    except (RuinError, ValueError, ArithmeticError) as exc:
        _error("pipeline", str(exc), "ruin" if isinstance(exc, RuinError) else "output")
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``laguerre <subcommand> [options]``.

Settings come from flags, then from an optional ``--config`` file of flat
``key = value`` lines (``#`` starts a comment), then from built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

from . import __version__
from .checks import CHECKS, run_check
from .errors import LaguerreError
from .model import Box, Family, ModelParams, Window, total_mass
from .render import write_svg
from .sampler import SeedSet, make_rng, sample_process, stream_label, truncation_plan
from .serialize import atomic_write_text
from .stats import (
    ExperimentConfig,
    default_tail_grid,
    log_survival_curvature,
    run_replications,
    tail_slope,
    tail_survival,
)
from .tessellation import tessellate

DEFAULTS = {
    "model": "gaussian",
    "beta": None,
    "gamma": 1.0,
    "d": 2,
    "n": "4",
    "replications": 30,
    "tol": 0.01,
    "seed": 0,
    "out": "laguerre-out",
    "canvas_size": 800,
    "color_by_time": True,
    "show_empty": False,
    "certify": True,
}
_INTS = {"d", "replications", "seed", "canvas_size"}
_FLOATS = {"beta", "gamma", "tol"}
_BOOLS = {"color_by_time", "show_empty", "certify"}
DEFAULT_BETA = {"beta": 5.0, "beta-prime": 12.0}


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; keys use underscores or dashes."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise LaguerreError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise LaguerreError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(key, value):
    if value is None or not isinstance(value, str):
        return value
    if key in _INTS:
        return int(value)
    if key in _FLOATS:
        return float(value)
    if key in _BOOLS:
        low = value.lower()
        if low not in {"true", "false", "1", "0", "yes", "no"}:
            raise LaguerreError(f"{key} must be a boolean, got {value!r}")
        return low in {"true", "1", "yes"}
    return value


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (flags win)."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return {k: _coerce(k, v) for k, v in cfg.items()}


def model_from(cfg: dict) -> ModelParams:
    fam = Family(cfg["model"])
    if fam is Family.GAUSSIAN:
        return ModelParams.gaussian(cfg["d"])
    beta = cfg["beta"] if cfg["beta"] is not None else DEFAULT_BETA[fam.value]
    return ModelParams(fam, beta, cfg["gamma"], cfg["d"])


def model_warnings(m: ModelParams) -> list[str]:
    out = []
    if m.family is Family.BETA_PRIME and m.beta <= 5 * m.d + 1:
        out.append(f"beta-prime with beta={m.beta:g} is outside the regime beta > 5d+1 = {5 * m.d + 1} "
                   "where the normal-approximation rate is proved")
    return out


def _sizes(cfg: dict) -> tuple[float, ...]:
    return tuple(float(s) for s in str(cfg["n"]).replace(" ", "").split(",") if s)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True))


# --- subcommands ---------------------------------------------------------------


def cmd_sample(cfg: dict, args) -> int:
    m = model_from(cfg)
    for w in model_warnings(m):
        warnings.warn(w, stacklevel=1)
    n = _sizes(cfg)[0]
    window = Window.of(n, m.d)
    plan = truncation_plan(m, window, cfg["tol"])
    box = plan.region(window)
    S = sample_process(m, box, plan.time_cutoff, make_rng(stream_label(cfg["seed"], int(round(1000 * n)))))
    out = Path(args.output or Path(cfg["out"]) / "seeds.csv")
    csv_path, sidecar = S.write(out)
    _emit({"total_mass": total_mass(m, box.volume, plan.time_cutoff), "count": len(S),
           "csv": str(csv_path), "sidecar": str(sidecar), "plan": plan.to_dict()})
    return 0


def _load_seeds(path) -> SeedSet:
    S = SeedSet.read(path)
    if len(S) == 0:
        raise LaguerreError(f"{path} contains no seeds")
    return S


def _canvas(S: SeedSet, window_n) -> Box | None:
    if window_n is None:
        return None
    return Window.of(float(window_n), S.d).box()


def cmd_tessellate(cfg: dict, args) -> int:
    S = _load_seeds(args.input)
    res = tessellate(S)
    window = Window.of(float(args.window), S.d) if args.window is not None else None
    out = Path(args.output or Path(cfg["out"]) / "tessellation.json")
    res.write(out, window)
    report = {"seeds": len(S), "extreme": int(res.extreme.sum()), "result": str(out)}
    if args.svg:
        write_svg(args.svg, res, canvas=_canvas(S, args.window), size=cfg["canvas_size"],
                  color_by_time=cfg["color_by_time"], show_empty=cfg["show_empty"])
        report["svg"] = str(args.svg)
    _emit(report)
    return 0


def cmd_render(cfg: dict, args) -> int:
    S = _load_seeds(args.input)
    res = tessellate(S)
    out = Path(args.output or Path(cfg["out"]) / "tessellation.svg")
    write_svg(out, res, canvas=_canvas(S, args.window), size=cfg["canvas_size"],
              color_by_time=cfg["color_by_time"], show_empty=cfg["show_empty"])
    _emit({"svg": str(out), "extreme": int(res.extreme.sum())})
    return 0


def _experiment_config(cfg: dict, tails: bool) -> ExperimentConfig:
    m = model_from(cfg)
    for w in model_warnings(m):
        warnings.warn(w, stacklevel=1)
    return ExperimentConfig(m, _sizes(cfg), cfg["replications"], cfg["tol"], cfg["seed"],
                            certify=cfg["certify"], tails=tails)


def cmd_experiment(cfg: dict, args) -> int:
    exp = _experiment_config(cfg, tails=False)
    st = run_replications(exp)
    out = Path(cfg["out"])
    st.write(out / "runstats.json")
    st.write_csv(out / "samples.csv")
    summary = {"runstats": str(out / "runstats.json"), "samples": str(out / "samples.csv"),
               "mean": {repr(n): v for n, v in st.means.items()},
               "variance": {repr(n): v for n, v in st.variances.items()},
               "certified": st.certified, "flags": st.flags}
    if st.scaling is not None:
        summary["slope"] = st.scaling.slope
    _emit(summary)
    return 0 if st.certified else 1


def cmd_tails(cfg: dict, args) -> int:
    exp = _experiment_config(cfg, tails=True)
    st = run_replications(exp)
    out = Path(cfg["out"])
    st.write(out / "runstats.json")
    t = st.tail_times
    if len(t) == 0:
        raise LaguerreError("no certified extreme seeds with bounded cells were found")
    curve = tail_survival(t, default_tail_grid(t, args.points))
    doc = {"model": exp.model.to_dict(), "curve": curve.to_dict(),
           "slope_loglog": _num(tail_slope(curve)), "log_survival_quadratic": _num(log_survival_curvature(curve)),
           "anomalies": st.anomalies, "certified": st.certified}
    atomic_write_text(out / "tails.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")
    _emit({"tails": str(out / "tails.json"), "seeds": len(t), "slope_loglog": doc["slope_loglog"],
           "log_survival_quadratic": doc["log_survival_quadratic"]})
    return 0 if st.certified else 1


def _num(x: float):
    return x if math.isfinite(x) else str(x)


def cmd_verify(cfg: dict, args) -> int:
    res = run_check(args.check)
    _emit(res.to_dict())
    return 0 if res.passed else 1


# --- parser --------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("settings (flags > --config file > defaults)")
    g.add_argument("--config", help="flat key = value settings file")
    g.add_argument("--model", choices=[f.value for f in Family])
    g.add_argument("--beta", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--d", type=int)
    g.add_argument("--n", help="window half-width; comma-separated list for experiments")
    g.add_argument("--replications", "-R", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--seed", type=int, help="master seed")
    g.add_argument("--out", help="output directory")
    g.add_argument("--canvas-size", dest="canvas_size", type=int)
    g.add_argument("--color-by-time", dest="color_by_time", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--show-empty", dest="show_empty", action=argparse.BooleanOptionalAction, default=None,
                   help="draw non-extreme seeds as gray dots")
    g.add_argument("--certify", action=argparse.BooleanOptionalAction, default=None,
                   help="run the doubled configuration alongside each replicate")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="laguerre", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="sample one realization around a window")
    _add_common(s)
    s.add_argument("--output", "-o", help="CSV path (sidecar JSON next to it)")
    s.set_defaults(func=cmd_sample)

    for name, func, help_ in (("tessellate", cmd_tessellate, "tessellate a seed file"),
                              ("render", cmd_render, "draw a seed file as SVG")):
        t = sub.add_parser(name, help=help_)
        _add_common(t)
        t.add_argument("input", help="seed CSV")
        t.add_argument("--window", type=float, help="window half-width (restricts output, sets the canvas)")
        t.add_argument("--output", "-o")
        if name == "tessellate":
            t.add_argument("--svg", help="also write an SVG drawing")
        t.set_defaults(func=func)

    e = sub.add_parser("experiment", help="replicate F_n over window sizes")
    _add_common(e)
    e.set_defaults(func=cmd_experiment)

    t = sub.add_parser("tails", help="coverage-time survival curve")
    _add_common(t)
    t.add_argument("--points", type=int, default=60, help="grid points for H")
    t.set_defaults(func=cmd_tails)

    v = sub.add_parser("verify", help="run a named acceptance check")
    _add_common(v)
    v.add_argument("check", choices=sorted(CHECKS))
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    warnings.simplefilter("always")
    warnings.formatwarning = lambda msg, cat, *a, **k: f"warning: {msg}\n"
    try:
        cfg = resolve(args)
        return args.func(cfg, args)
    except (LaguerreError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

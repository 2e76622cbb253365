"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical failure (an error JSON
is written to stderr).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bifurcation as bf
from . import kernels, rescale
from ._parallel import resolve_workers
from .errors import ConfigError, NonPositive, PoleProximity, TangleError
from .export import curves_csv, diagram_svg, dumps, rows_csv
from .model import ModelConfig, load_config, time_one_flow
from .sweep import sweep_grid

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    mu1_range: tuple[float, float]
    mu2_range: tuple[float, float]
    k_range: tuple[int, int]
    grid: tuple[int, int]
    workers: int
    output_dir: Path | None

    def __post_init__(self):
        for name, (a, b) in (("mu1", self.mu1_range), ("mu2", self.mu2_range)):
            if not a < b:
                raise ConfigError(f"{name} range must be nonempty")
        if not 1 <= self.k_range[0] <= self.k_range[1]:
            raise ConfigError("need 1 <= kmin <= kmax")
        if min(self.grid) < 2:
            raise ConfigError("grid must be at least 2x2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


def _model(args) -> ModelConfig:
    cfg = load_config(args.model) if args.model else ModelConfig()
    if args.d_sign:
        cfg = cfg.with_d_sign(args.d_sign)
    if args.centre_map == "flow":
        cfg = dataclasses.replace(cfg, perturbation=time_one_flow())
    return cfg


def _run_config(args, cfg: ModelConfig) -> RunConfig:
    lo, hi = bf.mu1_window(cfg)
    return RunConfig(
        model=cfg,
        mu1_range=tuple(args.mu1_range) if getattr(args, "mu1_range", None) else (lo, hi),
        mu2_range=tuple(args.mu2_range) if getattr(args, "mu2_range", None) else bf.MU2_WINDOW,
        k_range=(args.kmin, args.kmax),
        grid=(getattr(args, "n_mu1", 2), args.n_mu2),
        workers=resolve_workers(args.workers),
        output_dir=Path(args.out) if args.out else None,
    )


def _emit(args, name: str, text: str) -> None:
    """Write ``text`` to ``<out>/<name>`` if ``--out`` is given, else stdout."""
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        with open(d / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------


def cmd_kernels(args) -> int:
    cfg = _model(args)
    rows = []
    for mu2 in args.mu2:
        try:
            ks = kernels.k_star(mu2, cfg.eps)
        except NonPositive:
            ks = None
        for k in range(args.kmin, args.kmax + 1):
            try:
                kv = kernels.kernel_values(k, mu2)
                rows.append((k, mu2, kv.regime.value, kv.nu_k, kv.theta_k, ks, ""))
            except PoleProximity as exc:
                rows.append((k, mu2, kernels.regime(mu2).value, None, None, ks, exc.tag))
    sys.stdout.write(rows_csv(("k", "mu2", "regime", "nu_k", "theta_k", "k_star", "error"), rows))
    return EXIT_OK


def cmd_fixed_point(args) -> int:
    cfg = _model(args).with_mu(mu1=args.mu1, mu2=args.mu2)
    fr = rescale.frame(args.k, cfg)
    M = fr.M if args.M is None else args.M
    Y = (-1.0 + math.sqrt(max(1.0 + 4.0 * M, 0.0))) / 2.0
    _, rec = rescale.rescaled_fixed_point(fr, np.append(cfg.b * Y, Y))
    doc = rec.to_dict()
    doc.update(mu1=cfg.mu1, mu2=cfg.mu2, M=fr.M)
    _emit(args, f"fixed_point_k{args.k}.json", dumps(doc))
    return EXIT_OK


def _mu2_grid(args, negative_only: bool = False) -> np.ndarray:
    lo, hi = args.mu2_range if args.mu2_range else bf.MU2_WINDOW
    if negative_only:
        hi = min(hi, 0.0)
        g = np.linspace(lo, hi, args.n_mu2)
        return g[g < 0]
    return np.linspace(lo, hi, args.n_mu2)


def cmd_trace(args) -> int:
    cfg = _model(args)
    workers = resolve_workers(args.workers)
    if args.curve == "Lplus":
        curve = bf.trace_L_plus(cfg, samples=args.n_mu2)
    elif args.curve == "Lh":
        curve = bf.trace_L_h(_mu2_grid(args, negative_only=True), cfg)
    else:
        if args.k is None:
            raise ConfigError("--k is required for Lk+ and Lk-")
        kind = "plus" if args.curve == "Lk+" else "minus"
        curve = bf.trace_L_k(args.k, kind, _mu2_grid(args), cfg, workers)
    suffix = "" if curve.k is None else f"_k{curve.k}"
    _emit(args, f"trace_{curve.curve_type}{suffix}.csv", curves_csv([curve]))
    return EXIT_OK


def build_diagram(rc: RunConfig) -> tuple[str, str]:
    """CSV and SVG text for ``L_+``, ``L_h`` and ``L_k^{+-}`` over the window."""
    cfg = rc.model
    mu2_grid = np.linspace(rc.mu2_range[0], rc.mu2_range[1], rc.grid[1])
    lplus = bf.trace_L_plus(cfg, samples=rc.grid[1])
    t = np.linspace(0.0, math.sqrt(max(-rc.mu2_range[0], 0.0)), 4 * rc.grid[1] + 1)[1:]
    lh = bf.trace_L_h(sorted(-(t**2)), cfg)
    keep = [i for i, p in enumerate(lh.samples) if rc.mu1_range[0] <= p[0] <= rc.mu1_range[1]]
    lh.samples = [lh.samples[i] for i in keep]
    lh.residuals = [lh.residuals[i] for i in keep]
    windows = bf.trace_windows(range(rc.k_range[0], rc.k_range[1] + 1), mu2_grid, cfg, rc.workers)
    curves = [lplus, lh]
    for k in sorted(windows):
        curves.extend(windows[k])
    sign = "+" if cfg.d > 0 else "-"
    svg = diagram_svg(curves, rc.mu1_range, rc.mu2_range, title=f"d {sign}, k = {rc.k_range[0]}..{rc.k_range[1]}")
    return curves_csv(curves), svg


def cmd_diagram(args) -> int:
    rc = _run_config(args, _model(args))
    csv_text, svg = build_diagram(rc)
    out = rc.output_dir or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "diagram.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text)
    with open(out / "diagram.svg", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return EXIT_OK


def cmd_rescale(args) -> int:
    cfg = _model(args).with_mu(mu2=args.mu2)
    M = 0.0 if args.M is None else args.M
    fr = rescale.frame_at_M(args.k, cfg, M)
    Ms = rescale.RESIDUAL_MS if args.M is None else (args.M,)
    doc = fr.to_dict()
    doc["residual"] = rescale.rescaling_residual(args.k, args.mu2, cfg, Ms=Ms)
    doc["residual_Ms"] = list(Ms)
    _emit(args, f"rescale_k{args.k}.json", dumps(doc))
    return EXIT_OK


def cmd_rescale_sweep(args) -> int:
    cfg = _model(args)
    rows = []
    for k in range(args.kmin, args.kmax + 1):
        try:
            rows.append((k, args.mu2, rescale.rescaling_residual(k, args.mu2, cfg), ""))
        except TangleError as exc:
            rows.append((k, args.mu2, None, exc.tag))
    _emit(args, "rescale_sweep.csv", rows_csv(("k", "mu2", "r_k", "error"), rows))
    return EXIT_OK


def cmd_sweep(args) -> int:
    rc = _run_config(args, _model(args))
    ks = list(range(rc.k_range[0], rc.k_range[1] + 1))
    cells = sweep_grid(rc.model, rc.mu1_range, rc.mu2_range, rc.grid[0], rc.grid[1], ks, rc.workers)
    header = ["i", "j", "mu1", "mu2", "domain", "homoclinic_count", "sink_ks"] + [f"k{k}" for k in ks]
    rows = (
        [c.i, c.j, c.mu1, c.mu2, c.domain, c.count, ";".join(str(k) for k in c.sink_ks)]
        + [c.outcomes[k] for k in ks]
        for c in cells
    )
    _emit(args, "sweep.csv", rows_csv(header, rows))
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = _model(args)
    tag = bf.classify_domain(args.mu1, args.mu2, cfg)
    doc = {"mu1": args.mu1, "mu2": args.mu2, **tag.to_dict()}
    _emit(args, "classify.json", dumps(doc))
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _common(suppress: bool) -> argparse.ArgumentParser:
    # flags are accepted before or after the subcommand; the subcommand copy
    # suppresses defaults so it does not overwrite a value given earlier
    def dflt(v):
        return argparse.SUPPRESS if suppress else v

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default=dflt(None), help="model JSON file")
    common.add_argument("--out", default=dflt(None), help="output directory")
    common.add_argument("--workers", type=_positive_int, default=dflt(1))
    common.add_argument("--d-sign", choices=["+", "-"], dest="d_sign", default=dflt(None))
    common.add_argument(
        "--centre-map",
        choices=["quadratic", "flow"],
        default=dflt("quadratic"),
        dest="centre_map",
        help="centre map of T0: y -> mu2 + y + y^2, or the time-one map of dy/dt = mu2 + y^2",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    p = argparse.ArgumentParser(prog="tangle", description="Homoclinic tangency to a saddle-node: curves, return maps, rescaling.", parents=[_common(suppress=False)])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("kernels", cmd_kernels, "table of nu_k, theta_k, k* as CSV")
    sp.add_argument("--kmin", type=_positive_int, default=1)
    sp.add_argument("--kmax", type=_positive_int, default=20)
    sp.add_argument("--mu2", type=float, nargs="+", default=[0.0])

    sp = add("fixed-point", cmd_fixed_point, "fixed point of T_k as JSON")
    sp.add_argument("--k", type=_positive_int, required=True)
    sp.add_argument("--mu1", type=float, required=True)
    sp.add_argument("--mu2", type=float, required=True)
    sp.add_argument("--M", type=float, help="rescaled parameter used for the seed (default: from mu1)")

    sp = add("trace", cmd_trace, "trace one bifurcation curve as CSV")
    sp.add_argument("--curve", choices=["Lplus", "Lh", "Lk+", "Lk-"], required=True)
    sp.add_argument("--k", type=_positive_int)
    sp.add_argument("--n-mu2", type=_positive_int, default=21, dest="n_mu2")
    sp.add_argument("--mu2-range", type=float, nargs=2, dest="mu2_range")

    sp = add("diagram", cmd_diagram, "all curves as CSV plus an SVG drawing")
    sp.add_argument("--kmin", type=_positive_int, default=10)
    sp.add_argument("--kmax", type=_positive_int, default=40)
    sp.add_argument("--n-mu2", type=_positive_int, default=21, dest="n_mu2")
    sp.add_argument("--mu1-range", type=float, nargs=2, dest="mu1_range")
    sp.add_argument("--mu2-range", type=float, nargs=2, dest="mu2_range")

    sp = add("rescale", cmd_rescale, "rescaling frame and residual as JSON")
    sp.add_argument("--k", type=_positive_int, required=True)
    sp.add_argument("--mu2", type=float, default=0.0)
    sp.add_argument("--M", type=float)

    sp = add("rescale-sweep", cmd_rescale_sweep, "rescaling residual r_k over k as CSV")
    sp.add_argument("--kmin", type=_positive_int, default=20)
    sp.add_argument("--kmax", type=_positive_int, default=60)
    sp.add_argument("--mu2", type=float, default=0.0)

    sp = add("sweep", cmd_sweep, "per-cell fixed-point outcomes over a grid as CSV")
    sp.add_argument("--kmin", type=_positive_int, default=10)
    sp.add_argument("--kmax", type=_positive_int, default=60)
    sp.add_argument("--n-mu1", type=_positive_int, default=100, dest="n_mu1")
    sp.add_argument("--n-mu2", type=_positive_int, default=100, dest="n_mu2")
    sp.add_argument("--mu1-range", type=float, nargs=2, dest="mu1_range")
    sp.add_argument("--mu2-range", type=float, nargs=2, dest="mu2_range")

    sp = add("classify", cmd_classify, "domain I/II/III of a parameter point as JSON")
    sp.add_argument("--mu1", type=float, required=True)
    sp.add_argument("--mu2", type=float, required=True)
    return p


def _fail(code: int, doc: dict) -> int:
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
    return code


# argparse only recognises plain decimals as negative numbers, not "-1e-4"
_NEG_SCI = re.compile(r"^-(\d+\.?\d*|\.\d+)[eE][-+]?\d+$")


def _normalise_negatives(argv: list[str]) -> list[str]:
    return [np.format_float_positional(float(a), trim="-") if _NEG_SCI.match(a) else a for a in argv]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_normalise_negatives(list(sys.argv[1:] if argv is None else argv)))
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(EXIT_INVALID, exc.to_dict())
    except TangleError as exc:
        return _fail(EXIT_NUMERIC, exc.to_dict())
    except (ValueError, OSError) as exc:
        return _fail(EXIT_INVALID, {"error": "InvalidInput", "message": str(exc)})


if __name__ == "__main__":
    sys.exit(main())

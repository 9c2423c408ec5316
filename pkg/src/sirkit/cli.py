"""Command line entry point: ``sirkit synthesize|simulate|tune|budget|compare``.

Exit codes: 0 success, 1 validation/input error, 2 numerical or solver
failure (including a tune run that exhausts its budget), 3 comparison
threshold exceeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

from .config import ConfigError, ProjectConfig, load_config
from .errors import DomainError, LayoutError, ParseError, RangeError, SolverError
from .filter_design import FilterPlan, frequency_response, midband_il_estimate
from .network import BandSpec, FrequencyGrid, magnitude_db, max_unitarity_error, passband_metrics
from .noise_radar import CascadeStage, cascade_nf, cascade_nf_sweep, radar_max_range, range_improvement
from .sir import design_sir, fold_layout
from .touchstone import TouchstoneOptions, compare, parse_touchstone, write_nf_csv, write_touchstone
from .tuning import TuneResult, apply_design, coupling_to_gap, default_grid, design_vector, tune

log = logging.getLogger("sirkit")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_THRESHOLD = 0, 1, 2, 3


def write_atomic(path: Path, data) -> Path:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _out_dir(args, cfg: ProjectConfig = None) -> Path:
    if args.out:
        return Path(args.out)
    if cfg is not None and "out_dir" in cfg.paths:
        return Path(cfg.paths["out_dir"])
    return Path("out")


def _load_plan(args, cfg: ProjectConfig) -> FilterPlan:
    if getattr(args, "plan", None):
        try:
            return FilterPlan.from_dict(json.loads(Path(args.plan).read_text()))
        except (OSError, KeyError, ValueError, TypeError) as err:
            raise ConfigError(f"{args.plan}: cannot read plan: {err}") from None
    return cfg.plan()


def _grid(args) -> FrequencyGrid:
    try:
        return FrequencyGrid.from_step(args.grid_start, args.grid_stop, args.grid_step)
    except ValueError as err:
        raise ConfigError(f"grid: {err}") from None


def _ideal_gaps(plan: FilterPlan, cfg: ProjectConfig):
    if cfg.coupling_model is None:
        raise ConfigError("coupling_model: required for gap layout and tuning")
    model = cfg.coupling_model.to_model()
    return model, [coupling_to_gap(k, model) for k in plan.k_adj]


# -- commands -----------------------------------------------------------------


def cmd_synthesize(args) -> int:
    cfg = load_config(args.config)
    plan = cfg.plan()
    out = _out_dir(args, cfg)
    sub = cfg.substrate_spec()
    s = cfg.sir
    fold = s.fold.to_spec()
    geom = design_sir(plan.f0, s.k_ratio, s.w_low_m, s.w_high_m, sub, s.split, fold)
    geometry = {"substrate": cfg.substrate, "resonator": geom.to_dict()}
    footprint = None
    if cfg.coupling_model is not None and plan.n >= 1:
        model, gaps = _ideal_gaps(plan, cfg)
        footprint = fold_layout(geom, fold, plan.n, gaps, s.feed_pad_m)
        geometry["coupling_model"] = model.to_dict()
        geometry["gaps_m"] = gaps
        geometry["footprint"] = {"length_m": footprint.length, "width_m": footprint.width}
        ref = cfg.reference
        if "footprint_length_m" in ref and "footprint_width_m" in ref:
            geometry["footprint_reference"] = {
                "length_m": ref["footprint_length_m"], "width_m": ref["footprint_width_m"],
            }
    write_atomic(out / "plan.json", _json(plan.to_dict()))
    write_atomic(out / "geometry.json", _json(geometry))

    print(f"plan: n={plan.n} f0={plan.f0 / 1e9:.6g} GHz fbw={plan.fbw:.6g} ripple={plan.proto.ripple_db:g} dB "
          f"qu={'inf' if math.isinf(plan.qu) else f'{plan.qu:g}'}")
    print("k: " + ", ".join(f"{k:.5f}" for k in plan.k_adj) if plan.k_adj else "k: (none)")
    print(f"qe_in={plan.qe_in:.5g} qe_out={plan.qe_out:.5g}")
    print(f"resonator: z_low={geom.z_low:.2f} ohm len_low={geom.len_low * 1e3:.3f} mm, "
          f"z_high={geom.z_high:.2f} ohm len_high={geom.len_high * 1e3:.3f} mm (half), K={geom.k_ratio:.4f}")
    if footprint is not None:
        line = f"footprint: {footprint.length * 1e3:.2f} mm x {footprint.width * 1e3:.2f} mm"
        if "footprint_reference" in geometry:
            r = geometry["footprint_reference"]
            line += f" (reference device {r['length_m'] * 1e3:.1f} mm x {r['width_m'] * 1e3:.1f} mm)"
        print(line)
    print(f"wrote {out / 'plan.json'} and {out / 'geometry.json'}")
    return EXIT_OK


def simulation_metrics(plan: FilterPlan, sweep, band: BandSpec, threshold_db: float, reference=None) -> dict:
    m = passband_metrics(sweep, band, threshold_db)
    center = magnitude_db(frequency_response(plan, FrequencyGrid([plan.f0])).s21[0])
    out = {
        "metrics": m.to_dict(),
        "center_il_db": center,
        "midband_il_estimate_db": -midband_il_estimate(plan.proto, plan.fbw, plan.qu),
        "unitarity_error": max_unitarity_error(sweep),
        "qu": None if math.isinf(plan.qu) else plan.qu,
        "band": {"f_lo_hz": band.f_lo, "f_hi_hz": band.f_hi, "stop_lo_hz": band.stop_lo, "stop_hi_hz": band.stop_hi},
    }
    if reference:
        out["reference"] = dict(reference)
    return out


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    plan = _load_plan(args, cfg)
    if args.lossless:
        plan = plan.with_qu(math.inf)
    elif args.loss_preset:
        plan = plan.with_qu(cfg.preset_qu(args.loss_preset))
    elif args.qu is not None:
        plan = plan.with_qu(args.qu)
    grid = _grid(args)
    sweep = frequency_response(plan, grid)
    band = cfg.band()
    report = simulation_metrics(plan, sweep, band, args.rejection_threshold_db, cfg.reference)
    out = _out_dir(args, cfg)
    opts = TouchstoneOptions(freq_unit="GHZ", format=args.format)
    write_atomic(out / "response.s2p", write_touchstone(sweep, opts, comments=[f"sirkit model, qu={report['qu']}"]))
    write_atomic(out / "metrics.json", _json(report))

    m = report["metrics"]
    ref = cfg.reference
    print(f"in-band IL: best {m['il_best_db']:.4f} dB, worst {m['il_worst_db']:.4f} dB, "
          f"centre {report['center_il_db']:.4f} dB (estimate {report['midband_il_estimate_db']:.4f} dB)")
    print(f"in-band RL worst: {m['rl_worst_db']:.3f} dB")
    if m["rejection_floor_db"] is not None:
        print(f"stopband floor: {m['rejection_floor_db']:.2f} dB")
    for side in ("lower", "upper"):
        v, e = m[f"rolloff_{side}_hz"], m[f"rolloff_{side}_from_edge_hz"]
        text = "n/a" if v is None else f"{v / 1e6:.1f} MHz (-3 dB point), {e / 1e6:.1f} MHz (band edge)"
        print(f"roll-off {side} to {args.rejection_threshold_db:g} dB: {text}")
    if "rolloff_hz" in ref:
        print(f"reference device roll-off: {ref['rolloff_hz'] / 1e6:.0f} MHz per side")
    print(f"unitarity error: {report['unitarity_error']:.3e}")
    print(f"wrote {out / 'response.s2p'} and {out / 'metrics.json'}")
    return EXIT_OK


def _with_room_temperature(stages):
    return [CascadeStage.passive(s.loss_db, 290.0, s.name) if s.kind == "passive" else s for s in stages]


def cmd_budget(args) -> int:
    cfg = load_config(args.config)
    if cfg.cascade is None:
        raise ConfigError("cascade: section required for budget")
    c = cfg.cascade
    filt = CascadeStage.passive(c.filter_loss_db, c.filter_t_phys_k, "filter")
    down = [s.to_stage() for s in c.downstream]
    front = [s.to_stage() for s in c.front]
    base = [filt] + down
    result = {
        "cascade_nf_db": cascade_nf(base).nf_db,
        "cascade_nf_290k_db": cascade_nf(_with_room_temperature(base)).nf_db,
        "cascade_te_k": cascade_nf(base).te,
    }
    if front:
        result["with_front_nf_db"] = cascade_nf(front + base).nf_db
    print(f"cascade NF ({c.filter_t_phys_k:g} K filter): {result['cascade_nf_db']:.4f} dB "
          f"(Te {result['cascade_te_k']:.2f} K)")
    print(f"cascade NF (all passives at 290 K): {result['cascade_nf_290k_db']:.4f} dB")
    if front:
        print(f"cascade NF with front-end losses: {result['with_front_nf_db']:.4f} dB")
    if "predicted_nf_db" in cfg.reference:
        print(f"reference prediction: {cfg.reference['predicted_nf_db']:g} dB")

    plan = _load_plan(args, cfg)
    sweep = frequency_response(plan, _grid(args))
    points = cascade_nf_sweep(sweep, c.filter_t_phys_k, down)
    band = cfg.band()
    inband = [nf for f, nf in points if band.f_lo <= f <= band.f_hi]
    result["sweep_inband_max_nf_db"] = max(inband) if inband else None
    result["sweep_inband_min_nf_db"] = min(inband) if inband else None
    out = _out_dir(args, cfg)
    write_atomic(out / "nf_sweep.csv", write_nf_csv(points))
    if inband:
        print(f"swept in-band NF: {min(inband):.4f}-{max(inband):.4f} dB")

    if cfg.radar is not None:
        r = cfg.radar
        conv = r.conventional_nf_db
        candidates = {"model": result["cascade_nf_db"]}
        if front:
            candidates["model_with_front"] = result["with_front_nf_db"]
        for v in r.measured_nf_db:
            candidates[f"measured_{v:g}dB"] = v
        result["radar"] = {
            "conventional_nf_db": conv,
            "range_conventional_m": radar_max_range(r.params(conv)),
            "cases": {
                name: {"nf_db": nf, "range_m": radar_max_range(r.params(nf)), "improvement": range_improvement(conv, nf)}
                for name, nf in candidates.items()
            },
        }
        print(f"radar range at {conv:g} dB NF: {result['radar']['range_conventional_m'] / 1e3:.3f} km")
        for name, case in result["radar"]["cases"].items():
            print(f"  {name}: NF {case['nf_db']:.4f} dB -> range {case['range_m'] / 1e3:.3f} km, "
                  f"improvement x{case['improvement']:.4f} ({(case['improvement'] - 1) * 100:+.1f}%)")
    write_atomic(out / "budget.json", _json(result))
    print(f"wrote {out / 'nf_sweep.csv'} and {out / 'budget.json'}")
    return EXIT_OK


def _band_from_args(args) -> BandSpec:
    cfg = load_config(args.config) if args.config else None
    lo = args.band_lo if args.band_lo is not None else (cfg.filter.f_lo_hz if cfg else None)
    hi = args.band_hi if args.band_hi is not None else (cfg.filter.f_hi_hz if cfg else None)
    if lo is None or hi is None:
        raise ConfigError("band: give --band-lo/--band-hi or --config")
    offset = cfg.filter.stop_offset_hz if cfg else 300e6
    stop_lo = args.stop_lo if args.stop_lo is not None else lo - offset
    stop_hi = args.stop_hi if args.stop_hi is not None else hi + offset
    try:
        return BandSpec(lo, hi, stop_lo, stop_hi)
    except ValueError as err:
        raise ConfigError(f"band: {err}") from None


def _read_touchstone(path):
    try:
        data = Path(path).read_bytes()
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror}") from None
    return parse_touchstone(data, source=str(path))[0]


def cmd_compare(args) -> int:
    band = _band_from_args(args)
    model = _read_touchstone(args.model)
    measured = _read_touchstone(args.measured)
    try:
        report = compare(model, measured, band, args.threshold_db, args.rejection_threshold_db)
    except RangeError as err:
        raise RangeError(f"{args.model} vs {args.measured}: {err}") from None
    out = Path(args.out) if args.out else Path("out")
    write_atomic(out / "comparison.json", _json(report.to_dict()))
    text = report.to_text()
    write_atomic(out / "comparison.txt", text)
    print(text, end="")
    return EXIT_OK if report.within_threshold else EXIT_THRESHOLD


def tune_initial(cfg: ProjectConfig, plan: FilterPlan):
    model, gaps = _ideal_gaps(plan, cfg)
    if cfg.tune.initial_gaps_m is not None:
        if len(cfg.tune.initial_gaps_m) != plan.n - 1:
            raise ConfigError(f"tune.initial_gaps_m: expected {plan.n - 1} gaps")
        start = list(cfg.tune.initial_gaps_m)
    else:
        start = [g * (1 + cfg.tune.perturbation) for g in gaps]
    return model, design_vector(start)


def cmd_tune(args) -> int:
    cfg = load_config(args.config)
    plan = _load_plan(args, cfg)
    model, x0 = tune_initial(cfg, plan)
    spec = cfg.tune_spec()
    grid = default_grid(spec.band, cfg.tune.points_in_band)
    budget = args.budget if args.budget is not None else cfg.tune.budget
    result = tune(x0, spec, model, plan, budget, grid)

    def metrics(x):
        return passband_metrics(frequency_response(apply_design(x, model, plan), grid), spec.band,
                                spec.rejection_threshold_db).to_dict()

    n = plan.n
    doc = {
        "converged": result.converged,
        "residual": result.residual,
        "iterations": result.iterations,
        "evaluations": result.evaluations,
        "gaps_m": list(result.variables[: n - 1]),
        "f_offsets_hz": list(result.variables[n - 1 :]),
        "couplings": list(result.couplings(model, n)),
        "ideal_couplings": list(plan.k_adj),
        "initial": list(x0),
        "before": metrics(x0),
        "after": metrics(result.variables),
    }
    out = _out_dir(args, cfg)
    write_atomic(out / "tune.json", _json(doc))
    trace = "iteration,best_residual\n" + "".join(f"{i + 1},{v!r}\n" for i, v in enumerate(result.trace))
    write_atomic(out / "tune_trace.csv", trace)
    status = "converged" if result.converged else "budget exhausted"
    print(f"tune: {status} after {result.iterations} iterations ({result.evaluations} evaluations), "
          f"residual {result.residual:.3e}")
    print("couplings: " + ", ".join(f"{k:.5f}" for k in doc["couplings"]))
    print(f"wrote {out / 'tune.json'} and {out / 'tune_trace.csv'}")
    return EXIT_OK if result.converged else EXIT_NUMERIC


# -- argument parsing -----------------------------------------------------------


def _add_grid(p):
    p.add_argument("--grid-start", type=float, default=2.8e9, help="Hz (default 2.8e9)")
    p.add_argument("--grid-stop", type=float, default=3.8e9, help="Hz (default 3.8e9)")
    p.add_argument("--grid-step", type=float, default=1e6, help="Hz (default 1e6)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sirkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="config path, name in $SIRKIT_CONFIG_DIR, or bundled name (e.g. paper-sband)")
        p.add_argument("--out", help="output directory (default: paths.out_dir or ./out)")

    p = sub.add_parser("synthesize", help="prototype, couplings, SIR geometry and footprint")
    common(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="coupling-matrix response, .s2p and metrics")
    common(p)
    p.add_argument("--plan", help="plan.json from synthesize (default: derive from config)")
    _add_grid(p)
    p.add_argument("--rejection-threshold-db", type=float, default=-60.0)
    p.add_argument("--format", choices=["RI", "MA", "DB"], default="MA")
    loss = p.add_mutually_exclusive_group()
    loss.add_argument("--lossless", action="store_true", help="qu = infinity")
    loss.add_argument("--loss-preset", help="substrate profile to derive qu from")
    loss.add_argument("--qu", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tune", help="Nelder-Mead tuning of gaps and resonator offsets")
    common(p)
    p.add_argument("--plan")
    p.add_argument("--budget", type=int)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("budget", help="cascade noise figure, NF sweep and radar range")
    common(p)
    p.add_argument("--plan")
    _add_grid(p)
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("compare", help="compare a model .s2p against a measured .s2p")
    common(p, config_required=False)
    p.add_argument("model")
    p.add_argument("measured")
    p.add_argument("--band-lo", type=float)
    p.add_argument("--band-hi", type=float)
    p.add_argument("--stop-lo", type=float)
    p.add_argument("--stop-hi", type=float)
    p.add_argument("--threshold-db", type=float, default=0.1)
    p.add_argument("--rejection-threshold-db", type=float, default=-60.0)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, DomainError, LayoutError, RangeError, ArithmeticError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

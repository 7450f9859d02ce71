"""Headless batch access to every library operation.

One verb per operation, no prompts; results go to stdout or ``--out``.
Exit codes: 0 success, 2 input/validation problem, 1 runtime failure.
``--json`` switches to machine-readable output matching the service payload
field names. A ``claritk.toml``-style key-value config file can pre-set any
long flag (flags win).
"""

from __future__ import annotations

import argparse
import json
import pathlib
import sys

from . import asm1, clarifier, mixer, rheology, settling, timeseries
from .errors import ClaritkError


def _read(path):
    p = pathlib.Path(path)
    if not p.exists():
        raise ClaritkError(f"input file not found: {p}")
    return p.read_bytes()


def _emit(args, text=None, payload=None):
    out = json.dumps(payload, indent=2) + "\n" if args.json else text
    if getattr(args, "out", None):
        pathlib.Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


def _load_config(path):
    values = {}
    for raw in pathlib.Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip().strip('"')
    return values


def _apply_config(args, parser):
    if not getattr(args, "config", None):
        return args
    overrides = _load_config(args.config)
    for key, val in overrides.items():
        if hasattr(args, key) and parser.get_default(key) == getattr(args, key):
            default = parser.get_default(key)
            cast = type(default) if default is not None else str
            setattr(args, key, cast(val) if cast is not bool else val == "true")
    return args


def _settling_model(path):
    return settling.model_from_text(_read(path).decode())


def _geometry(path):
    return clarifier.geometry_from_text(_read(path).decode())


def _operating_point(args):
    return clarifier.OperatingPoint(args.qi, args.qr, args.xf)


# --- subcommand handlers ------------------------------------------------------


def cmd_filter(args, parser):
    ts = timeseries.parse_timeseries_csv(
        _read(args.infile), time_column=args.time_column,
        value_column=args.value_column)
    if args.filter == "outliers":
        cfg = timeseries.FilterConfig(args.window_n,
                                      timeseries.FilterMode.OUTLIER_REMOVAL,
                                      args.z_threshold)
        ts = timeseries.remove_outliers(ts, cfg)
    else:
        cfg = timeseries.FilterConfig(args.window_n,
                                      timeseries.FilterMode.MOVING_AVERAGE)
        ts = timeseries.moving_average(ts, cfg)
    if args.resample_dt:
        ts = timeseries.resample(ts, args.resample_dt)
    if args.json:
        _emit(args, payload={"name": ts.name, "unit": ts.unit,
                             "times": list(ts.times), "values": list(ts.values)})
    else:
        _emit(args, text=timeseries.export_csv(ts).decode())


def cmd_fit_settling(args, parser):
    if args.points:
        rows = [l.split(",") for l in _read(args.points).decode().splitlines()
                if l.strip() and not l.startswith("#")][1:]
        points = [settling.VelocityPoint(float(x), float(v)) for x, v in rows]
    else:
        points = []
        for path in args.tests:
            test = settling.batch_test_from_csv(_read(path))
            points.append(settling.fit_linear_region(test))
    if args.kind == "vesilind":
        model = settling.fit_vesilind(points)
    else:
        model = settling.fit_takacs(points)
    if args.json:
        _emit(args, payload={"kind": model.kind.value, "V0": model.V0,
                             "r_h": model.r_h, "r_p": model.r_p,
                             "residual": model.residual,
                             "converged": model.converged})
    else:
        _emit(args, text=settling.model_to_text(model))


def cmd_fit_rheology(args, parser):
    if args.kind == "newtonian":
        if args.temperature is None:
            raise ClaritkError("newtonian fit needs --temperature")
        model = rheology.newtonian_defaults(args.temperature)
    else:
        data = rheology.rheogram_from_csv(_read(args.data))
        model = rheology.fit_rheology(rheology.RheologyKind(args.kind), data)
    if args.json:
        _emit(args, payload={"kind": model.kind.value, "mu": model.mu,
                             "tau_y": model.tau_y, "mu_p": model.mu_p,
                             "K": model.K, "n": model.n,
                             "residual": model.residual,
                             "converged": model.converged,
                             "tau_y_clamped": model.tau_y_clamped})
    else:
        _emit(args, text=rheology.export_transport_properties(model))


def cmd_check_design(args, parser):
    geom = _geometry(args.geom)
    op = _operating_point(args)
    if args.rules:
        rules = clarifier.load_rules(_read(args.rules).decode())
    else:
        import importlib.resources
        rules = clarifier.load_rules(
            importlib.resources.files("claritk.data")
            .joinpath("design_rules_default.csv").read_text())
    report = clarifier.check_design(geom, op, rules)
    if args.json:
        _emit(args, payload={
            "passed": report.passed,
            "entries": [vars(e) for e in report.entries]})
    else:
        lines = []
        for e in report.entries:
            bounds = f"[{e.low if e.low is not None else ''}, " \
                     f"{e.high if e.high is not None else ''}] {e.unit}"
            mark = "ok  " if e.passed else "WARN"
            lines.append(f"{mark} {e.rule_id:<18} {e.quantity:<15} "
                         f"{e.computed:.4g} {e.unit} vs {bounds}  ({e.reference})")
        lines.append(f"overall: {'pass' if report.passed else 'warn'}")
        _emit(args, text="\n".join(lines) + "\n")


def _state_point_payload(result):
    return {
        "state_point": {"X": result.state_point[0], "flux": result.state_point[1]},
        "overflow_slope": result.overflow_slope,
        "underflow_slope": result.underflow_slope,
        "X_u": result.X_u,
        "classification": result.classification.value,
        "limiting_flux": result.limiting_flux,
        "applied_flux": result.applied_flux,
    }


def cmd_state_point(args, parser):
    result = clarifier.state_point(_settling_model(args.model),
                                   _geometry(args.geom), _operating_point(args))
    if args.json:
        _emit(args, payload=_state_point_payload(result))
    else:
        _emit(args, text=(
            f"state point: X={result.state_point[0]!r} kg/m3, "
            f"flux={result.state_point[1]!r} kg/(m2.s)\n"
            f"X_u = {result.X_u!r} kg/m3\n"
            f"classification: {result.classification.value}\n"))


def cmd_critical_recycle(args, parser):
    q_crit, bracket = clarifier.critical_recycle(
        _settling_model(args.model), _geometry(args.geom),
        _operating_point(args))
    if args.json:
        _emit(args, payload={"q_r_crit": q_crit,
                             "bracket": list(bracket)})
    else:
        _emit(args, text=f"Q_r_crit = {q_crit!r} m3/s\n")


def cmd_tenlayer(args, parser):
    model = _settling_model(args.model)
    geom = _geometry(args.geom)
    op = _operating_point(args)
    init = clarifier.initial_state(geom, args.blanket_height,
                                   args.blanket_concentration,
                                   args.feed_layer)
    inflow = None
    if args.inflow:
        inflow = timeseries.parse_timeseries_csv(
            _read(args.inflow), time_column=args.time_column,
            value_column=args.value_column)
    traj = clarifier.ten_layer_simulate(
        init, model, geom, op, args.duration, args.dt,
        save_interval=args.save_interval, inflow=inflow,
        x_threshold=args.x_threshold)
    csv_bytes = clarifier.export_trajectory_csv(traj, geom, args.sbh_threshold)
    if args.json:
        _emit(args, payload={"times": list(traj.times),
                             "states": [list(r) for r in traj.states],
                             "steady": traj.steady})
    else:
        _emit(args, text=csv_bytes.decode())


def _asm1_state(path):
    kv = {}
    for raw in _read(path).decode().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            key, _, val = line.partition("=")
            kv[key.strip()] = float(val.strip())
    return asm1.Asm1State(**kv)


def cmd_asm1_cstr(args, parser):
    p = asm1.load_params(args.params) if args.params else asm1.load_params()
    traj = asm1.cstr_simulate(p, _asm1_state(args.inflow_state), args.q,
                              args.v, _asm1_state(args.init_state),
                              args.duration, args.dt,
                              save_interval=args.save_interval)
    if args.json:
        _emit(args, payload={"times": list(traj.times),
                             "states": [list(r) for r in traj.states],
                             "clamp_events": traj.clamp_events,
                             "steady": traj.steady})
    else:
        _emit(args, text=asm1.export_trajectory_csv(traj).decode())


def cmd_asm1_tanks(args, parser):
    p = asm1.load_params(args.params) if args.params else asm1.load_params()
    vols = [float(v) for v in args.volumes.split(",")]
    init = [_asm1_state(args.init_state)] * args.n_tanks
    traj = asm1.tanks_in_series_simulate(
        p, args.n_tanks, vols, args.q, args.recycle,
        _asm1_state(args.inflow_state), init, args.duration, args.dt,
        save_interval=args.save_interval)
    if args.json:
        _emit(args, payload={"times": list(traj.times),
                             "states": [[list(r) for r in tank] for tank in traj.states],
                             "clamp_events": traj.clamp_events})
    else:
        _emit(args, text=asm1.export_trajectory_csv(traj, tank=args.n_tanks - 1).decode())


def cmd_mixer_source(args, parser):
    mixers = [mixer.mixer_from_text(_read(path).decode())
              for path in args.mixers]
    text = mixer.export_source_dictionary(mixers)
    if args.json:
        payload = []
        for spec, region in mixers:
            src = mixer.momentum_source_vector(spec, region)
            payload.append({"id": spec.id, "q": src.q, "M_p": src.M_p,
                            "V_M": src.V_M, "S_m": list(src.S_m)})
        _emit(args, payload=payload)
    else:
        _emit(args, text=text)


def cmd_mixer_tag(args, parser):
    spec, region = mixer.mixer_from_text(_read(args.mixer).decode())
    origin = tuple(float(c) for c in args.grid_origin.split(","))
    counts = tuple(int(c) for c in args.grid_counts.split(","))
    grid = mixer.StructuredGrid(origin, args.grid_h, counts)
    idx, volume = mixer.tag_cells(region, grid)
    if args.json:
        _emit(args, payload={"id": spec.id, "cells": idx.tolist(),
                             "count": int(idx.shape[0]),
                             "volume_discrete": volume,
                             "volume_analytic": region.volume})
    else:
        lines = [f"# mixer {spec.id}: {idx.shape[0]} cells, "
                 f"V_disc={volume!r} m3, V_analytic={region.volume!r} m3",
                 "i,j,k"]
        lines += [f"{i},{j},{k}" for i, j, k in idx]
        _emit(args, text="\n".join(lines) + "\n")


def cmd_serve(args, parser):
    import uvicorn

    from .service import create_app

    app = create_app(pathlib.Path(args.data_dir), token=args.token,
                     workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


# --- parser -------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="claritk",
        description="Secondary-treatment toolkit: settling and rheology "
                    "calibration, clarifier screening, ASM1 reactors and "
                    "mixer momentum sources.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true",
                       help="machine-readable output")
        p.add_argument("--out", help="write the result to this file")
        p.add_argument("--config", help="key-value config file with defaults")

    p = sub.add_parser("filter", help="smooth a time series")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--filter", choices=["outliers", "movavg"], required=True)
    p.add_argument("--window-n", type=int, default=20)
    p.add_argument("--z-threshold", type=float, default=1.96)
    p.add_argument("--resample-dt", type=float, default=None)
    p.add_argument("--time-column", default="t")
    p.add_argument("--value-column", default="value")
    common(p)
    p.set_defaults(handler=cmd_filter)

    p = sub.add_parser("fit-settling", help="calibrate a settling model")
    p.add_argument("--tests", nargs="*", default=[],
                   help="batch-test CSV files (one per concentration)")
    p.add_argument("--points", help="CSV of X_kg_m3,Vs_m_s velocity points")
    p.add_argument("--kind", choices=["vesilind", "takacs"], default="vesilind")
    common(p)
    p.set_defaults(handler=cmd_fit_settling)

    p = sub.add_parser("fit-rheology", help="calibrate a viscosity model")
    p.add_argument("--data", help="rheogram CSV (gamma_dot_1_s, tau_Pa)")
    p.add_argument("--kind", required=True,
                   choices=["newtonian", "bingham", "powerlaw", "herschelbulkley"])
    p.add_argument("--temperature", type=float, default=None,
                   help="water temperature degC (newtonian)")
    common(p)
    p.set_defaults(handler=cmd_fit_rheology)

    def op_flags(p):
        p.add_argument("--qi", type=float, required=True, help="influent flow m3/s")
        p.add_argument("--qr", type=float, required=True, help="recycle flow m3/s")
        p.add_argument("--xf", type=float, required=True, help="feed TSS kg/m3")

    p = sub.add_parser("check-design", help="screen a geometry against rules")
    p.add_argument("--geom", required=True)
    p.add_argument("--rules", help="rules CSV (default: shipped rules)")
    op_flags(p)
    common(p)
    p.set_defaults(handler=cmd_check_design)

    p = sub.add_parser("state-point", help="state-point analysis")
    p.add_argument("--model", required=True)
    p.add_argument("--geom", required=True)
    op_flags(p)
    common(p)
    p.set_defaults(handler=cmd_state_point)

    p = sub.add_parser("critical-recycle", help="minimal non-overloaded Q_r")
    p.add_argument("--model", required=True)
    p.add_argument("--geom", required=True)
    op_flags(p)
    common(p)
    p.set_defaults(handler=cmd_critical_recycle)

    p = sub.add_parser("tenlayer", help="dynamic ten-layer simulation")
    p.add_argument("--model", required=True)
    p.add_argument("--geom", required=True)
    op_flags(p)
    p.add_argument("--duration", type=float, required=True, help="seconds")
    p.add_argument("--dt", type=float, required=True, help="seconds")
    p.add_argument("--save-interval", type=float, default=None)
    p.add_argument("--blanket-height", type=float, default=0.0)
    p.add_argument("--blanket-concentration", type=float, default=0.0)
    p.add_argument("--feed-layer", type=int, default=None)
    p.add_argument("--x-threshold", type=float, default=0.1,
                   help="flux-limiter threshold kg/m3")
    p.add_argument("--sbh-threshold", type=float, default=2.5,
                   help="blanket detection threshold kg/m3")
    p.add_argument("--inflow", help="transient Q_i series CSV (m3/s)")
    p.add_argument("--time-column", default="t")
    p.add_argument("--value-column", default="value")
    common(p)
    p.set_defaults(handler=cmd_tenlayer)

    p = sub.add_parser("asm1-cstr", help="single completely mixed reactor")
    p.add_argument("--params", default=None)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--inflow-state", required=True)
    p.add_argument("--init-state", required=True)
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--save-interval", type=float, default=None)
    common(p)
    p.set_defaults(handler=cmd_asm1_cstr)

    p = sub.add_parser("asm1-tanks", help="tanks-in-series chain")
    p.add_argument("--params", default=None)
    p.add_argument("--n-tanks", type=int, required=True)
    p.add_argument("--volumes", required=True, help="comma-separated m3")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--recycle", type=float, default=0.0)
    p.add_argument("--inflow-state", required=True)
    p.add_argument("--init-state", required=True)
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--save-interval", type=float, default=None)
    common(p)
    p.set_defaults(handler=cmd_asm1_tanks)

    p = sub.add_parser("mixer-source", help="momentum-source dictionary export")
    p.add_argument("--mixers", nargs="+", required=True,
                   help="mixer key-value files")
    common(p)
    p.set_defaults(handler=cmd_mixer_source)

    p = sub.add_parser("mixer-tag", help="tag grid cells inside a source region")
    p.add_argument("--mixer", required=True)
    p.add_argument("--grid-origin", required=True, help="x,y,z of low corner")
    p.add_argument("--grid-h", type=float, required=True, help="cell size m")
    p.add_argument("--grid-counts", required=True, help="nx,ny,nz")
    common(p)
    p.set_defaults(handler=cmd_mixer_tag)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir", default="./claritk-data")
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--token", default=None)
    p.add_argument("--config", help="key-value config file with defaults")
    p.set_defaults(handler=cmd_serve, json=False)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args, parser)
        args.handler(args, parser)
    except ClaritkError as exc:
        diagnostic = {"code": exc.code, "message": str(exc)}
        if getattr(args, "json", False):
            sys.stderr.write(json.dumps(diagnostic) + "\n")
        else:
            sys.stderr.write(f"error [{exc.code}]: {exc}\n")
        return exc.exit_code
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except Exception as exc:  # runtime faults
        sys.stderr.write(f"runtime error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

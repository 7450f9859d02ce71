"""HTTP facade over the library: projects, datasets, fits, 1D models,
background simulation jobs and dictionary exports.

Every endpoint delegates to exactly one library operation and serializes
its result verbatim; precondition failures map to 4xx with a structured
``{code, message, module_error}`` body.
"""

from __future__ import annotations

import importlib.resources
import json
import uuid
from pathlib import Path

import numpy as np
from fastapi import Depends, FastAPI, File, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse

from .. import asm1, clarifier, mixer, rheology, settling, timeseries
from ..errors import ClaritkError
from . import schemas
from .jobs import JobManager
from .store import NotFound, ProjectStore


class JobNotDone(Exception):
    pass


def _geometry(g: schemas.GeometryIn) -> clarifier.ClarifierGeometry:
    return clarifier.ClarifierGeometry(
        g.diameter, g.side_water_depth, g.feedwell_diameter,
        g.feedwell_depth, g.weir_length, g.n_tanks)


def _op(o: schemas.OperatingPointIn) -> clarifier.OperatingPoint:
    return clarifier.OperatingPoint(o.Q_i, o.Q_r, o.X_f)


def _mixer(m: schemas.MixerIn):
    spec = mixer.MixerSpec(m.id, m.D_b, m.F0, m.omega0, m.omega, m.rho)
    region = mixer.region_for(spec, m.center, m.vertical_incl_deg,
                              m.azimuth_deg, m.L)
    return spec, region


def _settling_model_payload(model, model_id=None):
    out = {"kind": model.kind.value, "V0": model.V0, "r_h": model.r_h,
           "r_p": model.r_p, "residual": model.residual,
           "converged": model.converged}
    if model_id:
        out["model_id"] = model_id
    return out


def _state_point_payload(result):
    return {
        "state_point": {"X": result.state_point[0],
                        "flux": result.state_point[1]},
        "overflow_slope": result.overflow_slope,
        "underflow_slope": result.underflow_slope,
        "X_u": result.X_u,
        "classification": result.classification.value,
        "limiting_flux": result.limiting_flux,
        "applied_flux": result.applied_flux,
    }


def create_app(data_dir: Path, token: str | None = None,
               workers: int = 2) -> FastAPI:
    store = ProjectStore(Path(data_dir))
    jobs = JobManager(store, workers=workers)
    app = FastAPI(title="claritk service", version="1")

    # --- auth and error envelopes ----------------------------------------

    async def check_token(request: Request):
        if token is None:
            return
        if request.headers.get("authorization") != f"Bearer {token}":
            raise ClaritkError("missing or invalid token")

    dep = [Depends(check_token)]

    @app.exception_handler(ClaritkError)
    async def claritk_error(request, exc: ClaritkError):
        status = 401 if "token" in str(exc) else 400
        return JSONResponse(status_code=status, content={
            "code": exc.code, "message": str(exc),
            "module_error": type(exc).__name__})

    @app.exception_handler(NotFound)
    async def not_found(request, exc: NotFound):
        return JSONResponse(status_code=404, content={
            "code": "not_found", "message": f"no such resource: {exc}",
            "module_error": "NotFound"})

    @app.exception_handler(JobNotDone)
    async def job_not_done(request, exc: JobNotDone):
        return JSONResponse(status_code=409, content={
            "code": "job_not_done", "message": str(exc),
            "module_error": "JobNotDone"})

    @app.exception_handler(RequestValidationError)
    async def validation_failed(request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={
            "code": "validation_failed", "message": str(exc.errors()[:3]),
            "module_error": "ValidationFailed"})

    @app.exception_handler(ValueError)
    async def value_error(request, exc: ValueError):
        return JSONResponse(status_code=400, content={
            "code": "invalid_value", "message": str(exc),
            "module_error": type(exc).__name__})

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "projects": len(store.list_projects())}

    # --- projects ---------------------------------------------------------

    @app.post("/v1/projects", dependencies=dep)
    def create_project(body: schemas.ProjectCreate):
        return store.create_project(body.name)

    @app.get("/v1/projects", dependencies=dep)
    def list_projects():
        return store.list_projects()

    @app.get("/v1/projects/{pid}", dependencies=dep)
    def get_project(pid: str):
        return store.load(pid)

    @app.patch("/v1/projects/{pid}", dependencies=dep)
    def rename_project(pid: str, body: schemas.ProjectRename):
        return store.mutate(pid, lambda d: {**d, "name": body.name})

    @app.delete("/v1/projects/{pid}", dependencies=dep)
    def delete_project(pid: str):
        store.delete_project(pid)
        return {"deleted": pid}

    # --- datasets ---------------------------------------------------------

    @app.post("/v1/projects/{pid}/datasets", dependencies=dep)
    def upload_dataset(pid: str, file: UploadFile = File(...),
                       kind: str = Form("timeseries"),
                       time_column: str = Form("t"),
                       value_column: str = Form("value")):
        data = file.file.read()
        did = uuid.uuid4().hex[:12]
        meta = {"id": did, "kind": kind, "filename": file.filename,
                "time_column": time_column, "value_column": value_column}
        if kind == "timeseries":
            ts = timeseries.parse_timeseries_csv(
                data, time_column=time_column, value_column=value_column)
            meta["n"] = len(ts)
        elif kind == "batch_test":
            test = settling.batch_test_from_csv(data)
            meta["n"] = test.times.size
            meta["concentration"] = test.concentration
        elif kind == "rheogram":
            meta["n"] = len(rheology.rheogram_from_csv(data))
        else:
            raise ClaritkError(f"unknown dataset kind {kind!r}")
        store.write_artifact(pid, f"dataset-{did}.csv", data)
        store.mutate(pid, lambda d: d["datasets"].update({did: meta}) or d)
        return meta

    def _dataset_bytes(pid, did):
        doc = store.load(pid)
        if did not in doc["datasets"]:
            raise NotFound(did)
        return doc["datasets"][did], store.read_artifact(pid, f"dataset-{did}.csv")

    def _dataset_timeseries(pid, did):
        meta, raw = _dataset_bytes(pid, did)
        return timeseries.parse_timeseries_csv(
            raw, time_column=meta.get("time_column", "t"),
            value_column=meta.get("value_column", "value"))

    @app.get("/v1/projects/{pid}/datasets/{did}", dependencies=dep)
    def get_dataset(pid: str, did: str):
        meta, raw = _dataset_bytes(pid, did)
        out = dict(meta)
        if meta["kind"] == "timeseries":
            ts = timeseries.parse_timeseries_csv(
                raw, time_column=meta.get("time_column", "t"),
                value_column=meta.get("value_column", "value"))
            out["times"] = ts.times.tolist()
            out["values"] = ts.values.tolist()
        elif meta["kind"] == "batch_test":
            test = settling.batch_test_from_csv(raw)
            out["times"] = test.times.tolist()
            out["heights"] = test.heights.tolist()
        else:
            rg = rheology.rheogram_from_csv(raw)
            out["gamma_dot"] = rg.gamma_dot.tolist()
            out["tau"] = rg.tau.tolist()
        return out

    @app.post("/v1/projects/{pid}/filter", dependencies=dep)
    def run_filter(pid: str, body: schemas.FilterRequest):
        ts = _dataset_timeseries(pid, body.dataset_id)
        if body.mode == "outliers":
            cfg = timeseries.FilterConfig(
                body.window_n, timeseries.FilterMode.OUTLIER_REMOVAL,
                body.z_threshold)
            ts = timeseries.remove_outliers(ts, cfg)
        else:
            cfg = timeseries.FilterConfig(
                body.window_n, timeseries.FilterMode.MOVING_AVERAGE)
            ts = timeseries.moving_average(ts, cfg)
        if body.resample_dt:
            ts = timeseries.resample(ts, body.resample_dt)
        out = {"times": ts.times.tolist(), "values": ts.values.tolist()}
        if body.store:
            did = uuid.uuid4().hex[:12]
            meta = {"id": did, "kind": "timeseries", "filename": "filtered.csv",
                    "time_column": "t", "value_column": "value", "n": len(ts)}
            store.write_artifact(pid, f"dataset-{did}.csv",
                                 timeseries.export_csv(ts))
            store.mutate(pid, lambda d: d["datasets"].update({did: meta}) or d)
            out["dataset_id"] = did
        return out

    # --- model calibration --------------------------------------------------

    @app.post("/v1/projects/{pid}/settling/fit", dependencies=dep)
    def settling_fit(pid: str, body: schemas.SettlingFitRequest):
        if body.points:
            points = [settling.VelocityPoint(p.X, p.Vs) for p in body.points]
            linear_fits = []
        elif body.dataset_ids:
            points, linear_fits = [], []
            for did in body.dataset_ids:
                meta, raw = _dataset_bytes(pid, did)
                test = settling.batch_test_from_csv(raw)
                pt = settling.fit_linear_region(test)
                points.append(pt)
                linear_fits.append({"dataset_id": did, "X": pt.X,
                                    "Vs": pt.Vs, "fit_r2": pt.fit_r2})
        else:
            raise ClaritkError("settling fit needs dataset_ids or points")
        if body.kind == "vesilind":
            model = settling.fit_vesilind(points)
        else:
            model = settling.fit_takacs(points)
        mid = uuid.uuid4().hex[:12]
        store.write_artifact(pid, f"model-{mid}.txt",
                             settling.model_to_text(model).encode())
        record = _settling_model_payload(model) | {"type": "settling"}
        store.mutate(pid, lambda d: d["models"].update({mid: record}) or d)
        return _settling_model_payload(model, mid) | {"linear_fits": linear_fits}

    def _stored_settling_model(pid, model_id):
        doc = store.load(pid)
        models = doc.get("models", {})
        if model_id is None:
            settling_ids = [k for k, v in models.items()
                            if v.get("type") == "settling"]
            if not settling_ids:
                raise ClaritkError("project has no calibrated settling model")
            model_id = settling_ids[-1]
        if model_id not in models:
            raise NotFound(model_id)
        return settling.model_from_text(
            store.read_artifact(pid, f"model-{model_id}.txt").decode())

    @app.post("/v1/projects/{pid}/rheology/fit", dependencies=dep)
    def rheology_fit(pid: str, body: schemas.RheologyFitRequest):
        if body.kind == "newtonian":
            if body.temperature_C is None:
                raise ClaritkError("newtonian model needs temperature_C")
            model = rheology.newtonian_defaults(body.temperature_C)
        else:
            if not body.dataset_id:
                raise ClaritkError("rheology fit needs dataset_id")
            _, raw = _dataset_bytes(pid, body.dataset_id)
            model = rheology.fit_rheology(rheology.RheologyKind(body.kind),
                                          rheology.rheogram_from_csv(raw))
        mid = uuid.uuid4().hex[:12]
        payload = {"model_id": mid, "kind": model.kind.value, "mu": model.mu,
                   "tau_y": model.tau_y, "mu_p": model.mu_p, "K": model.K,
                   "n": model.n, "residual": model.residual,
                   "converged": model.converged,
                   "tau_y_clamped": model.tau_y_clamped}
        store.write_artifact(pid, f"model-{mid}.txt",
                             rheology.export_transport_properties(model).encode())
        record = {k: v for k, v in payload.items() if k != "model_id"}
        record["type"] = "rheology"
        store.mutate(pid, lambda d: d["models"].update({mid: record}) or d)
        return payload

    # --- geometry, rules, state point --------------------------------------

    @app.put("/v1/projects/{pid}/geometry", dependencies=dep)
    def put_geometry(pid: str, body: schemas.GeometryIn):
        _geometry(body)  # validate
        store.mutate(pid, lambda d: {**d, "geometry": body.model_dump()})
        return body.model_dump()

    @app.put("/v1/projects/{pid}/operating-point", dependencies=dep)
    def put_operating_point(pid: str, body: schemas.OperatingPointIn):
        _op(body)  # validate
        store.mutate(pid, lambda d: {**d, "operating_point": body.model_dump()})
        return body.model_dump()

    def _resolved_geometry(pid, inline):
        if inline is not None:
            return _geometry(inline)
        doc = store.load(pid)
        if "geometry" not in doc:
            raise ClaritkError("project has no stored geometry")
        return _geometry(schemas.GeometryIn(**doc["geometry"]))

    @app.post("/v1/projects/{pid}/design/check", dependencies=dep)
    def design_check(pid: str, body: schemas.DesignCheckRequest):
        geom = _resolved_geometry(pid, body.geometry)
        op = _op(body.operating_point)
        if body.rules is not None:
            rules = [clarifier.DesignRule(r.id, clarifier.Quantity(r.quantity),
                                          r.low, r.high, r.unit, r.reference)
                     for r in body.rules]
        else:
            rules = clarifier.load_rules(
                importlib.resources.files("claritk.data")
                .joinpath("design_rules_default.csv").read_text())
        report = clarifier.check_design(geom, op, rules)
        return {"passed": report.passed,
                "entries": [vars(e) for e in report.entries]}

    @app.post("/v1/projects/{pid}/state-point", dependencies=dep)
    def state_point(pid: str, body: schemas.StatePointRequest):
        geom = _resolved_geometry(pid, body.geometry)
        model = _stored_settling_model(pid, body.model_id)
        op = _op(body.operating_point)
        result = clarifier.state_point(model, geom, op)
        x_max = max(result.X_u * 1.05, op.X_f * 1.2, 1e-6)
        xs = np.linspace(0.0, x_max, max(body.curve_points, 16))
        curve_g = settling.flux_curve(model, xs)
        return _state_point_payload(result) | {
            "curve": {"X": xs.tolist(), "G": curve_g.tolist()}}

    @app.post("/v1/projects/{pid}/critical-recycle", dependencies=dep)
    def critical_recycle(pid: str, body: schemas.CriticalRecycleRequest):
        geom = _resolved_geometry(pid, body.geometry)
        model = _stored_settling_model(pid, body.model_id)
        op = clarifier.OperatingPoint(body.Q_i, max(body.Q_i * 1e-3, 1e-9),
                                      body.X_f)
        q_crit, bracket = clarifier.critical_recycle(model, geom, op)
        return {"q_r_crit": q_crit, "bracket": list(bracket)}

    # --- mixers -------------------------------------------------------------

    @app.post("/v1/mixer/preview", dependencies=dep)
    def mixer_preview(body: schemas.MixerIn):
        spec, region = _mixer(body)
        src = mixer.momentum_source_vector(spec, region)
        return {"id": spec.id, "q": src.q, "M_p": src.M_p, "V_M": src.V_M,
                "S_m": list(src.S_m), "R": region.R, "L": region.L,
                "axis": list(region.axis)}

    @app.post("/v1/projects/{pid}/mixers", dependencies=dep)
    def put_mixers(pid: str, body: schemas.MixerListRequest):
        parsed = [_mixer(m) for m in body.mixers]
        mixer.export_source_dictionary(parsed)  # validates duplicate ids
        store.mutate(pid, lambda d: {
            **d, "mixers": [m.model_dump() for m in body.mixers]})
        return {"count": len(parsed)}

    @app.get("/v1/projects/{pid}/export/mixer-dictionary", dependencies=dep)
    def export_mixers(pid: str):
        doc = store.load(pid)
        if not doc.get("mixers"):
            raise ClaritkError("project has no mixers")
        parsed = [_mixer(schemas.MixerIn(**m)) for m in doc["mixers"]]
        return PlainTextResponse(mixer.export_source_dictionary(parsed))

    @app.post("/v1/projects/{pid}/export/asm1-transport", dependencies=dep)
    def export_transport(pid: str, body: schemas.TransportExportRequest):
        p = asm1.load_params()
        if body.params_overrides:
            p = asm1.override(p, **body.params_overrides)
        tc = asm1.TransportConfig(body.D_T, body.schmidt or {},
                                  body.nu_t_field, body.velocity_field)
        return PlainTextResponse(
            asm1.export_transport_config(p, tc, body.hydrodynamic_step))

    # --- jobs -----------------------------------------------------------------

    def _run_tenlayer(pid, body: schemas.TenLayerJobRequest):
        geom = _resolved_geometry(pid, body.geometry)
        model = _stored_settling_model(pid, body.model_id)
        op = _op(body.operating_point)
        init = clarifier.initial_state(geom, body.blanket_height,
                                       body.blanket_concentration,
                                       body.feed_layer)
        inflow = (None if body.inflow_dataset_id is None
                  else _dataset_timeseries(pid, body.inflow_dataset_id))

        def runner(job_id, progress):
            chunks = 20 if inflow is None else 1
            chunk = body.duration / chunks
            state = init
            times = [0.0]
            states = [init.X.tolist()]
            for c in range(chunks):
                traj = clarifier.ten_layer_simulate(
                    state, model, geom, op, chunk, body.dt,
                    save_interval=body.save_interval or body.duration / 100,
                    inflow=inflow, x_threshold=body.x_threshold)
                offset = times[-1]
                times.extend((offset + traj.times[1:]).tolist())
                states.extend([row.tolist() for row in traj.states[1:]])
                state = clarifier.TenLayerState(traj.states[-1],
                                                traj.layer_height,
                                                traj.feed_layer)
                progress((c + 1) / chunks)
            sbh = [clarifier.sludge_blanket_height(
                clarifier.TenLayerState(np.array(row), state.layer_height,
                                        state.feed_layer),
                geom, body.sbh_threshold) for row in states]
            result = {"kind": "tenlayer", "times": times, "states": states,
                      "sbh": sbh, "steady": traj.steady}
            name = f"result-{job_id}.json"
            store.write_artifact(pid, name, json.dumps(result).encode())
            traj_full = clarifier.TenLayerTrajectory(
                np.array(times), np.array(states), state.layer_height,
                state.feed_layer, traj.steady, traj.final_dxdt_max)
            store.write_artifact(
                pid, f"result-{job_id}.csv",
                clarifier.export_trajectory_csv(traj_full, geom,
                                                body.sbh_threshold))
            return name

        return runner

    def _run_asm1(pid, body: schemas.Asm1JobRequest):
        p = asm1.load_params()
        if body.params_overrides:
            p = asm1.override(p, **body.params_overrides)
        inflow = asm1.Asm1State(**body.inflow)
        init = asm1.Asm1State(**body.init)

        def runner(job_id, progress):
            if body.kind == "cstr":
                if body.v is None:
                    raise ClaritkError("cstr job needs v")
                traj = asm1.cstr_simulate(
                    p, inflow, body.q, body.v, init, body.duration, body.dt,
                    hold_so=body.hold_so, save_interval=body.save_interval)
                states = [row.tolist() for row in traj.states]
            else:
                if not body.volumes or not body.n_tanks:
                    raise ClaritkError("tanks job needs n_tanks and volumes")
                traj = asm1.tanks_in_series_simulate(
                    p, body.n_tanks, body.volumes, body.q, body.recycle,
                    inflow, [init] * body.n_tanks, body.duration, body.dt,
                    hold_so=body.hold_so, save_interval=body.save_interval)
                states = [[list(r) for r in tank] for tank in traj.states]
            progress(1.0)
            result = {"kind": body.kind, "times": traj.times.tolist(),
                      "states": states, "components": list(asm1.COMPONENTS),
                      "clamp_events": traj.clamp_events, "steady": traj.steady}
            name = f"result-{job_id}.json"
            store.write_artifact(pid, name, json.dumps(result).encode())
            return name

        return runner

    @app.post("/v1/projects/{pid}/jobs", dependencies=dep)
    def submit_job(pid: str, body: dict):
        kind = body.get("kind")
        if kind == "tenlayer":
            req = schemas.TenLayerJobRequest(**body)
            runner = _run_tenlayer(pid, req)
        elif kind in ("cstr", "tanks"):
            req = schemas.Asm1JobRequest(**body)
            runner = _run_asm1(pid, req)
        else:
            raise ClaritkError(f"unknown job kind {kind!r}")

        return jobs.submit(pid, kind, runner)

    @app.get("/v1/projects/{pid}/jobs/{jid}", dependencies=dep)
    def job_status(pid: str, jid: str):
        return jobs.get(pid, jid)

    @app.get("/v1/projects/{pid}/jobs/{jid}/result", dependencies=dep)
    def job_result(pid: str, jid: str, snapshots_from: int = 0):
        job = jobs.get(pid, jid)
        if job["status"] != "done":
            raise JobNotDone(f"job {jid} is {job['status']}")
        result = json.loads(store.read_artifact(pid, job["result"]))
        if snapshots_from:
            for key in ("times", "states", "sbh"):
                if key in result:
                    result[key] = result[key][snapshots_from:]
        return result

    @app.get("/v1/projects/{pid}/jobs/{jid}/result.csv", dependencies=dep)
    def job_result_csv(pid: str, jid: str):
        job = jobs.get(pid, jid)
        if job["status"] != "done":
            raise JobNotDone(f"job {jid} is {job['status']}")
        name = job["result"].replace(".json", ".csv")
        return PlainTextResponse(store.read_artifact(pid, name).decode())

    # --- static frontend (optional build) -----------------------------------

    import os
    dist = Path(os.environ.get("CLARITK_FRONTEND_DIST", "frontend/dist"))
    if dist.is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=dist, html=True), name="ui")

    return app

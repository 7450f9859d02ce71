import io
import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from claritk.service import create_app

GEOMETRY = {"diameter": 18.5, "side_water_depth": 5.0,
            "feedwell_diameter": 3.7, "feedwell_depth": 1.8,
            "weir_length": 55.0, "n_tanks": 1}


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "data")
    with TestClient(app) as c:
        yield c


def make_project(client, name="demo"):
    r = client.post("/v1/projects", json={"name": name})
    assert r.status_code == 200
    return r.json()["id"]


def upload_vesilind_tests(client, pid, v0=2.5e-3, r_h=0.45):
    ids = []
    for x in (2.0, 4.0, 6.0):
        vs = v0 * np.exp(-r_h * x)
        t = np.arange(0.0, 600.0, 30.0)
        h = 1.2 - vs * t
        body = (f"# X_kg_m3: {x}\ntime_s,height_m\n" +
                "\n".join(f"{float(ti)!r},{float(hi)!r}" for ti, hi in zip(t, h)))
        r = client.post(f"/v1/projects/{pid}/datasets",
                        files={"file": ("bt.csv", io.BytesIO(body.encode()),
                                        "text/csv")},
                        data={"kind": "batch_test"})
        assert r.status_code == 200
        ids.append(r.json()["id"])
    return ids


def wait_for(client, pid, jid, timeout=30.0):
    t0 = time.time()
    while time.time() - t0 < timeout:
        job = client.get(f"/v1/projects/{pid}/jobs/{jid}").json()
        if job["status"] in ("done", "failed"):
            return job
        time.sleep(0.05)
    raise TimeoutError


class TestProjects:
    def test_crud(self, client):
        pid = make_project(client, "alpha")
        assert client.get(f"/v1/projects/{pid}").json()["name"] == "alpha"
        client.patch(f"/v1/projects/{pid}", json={"name": "beta"})
        assert client.get(f"/v1/projects/{pid}").json()["name"] == "beta"
        assert len(client.get("/v1/projects").json()) == 1
        client.delete(f"/v1/projects/{pid}")
        assert client.get(f"/v1/projects/{pid}").status_code == 404

    def test_not_found_shape(self, client):
        r = client.get("/v1/projects/nope")
        assert r.status_code == 404
        body = r.json()
        assert body["code"] == "not_found" and "module_error" in body


class TestWorkflow:
    def test_upload_fit_statepoint_chain(self, client):
        """Full workflow: upload batch tests -> fit -> state point, chained
        by ids with no payload re-upload; numbers bit-identical to the
        library path."""
        pid = make_project(client)
        dataset_ids = upload_vesilind_tests(client, pid)

        r = client.post(f"/v1/projects/{pid}/settling/fit",
                        json={"kind": "vesilind", "dataset_ids": dataset_ids})
        assert r.status_code == 200
        fit = r.json()
        assert fit["V0"] == pytest.approx(2.5e-3, rel=1e-6)

        client.put(f"/v1/projects/{pid}/geometry", json=GEOMETRY)
        r = client.post(f"/v1/projects/{pid}/state-point", json={
            "operating_point": {"Q_i": 0.1, "Q_r": 0.05, "X_f": 3.0},
            "model_id": fit["model_id"]})
        assert r.status_code == 200
        payload = r.json()

        # bit-parity with the direct library call
        from claritk.clarifier import (ClarifierGeometry, OperatingPoint,
                                       state_point)
        from claritk.settling import SettlingKind, SettlingModel
        model = SettlingModel(SettlingKind.VESILIND, fit["V0"], fit["r_h"])
        lib = state_point(model, ClarifierGeometry(**{
            "diameter": 18.5, "side_water_depth": 5.0,
            "feedwell_diameter": 3.7, "feedwell_depth": 1.8,
            "weir_length": 55.0, "n_tanks": 1}),
            OperatingPoint(0.1, 0.05, 3.0))
        assert payload["X_u"] == lib.X_u
        assert payload["state_point"]["flux"] == lib.state_point[1]
        assert payload["limiting_flux"] == lib.limiting_flux
        assert payload["classification"] == lib.classification.value
        assert len(payload["curve"]["X"]) == 200

    def test_statepoint_zero_feed(self, client):
        pid = make_project(client)
        ids = upload_vesilind_tests(client, pid)
        fit = client.post(f"/v1/projects/{pid}/settling/fit",
                          json={"kind": "vesilind", "dataset_ids": ids}).json()
        client.put(f"/v1/projects/{pid}/geometry", json=GEOMETRY)
        r = client.post(f"/v1/projects/{pid}/state-point", json={
            "operating_point": {"Q_i": 0.1, "Q_r": 0.05, "X_f": 0.0}})
        assert r.status_code == 200
        assert r.json()["classification"] == "underloaded"

    def test_critical_recycle_parity(self, client):
        pid = make_project(client)
        ids = upload_vesilind_tests(client, pid)
        fit = client.post(f"/v1/projects/{pid}/settling/fit",
                          json={"kind": "vesilind", "dataset_ids": ids}).json()
        client.put(f"/v1/projects/{pid}/geometry", json=GEOMETRY)
        r = client.post(f"/v1/projects/{pid}/critical-recycle",
                        json={"Q_i": 0.1, "X_f": 3.5})
        assert r.status_code == 200
        from claritk.clarifier import (ClarifierGeometry, OperatingPoint,
                                       critical_recycle)
        from claritk.settling import SettlingKind, SettlingModel
        model = SettlingModel(SettlingKind.VESILIND, fit["V0"], fit["r_h"])
        lib, _ = critical_recycle(
            model, ClarifierGeometry(18.5, 5.0, 3.7, 1.8, 55.0, 1),
            OperatingPoint(0.1, 1e-4, 3.5))
        assert r.json()["q_r_crit"] == lib

    def test_filter_parity_and_store(self, client):
        pid = make_project(client)
        rng = np.random.default_rng(5)
        values = 5.0 + rng.normal(0, 0.1, 200)
        body = "t,value\n" + "\n".join(
            f"{60 * i},{float(v)!r}" for i, v in enumerate(values))
        did = client.post(
            f"/v1/projects/{pid}/datasets",
            files={"file": ("q.csv", io.BytesIO(body.encode()), "text/csv")},
            data={"kind": "timeseries"}).json()["id"]
        r = client.post(f"/v1/projects/{pid}/filter", json={
            "dataset_id": did, "mode": "outliers", "window_n": 20,
            "store": True})
        assert r.status_code == 200
        from claritk.kernels import remove_outliers
        want = remove_outliers(values, 20, 1.96)
        assert r.json()["values"] == list(want)
        new_id = r.json()["dataset_id"]
        fetched = client.get(f"/v1/projects/{pid}/datasets/{new_id}").json()
        assert fetched["values"] == list(want)

    def test_design_check_and_rheology(self, client):
        pid = make_project(client)
        client.put(f"/v1/projects/{pid}/geometry", json=GEOMETRY)
        r = client.post(f"/v1/projects/{pid}/design/check", json={
            "operating_point": {"Q_i": 0.1, "Q_r": 0.05, "X_f": 3.0}})
        assert r.status_code == 200
        assert len(r.json()["entries"]) >= 4

        g = np.linspace(1.0, 100.0, 12)
        tau = 1.5 + 0.02 * g
        body = "gamma_dot_1_s,tau_Pa\n" + "\n".join(
            f"{float(a)!r},{float(b)!r}" for a, b in zip(g, tau))
        did = client.post(
            f"/v1/projects/{pid}/datasets",
            files={"file": ("r.csv", io.BytesIO(body.encode()), "text/csv")},
            data={"kind": "rheogram"}).json()["id"]
        r = client.post(f"/v1/projects/{pid}/rheology/fit",
                        json={"kind": "bingham", "dataset_id": did})
        assert r.status_code == 200
        assert r.json()["tau_y"] == pytest.approx(1.5, rel=1e-9)

    def test_mixer_preview_parity(self, client):
        payload = {"id": "mx1", "center": [1.0, 2.0, 3.0],
                   "vertical_incl_deg": 15.0, "azimuth_deg": 30.0,
                   "D_b": 0.58, "F0": 935.0, "omega0": 49.0, "omega": 49.0,
                   "rho": 998.0}
        r = client.post("/v1/mixer/preview", json=payload)
        assert r.status_code == 200
        from claritk.mixer import (MixerSpec, momentum_source_vector,
                                   region_for)
        spec = MixerSpec("mx1", 0.58, 935.0, 49.0, 49.0, 998.0)
        src = momentum_source_vector(spec, region_for(spec, (1, 2, 3), 15.0, 30.0))
        assert r.json()["q"] == src.q
        assert r.json()["M_p"] == src.M_p
        assert r.json()["S_m"] == list(src.S_m)

    def test_mixer_dictionary_export(self, client, tmp_path):
        pid = make_project(client)
        payload = {"mixers": [{"id": "mx1", "center": [1.0, 2.0, 3.0],
                               "vertical_incl_deg": 15.0, "azimuth_deg": 30.0,
                               "D_b": 0.58, "F0": 935.0, "omega0": 49.0,
                               "omega": 49.0, "rho": 998.0}]}
        assert client.post(f"/v1/projects/{pid}/mixers",
                           json=payload).status_code == 200
        r = client.get(f"/v1/projects/{pid}/export/mixer-dictionary")
        assert r.status_code == 200
        import pathlib
        golden = (pathlib.Path(__file__).parent / "golden" /
                  "mixer_single.dict").read_text()
        assert r.text == golden

    def test_asm1_transport_export(self, client):
        pid = make_project(client)
        r = client.post(f"/v1/projects/{pid}/export/asm1-transport", json={})
        assert r.status_code == 200
        assert "hydrodynamicTimestep latest;" in r.text


class TestJobs:
    def _prepare(self, client):
        pid = make_project(client)
        ids = upload_vesilind_tests(client, pid)
        client.post(f"/v1/projects/{pid}/settling/fit",
                    json={"kind": "vesilind", "dataset_ids": ids})
        client.put(f"/v1/projects/{pid}/geometry", json=GEOMETRY)
        return pid

    def test_tenlayer_job_lifecycle(self, client):
        pid = self._prepare(client)
        r = client.post(f"/v1/projects/{pid}/jobs", json={
            "kind": "tenlayer",
            "operating_point": {"Q_i": 0.12, "Q_r": 0.06, "X_f": 3.2},
            "duration": 4 * 3600.0, "dt": 10.0, "save_interval": 600.0,
            "blanket_height": 1.0, "blanket_concentration": 2.0})
        assert r.status_code == 200
        jid = r.json()["id"]
        job = wait_for(client, pid, jid)
        assert job["status"] == "done", job.get("error")
        result = client.get(f"/v1/projects/{pid}/jobs/{jid}/result").json()
        assert len(result["times"]) == len(result["states"]) == len(result["sbh"])
        csv_text = client.get(f"/v1/projects/{pid}/jobs/{jid}/result.csv").text
        last_row = csv_text.strip().splitlines()[-1].split(",")
        assert [float(v) for v in last_row[1:11]] == result["states"][-1]

    def test_result_before_done_409(self, client):
        pid = self._prepare(client)
        r = client.post(f"/v1/projects/{pid}/jobs", json={
            "kind": "tenlayer",
            "operating_point": {"Q_i": 0.12, "Q_r": 0.06, "X_f": 3.2},
            "duration": 24 * 3600.0, "dt": 10.0})
        jid = r.json()["id"]
        codes = set()
        for _ in range(50):
            rr = client.get(f"/v1/projects/{pid}/jobs/{jid}/result")
            codes.add(rr.status_code)
            if rr.status_code == 200:
                break
            assert rr.status_code == 409
            assert rr.json()["code"] == "job_not_done"
            time.sleep(0.02)
        wait_for(client, pid, jid)

    def test_incremental_snapshots(self, client):
        pid = self._prepare(client)
        jid = client.post(f"/v1/projects/{pid}/jobs", json={
            "kind": "tenlayer",
            "operating_point": {"Q_i": 0.12, "Q_r": 0.06, "X_f": 3.2},
            "duration": 3600.0, "dt": 10.0, "save_interval": 600.0}).json()["id"]
        wait_for(client, pid, jid)
        full = client.get(f"/v1/projects/{pid}/jobs/{jid}/result").json()
        part = client.get(f"/v1/projects/{pid}/jobs/{jid}/result",
                          params={"snapshots_from": 3}).json()
        assert part["times"] == full["times"][3:]
        assert part["states"] == full["states"][3:]

    def test_cstr_job(self, client):
        pid = make_project(client)
        jid = client.post(f"/v1/projects/{pid}/jobs", json={
            "kind": "cstr", "q": 0.05, "v": 500.0,
            "inflow": {"S_S": 60.0, "S_NH": 25.0, "S_ALK": 7.0},
            "init": {"S_S": 30.0, "X_BH": 100.0, "S_ALK": 6.0},
            "duration": 3600.0, "dt": 30.0, "save_interval": 600.0}).json()["id"]
        job = wait_for(client, pid, jid)
        assert job["status"] == "done", job.get("error")
        result = client.get(f"/v1/projects/{pid}/jobs/{jid}/result").json()
        assert result["components"][1] == "S_S"
        assert len(result["states"][0]) == 13

    def test_concurrent_jobs_independent(self, client):
        pid = self._prepare(client)
        jids, feeds = [], (2.0, 3.0, 4.0)
        for x_f in feeds:
            r = client.post(f"/v1/projects/{pid}/jobs", json={
                "kind": "tenlayer",
                "operating_point": {"Q_i": 0.12, "Q_r": 0.06, "X_f": x_f},
                "duration": 2 * 3600.0, "dt": 10.0, "save_interval": 1800.0})
            jids.append(r.json()["id"])
        finals = []
        for jid in jids:
            job = wait_for(client, pid, jid)
            assert job["status"] == "done", job.get("error")
            result = client.get(f"/v1/projects/{pid}/jobs/{jid}/result").json()
            finals.append(result["states"][-1])
        # heavier feed leaves more solids in the tank
        totals = [sum(f) for f in finals]
        assert totals == sorted(totals)


class TestPersistence:
    def test_restart_preserves_projects_and_done_jobs(self, tmp_path):
        data = tmp_path / "data"
        with TestClient(create_app(data)) as c:
            pid = make_project(c, "persist")
            ids = upload_vesilind_tests(c, pid)
            c.post(f"/v1/projects/{pid}/settling/fit",
                   json={"kind": "vesilind", "dataset_ids": ids})
            c.put(f"/v1/projects/{pid}/geometry", json=GEOMETRY)
            jid = c.post(f"/v1/projects/{pid}/jobs", json={
                "kind": "tenlayer",
                "operating_point": {"Q_i": 0.12, "Q_r": 0.06, "X_f": 3.2},
                "duration": 1800.0, "dt": 10.0}).json()["id"]
            wait_for(c, pid, jid)
            before = c.get(f"/v1/projects/{pid}/jobs/{jid}/result").json()

        with TestClient(create_app(data)) as c2:
            doc = c2.get(f"/v1/projects/{pid}").json()
            assert doc["name"] == "persist"
            job = c2.get(f"/v1/projects/{pid}/jobs/{jid}").json()
            assert job["status"] == "done"
            after = c2.get(f"/v1/projects/{pid}/jobs/{jid}/result").json()
            assert after == before


class TestAuth:
    def test_token_required_when_configured(self, tmp_path):
        with TestClient(create_app(tmp_path / "d", token="s3cret")) as c:
            assert c.get("/healthz").status_code == 200  # health is open
            assert c.get("/v1/projects").status_code == 401
            ok = c.get("/v1/projects",
                       headers={"Authorization": "Bearer s3cret"})
            assert ok.status_code == 200


def test_validation_error_shape(client):
    r = client.post("/v1/projects", json={})
    assert r.status_code == 422
    assert r.json()["code"] == "validation_failed"

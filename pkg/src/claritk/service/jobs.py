"""Background jobs for the long-running simulations.

Jobs run on a small thread pool; status documents live in the project store
so finished jobs survive a service restart. Status only moves forward
(queued -> running -> done | failed). Jobs found queued or running at
startup are marked failed (the worker died with them).
"""

from __future__ import annotations

import threading
import time
import traceback
import uuid
from concurrent.futures import ThreadPoolExecutor

from .store import ProjectStore

STATUS_ORDER = {"queued": 0, "running": 1, "done": 2, "failed": 2}


class JobManager:
    def __init__(self, store: ProjectStore, workers: int = 2):
        self.store = store
        self.pool = ThreadPoolExecutor(max_workers=max(1, workers))
        self._guard = threading.Lock()
        self._fail_orphans()

    def _fail_orphans(self):
        for doc in self.store.list_projects():
            dirty = False
            for job in doc.get("jobs", {}).values():
                if job["status"] in ("queued", "running"):
                    job["status"] = "failed"
                    job["error"] = "service restarted while the job was active"
                    dirty = True
            if dirty:
                self.store.mutate(doc["id"], lambda d, doc=doc: doc)

    def _update(self, project_id, job_id, **patch):
        def fn(doc):
            job = doc["jobs"][job_id]
            new_status = patch.get("status")
            if new_status and STATUS_ORDER[new_status] < STATUS_ORDER[job["status"]]:
                raise RuntimeError("job status may only move forward")
            job.update(patch)
            return doc
        return self.store.mutate(project_id, fn)

    def submit(self, project_id: str, kind: str, runner) -> dict:
        """Queue ``runner(job_id, progress_cb) -> result_artifact_name``."""
        job_id = uuid.uuid4().hex[:12]
        job = {"id": job_id, "kind": kind, "status": "queued",
               "progress": 0.0, "result": None, "error": None,
               "submitted_at": time.time()}

        def attach(doc):
            doc["jobs"][job_id] = job
            return doc

        self.store.mutate(project_id, attach)

        def run():
            try:
                self._update(project_id, job_id, status="running")

                def progress(fraction):
                    self._update(project_id, job_id,
                                 progress=round(float(fraction), 4))

                result = runner(job_id, progress)
                self._update(project_id, job_id, status="done", progress=1.0,
                             result=result)
            except Exception as exc:  # failures land in the job document
                self._update(project_id, job_id, status="failed",
                             error=f"{exc}\n{traceback.format_exc(limit=3)}")

        self.pool.submit(run)
        return job

    def get(self, project_id: str, job_id: str) -> dict:
        doc = self.store.load(project_id)
        if job_id not in doc.get("jobs", {}):
            from .store import NotFound
            raise NotFound(job_id)
        return doc["jobs"][job_id]

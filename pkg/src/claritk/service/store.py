"""File-backed project store.

One directory per project holding plain JSON documents plus raw uploaded
CSVs, chosen so plant engineers can audit everything with a text editor.
Writes go through a per-project lock and an atomic tmp-file rename; reads
never take the lock.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from pathlib import Path


class NotFound(Exception):
    pass


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
    tmp.write_bytes(data)
    tmp.replace(path)


class ProjectStore:
    def __init__(self, root: Path):
        self.root = Path(root)
        (self.root / "projects").mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, project_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(project_id, threading.Lock())

    def _dir(self, project_id: str) -> Path:
        d = self.root / "projects" / project_id
        if not d.exists():
            raise NotFound(project_id)
        return d

    # --- projects -------------------------------------------------------

    def create_project(self, name: str) -> dict:
        pid = uuid.uuid4().hex[:12]
        d = self.root / "projects" / pid
        (d / "artifacts").mkdir(parents=True)
        doc = {"id": pid, "name": name, "created_at": time.time(),
               "datasets": {}, "models": {}, "mixers": [], "jobs": {}}
        _atomic_write(d / "project.json", json.dumps(doc, indent=1).encode())
        return doc

    def list_projects(self) -> list[dict]:
        out = []
        for d in sorted((self.root / "projects").iterdir()):
            f = d / "project.json"
            if f.exists():
                out.append(json.loads(f.read_text()))
        return out

    def load(self, project_id: str) -> dict:
        f = self._dir(project_id) / "project.json"
        return json.loads(f.read_text())

    def mutate(self, project_id: str, fn):
        """Apply ``fn(doc) -> doc`` under the project's write lock."""
        with self._lock(project_id):
            doc = self.load(project_id)
            doc = fn(doc) or doc
            _atomic_write(self._dir(project_id) / "project.json",
                          json.dumps(doc, indent=1).encode())
            return doc

    def delete_project(self, project_id: str):
        import shutil
        with self._lock(project_id):
            shutil.rmtree(self._dir(project_id))

    # --- artifacts ------------------------------------------------------

    def write_artifact(self, project_id: str, name: str, data: bytes) -> str:
        with self._lock(project_id):
            path = self._dir(project_id) / "artifacts" / name
            _atomic_write(path, data)
        return name

    def read_artifact(self, project_id: str, name: str) -> bytes:
        path = self._dir(project_id) / "artifacts" / name
        if not path.exists():
            raise NotFound(name)
        return path.read_bytes()

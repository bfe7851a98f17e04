"""On-disk persistence: run directories, completion cache, session files.

Layout under one root:

    runs/<run id>/manifest.json     run metadata and status
    runs/<run id>/records.jsonl     one StatementRecord per line
    runs/<run id>/report.json       MetricsReport (when finalized)
    runs/<run id>/report.txt        aligned-text table (when finalized)
    cache/<2-char shard>/<digest>.json
    sessions/<session id>.json

Every file write goes through write-to-temp + os.replace, so a crash leaves
either the old or the new content. records.jsonl is append-only while a run
is live; a torn final line (crash mid-append) is detected and ignored on
load, then healed by the finalizing rewrite.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from clarifact.errors import StorageFailure
from clarifact.metrics import MetricsReport
from clarifact.records import RunResult, StatementRecord

log = logging.getLogger(__name__)


def _atomic_write(path: Path, content: str) -> None:
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}-{threading.get_ident()}")
    try:
        tmp.write_text(content, encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageFailure(f"cannot write {path}: {exc}") from exc
    finally:
        tmp.unlink(missing_ok=True)


@dataclass
class RunManifest:
    run_id: str
    strategy: str
    corpus_digest: str
    config: dict
    status: str = "running"  # running | complete | failed
    started: float = 0.0
    finished: Optional[float] = None

    def to_json(self) -> str:
        return (
            json.dumps(
                {
                    "run_id": self.run_id,
                    "strategy": self.strategy,
                    "corpus_digest": self.corpus_digest,
                    "config": self.config,
                    "status": self.status,
                    "started": self.started,
                    "finished": self.finished,
                },
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        raw = json.loads(text)
        return cls(
            run_id=raw["run_id"],
            strategy=raw["strategy"],
            corpus_digest=raw["corpus_digest"],
            config=raw.get("config", {}),
            status=raw.get("status", "running"),
            started=raw.get("started", 0.0),
            finished=raw.get("finished"),
        )


class RunStore:
    """Run persistence rooted at one directory; safe for threaded appenders."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        try:
            (self.root / "runs").mkdir(parents=True, exist_ok=True)
            (self.root / "cache").mkdir(parents=True, exist_ok=True)
            (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create store root {self.root}: {exc}") from exc
        self._append_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- runs ---------------------------------------------------------------

    def run_dir(self, run_id: str) -> Path:
        return self.root / "runs" / run_id

    def _append_lock(self, run_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._append_locks.setdefault(run_id, threading.Lock())

    def begin_run(self, manifest: RunManifest) -> None:
        directory = self.run_dir(manifest.run_id)
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create run dir {directory}: {exc}") from exc
        manifest.started = manifest.started or time.time()
        _atomic_write(directory / "manifest.json", manifest.to_json())

    def append_record(self, run_id: str, record: StatementRecord) -> None:
        path = self.run_dir(run_id) / "records.jsonl"
        line = record.to_json_line() + "\n"
        with self._append_lock(run_id):
            try:
                with path.open("a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageFailure(f"cannot append to {path}: {exc}") from exc

    def load_records(self, run_id: str) -> list[StatementRecord]:
        """Parse records.jsonl, tolerating a torn final line.

        A final line that fails to parse is treated as never written (the
        append that produced it crashed mid-write). A malformed line
        anywhere else is real corruption and raises.
        """
        path = self.run_dir(run_id) / "records.jsonl"
        if not path.exists():
            return []
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise StorageFailure(f"cannot read {path}: {exc}") from exc
        records: list[StatementRecord] = []
        for index, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                records.append(StatementRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                if index == len(lines) - 1:
                    log.warning("ignoring torn final record line in %s", path)
                    break
                raise StorageFailure(f"corrupt record at {path}:{index + 1}: {exc}") from exc
        return records

    def completed_statement_ids(self, run_id: str) -> set[str]:
        return {record.statement_id for record in self.load_records(run_id)}

    def load_manifest(self, run_id: str) -> Optional[RunManifest]:
        path = self.run_dir(run_id) / "manifest.json"
        if not path.exists():
            return None
        try:
            return RunManifest.from_json(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise StorageFailure(f"corrupt manifest {path}: {exc}") from exc

    def finalize_run(self, result: RunResult, table: str = "") -> None:
        """Rewrite records in corpus order, mark complete, emit report files."""
        directory = self.run_dir(result.run_id)
        directory.mkdir(parents=True, exist_ok=True)
        body = "".join(record.to_json_line() + "\n" for record in result.records)
        _atomic_write(directory / "records.jsonl", body)
        _atomic_write(
            directory / "summary.json",
            json.dumps(result.summary_dict(), sort_keys=True, indent=2) + "\n",
        )
        if result.metrics is not None:
            _atomic_write(directory / "report.json", result.metrics.to_json())
        if table:
            _atomic_write(directory / "report.txt", table)
        manifest = self.load_manifest(result.run_id) or RunManifest(
            run_id=result.run_id,
            strategy=result.strategy.value,
            corpus_digest=result.corpus_digest,
            config=dict(result.config),
            started=time.time(),
        )
        manifest.status = "complete"
        manifest.finished = time.time()
        _atomic_write(directory / "manifest.json", manifest.to_json())

    def mark_failed(self, run_id: str) -> None:
        manifest = self.load_manifest(run_id)
        if manifest is None:
            return
        manifest.status = "failed"
        manifest.finished = time.time()
        _atomic_write(self.run_dir(run_id) / "manifest.json", manifest.to_json())

    def list_runs(self) -> list[RunManifest]:
        manifests = []
        for directory in sorted((self.root / "runs").iterdir()):
            if directory.is_dir():
                manifest = self.load_manifest(directory.name)
                if manifest is not None:
                    manifests.append(manifest)
        return manifests

    # -- completion cache -----------------------------------------------------

    def _cache_path(self, digest: str) -> Path:
        return self.root / "cache" / digest[:2] / f"{digest}.json"

    def cache_get(self, digest: str) -> Optional[str]:
        path = self._cache_path(digest)
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))["reply"]
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            log.warning("unreadable cache entry %s (%s); treating as miss", path, exc)
            return None

    def cache_put(self, digest: str, reply: str, model: str = "") -> None:
        path = self._cache_path(digest)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create cache shard {path.parent}: {exc}") from exc
        entry = {
            "digest": digest,
            "reply": reply,
            "model": model,
            "created": time.time(),
        }
        _atomic_write(path, json.dumps(entry, sort_keys=True) + "\n")


class DiskCache:
    """Adapter giving the gateway a cache view over a RunStore."""

    def __init__(self, store: RunStore):
        self._store = store

    def get(self, digest: str) -> Optional[str]:
        return self._store.cache_get(digest)

    def put(self, digest: str, text: str, model: str = "") -> None:
        self._store.cache_put(digest, text, model=model)


class SessionStore:
    """One JSON file per session, atomic replace, per-id write locks."""

    def __init__(self, root: str | Path):
        self.root = Path(root) / "sessions"
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create session dir {self.root}: {exc}") from exc
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def save(self, session_id: str, payload: dict) -> None:
        _atomic_write(
            self.root / f"{session_id}.json",
            json.dumps(payload, sort_keys=True, indent=2) + "\n",
        )

    def load(self, session_id: str) -> Optional[dict]:
        path = self.root / f"{session_id}.json"
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageFailure(f"corrupt session file {path}: {exc}") from exc

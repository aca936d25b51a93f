"""Storage engines.

Both stores support two commit modes. ``pertuple`` commits every record on
its own and is the default; ``batch`` commits a whole dataset at once. A
memstore commit is one locked append. A logstore commit is one ``write(2)``
followed by ``fsync`` unless the store is configured with ``sync = none``.

``logstore`` keeps one append-only file per dataset under its directory::

    <dir>/<dataset_id>.log           frames: <u32 little-endian length><record JSON>
    <dir>/<dataset_id>.lineage.json  lineage of the dataset as written

The offset index lives in memory and is rebuilt by scanning the logs on open.
"""

from __future__ import annotations

import os
import re
import stat
import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from datar.bigdata import BigData, LineageEntry, OpKind
from datar.engines.api import AVAILABLE, Availability, Engine, EngineKind, TaskSpec, unavailable
from datar.errors import InvalidParams, StorageError, StorageFull, UnknownDataset
from datar.records import Record, decode, encode

MODES = ("pertuple", "batch")
DEFAULT_DIR = "bigdb"
_LEN = struct.Struct("<I")
_SAFE_ID = re.compile(r"^[A-Za-z0-9_.-]+$")


@dataclass(frozen=True)
class WriteReceipt:
    dataset_id: str
    count: int
    elapsed_ns: int
    mode: str

    @property
    def elapsed_ms(self) -> float:
        return self.elapsed_ns / 1e6


class Store(Engine):
    kind = EngineKind.STORAGE
    accepts = frozenset({"mode", "capacity"})

    def __init__(self, params=None):
        super().__init__(params)
        self.mode = self._mode(self.params.get("mode", "pertuple"))
        cap = self.params.get("capacity")
        try:
            self.capacity = int(cap) if cap is not None else None
        except ValueError:
            raise InvalidParams(f"{self.name}: capacity must be an integer, got {cap!r}") from None
        self._lock = threading.Lock()

    @staticmethod
    def _mode(mode: str) -> str:
        if mode not in MODES:
            raise InvalidParams(f"storage mode must be one of {MODES}, got {mode!r}")
        return mode

    # subclasses implement these
    def _commit_one(self, dataset_id: str, payload: bytes) -> None: ...
    def _commit_many(self, dataset_id: str, payloads: list[bytes]) -> None: ...
    def _begin(self, dataset_id: str, lineage_json: str) -> None: ...
    def _finish(self, dataset_id: str) -> None: ...
    def load_records(self, dataset_id: str) -> list[Record]: ...
    def count(self, dataset_id: str) -> int: ...
    def datasets(self) -> list[str]: ...
    def delete(self, dataset_id: str) -> None: ...
    def _lineage(self, dataset_id: str) -> str: ...

    def total_records(self) -> int:
        return sum(self.count(d) for d in self.datasets())

    def __contains__(self, dataset_id: str) -> bool:
        return dataset_id in self.datasets()

    def write(self, bd: BigData, mode: str | None = None) -> WriteReceipt:
        mode = self._mode(mode or self.mode)
        if not _SAFE_ID.match(bd.id):
            raise StorageError(f"dataset id {bd.id!r} is not storable")
        if self.capacity is not None:
            existing = self.count(bd.id) if bd.id in self else 0
            if self.total_records() - existing + len(bd.records) > self.capacity:
                raise StorageFull(self.capacity)
        start = time.perf_counter_ns()
        self._begin(bd.id, bd.lineage_json())
        if mode == "pertuple":
            for record in bd.records:
                self._commit_one(bd.id, encode(record))
        else:
            self._commit_many(bd.id, [encode(r) for r in bd.records])
        self._finish(bd.id)
        return WriteReceipt(bd.id, len(bd.records), time.perf_counter_ns() - start, mode)

    def read(self, dataset_id: str) -> BigData:
        records = self.load_records(dataset_id)
        origin = LineageEntry(
            OpKind.ORIGIN,
            "store",
            {"engine": self.name, "dataset_id": dataset_id, "upstream": self._lineage(dataset_id)},
        )
        return BigData(records, (origin,), id=dataset_id)

    def _write_task(self, ctx, data, params):
        receipt = self.write(data, params.get("mode"))
        if ctx is not None:
            ctx.receipts.append(receipt)
        return None

    def tasks(self):
        return {"write": TaskSpec(self._write_task, frozenset({"mode"}))}


class MemStore(Store):
    name = "memstore"

    def __init__(self, params=None):
        super().__init__(params)
        self._data: dict[str, list[bytes]] = {}
        self._lineages: dict[str, str] = {}

    def _begin(self, dataset_id, lineage_json):
        with self._lock:
            self._data[dataset_id] = []
            self._lineages[dataset_id] = lineage_json

    def _commit_one(self, dataset_id, payload):
        with self._lock:
            self._data[dataset_id].append(payload)

    def _commit_many(self, dataset_id, payloads):
        with self._lock:
            self._data[dataset_id].extend(payloads)

    def _finish(self, dataset_id):
        pass

    def load_records(self, dataset_id):
        with self._lock:
            if dataset_id not in self._data:
                raise UnknownDataset(dataset_id)
            payloads = list(self._data[dataset_id])
        return [decode(p) for p in payloads]

    def _lineage(self, dataset_id):
        return self._lineages[dataset_id]

    def count(self, dataset_id):
        with self._lock:
            if dataset_id not in self._data:
                raise UnknownDataset(dataset_id)
            return len(self._data[dataset_id])

    def datasets(self):
        with self._lock:
            return list(self._data)

    def __contains__(self, dataset_id):
        return dataset_id in self._data

    def delete(self, dataset_id):
        with self._lock:
            self._data.pop(dataset_id, None)
            self._lineages.pop(dataset_id, None)

    def clear(self) -> None:
        with self._lock:
            self._data.clear()
            self._lineages.clear()


def _dir_status(path: str) -> Availability:
    if not os.path.isdir(path):
        return unavailable(f"directory missing: {path}")
    mode = stat.S_IMODE(os.stat(path).st_mode)
    # check the mode bits too: root passes os.access on read-only directories
    if not os.access(path, os.W_OK | os.X_OK) or not mode & 0o222:
        return unavailable(f"directory not writable: {path}")
    return AVAILABLE


class LogStore(Store):
    name = "logstore"
    accepts = Store.accepts | {"dir", "sync"}

    def __init__(self, params=None):
        super().__init__(params)
        self.dir = Path(self.params.get("dir", DEFAULT_DIR))
        self.sync = self.params.get("sync", "fsync")
        if self.sync not in ("none", "fsync"):
            raise InvalidParams(f"logstore: sync must be 'none' or 'fsync', got {self.sync!r}")
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError:
            pass  # reported by probe()
        self._offsets: dict[str, list[int]] = {}
        self._fds: dict[str, int] = {}
        self._pos: dict[str, int] = {}
        self._pending: dict[str, str] = {}
        self._rebuild_index()

    @classmethod
    def probe(cls, params: Mapping[str, str]) -> Availability:
        return _dir_status(params.get("dir", DEFAULT_DIR))

    def _log(self, dataset_id: str) -> Path:
        return self.dir / f"{dataset_id}.log"

    def _lineage_path(self, dataset_id: str) -> Path:
        return self.dir / f"{dataset_id}.lineage.json"

    def _rebuild_index(self) -> None:
        self._offsets.clear()
        if not self.dir.is_dir():
            return
        for log in sorted(self.dir.glob("*.log")):
            dataset_id = log.name[: -len(".log")]
            if not self._lineage_path(dataset_id).exists():
                continue  # never finished writing
            self._offsets[dataset_id] = _scan(log.read_bytes())

    def _begin(self, dataset_id, lineage_json):
        try:
            fd = os.open(self._log(dataset_id), os.O_WRONLY | os.O_CREAT | os.O_TRUNC | os.O_APPEND, 0o644)
            self._lineage_path(dataset_id).unlink(missing_ok=True)
        except OSError as exc:
            raise StorageError(f"logstore: cannot open {self._log(dataset_id)}: {exc}") from exc
        with self._lock:
            self._offsets[dataset_id] = []
            self._fds[dataset_id] = fd
            self._pos[dataset_id] = 0
            self._pending[dataset_id] = lineage_json

    def _append(self, dataset_id: str, frame: bytes, starts: list[int]) -> None:
        fd = self._fds[dataset_id]
        try:
            os.write(fd, frame)
            if self.sync == "fsync":
                os.fsync(fd)
        except OSError as exc:
            raise StorageError(f"logstore: write failed: {exc}") from exc
        with self._lock:
            self._offsets[dataset_id].extend(starts)

    def _commit_one(self, dataset_id, payload):
        pos = self._pos[dataset_id]
        self._append(dataset_id, _LEN.pack(len(payload)) + payload, [pos])
        self._pos[dataset_id] = pos + _LEN.size + len(payload)

    def _commit_many(self, dataset_id, payloads):
        pos = self._pos[dataset_id]
        starts = []
        for p in payloads:
            starts.append(pos)
            pos += _LEN.size + len(p)
        self._append(dataset_id, b"".join(_LEN.pack(len(p)) + p for p in payloads), starts)
        self._pos[dataset_id] = pos

    def _finish(self, dataset_id):
        fd = self._fds.pop(dataset_id)
        self._pos.pop(dataset_id, None)
        try:
            os.close(fd)
            self._lineage_path(dataset_id).write_text(self._pending.pop(dataset_id), encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"logstore: cannot finish {dataset_id}: {exc}") from exc

    def load_records(self, dataset_id):
        with self._lock:
            if dataset_id not in self._offsets:
                raise UnknownDataset(dataset_id)
            offsets = list(self._offsets[dataset_id])
        try:
            data = self._log(dataset_id).read_bytes()
        except FileNotFoundError:
            raise UnknownDataset(dataset_id) from None
        out = []
        for off in offsets:
            (n,) = _LEN.unpack_from(data, off)
            start = off + _LEN.size
            out.append(decode(data[start : start + n]))
        return out

    def _lineage(self, dataset_id):
        return self._lineage_path(dataset_id).read_text(encoding="utf-8")

    def count(self, dataset_id):
        with self._lock:
            if dataset_id not in self._offsets:
                raise UnknownDataset(dataset_id)
            return len(self._offsets[dataset_id])

    def datasets(self):
        with self._lock:
            return list(self._offsets)

    def __contains__(self, dataset_id):
        return dataset_id in self._offsets

    def delete(self, dataset_id):
        with self._lock:
            self._offsets.pop(dataset_id, None)
        self._log(dataset_id).unlink(missing_ok=True)
        self._lineage_path(dataset_id).unlink(missing_ok=True)

    def close(self) -> None:
        for fd in self._fds.values():
            os.close(fd)
        self._fds.clear()


def _scan(data: bytes) -> list[int]:
    """Frame start offsets; a torn trailing frame is ignored."""
    offsets = []
    pos = 0
    while pos + _LEN.size <= len(data):
        (n,) = _LEN.unpack_from(data, pos)
        if pos + _LEN.size + n > len(data):
            break
        offsets.append(pos)
        pos += _LEN.size + n
    return offsets

"""Per-session state, append-only audit trail, and provenance bookkeeping.

Audit events carry only payload digests; full payloads live in a sibling
content-addressed store so the trail stays small and tamper-evident.
Replaying the trail from an empty state reproduces the same state digest.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from millwright.errors import IntegrityError, MillwrightError

RESOURCE_KINDS = ("inspection-csv", "pathing-field", "deflection-field", "image", "kg-store")
EVENT_KINDS = ("resource-loaded", "artifact-cached", "agent-invoked",
               "critic-decided", "human-approved", "reset")
ACTORS = ("central", "analysis", "kg", "critic", "human")

_DEFAULT_ACTOR = {
    "resource-loaded": "central",
    "artifact-cached": "analysis",
    "agent-invoked": "central",
    "critic-decided": "critic",
    "human-approved": "human",
    "reset": "central",
}


def to_jsonable(obj: Any) -> Any:
    """Canonical JSON-compatible form for digesting arbitrary artifacts."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    if isinstance(obj, range):
        return [obj.start, obj.stop, obj.step]
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def canonical_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))


def digest_of(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


class PayloadStore:
    """Content-addressed payload store: digest-named files, or in-memory."""

    def __init__(self, root: Path | str | None = None):
        self.root = Path(root) if root is not None else None
        self._mem: dict[str, str] = {}
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)

    def put(self, payload: Any) -> str:
        text = canonical_json(payload)
        digest = hashlib.sha256(text.encode()).hexdigest()
        if self.root is None:
            self._mem[digest] = text
        else:
            target = self.root / digest
            if not target.exists():
                target.write_text(text)
        return digest

    def get(self, digest: str) -> Any:
        if self.root is None:
            if digest not in self._mem:
                raise IntegrityError(f"payload {digest} not in store")
            return json.loads(self._mem[digest])
        target = self.root / digest
        if not target.exists():
            raise IntegrityError(f"payload {digest} not in store")
        return json.loads(target.read_text())

    def __contains__(self, digest: str) -> bool:
        return digest in self._mem if self.root is None else (self.root / digest).exists()


@dataclass(frozen=True)
class ResourceHandle:
    kind: str
    uri: str
    checksum: str

    def __post_init__(self) -> None:
        if self.kind not in RESOURCE_KINDS:
            raise MillwrightError(f"unknown resource kind {self.kind!r}")

    @classmethod
    def from_file(cls, kind: str, path: str | Path) -> "ResourceHandle":
        data = Path(path).read_bytes()
        return cls(kind=kind, uri=str(path), checksum=hashlib.sha256(data).hexdigest())

    def verify(self) -> bool:
        data = Path(self.uri).read_bytes()
        return hashlib.sha256(data).hexdigest() == self.checksum


@dataclass(frozen=True)
class AuditEvent:
    ts: float
    actor: str
    kind: str
    digest: str

    def to_json(self) -> str:
        return json.dumps({"ts": self.ts, "actor": self.actor,
                           "kind": self.kind, "digest": self.digest})

    @classmethod
    def from_json(cls, line: str) -> "AuditEvent":
        raw = json.loads(line)
        return cls(ts=raw["ts"], actor=raw["actor"], kind=raw["kind"], digest=raw["digest"])


class AuditTrail:
    """Append-only event list, serializable to newline-delimited JSON."""

    def __init__(self) -> None:
        self._events: list[AuditEvent] = []

    def append(self, event: AuditEvent) -> None:
        self._events.append(event)

    @property
    def events(self) -> tuple[AuditEvent, ...]:
        return tuple(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def write(self, path: str | Path) -> None:
        Path(path).write_text("".join(e.to_json() + "\n" for e in self._events))

    @classmethod
    def read(cls, path: str | Path) -> "AuditTrail":
        trail = cls()
        for line in Path(path).read_text().splitlines():
            if line.strip():
                trail.append(AuditEvent.from_json(line))
        return trail


NOT_FOUND = None


class ProvenanceMap:
    """Maps reported-quantity identifiers to tool-output or triple ids."""

    def __init__(self, entries: dict[str, str] | None = None):
        self.entries: dict[str, str] = dict(entries or {})

    def record(self, quantity_id: str, target: str) -> None:
        self.entries[quantity_id] = target

    def resolve(self, quantity_id: str) -> str | None:
        """Return the mapped target id, or the not-found signal (None)."""
        return self.entries.get(quantity_id, NOT_FOUND)

    def validate(self, target_exists: Callable[[str], bool]) -> None:
        """Raise IntegrityError naming every key whose target dangles."""
        dangling = [key for key, target in self.entries.items() if not target_exists(target)]
        if dangling:
            raise IntegrityError(
                f"provenance entries with dangling targets: {sorted(dangling)}")

    def merge(self, other: "ProvenanceMap") -> None:
        self.entries.update(other.entries)

    def __len__(self) -> int:
        return len(self.entries)


def resolve_provenance(prov: ProvenanceMap, quantity_id: str,
                       target_exists: Callable[[str], bool] | None = None) -> str | None:
    """Look up a quantity id; with a target predicate, also enforce integrity."""
    target = prov.resolve(quantity_id)
    if target is NOT_FOUND:
        return NOT_FOUND
    if target_exists is not None and not target_exists(target):
        raise IntegrityError(f"provenance key {quantity_id!r} points at missing {target!r}")
    return target


@dataclass
class CacheEntry:
    key: str
    digest: str
    produced_by: str  # tool-output id or retrieval id that created the artifact


class SessionState:
    """Single-writer conversational state mutated by the eight-step loop."""

    def __init__(self, session_id: str | None = None,
                 payloads: PayloadStore | None = None,
                 clock: Callable[[], float] = time.time):
        self.session_id = session_id or uuid.uuid4().hex[:12]
        self.payloads = payloads or PayloadStore()
        self.resources: dict[str, ResourceHandle] = {}
        self.cache: dict[str, CacheEntry] = {}
        self.invocation_history: list[tuple[str, str]] = []
        self.critic_count = 0
        self.approvals: list[str] = []
        self.audit = AuditTrail()
        self._clock = clock
        self._artifacts: dict[str, Any] = {}  # live objects, not replayed

    # -- event application ------------------------------------------------

    def apply(self, kind: str, payload: dict, actor: str | None = None) -> "SessionState":
        """Apply one state event, append it to the audit trail, return self."""
        if kind not in EVENT_KINDS:
            raise MillwrightError(f"unknown state event kind {kind!r}")
        actor = actor or _DEFAULT_ACTOR[kind]
        if actor not in ACTORS:
            raise MillwrightError(f"unknown actor {actor!r}")
        self._apply(kind, payload)
        digest = self.payloads.put({"kind": kind, "payload": to_jsonable(payload)})
        self.audit.append(AuditEvent(ts=self._clock(), actor=actor, kind=kind, digest=digest))
        return self

    def _apply(self, kind: str, payload: dict) -> None:
        if kind == "resource-loaded":
            handle = ResourceHandle(kind=payload["resource_kind"], uri=payload["uri"],
                                    checksum=payload["checksum"])
            self.resources[payload["name"]] = handle
        elif kind == "artifact-cached":
            key, digest = payload["key"], payload["digest"]
            existing = self.cache.get(key)
            if existing is not None and existing.digest != digest:
                raise IntegrityError(
                    f"cache key {key!r} already holds digest {existing.digest[:12]}, "
                    f"refusing conflicting {digest[:12]}")
            self.cache[key] = CacheEntry(key=key, digest=digest,
                                         produced_by=payload["produced_by"])
        elif kind == "agent-invoked":
            if payload.get("new_query"):
                self.critic_count = 0
            self.invocation_history.append(
                (payload["agent_id"], payload["instruction_digest"]))
        elif kind == "critic-decided":
            self.critic_count += 1
        elif kind == "human-approved":
            self.approvals.append(payload.get("decision", "approved"))
        elif kind == "reset":
            self.cache.clear()
            self.resources.clear()
            self._artifacts.clear()

    # -- convenience wrappers over apply ----------------------------------

    def load_resource(self, name: str, kind: str, path: str | Path) -> ResourceHandle:
        handle = ResourceHandle.from_file(kind, path)
        self.apply("resource-loaded", {"name": name, "resource_kind": kind,
                                       "uri": handle.uri, "checksum": handle.checksum})
        return handle

    def cache_artifact(self, key: str, value: Any, produced_by: str,
                       actor: str = "analysis") -> str:
        digest = self.payloads.put(to_jsonable(value))
        self.apply("artifact-cached",
                   {"key": key, "digest": digest, "produced_by": produced_by},
                   actor=actor)
        self._artifacts[key] = value
        return digest

    def artifact(self, key: str) -> Any:
        return self._artifacts.get(key)

    def has_artifact(self, key: str) -> bool:
        return key in self.cache

    # -- digests and replay ------------------------------------------------

    def digest(self) -> str:
        return digest_of({
            "resources": {name: [h.kind, h.uri, h.checksum]
                          for name, h in self.resources.items()},
            "cache": {key: [e.digest, e.produced_by] for key, e in self.cache.items()},
            "invocations": self.invocation_history,
            "critic_count": self.critic_count,
            "approvals": self.approvals,
        })

    @classmethod
    def replay(cls, events: Iterable[AuditEvent], payloads: PayloadStore,
               session_id: str = "replay") -> "SessionState":
        """Rebuild state by re-applying every audited event from the store."""
        state = cls(session_id=session_id, payloads=payloads)
        for event in events:
            record = payloads.get(event.digest)
            state._apply(record["kind"], record["payload"])
            state.audit.append(event)
        return state


def update_state(state: SessionState, kind: str, payload: dict,
                 actor: str | None = None) -> SessionState:
    return state.apply(kind, payload, actor=actor)

"""Append-only triple store with dual embeddings and file persistence.

Replaces a database backend with a record file plus sidecar embedding
matrices. Each record is embedded twice: over the full triple-plus-context
text and over the context alone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from millwright.errors import IntegrityError
from millwright.kg.builder import TripleDraft, parse_triples
from millwright.kg.embedding import Embedder

RECORDS_FILE = "triples.ndjson"
V_MATRIX_FILE = "emb_triple.npy"
U_MATRIX_FILE = "emb_context.npy"


def normalize_entity(text: str) -> str:
    return " ".join(text.casefold().split())


@dataclass(frozen=True)
class TripleRecord:
    id: str
    subject: str
    relation: str
    object: str
    context: str
    figure_ref: str
    source_doc: str

    def triple_text(self) -> str:
        return f"{self.subject} {self.relation} {self.object} {self.context}"

    def to_json(self) -> str:
        return json.dumps({
            "id": self.id, "subject": self.subject, "relation": self.relation,
            "object": self.object, "context": self.context,
            "figure_ref": self.figure_ref, "source_doc": self.source_doc,
        })

    @classmethod
    def from_json(cls, line: str) -> "TripleRecord":
        return cls(**json.loads(line))


@dataclass
class IngestReport:
    added: int
    skipped: int
    rejected: list[str]


class TripleStore:
    def __init__(self, embedder: Embedder):
        self.embedder = embedder
        self.records: list[TripleRecord] = []
        self._by_id: dict[str, int] = {}
        self._v_rows: list[np.ndarray] = []
        self._u_rows: list[np.ndarray] = []
        self._entity_index: dict[str, set[int]] = {}

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, triple_id: str) -> bool:
        return triple_id in self._by_id

    def get(self, triple_id: str) -> TripleRecord:
        if triple_id not in self._by_id:
            raise IntegrityError(f"triple {triple_id} not in store")
        return self.records[self._by_id[triple_id]]

    @property
    def v_matrix(self) -> np.ndarray:
        return np.vstack(self._v_rows) if self._v_rows else np.zeros((0, self.embedder.dim))

    @property
    def u_matrix(self) -> np.ndarray:
        return np.vstack(self._u_rows) if self._u_rows else np.zeros((0, self.embedder.dim))

    def _add(self, record: TripleRecord) -> bool:
        if record.id in self._by_id:
            return False
        index = len(self.records)
        self.records.append(record)
        self._by_id[record.id] = index
        self._v_rows.append(self.embedder.embed(record.triple_text()))
        self._u_rows.append(self.embedder.embed(record.context))
        for entity in (normalize_entity(record.subject), normalize_entity(record.object)):
            self._entity_index.setdefault(entity, set()).add(index)
        return True

    def add_draft(self, draft: TripleDraft, source_doc: str, row_index: int) -> bool:
        raw = "\t".join(draft.fields())
        stable = hashlib.sha1(f"{source_doc}#{row_index}:{raw}".encode()).hexdigest()[:16]
        record = TripleRecord(
            id=f"t-{stable}", subject=draft.subject, relation=draft.relation,
            object=draft.object, context=draft.description,
            figure_ref=draft.figure_ref, source_doc=source_doc)
        return self._add(record)

    def ingest_tsv(self, path: str | Path, source_doc: str | None = None) -> IngestReport:
        """Ingest a five-field TSV; idempotent on identical content.

        Row ids derive from (source document, row position, fields), so
        re-ingesting the same file is a no-op while legitimate duplicate
        triples at different rows are retained.
        """
        path = Path(path)
        source = source_doc if source_doc is not None else path.stem
        drafts, rejects = parse_triples(path.read_text(), source)
        added = skipped = 0
        for row_index, draft in enumerate(drafts):
            if self.add_draft(draft, source, row_index):
                added += 1
            else:
                skipped += 1
        return IngestReport(added=added, skipped=skipped,
                            rejected=[r.repair_note for r in rejects])

    def neighbors(self, index: int) -> set[int]:
        """Indices of triples sharing a normalized subject or object entity."""
        record = self.records[index]
        linked: set[int] = set()
        for entity in (normalize_entity(record.subject), normalize_entity(record.object)):
            linked |= self._entity_index.get(entity, set())
        linked.discard(index)
        return linked

    def index_of(self, triple_id: str) -> int:
        return self._by_id[triple_id]

    # -- persistence --------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / RECORDS_FILE).write_text(
            "".join(r.to_json() + "\n" for r in self.records))
        np.save(directory / V_MATRIX_FILE, self.v_matrix)
        np.save(directory / U_MATRIX_FILE, self.u_matrix)

    @classmethod
    def load(cls, directory: str | Path, embedder: Embedder) -> "TripleStore":
        directory = Path(directory)
        store = cls(embedder)
        records_path = directory / RECORDS_FILE
        if not records_path.exists():
            raise IntegrityError(f"no triple store at {directory}")
        records = [TripleRecord.from_json(line)
                   for line in records_path.read_text().splitlines() if line.strip()]
        v_matrix = np.load(directory / V_MATRIX_FILE)
        u_matrix = np.load(directory / U_MATRIX_FILE)
        if v_matrix.shape[0] != len(records) or u_matrix.shape[0] != len(records):
            raise IntegrityError("embedding matrices out of sync with records")
        for i, record in enumerate(records):
            store.records.append(record)
            store._by_id[record.id] = i
            store._v_rows.append(v_matrix[i])
            store._u_rows.append(u_matrix[i])
            for entity in (normalize_entity(record.subject), normalize_entity(record.object)):
                store._entity_index.setdefault(entity, set()).add(i)
        return store

from __future__ import annotations

import pytest

from millwright.fixtures import (
    write_demo_rules,
    write_inspection_csv,
    write_pathing_csv,
    write_seed_tsvs,
)
from millwright.kg.embedding import HashedEmbedder
from millwright.kg.store import TripleStore
from millwright.session import SessionState
from millwright.tools.impl import ToolContext, build_registry


@pytest.fixture(scope="session")
def registry():
    return build_registry()


@pytest.fixture
def inspection_csv(tmp_path):
    return write_inspection_csv(tmp_path / "Inspection_Aggregated.csv")


@pytest.fixture
def pathing_csv(tmp_path):
    return write_pathing_csv(tmp_path / "Pathing_Field.csv")


@pytest.fixture
def kg_store(tmp_path):
    embedder = HashedEmbedder(dim=256)
    store = TripleStore(embedder)
    for path in write_seed_tsvs(tmp_path / "seed"):
        store.ingest_tsv(path)
    return store


@pytest.fixture
def loaded_ctx(inspection_csv, pathing_csv, kg_store):
    state = SessionState(session_id="test")
    state.load_resource("inspection", "inspection-csv", inspection_csv)
    state.load_resource("pathing", "pathing-field", pathing_csv)
    return ToolContext(state=state, kg_store=kg_store,
                       embedder=kg_store.embedder)

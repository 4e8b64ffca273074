from __future__ import annotations

import json

import pytest

from millwright.fixtures import write_kg_corpus
from millwright.gateway import ScriptedBackend, ScriptedRule
from millwright.kg.builder import (
    FORMAT_LINE,
    ChunkWindow,
    RawTripleLine,
    TripleDraft,
    aggregate,
    build_prompt,
    chunk_document,
    extract_corpus,
    parse_triple_line,
    parse_triples,
    propagate_table_refs,
    serialize_triple_line,
)


def stride_starts_oracle(length: int) -> list[int]:
    starts = [0]
    s = 500
    while s + 500 < length:
        starts.append(s)
        s += 500
    return starts


class TestChunker:
    def test_single_window(self):
        windows = chunk_document("a" * 1000)
        assert len(windows) == 1
        assert (windows[0].start, windows[0].end) == (0, 1000)
        assert windows[0].main_span == (0, 1000)

    def test_stride_split_1001(self):
        windows = chunk_document("a" * 1001)
        assert [(w.start, w.end) for w in windows] == [(0, 1000), (500, 1001)]
        assert [w.main_span for w in windows] == [(0, 750), (750, 1001)]

    def test_2300_starts(self):
        windows = chunk_document("a" * 2300)
        assert [w.start for w in windows] == stride_starts_oracle(2300)
        assert windows[-1].end == 2300

    @pytest.mark.parametrize("length", [1, 999, 1000, 1001, 2300, 10000])
    def test_tiling_properties(self, length):
        windows = chunk_document("a" * length)
        assert [w.start for w in windows] == stride_starts_oracle(length)
        previous_end = 0
        for w in windows:
            assert w.end - w.start <= 1000
            assert w.main_span[0] == previous_end      # no gaps, no overlaps
            assert w.start <= w.main_span[0] < w.main_span[1] <= w.end
            previous_end = w.main_span[1]
        assert previous_end == length
        for left, right in zip(windows, windows[1:]):
            assert left.end - right.start == 500       # fixed overlap

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            chunk_document("")


class TestPrompt:
    def test_first_window_blank_before(self):
        text = "x" * 1600
        windows = chunk_document(text, "doc")
        prompt = build_prompt(windows[0], text)
        assert "CONTEXT_BEFORE:\n\n" in prompt
        assert FORMAT_LINE in prompt
        assert "Triples are extracted from CHUNK_MAIN only" in prompt

    def test_middle_window_contexts(self):
        text = "".join(chr(ord("a") + (i % 26)) for i in range(2600))
        windows = chunk_document(text, "doc")
        middle = windows[1]
        prompt = build_prompt(middle, text)
        before = text[middle.context_before[0]:middle.context_before[1]]
        after = text[middle.context_after[0]:middle.context_after[1]]
        assert before and before in prompt
        assert after and after in prompt
        main = text[middle.main_span[0]:middle.main_span[1]]
        assert f"<<<CHUNK_MAIN>>>\n{main}\n<<<END_CHUNK_MAIN>>>" in prompt


VALID_LINE = 'Ti-6Al-4V\tHAS_PROPERTY\tlow thermal conductivity\t"reduces heat dissipation"\tFigure 3'


class TestCodec:
    def test_valid_line(self):
        draft = parse_triple_line(VALID_LINE)
        assert isinstance(draft, TripleDraft)
        assert draft.status == "valid"
        assert draft.description == "reduces heat dissipation"
        assert draft.figure_ref == "Figure 3"

    def test_round_trip_identity(self):
        draft = parse_triple_line(VALID_LINE)
        assert serialize_triple_line(draft) == VALID_LINE

    def test_four_fields_repaired(self):
        draft = parse_triple_line('a\tREL\tb\t"ctx"')
        assert draft.status == "repaired"
        assert draft.figure_ref == ""
        assert "figure reference" in draft.repair_note

    def test_doubled_tabs_repaired(self):
        draft = parse_triple_line('a\t\tREL\tb\t"ctx"\tFig 1')
        assert draft.status == "repaired"
        assert "doubled tabs" in draft.repair_note
        assert draft.relation == "REL"

    def test_stray_quotes_repaired(self):
        draft = parse_triple_line('a\tREL\tb\tno "quotes here\tFig 1')
        assert draft.status == "repaired"
        assert draft.description == "no quotes here"

    def test_prose_rejected(self):
        outcome = parse_triple_line("this is just prose with no structure")
        assert isinstance(outcome, RawTripleLine)
        assert outcome.status == "rejected"

    def test_empty_entity_rejected(self):
        outcome = parse_triple_line('\tREL\tb\t"ctx"\t')
        assert isinstance(outcome, RawTripleLine)

    def test_parse_triples_splits(self):
        output = VALID_LINE + "\n\nnot a triple\n" + 'a\tREL\tb\t"c"'
        drafts, rejects = parse_triples(output)
        assert len(drafts) == 2
        assert len(rejects) == 1

    def test_repaired_lines_serialize_to_normal_form(self):
        draft = parse_triple_line('a\tREL\tb\t"ctx"')
        normal = serialize_triple_line(draft)
        reparsed = parse_triple_line(normal)
        assert reparsed.status == "valid"
        assert serialize_triple_line(reparsed) == normal


class TestPropagation:
    def test_cell_inherits_schema_ref(self):
        drafts = [
            TripleDraft("X", "HAS_COLUMN", "speed", "schema", "Table 2"),
            TripleDraft("X", "CELL_VALUE", "120", "cell", ""),
        ]
        out, warnings = propagate_table_refs(drafts)
        assert out[1].figure_ref == "Table 2"
        assert warnings == []

    def test_no_schema_unchanged(self):
        drafts = [TripleDraft("Y", "CELL_VALUE", "9", "cell", "")]
        out, warnings = propagate_table_refs(drafts)
        assert out[0].figure_ref == ""
        assert warnings == []

    def test_conflicting_refs_warn(self):
        drafts = [
            TripleDraft("X", "HAS_COLUMN", "a", "schema", "Table 1"),
            TripleDraft("X", "HAS_COLUMN", "b", "schema", "Table 2"),
            TripleDraft("X", "CELL_VALUE", "9", "cell", ""),
        ]
        out, warnings = propagate_table_refs(drafts)
        assert out[2].figure_ref == ""
        assert len(warnings) == 1


class TestAggregate:
    def test_additive_counts(self, tmp_path):
        per_doc = {
            "doc_a": [TripleDraft("a", "R", "b", "c", "") for _ in range(3)],
            "doc_b": [TripleDraft("x", "S", "y", "c", "") for _ in range(4)],
        }
        summary = aggregate(per_doc, tmp_path / "kg")
        assert summary.triples == 7
        global_lines = (tmp_path / "kg" / "global.tsv").read_text().splitlines()
        assert len(global_lines) == 7
        sources = (tmp_path / "kg" / "global.sources.txt").read_text().splitlines()
        assert sources == ["doc_a"] * 3 + ["doc_b"] * 4

    def test_duplicates_retained(self, tmp_path):
        draft = TripleDraft("a", "R", "b", "c", "")
        summary = aggregate({"d1": [draft], "d2": [draft]}, tmp_path / "kg")
        assert summary.triples == 2

    def test_casefolded_uniqueness(self, tmp_path):
        per_doc = {"d": [
            TripleDraft("Titanium", "HAS", "strength", "c", ""),
            TripleDraft("titanium", "has", "Strength", "c", ""),
        ]}
        summary = aggregate(per_doc, tmp_path / "kg")
        assert summary.unique_entities == 2
        assert summary.unique_relations == 1
        report = json.loads((tmp_path / "kg" / "summary.json").read_text())
        assert report == {"triples": 2, "unique_entities": 2, "unique_relations": 1}


class TestExtractPipeline:
    def test_scripted_extraction(self, tmp_path):
        docs = write_kg_corpus(tmp_path / "corpus")
        backend = ScriptedBackend([ScriptedRule(
            role="extractor",
            response='topic\tMENTIONED_IN\tdocument\t"window content"\t',
        )])
        summary = extract_corpus(docs, backend, tmp_path / "kg")
        assert summary.triples >= len(docs)
        for doc in docs:
            assert (tmp_path / "kg" / f"{doc.stem}.tsv").exists()

    def test_transcript_short_circuits_backend(self, tmp_path):
        doc = tmp_path / "tiny.md"
        doc.write_text("solid carbide end mills resist wear")
        windows = chunk_document(doc.read_text(), "tiny")
        transcript = {windows[0].window_id: 'carbide\tRESISTS\twear\t"from transcript"\t'}
        summary = extract_corpus([doc], backend=None, out_dir=tmp_path / "kg",
                                 transcript=transcript)
        assert summary.triples == 1
        line = (tmp_path / "kg" / "tiny.tsv").read_text().strip()
        assert "from transcript" in line

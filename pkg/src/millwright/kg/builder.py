"""Knowledge-graph construction pipeline.

Markdown documents are split into 1000-character windows with 500-character
overlap; an extraction prompt marks the central region and dictates the
five-field TSV triple format; returned lines are validated, minimally
repaired, or rejected; table references propagate from schema triples; and
per-document outputs aggregate into a global TSV with a summary report.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

WINDOW_CHARS = 1000
OVERLAP_CHARS = 500
STRIDE = WINDOW_CHARS - OVERLAP_CHARS

FORMAT_LINE = ('ENTITY_1 <TAB> RELATIONSHIP_TYPE <TAB> ENTITY_2 <TAB> '
               '"RELATIONSHIP_DESCRIPTION" <TAB> FIGURE_REFERENCE')

_QUOTED = re.compile(r'^"[^"]*"$')


@dataclass(frozen=True)
class ChunkWindow:
    doc_id: str
    start: int
    end: int
    main_span: tuple[int, int]
    context_before: tuple[int, int]
    context_after: tuple[int, int]

    @property
    def window_id(self) -> str:
        return f"{self.doc_id}:{self.start}-{self.end}"


def chunk_document(text: str, doc_id: str = "doc") -> list[ChunkWindow]:
    """Windows of up to 1000 chars at stride 500; main spans tile [0, len).

    A trailing start that would add no unseen characters is absorbed into
    the previous window. Interior main-span boundaries sit at the midpoint
    of each 500-char overlap so extraction regions tile exactly.
    """
    if not text:
        raise ValueError("cannot chunk empty document")
    length = len(text)
    starts = [0]
    s = STRIDE
    while s + OVERLAP_CHARS < length:
        starts.append(s)
        s += STRIDE
    bounds = [0]
    for i in range(1, len(starts)):
        bounds.append(starts[i] + OVERLAP_CHARS // 2)
    bounds.append(length)
    windows = []
    for i, start in enumerate(starts):
        end = min(start + WINDOW_CHARS, length)
        main = (bounds[i], bounds[i + 1])
        windows.append(ChunkWindow(
            doc_id=doc_id, start=start, end=end, main_span=main,
            context_before=(start, main[0]), context_after=(main[1], end)))
    return windows


PROMPT_TEMPLATE = """You extract knowledge-graph triples from technical machining documents.

Output one triple per line, exactly this five-field tab-separated format:
{format_line}

Rules:
- Triples are extracted from CHUNK_MAIN only.
- The surrounding context is given solely to resolve references to tables and figures.
- FIGURE_REFERENCE may be empty when no table or figure applies.

CONTEXT_BEFORE:
{before}

CHUNK_MAIN:
<<<CHUNK_MAIN>>>
{main}
<<<END_CHUNK_MAIN>>>

CONTEXT_AFTER:
{after}
"""


def build_prompt(window: ChunkWindow, text: str) -> str:
    before = text[window.context_before[0]:window.context_before[1]]
    main = text[window.main_span[0]:window.main_span[1]]
    after = text[window.context_after[0]:window.context_after[1]]
    return PROMPT_TEMPLATE.format(format_line=FORMAT_LINE, before=before,
                                  main=main, after=after)


@dataclass
class RawTripleLine:
    line: str
    status: str  # valid | repaired | rejected
    repair_note: str = ""


@dataclass
class TripleDraft:
    subject: str
    relation: str
    object: str
    description: str
    figure_ref: str
    status: str = "valid"
    repair_note: str = ""

    def fields(self) -> tuple[str, str, str, str, str]:
        return (self.subject, self.relation, self.object, self.description, self.figure_ref)


def serialize_triple_line(draft: TripleDraft) -> str:
    return "\t".join([draft.subject, draft.relation, draft.object,
                      f'"{draft.description}"', draft.figure_ref])


def parse_triple_line(line: str) -> TripleDraft | RawTripleLine:
    """Parse one TSV line; repair the three known malformation classes.

    Repairs: runs of doubled tabs collapse to one; a 4-field line gains an
    empty figure reference; a description with missing or stray quotes is
    re-quoted. Anything else is rejected with a reason.
    """
    notes = []
    work = line.rstrip("\n")
    if not work.strip():
        return RawTripleLine(line=line, status="rejected", repair_note="blank line")
    if "\t\t" in work:
        work = re.sub(r"\t{2,}", "\t", work)
        notes.append("collapsed doubled tabs")
    parts = work.split("\t")
    if len(parts) == 4:
        parts.append("")
        notes.append("added empty figure reference")
    if len(parts) != 5:
        return RawTripleLine(line=line, status="rejected",
                             repair_note=f"expected 5 tab-separated fields, got {len(parts)}")
    subject, relation, obj, description, figure_ref = parts
    if not subject.strip() or not relation.strip() or not obj.strip():
        return RawTripleLine(line=line, status="rejected",
                             repair_note="empty entity or relation field")
    if not _QUOTED.match(description):
        stripped = description.replace('"', "").strip()
        description = f'"{stripped}"'
        notes.append("normalized description quoting")
    return TripleDraft(
        subject=subject, relation=relation, object=obj,
        description=description[1:-1], figure_ref=figure_ref,
        status="repaired" if notes else "valid",
        repair_note="; ".join(notes))


def parse_triples(model_output: str, doc_id: str = "") -> tuple[list[TripleDraft],
                                                                list[RawTripleLine]]:
    drafts: list[TripleDraft] = []
    rejects: list[RawTripleLine] = []
    for line in model_output.splitlines():
        if not line.strip():
            continue
        outcome = parse_triple_line(line)
        if isinstance(outcome, TripleDraft):
            drafts.append(outcome)
        else:
            rejects.append(outcome)
    return drafts, rejects


def propagate_table_refs(drafts: list[TripleDraft]) -> tuple[list[TripleDraft], list[str]]:
    """Give ref-less cell triples the figure_ref of a same-subject schema triple.

    Applies within one window batch. Conflicting schema references leave the
    draft unchanged and emit an ambiguity warning.
    """
    by_subject: dict[str, set[str]] = {}
    for draft in drafts:
        if draft.figure_ref:
            by_subject.setdefault(draft.subject, set()).add(draft.figure_ref)
    warnings: list[str] = []
    out: list[TripleDraft] = []
    for draft in drafts:
        if not draft.figure_ref:
            refs = by_subject.get(draft.subject, set())
            if len(refs) == 1:
                draft = TripleDraft(**{**draft.__dict__, "figure_ref": next(iter(refs))})
            elif len(refs) > 1:
                warnings.append(
                    f"subject {draft.subject!r}: conflicting schema refs {sorted(refs)}")
        out.append(draft)
    return out, warnings


@dataclass
class CorpusSummary:
    triples: int
    unique_entities: int
    unique_relations: int


def aggregate(per_doc: dict[str, list[TripleDraft]], out_dir: str | Path) -> CorpusSummary:
    """Write per-document TSVs, the concatenated global TSV with a doc
    provenance sidecar, and a three-count summary. No deduplication."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    global_lines: list[str] = []
    provenance: list[str] = []
    entities: set[str] = set()
    relations: set[str] = set()
    for doc_id in sorted(per_doc):
        drafts = per_doc[doc_id]
        lines = [serialize_triple_line(d) for d in drafts]
        (out / f"{doc_id}.tsv").write_text("".join(line + "\n" for line in lines))
        global_lines.extend(lines)
        provenance.extend(doc_id for _ in lines)
        for d in drafts:
            entities.add(d.subject.casefold())
            entities.add(d.object.casefold())
            relations.add(d.relation.casefold())
    (out / "global.tsv").write_text("".join(line + "\n" for line in global_lines))
    (out / "global.sources.txt").write_text("".join(doc + "\n" for doc in provenance))
    summary = CorpusSummary(triples=len(global_lines), unique_entities=len(entities),
                            unique_relations=len(relations))
    (out / "summary.json").write_text(json.dumps(summary.__dict__, indent=2))
    return summary


def extract_corpus(doc_paths: list[Path], backend, out_dir: str | Path,
                   transcript: dict[str, str] | None = None) -> CorpusSummary:
    """Run the extraction pipeline over markdown files.

    ``backend`` serves the extractor role; a pre-recorded transcript
    (window-id -> extraction text) short-circuits it so the pipeline runs
    offline and deterministically.
    """
    per_doc: dict[str, list[TripleDraft]] = {}
    for path in doc_paths:
        doc_id = Path(path).stem
        text = Path(path).read_text()
        doc_drafts: list[TripleDraft] = []
        for window in chunk_document(text, doc_id):
            if transcript is not None and window.window_id in transcript:
                output = transcript[window.window_id]
            else:
                output = backend.complete("extractor", build_prompt(window, text))
            drafts, _rejects = parse_triples(output, doc_id)
            drafts, _warnings = propagate_table_refs(drafts)
            doc_drafts.extend(drafts)
        per_doc[doc_id] = doc_drafts
    return aggregate(per_doc, out_dir)

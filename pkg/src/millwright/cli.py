"""Command-line surface: interactive REPL, HTTP service, knowledge-graph
construction, fixture generation, and the three evaluation protocols."""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from millwright.config import AppConfig
from millwright.engine import Engine, TurnResult
from millwright.errors import MillwrightError
from millwright.gateway import ScriptedBackend, make_backend


def build_engine(config: AppConfig, fixture_dir: str | None = None,
                 rules_path: str | None = None, critic_enabled: bool = True) -> Engine:
    backend = None
    if rules_path:
        backend = ScriptedBackend.from_file(rules_path)
    if fixture_dir:
        from millwright.fixtures import write_demo_workspace
        from millwright.kg.embedding import HashedEmbedder
        from millwright.kg.store import TripleStore

        layout = write_demo_workspace(fixture_dir)
        embedder = HashedEmbedder(dim=config.embedder_dim)
        store = TripleStore(embedder)
        for path in sorted(layout["seed_tsvs"].glob("*.tsv")):
            store.ingest_tsv(path)
        if backend is None and not rules_path:
            backend = ScriptedBackend.from_file(layout["rules"])
        return Engine(config=config, backend=backend, kg_store=store,
                      critic_enabled=critic_enabled)
    return Engine(config=config, backend=backend, critic_enabled=critic_enabled)


def render_turn(result: TurnResult) -> str:
    lines = []
    if result.kind == "command":
        lines.append(result.narrative)
    elif result.verdict == "accepted":
        lines.append(result.narrative)
        if result.table:
            lines.append("")
            lines.append(render_table(result.table))
        elif result.quantities:
            for q in result.quantities[:12]:
                unit = f" {q['unit']}" if q["unit"] else ""
                lines.append(f"  {q['id']} = {q['value']}{unit}   <- {q['provenance']}")
            if len(result.quantities) > 12:
                lines.append(f"  ... {len(result.quantities) - 12} more quantities")
        if result.claims:
            lines.append("")
            for claim in result.claims:
                lines.append(f"  * {claim['text']}  [{', '.join(claim['evidence'])}]")
    else:
        lines.append("ESCALATED for human review:")
        for failed in result.escalation["failed_checks"]:
            lines.append(f"  failed {failed['check']}: {failed['detail']}")
        for info in result.escalation["missing_info"]:
            lines.append(f"  needs: {info}")
    lines.append(f"[{result.elapsed_s:.3f} s]")
    return "\n".join(lines)


def render_table(table: dict) -> str:
    widths = [max(len(str(row[i])) for row in [table["columns"]] + table["rows"])
              for i in range(len(table["columns"]))]
    def fmt(row):
        return "  ".join(str(cell).ljust(width) for cell, width in zip(row, widths))
    lines = [fmt(table["columns"]), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in table["rows"])
    return "\n".join(lines)


def load_config(path: str | None) -> AppConfig:
    return AppConfig.from_file(path) if path else AppConfig()


@click.group()
def main() -> None:
    """Decision support for CNC blade machining."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--fixture", "fixture_dir", type=click.Path(), default=None,
              help="Write the demo workspace here and preload it.")
@click.option("--backend-rules", type=click.Path(exists=True), default=None)
def repl(config_path, fixture_dir, backend_rules) -> None:
    """Interactive loop: one query per line, 'exit' to quit."""
    config = load_config(config_path)
    engine = build_engine(config, fixture_dir, backend_rules)
    session_id = engine.new_session()
    if fixture_dir:
        state, _ = engine.session(session_id)
        root = Path(fixture_dir)
        state.load_resource("inspection", "inspection-csv",
                            root / "Inspection_Aggregated.csv")
        state.load_resource("pathing", "pathing-field", root / "Pathing_Field.csv")
        click.echo(f"Fixture workspace ready at {root}")
    while True:
        click.echo("Central Agent - What would you like to do?")
        try:
            query = input("> ").strip()
        except (EOFError, KeyboardInterrupt):
            query = "exit"
        if query.lower() in ("exit", "quit"):
            state, _ = engine.session(session_id)
            if config.audit_dir:
                out = Path(config.audit_dir) / f"{session_id}.ndjson"
                out.parent.mkdir(parents=True, exist_ok=True)
                state.audit.write(out)
                click.echo(f"Audit trail written to {out}")
            click.echo("Goodbye.")
            return
        if not query:
            continue
        try:
            result = engine.turn(session_id, query)
            click.echo(render_turn(result))
        except MillwrightError as exc:
            click.echo(f"error: {exc}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--fixture", "fixture_dir", type=click.Path(), default=None)
@click.option("--backend-rules", type=click.Path(exists=True), default=None)
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
def serve(config_path, fixture_dir, backend_rules, host, port) -> None:
    """Run the HTTP API for the operator console."""
    import uvicorn

    from millwright.api import create_app

    config = load_config(config_path)
    engine = build_engine(config, fixture_dir, backend_rules)
    app = create_app(engine)
    uvicorn.run(app, host=host or config.host, port=port or config.port)


@main.group(name="eval")
def eval_group() -> None:
    """Evaluation protocols (depth, critic, kg-qa)."""


@eval_group.command()
@click.option("--per-level", default=25, show_default=True)
@click.option("--defect-l1", default=0.0, show_default=True)
@click.option("--defect-l2", default=0.2, show_default=True)
@click.option("--defect-l3", default=0.4, show_default=True)
@click.option("--workdir", type=click.Path(), default=".millwright-eval")
@click.option("--out", type=click.Path(), default="depth_report.csv", show_default=True)
def depth(per_level, defect_l1, defect_l2, defect_l3, workdir, out) -> None:
    """Tool-depth benchmark against a scripted planner with known defects."""
    from millwright.evalbench.depth import run_depth_benchmark, synthesize_depth_suite
    from millwright.fixtures import write_demo_workspace

    layout = write_demo_workspace(workdir)
    rates = {"L1": defect_l1, "L2": defect_l2, "L3": defect_l3}
    queries, backend = synthesize_depth_suite(per_level, rates)

    def make_engine(backend=backend):
        return Engine(config=AppConfig(), backend=backend, critic_enabled=False)

    def setup(engine, session_id):
        state, _ = engine.session(session_id)
        state.load_resource("inspection", "inspection-csv", layout["inspection"])
        state.load_resource("pathing", "pathing-field", layout["pathing"])

    report = run_depth_benchmark(queries, make_engine, backend=backend, setup=setup)
    report.write_csv(out)
    for level, rate in sorted(report.per_level.items()):
        click.echo(f"{level}: pass rate {rate:.2%}")
    click.echo(f"report written to {out}")


@eval_group.command()
@click.option("--queries", "n_queries", default=30, show_default=True)
@click.option("--drop-p", default=0.3, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--workdir", type=click.Path(), default=".millwright-eval")
@click.option("--out", type=click.Path(), default="critic_report.csv", show_default=True)
def critic(n_queries, drop_p, seed, workdir, out) -> None:
    """Paired critic ablation under deterministic routing degradation."""
    from millwright.evalbench.ablation import run_critic_ablation, synthesize_ablation_suite
    from millwright.fixtures import write_demo_workspace
    from millwright.gateway import DisabledBackend

    layout = write_demo_workspace(workdir)
    queries = synthesize_ablation_suite(n_queries)

    def make_engine(critic_enabled):
        engine = Engine(config=AppConfig(), backend=DisabledBackend(),
                        critic_enabled=critic_enabled)
        original = engine.new_session

        def new_session():
            sid = original()
            state, _ = engine.session(sid)
            state.load_resource("inspection", "inspection-csv", layout["inspection"])
            state.load_resource("pathing", "pathing-field", layout["pathing"])
            return sid

        engine.new_session = new_session
        return engine

    trials, value = run_critic_ablation(queries, make_engine, drop_p=drop_p, seed=seed)
    lines = ["query_id,condition,f1,missing,dropped"]
    for t in trials:
        lines.append(f"{t.query_id},{t.condition},{t.f1:.4f},{t.missing_count},"
                     f"{'|'.join(t.dropped_hints)}")
    lines.append(f"summary,improved={value.improved_rate:.4f},"
                 f"reduced_missing={value.reduced_missing_rate:.4f},"
                 f"full_recovery={value.full_recovery_rate:.4f},"
                 f"degraded={value.n_degraded}")
    Path(out).write_text("\n".join(lines) + "\n")
    click.echo(f"improved: {value.improved_rate:.2%}  "
               f"reduced-missing: {value.reduced_missing_rate:.2%}  "
               f"full-recovery: {value.full_recovery_rate:.2%} "
               f"({value.n_degraded} degraded)")
    click.echo(f"report written to {out}")


@eval_group.command(name="kg-qa")
@click.option("--items", "items_path", type=click.Path(exists=True), default=None,
              help="JSON QA bank; defaults to the bundled fixture bank.")
@click.option("--workdir", type=click.Path(), default=".millwright-eval")
@click.option("--out", type=click.Path(), default="kgqa_report.csv", show_default=True)
def kg_qa(items_path, workdir, out) -> None:
    """Paired KG vs no-KG question answering over the fixture corpus."""
    from millwright.evalbench.qa import NumericTarget, QAItem, run_qa
    from millwright.fixtures import qa_items

    if items_path:
        raw = json.loads(Path(items_path).read_text())
        items = [QAItem(
            id=entry["id"], format="open", prompt=entry["prompt"],
            numeric_targets=[NumericTarget(t["value"], t["tolerance"], t.get("unit", ""))
                             for t in entry.get("numeric_targets", [])],
            required_terms=entry.get("required_terms", [])) for entry in raw]
    else:
        items = qa_items()

    config = AppConfig()
    engine = build_engine(config, fixture_dir=workdir)

    def kg_answer(item):
        session_id = engine.new_session()
        return engine.turn(session_id, item.prompt).narrative

    def no_kg_answer(item):
        return ""  # no retrieval, no parametric model: the ungrounded floor

    with_kg = run_qa(items, kg_answer)
    without = run_qa(items, no_kg_answer)
    lines = ["condition,mean_score,mean_elapsed_s"]
    lines.append(f"with-kg,{with_kg.mean_score:.4f},{with_kg.mean_elapsed_s:.6f}")
    lines.append(f"no-kg,{without.mean_score:.4f},{without.mean_elapsed_s:.6f}")
    Path(out).write_text("\n".join(lines) + "\n")
    click.echo(f"with KG: {with_kg.mean_score:.4f}  without: {without.mean_score:.4f}")
    click.echo(f"report written to {out}")


@main.command()
@click.option("--corpus", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--transcript", type=click.Path(exists=True), default=None,
              help="Pre-recorded window-id -> extraction text JSON file.")
@click.option("--backend-rules", type=click.Path(exists=True), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def kg_build(corpus, out_dir, transcript, backend_rules, config_path) -> None:
    """Build knowledge-graph TSVs from a markdown corpus."""
    from millwright.kg.builder import extract_corpus

    config = load_config(config_path)
    if backend_rules:
        backend = ScriptedBackend.from_file(backend_rules)
    else:
        backend = make_backend(config.backend)
    transcript_map = json.loads(Path(transcript).read_text()) if transcript else None
    docs = sorted(Path(corpus).glob("*.md"))
    if not docs:
        raise click.ClickException(f"no markdown files under {corpus}")
    summary = extract_corpus(docs, backend, out_dir, transcript=transcript_map)
    click.echo(f"triples: {summary.triples}  entities: {summary.unique_entities}  "
               f"relations: {summary.unique_relations}")


@main.command()
@click.option("--dest", type=click.Path(), required=True)
def fixture(dest) -> None:
    """Write the synthetic demo workspace (inspection, pathing, corpus, rules)."""
    from millwright.fixtures import write_demo_workspace

    layout = write_demo_workspace(dest)
    for name, path in layout.items():
        click.echo(f"{name}: {path}")

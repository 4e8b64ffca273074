from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from millwright.cli import main, render_table, render_turn
from millwright.engine import TurnResult


@pytest.fixture
def runner():
    return CliRunner()


class TestRendering:
    def test_table_layout(self):
        table = {"columns": ["Pair Key", "Trc", "Tlc"],
                 "rows": [["2+17", "0.001164", "0.002497"]]}
        text = render_table(table)
        assert "Pair Key" in text and "2+17" in text
        assert text.splitlines()[1].startswith("-")

    def test_escalation_rendering(self):
        result = TurnResult(
            turn_id="t", session_id="s", kind="recommendation", verdict="escalated",
            narrative="n", escalation={
                "failed_checks": [{"check": "safety", "detail": "too big"}],
                "missing_info": ["confirm limits"]},
            elapsed_s=0.01)
        text = render_turn(result)
        assert "ESCALATED" in text
        assert "failed safety" in text
        assert "confirm limits" in text


class TestReplCommand:
    def test_fixture_compensation_flow(self, runner, tmp_path):
        query = "give me compensation for parts 4 to 16"
        result = runner.invoke(main, [
            "repl", "--fixture", str(tmp_path / "ws")],
            input=f"{query}\nexit\n")
        assert result.exit_code == 0, result.output
        assert "Central Agent - What would you like to do?" in result.output
        assert "Pair Key" in result.output
        assert "2+17" in result.output and "16+31" in result.output
        assert "Goodbye." in result.output

    def test_exit_clean(self, runner, tmp_path):
        result = runner.invoke(main, ["repl", "--fixture", str(tmp_path / "ws")],
                               input="exit\n")
        assert result.exit_code == 0


class TestFixtureCommand:
    def test_writes_workspace(self, runner, tmp_path):
        result = runner.invoke(main, ["fixture", "--dest", str(tmp_path / "demo")])
        assert result.exit_code == 0
        assert (tmp_path / "demo" / "Inspection_Aggregated.csv").exists()
        assert (tmp_path / "demo" / "Pathing_Field.csv").exists()


class TestKgBuildCommand:
    def test_transcript_build(self, runner, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "doc.md").write_text("carbide tools resist abrasive wear")
        from millwright.kg.builder import chunk_document

        window = chunk_document((corpus / "doc.md").read_text(), "doc")[0]
        transcript = {window.window_id: 'carbide\tRESISTS\twear\t"ctx"\t'}
        transcript_path = tmp_path / "transcript.json"
        transcript_path.write_text(json.dumps(transcript))
        result = runner.invoke(main, [
            "kg-build", "--corpus", str(corpus), "--out", str(tmp_path / "kg"),
            "--transcript", str(transcript_path)])
        assert result.exit_code == 0, result.output
        assert "triples: 1" in result.output


class TestEvalCommands:
    def test_depth_eval(self, runner, tmp_path):
        result = runner.invoke(main, [
            "eval", "depth", "--per-level", "4", "--defect-l2", "0.5",
            "--workdir", str(tmp_path / "ws"), "--out", str(tmp_path / "depth.csv")])
        assert result.exit_code == 0, result.output
        assert "L2: pass rate 50.00%" in result.output

    def test_critic_eval(self, runner, tmp_path):
        result = runner.invoke(main, [
            "eval", "critic", "--queries", "6", "--workdir", str(tmp_path / "ws"),
            "--out", str(tmp_path / "critic.csv")])
        assert result.exit_code == 0, result.output
        assert "full-recovery" in result.output

    def test_kg_qa_eval(self, runner, tmp_path):
        result = runner.invoke(main, [
            "eval", "kg-qa", "--workdir", str(tmp_path / "ws"),
            "--out", str(tmp_path / "qa.csv")])
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "qa.csv").read_text().splitlines()
        with_kg = float(lines[1].split(",")[1])
        without = float(lines[2].split(",")[1])
        assert with_kg > without

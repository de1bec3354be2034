import json

import pytest

from app import EXIT_DATA, EXIT_IO, EXIT_OK, main
from config import CONFIG_ENV_VAR
from conftest import FIXTURES, adapter_command

DEFAULT_CONFIG = FIXTURES.parent.parent / "configs" / "default.cfg"


@pytest.fixture(autouse=True)
def no_config_env(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)


def read_rows(path):
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]


def write_rows(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path


class TestParse:
    def test_empty_input(self, tmp_path):
        source = tmp_path / "empty.jsonl"
        source.write_text("", encoding="utf-8")
        assert main(["parse", str(source), str(tmp_path / "out.jsonl")]) == EXIT_OK
        assert (tmp_path / "out.jsonl").read_text(encoding="utf-8") == ""

    def test_bad_graph_is_dropped(self, tmp_path, corpus_path):
        rows = read_rows(corpus_path)[:10]
        rows[4]["amr"] = "(s / say-01 :ARG0 (p / person)"
        source = write_rows(tmp_path / "in.jsonl", rows)
        output = tmp_path / "out.jsonl"
        assert main(["parse", str(source), str(output)]) == EXIT_DATA
        kept = read_rows(output)
        assert len(kept) == 9
        assert rows[4]["id"] not in {r["id"] for r in kept}

    def test_reparse_is_stable(self, tmp_path):
        first, second = tmp_path / "first.jsonl", tmp_path / "second.jsonl"
        assert main(["parse", str(FIXTURES / "graphs.amr"), str(first)]) == EXIT_OK
        assert main(["parse", str(first), str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_undecodable_input_is_a_data_error(self, tmp_path):
        source = tmp_path / "bad.jsonl"
        source.write_bytes(b'{"id": "d1", "text": "caf\xe9", "label": "x"}\n')
        assert main(["parse", str(source), str(tmp_path / "out.jsonl")]) == EXIT_DATA

    def test_missing_input(self, tmp_path):
        assert main(["parse", str(tmp_path / "absent.jsonl"), str(tmp_path / "out.jsonl")]) == EXIT_IO


class TestAbstract:
    def test_zero_rounds_is_a_usage_error(self, tmp_path, corpus_path):
        assert main(["abstract", str(corpus_path), str(tmp_path / "out.jsonl"), "--rounds", "0"]) == EXIT_DATA

    def test_no_mix(self, tmp_path, corpus_path):
        output = tmp_path / "out.jsonl"
        assert main(["abstract", str(corpus_path), str(output), "--no-mix", "--rounds", "3"]) == EXIT_OK
        rows = read_rows(output)
        assert sum(1 for r in rows if r["round"] is None) == 12
        assert all(not r["mixed"] for r in rows if r["round"] is not None)

    def test_same_seed_same_bytes(self, tmp_path, corpus_path):
        first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert main(["abstract", str(corpus_path), str(first), "--seed", "7"]) == EXIT_OK
        assert main(["abstract", str(corpus_path), str(second), "--seed", "7"]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_default_config_matches_golden(self, tmp_path, corpus_path, golden):
        output = tmp_path / "out.jsonl"
        assert main(["abstract", str(corpus_path), str(output), "--config", str(DEFAULT_CONFIG)]) == EXIT_OK
        golden("abstract_default.jsonl", output.read_bytes())

    def test_outputs_only(self, tmp_path, corpus_path):
        output = tmp_path / "out.jsonl"
        assert main(["abstract", str(corpus_path), str(output), "--outputs-only"]) == EXIT_OK
        assert all(r["round"] is not None for r in read_rows(output))

    def test_invalid_input_writes_nothing(self, tmp_path):
        source = write_rows(tmp_path / "in.jsonl", [{"id": "a", "text": "t", "label": "x", "amr": "(a / )"}])
        output = tmp_path / "out.jsonl"
        assert main(["abstract", str(source), str(output)]) == EXIT_DATA
        assert not output.exists()

    def test_adapter_config(self, tmp_path, corpus_path):
        config = tmp_path / "run.cfg"
        config.write_text(f"rounds=2\nno_mix=true\nadapter.expander={adapter_command('failing_adapter.py')!r}\n",
                          encoding="utf-8")
        output = tmp_path / "out.jsonl"
        assert main(["abstract", str(corpus_path), str(output), "--config", str(config)]) == EXIT_DATA
        assert output.exists()


class TestMix:
    def test_mix_rows(self, tmp_path, corpus_path):
        output = tmp_path / "mixed.jsonl"
        assert main(["mix", str(corpus_path), str(output), "--top-k", "1"]) == EXIT_OK
        rows = read_rows(output)
        assert len(rows) == 12
        for row in rows:
            assert row["partner_id"] != row["id"]
            assert len(row["grafts"]) <= 1


class TestSmatch:
    def test_self_scores_are_perfect(self, capsys):
        graphs = str(FIXTURES / "graphs.amr")
        assert main(["smatch", graphs, graphs]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 12
        assert lines[0] == "g1 g1 1 1.0000 1.0000 1.0000"
        assert all(line.endswith("1.0000 1.0000 1.0000") for line in lines)

    def test_exact_refuses_large_graphs(self, tmp_path):
        chain = "".join(f"(x{i} / c :ARG0 " for i in range(9)) + "(leaf / c)" + ")" * 9
        path = write_rows(tmp_path / "big.jsonl", [{"id": "big", "text": "", "label": "", "amr": chain}])
        assert main(["smatch", str(path), str(path), "--exact"]) == EXIT_DATA

    def test_zero_restarts_is_a_usage_error(self, capsys):
        graphs = str(FIXTURES / "graphs.amr")
        assert main(["smatch", graphs, graphs, "--restarts", "0"]) == EXIT_DATA
        assert capsys.readouterr().out == ""

    def test_unequal_counts(self, tmp_path):
        one = write_rows(tmp_path / "one.jsonl", [{"id": "a", "amr": "(a / agree-01)"}])
        graphs = str(FIXTURES / "graphs.amr")
        assert main(["smatch", str(one), graphs]) == EXIT_DATA


class TestMetrics:
    def test_hand_computed_report(self, tmp_path):
        originals = write_rows(tmp_path / "orig.jsonl", [{"id": "d1", "text": "a b", "label": "x"}])
        augmented = write_rows(tmp_path / "aug.jsonl", [
            {"id": "d1", "text": "a b", "label": "x", "round": None},
            {"id": "d1#r0", "source_id": "d1", "round": 0, "text": "a b c d e"},
        ])
        output = tmp_path / "report.txt"
        assert main(["metrics", str(originals), str(augmented), str(output)]) == EXIT_OK
        payload = json.loads((tmp_path / "report.txt.json").read_text(encoding="utf-8"))
        assert payload["D"] == 150.0
        assert payload["DL"] == 3.0
        assert "AUGMENTATION DIVERSITY REPORT" in output.read_text(encoding="utf-8")

    def test_abstract_without_text_is_rejected(self, tmp_path, corpus_path):
        augmented = tmp_path / "aug.jsonl"
        assert main(["abstract", str(corpus_path), str(augmented), "--no-mix"]) == EXIT_OK
        report = tmp_path / "r.txt"
        assert main(["metrics", str(corpus_path), str(augmented), str(report)]) == EXIT_DATA
        assert not report.exists()

    def test_pipeline_output_scores(self, tmp_path, corpus_path):
        config = tmp_path / "run.cfg"
        upper = adapter_command("echo_upper_adapter.py")
        config.write_text(f"rounds=2\nno_mix=true\nadapter.amr_to_text={upper!r}\nadapter.expander={upper!r}\n",
                          encoding="utf-8")
        augmented = tmp_path / "aug.jsonl"
        assert main(["abstract", str(corpus_path), str(augmented), "--config", str(config)]) == EXIT_OK
        assert main(["metrics", str(corpus_path), str(augmented), str(tmp_path / "r.txt")]) == EXIT_OK
        payload = json.loads((tmp_path / "r.txt.json").read_text(encoding="utf-8"))
        assert payload["D"] > 0
        assert len(payload["records"]) == len({r["source_id"] for r in read_rows(augmented) if r["round"] is not None})

    def test_missing_source_id(self, tmp_path, corpus_path):
        augmented = write_rows(tmp_path / "aug.jsonl", [{"id": "z#r0", "source_id": "z", "round": 0, "text": "x"}])
        assert main(["metrics", str(corpus_path), str(augmented), str(tmp_path / "r.txt")]) == EXIT_DATA


def test_unknown_command():
    assert main(["summarize"]) == EXIT_DATA

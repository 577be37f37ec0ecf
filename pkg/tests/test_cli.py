import hashlib
import json

import pytest

from parsingdst.cli import main

from conftest import FIXTURES

MINI = str(FIXTURES / "mini_corpus.json")
MINI_FX = str(FIXTURES / "mini_fixtures.ndjson")
SCENARIO_TURNS = str(FIXTURES / "rejected_hotel_turns.json")
SCENARIO_FX = str(FIXTURES / "rejected_hotel_fixtures.ndjson")


def test_eval_restaurant(tmp_path, capsys):
    code = main(["eval", "--corpus", MINI, "--domain", "restaurant", "--backend", "replay",
                 "--fixtures", MINI_FX, "--out", str(tmp_path)])
    assert code == 0
    assert "restaurant" in capsys.readouterr().out
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["per_domain_jga"] == {"restaurant": 1.0}
    assert (tmp_path / "trace.ndjson").exists()


def test_eval_all_domains_has_avg_row(tmp_path, capsys):
    assert main(["eval", "--corpus", MINI, "--domain", "all", "--fixtures", MINI_FX, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[-2].startswith("AVG")
    assert "76.67" in out
    assert len(json.loads((tmp_path / "report.json").read_text())["per_domain_jga"]) == 5


def test_eval_missing_corpus_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--fixtures", MINI_FX])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_eval_dialogue_failure_exit_2(tmp_path):
    empty = tmp_path / "none.ndjson"
    empty.write_text("")
    args = ["eval", "--corpus", MINI, "--domain", "taxi", "--fixtures", str(empty), "--out", str(tmp_path / "o")]
    assert main(args) == 2
    assert main(args + ["--skip-errors"]) == 0


def test_eval_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"fixtures": MINI_FX, "domain": "train", "out": str(tmp_path / "o")}))
    assert main(["eval", "--corpus", MINI, "--config", str(cfg), "--domain", "train"]) == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["avg_jga"] == 0.5


def test_eval_config_errors(tmp_path):
    assert main(["eval", "--corpus", MINI]) == 1  # replay without fixtures
    assert main(["eval", "--corpus", MINI, "--fixtures", MINI_FX, "--domain", "spa"]) == 1


def test_inspect_prompt_system(capsys):
    code = main(["inspect-prompt", "--side", "system", "--domain", "restaurant",
                 "--utterance", "it is a chinese restaurant in the centre"])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("translate system message to JSON:")


def test_inspect_prompt_bad_state(capsys):
    assert main(["inspect-prompt", "--side", "user", "--domain", "hotel", "--state", "{not json",
                 "--utterance", "hi"]) == 1
    assert "--state" in capsys.readouterr().err


def test_inspect_prompt_is_deterministic(capsys):
    args = ["inspect-prompt", "--side", "user", "--domain", "hotel", "--state", '{"hotel": {"area": "north"}}',
            "--system-json", '{"system": {"not_available": {}, "info": {"hotel": {"full_name": ["acorn"]}}, "ask_for": {}}}',
            "--utterance", "sounds good"]
    digests = []
    for _ in range(2):
        assert main(args) == 0
        digests.append(hashlib.sha256(capsys.readouterr().out.encode()).hexdigest())
    assert digests[0] == digests[1]


def test_run_dialogue_rejected_hotel(capsys):
    code = main(["run-dialogue", "--turns", SCENARIO_TURNS, "--domain", "hotel,attraction", "--backend", "replay",
                 "--fixtures", SCENARIO_FX])
    assert code == 0
    records = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert records[-1]["final_state"] == {"hotel": {"area": "north", "name": "[Delete]"},
                                          "attraction": {"name": "nusha"}}


def test_run_dialogue_fixture_miss(tmp_path, capsys):
    empty = tmp_path / "none.ndjson"
    empty.write_text("")
    assert main(["run-dialogue", "--turns", SCENARIO_TURNS, "--domain", "hotel", "--fixtures", str(empty)]) == 2
    err = capsys.readouterr().err
    assert "FixtureMiss" in err and "no replay fixture for prompt" in err


def test_run_dialogue_empty_turns_file(tmp_path):
    path = tmp_path / "t.json"
    path.write_text("")
    assert main(["run-dialogue", "--turns", str(path), "--domain", "hotel", "--fixtures", SCENARIO_FX]) == 1
